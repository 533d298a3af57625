import sys

from btcabm.cli import main

sys.exit(main())
