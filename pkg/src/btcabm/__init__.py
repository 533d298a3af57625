"""Agent-based Bitcoin market simulator with a limit order book and two trader populations."""

from btcabm.config import BehaviorParams, SimConfig
from btcabm.engine import MarketSeries, run

__all__ = ["BehaviorParams", "SimConfig", "MarketSeries", "run"]
__version__ = "0.1.0"
