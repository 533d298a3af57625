"""Score a batch of runs against the stylized-fact targets.

    python scripts/stylized_facts.py --runs 20 --set market_priority=top --set K=0.5
"""

import argparse

import numpy as np

from btcabm import stats
from btcabm.cli import _parse_set
from btcabm.config import build_config
from btcabm.montecarlo import run_many


def score(results):
    n = len(results)
    mean, std = stats.mc_aggregate([r.price for r in results])
    wealth_ok = 0
    for r in results:
        ratio = r.series["random_wealth"] / r.series["chartist_wealth"]
        wealth_ok += np.mean(np.abs(ratio / ratio[0] - 1) <= 0.5) >= 0.9
    return {
        "unit root (tau3 > -3.41)": sum(r.tau3 > -3.41 for r in results) / n,
        "raw ACF ~ 0, abs ACF > 3x raw": sum(
            r.mean_abs_rho_raw < 0.1 and r.mean_rho_abs > 3 * r.mean_abs_rho_raw for r in results
        ) / n,
        "abs ACF > 0.1 on most lags": sum(int(np.sum(r.rho_abs[1:21] > 0.1)) > 10 for r in results) / n,
        "power-law tail (r2 >= 0.95, slope < -0.5)": sum(r.r2 >= 0.95 and r.slope < -0.5 for r in results) / n,
        "wealth ratio within 50%": wealth_ok / n,
        "mean std/mean across runs": float(np.mean(std / mean)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    cfg = build_config(_parse_set(args.set))
    results = run_many(cfg, runs=args.runs, workers=args.workers)
    for name, value in score(results).items():
        print(f"{name:45s} {value:.3f}")
    print(f"{'median mean|rho_raw| (lags 1-20)':45s} {np.nanmedian([r.mean_abs_rho_raw for r in results]):.3f}")
    print(f"{'median mean rho_abs (lags 1-20)':45s} {np.nanmedian([r.mean_rho_abs for r in results]):.3f}")
    print(f"{'median final price':45s} {np.median([r.price[-1] for r in results]):.2f}")


if __name__ == "__main__":
    main()
