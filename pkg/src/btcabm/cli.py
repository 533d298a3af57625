"""Command line entry point: ``simulate``, ``montecarlo`` and ``analyze``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from btcabm import montecarlo, stats
from btcabm.config import ConfigError, SimConfig, parse_config
from btcabm.engine import run
from btcabm.orderbook import write_trades_csv

log = logging.getLogger("btcabm")


def _write(path: Path, writer) -> None:
    with open(path, "w", newline="") as fh:
        writer(fh)


def _echo_config(cfg: SimConfig, out: Path) -> None:
    lines = cfg.to_lines()
    (out / "config.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def write_report(report: stats.StatsReport, out: Path) -> None:
    _write(out / "acf.csv", report.write_acf)
    _write(out / "ccdf.csv", report.write_ccdf)
    _write(out / "summary.csv", report.write_summary)


def cmd_simulate(cfg: SimConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out)
    series, trades = run(cfg)
    _write(out / "series.csv", series.write_csv)
    _write(out / "trades.csv", lambda fh: write_trades_csv(trades, fh))
    try:
        report = stats.analyze(series.price, cfg.acf_max_lag, cfg.x_min)
    except stats.StatsError as exc:
        log.warning("stats report skipped: %s", exc)
    else:
        write_report(report, out)
    return 0


def cmd_montecarlo(cfg: SimConfig, out: Path, workers: int = 1, save_runs: bool = False) -> int:
    if cfg.mc_runs < 2:
        raise ConfigError("mc_runs must be >= 2")
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out)
    results = montecarlo.run_many(cfg, workers=workers)
    mean, std = montecarlo.aggregate(results)
    _write(out / "mc_aggregate.csv", lambda fh: montecarlo.write_aggregate(mean, std, fh))
    _write(out / "mc_runs.csv", lambda fh: montecarlo.write_summaries(results, fh))
    if save_runs:
        for r in results:
            _write(out / f"series_seed{r.seed}.csv", r.series.write_csv)
    return 0


def read_prices(path: Path) -> np.ndarray:
    """Prices from a CSV with a ``price`` column (``day,price`` or a series export)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "price" not in reader.fieldnames:
            raise stats.StatsError(f"{path}: no 'price' column")
        return np.array([float(row["price"]) for row in reader if row["price"].strip()])


def cmd_analyze(prices_csv: Path, cfg: SimConfig, out: Path) -> int:
    prices = read_prices(prices_csv)
    report = stats.analyze(prices, cfg.acf_max_lag, cfg.x_min)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out)
    adf = report.adf
    print(f"tau3 = {adf.tau3:.4f} (lags {adf.lags}); critical 1%/5%/10% = "
          f"{adf.critical_1}/{adf.critical_5}/{adf.critical_10}")
    if report.tail:
        print(f"tail slope = {report.tail.slope:.4f}, r2 = {report.tail.r_squared:.4f}, "
              f"x_min = {report.tail.x_min:.4g}, n_tail = {report.tail.n_tail}")
    return 0


def _parse_set(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--out", type=Path, default=Path("out"))

    p = argparse.ArgumentParser(prog="btcabm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one run: series, trades, stats report")
    mc = sub.add_parser("montecarlo", parents=[common], help="repeated runs over consecutive seeds")
    mc.add_argument("--mc-runs", type=int)
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--save-runs", action="store_true", help="also write each run's series CSV")
    an = sub.add_parser("analyze", parents=[common], help="stylized-fact report for an external price CSV")
    an.add_argument("prices", type=Path)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        flags = _parse_set(args.set)
        for name in ("seed", "horizon", "mc_runs"):
            value = getattr(args, name, None)
            if value is not None:
                flags[name] = value
        cfg = parse_config(args.config, flags)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg, args.out, args.workers, args.save_runs)
        return cmd_analyze(args.prices, cfg, args.out)
    except (ConfigError, stats.StatsError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
