"""Repeated runs over consecutive seeds, optionally in worker processes."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from btcabm import stats
from btcabm.config import SimConfig
from btcabm.engine import MarketSeries, run

SUMMARY_COLUMNS = (
    "seed", "tau3", "lags", "slope", "r2", "xmin", "n_tail", "mean_abs_rho_raw", "mean_rho_abs",
)
ACF_LAGS = 20
TAIL_QUANTILE = 0.9


@dataclass
class RunResult:
    seed: int
    series: MarketSeries
    tau3: float
    lags: int
    slope: float
    r2: float
    xmin: float
    n_tail: int
    rho_raw: np.ndarray
    rho_abs: np.ndarray

    @property
    def price(self) -> np.ndarray:
        return self.series.price

    @property
    def mean_abs_rho_raw(self) -> float:
        return float(np.mean(np.abs(self.rho_raw[1 : ACF_LAGS + 1])))

    @property
    def mean_rho_abs(self) -> float:
        return float(np.mean(self.rho_abs[1 : ACF_LAGS + 1]))

    def summary_row(self) -> list:
        return [
            self.seed, repr(self.tau3), self.lags, repr(self.slope), repr(self.r2),
            repr(self.xmin), self.n_tail, repr(self.mean_abs_rho_raw), repr(self.mean_rho_abs),
        ]


def summarize(seed: int, series: MarketSeries) -> RunResult:
    """Per-run diagnostics; undefined statistics come back as NaN."""
    nan = float("nan")
    prices = series.price
    r = stats.returns(prices)
    try:
        rho_raw = stats.acf(r.raw, ACF_LAGS)
        rho_abs = stats.acf(r.abs, ACF_LAGS)
    except stats.StatsError:
        rho_raw = rho_abs = np.full(ACF_LAGS + 1, nan)
    try:
        adf = stats.adf_tau3(prices)
        tau3, lags = adf.tau3, adf.lags
    except stats.StatsError:
        tau3, lags = nan, 0
    xs, ps = stats.ccdf(r.abs)
    cutoff = float(np.quantile(r.abs, TAIL_QUANTILE))
    try:
        fit = stats.tail_fit(xs, ps, cutoff) if cutoff > 0 else None
    except stats.TailFitError:
        fit = None
    return RunResult(
        seed, series, tau3, lags,
        fit.slope if fit else nan, fit.r_squared if fit else nan, cutoff,
        fit.n_tail if fit else 0, rho_raw, rho_abs,
    )


def _one(args: tuple[SimConfig, int]) -> RunResult:
    config, seed = args
    series, _ = run(config, seed)
    return summarize(seed, series)


def run_many(config: SimConfig, runs: int | None = None, workers: int = 1) -> list[RunResult]:
    """Runs for seeds ``config.seed .. config.seed + runs - 1``, returned in seed order."""
    runs = config.mc_runs if runs is None else runs
    jobs = [(config, config.seed + k) for k in range(runs)]
    if workers <= 1:
        results = [_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one, jobs))
    return sorted(results, key=lambda r: r.seed)


def aggregate(results: Sequence[RunResult]) -> tuple[np.ndarray, np.ndarray]:
    return stats.mc_aggregate([r.price for r in results])


def write_aggregate(mean: np.ndarray, std: np.ndarray, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["day", "mean", "std"])
    for d, (m, s) in enumerate(zip(mean, std)):
        w.writerow([d, repr(float(m)), repr(float(s))])


def write_summaries(results: Sequence[RunResult], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in results:
        w.writerow(r.summary_row())
