"""Stylized-fact diagnostics: returns, ACF, CCDF with power-law tail fit, ADF tau3, Monte Carlo aggregates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

# 1%, 5%, 10% critical values of tau3 for ~830 observations
ADF_CRITICAL = (-3.96, -3.41, -3.12)
MIN_TAIL_POINTS = 10


class StatsError(ValueError):
    pass


class TailFitError(StatsError):
    def __init__(self, n_tail: int):
        super().__init__(f"need >= {MIN_TAIL_POINTS} tail points, got {n_tail}")
        self.n_tail = n_tail


@dataclass(frozen=True)
class ReturnSeries:
    raw: np.ndarray

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.raw)

    def __len__(self) -> int:
        return len(self.raw)


@dataclass(frozen=True)
class TailFit:
    x_min: float
    slope: float
    r_squared: float
    n_tail: int

    @property
    def alpha(self) -> float:
        """Density exponent; the CCDF decays as x**-(alpha - 1)."""
        return 1.0 - self.slope


@dataclass(frozen=True)
class AdfResult:
    tau3: float
    lags: int
    critical_1: float = ADF_CRITICAL[0]
    critical_5: float = ADF_CRITICAL[1]
    critical_10: float = ADF_CRITICAL[2]

    def rejects(self, level: float = 0.05) -> bool:
        crit = {0.01: self.critical_1, 0.05: self.critical_5, 0.10: self.critical_10}[level]
        return self.tau3 < crit


def returns(prices: Sequence[float]) -> ReturnSeries:
    p = np.asarray(prices, dtype=float)
    if len(p) < 2:
        raise StatsError("need at least 2 prices")
    if np.any(p <= 0):
        raise StatsError("prices must be > 0")
    return ReturnSeries(np.diff(p) / p[:-1])


def acf(series: Sequence[float], max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags 0..max_lag (biased normalisation, rho(0) = 1)."""
    x = np.asarray(series, dtype=float)
    if len(x) <= max_lag + 1:
        raise StatsError(f"series length {len(x)} too short for max_lag {max_lag}")
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 1e-300 * len(x) or not math.isfinite(denom):
        raise StatsError("zero-variance series: autocorrelation undefined")
    n = len(d)
    return np.array([1.0] + [float(d[: n - k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def ccdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Empirical P(X >= x) at each distinct observed value, ascending in x."""
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    if n == 0:
        raise StatsError("ccdf of an empty sample")
    xs, first = np.unique(x, return_index=True)
    return xs, (n - first) / n


def tail_fit(x: Sequence[float], p: Sequence[float], x_min: float) -> TailFit:
    """OLS line through (log x, log P) for x >= x_min."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = (x >= x_min) & (x > 0) & (p > 0)
    n_tail = int(mask.sum())
    if n_tail < MIN_TAIL_POINTS:
        raise TailFitError(n_tail)
    lx, lp = np.log(x[mask]), np.log(p[mask])
    slope, intercept = np.polyfit(lx, lp, 1)
    resid = lp - (slope * lx + intercept)
    ss_tot = float(((lp - lp.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return TailFit(x_min=float(x_min), slope=float(slope), r_squared=r2, n_tail=n_tail)


def default_adf_lags(n: int) -> int:
    return int(math.floor((n - 1) ** (1.0 / 3.0)))


def adf_tau3(prices: Sequence[float], lags: int | None = None) -> AdfResult:
    """t-statistic of the lagged level in the ADF regression with constant and trend.

    dy_t = a0 + a1*t + g*y_{t-1} + sum_j phi_j dy_{t-j} + e_t
    """
    y = np.asarray(prices, dtype=float)
    if lags is None:
        lags = default_adf_lags(len(y))
    if len(y) < 25 + lags:
        raise StatsError(f"need at least {25 + lags} observations, got {len(y)}")
    dy = np.diff(y)
    m = len(dy) - lags
    cols = [np.ones(m), np.arange(lags + 1, lags + 1 + m, dtype=float), y[lags:-1]]
    for j in range(1, lags + 1):
        cols.append(dy[lags - j : len(dy) - j])
    X = np.column_stack(cols)
    target = dy[lags:]
    XtX = X.T @ X
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise StatsError("singular ADF regression")
    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ coef
    dof = m - X.shape[1]
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(XtX)
    se = math.sqrt(cov[2, 2])
    if se == 0:
        raise StatsError("singular ADF regression")
    return AdfResult(tau3=float(coef[2] / se), lags=lags)


def mc_aggregate(price_runs: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    """Per-day mean and sample std of price across runs."""
    if len(price_runs) < 2:
        raise StatsError("need at least 2 runs")
    lengths = {len(r) for r in price_runs}
    if len(lengths) != 1:
        raise StatsError(f"ragged horizons: {sorted(lengths)}")
    arr = np.asarray(price_runs, dtype=float)
    return arr.mean(axis=0), arr.std(axis=0, ddof=1)


@dataclass(frozen=True)
class StatsReport:
    rho_raw: np.ndarray
    rho_abs: np.ndarray
    ccdf_x: np.ndarray
    ccdf_p: np.ndarray
    tail: TailFit | None
    adf: AdfResult

    def mean_abs_rho_raw(self, k: int = 20) -> float:
        return float(np.mean(np.abs(self.rho_raw[1 : k + 1])))

    def mean_rho_abs(self, k: int = 20) -> float:
        return float(np.mean(self.rho_abs[1 : k + 1]))

    def write_acf(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lag", "rho_raw", "rho_abs"])
        for k, (a, b) in enumerate(zip(self.rho_raw, self.rho_abs)):
            w.writerow([k, repr(float(a)), repr(float(b))])

    def write_ccdf(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "p"])
        for x, p in zip(self.ccdf_x, self.ccdf_p):
            w.writerow([repr(float(x)), repr(float(p))])

    def summary_row(self) -> list:
        t = self.tail
        nan = float("nan")
        return [
            repr(self.adf.tau3), self.adf.lags,
            repr(t.slope if t else nan), repr(t.r_squared if t else nan),
            repr(t.x_min if t else nan), t.n_tail if t else 0,
        ]

    def write_summary(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau3", "lags", "slope", "r2", "xmin", "n_tail"])
        w.writerow(self.summary_row())


def tail_cutoff(abs_returns: np.ndarray, x_min: float | None, quantile: float = 0.9) -> float:
    """``x_min`` if enough observations reach it, else the empirical ``quantile``."""
    if x_min is not None and int(np.sum(abs_returns >= x_min)) >= MIN_TAIL_POINTS:
        return x_min
    return float(np.quantile(abs_returns, quantile))


def analyze(prices: Sequence[float], max_lag: int = 50, x_min: float | None = 0.1, lags: int | None = None) -> StatsReport:
    """Full diagnostic pass over one price series."""
    if len(prices) < 25:
        raise StatsError(f"need at least 25 prices, got {len(prices)}")
    r = returns(prices)
    rho_raw = acf(r.raw, max_lag)
    rho_abs = acf(r.abs, max_lag)
    xs, ps = ccdf(r.abs)
    try:
        tail = tail_fit(xs, ps, tail_cutoff(r.abs, x_min))
    except TailFitError:
        tail = None
    return StatsReport(rho_raw, rho_abs, xs, ps, tail, adf_tau3(prices, lags))
