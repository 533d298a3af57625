"""Empirical driver series: CSV loading, smoothing, coin-supply curve and the daily driver schedule."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from btcabm.config import SimConfig

SMOOTHING_WINDOW = 30
CSV_HEADER = ("day", "unique_addresses", "total_coins", "price")


class SeriesError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalSeries:
    day_index: np.ndarray
    unique_addresses: np.ndarray
    total_coins: np.ndarray
    price: np.ndarray  # NaN where missing

    def __len__(self) -> int:
        return len(self.day_index)

    def validate(self) -> "EmpiricalSeries":
        if len(self) == 0:
            raise SeriesError("no rows")
        days = self.day_index
        if days[0] != 0 or np.any(np.diff(days) != 1):
            bad = int(np.argmax(np.diff(days) != 1)) if len(days) > 1 else 0
            raise SeriesError(f"day sequence has a gap or does not start at 0 (near day {int(days[bad])})")
        if np.any(self.unique_addresses < 0):
            raise SeriesError("unique_addresses must be >= 0")
        if np.any(np.diff(self.total_coins) < 0):
            raise SeriesError("total_coins must be non-decreasing")
        return self


@dataclass(frozen=True)
class DriverSchedule:
    target_traders: np.ndarray  # int, per day
    mined_coins: np.ndarray  # float, per day

    def __len__(self) -> int:
        return len(self.target_traders)


def load_series(path: str | Path) -> EmpiricalSeries:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SeriesError("no rows")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise SeriesError(f"line 1: expected header {','.join(CSV_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 4:
                raise SeriesError(f"line {lineno}: expected 4 fields, got {len(rec)}")
            try:
                day = int(rec[0])
                addrs = float(rec[1])
                coins = float(rec[2])
                price = float(rec[3]) if rec[3].strip() else float("nan")
            except ValueError as exc:
                raise SeriesError(f"line {lineno}: {exc}") from None
            rows.append((day, addrs, coins, price))
    rows.sort(key=lambda r: r[0])
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return EmpiricalSeries(
        day_index=arr[:, 0].astype(int),
        unique_addresses=arr[:, 1],
        total_coins=arr[:, 2],
        price=arr[:, 3],
    ).validate()


def moving_average(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` entries average over what is available."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(series, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(len(x))
    lo = np.maximum(0, idx - window + 1)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def supply_polynomial(t: float) -> float:
    """Fitted total coin supply (already at the 1/100 market scale) on day ``t``."""
    return 4.709e-5 * t**3 - 0.08932 * t**2 + 98.88 * t + 78_880


def build_schedule(
    source: EmpiricalSeries | SimConfig,
    horizon: int,
    scale: float = 100.0,
) -> DriverSchedule:
    """Per-day trader-count targets and mined coins.

    Passing a ``SimConfig`` selects synthetic mode: a linear trader path from
    ``n_traders_0`` to ``n_traders_final`` and mining from ``supply_polynomial``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if scale <= 0:
        raise ValueError("scale must be > 0")

    if isinstance(source, SimConfig):
        n0, n_final = source.n_traders_0, source.n_traders_final
        if horizon == 1:
            target = np.array([n0])
        else:
            target = np.rint(n0 + (n_final - n0) * np.arange(horizon) / (horizon - 1)).astype(int)
        supply = np.array([supply_polynomial(t) for t in range(horizon)])
        mined = np.concatenate(([0.0], np.maximum(0.0, np.diff(supply))))
        return DriverSchedule(target_traders=target, mined_coins=mined)

    if horizon > len(source):
        raise SeriesError(f"horizon {horizon} exceeds series length {len(source)}")
    smoothed = moving_average(source.unique_addresses, SMOOTHING_WINDOW)[:horizon]
    target = np.rint(smoothed / scale).astype(int)
    coins = source.total_coins[:horizon]
    mined = np.concatenate(([0.0], np.maximum(0.0, np.diff(coins) / scale)))
    return DriverSchedule(target_traders=target, mined_coins=mined)
