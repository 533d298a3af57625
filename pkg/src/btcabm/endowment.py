"""Ranked power-law wealth endowments for the initial traders and the pool of future entrants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from btcabm.config import SimConfig


@dataclass(frozen=True)
class WealthProfile:
    alpha: float
    top_value: float
    count: int

    def values(self) -> np.ndarray:
        ranks = np.arange(1, self.count + 1, dtype=float)
        return self.top_value * ranks ** (-self.alpha)


@dataclass(frozen=True)
class EndowmentSet:
    cash: np.ndarray
    coins: np.ndarray

    def __len__(self) -> int:
        return len(self.cash)


def zipf_ranked(total: float, count: int, alpha: float) -> np.ndarray:
    """Values ``top * i**-alpha`` for ranks 1..count, scaled so they sum exactly to ``total``.

    The normalisation uses the exact (generalised) harmonic sum, not its
    logarithmic approximation, so aggregates come out exact.
    """
    if total <= 0 or count < 1 or alpha <= 0:
        raise ValueError("need total > 0, count >= 1, alpha > 0")
    weights = np.arange(1, count + 1, dtype=float) ** (-alpha)
    top = total / weights.sum()
    return WealthProfile(alpha, top, count).values()


def initial_population(config: SimConfig, rng: np.random.Generator) -> EndowmentSet:
    n = config.n_traders_0
    coins = zipf_ranked(config.total_coins_0, n, config.initial_alpha)
    cash = zipf_ranked(config.total_cash_0, n, config.initial_alpha)
    # decouple coin rank from cash rank
    return EndowmentSet(cash=rng.permutation(cash), coins=rng.permutation(coins))


def entrant_pool(config: SimConfig, rng: np.random.Generator) -> EndowmentSet:
    """Cash-only entrants; the richest gets ``entrant_top_cash`` and the total is whatever follows."""
    size = config.entrant_pool_size
    cash = WealthProfile(config.entrant_alpha, config.entrant_top_cash, size).values()
    return EndowmentSet(cash=rng.permutation(cash), coins=np.zeros(size))
