"""Traders, daily activation, and order generation for the Random and Chartist strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from btcabm.config import BehaviorParams


class Strategy(str, Enum):
    RANDOM = "random"
    CHARTIST = "chartist"


class Side(str, Enum):
    BUY = "buy"
    SELL = "sell"


@dataclass(slots=True)
class Trader:
    id: int
    strategy: Strategy
    cash: float
    coins: float
    committed_cash: float = 0.0
    committed_coins: float = 0.0
    chartist_window: int = 0

    @property
    def available_cash(self) -> float:
        return max(0.0, self.cash - self.committed_cash)

    @property
    def available_coins(self) -> float:
        return max(0.0, self.coins - self.committed_coins)

    def wealth(self, price: float) -> float:
        return self.cash + self.coins * price


@dataclass(frozen=True, slots=True)
class OrderIntent:
    side: Side
    amount: float
    limit_price: float  # 0 means market order
    issue_day: int
    expiry_day: int


def lognormal_params(mean: float, std: float) -> tuple[float, float]:
    """Underlying normal (mu, sigma) of a lognormal with the given mean and std."""
    s2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - 0.5 * s2, math.sqrt(s2)


def market_order_prob(strategy: Strategy, params: BehaviorParams) -> float:
    return params.p_market_random if strategy is Strategy.RANDOM else params.p_market_chartist


def is_active(trader: Trader, rng: np.random.Generator, params: BehaviorParams) -> bool:
    p = params.p_active_random if trader.strategy is Strategy.RANDOM else params.p_active_chartist
    return rng.random() < p


def beta_from_normal(z: float, params: BehaviorParams) -> float:
    mu, sigma = lognormal_params(params.beta_mean, params.beta_std)
    return min(1.0, math.exp(mu + sigma * z))


def draw_beta(rng: np.random.Generator, params: BehaviorParams) -> float:
    """Fraction of available resources to put in one order, clamped to 1."""
    return beta_from_normal(rng.standard_normal(), params)


def chartist_signal(prices: Sequence[float], window: int, threshold: float) -> Side | None:
    if len(prices) < window + 1:
        return None
    then, now = prices[-1 - window], prices[-1]
    v = (now - then) / then
    if v > threshold:
        return Side.BUY
    if v < -threshold:
        return Side.SELL
    return None


def sigma_i(prices: Sequence[float], K: float, T_window: int) -> float:
    """``K`` times the sample std of absolute returns over the last ``T_window`` days."""
    p = np.asarray(prices[-(T_window + 1):], dtype=float)
    if len(p) < 3:
        return 0.0
    abs_ret = np.abs(np.diff(p) / p[:-1])
    return K * float(np.std(abs_ret, ddof=1))


def _positive_gaussian(rng: np.random.Generator, mu: float, sigma: float) -> float:
    if not math.isfinite(sigma):
        raise ValueError(f"limit-price dispersion must be finite, got {sigma}")
    if sigma <= 0:
        return mu
    while True:
        x = rng.normal(mu, sigma)
        if x > 0:
            return x


def make_expiry(strategy: Strategy, day: int, rng: np.random.Generator, params: BehaviorParams) -> int:
    if strategy is Strategy.CHARTIST:
        return day
    mu, sigma = lognormal_params(params.expiry_mean, params.expiry_std)
    return day + expiry_offset(rng.lognormal(mu, sigma))


def expiry_offset(raw_days: float) -> int:
    return max(1, int(round(raw_days)))


def make_buy_order(
    trader: Trader,
    price: float,
    sigma: float,
    rng: np.random.Generator,
    day: int,
    params: BehaviorParams,
    beta: float | None = None,
    market: bool | None = None,
) -> OrderIntent | None:
    """Buy ``beta`` of the available cash worth of coins at ``price``; ``None`` if no cash is free.

    ``beta`` and ``market`` may be forced; otherwise they are drawn.
    """
    budget = trader.available_cash
    if budget <= 0:
        return None
    if beta is None:
        beta = draw_beta(rng, params)
    amount = budget * beta / price
    if market is None:
        market = rng.random() < market_order_prob(trader.strategy, params)
    limit = 0.0 if market else price * _positive_gaussian(rng, params.mu, sigma)
    expiry = make_expiry(trader.strategy, day, rng, params)
    return OrderIntent(Side.BUY, amount, limit, day, expiry)


def make_sell_order(
    trader: Trader,
    price: float,
    sigma: float,
    rng: np.random.Generator,
    day: int,
    params: BehaviorParams,
    beta: float | None = None,
    market: bool | None = None,
) -> OrderIntent | None:
    held = trader.available_coins
    if held <= 0:
        return None
    if beta is None:
        beta = draw_beta(rng, params)
    amount = held * beta
    if market is None:
        market = rng.random() < market_order_prob(trader.strategy, params)
    limit = 0.0 if market else price / _positive_gaussian(rng, params.mu, sigma)
    expiry = make_expiry(trader.strategy, day, rng, params)
    return OrderIntent(Side.SELL, amount, limit, day, expiry)


def decide_order(
    trader: Trader,
    prices: Sequence[float],
    price: float,
    sigma: float,
    rng: np.random.Generator,
    day: int,
    params: BehaviorParams,
) -> OrderIntent | None:
    """The single order an active trader issues today, if any.

    ``prices`` are closes up to yesterday (Chartist signal); ``price`` is the
    current market price used to size and limit the order.
    """
    if trader.strategy is Strategy.RANDOM:
        side = Side.BUY if rng.random() < 0.5 else Side.SELL
    else:
        side = chartist_signal(prices, trader.chartist_window, params.threshold)
        if side is None:
            return None
    if side is Side.BUY:
        return make_buy_order(trader, price, sigma, rng, day, params)
    return make_sell_order(trader, price, sigma, rng, day, params)
