"""Daily simulation loop: expiry, entry/exit, mining, activation, order flow, matching and bookkeeping."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from btcabm import agents
from btcabm.agents import Side, Strategy, Trader
from btcabm.config import SimConfig
from btcabm.data_ingest import DriverSchedule, build_schedule, load_series
from btcabm.endowment import EndowmentSet, entrant_pool, initial_population
from btcabm.orderbook import Book, BookOrder, Trade


class ScheduleExhausted(RuntimeError):
    pass


class PoolExhausted(RuntimeError):
    pass


SERIES_COLUMNS = (
    "day", "price", "volume", "traders", "coins",
    "random_coins", "chartist_coins", "random_cash", "chartist_cash",
    "random_wealth", "chartist_wealth",
)
# kept in memory for conservation audits, not exported
AUDIT_COLUMNS = (
    "cash", "cash_in", "cash_out", "mined", "coins_removed", "mining_carry", "min_balance",
)


class MarketSeries:
    def __init__(self) -> None:
        self.columns: dict[str, list] = {c: [] for c in SERIES_COLUMNS + AUDIT_COLUMNS}

    def __len__(self) -> int:
        return len(self.columns["day"])

    def __getitem__(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    @property
    def price(self) -> np.ndarray:
        return self["price"]

    def append(self, row: dict) -> None:
        for k, v in row.items():
            self.columns[k].append(v)

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for i in range(len(self)):
            w.writerow([_fmt(self.columns[c][i]) for c in SERIES_COLUMNS])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class DayFlows:
    cash_in: float = 0.0
    cash_out: float = 0.0
    mined: float = 0.0
    coins_removed: float = 0.0
    volume: float = 0.0


@dataclass
class MarketState:
    config: SimConfig
    traders: dict[int, Trader]
    book: Book
    price_history: list[float]
    entrant_pool: EndowmentSet
    rng: np.random.Generator
    day: int = 0
    next_entrant: int = 0
    mining_carry: float = 0.0
    trades: list[Trade] = field(default_factory=list)
    open_orders: dict[int, BookOrder] = field(default_factory=dict)
    orders_of: dict[int, set[int]] = field(default_factory=dict)
    flows: DayFlows = field(default_factory=DayFlows)
    _order_ids: itertools.count = field(default_factory=itertools.count)
    _trader_ids: itertools.count = field(default_factory=itertools.count)

    @property
    def price(self) -> float:
        return self.book.last_price

    def new_trader(self, cash: float, coins: float) -> Trader:
        params = self.config.behavior
        if self.rng.random() < self.config.p_random:
            strategy, window = Strategy.RANDOM, 0
        else:
            strategy = Strategy.CHARTIST
            window = int(self.rng.integers(params.chartist_window_min, params.chartist_window_max + 1))
        t = Trader(next(self._trader_ids), strategy, float(cash), float(coins), chartist_window=window)
        self.traders[t.id] = t
        self.orders_of[t.id] = set()
        return t


def init_state(config: SimConfig, seed: int) -> MarketState:
    rng = np.random.default_rng(seed)
    pool = entrant_pool(config, rng)
    state = MarketState(
        config=config,
        traders={},
        book=Book(config.price_0, market_first=config.market_priority == "top"),
        price_history=[config.price_0],
        entrant_pool=pool,
        rng=rng,
    )
    initial = initial_population(config, rng)
    for cash, coins in zip(initial.cash, initial.coins):
        state.new_trader(cash, coins)
    return state


# -- order plumbing -----------------------------------------------------------

def _release(state: MarketState, order: BookOrder) -> None:
    """Drop a no-longer-resting order and free what it still reserved."""
    state.open_orders.pop(order.order_id, None)
    trader = state.traders.get(order.trader_id)
    if trader is None:
        return
    state.orders_of[trader.id].discard(order.order_id)
    if order.side is Side.BUY:
        trader.committed_cash = max(0.0, trader.committed_cash - order.budget)
    else:
        trader.committed_coins = max(0.0, trader.committed_coins - order.residual)
    if not state.orders_of[trader.id]:
        # nothing resting: reservations must be exactly zero
        trader.committed_cash = 0.0
        trader.committed_coins = 0.0


def _settle(state: MarketState, trades: list[Trade]) -> None:
    for tr in trades:
        cost = tr.amount * tr.price
        buyer = state.traders[tr.buy_trader]
        seller = state.traders[tr.sell_trader]
        buyer.cash = max(0.0, buyer.cash - cost)
        # rounding may leave a reservation a few ulps above the holding
        buyer.committed_cash = min(max(0.0, buyer.committed_cash - cost), buyer.cash)
        buyer.coins += tr.amount
        seller.coins = max(0.0, seller.coins - tr.amount)
        seller.committed_coins = min(max(0.0, seller.committed_coins - tr.amount), seller.coins)
        seller.cash += cost
        state.flows.volume += tr.amount
    state.trades.extend(trades)
    for tr in trades:
        for oid in (tr.buy_order_id, tr.sell_order_id):
            order = state.open_orders.get(oid)
            if order is not None and not order.active:
                _release(state, order)


def submit(state: MarketState, trader: Trader, intent: agents.OrderIntent) -> list[Trade]:
    """Reserve resources for ``intent``, place it in the book and settle any fills."""
    if intent.side is Side.BUY:
        valuation = intent.limit_price if intent.limit_price > 0 else state.price
        budget = min(intent.amount * valuation, trader.available_cash)
        trader.committed_cash = min(trader.committed_cash + budget, trader.cash)
    else:
        budget = None
        trader.committed_coins = min(trader.committed_coins + intent.amount, trader.coins)
    oid = next(state._order_ids)
    order = BookOrder(
        order_id=oid,
        trader_id=trader.id,
        side=intent.side,
        original_amount=intent.amount,
        residual=intent.amount,
        limit_price=intent.limit_price,
        issue_seq=oid,
        issue_day=intent.issue_day,
        expiry_day=intent.expiry_day,
        budget=budget,
    )
    state.open_orders[oid] = order
    state.orders_of[trader.id].add(oid)
    trades = state.book.insert(order, state.day)
    if trades:
        _settle(state, trades)
    return trades


def cancel_orders(state: MarketState, trader_id: int) -> None:
    for oid in sorted(state.orders_of[trader_id]):
        order = state.book.cancel(oid)
        if order is not None:
            _release(state, order)


# -- daily phases ---------------------------------------------------------------

def adjust_population(state: MarketState, target: int) -> tuple[int, int]:
    """Move the trader count to ``target``; returns (entries, exits)."""
    if target < 0:
        raise ValueError("target must be >= 0")
    count = len(state.traders)
    if target > count:
        need = target - count
        pool = state.entrant_pool
        if state.next_entrant + need > len(pool):
            raise PoolExhausted(f"entrant pool exhausted on day {state.day}")
        for k in range(state.next_entrant, state.next_entrant + need):
            t = state.new_trader(pool.cash[k], pool.coins[k])
            state.flows.cash_in += t.cash
        state.next_entrant += need
        return need, 0
    if target < count:
        ids = sorted(state.traders)
        leaving = state.rng.choice(ids, size=count - target, replace=False)
        for tid in leaving:
            remove_trader(state, int(tid))
        return 0, count - target
    return 0, 0


def remove_trader(state: MarketState, trader_id: int) -> None:
    trader = state.traders[trader_id]
    cancel_orders(state, trader_id)
    if trader.coins > 0:
        intent = agents.OrderIntent(Side.SELL, trader.coins, 0.0, state.day, state.day)
        submit(state, trader, intent)
        cancel_orders(state, trader_id)
    state.flows.cash_out += trader.cash
    state.flows.coins_removed += trader.coins
    del state.traders[trader_id]
    del state.orders_of[trader_id]


def allocate_mining(state: MarketState, mined: float) -> float:
    """Hand ``mined`` coins pro rata to randomly chosen coin-holding Random traders.

    Returns the amount actually distributed; with no eligible trader the coins
    wait in ``state.mining_carry``.
    """
    if mined < 0:
        raise ValueError("mined must be >= 0")
    mined += state.mining_carry
    state.mining_carry = 0.0
    if mined == 0:
        return 0.0
    eligible = [t for t in state.traders.values() if t.strategy is Strategy.RANDOM and t.coins > 0]
    if not eligible:
        state.mining_carry = mined
        return 0.0
    n = min(len(eligible), max(1, int(round(mined))))
    picks = state.rng.choice(len(eligible), size=n, replace=False)
    chosen = [eligible[i] for i in sorted(picks)]
    holdings = np.array([t.coins for t in chosen])
    shares = mined * holdings / holdings.sum()
    for t, s in zip(chosen, shares):
        t.coins += float(s)
    state.flows.mined += mined
    return mined


def step(state: MarketState, schedule: DriverSchedule) -> dict:
    day = state.day
    if day >= len(schedule):
        raise ScheduleExhausted(f"schedule has {len(schedule)} days, asked for day {day}")
    params = state.config.behavior
    state.flows = DayFlows()

    for order in state.book.expire(day):
        _release(state, order)

    adjust_population(state, int(schedule.target_traders[day]))
    allocate_mining(state, float(schedule.mined_coins[day]))

    rng = state.rng
    active = [t for t in state.traders.values() if agents.is_active(t, rng, params)]
    order_seq = rng.permutation(len(active))
    closes = state.price_history
    sigma = agents.sigma_i(closes, params.K, params.T_window)
    for i in order_seq:
        trader = active[i]
        intent = agents.decide_order(trader, closes, state.price, sigma, rng, day, params)
        if intent is not None and intent.amount > 0:
            submit(state, trader, intent)

    close = state.book.last_price
    state.price_history.append(close)
    state.day += 1
    return record(state, day, close)


def record(state: MarketState, day: int, close: float) -> dict:
    rc = cc = rcash = ccash = 0.0
    lowest = 0.0
    for t in state.traders.values():
        # holdings, reservations and free resources must all stay non-negative
        lowest = min(lowest, t.cash, t.coins, t.committed_cash, t.committed_coins,
                     t.cash - t.committed_cash, t.coins - t.committed_coins)
        if t.strategy is Strategy.RANDOM:
            rc += t.coins
            rcash += t.cash
        else:
            cc += t.coins
            ccash += t.cash
    f = state.flows
    return {
        "day": day,
        "price": close,
        "volume": f.volume,
        "traders": len(state.traders),
        "coins": rc + cc,
        "random_coins": rc,
        "chartist_coins": cc,
        "random_cash": rcash,
        "chartist_cash": ccash,
        "random_wealth": rcash + rc * close,
        "chartist_wealth": ccash + cc * close,
        "cash": rcash + ccash,
        "cash_in": f.cash_in,
        "cash_out": f.cash_out,
        "mined": f.mined,
        "coins_removed": f.coins_removed,
        "mining_carry": state.mining_carry,
        "min_balance": lowest,
    }


def make_schedule(config: SimConfig) -> DriverSchedule:
    if config.data_path:
        return build_schedule(load_series(config.data_path), config.horizon, config.scale)
    return build_schedule(config, config.horizon, config.scale)


def run(config: SimConfig, seed: int | None = None) -> tuple[MarketSeries, list[Trade]]:
    """Simulate ``config.horizon`` days; deterministic in (config, seed)."""
    seed = config.seed if seed is None else seed
    schedule = make_schedule(config)
    state = init_state(config, seed)
    series = MarketSeries()
    for _ in range(config.horizon):
        series.append(step(state, schedule))
    return series, state.trades
