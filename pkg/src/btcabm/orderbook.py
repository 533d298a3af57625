"""Price-time priority order book with immediate matching on arrival.

Market orders carry a limit price of 0. With ``market_first=False`` they are
ranked by their raw limit like any other order: last among buys (descending
sort), first among sells (ascending sort). With ``market_first=True`` they
head both sides. A buy order may carry a cash ``budget``; fills never spend
more than it.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from typing import IO, Iterable

from btcabm.agents import Side

SATOSHI = 1e-8


@dataclass(slots=True)
class BookOrder:
    order_id: int
    trader_id: int
    side: Side
    original_amount: float
    residual: float
    limit_price: float
    issue_seq: int
    issue_day: int = 0
    expiry_day: int = 0
    budget: float | None = None
    active: bool = True

    @property
    def is_market(self) -> bool:
        return self.limit_price == 0.0

    def priority(self, market_first: bool = False) -> tuple:
        if self.is_market and market_first:
            return (0, 0.0, self.issue_seq)
        price_key = -self.limit_price if self.side is Side.BUY else self.limit_price
        return (1, price_key, self.issue_seq)


@dataclass(frozen=True, slots=True)
class Trade:
    buy_order_id: int
    sell_order_id: int
    price: float
    amount: float
    day: int
    buy_trader: int
    sell_trader: int


def heads_match(buy_limit: float, sell_limit: float) -> bool:
    return buy_limit == 0.0 or sell_limit == 0.0 or sell_limit <= buy_limit


def match_price(buy_limit: float, sell_limit: float, current_price: float) -> float:
    if buy_limit == 0.0 and sell_limit == 0.0:
        return current_price
    if sell_limit == 0.0:
        return min(buy_limit, current_price)
    if buy_limit == 0.0:
        return max(sell_limit, current_price)
    return 0.5 * (buy_limit + sell_limit)


def fill_amount(buy: BookOrder, sell: BookOrder, price: float) -> tuple[float, bool]:
    """Matched quantity and whether the buyer's budget is what limited it."""
    amount = min(buy.residual, sell.residual)
    if buy.budget is not None and amount * price > buy.budget:
        return buy.budget / price, True
    return amount, False


class Book:
    def __init__(self, last_price: float, market_first: bool = False):
        if last_price <= 0:
            raise ValueError("last_price must be > 0")
        self.last_price = last_price
        self.market_first = market_first
        self._buys: list[tuple[tuple, BookOrder]] = []
        self._sells: list[tuple[tuple, BookOrder]] = []
        self._live: dict[int, BookOrder] = {}

    def __len__(self) -> int:
        return len(self._live)

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._live

    def orders(self) -> list[BookOrder]:
        return list(self._live.values())

    def _head(self, heap: list) -> BookOrder | None:
        while heap and not heap[0][1].active:
            heapq.heappop(heap)
        return heap[0][1] if heap else None

    def best_buy(self) -> BookOrder | None:
        return self._head(self._buys)

    def best_sell(self) -> BookOrder | None:
        return self._head(self._sells)

    def _side(self, side: Side) -> list[BookOrder]:
        orders = (o for o in self._live.values() if o.side is side)
        return sorted(orders, key=lambda o: o.priority(self.market_first))

    def buys(self) -> list[BookOrder]:
        return self._side(Side.BUY)

    def sells(self) -> list[BookOrder]:
        return self._side(Side.SELL)

    def _deactivate(self, order: BookOrder) -> None:
        order.active = False
        del self._live[order.order_id]

    def insert(self, order: BookOrder, day: int | None = None) -> list[Trade]:
        day = order.issue_day if day is None else day
        heap = self._buys if order.side is Side.BUY else self._sells
        heapq.heappush(heap, (order.priority(self.market_first), order))
        self._live[order.order_id] = order
        trades = []
        while True:
            buy, sell = self.best_buy(), self.best_sell()
            if buy is None or sell is None or not heads_match(buy.limit_price, sell.limit_price):
                break
            price = match_price(buy.limit_price, sell.limit_price, self.last_price)
            amount, budget_bound = fill_amount(buy, sell, price)
            trades.append(Trade(buy.order_id, sell.order_id, price, amount, day, buy.trader_id, sell.trader_id))
            self.last_price = price
            buy.residual -= amount
            sell.residual -= amount
            if buy.budget is not None:
                buy.budget = 0.0 if budget_bound else buy.budget - amount * price
            if budget_bound or buy.residual < SATOSHI:
                self._deactivate(buy)
            if sell.residual < SATOSHI:
                self._deactivate(sell)
        return trades

    def cancel(self, order_id: int) -> BookOrder | None:
        order = self._live.get(order_id)
        if order is not None:
            self._deactivate(order)
        return order

    def expire(self, day: int) -> list[BookOrder]:
        """Remove and return orders whose expiry day is before ``day``."""
        gone = [o for o in self._live.values() if o.expiry_day < day]
        for o in gone:
            self._deactivate(o)
        if gone:
            self._compact()
        return gone

    def _compact(self) -> None:
        self._buys = [e for e in self._buys if e[1].active]
        self._sells = [e for e in self._sells if e[1].active]
        heapq.heapify(self._buys)
        heapq.heapify(self._sells)


def reference_match(
    orders: Iterable[BookOrder], last_price: float = 1.0, market_first: bool = False
) -> list[Trade]:
    """Sequential re-sort-everything matcher used as a test oracle for ``Book``.

    Orders are copied; arrival order is the iteration order.
    """
    buys: list[list] = []
    sells: list[list] = []
    trades: list[Trade] = []
    price_now = last_price

    def rank(entry, is_buy):
        limit, seq = entry[1], entry[2]
        if limit == 0.0 and market_first:
            return (0, 0.0, seq)
        return (1, -limit if is_buy else limit, seq)

    for o in orders:
        # [id, limit, seq, residual, budget, trader, day]
        entry = [o.order_id, o.limit_price, o.issue_seq, o.residual, o.budget, o.trader_id, o.issue_day]
        (buys if o.side is Side.BUY else sells).append(entry)
        while buys and sells:
            buys.sort(key=lambda e: rank(e, True))
            sells.sort(key=lambda e: rank(e, False))
            b, s = buys[0], sells[0]
            bl, sl = b[1], s[1]
            if not (bl == 0.0 or sl == 0.0 or sl <= bl):
                break
            if bl == 0.0 and sl == 0.0:
                p = price_now
            elif bl == 0.0:
                p = max(sl, price_now)
            elif sl == 0.0:
                p = min(bl, price_now)
            else:
                p = 0.5 * (bl + sl)
            qty = min(b[3], s[3])
            capped = False
            if b[4] is not None and qty * p > b[4]:
                qty, capped = b[4] / p, True
            trades.append(Trade(b[0], s[0], p, qty, o.issue_day, b[5], s[5]))
            price_now = p
            b[3] -= qty
            s[3] -= qty
            if b[4] is not None:
                b[4] = 0.0 if capped else b[4] - qty * p
            if capped or b[3] < SATOSHI:
                buys.pop(0)
            if s[3] < SATOSHI:
                sells.pop(0)
    return trades


def write_trades_csv(trades: Iterable[Trade], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["day", "price", "amount", "buy_trader", "sell_trader"])
    for t in trades:
        w.writerow([t.day, repr(t.price), repr(t.amount), t.buy_trader, t.sell_trader])
