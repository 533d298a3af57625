import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from btcabm.agents import Side
from btcabm.orderbook import (
    Book,
    BookOrder,
    Trade,
    heads_match,
    match_price,
    reference_match,
    write_trades_csv,
)


def order(oid, side, amount, limit, day=0, expiry=5, budget=None, trader=None):
    return BookOrder(
        order_id=oid, trader_id=oid if trader is None else trader, side=side,
        original_amount=amount, residual=amount, limit_price=limit, issue_seq=oid,
        issue_day=day, expiry_day=expiry, budget=budget,
    )


BUY, SELL = Side.BUY, Side.SELL


@pytest.mark.parametrize("b, s, expected", [(10, 8, True), (7, 8, False), (0, 8, True), (7, 0, True), (8, 8, True)])
def test_heads_match(b, s, expected):
    assert heads_match(b, s) is expected


@pytest.mark.parametrize(
    "b, s, p, expected",
    [(10, 8, 100, 9), (0, 0, 5, 5), (10, 0, 12, 10), (10, 0, 7, 7), (0, 8, 7, 8), (0, 8, 9, 9)],
)
def test_match_price(b, s, p, expected):
    assert match_price(b, s, p) == expected


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(1e-3, 1e4))
def test_match_price_bounded(b, s, p):
    if not heads_match(b, s):
        return
    out = match_price(b, s, p)
    vals = [v for v in (b, s, p)]
    assert min(vals) - 1e-9 <= out <= max(vals) + 1e-9


def test_empty_book_rests():
    book = Book(5.0)
    assert book.insert(order(0, BUY, 3, 10)) == []
    assert len(book) == 1


def test_partial_fill():
    book = Book(5.0)
    book.insert(order(0, SELL, 5, 8))
    trades = book.insert(order(1, BUY, 3, 10))
    assert [(t.amount, t.price) for t in trades] == [(3, 9)]
    assert book.best_sell().residual == 2
    assert book.best_buy() is None
    assert book.last_price == 9


@pytest.mark.parametrize("market_first", [False, True])
def test_market_buy_sweeps(market_first):
    book = Book(5.0, market_first=market_first)
    book.insert(order(0, SELL, 5, 8))
    book.insert(order(1, SELL, 5, 9))
    trades = book.insert(order(2, BUY, 10, 0))
    assert [t.amount for t in trades] == [5, 5]
    assert [t.price for t in trades] == [8, 9]
    assert len(book) == 0


def test_time_priority_at_equal_limit():
    book = Book(5.0)
    book.insert(order(0, SELL, 1, 8))
    book.insert(order(1, SELL, 1, 8))
    trades = book.insert(order(2, BUY, 2, 8))
    assert [t.sell_order_id for t in trades] == [0, 1]


def test_market_priority_modes():
    for market_first, head in ((True, 1), (False, 0)):
        book = Book(5.0, market_first=market_first)
        book.insert(order(0, BUY, 1, 6))
        book.insert(order(1, BUY, 1, 0))
        assert book.best_buy().order_id == head
    # sells: a zero limit is the lowest ascending key, so it heads either way
    book = Book(5.0, market_first=False)
    book.insert(order(0, SELL, 1, 6))
    book.insert(order(1, SELL, 1, 0))
    assert book.best_sell().order_id == 1


def test_budget_caps_fill():
    book = Book(5.0)
    book.insert(order(0, SELL, 10, 4))
    trades = book.insert(order(1, BUY, 10, 0, budget=20.0))
    # market buy vs limit sell trades at max(4, 5) = 5; 20 dollars buy 4 coins
    assert trades[0].price == 5 and trades[0].amount == pytest.approx(4)
    assert book.best_buy() is None
    assert book.best_sell().residual == pytest.approx(6)


def test_dust_residual_removed():
    book = Book(5.0)
    book.insert(order(0, SELL, 1.0, 4))
    book.insert(order(1, BUY, 1.0 - 5e-9, 6))
    assert len(book) == 0


def test_expire_boundaries():
    book = Book(5.0)
    book.insert(order(0, BUY, 1, 4, expiry=9))
    book.insert(order(1, BUY, 1, 4, expiry=10))
    gone = book.expire(10)
    assert [o.order_id for o in gone] == [0]
    assert 1 in book and 0 not in book
    assert Book(5.0).expire(3) == []


def test_cancel():
    book = Book(5.0)
    book.insert(order(0, BUY, 1, 4))
    assert book.cancel(0).order_id == 0
    assert book.cancel(0) is None
    assert book.best_buy() is None


def test_reference_trivial_cases():
    assert reference_match([]) == []
    assert reference_match([order(0, BUY, 1, 4)]) == []


def random_instance(rng, n, with_budget):
    grid = [0.0, 0.0, 4.0, 4.5, 5.0, 5.0, 5.5, 6.0]
    out = []
    for i in range(n):
        side = BUY if rng.random() < 0.5 else SELL
        limit = float(grid[rng.integers(len(grid))]) * (1 + 0.01 * rng.integers(0, 2))
        amount = float(rng.choice([1.0, 2.0, 0.5, rng.uniform(0.1, 5)]))
        budget = None
        if with_budget and side is BUY and rng.random() < 0.5:
            budget = float(rng.uniform(0.5, 30))
        out.append(order(i, side, amount, limit, budget=budget))
    return out


def clone(orders):
    return [
        BookOrder(o.order_id, o.trader_id, o.side, o.original_amount, o.residual,
                  o.limit_price, o.issue_seq, o.issue_day, o.expiry_day, o.budget)
        for o in orders
    ]


def assert_uncrossed(book):
    b, s = book.best_buy(), book.best_sell()
    assert b is None or s is None or not heads_match(b.limit_price, s.limit_price)


@pytest.mark.parametrize("market_first", [False, True])
def test_differential_against_reference(market_first):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        orders = random_instance(rng, int(rng.integers(0, 51)), with_budget=True)
        expected = reference_match(clone(orders), 5.0, market_first)
        book = Book(5.0, market_first=market_first)
        got = []
        for o in clone(orders):
            got += book.insert(o)
            assert_uncrossed(book)
        assert len(got) == len(expected)
        for g, e in zip(got, expected):
            assert (g.buy_order_id, g.sell_order_id) == (e.buy_order_id, e.sell_order_id)
            assert g.price == pytest.approx(e.price, abs=1e-9)
            assert g.amount == pytest.approx(e.amount, abs=1e-9)


def test_trade_conservation_of_amounts():
    rng = np.random.default_rng(7)
    for _ in range(200):
        orders = random_instance(rng, 40, with_budget=False)
        book = Book(5.0)
        filled = {}
        for o in clone(orders):
            for t in book.insert(o):
                filled[t.buy_order_id] = filled.get(t.buy_order_id, 0) + t.amount
                filled[t.sell_order_id] = filled.get(t.sell_order_id, 0) + t.amount
        for o in orders:
            assert filled.get(o.order_id, 0) <= o.original_amount + 1e-9


def test_trades_csv():
    buf = io.StringIO()
    write_trades_csv([Trade(1, 2, 9.0, 3.0, 4, 10, 11)], buf)
    assert buf.getvalue() == "day,price,amount,buy_trader,sell_trader\n4,9.0,3.0,10,11\n"
