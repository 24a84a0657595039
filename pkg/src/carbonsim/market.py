"""Continuous double auction for carbon credits.

Unit-quantity orders at integer price levels, escrow on submit (coins for
bids, one credit for asks), price-time priority, execution at the resting
order's price, fixed lifetimes, and per-period executed-price history.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import NamedTuple

BID = "bid"
ASK = "ask"


class MarketError(ValueError):
    pass


@dataclass(frozen=True)
class Order:
    id: int
    agent: int
    side: str
    price: int
    placed_at: int
    expires_at: int


class Trade(NamedTuple):
    t: int
    buyer: int
    seller: int
    price: int


@dataclass
class OrderBook:
    """Single-writer book; the engine mutates it sequentially within a step."""

    price_levels: int
    order_lifetime: int
    max_open_orders: int
    # bids sorted best-first: (-price, placed_at, id); asks: (price, placed_at, id)
    open_bids: list[Order] = field(default_factory=list)
    open_asks: list[Order] = field(default_factory=list)
    trades: list[Trade] = field(default_factory=list)
    escrow_coins: dict[int, float] = field(default_factory=dict)
    escrow_credits: dict[int, float] = field(default_factory=dict)
    open_count: dict[int, int] = field(default_factory=dict)
    period_price_sum: dict[int, float] = field(default_factory=dict)
    period_volume: dict[int, int] = field(default_factory=dict)
    next_order_id: int = 0

    def total_escrow_coins(self) -> float:
        return sum(self.escrow_coins.values())

    def total_escrow_credits(self) -> float:
        return sum(self.escrow_credits.values())

    def submit_order(self, agent: int, side: str, price: int, t: int, states,
                     period: int) -> tuple[Order | None, str | None, list[Trade]]:
        """Escrow, insert, and run an immediate matching pass.

        Returns (order, reject_reason, trades). `states` maps agent id to a
        holder of mutable .coins and .credits.
        """
        if not 1 <= price <= self.price_levels:
            return None, "price out of range", []
        if self.open_count.get(agent, 0) >= self.max_open_orders:
            return None, "open-order limit reached", []
        state = states[agent]
        if side == BID:
            if state.coins < price:
                return None, "insufficient coins", []
            state.coins -= price
            self.escrow_coins[agent] = self.escrow_coins.get(agent, 0.0) + price
        elif side == ASK:
            if state.credits < 1.0:
                return None, "insufficient credits", []
            state.credits -= 1.0
            self.escrow_credits[agent] = self.escrow_credits.get(agent, 0.0) + 1.0
        else:
            raise MarketError(f"unknown side {side!r}")
        order = Order(self.next_order_id, agent, side, price, t, t + self.order_lifetime)
        self.next_order_id += 1
        self.open_count[agent] = self.open_count.get(agent, 0) + 1
        if side == BID:
            bisect.insort(self.open_bids, order, key=lambda o: (-o.price, o.placed_at, o.id))
        else:
            bisect.insort(self.open_asks, order, key=lambda o: (o.price, o.placed_at, o.id))
        trades = self.match_pass(t, states, period)
        return order, None, trades

    def match_pass(self, t: int, states, period: int) -> list[Trade]:
        """Execute while the book is crossed, at the resting order's price."""
        executed = []
        while self.open_bids and self.open_asks:
            bid = self.open_bids[0]
            ask = self.open_asks[0]
            if bid.price < ask.price:
                break
            # the resting order is the earlier-placed of the pair (ties by id)
            resting = bid if (bid.placed_at, bid.id) < (ask.placed_at, ask.id) else ask
            price = resting.price
            self.open_bids.pop(0)
            self.open_asks.pop(0)
            self.open_count[bid.agent] -= 1
            self.open_count[ask.agent] -= 1
            buyer = states[bid.agent]
            seller = states[ask.agent]
            self.escrow_coins[bid.agent] -= bid.price
            buyer.coins += bid.price - price  # refund escrow above exec price
            seller.coins += price
            self.escrow_credits[ask.agent] -= 1.0
            buyer.credits += 1.0
            trade = Trade(t, bid.agent, ask.agent, price)
            self.trades.append(trade)
            executed.append(trade)
            self.period_price_sum[period] = self.period_price_sum.get(period, 0.0) + price
            self.period_volume[period] = self.period_volume.get(period, 0) + 1
        return executed

    def expire_orders(self, t: int, states) -> list[Order]:
        """Remove orders with expires_at <= t, refunding escrow in full."""
        expired = [o for o in self.open_bids if o.expires_at <= t]
        expired += [o for o in self.open_asks if o.expires_at <= t]
        if not expired:
            return []
        self.open_bids = [o for o in self.open_bids if o.expires_at > t]
        self.open_asks = [o for o in self.open_asks if o.expires_at > t]
        for order in expired:
            self._refund(order, states)
        return expired

    def clear_book(self, states) -> list[Order]:
        """Episode boundary: refund every open order and reset price history."""
        cleared = list(self.open_bids) + list(self.open_asks)
        for order in cleared:
            self._refund(order, states)
        self.open_bids.clear()
        self.open_asks.clear()
        self.period_price_sum.clear()
        self.period_volume.clear()
        return cleared

    def _refund(self, order: Order, states) -> None:
        self.open_count[order.agent] -= 1
        if order.side == BID:
            self.escrow_coins[order.agent] -= order.price
            states[order.agent].coins += order.price
        else:
            self.escrow_credits[order.agent] -= 1.0
            states[order.agent].credits += 1.0

    def price_summary(self, current_period: int, window: int) -> list[float]:
        """(mean price, volume) per period for the `window` most recent periods,
        newest first, zero-filled where no trades executed."""
        out: list[float] = []
        for p in range(current_period, current_period - window, -1):
            vol = self.period_volume.get(p, 0)
            mean = self.period_price_sum.get(p, 0.0) / vol if vol else 0.0
            out.extend((mean, float(vol)))
        return out

    def is_crossed(self) -> bool:
        return bool(self.open_bids and self.open_asks
                    and self.open_bids[0].price >= self.open_asks[0].price)
