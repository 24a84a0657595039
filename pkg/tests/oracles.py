"""Independent reference implementations used to check the simulator.

Everything here is deliberately naive (quadratic scans, high-precision
arithmetic) and shares no code with the package under test.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 50


# ---------------------------------------------------------------- formulas

def ref_labor_coefficient(t, alpha, beta):
    return alpha * (1 - mp.e ** (-mp.mpf(t) / mp.mpf(beta)))


def ref_utility(z, labor, c_l, eta):
    z, labor, c_l, eta = map(mp.mpf, (z, labor, c_l, eta))
    return (z ** (1 - eta) - 1) / (1 - eta) - c_l * labor


def ref_power_consumption(research, n_r, delta):
    return mp.e ** (-mp.mpf(delta) * mp.mpf(research) * mp.mpf(n_r))


def ref_green_rate(power_sizes, n_p):
    if n_p <= 0:
        return mp.mpf(0)
    return mp.mpf(n_p) / (mp.mpf(power_sizes) + n_p)


def ref_emission_level(pc, gr, floor):
    return max(mp.mpf(floor), mp.mpf(pc) * (1 - mp.mpf(gr)))


def ref_equality(coins):
    """Eq-from-Gini via the literal double sum."""
    n = len(coins)
    total = mp.fsum(mp.mpf(c) for c in coins)
    if n <= 1 or total <= 0:
        return mp.mpf(1)
    pairwise = mp.fsum(
        abs(mp.mpf(a) - mp.mpf(b)) for a in coins for b in coins)
    return 1 - pairwise / (2 * (n - 1) * total)


def ref_social_welfare(prod, eq, ee, c_e):
    return mp.mpf(prod) * mp.mpf(eq) * mp.e ** (-mp.mpf(c_e) * mp.mpf(ee))


def rel_err(got, want) -> float:
    want = mp.mpf(want)
    if want == 0:
        return abs(mp.mpf(got) - want)
    return float(abs((mp.mpf(got) - want) / want))


# ------------------------------------------------------- brute-force matcher

class RefBook:
    """O(n^2) continuous double auction with the same rules as the package:
    unit orders, escrow on submit, price-time priority, execution at the
    resting (earlier-placed) order's price, full refund on expiry."""

    def __init__(self, price_levels, lifetime, max_open, coins, credits):
        self.price_levels = price_levels
        self.lifetime = lifetime
        self.max_open = max_open
        self.coins = dict(coins)
        self.credits = dict(credits)
        self.escrow_coins = {a: 0.0 for a in coins}
        self.escrow_credits = {a: 0.0 for a in coins}
        self.open = []  # dicts: id, agent, side, price, placed_at, expires_at
        self.trades = []  # (t, buyer, seller, price)
        self.next_id = 0

    def open_count(self, agent):
        return sum(1 for o in self.open if o["agent"] == agent)

    def expire(self, t):
        due = [o for o in self.open if o["expires_at"] <= t]
        for o in due:
            self.open.remove(o)
            if o["side"] == "bid":
                self.escrow_coins[o["agent"]] -= o["price"]
                self.coins[o["agent"]] += o["price"]
            else:
                self.escrow_credits[o["agent"]] -= 1.0
                self.credits[o["agent"]] += 1.0

    def submit(self, agent, side, price, t):
        if not 1 <= price <= self.price_levels:
            return "price out of range"
        if self.open_count(agent) >= self.max_open:
            return "open-order limit reached"
        if side == "bid":
            if self.coins[agent] < price:
                return "insufficient coins"
            self.coins[agent] -= price
            self.escrow_coins[agent] += price
        else:
            if self.credits[agent] < 1.0:
                return "insufficient credits"
            self.credits[agent] -= 1.0
            self.escrow_credits[agent] += 1.0
        self.open.append({"id": self.next_id, "agent": agent, "side": side,
                          "price": price, "placed_at": t,
                          "expires_at": t + self.lifetime})
        self.next_id += 1
        self.match(t)
        return None

    def match(self, t):
        while True:
            bids = [o for o in self.open if o["side"] == "bid"]
            asks = [o for o in self.open if o["side"] == "ask"]
            if not bids or not asks:
                return
            best_bid = min(bids, key=lambda o: (-o["price"], o["placed_at"], o["id"]))
            best_ask = min(asks, key=lambda o: (o["price"], o["placed_at"], o["id"]))
            if best_bid["price"] < best_ask["price"]:
                return
            resting = best_bid if (best_bid["placed_at"], best_bid["id"]) < (
                best_ask["placed_at"], best_ask["id"]) else best_ask
            price = resting["price"]
            self.open.remove(best_bid)
            self.open.remove(best_ask)
            self.escrow_coins[best_bid["agent"]] -= best_bid["price"]
            self.coins[best_bid["agent"]] += best_bid["price"] - price
            self.coins[best_ask["agent"]] += price
            self.escrow_credits[best_ask["agent"]] -= 1.0
            self.credits[best_bid["agent"]] += 1.0
            self.trades.append((t, best_bid["agent"], best_ask["agent"], price))
