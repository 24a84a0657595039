"""Discrete enterprise action space: indices, names, and legality masks.

Layout (length 7 + 2 * price_levels):
    0            NO-OP
    1..4         Move N, S, E, W
    5            Produce
    6            Invest
    7..6+L       Bid at price level 1..L
    7+L..6+2L    Ask at price level 1..L
"""

from __future__ import annotations

from .config import SimConfig
from .enterprise import EnterpriseState
from .grid import DIRECTION_NAMES, DIRECTIONS, EMPTY, PROJECT, Grid
from .market import OrderBook

NOOP = 0
MOVE_BASE = 1
PRODUCE = 5
INVEST = 6
BID_BASE = 7


def action_space_size(cfg: SimConfig) -> int:
    return 7 + 2 * cfg.trade_price_levels


def ask_base(cfg: SimConfig) -> int:
    return BID_BASE + cfg.trade_price_levels


def action_name(action: int, cfg: SimConfig) -> str:
    levels = cfg.trade_price_levels
    if action == NOOP:
        return "noop"
    if MOVE_BASE <= action < MOVE_BASE + 4:
        return f"move_{DIRECTION_NAMES[action - MOVE_BASE]}"
    if action == PRODUCE:
        return "produce"
    if action == INVEST:
        return "invest"
    if BID_BASE <= action < BID_BASE + levels:
        return f"bid_{action - BID_BASE + 1}"
    if BID_BASE + levels <= action < BID_BASE + 2 * levels:
        return f"ask_{action - BID_BASE - levels + 1}"
    raise ValueError(f"action {action} out of range")


def legal_action_mask(state: EnterpriseState, grid: Grid, book: OrderBook,
                      t: int, cfg: SimConfig) -> list[bool]:
    """NO-OP is always legal; everything else is masked at government steps."""
    size = action_space_size(cfg)
    mask = [False] * size
    mask[NOOP] = True
    if t % cfg.steps_per_period == 0:
        return mask
    x, y = state.position
    width, height = grid.width, grid.height
    kind_arr, complete_arr, occupied = grid.kind, grid.complete, grid.occupied
    for d, name in enumerate(DIRECTION_NAMES):
        dx, dy = DIRECTIONS[name]
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height):
            continue
        i = ny * width + nx
        if occupied[i]:
            continue
        kind = kind_arr[i]
        if kind == EMPTY:
            mask[MOVE_BASE + d] = True
        elif kind == PROJECT and not complete_arr[i]:
            # entering costs the project fee up front
            mask[MOVE_BASE + d] = state.coins >= cfg.project_coin_cost
    if kind_arr[y * width + x] == EMPTY:
        mask[PRODUCE] = True
    coins = state.coins
    if coins > 0.0:
        mask[INVEST] = True
    if book.open_count.get(state.agent, 0) < cfg.max_open_orders:
        levels = cfg.trade_price_levels
        affordable = min(levels, int(coins)) if coins >= 1.0 else 0
        if affordable:
            mask[BID_BASE:BID_BASE + affordable] = [True] * affordable
        if state.credits >= 1.0:
            mask[BID_BASE + levels:BID_BASE + 2 * levels] = [True] * levels
    return mask
