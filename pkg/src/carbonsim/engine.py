"""Episode orchestration: timing, joint-action application, observation
construction, trace recording, and bit-exact replay.

One episode is n_periods * steps_per_period timesteps. At each period's
first timestep only the government acts (credit allocation, project
placement, punishment); at every other timestep the enterprises act
simultaneously, applied in ascending id order. The fixed application order
within a step is: allocation, order expiry, enterprise actions, matching,
investment maturation / emission recompute, rewards and metrics, and (at the
final step) the episode-end penalty before final rewards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import actions as act
from .config import RngStream, SimConfig, config_hash
from .enterprise import (
    EnterpriseState,
    Skills,
    apply_enter_project,
    apply_invest,
    apply_produce,
    enterprise_utility,
    mature_invests,
    recompute_emission_levels,
)
from .government import (
    GovernmentAction,
    apply_penalty,
    decode_action,
    welfare_metrics,
)
from .grid import DIRECTION_NAMES, EMPTY, Grid
from .market import ASK, BID, OrderBook
from .trace import EpisodeTrace, make_header


class IllegalActionError(RuntimeError):
    """An action violating its legality mask reached the engine."""


@dataclass(slots=True)
class EnterpriseObservation:
    """Private view for one enterprise: own state, local surroundings, public
    market info, and the average emission level. Never contains another
    enterprise's private skills or attributes."""

    agent: int
    n_enterprises: int
    t: int
    period: int
    step_in_period: int
    steps_per_period: int
    grid_width: int
    grid_height: int
    position: tuple[int, int]
    size: float
    research: float
    coins: float
    credits: float
    emission_level: float
    labor: float
    invest_count: float
    produces_this_period: int
    excess_produces_this_period: int
    period_grant: float
    avg_emission_level: float
    punishment: float
    punishment_max: float
    project_coin_cost: float
    underfoot_kind: int
    underfoot_pollution: float
    # per direction N,S,E,W:
    # (passable, kind, pollution, has_agent, enterable_project, open_degree)
    # where open_degree counts the target's own exits besides this cell
    neighbors: tuple
    nearest_project: tuple[int, int] | None  # (dx, dy) to nearest incomplete project
    market_summary: tuple
    open_orders: tuple  # anonymized (side, price) pairs for the whole book
    own_open_orders: int
    own_properties: tuple
    action_mask: list


@dataclass
class GovernmentObservation:
    """Full view: whole grid, every enterprise's skills and attributes,
    market state, and credit bookkeeping."""

    t: int
    period: int
    n_periods: int
    remaining_budget: float
    total_budget: float
    punishment: float
    enterprises: list  # dicts with id, size, research, coins, credits, x_l, labor, excess, position
    prev_period_emissions: list | None
    prev_period_coins: list | None
    market_summary: tuple
    open_orders: tuple  # (agent, side, price) triples
    n_projects_total: int
    n_projects_complete: int
    grid: Grid


@dataclass
class SimState:
    cfg: SimConfig
    seed: int
    t: int
    period: int
    grid: Grid
    enterprises: list[EnterpriseState]
    book: OrderBook
    remaining_budget: float
    punishment: float
    n_projects_complete: int = 0
    incomplete_projects: list[tuple[int, int]] = field(default_factory=list)
    project_stored: dict[tuple[int, int], float] = field(default_factory=dict)
    current_grants: dict[int, float] = field(default_factory=dict)
    prev_period_emissions: list | None = None
    prev_period_coins: list | None = None
    swf_prev: float = 0.0
    reward_sums: list[float] = field(default_factory=list)
    gov_reward_sum: float = 0.0
    wasted_credits: float = 0.0
    rng_pollution: RngStream = None
    rng_invest: RngStream = None
    rng_project: RngStream = None
    rng_policy: list[RngStream] = field(default_factory=list)
    config_digest: str = ""

    @property
    def states_by_id(self) -> dict[int, EnterpriseState]:
        return {s.agent: s for s in self.enterprises}


def new_episode(cfg: SimConfig, seed: int) -> SimState:
    cfg.validate()
    n = cfg.n_enterprises
    if n > cfg.grid_width * cfg.grid_height:
        raise ValueError("grid too small for the number of enterprises")
    grid = Grid(cfg.grid_width, cfg.grid_height)
    rng_skills = RngStream(seed, "skills")
    rng_pos = RngStream(seed, "init-positions")
    enterprises = []
    for i in range(n):
        size = cfg.skill_size_min + rng_skills.random() * (cfg.skill_size_max - cfg.skill_size_min)
        research = cfg.skill_research_min + rng_skills.random() * (
            cfg.skill_research_max - cfg.skill_research_min)
        while True:
            pos = (rng_pos.randrange(cfg.grid_width), rng_pos.randrange(cfg.grid_height))
            if pos not in grid._agent_at:
                break
        state = EnterpriseState(agent=i, skills=Skills(size, research), position=pos)
        grid.place_agent(i, pos)
        enterprises.append(state)
    book = OrderBook(cfg.trade_price_levels, cfg.order_lifetime, cfg.max_open_orders)
    return SimState(
        cfg=cfg,
        seed=seed,
        t=0,
        period=0,
        grid=grid,
        enterprises=enterprises,
        book=book,
        remaining_budget=cfg.total_credit_budget,
        punishment=cfg.default_punishment,
        reward_sums=[0.0] * n,
        rng_pollution=RngStream(seed, "pollution"),
        rng_invest=RngStream(seed, "invest-failure"),
        rng_project=RngStream(seed, "project-placement"),
        rng_policy=[RngStream(seed, f"scripted-policy-{i}") for i in range(n)],
        config_digest=config_hash(cfg),
    )


def _nearest_project(state: SimState, pos: tuple[int, int]) -> tuple[int, int] | None:
    best = None
    best_d = None
    for px, py in state.incomplete_projects:
        d = abs(px - pos[0]) + abs(py - pos[1])
        if best_d is None or d < best_d:
            best_d = d
            best = (px - pos[0], py - pos[1])
    return best


def observe_enterprise(state: SimState, agent: int, shared: dict | None = None) -> EnterpriseObservation:
    cfg = state.cfg
    s = state.enterprises[agent]
    grid = state.grid
    t = state.t
    if shared is None:
        shared = _shared_obs(state)
    x, y = s.position
    width, height = grid.width, grid.height
    kind_arr, pollution_arr = grid.kind, grid.pollution
    complete_arr, occupied = grid.complete, grid.occupied
    neighbors = []
    for dx, dy in _DIR_OFFSETS:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height):
            neighbors.append((False, -1, 0.0, False, False, 0))
            continue
        i = ny * width + nx
        kind = kind_arr[i]
        has_agent = bool(occupied[i])
        enterable = kind == 2 and not complete_arr[i] and not has_agent
        passable = kind == EMPTY and not has_agent
        open_degree = 0
        if passable:
            # exits from the target other than back through the current cell
            for ddx, ddy in _DIR_OFFSETS:
                tx, ty = nx + ddx, ny + ddy
                if ((tx == x and ty == y)
                        or not (0 <= tx < width and 0 <= ty < height)):
                    continue
                ti = ty * width + tx
                if not kind_arr[ti] and not occupied[ti]:
                    open_degree += 1
        neighbors.append((passable, kind, pollution_arr[i], has_agent, enterable, open_degree))
    under_i = y * width + x
    # legality mask, computed inline from the neighbor facts gathered above
    # (kept equivalent to actions.legal_action_mask; see the engine tests)
    levels = cfg.trade_price_levels
    mask = [False] * (7 + 2 * levels)
    mask[0] = True
    if t % cfg.steps_per_period != 0:
        coins = s.coins
        affordable_project = coins >= cfg.project_coin_cost
        for d in range(4):
            nb = neighbors[d]
            if nb[0] or (nb[4] and affordable_project):
                mask[act.MOVE_BASE + d] = True
        if not kind_arr[under_i]:
            mask[act.PRODUCE] = True
        if coins > 0.0:
            mask[act.INVEST] = True
        if state.book.open_count.get(agent, 0) < cfg.max_open_orders:
            n_bid = min(levels, int(coins)) if coins >= 1.0 else 0
            if n_bid:
                mask[act.BID_BASE:act.BID_BASE + n_bid] = [True] * n_bid
            if s.credits >= 1.0:
                mask[act.BID_BASE + levels:act.BID_BASE + 2 * levels] = [True] * levels
    own_props = tuple()  # positions derivable from the grid; omitted from the hot path
    return EnterpriseObservation(
        agent=agent,
        n_enterprises=cfg.n_enterprises,
        t=t,
        period=state.period,
        step_in_period=t % cfg.steps_per_period,
        steps_per_period=cfg.steps_per_period,
        grid_width=width,
        grid_height=height,
        position=s.position,
        size=s.skills.size,
        research=s.skills.research,
        coins=s.coins,
        credits=s.credits,
        emission_level=s.emission_level,
        labor=s.labor,
        invest_count=s.invest_count,
        produces_this_period=s.produces_this_period,
        excess_produces_this_period=s.excess_produces_this_period,
        period_grant=state.current_grants.get(agent, 0.0),
        avg_emission_level=shared["avg_emission"],
        punishment=state.punishment,
        punishment_max=cfg.punishment_max,
        project_coin_cost=cfg.project_coin_cost,
        underfoot_kind=kind_arr[under_i],
        underfoot_pollution=pollution_arr[under_i],
        neighbors=tuple(neighbors),
        nearest_project=_nearest_project(state, s.position),
        market_summary=shared["market_summary"],
        open_orders=shared["orders_public"],
        own_open_orders=state.book.open_count.get(agent, 0),
        own_properties=own_props,
        action_mask=mask,
    )


_DIR = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
_DIR_OFFSETS = ((0, 1), (0, -1), (1, 0), (-1, 0))  # N, S, E, W


def _shared_obs(state: SimState) -> dict:
    avg = sum(s.emission_level for s in state.enterprises) / len(state.enterprises)
    summary = tuple(state.book.price_summary(state.period, state.cfg.price_history_periods))
    open_orders = state.book.open_bids + state.book.open_asks
    orders = tuple((o.agent, o.side, o.price) for o in open_orders)
    orders_public = tuple((o.side, o.price) for o in open_orders)
    return {"avg_emission": avg, "market_summary": summary, "orders": orders,
            "orders_public": orders_public}


def observe_government(state: SimState) -> GovernmentObservation:
    shared = _shared_obs(state)
    # At a period-start decision point the per-period counters still hold the
    # just-completed period's totals (they are reset inside step()).
    at_boundary = state.t > 0 and state.t % state.cfg.steps_per_period == 0
    if at_boundary:
        prev_emissions = [s.emissions_this_period for s in state.enterprises]
        prev_coins = [s.coins_earned_this_period for s in state.enterprises]
    else:
        prev_emissions = state.prev_period_emissions
        prev_coins = state.prev_period_coins
    return GovernmentObservation(
        t=state.t,
        # derive from t: state.period is only refreshed inside step(), so at a
        # period-start decision point it still names the finished period
        period=state.t // state.cfg.steps_per_period,
        n_periods=state.cfg.n_periods,
        remaining_budget=state.remaining_budget,
        total_budget=state.cfg.total_credit_budget,
        punishment=state.punishment,
        enterprises=[
            {
                "id": s.agent,
                "size": s.skills.size,
                "research": s.skills.research,
                "coins": s.coins,
                "credits": s.credits,
                "emission_level": s.emission_level,
                "labor": s.labor,
                "excess_record": s.excess_record,
                "position": s.position,
            }
            for s in state.enterprises
        ],
        prev_period_emissions=prev_emissions,
        prev_period_coins=prev_coins,
        market_summary=shared["market_summary"],
        open_orders=shared["orders"],
        n_projects_total=state.grid.n_projects,
        n_projects_complete=state.n_projects_complete,
        grid=state.grid,
    )


def local_map(state: SimState, agent: int) -> list:
    """Window of (kind, pollution, complete) rows centered on the agent;
    off-map cells are (-1, 0.0, 0)."""
    cfg = state.cfg
    half = cfg.obs_window // 2
    x0, y0 = state.enterprises[agent].position
    grid = state.grid
    rows = []
    for dy in range(-half, half + 1):
        row = []
        for dx in range(-half, half + 1):
            x, y = x0 + dx, y0 + dy
            if grid.in_bounds(x, y):
                cell = grid.cell(x, y)
                row.append((cell.kind, cell.pollution, int(cell.complete)))
            else:
                row.append((-1, 0.0, 0))
        rows.append(row)
    return rows


def step(state: SimState, gov_action: GovernmentAction | None,
         ent_actions: dict[int, int]) -> list:
    """Advance one timestep; returns the step's event records (mutating state)."""
    cfg = state.cfg
    t = state.t
    horizon = cfg.horizon
    if t >= horizon:
        raise RuntimeError("episode already terminated")
    is_gov = t % cfg.steps_per_period == 0
    if is_gov != (gov_action is not None):
        raise IllegalActionError(
            "government action required exactly at period-start timesteps")
    period = t // cfg.steps_per_period
    state.period = period
    events: list = []
    states_map = state.states_by_id
    emissions_dirty = False

    # (1) allocation at period starts
    if is_gov:
        if period > 0:
            state.prev_period_emissions = [s.emissions_this_period for s in state.enterprises]
            state.prev_period_coins = [s.coins_earned_this_period for s in state.enterprises]
            for s in state.enterprises:
                if s.invest_count > 0.0:
                    s.invest_count *= 1.0 - cfg.invest_forget_rate
                    emissions_dirty = True
                s.emissions_this_period = 0.0
                s.coins_earned_this_period = 0.0
                s.produces_this_period = 0
                s.excess_produces_this_period = 0
        outcome = decode_action(gov_action, state.remaining_budget, cfg)
        wasted = []
        for s in state.enterprises:
            wasted.append(s.credits)
            s.credits = outcome.per_enterprise[s.agent]
        state.wasted_credits += sum(wasted)
        state.current_grants = dict(outcome.per_enterprise)
        state.remaining_budget = outcome.remaining_budget
        state.punishment = outcome.punishment
        project_pos = None
        if outcome.period_total > 0.0:
            try:
                project_pos = state.grid.place_project(state.rng_project)
            except ValueError:
                project_pos = None  # no empty cell: credits allocated, project skipped
            if project_pos is not None:
                state.project_stored[project_pos] = outcome.project_share
                state.incomplete_projects.append(project_pos)
        events.append([
            "alloc", t, period, outcome.period_total, outcome.project_share,
            [outcome.per_enterprise[i] for i in range(cfg.n_enterprises)],
            outcome.punishment,
            list(project_pos) if project_pos is not None else None,
            wasted,
        ])

    # (2) order expiry
    expired = state.book.expire_orders(t, states_map)
    if expired:
        events.append(["expire", t, sorted(o.id for o in expired)])

    # (3) enterprise actions, ascending id
    if not is_gov:
        for agent in range(cfg.n_enterprises):
            action = ent_actions.get(agent, act.NOOP)
            ev = _apply_enterprise_action(state, agent, action, events)
            if ev:
                emissions_dirty = True
    elif any(a != act.NOOP for a in ent_actions.values()):
        raise IllegalActionError("enterprise actions are masked at government timesteps")

    # (4) matching pass (submissions already matched; this catches stragglers)
    for trade in state.book.match_pass(t, states_map, period):
        events.append(["trade", t, trade.buyer, trade.seller, trade.price])

    # (5) investment maturation and emission recompute
    for s in state.enterprises:
        if s.pending_invests:
            matured = mature_invests(s, t)
            if matured:
                events.append(["mature", t, s.agent, matured])
                emissions_dirty = True
    if emissions_dirty:
        recompute_emission_levels(state.enterprises, state.n_projects_complete, cfg)

    # (7) episode-end penalty precedes final rewards
    final = t == horizon - 1
    if final:
        penalties = apply_penalty(state.enterprises, state.punishment)
        events.append(["penalty", t, [[a, penalties[a]] for a in sorted(penalties)]])

    # (6) rewards and metrics
    rewards = []
    for s in state.enterprises:
        u = enterprise_utility(s, t, cfg)
        rewards.append(u - s.utility_prev)
        s.utility_prev = u
        state.reward_sums[s.agent] += rewards[-1]
    gov_reward = None
    if is_gov or final:
        metrics = welfare_metrics(state.enterprises, cfg)
        gov_reward = metrics.swf - state.swf_prev
        state.swf_prev = metrics.swf
        state.gov_reward_sum += gov_reward
        events.append(["metrics", t, metrics.prod, metrics.eq, metrics.ee,
                       metrics.swf, gov_reward])
    events.append(["rewards", t, rewards])
    events.append([
        "audit", t,
        sum(s.coins for s in state.enterprises),
        state.book.total_escrow_coins(),
        sum(s.credits for s in state.enterprises),
        state.book.total_escrow_credits(),
    ])

    state.t = t + 1
    return events


def _apply_enterprise_action(state: SimState, agent: int, action: int,
                             events: list) -> bool:
    """Apply one enterprise action; returns True when emission levels changed."""
    cfg = state.cfg
    t = state.t
    s = state.enterprises[agent]
    levels = cfg.trade_price_levels
    if action == act.NOOP:
        return False
    if act.MOVE_BASE <= action < act.MOVE_BASE + 4:
        direction = DIRECTION_NAMES[action - act.MOVE_BASE]
        result = state.grid.try_move(agent, direction)
        if result.kind == "project" and s.coins < cfg.project_coin_cost:
            result = result._replace(kind="blocked")  # unaffordable entry blocks
        if result.kind == "project":
            pos = result.pos
            detail = apply_enter_project(s, cfg)
            state.grid.complete_project(pos)
            state.incomplete_projects.remove(pos)
            state.n_projects_complete += 1
            events.append(["act", t, agent, action, "project",
                           list(pos), detail["cost"], detail["reward"]])
            return True
        if result.kind == "moved":
            s.position = result.pos
        s.labor += cfg.labor_costs["move"]
        events.append(["act", t, agent, action, result.kind,
                       list(result.pos) if result.pos else None])
        return False
    if action == act.PRODUCE:
        if state.grid.cell(*s.position).kind != EMPTY:
            raise IllegalActionError(f"agent {agent}: produce on a non-empty cell")
        detail = apply_produce(s, state.grid, cfg, state.rng_pollution)
        events.append(["act", t, agent, action, "produce", detail["income"],
                       detail["burn"], detail["shortfall"],
                       [list(p) for p in detail["polluted"]]])
        return False
    if action == act.INVEST:
        if s.coins <= 0.0:
            raise IllegalActionError(f"agent {agent}: invest without positive coins")
        detail = apply_invest(s, t, cfg, state.rng_invest)
        events.append(["act", t, agent, action, "invest",
                       detail["cost"], detail["success"]])
        return False
    if act.BID_BASE <= action < act.BID_BASE + 2 * levels:
        is_bid = action < act.BID_BASE + levels
        price = (action - act.BID_BASE) % levels + 1
        side = BID if is_bid else ASK
        order, reason, trades = state.book.submit_order(
            agent, side, price, t, state.states_by_id, state.period)
        if reason is not None:
            raise IllegalActionError(f"agent {agent}: {side} rejected: {reason}")
        s.labor += cfg.labor_costs["trade"]
        events.append(["act", t, agent, action, side, price, order.id])
        for trade in trades:
            events.append(["trade", t, trade.buyer, trade.seller, trade.price])
        return False
    raise IllegalActionError(f"agent {agent}: action {action} out of range")


def run_episode(cfg: SimConfig, gov_policy, ent_policy, seed: int,
                gov_name: str = "custom", ent_name: str = "custom") -> EpisodeTrace:
    """Roll a full episode under callable policies and return its trace.

    gov_policy(GovernmentObservation) -> GovernmentAction, queried at period
    starts; ent_policy(EnterpriseObservation, RngStream) -> action index.
    """
    state = new_episode(cfg, seed)
    trace = EpisodeTrace(header=make_header(cfg, seed, gov_name, ent_name))
    horizon = cfg.horizon
    spp = cfg.steps_per_period
    n = cfg.n_enterprises
    while state.t < horizon:
        if state.t % spp == 0:
            gov_action = gov_policy(observe_government(state))
            events = step(state, gov_action, {})
        else:
            shared = _shared_obs(state)
            ent_actions = {}
            for i in range(n):
                obs = observe_enterprise(state, i, shared)
                ent_actions[i] = ent_policy(obs, state.rng_policy[i])
            events = step(state, None, ent_actions)
        trace.events.extend(events)
    trace.summary = _summarize(state)
    return trace


def _summarize(state: SimState) -> dict:
    cfg = state.cfg
    metrics = welfare_metrics(state.enterprises, cfg)
    return {
        "final_metrics": {"prod": metrics.prod, "eq": metrics.eq,
                          "ee": metrics.ee, "swf": metrics.swf},
        "per_enterprise": [
            {
                "id": s.agent,
                "size": s.skills.size,
                "research": s.skills.research,
                "coins": s.coins,
                "credits": s.credits,
                "emission_level": s.emission_level,
                "labor": s.labor,
                "excess_record": s.excess_record,
                "utility": s.utility_prev,
                "reward_sum": state.reward_sums[s.agent],
                "invest_actions": s.total_invest_actions,
                "properties": s.total_properties,
                "projects_built": s.total_projects_built,
                "emissions": s.total_emissions,
            }
            for s in state.enterprises
        ],
        "gov_reward_sum": state.gov_reward_sum,
        "trade_count": len(state.book.trades),
        "property_count": state.grid.n_properties,
        "projects_placed": state.grid.n_projects,
        "projects_completed": state.n_projects_complete,
        "invest_count": sum(s.total_invest_actions for s in state.enterprises),
        "cumulative_emissions": sum(s.total_emissions for s in state.enterprises),
        "excess_emissions": sum(s.excess_record for s in state.enterprises),
        "wasted_credits": state.wasted_credits,
        "remaining_budget": state.remaining_budget,
        "grid_rle": state.grid.rle_snapshot(),
    }


def run_named(cfg: SimConfig, gov_name: str, ent_name: str, seed: int,
              punishment: float | None = None) -> EpisodeTrace:
    """Run an episode with policies resolved by name (used by CLI and replay)."""
    from . import policies  # late import: policies builds on engine observations

    gov = policies.resolve_government(gov_name, cfg, punishment)
    ent = policies.resolve_enterprise(ent_name)
    trace = run_episode(cfg, gov, ent, seed, gov_name, ent_name)
    if punishment is not None:
        trace.header["punishment"] = punishment
    return trace


def replay(header: dict) -> EpisodeTrace:
    """Regenerate the trace a header describes; raises on version/hash mismatch."""
    from .trace import header_config

    cfg = header_config(header)
    return run_named(cfg, header["gov_policy"], header["ent_policy"],
                     header["seed"], header.get("punishment"))
