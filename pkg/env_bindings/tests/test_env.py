import numpy as np
import pytest

from carbonsim.config import ConfigError, SimConfig, save_config
from carbonsim.engine import run_episode
from carbonsim.policies import resolve_enterprise, resolve_government

from carbonsim_env import GOV, EnvError, close, make_env, reset, spaces, step

SMALL = SimConfig().with_overrides(n_periods=2, steps_per_period=10, order_lifetime=5)
SMALL_TEXT = save_config(SMALL)
ALL_AGENTS = [GOV, 0, 1, 2, 3, 4]


def record_native(cfg, seed):
    """Run the native engine with recording wrappers around the scripted
    policies; returns (trace, gov action list, {(t, agent): action})."""
    gov_base = resolve_government("flatxsi", cfg)
    ent_base = resolve_enterprise("scripted")
    gov_actions = []
    ent_actions = {}

    def gov_rec(obs):
        a = gov_base(obs)
        gov_actions.append(a.raw)
        return a

    def ent_rec(obs, rng):
        a = ent_base(obs, rng)
        ent_actions[(obs.t, obs.agent)] = a
        return a

    trace = run_episode(cfg, gov_rec, ent_rec, seed, "flatxsi", "scripted")
    return trace, gov_actions, ent_actions


def drive(cfg_text, cfg, seed, gov_actions, ent_actions):
    """Feed recorded actions through the bindings; returns (final info,
    per-agent reward sums)."""
    handle = make_env(cfg_text, controlled=ALL_AGENTS)
    reset(handle, seed)
    reward_sums = {a: 0.0 for a in ALL_AGENTS}
    gi = 0
    info = {}
    terminated = False
    while not terminated:
        t = handle.state.t
        if t % cfg.steps_per_period == 0:
            actions = {GOV: gov_actions[gi]}
            gi += 1
        else:
            actions = {i: ent_actions.get((t, i), 0) for i in range(cfg.n_enterprises)}
        _, rewards, term, info = step(handle, actions)
        for a, r in rewards.items():
            reward_sums[a] += r
        terminated = term["__all__"]
    assert gi == len(gov_actions)
    return info, reward_sums


# ------------------------------------------------------- equivalence oracle

def test_action_replay_matches_native_digests_50_seeds():
    """Feeding the native scripted policies' recorded actions through the
    bindings reproduces the native trace digest exactly, for 50 seeds."""
    for seed in range(50):
        native, gov_actions, ent_actions = record_native(SMALL, seed)
        info, _ = drive(SMALL_TEXT, SMALL, seed, gov_actions, ent_actions)
        assert info["trace_digest"] == native.digest(), f"seed {seed}"


def test_action_replay_default_config():
    cfg = SimConfig()
    native, gov_actions, ent_actions = record_native(cfg, 7)
    info, _ = drive(None, cfg, 7, gov_actions, ent_actions)
    assert info["trace_digest"] == native.digest()


def test_rewards_telescope_through_boundary():
    native, gov_actions, ent_actions = record_native(SMALL, 3)
    info, reward_sums = drive(SMALL_TEXT, SMALL, 3, gov_actions, ent_actions)
    summary = info["summary"]
    for i, ent in enumerate(summary["per_enterprise"]):
        assert reward_sums[i] == pytest.approx(ent["utility"], abs=1e-9)
    assert reward_sums[GOV] == pytest.approx(summary["final_metrics"]["swf"], abs=1e-9)


# ------------------------------------------------------------------- shapes

def test_observation_shapes_match_space_descriptor():
    handle = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    desc = spaces(handle)  # queryable before reset
    assert desc[0].action == {"kind": "discrete", "n": 27}
    assert desc[GOV].action == {"kind": "multi_discrete", "dims": 7, "levels": 101}
    obs = reset(handle, 0)
    assert set(obs) == {GOV}  # government acts first
    assert obs[GOV]["features"].shape == desc[GOV].observation["features"]
    obs, _, _, _ = step(handle, {GOV: (50, 1, 1, 1, 1, 1, 50)})
    assert set(obs) == {0, 1, 2, 3, 4}
    for i in range(5):
        for name, shape in desc[i].observation.items():
            arr = obs[i][name]
            assert arr.shape == shape, (i, name)
            assert isinstance(arr, np.ndarray)
    assert obs[0]["local_map"].shape == (SMALL.obs_window, SMALL.obs_window, 3)
    assert obs[0]["action_mask"].dtype == bool


def test_reset_deterministic_observation_bytes():
    a = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    b = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    reset(a, 11)
    oa = step(a, {GOV: (50, 1, 1, 1, 1, 1, 0)})[0]
    reset(b, 11)
    ob = step(b, {GOV: (50, 1, 1, 1, 1, 1, 0)})[0]
    for i in range(5):
        for name in oa[i]:
            assert oa[i][name].tobytes() == ob[i][name].tobytes()


# ----------------------------------------------------------- turn structure

def test_government_observation_only_at_period_starts():
    handle = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    obs = reset(handle, 1)
    for t in range(SMALL.horizon):
        if t % SMALL.steps_per_period == 0:
            assert set(obs) == {GOV}, t
            obs, _, term, _ = step(handle, {GOV: (50, 1, 1, 1, 1, 1, 0)})
        else:
            assert GOV not in obs and set(obs) == {0, 1, 2, 3, 4}, t
            obs, _, term, _ = step(handle, {})  # missing entries -> no-op
    assert term["__all__"]
    assert obs == {}


def test_uncontrolled_agents_run_scripted():
    handle = make_env(SMALL_TEXT, controlled=[GOV])
    obs = reset(handle, 2)
    assert set(obs) == {GOV}
    terminated = False
    steps = 0
    while not terminated:
        t = handle.state.t
        actions = {GOV: (50, 1, 1, 1, 1, 1, 0)} if t % SMALL.steps_per_period == 0 else {}
        obs, rewards, term, info = step(handle, actions)
        assert set(rewards) == {GOV}
        terminated = term["__all__"]
        steps += 1
    assert steps == SMALL.horizon
    assert info["summary"]["property_count"] > 0  # scripted enterprises acted


def test_fully_scripted_env():
    handle = make_env(SMALL_TEXT, controlled=[])
    assert reset(handle, 0) == {}
    for _ in range(SMALL.horizon):
        _, rewards, term, info = step(handle, {})
    assert rewards == {} and term == {"__all__": True}
    assert "trace_digest" in info


# ------------------------------------------------------------------- errors

def test_terminated_exactly_at_horizon():
    handle = make_env(SMALL_TEXT, controlled=[])
    reset(handle, 0)
    for t in range(SMALL.horizon):
        _, _, term, _ = step(handle, {})
        assert term["__all__"] == (t == SMALL.horizon - 1)
    with pytest.raises(EnvError, match="terminated"):
        step(handle, {})


def test_step_before_reset():
    handle = make_env(SMALL_TEXT, controlled=[])
    with pytest.raises(EnvError, match="reset"):
        step(handle, {})


def test_missing_government_action_errors():
    handle = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    reset(handle, 0)
    with pytest.raises(EnvError, match="government action required"):
        step(handle, {})


def test_illegal_action_surfaces_engine_error():
    from carbonsim.engine import IllegalActionError

    handle = make_env(SMALL_TEXT, controlled=ALL_AGENTS)
    reset(handle, 0)
    step(handle, {GOV: (50, 1, 1, 1, 1, 1, 0)})
    with pytest.raises(IllegalActionError):
        step(handle, {0: 6})  # invest with zero coins


def test_invalid_config_carries_native_message():
    with pytest.raises(ConfigError, match="eta"):
        make_env('{"eta": 2.0}')


def test_unknown_controlled_agent():
    with pytest.raises(EnvError, match="unknown agent"):
        make_env(None, controlled=["mayor"])


def test_close():
    handle = make_env(SMALL_TEXT, controlled=[])
    reset(handle, 0)
    close(handle)
    with pytest.raises(EnvError, match="closed"):
        step(handle, {})
    with pytest.raises(EnvError, match="closed"):
        reset(handle, 0)


def test_handles_are_independent():
    a = make_env(SMALL_TEXT, controlled=[])
    b = make_env(SMALL_TEXT, controlled=[])
    reset(a, 0)
    reset(b, 0)
    step(a, {})
    assert a.state.t == 1 and b.state.t == 0
