"""Deterministic cap-and-trade carbon-market simulator.

Enterprise agents produce, invest, build certified green projects, and trade
carbon credits in a grid-world economy; a government agent allocates
per-period credit budgets and sets the excess-emission punishment. Episodes
record replayable traces and report productivity, equality, and social
welfare.
"""

from .config import RngStream, SimConfig, derive_stream, load_config, save_config
from .engine import new_episode, replay, run_episode, run_named, step
from .government import GovernmentAction, WelfareMetrics
from .trace import EpisodeTrace, load_trace

__all__ = [
    "EpisodeTrace",
    "GovernmentAction",
    "RngStream",
    "SimConfig",
    "WelfareMetrics",
    "derive_stream",
    "load_config",
    "load_trace",
    "new_episode",
    "replay",
    "run_episode",
    "run_named",
    "save_config",
    "step",
]

__version__ = "0.1.0"
