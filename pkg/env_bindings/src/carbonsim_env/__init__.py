"""Gym-style multi-agent environment bindings for the carbonsim simulator."""

from .env import (
    GOV,
    EnvError,
    EnvHandle,
    SpaceDescriptor,
    close,
    make_env,
    reset,
    spaces,
    step,
)

__all__ = [
    "GOV",
    "EnvError",
    "EnvHandle",
    "SpaceDescriptor",
    "close",
    "make_env",
    "reset",
    "spaces",
    "step",
]
