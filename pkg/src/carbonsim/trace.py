"""Episode traces: canonical line-delimited serialization, digests, and file IO.

A trace is a header (seed, config, policy names, format version), an ordered
event list, and a summary. Canonical form is one compact sorted-key JSON
document per line; the digest is the SHA-256 of those bytes, which is what
replay verification compares.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .config import FORMAT_VERSION, ConfigError, SimConfig, config_hash, load_config, save_config


def canonical_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class EpisodeTrace:
    header: dict
    events: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [canonical_line({"header": self.header})]
        out.extend(canonical_line(e) for e in self.events)
        out.append(canonical_line({"summary": self.summary}))
        return out

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())


def make_header(cfg: SimConfig, seed: int, gov_policy: str, ent_policy: str) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "config": json.loads(save_config(cfg)),
        "config_hash": config_hash(cfg),
        "gov_policy": gov_policy,
        "ent_policy": ent_policy,
    }


def load_trace(path) -> EpisodeTrace:
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line]
    if len(lines) < 2:
        raise ValueError(f"{path}: truncated trace")
    head = json.loads(lines[0])
    tail = json.loads(lines[-1])
    if "header" not in head:
        raise ValueError(f"{path}: missing header line")
    if "summary" not in tail:
        raise ValueError(f"{path}: missing summary line")
    header = head["header"]
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format_version {version}")
    events = [json.loads(line) for line in lines[1:-1]]
    return EpisodeTrace(header=header, events=events, summary=tail["summary"])


def header_config(header: dict) -> SimConfig:
    cfg = load_config(json.dumps(header["config"]))
    if config_hash(cfg) != header["config_hash"]:
        raise ConfigError("config hash mismatch between header and engine canonical form")
    return cfg


def first_divergence(a: EpisodeTrace, b: EpisodeTrace) -> int | None:
    """Index of the first differing canonical line, or None when identical."""
    la, lb = a.lines(), b.lines()
    for i, (x, y) in enumerate(zip(la, lb)):
        if x != y:
            return i
    if len(la) != len(lb):
        return min(len(la), len(lb))
    return None
