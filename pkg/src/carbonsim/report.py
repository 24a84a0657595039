"""Aggregate trace files into report tables and static charts.

Every report number is a pure function of the trace files: summaries are
used directly, and tests recompute them from raw events to guard against
drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .trace import EpisodeTrace, load_trace

REPORT_COLUMNS = (
    "swf", "prod", "eq", "cumulative_emissions", "excess_emissions",
    "trade_count", "property_count", "project_count", "invest_count",
)


class ReportError(ValueError):
    pass


def trace_row(trace: EpisodeTrace) -> dict[str, float]:
    s = trace.summary
    m = s["final_metrics"]
    return {
        "swf": m["swf"],
        "prod": m["prod"],
        "eq": m["eq"],
        "cumulative_emissions": s["cumulative_emissions"],
        "excess_emissions": s["excess_emissions"],
        "trade_count": s["trade_count"],
        "property_count": s["property_count"],
        "project_count": s["projects_completed"],
        "invest_count": s["invest_count"],
    }


def recompute_row(trace: EpisodeTrace) -> dict[str, float]:
    """Rebuild the report quantities from raw events (the summary oracle)."""
    row = dict.fromkeys(REPORT_COLUMNS, 0.0)
    for event in trace.events:
        kind = event[0]
        if kind == "act":
            verb = event[4]
            if verb == "produce":
                row["cumulative_emissions"] += event[6]
                row["excess_emissions"] += event[7]
                row["property_count"] += 1
            elif verb == "invest":
                row["invest_count"] += 1
            elif verb == "project":
                row["project_count"] += 1
        elif kind == "trade":
            row["trade_count"] += 1
        elif kind == "metrics":
            row["prod"], row["eq"], _, row["swf"] = event[2:6]
    return row


@dataclass
class ReportTable:
    rows: list[dict]  # one per policy group: name, n, mean/std per column

    def sorted_by_swf(self) -> list[dict]:
        return sorted(self.rows, key=lambda r: -r["swf_mean"])

    def to_text(self) -> str:
        cols = ["policy", "n"] + [f"{c}" for c in REPORT_COLUMNS]
        lines = ["\t".join(cols)]
        for row in self.sorted_by_swf():
            cells = [row["policy"], str(row["n"])]
            cells += [f"{row[c + '_mean']:.4g}±{row[c + '_std']:.3g}" for c in REPORT_COLUMNS]
            lines.append("\t".join(cells))
        return "\n".join(lines)

    def to_csv(self) -> str:
        cols = ["policy", "n"]
        for c in REPORT_COLUMNS:
            cols += [f"{c}_mean", f"{c}_std"]
        lines = [",".join(cols)]
        for row in self.sorted_by_swf():
            cells = [row["policy"], str(row["n"])]
            for c in REPORT_COLUMNS:
                cells += [repr(row[f"{c}_mean"]), repr(row[f"{c}_std"])]
            lines.append(",".join(cells))
        return "\n".join(lines)


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def group_key(trace: EpisodeTrace) -> str:
    header = trace.header
    name = f"{header['gov_policy']}/{header['ent_policy']}"
    if "punishment" in header:
        name += f"/p={header['punishment']:g}"
    return name


def build_report(traces: list[EpisodeTrace]) -> ReportTable:
    if not traces:
        raise ReportError("no traces to report on")
    groups: dict[str, list[EpisodeTrace]] = {}
    for trace in traces:
        groups.setdefault(group_key(trace), []).append(trace)
    rows = []
    for name, members in sorted(groups.items()):
        hashes = {t.header["config_hash"] for t in members}
        if len(hashes) > 1:
            raise ReportError(f"group {name!r} mixes different configs")
        values = [trace_row(t) for t in members]
        row: dict = {"policy": name, "n": len(members)}
        for col in REPORT_COLUMNS:
            mean, std = _mean_std([v[col] for v in values])
            row[f"{col}_mean"] = mean
            row[f"{col}_std"] = std
        rows.append(row)
    return ReportTable(rows)


def load_traces(directory) -> list[EpisodeTrace]:
    paths = sorted(Path(directory).glob("*.trace.jsonl"))
    if not paths:
        raise ReportError(f"no *.trace.jsonl files under {directory}")
    return [load_trace(p) for p in paths]


def write_charts(table: ReportTable, out_dir) -> list[str]:
    """Static bar charts of the headline quantities, one PNG per column."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rows = table.sorted_by_swf()
    names = [r["policy"] for r in rows]
    for col in REPORT_COLUMNS:
        fig, ax = plt.subplots(figsize=(max(4, len(names) * 0.9), 3.2))
        means = [r[f"{col}_mean"] for r in rows]
        stds = [r[f"{col}_std"] for r in rows]
        ax.bar(range(len(names)), means, yerr=stds, capsize=3)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
        ax.set_ylabel(col)
        fig.tight_layout()
        path = out / f"{col}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))
    return written
