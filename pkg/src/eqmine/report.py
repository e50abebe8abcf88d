"""JSON layout of a discovery report.

Pairs are written with column names; reading a report back maps them to
indices through the ``columns`` block, so ``from_dict(to_dict(r)) == r``.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any

from .model import PairSet, canonicalize
from .search import Anomaly, AuditEntry, DiscoveryReport, LevelTally, MaximalEntry
from .stats import TestOutcome


def _pairs_out(p: PairSet, columns: dict) -> list[dict]:
    return [{"left": columns["left"][a], "right": columns["right"][b]} for a, b in p]


def _pairs_in(items: list[dict], columns: dict) -> PairSet:
    return canonicalize(
        (columns["left"].index(d["left"]), columns["right"].index(d["right"])) for d in items
    )


def to_dict(report: DiscoveryReport) -> dict[str, Any]:
    cols = report.columns
    return {
        "config": report.config,
        "columns": {"left": list(cols["left"]), "right": list(cols["right"])},
        "levels": [
            {
                "arity": t.arity,
                "generated": t.generated,
                "tested": t.tested,
                "accepted": t.accepted,
                "rejected": t.rejected,
                "pruned": t.pruned,
                "skipped": t.skipped,
            }
            for t in report.levels
        ],
        "maximal": [
            {"pairs": _pairs_out(m.candidate, cols), "statistic": m.statistic, "p_value": m.p_value}
            for m in report.maximal
        ],
        "anomalies": [
            {
                "pairs": _pairs_out(a.candidate, cols),
                "p_value": a.outcome.p_value,
                "outcome": a.outcome.to_dict(),
                "accepted_generalization": _pairs_out(a.accepted_generalization, cols),
            }
            for a in report.anomalies
        ],
        "audit": [
            {
                "pairs": _pairs_out(e.candidate, cols),
                "arity_k": e.arity_k,
                "n_projections": e.n_projections,
                "observed": e.observed,
                "expected": e.expected,
                "tail": e.tail,
                "consistent": e.consistent,
            }
            for e in report.audit
        ],
        "runtime_ms": report.runtime_ms,
    }


def from_dict(d: dict[str, Any]) -> DiscoveryReport:
    cols = {"left": list(d["columns"]["left"]), "right": list(d["columns"]["right"])}
    return DiscoveryReport(
        config=d["config"],
        columns=cols,
        levels=[LevelTally(**t) for t in d["levels"]],
        maximal=[
            MaximalEntry(_pairs_in(m["pairs"], cols), m["statistic"], m["p_value"])
            for m in d["maximal"]
        ],
        anomalies=[
            Anomaly(
                _pairs_in(a["pairs"], cols),
                TestOutcome.from_dict(a["outcome"]),
                _pairs_in(a["accepted_generalization"], cols),
            )
            for a in d["anomalies"]
        ],
        audit=[
            AuditEntry(
                _pairs_in(e["pairs"], cols),
                e["arity_k"],
                e["n_projections"],
                e["observed"],
                e["expected"],
                e["tail"],
                e["consistent"],
            )
            for e in d["audit"]
        ],
        runtime_ms=d["runtime_ms"],
    )


def dumps(report: DiscoveryReport) -> str:
    return json.dumps(to_dict(report), indent=2)


def loads(text: str) -> DiscoveryReport:
    return from_dict(json.loads(text))


def write_atomic(text: str, path: str | os.PathLike) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".eqmine-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
