"""Self-check of the false-rejection count on data where every projection is null.

Each trial draws a null pair with ``dims`` identically distributed columns,
tests the full identity pairing and all of its arity-3 projections, and
counts how many projections are rejected.  Under a valid test the count is
Binomial(C(dims, 3), alpha).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Optional

from .model import PairSet, subsets_of_arity
from .search import (
    SearchConfig,
    State,
    VerdictStore,
    adjudicate_level,
    infer_acceptances,
)
from .stats import TestConfig, binomial_tail
from .synth import ScenarioSpec, gen_null_pair


@dataclass
class TrialResult:
    seed: int
    observed: int
    tail: float
    full_accepted: bool
    full_p_value: float
    anomalies: int
    violations: int
    in_band: bool


@dataclass
class ValidationSummary:
    dims: int
    arity: int
    rows: int
    alpha: float
    permutations: int
    n_projections: int
    expected: float
    sd: float
    band: tuple[float, float]
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def mean_observed(self) -> float:
        return sum(t.observed for t in self.trials) / len(self.trials)

    @property
    def violations(self) -> int:
        return sum(t.violations for t in self.trials)

    @property
    def passed(self) -> bool:
        lo, hi = self.band
        return lo <= self.mean_observed <= hi

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band"] = list(self.band)
        d["mean_observed"] = self.mean_observed
        d["violations"] = self.violations
        d["passed"] = self.passed
        return d


def run_trial(
    seed: int,
    rows: int,
    dims: int,
    arity: int,
    test_cfg: TestConfig,
    search_cfg: SearchConfig,
    threads: Optional[int] = None,
) -> tuple[TrialResult, VerdictStore]:
    left, right = gen_null_pair(ScenarioSpec(rows=rows, seed=seed, family="gauss-iid", dims=dims))
    full = PairSet(tuple((j, j) for j in range(dims)))
    projections = subsets_of_arity(full, arity)

    store = VerdictStore()
    adjudicate_level([full], left, right, test_cfg, search_cfg, store, threads)
    adjudicate_level(projections, left, right, test_cfg, search_cfg, store, threads)
    rejected = [p for p in projections if store.state(p) is State.REJECTED_DIRECT]

    anomalies = infer_acceptances(store)
    full_accepted = store.state(full) is State.ACCEPTED_DIRECT

    # a rejected projection of an accepted candidate must stay rejected and be reported
    flagged = {a.candidate for a in anomalies if a.accepted_generalization == full}
    violations = 0
    if full_accepted:
        violations += sum(p not in flagged for p in rejected)
    violations += sum(store.state(p) is not State.REJECTED_DIRECT for p in rejected)
    violations += sum(p not in rejected for p in flagged)

    n = len(projections)
    tail = binomial_tail(n, test_cfg.alpha, len(rejected))
    result = TrialResult(
        seed=seed,
        observed=len(rejected),
        tail=tail,
        full_accepted=full_accepted,
        full_p_value=store[full].outcome.p_value,
        anomalies=len(anomalies),
        violations=violations,
        in_band=False,
    )
    return result, store


def acceptance_band(expected: float) -> tuple[float, float]:
    # half the expectation either side; for 120 projections at 0.1 this is [6, 18]
    return 0.5 * expected, 1.5 * expected


def run_validation(
    trials: int = 5,
    rows: int = 200,
    dims: int = 10,
    alpha: float = 0.1,
    permutations: int = 99,
    seed: int = 0,
    arity: int = 3,
    threads: Optional[int] = None,
) -> ValidationSummary:
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 1 <= arity < dims:
        raise ValueError(f"arity must lie in [1, {dims - 1}]")
    n = comb(dims, arity)
    expected = n * alpha
    band = acceptance_band(expected)
    summary = ValidationSummary(
        dims=dims,
        arity=arity,
        rows=rows,
        alpha=alpha,
        permutations=permutations,
        n_projections=n,
        expected=expected,
        sd=math.sqrt(n * alpha * (1 - alpha)),
        band=band,
    )
    search_cfg = SearchConfig(alpha=alpha, max_arity=dims, max_rows=max(rows, 1))
    for t in range(trials):
        trial_seed = seed + t
        test_cfg = TestConfig(alpha=alpha, permutations=permutations, master_seed=trial_seed)
        result, _ = run_trial(trial_seed, rows, dims, arity, test_cfg, search_cfg, threads)
        result.in_band = band[0] <= result.observed <= band[1]
        summary.trials.append(result)
    return summary

