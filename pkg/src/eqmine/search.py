"""Level-wise discovery of maximal identically distributed pairings.

Acceptance flows downward: if a candidate is not rejected, none of its
projections should be either, so they are marked accepted without testing.
Rejection does not flow upward.  A rejected projection may be a type-I
error, so supersets are only dropped when their count of rejected
projections is implausible under the test's significance level (a binomial
budget).  Directly rejected projections of accepted candidates are kept and
reported as anomalies.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from math import comb
from typing import Iterable, Iterator, Optional

from .ingest import EmptyAfterFilteringError, Relation, candidate_view
from .model import PairSet, canonicalize, is_valid, proper_subsets, specializes, subsets_of_arity
from .stats import TestConfig, TestOutcome, binomial_tail, derive_seed, test_candidate

log = logging.getLogger(__name__)


class State(str, Enum):
    UNTESTED = "untested"
    ACCEPTED_DIRECT = "accepted_direct"
    REJECTED_DIRECT = "rejected_direct"
    ACCEPTED_INFERRED = "accepted_inferred"
    PRUNED_BUDGET = "pruned_budget"
    SKIPPED = "skipped"


DIRECT = (State.ACCEPTED_DIRECT, State.REJECTED_DIRECT)


@dataclass(frozen=True)
class Verdict:
    state: State
    outcome: Optional[TestOutcome] = None
    inferred_from: Optional[PairSet] = None
    reason: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.state in DIRECT) != (self.outcome is not None):
            raise ValueError(f"{self.state.value} verdicts carry an outcome iff direct")
        if (self.state is State.ACCEPTED_INFERRED) != (self.inferred_from is not None):
            raise ValueError("inferred_from is set exactly for inferred acceptances")


@dataclass(frozen=True)
class SearchConfig:
    max_arity: int = 4
    budget_beta: float = 0.01
    hard_apriori: bool = False
    alpha: float = 0.05
    include_identity_pairs: bool = False
    max_rows: int = 2000

    def __post_init__(self) -> None:
        if self.max_arity < 1:
            raise ValueError("max_arity must be at least 1")
        # 0 disables budget pruning entirely
        if not 0.0 <= self.budget_beta < 1.0:
            raise ValueError(f"budget_beta must lie in [0, 1), got {self.budget_beta}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_rows < 1:
            raise ValueError("max_rows must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class VerdictStore:
    """Verdicts keyed by canonical candidate."""

    def __init__(self) -> None:
        self._verdicts: dict[PairSet, Verdict] = {}

    def __contains__(self, p: PairSet) -> bool:
        return p in self._verdicts

    def __getitem__(self, p: PairSet) -> Verdict:
        return self._verdicts[p]

    def __len__(self) -> int:
        return len(self._verdicts)

    def __iter__(self) -> Iterator[PairSet]:
        return iter(self._verdicts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VerdictStore):
            return NotImplemented
        return self._verdicts == other._verdicts

    def state(self, p: PairSet) -> State:
        v = self._verdicts.get(p)
        return State.UNTESTED if v is None else v.state

    def set(self, p: PairSet, verdict: Verdict) -> None:
        self._verdicts[p] = verdict

    def items(self) -> Iterable[tuple[PairSet, Verdict]]:
        return self._verdicts.items()

    def with_state(self, *states: State) -> list[PairSet]:
        return sorted(p for p, v in self._verdicts.items() if v.state in states)

    def at_arity(self, k: int, *states: State) -> list[PairSet]:
        return sorted(
            p
            for p, v in self._verdicts.items()
            if p.arity == k and (not states or v.state in states)
        )


@dataclass(frozen=True)
class LevelTally:
    arity: int
    generated: int = 0
    tested: int = 0
    accepted: int = 0
    rejected: int = 0
    pruned: int = 0
    skipped: int = 0


@dataclass(frozen=True)
class Anomaly:
    """A directly rejected candidate with a directly accepted generalization."""

    candidate: PairSet
    outcome: TestOutcome
    accepted_generalization: PairSet


@dataclass(frozen=True)
class AuditEntry:
    candidate: PairSet
    arity_k: int
    n_projections: int
    observed: int
    expected: float
    tail: float
    consistent: bool


@dataclass(frozen=True)
class MaximalEntry:
    candidate: PairSet
    statistic: float
    p_value: float


@dataclass
class DiscoveryReport:
    config: dict
    columns: dict
    levels: list[LevelTally]
    maximal: list[MaximalEntry]
    anomalies: list[Anomaly]
    audit: list[AuditEntry]
    runtime_ms: float
    store: VerdictStore = field(default_factory=VerdictStore, compare=False, repr=False)


def same_relation(left: Relation, right: Relation) -> bool:
    if left is right:
        return True
    return left.source is not None and left.source == right.source


def level_one_candidates(
    left: Relation, right: Relation, cfg: SearchConfig, same: Optional[bool] = None
) -> list[PairSet]:
    """Every unary pairing of a numeric left column with a numeric right column."""
    if same is None:
        same = same_relation(left, right)
    out = []
    for a in left.numeric_columns():
        for b in right.numeric_columns():
            p = PairSet(((a, b),))
            if is_valid(p, same, cfg.include_identity_pairs):
                out.append(p)
    return out


@dataclass(frozen=True)
class NextLevel:
    candidates: list[PairSet]
    pruned: list[PairSet]

    @property
    def generated(self) -> int:
        return len(self.candidates) + len(self.pruned)


def count_doubtful(store: VerdictStore, p: PairSet) -> int:
    """Immediate projections of ``p`` that were rejected, pruned, or never reached."""
    r = 0
    for s in subsets_of_arity(p, p.arity - 1):
        if store.state(s) in (State.REJECTED_DIRECT, State.PRUNED_BUDGET, State.UNTESTED):
            r += 1
    return r


def passes_budget(store: VerdictStore, p: PairSet, cfg: SearchConfig) -> bool:
    r = count_doubtful(store, p)
    if cfg.hard_apriori:
        return r == 0
    return binomial_tail(p.arity, cfg.alpha, r) >= cfg.budget_beta


def generate_next_level(store: VerdictStore, k: int, cfg: SearchConfig) -> NextLevel:
    """Join arity-``k`` candidates into arity-``k+1`` ones and apply the budget.

    A new candidate is the union of two joinable arity-``k`` candidates.
    Directly tested candidates are joinable; in hard apriori mode only
    accepted ones are.  The unary candidates in the store bound which pairs
    may be added, so identity exclusion carries over.
    """
    joinable_states = (
        (State.ACCEPTED_DIRECT,) if cfg.hard_apriori else DIRECT
    )
    frontier = store.at_arity(k, *joinable_states)
    frontier_set = set(frontier)
    unary = [p.pairs[0] for p in store.at_arity(1)]

    seen: set[PairSet] = set()
    for c in frontier:
        lefts, rights = set(c.lefts), set(c.rights)
        for pair in unary:
            if pair[0] in lefts or pair[1] in rights:
                continue
            new = canonicalize(c.pairs + (pair,))
            if new in seen:
                continue
            # new must also be c's union with another joinable candidate,
            # i.e. one of the projections that keep the added pair
            partners = (
                PairSet(tuple(q for q in new.pairs if q != drop)) for drop in c.pairs
            )
            if any(s in frontier_set for s in partners):
                seen.add(new)

    kept, pruned = [], []
    for p in sorted(seen):
        (kept if passes_budget(store, p, cfg) else pruned).append(p)
    return NextLevel(kept, pruned)


def _adjudicate_one(
    p: PairSet, left: Relation, right: Relation, test_cfg: TestConfig, max_rows: int
) -> Verdict:
    try:
        view = candidate_view(
            left, right, p, max_rows, derive_seed(test_cfg.master_seed, p, "rows")
        )
    except EmptyAfterFilteringError as exc:
        return Verdict(State.SKIPPED, reason=str(exc))
    outcome = test_candidate(view, p, test_cfg)
    state = State.REJECTED_DIRECT if outcome.rejected else State.ACCEPTED_DIRECT
    return Verdict(state, outcome)


def _thread_count(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("EQMINE_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, threads)


def adjudicate_level(
    candidates: list[PairSet],
    left: Relation,
    right: Relation,
    test_cfg: TestConfig,
    search_cfg: SearchConfig,
    store: VerdictStore,
    threads: Optional[int] = None,
) -> VerdictStore:
    """Test every candidate and record the verdicts in ``store``.

    Candidates are tested concurrently; results are merged in candidate
    order once all are done.  Candidates with no complete rows are recorded
    as skipped.
    """
    workers = min(_thread_count(threads), max(1, len(candidates)))
    args = (left, right, test_cfg, search_cfg.max_rows)
    if workers == 1:
        verdicts = [_adjudicate_one(p, *args) for p in candidates]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda p: _adjudicate_one(p, *args), candidates))
    for p, v in zip(candidates, verdicts):
        store.set(p, v)
    return store


def _minimal_generalization(p: PairSet, accepted: list[PairSet]) -> Optional[PairSet]:
    best = None
    for g in accepted:
        if specializes(p, g) and (best is None or (g.arity, g) < (best.arity, best)):
            best = g
    return best


def infer_acceptances(store: VerdictStore) -> list[Anomaly]:
    """Propagate direct acceptances to every projection and collect anomalies.

    Untested, absent, and budget-pruned projections of a directly accepted
    candidate become inferred acceptances, pointing at the smallest such
    generalization.  Direct rejections are never overwritten; each
    (rejected projection, accepted generalization) pair is returned as an
    anomaly instead.
    """
    accepted = store.with_state(State.ACCEPTED_DIRECT)
    accepted.sort(key=lambda g: (g.arity, g))
    anomalies = []
    for g in accepted:
        for s in proper_subsets(g):
            st = store.state(s)
            if st is State.REJECTED_DIRECT:
                anomalies.append(Anomaly(s, store[s].outcome, g))
            elif st in (State.UNTESTED, State.PRUNED_BUDGET):
                # accepted is sorted by (arity, pairs): g is the minimal generalization
                store.set(s, Verdict(State.ACCEPTED_INFERRED, inferred_from=g))
    anomalies.sort(key=lambda a: (a.candidate.arity, a.candidate, a.accepted_generalization.arity, a.accepted_generalization))
    return anomalies


def extract_maximal(store: VerdictStore) -> list[PairSet]:
    """Directly accepted candidates with no directly accepted generalization."""
    accepted = store.with_state(State.ACCEPTED_DIRECT)
    maximal = [p for p in accepted if not any(specializes(p, g) for g in accepted)]
    return sorted(maximal, key=lambda p: (-p.arity, p))


def audit_expected_rejections(
    store: VerdictStore, alpha: float, beta: float = 0.01
) -> list[AuditEntry]:
    """Compare rejected projections of accepted candidates with the count α predicts.

    For an accepted candidate of arity at least 3 and each lower arity whose
    projections were all tested directly, the rejections among them should
    look like a Binomial(N, α) draw.  ``consistent`` is False when the upper
    tail falls below ``beta``.
    """
    out = []
    for g in sorted(store.with_state(State.ACCEPTED_DIRECT), key=lambda p: (-p.arity, p)):
        if g.arity < 3:
            continue
        for k in range(1, g.arity):
            subs = subsets_of_arity(g, k)
            states = [store.state(s) for s in subs]
            if not all(st in DIRECT for st in states):
                continue
            observed = sum(st is State.REJECTED_DIRECT for st in states)
            n = comb(g.arity, k)
            tail = binomial_tail(n, alpha, observed)
            out.append(AuditEntry(g, k, n, observed, n * alpha, tail, tail >= beta))
    return out


def discover(
    left: Relation,
    right: Relation,
    test_cfg: TestConfig,
    search_cfg: SearchConfig,
    threads: Optional[int] = None,
) -> DiscoveryReport:
    """Run the full level-wise search and summarize it.

    The budget uses the significance level of ``test_cfg``; the ``alpha`` of
    ``search_cfg`` is overwritten to match.
    """
    started = time.perf_counter()
    search_cfg = replace(search_cfg, alpha=test_cfg.alpha)
    same = same_relation(left, right)
    store = VerdictStore()
    levels = []

    candidates = level_one_candidates(left, right, search_cfg, same)
    generated, pruned = len(candidates), []
    k = 1
    while True:
        log.info("arity %d: testing %d candidates (%d pruned)", k, len(candidates), len(pruned))
        for p in pruned:
            store.set(p, Verdict(State.PRUNED_BUDGET))
        adjudicate_level(candidates, left, right, test_cfg, search_cfg, store, threads)
        states = [store.state(p) for p in candidates]
        acc = sum(s is State.ACCEPTED_DIRECT for s in states)
        rej = sum(s is State.REJECTED_DIRECT for s in states)
        levels.append(
            LevelTally(
                arity=k,
                generated=generated,
                tested=acc + rej,
                accepted=acc,
                rejected=rej,
                pruned=len(pruned),
                skipped=sum(s is State.SKIPPED for s in states),
            )
        )
        if k >= search_cfg.max_arity:
            break
        nxt = generate_next_level(store, k, search_cfg)
        if nxt.generated == 0:
            break
        candidates, pruned, generated = nxt.candidates, nxt.pruned, nxt.generated
        k += 1

    anomalies = infer_acceptances(store)
    maximal = [
        MaximalEntry(p, store[p].outcome.statistic, store[p].outcome.p_value)
        for p in extract_maximal(store)
    ]
    audit = audit_expected_rejections(store, test_cfg.alpha, search_cfg.budget_beta)
    config = {"test": test_cfg.to_dict(), "search": search_cfg.to_dict(), "same_relation": same}
    return DiscoveryReport(
        config=config,
        columns={"left": list(left.column_names), "right": list(right.column_names)},
        levels=levels,
        maximal=maximal,
        anomalies=anomalies,
        audit=audit,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        store=store,
    )
