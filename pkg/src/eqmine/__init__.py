"""Discover identically distributed attribute sets across two numeric relations."""

from .ingest import CandidateView, Relation, candidate_view, load_relation, write_relation
from .model import PairSet, canonicalize, specializes, subsets_of_arity
from .search import (
    DiscoveryReport,
    SearchConfig,
    State,
    Verdict,
    VerdictStore,
    discover,
    extract_maximal,
    infer_acceptances,
)
from .stats import (
    TestConfig,
    TestOutcome,
    binomial_tail,
    energy_statistic,
    ks_pvalue,
    ks_statistic,
    permutation_pvalue,
    test_candidate,
    wilcoxon_ranksum,
)

__version__ = "0.1.0"
