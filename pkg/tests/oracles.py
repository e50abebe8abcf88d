"""Independent reference implementations shared by the test modules."""

import itertools

from eqmine.ingest import candidate_view
from eqmine.model import canonicalize, is_valid
from eqmine.stats import derive_seed, test_candidate


def brute_force_verdicts(left, right, test_cfg, search_cfg, same):
    """Test every admissible candidate on its own, with no search at all."""
    out = {}
    lefts, rights = range(left.column_count), range(right.column_count)
    for k in range(1, min(len(lefts), len(rights)) + 1):
        for ls in itertools.combinations(lefts, k):
            for rs in itertools.permutations(rights, k):
                p = canonicalize(zip(ls, rs))
                if not is_valid(p, same, search_cfg.include_identity_pairs):
                    continue
                view = candidate_view(
                    left, right, p, search_cfg.max_rows, derive_seed(test_cfg.master_seed, p, "rows")
                )
                out[p] = test_candidate(view, p, test_cfg)
    return out
