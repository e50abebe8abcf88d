"""Two-sample tests for equality of (joint) distributions.

Unary candidates use the Kolmogorov-Smirnov test (or the Wilcoxon rank-sum
test on request).  Candidates of arity two or more use the energy distance
with a permutation p-value; the pooled distance matrix is computed once and
every relabeling is scored from it with a matrix product.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.stats import rankdata

from .ingest import CandidateView
from .model import PairSet

UnivariateTest = Literal["ks", "wilcoxon"]
PValueMode = Literal["asymptotic", "permutation"]

_SERIES_CUTOFF = 1e-12
_SERIES_MAX_TERMS = 1_000_000
# relabelings are scored in blocks to bound the size of the label matrix
_PERM_BLOCK = 256


class StatsError(ValueError):
    pass


class EmptySampleError(StatsError):
    pass


class DimensionMismatchError(StatsError):
    pass


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    univariate_test: UnivariateTest = "ks"
    permutations: int = 199
    pvalue_mode_univariate: PValueMode = "asymptotic"
    master_seed: int = 0
    standardize: bool = False  # pooled z-score per column; changes the null

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.permutations < 19:
            raise ValueError(f"need at least 19 permutations, got {self.permutations}")
        if self.univariate_test not in ("ks", "wilcoxon"):
            raise ValueError(f"unknown univariate test {self.univariate_test!r}")
        if self.pvalue_mode_univariate not in ("asymptotic", "permutation"):
            raise ValueError(f"unknown p-value mode {self.pvalue_mode_univariate!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    rejected: bool
    method: str
    effective_rows: tuple[int, int]

    __test__ = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "rejected": self.rejected,
            "method": self.method,
            "effective_rows": list(self.effective_rows),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestOutcome":
        return cls(
            float(d["statistic"]),
            float(d["p_value"]),
            bool(d["rejected"]),
            str(d["method"]),
            (int(d["effective_rows"][0]), int(d["effective_rows"][1])),
        )


def _as_sample(x: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptySampleError("sample is empty")
    return arr


def _as_matrix(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmptySampleError("sample matrix is empty")
    return np.ascontiguousarray(arr)


def ks_statistic(x: Sequence[float], y: Sequence[float]) -> float:
    """Largest gap between the two empirical CDFs.

    Both ECDFs are right-continuous step functions, so the supremum is
    attained at one of the pooled sample points.
    """
    xs = np.sort(_as_sample(x))
    ys = np.sort(_as_sample(y))
    points = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, points, side="right") / xs.size
    fy = np.searchsorted(ys, points, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def ks_pvalue(d: float, n: int, m: int) -> float:
    """Asymptotic two-sided p-value of a two-sample KS statistic.

    Uses the Kolmogorov tail series on ``lam = (sqrt(ne) + 0.12 +
    0.11/sqrt(ne)) * d`` with ``ne = n*m/(n+m)``.
    """
    if n < 1 or m < 1:
        raise EmptySampleError("sample sizes must be positive")
    if d <= 0.0:
        return 1.0
    ne = n * m / (n + m)
    sq = math.sqrt(ne)
    lam = (sq + 0.12 + 0.11 / sq) * d
    if lam < 0.1:
        # the limiting cdf is below 1e-50 here; the series would not converge
        return 1.0
    a = -2.0 * lam * lam
    total = 0.0
    sign = 1.0
    for j in range(1, _SERIES_MAX_TERMS + 1):
        term = math.exp(a * j * j)
        total += sign * term
        if term < _SERIES_CUTOFF:
            break
        sign = -sign
    else:
        return 1.0
    return min(1.0, max(0.0, 2.0 * total))


def wilcoxon_ranksum(
    x: Sequence[float], y: Sequence[float], alpha: float = 0.05
) -> TestOutcome:
    """Wilcoxon rank-sum test, normal approximation with tie-corrected variance.

    The statistic is the rank sum of ``x`` using midranks.  This test only
    sees shifts in location; two samples with equal medians and different
    shapes pass.  When every pooled value is equal the variance vanishes
    and the p-value is 1 by convention.
    """
    xs = _as_sample(x)
    ys = _as_sample(y)
    n, m = xs.size, ys.size
    total = n + m
    ranks = rankdata(np.concatenate([xs, ys]))
    w = float(ranks[:n].sum())
    mean = n * (total + 1) / 2.0

    _, counts = np.unique(np.concatenate([xs, ys]), return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    var = n * m / 12.0 * ((total + 1) - tie_term / (total * (total - 1))) if total > 1 else 0.0

    method = "wilcoxon-ranksum (location-sensitive only)"
    if var <= 0.0:
        return TestOutcome(w, 1.0, False, method + "; degenerate variance", (n, m))
    z = (w - mean) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return TestOutcome(w, p, p < alpha, method, (n, m))


def _energy_from_sums(s_xy: float, s_xx: float, s_yy: float, n: int, m: int) -> float:
    return 2.0 * s_xy / (n * m) - s_xx / (n * n) - s_yy / (m * m)


def energy_statistic(xs, ys) -> float:
    """Energy distance between two samples of points in R^k.

    ``2/(nm) sum|x_i - y_j| - 1/n^2 sum|x_i - x_i'| - 1/m^2 sum|y_j - y_j'|``
    with Euclidean norms.  Exactly zero when ``xs`` and ``ys`` are the same
    array.
    """
    a = _as_matrix(xs)
    b = _as_matrix(ys)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"{a.shape[1]} vs {b.shape[1]} columns")
    return _energy_from_sums(
        float(cdist(a, b).sum()),
        float(cdist(a, a).sum()),
        float(cdist(b, b).sum()),
        a.shape[0],
        b.shape[0],
    )


def _relabelings(rng: np.random.Generator, total: int, n: int, count: int) -> np.ndarray:
    """Indicator matrix (total x count); column i marks the rows drawn as sample one."""
    z = np.zeros((total, count))
    for i in range(count):
        z[rng.permutation(total)[:n], i] = 1.0
    return z


def _energy_permutation(pooled: np.ndarray, n: int, b: int, seed: int) -> tuple[float, float]:
    total = pooled.shape[0]
    m = total - n
    dist = squareform(pdist(pooled))
    # contiguous block copies keep the observed value exactly 0 for equal samples
    observed = _energy_from_sums(
        float(np.ascontiguousarray(dist[:n, n:]).sum()),
        float(np.ascontiguousarray(dist[:n, :n]).sum()),
        float(np.ascontiguousarray(dist[n:, n:]).sum()),
        n,
        m,
    )

    row_sums = dist.sum(axis=1)
    grand = float(row_sums.sum())

    def scores(z: np.ndarray) -> np.ndarray:
        s_xx = np.einsum("ib,ib->b", z, dist @ z)
        s_xy = z.T @ row_sums - s_xx
        s_yy = grand - 2.0 * s_xy - s_xx
        return _energy_from_sums(s_xy, s_xx, s_yy, n, m)

    first = np.zeros((total, 1))
    first[:n] = 1.0
    reference = float(scores(first)[0])
    # the batched sums carry rounding error; treat near-ties as ties
    tol = 1e-10 * (grand / (total * total) if grand > 0 else 1.0)

    rng = np.random.default_rng(seed)
    exceed = 0
    done = 0
    while done < b:
        count = min(_PERM_BLOCK, b - done)
        permuted = scores(_relabelings(rng, total, n, count))
        exceed += int(np.count_nonzero(permuted >= reference - tol))
        done += count
    return observed, (1 + exceed) / (b + 1)


def _ks_permutation(pooled: np.ndarray, n: int, b: int, seed: int) -> tuple[float, float]:
    values = pooled[:, 0]
    observed = ks_statistic(values[:n], values[n:])
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(b):
        shuffled = values[rng.permutation(values.size)]
        if ks_statistic(shuffled[:n], shuffled[n:]) >= observed - 1e-12:
            exceed += 1
    return observed, (1 + exceed) / (b + 1)


def permutation_pvalue(
    pooled, n: int, b: int, seed: int, statistic: Literal["energy", "ks"] = "energy"
) -> tuple[float, float]:
    """Observed statistic and add-one permutation p-value.

    The first ``n`` rows of ``pooled`` are sample one, the rest sample two.
    ``b`` random relabelings are drawn from a generator seeded by ``seed``
    and ``p = (1 + #{permuted >= observed}) / (b + 1)``.
    """
    data = _as_matrix(pooled)
    if not 0 < n < data.shape[0]:
        raise EmptySampleError(f"split {n} leaves an empty sample")
    if b < 1:
        raise ValueError("need at least one relabeling")
    if statistic == "energy":
        return _energy_permutation(data, n, b, seed)
    if statistic == "ks":
        if data.shape[1] != 1:
            raise DimensionMismatchError("the KS statistic needs one column")
        return _ks_permutation(data, n, b, seed)
    raise ValueError(f"unknown statistic {statistic!r}")


def derive_seed(master_seed: int, p: PairSet, purpose: str = "test") -> int:
    """Stable 64-bit seed for one candidate, independent of evaluation order."""
    key = f"{int(master_seed)}|{purpose}|{p.pairs}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _standardize(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pooled = np.vstack([left, right])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std[std == 0] = 1.0
    return (left - mean) / std, (right - mean) / std


def test_candidate(view: CandidateView, p: PairSet, cfg: TestConfig) -> TestOutcome:
    """Decide whether the two sides of candidate ``p`` look identically distributed."""
    if view.arity != p.arity:
        raise DimensionMismatchError(f"view has {view.arity} columns, candidate {p.arity}")
    left, right = view.left_matrix, view.right_matrix
    if cfg.standardize:
        left, right = _standardize(left, right)
    n, m = left.shape[0], right.shape[0]
    seed = derive_seed(cfg.master_seed, p)

    if p.arity == 1:
        if cfg.univariate_test == "wilcoxon":
            return wilcoxon_ranksum(left[:, 0], right[:, 0], cfg.alpha)
        if cfg.pvalue_mode_univariate == "permutation":
            stat, pval = permutation_pvalue(
                np.vstack([left, right]), n, cfg.permutations, seed, statistic="ks"
            )
            method = "ks-permutation"
        else:
            stat = ks_statistic(left[:, 0], right[:, 0])
            pval = ks_pvalue(stat, n, m)
            method = "ks-asymptotic"
    else:
        stat, pval = permutation_pvalue(np.vstack([left, right]), n, cfg.permutations, seed)
        method = "energy-permutation"
    return TestOutcome(stat, pval, pval < cfg.alpha, method, (n, m))


test_candidate.__test__ = False  # type: ignore[attr-defined]


def binomial_tail(n_trials: int, p0: float, observed: int) -> float:
    """``P(Bin(n_trials, p0) >= observed)``, summed exactly in log space."""
    if observed <= 0:
        return 1.0
    if observed > n_trials:
        return 0.0
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie in (0, 1), got {p0}")
    log_p, log_q = math.log(p0), math.log1p(-p0)
    lg_n = math.lgamma(n_trials + 1)
    terms = [
        lg_n - math.lgamma(k + 1) - math.lgamma(n_trials - k + 1) + k * log_p + (n_trials - k) * log_q
        for k in range(observed, n_trials + 1)
    ]
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(t - top) for t in terms))
