"""Seeded synthetic relation pairs with known ground truth.

Normal variates come from numpy's ``Generator`` (PCG64 bit generator,
ziggurat normals), so a seed reproduces its output bit for bit under a
given numpy release.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .ingest import Relation

Family = Literal["gauss-iid", "gauss-corr", "mixture", "ring"]
FAMILIES: tuple[str, ...] = ("gauss-iid", "gauss-corr", "mixture", "ring")

# second-coordinate mean of the two-column scenario; keeps the cross pairs
# (A, D) and (B, C) distinguishable at the unary level
FIG1_SECOND_MEAN = 4.0
FIG1_RHO = 0.9


@dataclass(frozen=True)
class ScenarioSpec:
    rows: int
    seed: int
    family: Family = "gauss-iid"
    dims: int = 1
    rho: float = 0.0

    def __post_init__(self) -> None:
        if self.rows < 2:
            raise ValueError(f"rows must be at least 2, got {self.rows}")
        if self.dims < 1:
            raise ValueError(f"dims must be at least 1, got {self.dims}")
        if not abs(self.rho) < 1.0:
            raise ValueError(f"|rho| must be below 1, got {self.rho}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _draw(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    n, d = spec.rows, spec.dims
    if spec.family == "gauss-iid":
        return rng.standard_normal((n, d))
    if spec.family == "gauss-corr":
        # AR(1) correlation rho**|i-j|: positive definite for every |rho| < 1
        idx = np.arange(d)
        cov = spec.rho ** np.abs(idx[:, None] - idx[None, :])
        return rng.standard_normal((n, d)) @ np.linalg.cholesky(cov).T
    if spec.family == "mixture":
        signs = np.where(rng.random(n) < 0.5, -2.0, 2.0)
        return rng.standard_normal((n, d)) + signs[:, None]
    # ring: uniform direction on the sphere, radius 3 with small jitter
    if d == 1:
        direction = np.where(rng.random((n, 1)) < 0.5, -1.0, 1.0)
    else:
        g = rng.standard_normal((n, d))
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
    radius = 3.0 + 0.3 * rng.standard_normal((n, 1))
    return direction * radius


def _names(dims: int) -> tuple[str, ...]:
    return tuple(f"x{j}" for j in range(dims))


def gen_null_pair(spec: ScenarioSpec) -> tuple[Relation, Relation]:
    """Two independent samples of one joint law; the identity pairing holds."""
    rng = _rng(spec.seed)
    left = _draw(spec, rng)
    right = _draw(spec, rng)
    names = _names(spec.dims)
    return Relation("R", names, left), Relation("S", names, right)


def _bivariate(rng: np.random.Generator, rows: int, rho: float) -> np.ndarray:
    z = rng.standard_normal((rows, 2))
    out = np.empty_like(z)
    out[:, 0] = z[:, 0]
    out[:, 1] = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    out[:, 1] += FIG1_SECOND_MEAN
    return out


def gen_fig1_scenario(rows: int, seed: int) -> tuple[Relation, Relation]:
    """R(A, B) and S(C, D, E, F) where A~C, A~E, B~D, B~F marginally.

    (A, B) and (C, D) share a bivariate normal law with correlation +0.9;
    (E, F) has correlation -0.9.  A, C, E are standard normal and B, D, F
    are unit normals centred at ``FIG1_SECOND_MEAN``.
    """
    if rows < 2:
        raise ValueError(f"rows must be at least 2, got {rows}")
    rng = _rng(seed)
    ab = _bivariate(rng, rows, FIG1_RHO)
    cd = _bivariate(rng, rows, FIG1_RHO)
    ef = _bivariate(rng, rows, -FIG1_RHO)
    left = Relation("R", ("A", "B"), ab)
    right = Relation("S", ("C", "D", "E", "F"), np.hstack([cd, ef]))
    return left, right


def gen_shifted_pair(rows: int, dims: int, delta: float, seed: int) -> tuple[Relation, Relation]:
    """Standard normal columns on the left, the same shifted by ``delta`` on the right."""
    left, right = gen_null_pair(ScenarioSpec(rows=rows, seed=seed, family="gauss-iid", dims=dims))
    if delta == 0:
        return left, right
    return left, Relation(right.name, right.column_names, right.data + delta)
