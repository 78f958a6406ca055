"""Linear generators and the linear-model identifiability toolkit.

Covers the factor-analysis side of the laboratory: building a rotation
counterexample that leaves two-environment observations unchanged, showing
that enough spanning environments force the loading to be unique, checking
the permutation-scaling structure that linear ICA allows, and forming the
latent transform connecting two linear generators with a common range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateMeans, DimensionMismatch, RangeMismatch,
                     SingularMatrix)

__all__ = [
    "LinearGenerator",
    "EnvConstraintSystem",
    "UniquenessReport",
    "ComonReport",
    "rotation_counterexample",
    "solve_multi_env_linear",
    "comon_structure_check",
    "linear_generator_transform",
]

_RANK_REL_TOL = 1e-8


def _svd_rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_REL_TOL * s[0]))


class LinearGenerator:
    """Injective affine map z -> offset + F z from latents to observations."""

    def __init__(self, loading, offset=None):
        self.loading = np.atleast_2d(np.asarray(loading, dtype=float))
        dx, dz = self.loading.shape
        self.offset = (np.zeros(dx) if offset is None
                       else np.asarray(offset, dtype=float).reshape(dx))
        if _svd_rank(self.loading) < dz:
            raise ValueError("loading must have full column rank")
        # pseudo-inverse restricted to the range, via thresholded SVD
        u, s, vt = np.linalg.svd(self.loading, full_matrices=False)
        keep = s > _RANK_REL_TOL * s[0]
        self._pinv = (vt[keep].T / s[keep]) @ u[:, keep].T
        self._range_basis = u[:, keep]

    @property
    def obs_dim(self) -> int:
        return self.loading.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.loading.shape[1]

    def forward(self, Z):
        Z = np.asarray(Z, dtype=float)
        return Z @ self.loading.T + self.offset

    def __call__(self, Z):
        return self.forward(Z)

    def inverse(self, X):
        """Left inverse, exact on offset + range(loading)."""
        X = np.asarray(X, dtype=float)
        return (X - self.offset) @ self._pinv.T

    def range_residual(self, X) -> float:
        """Sup distance of rows of X - offset from the loading's range."""
        V = np.atleast_2d(np.asarray(X, dtype=float)) - self.offset
        proj = V @ self._range_basis @ self._range_basis.T
        return float(np.abs(V - proj).max())


class EnvConstraintSystem:
    """Environment latent means and the contrasts they induce."""

    def __init__(self, env_means):
        self.env_means = np.atleast_2d(np.asarray(env_means, dtype=float))
        if self.env_means.shape[0] < 2:
            raise DimensionMismatch("need at least two environments")

    @property
    def latent_dim(self):
        return self.env_means.shape[1]

    @property
    def contrasts(self) -> np.ndarray:
        """Rows mu_e - mu_0 for e >= 1."""
        return self.env_means[1:] - self.env_means[0]

    @property
    def contrast_rank(self) -> int:
        return _svd_rank(self.contrasts)


def rotation_counterexample(mu1, mu2, generator: LinearGenerator):
    """Second generator observationally equivalent on two environments.

    Returns ``(other, R)`` where ``R`` is the reflection fixing the mean
    difference ``v = mu2 - mu1`` and flipping its orthogonal complement, and
    ``other`` has loading ``F R`` with the offset adjusted so both
    environment observation laws match exactly.  Latent dimension must be 2.
    """
    mu1 = np.asarray(mu1, dtype=float).reshape(-1)
    mu2 = np.asarray(mu2, dtype=float).reshape(-1)
    if generator.latent_dim != 2 or mu1.shape != (2,) or mu2.shape != (2,):
        raise DimensionMismatch("the construction lives in latent dimension 2")
    v = mu2 - mu1
    norm2 = float(v @ v)
    if np.sqrt(norm2) < 1e-12:
        raise DegenerateMeans("environment means must be distinct")
    x = np.array([-v[1], v[0]])  # v rotated by 90 degrees, same length
    B = np.column_stack([v, x])
    R = (B @ np.diag([1.0, -1.0]) @ B.T) / norm2
    F2 = generator.loading @ R
    alpha2 = generator.offset + generator.loading @ mu1 - F2 @ mu1
    return LinearGenerator(F2, alpha2), R


@dataclass
class UniquenessReport:
    unique: bool
    contrast_rank: int
    latent_dim: int
    deviation: float | None

    def to_dict(self):
        return {"unique": bool(self.unique),
                "contrast_rank": self.contrast_rank,
                "latent_dim": self.latent_dim,
                "deviation": self.deviation}


def solve_multi_env_linear(generator: LinearGenerator,
                           system: EnvConstraintSystem) -> UniquenessReport:
    """Solve F' C = F C for F' given the contrast columns C.

    The loading is unique exactly when the contrasts span the latent space;
    in that case the least-squares recovery is reported with its deviation
    from the true loading.
    """
    if system.latent_dim != generator.latent_dim:
        raise DimensionMismatch("system and generator latent dimension differ")
    C = system.contrasts.T                       # (dz, E-1) contrast columns
    rank = system.contrast_rank
    unique = rank == generator.latent_dim
    deviation = None
    if unique:
        target = (generator.loading @ C).T       # (E-1, dx)
        sol, *_ = np.linalg.lstsq(C.T, target, rcond=None)
        deviation = float(np.linalg.norm(sol.T - generator.loading))
    return UniquenessReport(unique=unique, contrast_rank=rank,
                            latent_dim=generator.latent_dim,
                            deviation=deviation)


@dataclass
class ComonReport:
    component_wise: bool
    condition_number: float
    column_counts: np.ndarray
    tol: float

    def to_dict(self):
        return {"component_wise": bool(self.component_wise),
                "condition_number": self.condition_number,
                "column_counts": np.asarray(self.column_counts).tolist(),
                "tol": self.tol}


def comon_structure_check(matrix, tol: float = 1e-6) -> ComonReport:
    """Does the matrix act as a permutation composed with scalings?

    True exactly when every column carries a single entry above ``tol`` in
    absolute value, the structure a linear mixing of independent non-Gaussian
    coordinates leaves free.
    """
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise SingularMatrix("matrix has non-finite entries")
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrix(f"matrix is numerically singular (cond={cond:.3e})")
    counts = np.sum(np.abs(A) > tol, axis=0)
    return ComonReport(component_wise=bool(np.all(counts == 1)),
                       condition_number=cond, column_counts=counts, tol=tol)


def linear_generator_transform(gen_a: LinearGenerator,
                               gen_b: LinearGenerator) -> np.ndarray:
    """Latent matrix of ``gen_b^{-1} . gen_a`` for range-compatible loadings.

    Raises ``RangeMismatch`` when a column of the first loading leaves the
    range of the second beyond numerical tolerance.
    """
    if gen_a.latent_dim != gen_b.latent_dim:
        raise DimensionMismatch("latent dimensions differ")
    if gen_a.obs_dim != gen_b.obs_dim:
        raise DimensionMismatch("observation dimensions differ")
    Fa = gen_a.loading
    Q = gen_b._range_basis
    resid = Fa - Q @ (Q.T @ Fa)
    scale = max(1.0, float(np.linalg.norm(Fa)))
    if float(np.abs(resid).max()) > 1e-8 * scale:
        raise RangeMismatch("loadings do not share their column space")
    return gen_b._pinv @ Fa
