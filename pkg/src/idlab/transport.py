"""Triangular monotone transport maps and diagnostics on them.

A triangular monotone increasing (TMI) map sends coordinate ``m`` to a value
that depends only on coordinates ``0..m`` and increases strictly in
coordinate ``m``.  Four representations cover the laboratory's needs:

* ``AffineMap`` - lower-triangular matrix with positive diagonal plus offset;
* ``CdfChainMap`` - the conditional-CDF recursion between two distributions,
  which is the canonical coordinatewise transport (source conditional CDF
  composed with the target's conditional quantile, sweeping coordinates);
* ``ComposedMap`` - composition chain of TMI maps (closed under composition);
* ``ExplicitMap`` - closed-form components, registrable by name.

The module also ships the statistical verifiers used throughout: a
Rosenblatt-reduction goodness-of-fit check for pushforwards and
finite-difference structure checks (componentwise / triangular).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NonFiniteDerivative
from .measures import (Distribution, GaussianDistribution,
                       _invert_monotone_cdf, distribution_from_spec,
                       distribution_to_spec)

__all__ = [
    "TriangularMap",
    "AffineMap",
    "CdfChainMap",
    "ComposedMap",
    "ExplicitMap",
    "Automorphism",
    "PushforwardReport",
    "StructureReport",
    "kr_transport",
    "compose",
    "invert",
    "log_det_jacobian",
    "rosenblatt",
    "pushforward_check",
    "component_wise_check",
    "jacobian_fd",
    "register_explicit_map",
    "map_to_spec",
    "map_from_spec",
]


def _as_rows(Z, dim):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        if Z.shape[0] != dim:
            raise DimensionMismatch(f"expected point of dimension {dim}")
        return Z[None, :], True
    if Z.ndim != 2 or Z.shape[1] != dim:
        raise DimensionMismatch(f"expected (n, {dim}) array")
    return Z, False


class TriangularMap(abc.ABC):
    """Triangular monotone increasing map on R^d."""

    dim: int

    @property
    def latent_dim(self) -> int:
        return self.dim

    @abc.abstractmethod
    def component(self, m: int, prefix, x):
        """Value of output coordinate ``m`` at ``(prefix, x)``.

        ``prefix`` holds input coordinates ``0..m-1`` (rows), ``x`` the input
        coordinate ``m``; the result is strictly increasing in ``x``.
        """
        ...

    def forward_prefix(self, P):
        """Apply the map to the first ``k`` coordinates only, (n, k) rows."""
        P = np.asarray(P, dtype=float)
        n, k = P.shape
        out = np.empty((n, k))
        for m in range(k):
            out[:, m] = self.component(m, P[:, :m], P[:, m])
        return out

    def forward(self, Z):
        Z2, was_1d = _as_rows(Z, self.dim)
        out = self.forward_prefix(Z2)
        return out[0] if was_1d else out

    def _inverse_sweep(self, Y):
        """Solve the triangular system coordinate by coordinate."""
        Y = np.asarray(Y, dtype=float)
        n, k = Y.shape
        X = np.empty((n, k))
        for m in range(k):
            y = Y[:, m]
            X[:, m] = _invert_monotone_cdf(
                lambda v, m=m: self.component(m, X[:, :m], v),
                y, y, 1.0 + 0.5 * np.abs(y), (-np.inf, np.inf),
                tol=1e-11 * (1.0 + np.abs(y)), unit_interval=False)
        return X

    def inverse(self, X):
        X2, was_1d = _as_rows(X, self.dim)
        out = self._inverse_sweep(X2)
        return out[0] if was_1d else out

    def inverted(self) -> "TriangularMap":
        """The inverse map as a TMI object (recursive inverse formula)."""
        return _InverseView(self)

    def log_det_jacobian(self, Z, step: float = 1e-5):
        """Sum over coordinates of log d(component_m)/dx_m, central FD."""
        Z2, was_1d = _as_rows(Z, self.dim)
        out = np.zeros(Z2.shape[0])
        for m in range(self.dim):
            hi = self.component(m, Z2[:, :m], Z2[:, m] + step)
            lo = self.component(m, Z2[:, :m], Z2[:, m] - step)
            slope = (np.asarray(hi) - np.asarray(lo)) / (2.0 * step)
            if np.any(~np.isfinite(slope)) or np.any(slope <= 0):
                raise NonFiniteDerivative(
                    f"component {m} has non-positive or non-finite slope")
            out += np.log(slope)
        return float(out[0]) if was_1d else out

    def as_automorphism(self, **tags) -> "Automorphism":
        tags.setdefault("triangular", True)
        return Automorphism(self.dim, self.forward, self.inverse, tags=tags,
                            source_map=self)

    def to_spec(self) -> dict:
        raise NotImplementedError


class _InverseView(TriangularMap):
    """Inverse of a TMI map, solved componentwise; itself TMI."""

    def __init__(self, base: TriangularMap):
        self.base = base
        self.dim = base.dim

    def component(self, m, prefix, x):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if prefix.shape[0] == 1 and x.shape[0] > 1:
            prefix = np.broadcast_to(prefix, (x.shape[0], m))
        xpre = self.base._inverse_sweep(prefix) if m else prefix
        return _invert_monotone_cdf(
            lambda v: self.base.component(m, xpre, v),
            x, x, 1.0 + 0.5 * np.abs(x), (-np.inf, np.inf),
            tol=1e-11 * (1.0 + np.abs(x)), unit_interval=False)

    def forward_prefix(self, P):
        return self.base._inverse_sweep(np.asarray(P, dtype=float))

    def inverse(self, X):
        return self.base.forward(X)

    def inverted(self):
        return self.base


class AffineMap(TriangularMap):
    """x -> offset + L x with L lower triangular, positive diagonal."""

    def __init__(self, matrix, offset=None):
        L = np.atleast_2d(np.asarray(matrix, dtype=float))
        if L.shape[0] != L.shape[1]:
            raise DimensionMismatch("matrix must be square")
        scale = max(1.0, float(np.abs(L).max()))
        upper = np.triu(L, 1)
        if np.abs(upper).max() > 1e-12 * scale:
            raise ValueError("matrix must be lower triangular")
        if np.any(np.diag(L) <= 0):
            raise ValueError("diagonal entries must be strictly positive")
        self.matrix = np.tril(L)
        self.offset = (np.zeros(L.shape[0]) if offset is None
                       else np.asarray(offset, dtype=float).reshape(L.shape[0]))
        self.dim = L.shape[0]

    def component(self, m, prefix, x):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        x = np.asarray(x, dtype=float)
        lin = prefix @ self.matrix[m, :m] if m else 0.0
        return self.offset[m] + lin + self.matrix[m, m] * x

    def forward_prefix(self, P):
        P = np.asarray(P, dtype=float)
        k = P.shape[1]
        return self.offset[:k] + P @ self.matrix[:k, :k].T

    def inverse(self, X):
        X2, was_1d = _as_rows(X, self.dim)
        out = solve_triangular(self.matrix, (X2 - self.offset).T, lower=True).T
        return out[0] if was_1d else out

    def inverted(self):
        inv = solve_triangular(self.matrix, np.eye(self.dim), lower=True)
        return AffineMap(inv, -inv @ self.offset)

    def log_det_jacobian(self, Z, step=1e-5):
        Z2, was_1d = _as_rows(Z, self.dim)
        val = float(np.sum(np.log(np.diag(self.matrix))))
        return val if was_1d else np.full(Z2.shape[0], val)

    def to_spec(self):
        return {"kind": "affine", "matrix": self.matrix.tolist(),
                "offset": self.offset.tolist()}


class CdfChainMap(TriangularMap):
    """Coordinatewise conditional-CDF transport from ``source`` to ``target``.

    Coordinate ``m`` sends ``x_m`` through the source conditional CDF given
    the raw prefix, then through the target conditional quantile given the
    already-mapped prefix.  The mapped prefix acts as the per-point cache of
    earlier components, so a full evaluation is a single coordinate sweep.
    """

    def __init__(self, source: Distribution, target: Distribution,
                 tol: float = 1e-10):
        if source.dim != target.dim:
            raise DimensionMismatch("source and target dimension differ")
        self.source = source
        self.target = target
        self.tol = float(tol)
        self.dim = source.dim

    def forward_prefix(self, P):
        P = np.asarray(P, dtype=float)
        n, k = P.shape
        out = np.empty((n, k))
        for m in range(k):
            u = self.source.conditional_cdf(m, P[:, :m], P[:, m])
            out[:, m] = self.target.conditional_quantile(
                m, out[:, :m], u, tol=self.tol)
        return out

    def component(self, m, prefix, x):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if prefix.shape[0] == 1 and x.shape[0] > 1:
            prefix = np.broadcast_to(prefix, (x.shape[0], m))
        u = self.source.conditional_cdf(m, prefix, x)
        ypre = self.forward_prefix(prefix) if m else prefix
        return self.target.conditional_quantile(m, ypre, u, tol=self.tol)

    def inverse(self, X):
        return self.inverted().forward(X)

    def inverted(self):
        return CdfChainMap(self.target, self.source, tol=self.tol)

    def to_spec(self):
        return {"kind": "cdf_chain",
                "source": distribution_to_spec(self.source),
                "target": distribution_to_spec(self.target),
                "tol": self.tol}


class ComposedMap(TriangularMap):
    """Composition of TMI maps, applied first-to-last; itself TMI."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise DimensionMismatch("need at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise DimensionMismatch("all parts must share a dimension")
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, ComposedMap) else [p])
        self.parts = flat
        self.dim = parts[0].dim

    def forward_prefix(self, P):
        out = np.asarray(P, dtype=float)
        for p in self.parts:
            out = p.forward_prefix(out)
        return out

    def component(self, m, prefix, x):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if prefix.shape[0] == 1 and x.shape[0] > 1:
            prefix = np.broadcast_to(prefix, (x.shape[0], m))
        cur_prefix, cur_x = prefix, x
        for p in self.parts:
            cur_x = np.atleast_1d(np.asarray(p.component(m, cur_prefix, cur_x)))
            cur_prefix = p.forward_prefix(cur_prefix)
        return cur_x

    def inverse(self, X):
        out = np.asarray(X, dtype=float)
        for p in reversed(self.parts):
            out = p.inverse(out)
        return out

    def inverted(self):
        return ComposedMap([p.inverted() for p in reversed(self.parts)])

    def log_det_jacobian(self, Z, step=1e-5):
        """Exact chain rule: triangular Jacobians multiply diagonal-wise."""
        Z2, was_1d = _as_rows(Z, self.dim)
        out = np.zeros(Z2.shape[0])
        cur = Z2
        for p in self.parts:
            out = out + np.atleast_1d(p.log_det_jacobian(cur, step=step))
            cur = p.forward_prefix(cur)
        return float(out[0]) if was_1d else out

    def to_spec(self):
        return {"kind": "composed", "parts": [p.to_spec() for p in self.parts]}


class ExplicitMap(TriangularMap):
    """TMI map from closed-form component callables.

    ``components[m](prefix, x)`` gives output coordinate ``m``;
    ``inverse_components[m](prefix, y)``, when declared, solves it for ``x``
    given the recovered source prefix.  Without declared inverses the
    componentwise root finder takes over.
    """

    def __init__(self, dim, components, inverse_components=None,
                 name: str | None = None):
        if len(components) != dim:
            raise DimensionMismatch("need one component per coordinate")
        if inverse_components is not None and len(inverse_components) != dim:
            raise DimensionMismatch("need one inverse per coordinate")
        self.dim = dim
        self.components = list(components)
        self.inverse_components = (None if inverse_components is None
                                   else list(inverse_components))
        self.name = name

    def component(self, m, prefix, x):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if prefix.shape[0] == 1 and x.shape[0] > 1:
            prefix = np.broadcast_to(prefix, (x.shape[0], m))
        return np.asarray(self.components[m](prefix, x), dtype=float)

    def inverse(self, X):
        if self.inverse_components is None:
            return super().inverse(X)
        X2, was_1d = _as_rows(X, self.dim)
        out = np.empty_like(X2)
        for m in range(self.dim):
            out[:, m] = self.inverse_components[m](out[:, :m], X2[:, m])
        return out[0] if was_1d else out

    def inverted(self):
        if self.inverse_components is None:
            return _InverseView(self)
        fwd = list(self.components)
        inv = list(self.inverse_components)
        return ExplicitMap(self.dim, inv, fwd,
                           name=None if self.name is None else f"~{self.name}")

    def to_spec(self):
        if self.name is None or self.name not in _EXPLICIT_REGISTRY:
            raise NotImplementedError(
                "only registry-named explicit maps serialize")
        return {"kind": "explicit_named", "name": self.name}


_EXPLICIT_REGISTRY: dict[str, ExplicitMap] = {}


def register_explicit_map(name: str, mapping: ExplicitMap) -> ExplicitMap:
    """Register a closed-form map under a stable name for serialization."""
    mapping.name = name
    _EXPLICIT_REGISTRY[name] = mapping
    return mapping


@dataclass
class Automorphism:
    """Invertible self-map of the latent space, with structure tags.

    ``tags`` may carry a ``"linear"`` payload ``(matrix, offset)`` and
    boolean structure hints; downstream code uses them to keep pushforwards
    in closed form when possible.
    """

    dim: int
    _forward: object
    _inverse: object
    tags: dict = field(default_factory=dict)
    source_map: object = None

    @property
    def latent_dim(self):
        return self.dim

    def forward(self, Z):
        Z2, was_1d = _as_rows(Z, self.dim)
        out = np.asarray(self._forward(Z2), dtype=float)
        return out[0] if was_1d else out

    def inverse(self, X):
        X2, was_1d = _as_rows(X, self.dim)
        out = np.asarray(self._inverse(X2), dtype=float)
        return out[0] if was_1d else out

    def inverted(self) -> "Automorphism":
        tags = dict(self.tags)
        lin = tags.pop("linear", None)
        if lin is not None:
            M, b = lin
            Minv = np.linalg.inv(M)
            tags["linear"] = (Minv, -Minv @ b)
        src = None
        if isinstance(self.source_map, TriangularMap):
            src = self.source_map.inverted()
        return Automorphism(self.dim, self._inverse, self._forward,
                            tags=tags, source_map=src)

    def linear_parts(self):
        lin = self.tags.get("linear")
        if lin is None:
            return None
        return np.asarray(lin[0], dtype=float), np.asarray(lin[1], dtype=float)

    @classmethod
    def identity(cls, dim: int) -> "Automorphism":
        eye = np.eye(dim)
        return cls.from_matrix(eye, np.zeros(dim))

    @classmethod
    def from_matrix(cls, matrix, offset=None) -> "Automorphism":
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        d = M.shape[0]
        if M.shape != (d, d):
            raise DimensionMismatch("matrix must be square")
        b = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
        Minv = np.linalg.inv(M)

        def fwd(Z):
            return Z @ M.T + b

        def inv(X):
            return (X - b) @ Minv.T

        return cls(d, fwd, inv, tags={"linear": (M, b)})

    @classmethod
    def from_map(cls, mapping: TriangularMap) -> "Automorphism":
        return mapping.as_automorphism()


# ---------------------------------------------------------------------------
# construction and algebra
# ---------------------------------------------------------------------------

def kr_transport(source: Distribution, target: Distribution,
                 tol: float = 1e-10, method: str = "auto") -> TriangularMap:
    """Triangular transport pushing ``source`` onto ``target``.

    For a Gaussian pair the map is affine and returned in closed form from
    the Cholesky factors; otherwise (or with ``method="cdf_chain"``) the
    conditional-CDF recursion is returned.
    """
    if source.dim != target.dim:
        raise DimensionMismatch("source and target dimension differ")
    if not (source.full_support and target.full_support):
        raise ValueError("transport endpoints must be fully supported")
    if method not in ("auto", "affine", "cdf_chain"):
        raise ValueError(f"unknown method: {method!r}")
    gaussian_pair = (isinstance(source, GaussianDistribution)
                     and isinstance(target, GaussianDistribution))
    if method == "affine" and not gaussian_pair:
        raise ValueError("closed-form affine transport needs Gaussian ends")
    if gaussian_pair and method != "cdf_chain":
        L = target.cholesky @ solve_triangular(
            source.cholesky, np.eye(source.dim), lower=True)
        return AffineMap(L, target.mean - L @ source.mean)
    return CdfChainMap(source, target, tol=tol)


def compose(outer: TriangularMap, inner: TriangularMap) -> TriangularMap:
    """Composition ``outer(inner(.))``; affine pairs stay affine."""
    if outer.dim != inner.dim:
        raise DimensionMismatch("composition dimensions differ")
    if isinstance(outer, AffineMap) and isinstance(inner, AffineMap):
        return AffineMap(outer.matrix @ inner.matrix,
                         outer.offset + outer.matrix @ inner.offset)
    return ComposedMap([inner, outer])


def invert(mapping: TriangularMap) -> TriangularMap:
    """Inverse map; TMI again, with exact forms where available."""
    return mapping.inverted()


def log_det_jacobian(mapping: TriangularMap, Z, step: float = 1e-5):
    """Log absolute Jacobian determinant of a TMI map at points ``Z``."""
    return mapping.log_det_jacobian(Z, step=step)


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def rosenblatt(dist: Distribution, X) -> np.ndarray:
    """Conditional-CDF transform of ``dist`` applied to rows of ``X``.

    Under ``X ~ dist`` every output column is i.i.d. uniform on (0, 1).
    """
    X2, _ = _as_rows(X, dist.dim)
    U = np.empty_like(X2)
    for m in range(dist.dim):
        U[:, m] = dist.conditional_cdf(m, X2[:, :m], X2[:, m])
    return U


def _ks_uniform_stat(u: np.ndarray) -> float:
    """Two-sided one-sample KS statistic against U(0, 1)."""
    n = u.shape[0]
    s = np.sort(u)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - s), np.max(s - (grid - 1.0 / n))))


@dataclass
class PushforwardReport:
    """Per-coordinate KS verdicts for a pushforward goodness-of-fit check."""

    statistics: np.ndarray
    pvalues: np.ndarray
    critical_value: float
    alpha: float
    per_coordinate_level: float
    n: int
    direction: str
    passed: bool

    def to_dict(self):
        return {
            "statistics": np.asarray(self.statistics).tolist(),
            "pvalues": np.asarray(self.pvalues).tolist(),
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "per_coordinate_level": self.per_coordinate_level,
            "n": self.n,
            "direction": self.direction,
            "passed": bool(self.passed),
        }


def pushforward_check(mapping, source: Distribution, target: Distribution,
                      n: int, rng: np.random.Generator,
                      alpha: float = 0.01) -> PushforwardReport:
    """Test whether ``mapping`` pushes ``source`` onto ``target``.

    Mapped samples are reduced by the target's conditional-CDF transform to
    coordinatewise uniforms, each tested by a one-sample KS test at level
    ``alpha`` with Bonferroni correction across coordinates.  If the target
    cannot evaluate conditionals (transported laws), the equivalent inverse
    statement - ``mapping^{-1}`` pushes ``target`` onto ``source`` - is
    tested instead against the source's conditionals.
    """
    if source.dim != target.dim:
        raise DimensionMismatch("source and target dimension differ")
    if getattr(target, "has_conditionals", True):
        z = source.sample(rng, n)
        data, ref, direction = mapping.forward(z), target, "forward"
    elif getattr(source, "has_conditionals", True):
        w = target.sample(rng, n)
        data, ref, direction = mapping.inverse(w), source, "inverse"
    else:
        raise ValueError("neither endpoint can evaluate conditional CDFs")
    U = rosenblatt(ref, data)
    d = ref.dim
    level = alpha / d
    stats = np.array([_ks_uniform_stat(U[:, m]) for m in range(d)])
    pvals = np.array([float(_sstats.kstwo.sf(s, n)) for s in stats])
    critical = float(_sstats.kstwo.isf(level, n))
    return PushforwardReport(
        statistics=stats, pvalues=pvals, critical_value=critical,
        alpha=alpha, per_coordinate_level=level, n=n, direction=direction,
        passed=bool(np.all(stats < critical)))


def jacobian_fd(forward, Z, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobians of a vector map, shape (n, d_out, d_in)."""
    Z2 = np.atleast_2d(np.asarray(Z, dtype=float))
    n, d = Z2.shape
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        hi = np.atleast_2d(forward(Z2 + e))
        lo = np.atleast_2d(forward(Z2 - e))
        cols.append((hi - lo) / (2.0 * step))
    return np.stack(cols, axis=2)


@dataclass
class StructureReport:
    """Maximal absolute Jacobian entries, used for structure detection."""

    max_offdiag: float
    max_upper: float
    entry_max: np.ndarray
    tol: float
    step: float
    passed: bool

    def to_dict(self):
        return {"max_offdiag": self.max_offdiag, "max_upper": self.max_upper,
                "entry_max": np.asarray(self.entry_max).tolist(),
                "tol": self.tol, "step": self.step, "passed": bool(self.passed)}


def component_wise_check(mapping, probes, step: float = 1e-5,
                         tol: float = 1e-4) -> StructureReport:
    """Check that all cross-partials of ``mapping`` vanish on the probes.

    ``passed`` is true when every off-diagonal Jacobian entry stays below
    ``tol`` in absolute value at every probe point, i.e. the map acts on
    each coordinate separately.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    J = jacobian_fd(mapping.forward, probes, step=step)
    entry_max = np.max(np.abs(J), axis=0)
    d = entry_max.shape[0]
    off = ~np.eye(d, dtype=bool)
    upper = np.triu(np.ones((d, d), dtype=bool), 1)
    max_off = float(entry_max[off].max()) if d > 1 else 0.0
    max_up = float(entry_max[upper].max()) if d > 1 else 0.0
    return StructureReport(max_offdiag=max_off, max_upper=max_up,
                           entry_max=entry_max, tol=tol, step=step,
                           passed=bool(max_off < tol))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def map_to_spec(mapping: TriangularMap) -> dict:
    return mapping.to_spec()


def map_from_spec(spec: dict) -> TriangularMap:
    kind = spec.get("kind")
    if kind == "affine":
        return AffineMap(spec["matrix"], spec["offset"])
    if kind == "cdf_chain":
        return CdfChainMap(distribution_from_spec(spec["source"]),
                           distribution_from_spec(spec["target"]),
                           tol=spec.get("tol", 1e-10))
    if kind == "composed":
        return ComposedMap([map_from_spec(p) for p in spec["parts"]])
    if kind == "explicit_named":
        name = spec.get("name")
        if name not in _EXPLICIT_REGISTRY:
            raise ValueError(f"explicit map {name!r} is not registered")
        return _EXPLICIT_REGISTRY[name]
    raise ValueError(f"unknown map kind: {kind!r}")
