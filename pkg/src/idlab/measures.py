"""Probability measures used as latent priors and transport endpoints.

The module provides a small zoo of fully supported distributions behind one
`Distribution` interface: exact densities in log space, samplers driven by
counter-based streams, and conditional CDFs with their inverses.  Conditional
quantiles are computed by bracketed bisection refined with a secant step, so
every distribution that can evaluate a conditional CDF automatically supports
Rosenblatt-style resampling and triangular transport.

Multivariate exponential families carry their carrier density, sufficient
statistic and log-partition explicitly, which is what the environment and
indeterminacy machinery consumes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import cumulative_simpson

from .errors import BracketFailure, DimensionMismatch, MismatchedFamily

__all__ = [
    "Univariate",
    "Normal1D",
    "Laplace1D",
    "Logistic1D",
    "Exponential1D",
    "GaussianMixture1D",
    "Distribution",
    "GaussianDistribution",
    "ProductDistribution",
    "ExpFamily",
    "sample",
    "conditional_quantile",
    "expfam_density_ratio_log",
    "interdecile_box",
    "univariate_from_spec",
    "distribution_from_spec",
    "distribution_to_spec",
]

_LOG_2PI = math.log(2.0 * math.pi)

# Probabilities are clipped to this open sub-interval of (0, 1) before
# inversion; beyond it double precision cannot tell the CDF apart from 0 or 1.
_P_FLOOR = 1e-300
_P_CEIL = 1.0 - 1e-16


# ---------------------------------------------------------------------------
# quantile inversion engine
# ---------------------------------------------------------------------------

def _invert_monotone_cdf(cdf, p, center, width, support, tol=1e-10,
                         max_iter=200, unit_interval=True):
    """Invert a monotone increasing vectorized function at targets ``p``.

    ``cdf`` maps an array of points to an array of values, row for row.  The
    bracket starts at ``center +- width`` (clamped to ``support``) and
    expands geometrically on uncovered sides until it covers ``p``.
    Bisection then shrinks it until the residual is below ``tol`` (scalar or
    per-row array) and the bracket is spatially tight; a final secant
    interpolation inside the last bracket polishes the root.  With
    ``unit_interval`` the targets are treated as probabilities and clipped
    to the representable open interval.
    """
    p = np.asarray(p, dtype=float)
    if unit_interval:
        p = np.clip(p, _P_FLOOR, _P_CEIL)
    n = p.shape[0]
    center = np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()
    width = np.broadcast_to(np.asarray(width, dtype=float), (n,)).copy()
    width = np.maximum(width, 1e-12)
    s_lo, s_hi = support

    lo = center - width
    hi = center + width
    if np.isfinite(s_lo):
        lo = np.maximum(lo, s_lo)
    if np.isfinite(s_hi):
        hi = np.minimum(hi, s_hi)
    hi = np.maximum(hi, lo)

    # Expand the bracket where it does not yet cover the target probability:
    # geometrically outward on unbounded sides, geometrically toward the
    # bound on bounded sides (the CDF tends to 0 resp. 1 there).
    step = width.copy()
    for _ in range(120):
        f_lo = cdf(lo)
        f_hi = cdf(hi)
        if not (np.all(np.isfinite(f_lo)) and np.all(np.isfinite(f_hi))):
            raise BracketFailure("conditional CDF returned non-finite values")
        need_lo = f_lo > p
        need_hi = f_hi < p
        if not (need_lo.any() or need_hi.any()):
            break
        step = np.minimum(step * 2.0, 1e60)
        if need_lo.any():
            wider = (s_lo + 0.5 * (lo - s_lo)) if np.isfinite(s_lo) else lo - step
            lo = np.where(need_lo, wider, lo)
        if need_hi.any():
            wider = (s_hi - 0.5 * (s_hi - hi)) if np.isfinite(s_hi) else hi + step
            hi = np.where(need_hi, wider, hi)
    else:
        raise BracketFailure("bracket expansion exhausted 120 refinements")

    f_lo = cdf(lo)
    f_hi = cdf(hi)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = cdf(mid)
        go_right = f_mid < p
        lo = np.where(go_right, mid, lo)
        f_lo = np.where(go_right, f_mid, f_lo)
        hi = np.where(go_right, hi, mid)
        f_hi = np.where(go_right, f_hi, f_mid)
        tight = (hi - lo) <= 1e-9 * np.maximum(1.0, np.abs(mid))
        close = np.abs(f_mid - p) <= 0.25 * tol
        if np.all(tight & close):
            break

    # Secant polish inside the final bracket.
    denom = f_hi - f_lo
    safe = denom > 0
    sec = np.where(safe, lo + (p - f_lo) * (hi - lo) / np.where(safe, denom, 1.0),
                   0.5 * (lo + hi))
    sec = np.clip(sec, lo, hi)
    f_sec = cdf(sec)
    mid = 0.5 * (lo + hi)
    out = np.where(np.abs(f_sec - p) <= np.abs(cdf(mid) - p), sec, mid)
    return out


# ---------------------------------------------------------------------------
# univariate building blocks
# ---------------------------------------------------------------------------

class Univariate(abc.ABC):
    """A scalar distribution with exact CDF, used as a product marginal."""

    kind: str = ""
    support: tuple[float, float] = (-np.inf, np.inf)
    #: rough center and spread used to seed quantile brackets
    location: float = 0.0
    scale_hint: float = 1.0

    @abc.abstractmethod
    def log_pdf(self, x):
        ...

    @abc.abstractmethod
    def cdf(self, x):
        ...

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def ppf(self, p):
        """Quantile function; closed form where available, else inversion."""
        p = np.asarray(p, dtype=float)
        flat = _invert_monotone_cdf(self.cdf, np.atleast_1d(p).ravel(),
                                    self.location, self.scale_hint,
                                    self.support)
        return flat.reshape(p.shape) if p.ndim else float(flat[0])

    def sample(self, rng: np.random.Generator, n: int):
        return self.ppf(rng.random(n))

    def to_spec(self) -> dict:
        raise NotImplementedError


class Normal1D(Univariate):
    kind = "normal"

    def __init__(self, loc: float = 0.0, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.loc = float(loc)
        self.scale = float(scale)
        self.location = self.loc
        self.scale_hint = self.scale

    def log_pdf(self, x):
        u = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return -0.5 * u * u - math.log(self.scale) - 0.5 * _LOG_2PI

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def ppf(self, p):
        return self.loc + self.scale * special.ndtri(np.asarray(p, dtype=float))

    def sample(self, rng, n):
        return self.loc + self.scale * rng.standard_normal(n)

    def to_spec(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


class Laplace1D(Univariate):
    kind = "laplace"

    def __init__(self, loc: float = 0.0, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.loc = float(loc)
        self.scale = float(scale)
        self.location = self.loc
        self.scale_hint = self.scale

    def log_pdf(self, x):
        u = np.abs(np.asarray(x, dtype=float) - self.loc) / self.scale
        return -u - math.log(2.0 * self.scale)

    def cdf(self, x):
        u = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return np.where(u < 0, 0.5 * np.exp(u), 1.0 - 0.5 * np.exp(-np.abs(u)))

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        lower = self.loc + self.scale * np.log(2.0 * np.minimum(p, 0.5))
        upper = self.loc - self.scale * np.log(2.0 * np.minimum(1.0 - p, 0.5))
        return np.where(p < 0.5, lower, upper)

    def sample(self, rng, n):
        return rng.laplace(self.loc, self.scale, n)

    def to_spec(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


class Logistic1D(Univariate):
    kind = "logistic"

    def __init__(self, loc: float = 0.0, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.loc = float(loc)
        self.scale = float(scale)
        self.location = self.loc
        self.scale_hint = 2.0 * self.scale

    def log_pdf(self, x):
        u = (np.asarray(x, dtype=float) - self.loc) / self.scale
        # -u - 2 log(1 + e^-u), stable on both tails
        return -np.abs(u) - 2.0 * np.log1p(np.exp(-np.abs(u))) - math.log(self.scale)

    def cdf(self, x):
        u = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return special.expit(u)

    def ppf(self, p):
        return self.loc + self.scale * special.logit(np.asarray(p, dtype=float))

    def sample(self, rng, n):
        return rng.logistic(self.loc, self.scale, n)

    def to_spec(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


class Exponential1D(Univariate):
    kind = "exponential"

    def __init__(self, rate: float = 1.0):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = float(rate)
        self.support = (0.0, np.inf)
        self.location = math.log(2.0) / self.rate
        self.scale_hint = 1.0 / self.rate

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def ppf(self, p):
        return -np.log1p(-np.asarray(p, dtype=float)) / self.rate

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, n)

    def to_spec(self):
        return {"kind": self.kind, "rate": self.rate}


class GaussianMixture1D(Univariate):
    """Finite mixture of normals; the CDF is exact, the quantile is inverted."""

    kind = "gaussian_mixture"

    def __init__(self, weights, locs, scales):
        self.weights = np.asarray(weights, dtype=float)
        self.locs = np.asarray(locs, dtype=float)
        self.scales = np.asarray(scales, dtype=float)
        if not (self.weights.shape == self.locs.shape == self.scales.shape):
            raise DimensionMismatch("mixture parameter arrays must align")
        if np.any(self.weights <= 0) or np.any(self.scales <= 0):
            raise ValueError("weights and scales must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")
        self.location = float(self.weights @ self.locs)
        spread = float(np.max(np.abs(self.locs - self.location)) + np.max(self.scales))
        self.scale_hint = max(spread, 1e-6)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x[..., None] - self.locs) / self.scales
        comp = -0.5 * u * u - np.log(self.scales) - 0.5 * _LOG_2PI
        return special.logsumexp(comp, axis=-1, b=self.weights)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x[..., None] - self.locs) / self.scales
        return special.ndtr(u) @ self.weights

    def sample(self, rng, n):
        idx = rng.choice(self.weights.size, size=n, p=self.weights)
        return self.locs[idx] + self.scales[idx] * rng.standard_normal(n)

    def to_spec(self):
        return {"kind": self.kind, "weights": self.weights.tolist(),
                "locs": self.locs.tolist(), "scales": self.scales.tolist()}


# ---------------------------------------------------------------------------
# multivariate distributions
# ---------------------------------------------------------------------------

def _rows(z, dim):
    """Normalize points to a 2-D (n, dim) array; report if input was 1-D."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        if z.shape[0] != dim:
            raise DimensionMismatch(f"expected point of dimension {dim}")
        return z[None, :], True
    if z.ndim != 2 or z.shape[1] != dim:
        raise DimensionMismatch(f"expected (n, {dim}) array")
    return z, False


class Distribution(abc.ABC):
    """A fully supported probability measure on R^d.

    Subclasses provide ``log_density`` and ``conditional_cdf``; everything
    else (density, sampling, conditional quantiles) has generic
    implementations on top of those two. Coordinates are indexed 0-based:
    the conditional for coordinate ``m`` conditions on coordinates
    ``0..m-1``.
    """

    #: density strictly positive on the (possibly box-shaped) support
    full_support: bool = True
    #: whether conditional CDFs are available (transported laws may lack them)
    has_conditionals: bool = True

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        ...

    @abc.abstractmethod
    def log_density(self, z):
        ...

    def density(self, z):
        return np.exp(self.log_density(z))

    def coordinate_support(self, m: int) -> tuple[float, float]:
        return (-np.inf, np.inf)

    @abc.abstractmethod
    def conditional_cdf(self, m: int, prefix, values):
        """CDF of coordinate ``m`` given the first ``m`` coordinates.

        ``prefix`` is an ``(n, m)`` array (or a single ``(m,)`` row) and
        ``values`` a scalar or ``(n,)`` array; rows pair off elementwise.
        """
        ...

    def _prep_conditional(self, m, prefix, values):
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim <= 1:
            prefix = prefix.reshape(1, -1)
        if prefix.shape[1] != m:
            raise DimensionMismatch(f"prefix must have {m} columns")
        values = np.atleast_1d(np.asarray(values, dtype=float))
        n = max(prefix.shape[0], values.shape[0])
        if prefix.shape[0] == 1 and n > 1:
            prefix = np.broadcast_to(prefix, (n, m))
        if values.shape[0] == 1 and n > 1:
            values = np.broadcast_to(values, (n,))
        if prefix.shape[0] != n or values.shape[0] != n:
            raise DimensionMismatch("prefix rows and values must align")
        return prefix, values

    def _quantile_seed(self, m: int, prefix):
        n = prefix.shape[0] if prefix.ndim == 2 else 1
        return np.zeros(n), np.ones(n)

    def conditional_quantile(self, m: int, prefix, p, tol: float = 1e-10):
        """Invert ``conditional_cdf`` at probabilities ``p``.

        Returns ``v`` with ``|conditional_cdf(m, prefix, v) - p| <= tol``,
        computed by bracketed bisection plus a secant refinement.
        """
        scalar = np.isscalar(p) or np.ndim(p) == 0
        prefix2, p2 = self._prep_conditional(m, prefix, p)
        center, width = self._quantile_seed(m, prefix2)
        out = _invert_monotone_cdf(
            lambda v: self.conditional_cdf(m, prefix2, v),
            p2, center, width, self.coordinate_support(m), tol=tol)
        return float(out[0]) if scalar and out.shape[0] == 1 else out

    def sample(self, rng: np.random.Generator, n: int):
        """Default sampler: invert the conditional chain at uniform draws."""
        u = np.clip(rng.random((n, self.dim)), 1e-15, 1.0 - 1e-15)
        z = np.empty((n, self.dim))
        for m in range(self.dim):
            z[:, m] = self.conditional_quantile(m, z[:, :m], u[:, m])
        return z

    def to_spec(self) -> dict:
        raise NotImplementedError


class GaussianDistribution(Distribution):
    """Multivariate normal with exact conditionals in every coordinate."""

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        d = self.mean.shape[0]
        if self.cov.shape != (d, d):
            raise DimensionMismatch("covariance must be square and match mean")
        try:
            self.cholesky = np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        self._log_det = 2.0 * np.sum(np.log(np.diag(self.cholesky)))
        self._cond_cache: dict[int, tuple[np.ndarray, float]] = {}

    @property
    def dim(self):
        return self.mean.shape[0]

    def log_density(self, z):
        z2, was_1d = _rows(z, self.dim)
        w = np.linalg.solve(self.cholesky.T,
                            np.linalg.solve(self.cholesky, (z2 - self.mean).T))
        quad = np.sum((z2 - self.mean).T * w, axis=0)
        out = -0.5 * (quad + self._log_det + self.dim * _LOG_2PI)
        return float(out[0]) if was_1d else out

    def _cond_coef(self, m):
        """Regression coefficients and residual sd of coord m on 0..m-1."""
        if m not in self._cond_cache:
            if m == 0:
                beta = np.zeros(0)
                var = self.cov[0, 0]
            else:
                beta = np.linalg.solve(self.cov[:m, :m], self.cov[:m, m])
                var = self.cov[m, m] - self.cov[m, :m] @ beta
            self._cond_cache[m] = (beta, math.sqrt(max(var, 0.0)))
        return self._cond_cache[m]

    def _cond_moments(self, m, prefix):
        beta, sd = self._cond_coef(m)
        mu = self.mean[m] + (prefix - self.mean[:m]) @ beta
        return mu, sd

    def conditional_cdf(self, m, prefix, values):
        prefix2, v2 = self._prep_conditional(m, prefix, values)
        mu, sd = self._cond_moments(m, prefix2)
        return special.ndtr((v2 - mu) / sd)

    def _quantile_seed(self, m, prefix):
        mu, sd = self._cond_moments(m, prefix)
        return mu, np.full_like(mu, 2.0 * sd)

    def sample(self, rng, n):
        return self.mean + rng.standard_normal((n, self.dim)) @ self.cholesky.T

    def marginal_ppf(self, m, p):
        sd = math.sqrt(self.cov[m, m])
        return self.mean[m] + sd * special.ndtri(np.asarray(p, dtype=float))

    def to_spec(self):
        return {"kind": "gaussian", "mean": self.mean.tolist(),
                "cov": self.cov.tolist()}


class ProductDistribution(Distribution):
    """Independent product of univariate marginals."""

    def __init__(self, marginals):
        self.marginals = list(marginals)
        if not self.marginals:
            raise DimensionMismatch("need at least one marginal")

    @property
    def dim(self):
        return len(self.marginals)

    def coordinate_support(self, m):
        return self.marginals[m].support

    def log_density(self, z):
        z2, was_1d = _rows(z, self.dim)
        out = np.zeros(z2.shape[0])
        for m, marg in enumerate(self.marginals):
            out += marg.log_pdf(z2[:, m])
        return float(out[0]) if was_1d else out

    def conditional_cdf(self, m, prefix, values):
        _, v2 = self._prep_conditional(m, prefix, values)
        return self.marginals[m].cdf(v2)

    def _quantile_seed(self, m, prefix):
        n = prefix.shape[0]
        marg = self.marginals[m]
        return np.full(n, marg.location), np.full(n, 2.0 * marg.scale_hint)

    def sample(self, rng, n):
        return np.column_stack([marg.sample(rng, n) for marg in self.marginals])

    def marginal_ppf(self, m, p):
        return self.marginals[m].ppf(p)

    def to_spec(self):
        return {"kind": "product",
                "marginals": [m.to_spec() for m in self.marginals]}


class ExpFamily(Distribution):
    """Exponential family  m(z) * exp(eta . T(z) - a(eta)).

    The carrier ``log_base``, statistic ``suff_stat`` and partition
    ``log_partition`` are explicit callables so density ratios and kernel
    diagnostics can be formed symbolically in eta.  Conditional CDFs are
    computed by quadrature on a truncated box (tail mass below 1e-12 by
    construction of the bounds) and are available for dim <= 2, which is all
    the desk-scale experiments use.
    """

    _GRID = 4097

    def __init__(self, dim, stat_dim, log_base, suff_stat, log_partition,
                 eta, bounds=None, family: str = "custom"):
        self._dim = int(dim)
        self.stat_dim = int(stat_dim)
        self.log_base = log_base
        self.suff_stat = suff_stat
        self.log_partition = log_partition
        self.eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if self.eta.shape != (self.stat_dim,):
            raise DimensionMismatch("eta must have length stat_dim")
        self.family = family
        if bounds is None:
            bounds = np.repeat([[-15.0, 15.0]], self._dim, axis=0)
        self.bounds = np.asarray(bounds, dtype=float).reshape(self._dim, 2)
        self._log_a = float(self.log_partition(self.eta))
        self._cache: dict = {}

    @property
    def dim(self):
        return self._dim

    @classmethod
    def gaussian_mean_family(cls, eta):
        """Normal with identity covariance, natural parameter = mean."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        d = eta.shape[0]

        def log_base(z):
            z2 = np.atleast_2d(np.asarray(z, dtype=float))
            return -0.5 * np.sum(z2 * z2, axis=1) - 0.5 * d * _LOG_2PI

        def suff_stat(z):
            return np.atleast_2d(np.asarray(z, dtype=float))

        def log_partition(e):
            e = np.asarray(e, dtype=float)
            return 0.5 * float(e @ e)

        bounds = np.column_stack([eta - 12.0, eta + 12.0])
        return cls(d, d, log_base, suff_stat, log_partition, eta,
                   bounds=bounds, family="gaussian_mean")

    def log_density(self, z):
        z2, was_1d = _rows(z, self.dim)
        out = (np.asarray(self.log_base(z2), dtype=float)
               + np.atleast_2d(self.suff_stat(z2)) @ self.eta - self._log_a)
        return float(out[0]) if was_1d else out

    def coordinate_support(self, m):
        return tuple(self.bounds[m])

    # -- quadrature machinery ------------------------------------------------

    def _axis_grid(self, m):
        return np.linspace(self.bounds[m, 0], self.bounds[m, 1], self._GRID)

    def _marginal_cdf_grid(self):
        """Normalized CDF of the first coordinate on its grid (dim <= 2)."""
        if "marg0" not in self._cache:
            g0 = self._axis_grid(0)
            if self.dim == 1:
                dens = self.density(g0[:, None])
            else:
                g1 = self._axis_grid(1)
                pts = np.column_stack([np.repeat(g0, g1.size),
                                       np.tile(g1, g0.size)])
                dens2 = self.density(pts).reshape(g0.size, g1.size)
                dens = np.trapezoid(dens2, g1, axis=1)
            cdf = np.concatenate([[0.0], cumulative_simpson(dens, x=g0)])
            cdf = np.maximum.accumulate(cdf)
            self._cache["marg0"] = (g0, cdf / cdf[-1])
        return self._cache["marg0"]

    def conditional_cdf(self, m, prefix, values):
        prefix2, v2 = self._prep_conditional(m, prefix, values)
        if self.dim > 2:
            raise NotImplementedError(
                "quadrature conditionals are provided for dim <= 2")
        if m == 0:
            grid, cdf = self._marginal_cdf_grid()
            return np.interp(v2, grid, cdf, left=0.0, right=1.0)
        # conditional of the second coordinate given the first, row by row
        g1 = self._axis_grid(1)
        pts = np.column_stack([
            np.repeat(prefix2[:, 0], g1.size), np.tile(g1, prefix2.shape[0])])
        dens = self.density(pts).reshape(prefix2.shape[0], g1.size)
        cdf = np.concatenate(
            [np.zeros((dens.shape[0], 1)), cumulative_simpson(dens, x=g1, axis=1)],
            axis=1)
        cdf = np.maximum.accumulate(cdf, axis=1)
        total = cdf[:, -1:]
        if np.any(total <= 0):
            raise BracketFailure("conditional slice carries no mass on the box")
        cdf = cdf / total
        # row-wise linear interpolation on the shared grid
        idx = np.clip(np.searchsorted(g1, v2, side="right") - 1, 0, g1.size - 2)
        x0 = g1[idx]
        w = np.clip((v2 - x0) / (g1[idx + 1] - x0), 0.0, 1.0)
        r = np.arange(cdf.shape[0])
        out = cdf[r, idx] * (1 - w) + cdf[r, idx + 1] * w
        out[v2 <= g1[0]] = 0.0
        out[v2 >= g1[-1]] = 1.0
        return out

    def _quantile_seed(self, m, prefix):
        n = prefix.shape[0]
        mid = 0.5 * (self.bounds[m, 0] + self.bounds[m, 1])
        width = 0.25 * (self.bounds[m, 1] - self.bounds[m, 0])
        return np.full(n, mid), np.full(n, width)

    def with_eta(self, eta):
        """Same structural family, different natural parameter."""
        return ExpFamily(self.dim, self.stat_dim, self.log_base,
                         self.suff_stat, self.log_partition, eta,
                         bounds=self.bounds, family=self.family)

    def to_spec(self):
        if self.family != "gaussian_mean":
            raise NotImplementedError(
                "only named families serialize; custom callables do not")
        return {"kind": "expfam", "family": self.family,
                "eta": self.eta.tolist()}


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def sample(dist: Distribution, rng: np.random.Generator, n: int):
    """Draw ``n`` rows from ``dist`` using the given stream."""
    if n <= 0:
        raise ValueError("n must be positive")
    return dist.sample(rng, n)


def conditional_quantile(dist: Distribution, m: int, prefix, p,
                         tol: float = 1e-10):
    """Inverse of ``dist``'s conditional CDF for coordinate ``m``."""
    return dist.conditional_quantile(m, prefix, p, tol=tol)


def expfam_density_ratio_log(fam_a: ExpFamily, fam_b: ExpFamily, z):
    """Log density ratio of two members of one exponential family.

    The carrier cancels exactly, leaving
    ``(eta_a - eta_b) . T(z) - a(eta_a) + a(eta_b)``.
    """
    if not isinstance(fam_a, ExpFamily) or not isinstance(fam_b, ExpFamily):
        raise MismatchedFamily("both operands must be exponential families")
    structural_match = (
        fam_a.family == fam_b.family != "custom"
        or (fam_a.suff_stat is fam_b.suff_stat
            and fam_a.log_base is fam_b.log_base
            and fam_a.log_partition is fam_b.log_partition))
    if (not structural_match or fam_a.dim != fam_b.dim
            or fam_a.stat_dim != fam_b.stat_dim):
        raise MismatchedFamily(
            "operands must share carrier, statistic and partition")
    z2, was_1d = _rows(z, fam_a.dim)
    t = np.atleast_2d(fam_a.suff_stat(z2))
    out = (t @ (fam_a.eta - fam_b.eta)
           - fam_a.log_partition(fam_a.eta) + fam_b.log_partition(fam_b.eta))
    return float(out[0]) if was_1d else out


def interdecile_box(dist: Distribution) -> np.ndarray:
    """Per-coordinate [q10, q90] box of the marginals, shape (dim, 2)."""
    if isinstance(dist, (GaussianDistribution, ProductDistribution)):
        lo = [dist.marginal_ppf(m, 0.1) for m in range(dist.dim)]
        hi = [dist.marginal_ppf(m, 0.9) for m in range(dist.dim)]
        return np.column_stack([lo, hi]).astype(float)
    raise TypeError("interdecile box needs analytic marginal quantiles")


# ---------------------------------------------------------------------------
# JSON specs
# ---------------------------------------------------------------------------

_UNIVARIATE_KINDS = {
    "normal": lambda s: Normal1D(s.get("loc", 0.0), s.get("scale", 1.0)),
    "laplace": lambda s: Laplace1D(s.get("loc", 0.0), s.get("scale", 1.0)),
    "logistic": lambda s: Logistic1D(s.get("loc", 0.0), s.get("scale", 1.0)),
    "exponential": lambda s: Exponential1D(s.get("rate", 1.0)),
    "gaussian_mixture": lambda s: GaussianMixture1D(
        s["weights"], s["locs"], s["scales"]),
}

_EXPFAM_FAMILIES = {
    "gaussian_mean": lambda s: ExpFamily.gaussian_mean_family(s["eta"]),
}


def univariate_from_spec(spec: dict) -> Univariate:
    kind = spec.get("kind")
    if kind not in _UNIVARIATE_KINDS:
        raise ValueError(f"unknown marginal kind: {kind!r}")
    return _UNIVARIATE_KINDS[kind](spec)


def distribution_from_spec(spec: dict) -> Distribution:
    """Rebuild a distribution from its JSON record."""
    kind = spec.get("kind")
    if kind == "gaussian":
        return GaussianDistribution(spec["mean"], spec["cov"])
    if kind == "product":
        return ProductDistribution(
            [univariate_from_spec(m) for m in spec["marginals"]])
    if kind == "expfam":
        family = spec.get("family")
        if family not in _EXPFAM_FAMILIES:
            raise ValueError(f"unknown exponential family: {family!r}")
        return _EXPFAM_FAMILIES[family](spec)
    raise ValueError(f"unknown distribution kind: {kind!r}")


def distribution_to_spec(dist: Distribution) -> dict:
    return dist.to_spec()
