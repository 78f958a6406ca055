"""Residual latent transforms between observationally equivalent models.

Two models inducing the same observation law differ by an invertible
self-map of the latent space.  This module constructs that transform from a
generator pair, certifies candidates distributionally (two-direction
pushforward checks) and structurally (Jacobian probes), measures distance
from the identity and from constraint classes (statistic kernels, pinned
coordinates), and applies transforms to model parameters so equivalence
classes can be walked explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RangeMismatch
from .linear import LinearGenerator
from .measures import Distribution, GaussianDistribution
from .transport import (AffineMap, Automorphism, ComposedMap, PushforwardReport,
                        TriangularMap, component_wise_check, pushforward_check)

__all__ = [
    "TransportedDistribution",
    "IndeterminacyReport",
    "FixedCoordinateReport",
    "generator_transform",
    "identity_deviation",
    "is_identity_ae",
    "kernel_residual",
    "fixed_coordinate_check",
    "indeterminacy_audit",
    "pushforward_distribution",
    "act_on_params",
]


# ---------------------------------------------------------------------------
# transported laws
# ---------------------------------------------------------------------------

class TransportedDistribution(Distribution):
    """Image of a base law under an invertible map, sampled by pushing.

    Conditional CDFs are not exposed (``has_conditionals`` is false), which
    routes goodness-of-fit checks through the inverse direction.  Densities
    are available exactly when the map can report its Jacobian determinant.
    """

    has_conditionals = False

    def __init__(self, base: Distribution, transform, ldj_fn=None):
        self.base = base
        self.transform = transform
        if ldj_fn is None and isinstance(transform, TriangularMap):
            ldj_fn = transform.log_det_jacobian
        self._ldj_fn = ldj_fn
        self.full_support = getattr(base, "full_support", True)

    @property
    def dim(self) -> int:
        return self.base.dim

    def log_density(self, z):
        if self._ldj_fn is None:
            raise NotImplementedError(
                "transform does not expose a Jacobian determinant")
        z2 = np.atleast_2d(np.asarray(z, dtype=float))
        w = np.atleast_2d(self.transform.inverse(z2))
        out = self.base.log_density(w) - np.asarray(self._ldj_fn(w))
        return out if np.asarray(z).ndim > 1 else float(out[0])

    def conditional_cdf(self, m, prefix, values):
        raise NotImplementedError("transported laws do not expose conditionals")

    def sample(self, rng, n):
        return np.atleast_2d(self.transform.forward(self.base.sample(rng, n)))


def pushforward_distribution(transform, dist: Distribution) -> Distribution:
    """Law of ``transform(Z)`` for ``Z ~ dist``, closed form when possible.

    Gaussian laws stay Gaussian under affine transforms; everything else is
    wrapped as a sampled law whose density, when the transform can price its
    volume change, comes from the change of variables.
    """
    lin = None
    if isinstance(transform, AffineMap):
        lin = (transform.matrix, transform.offset)
    elif isinstance(transform, Automorphism):
        lin = transform.linear_parts()
    if lin is not None and isinstance(dist, GaussianDistribution):
        M, b = lin
        return GaussianDistribution(M @ dist.mean + b, M @ dist.cov @ M.T)
    if isinstance(transform, Automorphism):
        if isinstance(transform.source_map, TriangularMap):
            return TransportedDistribution(dist, transform.source_map)
        if lin is not None:
            M, _ = lin
            const = float(np.linalg.slogdet(M)[1])
            return TransportedDistribution(
                dist, transform,
                ldj_fn=lambda w: np.full(np.atleast_2d(w).shape[0], const))
    return TransportedDistribution(dist, transform)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _maybe_dict(report):
    return None if report is None else report.to_dict()


@dataclass
class IndeterminacyReport:
    """Verdicts about one candidate latent transform.

    Identity deviations are always present; the distributional check, the
    statistic-kernel residual and the pinned-coordinate deviations appear
    when the producing operation runs them.  ``structure`` holds cumulative
    flags: an identity is also componentwise, triangular and affine.
    """

    identity_sup_dev: float
    identity_rms_dev: float
    pushforward_pass: bool | None = None
    forward_check: PushforwardReport | None = None
    inverse_check: PushforwardReport | None = None
    kernel_residual: float | None = None
    fixed_coord_dev: dict | None = None
    structure: dict = field(default_factory=dict)
    n: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "identity_sup_dev": self.identity_sup_dev,
            "identity_rms_dev": self.identity_rms_dev,
            "pushforward_pass": (None if self.pushforward_pass is None
                                 else bool(self.pushforward_pass)),
            "forward_check": _maybe_dict(self.forward_check),
            "inverse_check": _maybe_dict(self.inverse_check),
            "kernel_residual": self.kernel_residual,
            "fixed_coord_dev": self.fixed_coord_dev,
            "structure": {k: bool(v) for k, v in self.structure.items()},
            "n": self.n,
            "details": self.details,
        }


@dataclass
class FixedCoordinateReport:
    """Per-coordinate sup deviation from the identity on a coordinate set."""

    deviations: dict
    passed: bool
    tol: float

    def to_dict(self):
        return {"deviations": {int(k): float(v)
                               for k, v in self.deviations.items()},
                "passed": bool(self.passed), "tol": self.tol}


# ---------------------------------------------------------------------------
# constructing the latent transform from a generator pair
# ---------------------------------------------------------------------------

def _range_guard(gen_a, gen_b, probes, tol):
    """Raise unless gen_a's outputs survive a round trip through gen_b."""
    y = np.atleast_2d(gen_a.forward(probes))
    scale = 1.0 + float(np.abs(y).max())
    if isinstance(gen_b, LinearGenerator):
        residual = gen_b.range_residual(y)
    else:
        back = np.atleast_2d(gen_b.forward(np.atleast_2d(gen_b.inverse(y))))
        residual = float(np.abs(back - y).max())
    if residual > tol * scale:
        raise RangeMismatch(
            f"generator ranges differ: round-trip residual {residual:.3e} "
            f"exceeds {tol:.1e} at scale {scale:.3e}")
    return residual


def generator_transform(gen_a, gen_b, probes=None,
                        tol: float = 1e-6) -> Automorphism:
    """Latent transform linking two generators of the same observations.

    The result sends model-a latents to model-b latents: forward is
    ``gen_b``'s left inverse after ``gen_a``, inverse is the song played
    backwards.  Affine pairs come back in closed form with a linear tag;
    triangular-map pairs compose exactly and carry their composition as the
    source map.  Probes (default: origin plus unit directions) certify that
    ``gen_a``'s outputs lie on ``gen_b``'s range, else ``RangeMismatch``.
    """
    dz_a = getattr(gen_a, "latent_dim", None)
    dz_b = getattr(gen_b, "latent_dim", None)
    if dz_a is None or dz_b is None or dz_a != dz_b:
        raise DimensionMismatch("generators must share a latent dimension")
    dz = int(dz_a)
    if probes is None:
        probes = np.vstack([np.zeros(dz), np.eye(dz), -np.eye(dz)])
    probes = np.atleast_2d(np.asarray(probes, dtype=float))

    if isinstance(gen_a, LinearGenerator) and isinstance(gen_b, LinearGenerator):
        if gen_a.obs_dim != gen_b.obs_dim:
            raise DimensionMismatch("generators must share an observation space")
        _range_guard(gen_a, gen_b, probes, tol)
        M = gen_b._pinv @ gen_a.loading
        c = gen_b._pinv @ (gen_a.offset - gen_b.offset)
        return Automorphism.from_matrix(M, c)

    if isinstance(gen_a, TriangularMap) and isinstance(gen_b, TriangularMap):
        return Automorphism.from_map(ComposedMap([gen_a, gen_b.inverted()]))

    _range_guard(gen_a, gen_b, probes, tol)

    def fwd(Z):
        return np.atleast_2d(gen_b.inverse(gen_a.forward(Z)))

    def inv(W):
        return np.atleast_2d(gen_a.inverse(gen_b.forward(W)))

    return Automorphism(dz, fwd, inv)


# ---------------------------------------------------------------------------
# identity and constraint predicates
# ---------------------------------------------------------------------------

def identity_deviation(transform, probes):
    """(sup, rms) of ``transform(z) - z`` over the probe rows."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    delta = np.atleast_2d(transform.forward(probes)) - probes
    return float(np.abs(delta).max()), float(np.sqrt(np.mean(delta * delta)))


def is_identity_ae(transform, reference: Distribution, n: int, tol: float,
                   rng: np.random.Generator):
    """Is the transform the identity off a reference-null set?

    Samples the reference law and compares the transform to the identity in
    sup norm (RMS reported alongside).  Returns the verdict together with
    the report carrying both deviations.  Needs at least 10^3 samples to
    deserve the "almost everywhere" reading.
    """
    if n < 1000:
        raise ValueError("need n >= 1000 samples for an a.e. verdict")
    z = reference.sample(rng, n)
    sup, rms = identity_deviation(transform, z)
    passed = bool(sup < tol)
    report = IndeterminacyReport(
        identity_sup_dev=sup, identity_rms_dev=rms, n=n,
        structure={"is_identity_ae": passed},
        details={"tol": tol})
    return passed, report


def kernel_residual(suff_stat, transform, contrasts, probes) -> float:
    """Largest row-space component of ``T(z) - T(transform(z))``.

    ``contrasts`` rows span the constraint space; each statistic difference
    is projected onto that row space and the largest projection norm comes
    back, so a near-zero value certifies that the transform only moves
    statistics along the constraint kernel.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    moved = np.atleast_2d(transform.forward(probes))
    diff = (np.atleast_2d(suff_stat(probes))
            - np.atleast_2d(suff_stat(moved)))
    M = np.atleast_2d(np.asarray(contrasts, dtype=float))
    if M.shape[1] != diff.shape[1]:
        raise DimensionMismatch(
            "constraint columns must match the statistic dimension")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    rows = vt[s > 1e-12 * s[0]]
    proj = diff @ rows.T @ rows
    return float(np.sqrt(np.sum(proj * proj, axis=1)).max())


def fixed_coordinate_check(transform, coords, probes,
                           tol: float = 1e-8) -> FixedCoordinateReport:
    """Sup deviation from the identity on each of the named coordinates."""
    coords = [int(c) for c in coords]
    if not coords:
        raise ValueError("coordinate set must be non-empty")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    moved = np.atleast_2d(transform.forward(probes))
    dev = np.abs(moved - probes).max(axis=0)
    devs = {c: float(dev[c]) for c in coords}
    return FixedCoordinateReport(deviations=devs,
                                 passed=bool(max(devs.values()) < tol),
                                 tol=tol)


# ---------------------------------------------------------------------------
# the audit
# ---------------------------------------------------------------------------

def _affine_fit_residual(transform, probes) -> float:
    """Sup misfit of the best affine approximation on the probes."""
    vals = np.atleast_2d(transform.forward(probes))
    X = np.column_stack([probes, np.ones(probes.shape[0])])
    coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
    return float(np.abs(X @ coef - vals).max())


def structure_flags(transform, probes, structure_tol: float = 1e-4,
                    identity_tol: float = 1e-6) -> dict:
    """Classify a transform on probe points: affine, triangular, componentwise.

    Checks run cheapest-first — affine fit residual, then cross-partials
    above the diagonal, then all off-diagonal cross-partials — and the flags
    are cumulative with the identity implying every other structure.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    scale = 1.0 + float(np.abs(probes).max())

    exact_affine = (isinstance(transform, AffineMap)
                    or (isinstance(transform, Automorphism)
                        and transform.linear_parts() is not None))
    is_affine = exact_affine or _affine_fit_residual(transform, probes) < structure_tol

    cw = component_wise_check(transform, probes, tol=structure_tol)
    source = getattr(transform, "source_map", None)
    is_triangular = (isinstance(transform, TriangularMap)
                     or isinstance(source, TriangularMap)
                     or cw.max_upper < structure_tol)
    is_component_wise = cw.max_offdiag < structure_tol

    sup, _ = identity_deviation(transform, probes)
    is_identity = sup < identity_tol * scale

    is_component_wise = is_component_wise or is_identity
    is_triangular = is_triangular or is_component_wise
    is_affine = is_affine or is_identity
    return {"is_identity_ae": bool(is_identity),
            "is_component_wise": bool(is_component_wise),
            "is_triangular": bool(is_triangular),
            "is_affine": bool(is_affine)}


def indeterminacy_audit(theta_a, theta_b, n: int, rng: np.random.Generator,
                        alpha: float = 0.01, identity_tol: float = 1e-6,
                        structure_tol: float = 1e-4,
                        probes=None) -> IndeterminacyReport:
    """Full audit of the transform linking two models.

    Builds the generator transform, tests it distributionally in both
    directions (does it push prior-a onto prior-b, and its inverse the
    other way, coordinatewise KS at level ``alpha`` with Bonferroni
    correction), measures identity deviations on prior-a samples, and
    classifies the transform's structure from finite-difference Jacobians.
    """
    transform = generator_transform(theta_a.generator, theta_b.generator)
    fwd = pushforward_check(transform, theta_a.prior, theta_b.prior, n, rng,
                            alpha=alpha)
    inv = pushforward_check(transform.inverted(), theta_b.prior,
                            theta_a.prior, n, rng, alpha=alpha)

    z = theta_a.prior.sample(rng, n)
    sup, rms = identity_deviation(transform, z)

    if probes is None:
        probes = z[:min(64, z.shape[0])]
    flags = structure_flags(transform, probes, structure_tol=structure_tol,
                            identity_tol=identity_tol)
    flags["is_identity_ae"] = bool(
        sup < identity_tol * (1.0 + float(np.abs(z).max())))
    if flags["is_identity_ae"]:
        flags["is_component_wise"] = True
        flags["is_triangular"] = True
        flags["is_affine"] = True

    return IndeterminacyReport(
        identity_sup_dev=sup, identity_rms_dev=rms,
        pushforward_pass=bool(fwd.passed and inv.passed),
        forward_check=fwd, inverse_check=inv,
        structure=flags, n=n,
        details={"alpha": alpha, "identity_tol": identity_tol,
                 "structure_tol": structure_tol})


# ---------------------------------------------------------------------------
# group action on model parameters
# ---------------------------------------------------------------------------

class _TransformedGenerator:
    """Generator precomposed with the inverse of a latent transform."""

    def __init__(self, generator, transform):
        self.generator = generator
        self.transform = transform
        self.latent_dim = getattr(generator, "latent_dim", transform.dim)

    def forward(self, Z):
        return self.generator.forward(self.transform.inverse(Z))

    def __call__(self, Z):
        return self.forward(Z)

    def inverse(self, X):
        return self.transform.forward(self.generator.inverse(X))


def act_on_params(transform, params):
    """Twist a model by a latent transform without changing what it emits.

    The new generator undoes the transform before generating, and the new
    prior is the transform's pushforward of the old one, so the observation
    law is untouched.  Affine generators twisted by linear transforms stay
    affine; otherwise the generator is a lazy composition and the prior a
    transported law.
    """
    from .envs import ModelParams
    gen = params.generator
    lin = transform.linear_parts() if isinstance(transform, Automorphism) else None
    if lin is None and isinstance(transform, AffineMap):
        lin = (transform.matrix, transform.offset)
    if isinstance(gen, LinearGenerator) and lin is not None:
        M, b = lin
        Minv = np.linalg.inv(M)
        F_new = gen.loading @ Minv
        new_gen = LinearGenerator(F_new, gen.offset - F_new @ b)
    else:
        new_gen = _TransformedGenerator(gen, transform)
    new_prior = pushforward_distribution(transform, params.prior)
    name = f"{params.name}-equiv" if getattr(params, "name", "") else "equiv"
    return ModelParams(generator=new_gen, prior=new_prior, name=name)
