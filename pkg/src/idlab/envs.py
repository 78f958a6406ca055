"""Multi-environment models and desk-scale estimation routines.

An environment set holds one latent prior per environment, optionally tied
together as a single exponential family with shared carrier and statistic
(only the natural parameter varies).  On top of that the module provides the
experiment plumbing: synthetic data generation, the three validation clauses
a strongly identifiable configuration must satisfy, moment and quantile
based fitting routines whose outputs are triangular maps or linear
generators, and the multi-view agreement verifier.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, RankDeficient, SingularCovariance)
from .measures import (Distribution, GaussianDistribution, ProductDistribution,
                       _LOG_2PI)
from .transport import AffineMap, TriangularMap

__all__ = [
    "ModelParams",
    "SharedStatistic",
    "EnvironmentSet",
    "EnvironmentData",
    "MultiViewModel",
    "SpanReport",
    "ValidationReport",
    "AffineRelation",
    "MarginalQuantileMap",
    "generate_environment_data",
    "spanning_check",
    "validate_strong_vae_config",
    "affine_relation_fit",
    "fit_gaussian_kr",
    "fit_marginal_quantile_transport",
    "fit_env_affine_generator",
    "verify_multiview",
]

_RANK_REL_TOL = 1e-8


def _svd_rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_REL_TOL * s[0]))


@dataclass
class ModelParams:
    """A generative model: injective generator plus latent prior.

    The generator exposes ``forward``/``inverse`` (inverse exact on its
    range) and a ``latent_dim``.
    """

    generator: object
    prior: Distribution
    name: str = ""

    def roundtrip_deviation(self, rng: np.random.Generator, n: int = 256) -> float:
        """Sup norm of inverse(forward(z)) - z over prior samples."""
        z = self.prior.sample(rng, n)
        back = self.generator.inverse(self.generator.forward(z))
        return float(np.abs(back - z).max())


@dataclass
class SharedStatistic:
    """Carrier and sufficient statistic shared by all environments."""

    suff_stat: object          # (n, dz) -> (n, K)
    log_base: object           # (n, dz) -> (n,)
    log_partition: object      # eta -> float
    stat_dim: int
    injective_coord: int = 0   # statistic coordinate certified monotone


class EnvironmentSet:
    """Latent priors indexed by environment, optionally one shared family."""

    def __init__(self, priors, eta_matrix=None,
                 shared_stat: SharedStatistic | None = None, labels=None):
        self.priors = list(priors)
        if not self.priors:
            raise DimensionMismatch("need at least one environment")
        dims = {p.dim for p in self.priors}
        if len(dims) != 1:
            raise DimensionMismatch("environment priors must share a dimension")
        self.eta_matrix = (None if eta_matrix is None
                           else np.atleast_2d(np.asarray(eta_matrix, dtype=float)))
        if (self.eta_matrix is not None
                and self.eta_matrix.shape[0] != len(self.priors)):
            raise DimensionMismatch("one eta row per environment required")
        self.shared_stat = shared_stat
        self.labels = (list(labels) if labels is not None
                       else [f"env{i}" for i in range(len(self.priors))])

    @property
    def n_envs(self) -> int:
        return len(self.priors)

    @property
    def latent_dim(self) -> int:
        return self.priors[0].dim

    @property
    def envs(self) -> dict:
        """Label-to-prior view of the environment collection."""
        return dict(zip(self.labels, self.priors))

    @classmethod
    def gaussian_mean_envs(cls, means) -> "EnvironmentSet":
        """Unit-covariance Gaussians whose natural parameters are the means."""
        means = np.atleast_2d(np.asarray(means, dtype=float))
        d = means.shape[1]
        priors = [GaussianDistribution(mu, np.eye(d)) for mu in means]

        def suff_stat(z):
            return np.atleast_2d(np.asarray(z, dtype=float))

        def log_base(z):
            z2 = np.atleast_2d(np.asarray(z, dtype=float))
            return -0.5 * np.sum(z2 * z2, axis=1) - 0.5 * d * _LOG_2PI

        def log_partition(eta):
            eta = np.asarray(eta, dtype=float)
            return 0.5 * float(eta @ eta)

        stat = SharedStatistic(suff_stat=suff_stat, log_base=log_base,
                               log_partition=log_partition, stat_dim=d,
                               injective_coord=0)
        return cls(priors, eta_matrix=means, shared_stat=stat)

    def family_residual(self, grid_half_width: float = 3.0,
                        points_per_dim: int = 7) -> float:
        """Sup gap between each prior's density and its shared-family form."""
        if self.shared_stat is None or self.eta_matrix is None:
            raise ValueError("no shared family is declared")
        d = self.latent_dim
        axes = [np.linspace(-grid_half_width, grid_half_width, points_per_dim)] * d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        worst = 0.0
        for prior, eta in zip(self.priors, self.eta_matrix):
            lp = (np.asarray(self.shared_stat.log_base(grid))
                  + np.atleast_2d(self.shared_stat.suff_stat(grid)) @ eta
                  - self.shared_stat.log_partition(eta))
            gap = np.abs(np.exp(lp) - prior.density(grid)).max()
            worst = max(worst, float(gap))
        return worst


@dataclass
class EnvironmentData:
    """Paired observations, latents and environment codes."""

    x: np.ndarray
    z: np.ndarray
    env: np.ndarray
    n_per_env: int

    def rows_for(self, code: int):
        mask = self.env == code
        return self.x[mask], self.z[mask]

    def to_csv(self, path):
        dx, dz = self.x.shape[1], self.z.shape[1]
        header = ([f"x_{i+1}" for i in range(dx)]
                  + [f"z_{i+1}" for i in range(dz)] + ["env"])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for xi, zi, ei in zip(self.x, self.z, self.env):
                writer.writerow([f"{v:.17g}" for v in xi]
                                + [f"{v:.17g}" for v in zi] + [int(ei)])

    @classmethod
    def from_csv(cls, path) -> "EnvironmentData":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [r for r in reader if r]
        dx = sum(1 for h in header if h.startswith("x_"))
        dz = sum(1 for h in header if h.startswith("z_"))
        data = np.array([[float(v) for v in r] for r in rows])
        env = data[:, -1].astype(int)
        counts = np.bincount(env)
        return cls(x=data[:, :dx], z=data[:, dx:dx + dz], env=env,
                   n_per_env=int(counts.max()) if counts.size else 0)


def generate_environment_data(envset: EnvironmentSet, generator,
                              noise_sd: float, n_per_env: int,
                              rng: np.random.Generator) -> EnvironmentData:
    """Draw latents per environment and push them through the generator."""
    if n_per_env <= 0:
        raise ValueError("n_per_env must be positive")
    xs, zs, codes = [], [], []
    for code, prior in enumerate(envset.priors):
        z = prior.sample(rng, n_per_env)
        x = np.atleast_2d(generator.forward(z))
        if noise_sd > 0:
            x = x + noise_sd * rng.standard_normal(x.shape)
        xs.append(x)
        zs.append(z)
        codes.append(np.full(n_per_env, code, dtype=int))
    return EnvironmentData(x=np.vstack(xs), z=np.vstack(zs),
                           env=np.concatenate(codes), n_per_env=n_per_env)


@dataclass
class SpanReport:
    spans: bool
    contrast_rank: int
    raw_rank: int
    stat_dim: int
    n_envs: int

    def to_dict(self):
        return {"spans": bool(self.spans), "contrast_rank": self.contrast_rank,
                "raw_rank": self.raw_rank, "stat_dim": self.stat_dim,
                "n_envs": self.n_envs}


def spanning_check(etas) -> SpanReport:
    """Do the natural-parameter contrasts span the statistic space?"""
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    n_envs, K = etas.shape
    contrasts = etas[1:] - etas[0]
    rank = _svd_rank(contrasts)
    return SpanReport(spans=bool(rank == K), contrast_rank=rank,
                      raw_rank=_svd_rank(etas), stat_dim=K, n_envs=n_envs)


@dataclass
class ValidationReport:
    passed: bool
    failing_clause: str | None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": bool(self.passed),
                "failing_clause": self.failing_clause,
                "details": {k: (v.to_dict() if hasattr(v, "to_dict") else v)
                            for k, v in self.details.items()}}


def validate_strong_vae_config(envset: EnvironmentSet,
                               grid_half_width: float = 4.0,
                               grid_points: int = 41) -> ValidationReport:
    """Check the three clauses behind strong multi-environment recovery.

    In order: the natural-parameter contrasts span the statistic space; the
    shared carrier is strictly positive on a latent grid; the declared
    coordinate of the sufficient statistic is strictly monotone along its
    latent axis.  The first failing clause is reported.
    """
    if envset.shared_stat is None or envset.eta_matrix is None:
        raise ValueError("configuration must declare one shared family")
    stat = envset.shared_stat
    details: dict = {}

    span = spanning_check(envset.eta_matrix)
    details["spanning"] = span
    if not span.spans:
        return ValidationReport(False, "spanning", details)

    d = envset.latent_dim
    pts = min(grid_points, 9)
    axes = [np.linspace(-grid_half_width, grid_half_width, pts)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    log_m = np.asarray(stat.log_base(grid), dtype=float)
    details["min_log_base"] = float(log_m.min())
    if not np.all(np.isfinite(log_m)):
        return ValidationReport(False, "base_measure_positivity", details)

    k = stat.injective_coord
    t = np.linspace(-grid_half_width, grid_half_width, grid_points)
    line = np.zeros((grid_points, d))
    line[:, min(k, d - 1)] = t
    vals = np.atleast_2d(stat.suff_stat(line))[:, k]
    diffs = np.diff(vals)
    monotone = bool(np.all(diffs > 0) or np.all(diffs < 0))
    details["statistic_range"] = (float(vals.min()), float(vals.max()))
    if not monotone:
        return ValidationReport(False, "statistic_monotonicity", details)

    return ValidationReport(True, None, details)


@dataclass
class AffineRelation:
    """Fitted affine link  stats_b ~ stats_a @ matrix + offset."""

    matrix: np.ndarray
    offset: np.ndarray
    residual: float
    condition_number: float

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "offset": self.offset.tolist(),
                "residual": self.residual,
                "condition_number": self.condition_number}


def affine_relation_fit(stats_a, stats_b) -> AffineRelation:
    """Least-squares affine map between paired sufficient statistics.

    Raises ``RankDeficient`` when the centered predictor statistics do not
    span their space, so the linear part would be unidentified.
    """
    Ta = np.atleast_2d(np.asarray(stats_a, dtype=float))
    Tb = np.atleast_2d(np.asarray(stats_b, dtype=float))
    if Ta.shape != Tb.shape:
        raise DimensionMismatch("statistic arrays must have equal shapes")
    n, K = Ta.shape
    if _svd_rank(Ta - Ta.mean(axis=0)) < K:
        raise RankDeficient("centered statistics are rank deficient")
    X = np.column_stack([Ta, np.ones(n)])
    coef, *_ = np.linalg.lstsq(X, Tb, rcond=None)
    L, d = coef[:K], coef[K]
    resid = float(np.sqrt(np.mean((X @ coef - Tb) ** 2)))
    return AffineRelation(matrix=L, offset=d, residual=resid,
                          condition_number=float(np.linalg.cond(L)))


def fit_gaussian_kr(samples, target_prior: GaussianDistribution, *,
                    mean=None, cov=None) -> AffineMap:
    """Affine transport sending the prior onto a Gaussian moment fit.

    Moments come from ``samples`` (requiring at least ``10 * dim`` rows) or
    may be passed directly for the population-exact path.  The returned
    map's inverse plays the role of the fitted model's latent extraction.
    """
    if not isinstance(target_prior, GaussianDistribution):
        raise TypeError("target prior must be Gaussian")
    d = target_prior.dim
    if samples is not None:
        S = np.atleast_2d(np.asarray(samples, dtype=float))
        if S.shape[0] < 10 * d:
            raise ValueError("need at least 10 * dim samples for a moment fit")
        mean = S.mean(axis=0)
        cov = np.cov(S, rowvar=False, ddof=1).reshape(d, d)
    elif mean is None or cov is None:
        raise ValueError("provide samples or explicit moments")
    mean = np.asarray(mean, dtype=float).reshape(d)
    cov = np.asarray(cov, dtype=float).reshape(d, d)
    try:
        L_fit = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("sample covariance is not positive definite") from exc
    from scipy.linalg import solve_triangular
    L = L_fit @ solve_triangular(target_prior.cholesky, np.eye(d), lower=True)
    return AffineMap(L, mean - L @ target_prior.mean)


class MarginalQuantileMap(TriangularMap):
    """Componentwise map sending prior marginals onto empirical quantiles.

    Each component interpolates linearly between quantile knots (order
    statistics at fixed levels) and extends the end segments linearly into
    the tails, so the map is strictly increasing on all of R.
    """

    def __init__(self, prior: ProductDistribution, levels, knots):
        self.prior = prior
        self.levels = np.asarray(levels, dtype=float)
        self.knots = np.atleast_2d(np.asarray(knots, dtype=float))
        if self.knots.shape != (prior.dim, self.levels.shape[0]):
            raise DimensionMismatch("need one knot row per coordinate")
        self.dim = prior.dim

    @staticmethod
    def _interp(x, xp, fp):
        out = np.interp(x, xp, fp)
        lo = x < xp[0]
        hi = x > xp[-1]
        if np.any(lo):
            slope = (fp[1] - fp[0]) / (xp[1] - xp[0])
            out = np.where(lo, fp[0] + (x - xp[0]) * slope, out)
        if np.any(hi):
            slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
            out = np.where(hi, fp[-1] + (x - xp[-1]) * slope, out)
        return out

    def component(self, m, prefix, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = self.prior.marginals[m].cdf(x)
        return self._interp(u, self.levels, self.knots[m])

    def inverse(self, X):
        X2 = np.atleast_2d(np.asarray(X, dtype=float))
        was_1d = np.asarray(X).ndim == 1
        out = np.empty_like(X2)
        for m in range(self.dim):
            u = self._interp(X2[:, m], self.knots[m], self.levels)
            out[:, m] = self.prior.marginals[m].ppf(
                np.clip(u, 1e-12, 1.0 - 1e-12))
        return out[0] if was_1d else out

    def inverted(self):
        raise NotImplementedError("use .inverse; the map is a fit artifact")


def fit_marginal_quantile_transport(samples, target_prior: ProductDistribution,
                                    grid_size: int = 257) -> MarginalQuantileMap:
    """Fit a componentwise transport from prior marginals to data marginals."""
    if not isinstance(target_prior, ProductDistribution):
        raise TypeError("prior must be a product distribution")
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if S.shape[0] < grid_size:
        raise ValueError("need at least grid_size samples")
    if S.shape[1] != target_prior.dim:
        raise DimensionMismatch("sample and prior dimensions differ")
    levels = (np.arange(grid_size) + 0.5) / grid_size
    knots = np.quantile(S, levels, axis=0).T
    # enforce strict monotonicity of the knot rows
    eps = 1e-12 * max(1.0, float(np.abs(knots).max()))
    for m in range(knots.shape[0]):
        for j in range(1, knots.shape[1]):
            if knots[m, j] <= knots[m, j - 1]:
                knots[m, j] = knots[m, j - 1] + eps
    return MarginalQuantileMap(target_prior, levels, knots)


def fit_env_affine_generator(data: EnvironmentData, envset: EnvironmentSet):
    """Recover an affine generator from per-environment observation means.

    Solves ``mean_e ~ b + W mu_e`` across environments by least squares;
    with latent-mean anchors spanning the latent space this pins the full
    matrix ``W`` including any rotation part.  Requires at least
    ``latent_dim + 1`` environments in general position.
    """
    from .linear import LinearGenerator
    E = envset.n_envs
    dz = envset.latent_dim
    mus = np.array([np.asarray(p.mean, dtype=float) for p in envset.priors])
    means = np.array([data.rows_for(e)[0].mean(axis=0) for e in range(E)])
    design = np.column_stack([np.ones(E), mus])
    if E < dz + 1 or _svd_rank(design) < dz + 1:
        raise RankDeficient("environment means do not pin an affine generator")
    coef, *_ = np.linalg.lstsq(design, means, rcond=None)
    return LinearGenerator(coef[1:].T, coef[0])


@dataclass
class MultiViewModel:
    """One generator per view, all driven by a single shared latent."""

    generators: dict
    prior: Distribution | None = None


def verify_multiview(model_a: MultiViewModel, model_b: MultiViewModel,
                     prior: Distribution, n: int, rng: np.random.Generator,
                     tol: float = 1e-6):
    """Compare the per-view latent transforms of two multi-view models.

    Each view contributes the transform linking the two models' generators
    for that view; observationally equivalent models force every view onto
    the same transform, and one view whose transform is the identity pins
    the shared latent.  The report's headline deviations belong to the best
    view; per-view deviations and the max pairwise disagreement ride along
    in the details.
    """
    from .indeterminacy import (IndeterminacyReport, generator_transform,
                                identity_deviation)
    if set(model_a.generators) != set(model_b.generators):
        raise DimensionMismatch("models must share their view labels")
    z = prior.sample(rng, n)
    values, sups, rmss = {}, {}, {}
    for label in sorted(model_a.generators):
        transform = generator_transform(model_a.generators[label],
                                        model_b.generators[label], probes=z)
        values[label] = np.atleast_2d(transform.forward(z))
        sups[label], rmss[label] = identity_deviation(transform, z)
    labels = sorted(values)
    disagreement = 0.0
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            disagreement = max(disagreement,
                               float(np.abs(values[a] - values[b]).max()))
    best = min(labels, key=lambda v: sups[v])
    return IndeterminacyReport(
        identity_sup_dev=sups[best], identity_rms_dev=rmss[best],
        structure={"is_identity_ae": bool(sups[best] < tol)}, n=n,
        details={"view_identity_dev": sups, "best_view": best,
                 "max_disagreement": disagreement, "tol": tol})
