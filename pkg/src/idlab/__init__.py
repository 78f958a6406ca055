"""Numerical laboratory for identifiability of latent-variable models.

Builds triangular monotone transports between fully supported laws, walks
the equivalence classes of generative models via latent-space transforms,
and checks at desk scale which model configurations (and which downstream
tasks) pin their latents down.
"""

from .errors import (BracketFailure, ConfigError, DegenerateMeans,
                     DimensionMismatch, IdlabError, MismatchedFamily,
                     NonFiniteDerivative, RangeMismatch, RankDeficient,
                     SingularCovariance, SingularMatrix, UncertifiedTransform)
from .rng import stream
from .measures import (Distribution, ExpFamily, GaussianDistribution,
                       GaussianMixture1D, Laplace1D, Logistic1D, Normal1D,
                       Exponential1D, ProductDistribution,
                       conditional_quantile, distribution_from_spec,
                       distribution_to_spec, expfam_density_ratio_log,
                       interdecile_box, sample)
from .transport import (AffineMap, Automorphism, CdfChainMap, ComposedMap,
                        ExplicitMap, PushforwardReport, StructureReport,
                        TriangularMap, component_wise_check, compose,
                        invert, jacobian_fd, kr_transport, log_det_jacobian,
                        map_from_spec, map_to_spec, pushforward_check,
                        register_explicit_map, rosenblatt)
from .linear import (ComonReport, EnvConstraintSystem, LinearGenerator,
                     UniquenessReport, comon_structure_check,
                     linear_generator_transform, rotation_counterexample,
                     solve_multi_env_linear)
from .envs import (AffineRelation, EnvironmentData, EnvironmentSet,
                   MarginalQuantileMap, ModelParams, MultiViewModel,
                   SharedStatistic, SpanReport, ValidationReport,
                   affine_relation_fit, fit_env_affine_generator,
                   fit_gaussian_kr, fit_marginal_quantile_transport,
                   generate_environment_data, spanning_check,
                   validate_strong_vae_config, verify_multiview)
from .indeterminacy import (FixedCoordinateReport, IndeterminacyReport,
                            TransportedDistribution, act_on_params,
                            fixed_coordinate_check, generator_transform,
                            identity_deviation, indeterminacy_audit,
                            is_identity_ae, kernel_residual,
                            pushforward_distribution)
from .tasks import (TaskReport, TaskSpec, abs_diff_metric,
                    constant_point_task, independence_test_task,
                    latent_shift_task, spearman_abs,
                    spearman_permutation_pvalue, sup_point_metric,
                    task_identifiability_check)
from .experiments import (EXPERIMENTS, ExperimentResult, default_params,
                          experiment_info, experiment_names, run_experiment)

__version__ = "0.1.0"
