"""Riesz-basis operator learning scaffolding.

Linear encoder/decoder pairs on the torus, weight-sequence smoothness
scales, truncation planning from the constructive approximation recipe,
Lipschitz component surrogates on anisotropic boxes, and two concrete
operator families for verification: obstacle-problem solution maps and the
singular-value functional calculus of finite-rank operators.
"""

from .weights import (WeightSequence, SmoothnessParams, SamplingLaw,
                      make_weights, weighted_norm, cube_contains,
                      ball_cube_radius, sigma_map)
from .basis import (RieszBasis, FourierBasis, SampledBasis, EncodedVector,
                    encode, decode, restrict, project, verify_riesz)
from .wavelets import (WaveletIndex, wavelet_relabel, wavelet_relabel_inverse,
                       besov_norm, besov_weighted_l2_norm)
from .planner import (PlannerConstants, ComplexityModel, TruncationPlan,
                      plan_output_N, plan_input_M_uniform,
                      plan_input_M_per_component, component_tolerances,
                      strategy_select, make_plan, predict_n_para,
                      composition_lipschitz_bound, COMPLEXITY_PRESETS)
from .surrogate import (DomainBox, SurrogateModel, LipschitzOperatorSpec,
                        OperatorSurrogate, box_for, affine_to_unit_cube,
                        extract_component_map, fit_surrogate,
                        assemble_operator_surrogate, estimate_lipschitz,
                        compose, save_surrogate, load_surrogate)
from .obstacle import (MonotoneOperatorSpec, ObstacleProblem, VISolution,
                       laplace_plus_id, solve_vi, kkt_residual,
                       obstacle_to_solution, perturbation_certificate,
                       postprocess_feasible)
from .hscalc import (SVDecomposition, ScalarLipschitzFunction, svd,
                     functional_calculus, truncated_calculus, schatten_norm,
                     hs_smoothness_norm, lipschitz_certificate, identity_fn,
                     soft_threshold, clip_at)
from .harness import (RateReport, ExampleBundle, sample_inputs, mc_l2_error,
                      truncation_rate_study, universality_study, make_example,
                      hs_rate_study, calibrate_for_example, run_end_to_end)

__version__ = "0.1.0"
