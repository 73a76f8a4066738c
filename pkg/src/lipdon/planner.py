"""Truncation planning: output/input truncation indices, per-component
tolerances, strategy selection and parameter-count prediction.

All choices follow the constructive recipe behind the main approximation
theorem.  Writing ``eps`` for the target accuracy, ``s``/``t`` for input and
output smoothness and ``delta0``, ``eps0`` for small slack parameters, the
planner evaluates

* output truncation  ``N = ceil( (eps / (4 C_trunc C0^t))^(-1/(t(1-eps0))) )``
* uniform input truncation
  ``M = ceil( (eps / (4 C_trunc C0^(s-1/2-delta0)))^(-1/(s-1/2-2 delta0)) )``
* per-component input truncation (used when ``t > 1/2``)
  ``M_j = ceil( (eps/(4 C_trunc) * j^(t-1/2-2 delta0) * C0^(t+s-1-2 delta0))^(-1/(s-1/2-2 delta0)) )``
* per-component tolerances
  ``eps_j = min( w_j^-(t-1/2-delta0) * eps / (2 C_Lg C_delta0), 1 )``

The unnamed constants default to one; rate slopes do not depend on them.  A
calibration helper estimates the truncation constant from measured errors so
that plans adapt to an actual operator instead of the worst case.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .weights import SmoothnessParams, WeightSequence

__all__ = [
    "PlannerConstants",
    "ComplexityModel",
    "TruncationPlan",
    "zeta",
    "plan_output_N",
    "plan_input_M_uniform",
    "plan_input_M_per_component",
    "component_tolerances",
    "strategy_select",
    "make_plan",
    "predict_n_para",
    "composition_lipschitz_bound",
    "calibrate_trunc_constant",
    "COMPLEXITY_PRESETS",
]


def zeta(x: float, rel_tol: float = 1e-10) -> float:
    """Riemann zeta for ``x > 1`` by direct summation with tail correction.

    The partial sum over ``i <= n`` is completed with the Euler-Maclaurin
    tail ``n^(1-x)/(x-1) + n^(-x)/2 + x n^(-x-1)/12``, whose error is far
    below ``rel_tol`` for the ``n`` chosen here.
    """
    if x <= 1.0:
        raise ValueError("zeta is evaluated for arguments > 1 only")
    n = 20000
    i = np.arange(1, n + 1, dtype=float)
    partial = float(np.sum(i ** (-x)))
    tail = n ** (1.0 - x) / (x - 1.0) - 0.5 * n ** (-x) + x / 12.0 * n ** (-x - 1.0)
    del rel_tol  # fixed n already exceeds the requested accuracy
    return partial + tail


def _admissible_delta0(params: SmoothnessParams) -> float:
    if params.t > 0.5:
        return min(params.s, params.t) / 2.0 - 0.25
    return params.s / 2.0 - 0.25


@dataclass(frozen=True)
class PlannerConstants:
    """Constants entering the truncation formulas.

    ``C_trunc`` multiplies both truncation bounds, ``C0`` is the weight
    envelope constant (``w_i <= C0 i^(-1+eps0)``), ``C_Lg`` the Lipschitz
    factor in the per-component tolerance and ``C_delta0`` the zeta-factor
    ``C0^(1/2+delta0) zeta(1+2 delta0)^(1/2)``.  ``eps0 = 0`` is accepted as
    the limiting value (valid for exact power-law weights).
    """

    C_trunc: float = 1.0
    C0: float = 1.0
    delta0: float = 0.05
    eps0: float = 0.0
    C_Lg: float = 1.0
    C_delta0: float = field(default=0.0)

    def __post_init__(self):
        if min(self.C_trunc, self.C0, self.C_Lg) <= 0 or self.C0 < 1.0:
            raise ValueError("constants must be positive with C0 >= 1")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not 0.0 <= self.eps0 < 1.0:
            raise ValueError("eps0 must lie in [0, 1)")
        if self.C_delta0 == 0.0:
            value = self.C0 ** (0.5 + self.delta0) * math.sqrt(zeta(1.0 + 2.0 * self.delta0))
            object.__setattr__(self, "C_delta0", value)

    def validate(self, params: SmoothnessParams):
        bound = _admissible_delta0(params)
        if not self.delta0 < bound:
            raise ValueError(
                f"delta0={self.delta0} violates the admissible bound {bound:.6g} "
                f"for (s, t)=({params.s}, {params.t})"
            )

    @classmethod
    def defaults(cls, params: SmoothnessParams, C_trunc: float = 1.0,
                 C0: float = 1.0, C_Lg: float = 1.0) -> "PlannerConstants":
        """A tenth of the admissible slack, making plans reproducible."""
        delta0 = _admissible_delta0(params) / 10.0
        eps0 = delta0 / (max(params.s, params.t) - 0.5 - delta0) / 10.0
        return cls(C_trunc=C_trunc, C0=C0, delta0=delta0, eps0=eps0, C_Lg=C_Lg)


@dataclass(frozen=True)
class ComplexityModel:
    """Exponents ``(alpha, beta, kappa)`` of a surrogate-size model
    ``O(d^alpha eps^-beta (1 + log d + |log eps|)^kappa)``."""

    alpha: float = 1.0
    beta: float = 0.0
    kappa: float = 1.0
    label: str = "custom"

    def __post_init__(self):
        if self.alpha < 1.0 or self.beta < 0.0 or self.kappa < 0.0:
            raise ValueError("need alpha >= 1 and beta, kappa >= 0")


COMPLEXITY_PRESETS = {
    # floor / 2^x / step activations, three hidden layers
    "fles": ComplexityModel(alpha=1.0, beta=0.0, kappa=1.0, label="fles"),
    # ReLU + sine phase-diagram construction
    "deep_fourier": ComplexityModel(alpha=1.0, beta=0.0, kappa=2.0, label="deep_fourier"),
}


def nestnet_model(height: int, d: int) -> ComplexityModel:
    """Nested-network exponents at fixed input dimension ``d``.

    The published count is ``O(h^2 d^(2 + d/(2(h+1))) eps^(-d/(h+1)))``;
    both exponents depend on ``d``, so the model is only meaningful with the
    dimension pinned.
    """
    if height < 1 or d < 1:
        raise ValueError("height and d must be >= 1")
    return ComplexityModel(
        alpha=2.0 + d / (2.0 * (height + 1)),
        beta=d / (height + 1.0),
        kappa=0.0,
        label=f"nestnet(h={height},d={d})",
    )


def _check_eps(eps: float):
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")


def plan_output_N(eps: float, params: SmoothnessParams,
                  consts: PlannerConstants) -> int:
    """Output truncation index; rejects ``t = 0`` (formula singular)."""
    _check_eps(eps)
    if params.t <= 0.0:
        raise ValueError("output truncation needs t > 0")
    consts.validate(params)
    base = eps / (4.0 * consts.C_trunc * consts.C0**params.t)
    return max(1, math.ceil(base ** (-1.0 / (params.t * (1.0 - consts.eps0)))))


def plan_input_M_uniform(eps: float, params: SmoothnessParams,
                         consts: PlannerConstants) -> int:
    """Uniform input truncation index (the ``t <= 1/2`` branch)."""
    _check_eps(eps)
    consts.validate(params)
    expo = params.s - 0.5 - 2.0 * consts.delta0
    if expo <= 0.0:
        raise ValueError("delta0 too large: s - 1/2 - 2 delta0 must be positive")
    base = eps / (4.0 * consts.C_trunc * consts.C0 ** (params.s - 0.5 - consts.delta0))
    return max(1, math.ceil(base ** (-1.0 / expo)))


def plan_input_M_per_component(eps: float, j: int, params: SmoothnessParams,
                               consts: PlannerConstants) -> int:
    """Component-``j`` input truncation index (the ``t > 1/2`` branch)."""
    _check_eps(eps)
    if params.t <= 0.5:
        raise ValueError("per-component truncation applies only for t > 1/2")
    if j < 1:
        raise ValueError("component index j starts at 1")
    consts.validate(params)
    expo = params.s - 0.5 - 2.0 * consts.delta0
    if expo <= 0.0:
        raise ValueError("delta0 too large: s - 1/2 - 2 delta0 must be positive")
    base = (
        eps / (4.0 * consts.C_trunc)
        * float(j) ** (params.t - 0.5 - 2.0 * consts.delta0)
        * consts.C0 ** (params.t + params.s - 1.0 - 2.0 * consts.delta0)
    )
    return max(1, math.ceil(base ** (-1.0 / expo)))


def component_tolerances(eps: float, N: int, params: SmoothnessParams,
                         consts: PlannerConstants, w: WeightSequence) -> list:
    """Tolerances ``eps_j`` for the per-component surrogate fits, in (0, 1].

    The clamp at one is active for large ``eps``, so any positive target is
    accepted here.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    expo = -(params.t - 0.5 - consts.delta0)
    wj = w.prefix(N)
    vals = wj**expo * eps / (2.0 * consts.C_Lg * consts.C_delta0)
    return [float(min(v, 1.0)) for v in vals]


def strategy_select(params: SmoothnessParams) -> str:
    """``per_component`` iff ``t > 1/2``; the boundary goes to ``uniform``."""
    return "per_component" if params.t > 0.5 else "uniform"


@dataclass
class TruncationPlan:
    """Output index, per-component input indices and fit tolerances."""

    N: int
    M: list
    eps_j: list
    strategy: str
    constants: PlannerConstants
    eps: float = 0.0

    def __post_init__(self):
        if len(self.M) != self.N or len(self.eps_j) != self.N:
            raise ValueError("M and eps_j must have length N")
        if self.strategy == "per_component" and any(np.diff(self.M) > 0):
            raise ValueError("per-component truncations must be non-increasing")
        if any(not 0.0 < e <= 1.0 for e in self.eps_j):
            raise ValueError("tolerances must lie in (0, 1]")

    def to_json(self) -> str:
        obj = {
            "N": self.N,
            "M": [int(m) for m in self.M],
            "eps_j": [float(e) for e in self.eps_j],
            "strategy": self.strategy,
            "eps": self.eps,
            "constants": asdict(self.constants),
        }
        return json.dumps(obj, indent=2)


def make_plan(eps: float, params: SmoothnessParams, w: WeightSequence,
              consts: PlannerConstants | None = None) -> TruncationPlan:
    """Assemble the full truncation plan for a target accuracy ``eps``."""
    consts = consts or PlannerConstants.defaults(params)
    strategy = strategy_select(params)
    N = plan_output_N(eps, params, consts)
    if strategy == "per_component":
        M = [plan_input_M_per_component(eps, j, params, consts) for j in range(1, N + 1)]
    else:
        M = [plan_input_M_uniform(eps, params, consts)] * N
    eps_j = component_tolerances(eps, N, params, consts, w)
    return TruncationPlan(N=N, M=M, eps_j=eps_j, strategy=strategy,
                          constants=consts, eps=eps)


def predict_n_para(eps: float, params: SmoothnessParams, model: ComplexityModel,
                   delta: float = 0.0):
    """Parameter-count exponent and bound for a ``gamma``-Hölder operator.

    Returns ``(exponent, bound)`` with ``bound = eps^exponent *
    (1+|log eps|)^(kappa/gamma)``.  ``gamma = 1`` reproduces the Lipschitz
    exponents; ``delta = 0`` gives the limiting rate.
    """
    _check_eps(eps)
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if params.t <= 0.0:
        raise ValueError("prediction needs t > 0")
    g = params.gamma
    lead = -model.alpha / (g * g * (params.s - 0.5))
    if params.t <= 0.5:
        exponent = lead - (2.0 * g + model.beta) / (2.0 * g * params.t) - delta
    else:
        exponent = lead - 1.0 / params.t - model.beta / g - delta
    bound = eps**exponent * (1.0 + abs(math.log(eps))) ** (model.kappa / g)
    return exponent, bound


def composition_lipschitz_bound(L) -> float:
    """Product bound for the Lipschitz constant of a composition."""
    L = list(L)
    if not L:
        raise ValueError("need at least one factor")
    if any(v <= 0 for v in L):
        raise ValueError("Lipschitz constants must be positive")
    return float(np.prod(L))


def calibrate_trunc_constant(params: SmoothnessParams, consts: PlannerConstants,
                             output_errors=None, input_errors=None,
                             use_last: int = 2) -> PlannerConstants:
    """Fit ``C_trunc`` to measured truncation errors.

    ``output_errors`` is a sequence of ``(N, error)`` pairs for the output
    truncation study and ``input_errors`` of ``(M, error)`` pairs for the
    input study.  The constant is the maximum, over the ``use_last`` largest
    indices of each study (the asymptotic regime), of the measured error
    divided by the formula's decay factor.  Plans built from the returned
    constants reproduce the measured errors at their target accuracies.
    """
    cands = [0.0]
    if output_errors:
        pairs = sorted(output_errors)[-use_last:]
        for N, err in pairs:
            decay = consts.C0**params.t * float(N + 1) ** (-params.t * (1.0 - consts.eps0))
            cands.append(err / decay)
    if input_errors:
        expo = params.s - 0.5 - 2.0 * consts.delta0
        pairs = sorted(input_errors)[-use_last:]
        for M, err in pairs:
            decay = consts.C0 ** (params.s - 0.5 - consts.delta0) * float(M) ** (-expo)
            cands.append(err / decay)
    C = max(cands)
    if C <= 0.0:
        raise ValueError("no usable truncation measurements supplied")
    return PlannerConstants(C_trunc=C, C0=consts.C0, delta0=consts.delta0,
                            eps0=consts.eps0, C_Lg=consts.C_Lg)
