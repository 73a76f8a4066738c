"""Monte Carlo error estimation, truncation-rate studies, the universality
trend experiment and end-to-end surrogate runs.

Reports are deterministic: every random draw derives from (seed, stream,
sample index) substreams and CSV emission formats floats with a fixed
precision, so identical configurations produce byte-identical files
regardless of evaluation order.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import FourierBasis
from .obstacle import evi_operator_spec, laplace_plus_id
from .planner import (PlannerConstants, TruncationPlan, calibrate_trunc_constant,
                      make_plan)
from .surrogate import (LipschitzOperatorSpec, OperatorSurrogate,
                        assemble_operator_surrogate, box_for, draw_cube_samples,
                        estimate_lipschitz, extract_component_map, fit_surrogate)
from .weights import (SamplingLaw, SmoothnessParams, WeightSequence,
                      make_weights, weighted_norm)

__all__ = [
    "RateReport",
    "ExampleBundle",
    "sample_inputs",
    "mc_l2_error",
    "fit_loglog_slope",
    "truncation_rate_study",
    "universality_study",
    "make_example",
    "hs_rate_study",
    "calibrate_for_example",
    "run_end_to_end",
]

_FMT = "{:.12e}"


def sample_inputs(law: SamplingLaw, n: int) -> np.ndarray:
    """``n`` i.i.d. cube samples, deterministic per (seed, index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return draw_cube_samples(law, n, stream=0)


def mc_l2_error(truth, approx, law: SamplingLaw, n_samples: int,
                y_weighting: float | None = None):
    """Root-mean-square output error under the sampling law.

    Returns ``(estimate, ci_halfwidth)``; the 95% interval comes from the
    delta method applied to the sample variance of the squared errors.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    X = sample_inputs(law, n_samples)
    T = np.atleast_2d(truth(X))
    A = np.atleast_2d(approx(X))
    k = min(T.shape[1], A.shape[1])
    diff = np.zeros((n_samples, max(T.shape[1], A.shape[1])))
    diff[:, : T.shape[1]] += T
    diff[:, : A.shape[1]] -= A
    del k
    if y_weighting is None:
        errs = np.linalg.norm(diff, axis=1)
    else:
        errs = np.array([weighted_norm(row, y_weighting, law.weights)
                         for row in diff])
    z = errs**2
    mean = float(np.mean(z))
    half_mean = 1.96 * float(np.std(z, ddof=1)) / math.sqrt(n_samples)
    rms = math.sqrt(mean)
    ci = half_mean / (2.0 * rms) if rms > 1e-15 else math.sqrt(half_mean)
    return rms, float(ci)


def fit_loglog_slope(indices, errors, floor: float = 1e-13):
    """Ordinary least squares on log10-log10, discarding values below floor."""
    idx = np.asarray(indices, dtype=float)
    err = np.asarray(errors, dtype=float)
    keep = err > floor
    if keep.sum() < 2:
        return None, None
    lx = np.log10(idx[keep])
    ly = np.log10(err[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


@dataclass
class RateReport:
    """Sampled errors per index with a fitted log-log slope."""

    indices: list
    errors: list
    ci_lo: list
    ci_hi: list
    slope: float
    intercept: float
    predicted_slope: float
    slope_tol: float
    passed: bool
    mode: str = ""
    note: str = ""

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("index,error,ci_lo,ci_hi\n")
        for i, e, lo, hi in zip(self.indices, self.errors, self.ci_lo, self.ci_hi):
            out.write(f"{i}," + ",".join(_FMT.format(v) for v in (e, lo, hi)) + "\n")
        out.write(f"# slope={_FMT.format(self.slope)}\n")
        out.write(f"# predicted={_FMT.format(self.predicted_slope)}\n")
        out.write(f"# pass={str(self.passed).lower()}\n")
        if self.note:
            out.write(f"# note={self.note}\n")
        return out.getvalue()


def _bootstrap_max(per_sample_errors: np.ndarray, seed: int, reps: int = 200):
    """Percentile interval for the max statistic over samples."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(99,)))
    n = per_sample_errors.shape[0]
    stats = np.empty(reps)
    for r in range(reps):
        sel = rng.integers(0, n, size=n)
        stats[r] = per_sample_errors[sel].max()
    return float(np.quantile(stats, 0.025)), float(np.quantile(stats, 0.975))


def truncation_rate_study(spec: LipschitzOperatorSpec, law: SamplingLaw,
                          index_list, mode: str, n_samples: int = 200,
                          slope_tol: float = 0.25) -> RateReport:
    """Max-over-samples truncation error against the truncation index.

    ``mode = "output_N"`` measures the tail of the output coefficients after
    restriction; ``mode = "input_M"`` measures the output change when the
    input is truncated.  The fitted slope is compared against ``-t`` or
    ``-(s - 1/2)`` with the given tolerance; the sampled max is a lower bound
    for the sup, reported as such.
    """
    indices = [int(i) for i in index_list]
    if len(indices) < 4 or any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("need a strictly increasing index list of length >= 4")
    X = sample_inputs(law, n_samples)
    truth = spec(X)
    errors, lo, hi = [], [], []
    if mode == "output_N":
        predicted = -spec.params.t
        for N in indices:
            if N >= truth.shape[1]:
                raise ValueError("output index exceeds available coefficients")
            tails = np.linalg.norm(truth[:, N:], axis=1)
            errors.append(float(tails.max()))
            b = _bootstrap_max(tails, law.seed)
            lo.append(b[0])
            hi.append(b[1])
    elif mode == "input_M":
        predicted = -(spec.params.s - 0.5)
        for M in indices:
            approx = spec(X[:, :M])
            diffs = np.linalg.norm(truth - approx, axis=1)
            errors.append(float(diffs.max()))
            b = _bootstrap_max(diffs, law.seed)
            lo.append(b[0])
            hi.append(b[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    slope, intercept = fit_loglog_slope(indices, errors)
    if slope is None:
        return RateReport(indices, errors, lo, hi, 0.0, 0.0, predicted,
                          slope_tol, False, mode=mode, note="below noise floor")
    passed = slope <= predicted + slope_tol
    return RateReport(indices, errors, lo, hi, slope, intercept, predicted,
                      slope_tol, bool(passed), mode=mode)


# ---------------------------------------------------------------------------
# example bundles


@dataclass
class ExampleBundle:
    """An operator in encoded coordinates with its sampling law."""

    name: str
    spec: LipschitzOperatorSpec
    law: SamplingLaw
    basis: object = None
    extras: dict = field(default_factory=dict)


def make_example(name: str, s: float = 1.5, r: float = 1.0, d: int = 1,
                 n_grid: int = 256, out_dim: int = 48, in_dim: int = 64,
                 seed: int = 0, weight_exponent: float = 1.0,
                 t: float | None = None) -> ExampleBundle:
    """Factory for the built-in operator families.

    ``evi``       obstacle-to-solution map on the d-torus (t = 1/d),
    ``synthetic`` the identity map on coefficients (t = s - 1/2 decay).
    The Hilbert-Schmidt example works directly on matrices; see
    :func:`hs_rate_study`.
    """
    w = make_weights("power", weight_exponent)
    if name == "evi":
        t = 1.0 / d if t is None else t
        params = SmoothnessParams(s=s, t=t, r=r)
        law = SamplingLaw(weights=w, params=params, truncation_dim=in_dim,
                          seed=seed)
        evaluate, basis = evi_operator_spec(d=d, n_grid=n_grid, out_dim=out_dim)
        spec = LipschitzOperatorSpec(
            evaluate=evaluate, lipschitz_constant=1.0, params=params,
            weights=w, out_dim=out_dim, riesz_upper_in=basis.riesz_upper,
            name="obstacle_to_solution")
        return ExampleBundle(name=name, spec=spec, law=law, basis=basis,
                             extras={"n_grid": n_grid, "d": d})
    if name == "synthetic":
        t = (s - 0.5) if t is None else t
        params = SmoothnessParams(s=s, t=t, r=r)
        law = SamplingLaw(weights=w, params=params, truncation_dim=in_dim,
                          seed=seed)

        def evaluate(C):
            C = np.atleast_2d(np.asarray(C, dtype=float))
            out = np.zeros((C.shape[0], out_dim))
            m = min(out_dim, C.shape[1])
            out[:, :m] = C[:, :m]
            return out

        spec = LipschitzOperatorSpec(
            evaluate=evaluate, lipschitz_constant=1.0, params=params,
            weights=w, out_dim=out_dim, name="identity")
        return ExampleBundle(name=name, spec=spec, law=law)
    raise ValueError(f"unknown example {name!r}")


def hs_rate_study(index_list, decay: float = 2.0, size: int = 48,
                  n_samples: int = 100, seed: int = 0, fn=None,
                  slope_tol: float = 0.25) -> RateReport:
    """Output-truncation rates of the singular-value functional calculus.

    Samples operators ``U diag(a_b j^-decay) V^T`` with random orthogonal
    factors and amplitudes, truncates the calculus after ``N`` triples and
    measures the exact Hilbert-Schmidt tail identity
    ``sum_{j>N} f(s_j)^2``.  The predicted slope is ``-(decay - 1/2)``.
    """
    from .hscalc import functional_calculus, identity_fn, truncated_calculus

    fn = fn or identity_fn
    indices = [int(i) for i in index_list]
    js = np.arange(1, size + 1, dtype=float)
    errors, lo, hi = [], [], []
    mats = []
    for b in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                           spawn_key=(5, b)))
        U, _ = np.linalg.qr(rng.standard_normal((size, size)))
        V, _ = np.linalg.qr(rng.standard_normal((size, size)))
        amp = rng.uniform(0.5, 1.0)
        mats.append((U * (amp * js**-decay)) @ V.T)
    for N in indices:
        per = np.array([
            np.linalg.norm(functional_calculus(fn, A)
                           - truncated_calculus(fn, A, N))
            for A in mats])
        errors.append(float(per.max()))
        b = _bootstrap_max(per, seed)
        lo.append(b[0])
        hi.append(b[1])
    predicted = -(decay - 0.5)
    slope, intercept = fit_loglog_slope(indices, errors)
    if slope is None:
        return RateReport(indices, errors, lo, hi, 0.0, 0.0, predicted,
                          slope_tol, False, mode="output_N",
                          note="below noise floor")
    return RateReport(indices, errors, lo, hi, slope, intercept, predicted,
                      slope_tol, bool(slope <= predicted + slope_tol),
                      mode="output_N")


# ---------------------------------------------------------------------------
# universality trend


@dataclass
class UniversalityReport:
    n_list: list
    sup_errors: list
    budgets: list       # per-step surrogate error allowances
    tolerance_misses: list
    passed: bool
    note: str = ""

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,sup_error,budget,tolerance_miss\n")
        for n, e, bgt, m in zip(self.n_list, self.sup_errors, self.budgets,
                                self.tolerance_misses):
            out.write(f"{n},{_FMT.format(e)},{_FMT.format(bgt)},{int(m)}\n")
        out.write(f"# pass={str(self.passed).lower()}\n")
        if self.note:
            out.write(f"# note={self.note}\n")
        return out.getvalue()


def universality_study(spec: LipschitzOperatorSpec, law: SamplingLaw,
                       n_list, n_compact: int = 100, seed: int = 0,
                       dim_cap: int = 16, node_budget: int = 60_000,
                       holdout: int = 4000) -> UniversalityReport:
    """Sup error of progressively larger surrogates on a fixed compact set.

    For each ``n`` the surrogate keeps ``n`` output components, sees ``n``
    input coordinates and fits each component with tolerance ``2^-n``.  The
    sup error over a fixed sampled compact set must trend downward: no step
    may increase by more than the combined surrogate budgets of the two
    stages involved (the noise floor of the construction).
    """
    ns = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be increasing")
    X = sample_inputs(law, n_compact)
    truth = spec(X)
    sup_errors, budgets, misses = [], [], []
    for n in ns:
        if n > spec.out_dim:
            raise ValueError("n exceeds the operator's output width")
        box = box_for(spec.params, spec.weights, n)
        tol = 2.0**-n
        approx = np.zeros_like(truth)
        miss = False
        for j in range(1, n + 1):
            target = extract_component_map(spec, j, n)
            lip_j = (spec.lipschitz_constant * spec.weights.w(j)**spec.params.t
                     * math.sqrt(spec.riesz_upper_in))
            sub = int(np.random.SeedSequence(entropy=seed, spawn_key=(n, j))
                      .generate_state(1)[0])
            model = fit_surrogate(target, box, tol=tol, backend="grid",
                                  seed=sub, lipschitz_bound=float(lip_j),
                                  dim_cap=dim_cap, node_budget=node_budget,
                                  holdout=holdout)
            miss = miss or model.tolerance_miss
            approx[:, j - 1] = model(X[:, :n])
        per = np.linalg.norm(truth - approx, axis=1)
        sup_errors.append(float(per.max()))
        scale = 2.0 * spec.params.r * spec.weights.w(1)**spec.params.s
        budgets.append(float(spec.lipschitz_constant * scale * tol
                             * math.sqrt(n)))
        misses.append(bool(miss))
    passed = sup_errors[-1] < sup_errors[0]
    note = ""
    for k in range(1, len(ns)):
        floor = budgets[k] + budgets[k - 1]
        if sup_errors[k] > sup_errors[k - 1] + floor:
            passed = False
            note = f"increase beyond noise floor at n={ns[k]}"
            break
    return UniversalityReport(n_list=ns, sup_errors=sup_errors, budgets=budgets,
                              tolerance_misses=misses, passed=bool(passed),
                              note=note)


# ---------------------------------------------------------------------------
# calibrated end-to-end runs


def component_lipschitz_certificate(spec: LipschitzOperatorSpec,
                                    law: SamplingLaw, j_list, M: int = 8,
                                    pairs: int = 1000):
    """Certificate that component difference quotients respect the
    ``L w_j^t sqrt(Lambda)`` profile.

    Draws pairs on the box of the leading ``M`` coordinates, calibrates the
    operator constant as the largest observed t-weighted quotient of the full
    map over those pairs, and returns ``(L_hat, ratios, bounds)`` where
    ``ratios[j]`` is the worst component quotient and ``bounds[j]`` the
    calibrated component bound.  The per-pair inequality
    ``|<diff, dual_j>| <= w_j^t |diff|_{Y^t}`` makes the certificate exact up
    to roundoff whenever the component extraction is implemented correctly.
    """
    from .surrogate import _uniform_box

    box = box_for(spec.params, spec.weights, M)
    X = _uniform_box(box, pairs, law.seed, stream=21)
    Y = _uniform_box(box, pairs, law.seed, stream=22)
    FX = spec(X)
    FY = spec(Y)
    t = spec.params.t
    denom = np.linalg.norm(X - Y, axis=1)
    keep = denom > 1e-12
    wj = spec.weights.prefix(spec.out_dim)
    ywt = np.sqrt(np.sum((FX - FY) ** 2 * wj ** (-2.0 * t), axis=1))
    L_hat = float(np.max(ywt[keep] / denom[keep]))
    root_lam = math.sqrt(spec.riesz_upper_in)
    ratios = {}
    bounds = {}
    for j in j_list:
        quot = np.abs(FX[keep, j - 1] - FY[keep, j - 1]) / denom[keep]
        ratios[j] = float(np.max(quot))
        bounds[j] = L_hat * spec.weights.w(j) ** t * root_lam
    return L_hat, ratios, bounds


def calibrate_for_example(bundle: ExampleBundle, n_samples: int = 64,
                          indices=(4, 8, 16, 32)) -> PlannerConstants:
    """Planner constants fitted to measured truncation errors and the
    estimated Lipschitz constant of the example operator."""
    params = bundle.spec.params
    base = PlannerConstants.defaults(params)
    out = truncation_rate_study(bundle.spec, bundle.law, indices, "output_N",
                                n_samples=n_samples)
    inp = truncation_rate_study(bundle.spec, bundle.law, indices, "input_M",
                                n_samples=n_samples)
    consts = calibrate_trunc_constant(
        params, base,
        output_errors=list(zip(out.indices, out.errors)),
        input_errors=list(zip(inp.indices, inp.errors)),
    )
    L_hat = estimate_lipschitz(bundle.spec.evaluate, bundle.law, pairs=128,
                               t_weight=params.t)
    scale = 2.0 * params.r * bundle.spec.weights.w(1)**params.s
    C_Lg = max(L_hat, 1e-6) * scale  # Riesz constants are one for the codec
    return PlannerConstants(C_trunc=consts.C_trunc, C0=base.C0,
                            delta0=base.delta0, eps0=base.eps0, C_Lg=C_Lg)


def evaluate_truncated(spec: LipschitzOperatorSpec, X: np.ndarray,
                       plan: TruncationPlan) -> np.ndarray:
    """The dimension-truncated reference: component ``j`` from the first
    ``M_j`` input coordinates, grouped by distinct truncation levels."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros((X.shape[0], plan.N))
    for m in sorted(set(plan.M)):
        cols = [j for j in range(plan.N) if plan.M[j] == m]
        vals = spec(X[:, :m])
        out[:, cols] = vals[:, cols]
    return out


def run_end_to_end(bundle: ExampleBundle, eps: float, backend: str = "grid",
                   n_samples: int = 200, seed: int = 0,
                   consts: PlannerConstants | None = None,
                   dim_cap: int | None = None, node_budget: int = 60_000,
                   holdout: int = 10_000, decomposition_samples: int = 50):
    """Plan, assemble and measure one end-to-end surrogate run.

    Returns a result dictionary with the plan, the Monte Carlo RMS error and
    its confidence halfwidth, the error-decomposition consistency check and
    parameter accounting.
    """
    spec = bundle.spec
    consts = consts or calibrate_for_example(bundle)
    plan = make_plan(eps, spec.params, spec.weights, consts)
    if plan.N > spec.out_dim:
        raise ValueError(
            f"plan needs N={plan.N} output components, operator has "
            f"{spec.out_dim}; enlarge out_dim or calibrate constants")
    # anisotropic boxes keep node counts tractable well past the default cap
    dim_cap = dim_cap if dim_cap is not None else max(plan.M)
    surr = assemble_operator_surrogate(spec, plan, backend=backend, seed=seed,
                                       dim_cap=dim_cap,
                                       node_budget=node_budget,
                                       holdout=holdout)
    rms, ci = mc_l2_error(spec.evaluate, surr.evaluate, bundle.law, n_samples)

    Xd = sample_inputs(bundle.law, decomposition_samples)
    truth_d = spec(Xd)
    trunc_d = evaluate_truncated(spec, Xd, plan)
    pad = np.zeros_like(truth_d)
    pad[:, : plan.N] = trunc_d
    trunc_errs = np.linalg.norm(truth_d - pad, axis=1)
    total_errs = np.linalg.norm(truth_d - np.pad(
        surr(Xd), ((0, 0), (0, truth_d.shape[1] - plan.N))), axis=1)
    agg = math.sqrt(sum(e**2 for e in surr.component_errors))
    decomposition_ok = bool(
        np.sqrt(np.mean(total_errs**2))
        <= np.sqrt(np.mean(trunc_errs**2)) + agg + ci + 1e-9)

    return {
        "example": bundle.name,
        "eps": eps,
        "backend": backend,
        "plan": plan,
        "rms": rms,
        "ci": ci,
        "passed": bool(rms <= eps + ci),
        "total_parameters": surr.total_parameters,
        "component_errors": surr.component_errors,
        "tolerance_misses": [m.tolerance_miss for m in surr.components],
        "trunc_rms": float(np.sqrt(np.mean(trunc_errs**2))),
        "surrogate_error_aggregate": agg,
        "decomposition_ok": decomposition_ok,
        "surrogate": surr,
    }
