"""Weight sequences, smoothness-scale norms and the coefficient cubes they define.

A weight sequence is a non-increasing sequence ``w_1 >= w_2 >= ... > 0`` with
``w_1 <= 1``.  It induces, for a smoothness exponent ``s >= 0``, weighted
coefficient norms ``(sum_i c_i^2 w_i^{-2s})^{1/2}`` and the cube of admissible
coefficient vectors ``|c_i| <= r w_i^s``.  The map ``sigma_map`` pushes uniform
noise on ``[-1,1]^n`` onto that cube.

Everything here is a pure function of immutable inputs and safe to call from
any number of threads.  Infinite sums over power-law tails carry a certified
remainder obtained from the integral comparison
``sum_{i>n} i^{-q} <= n^{1-q}/(q-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WeightSequence",
    "SmoothnessParams",
    "SamplingLaw",
    "make_weights",
    "weighted_norm",
    "cube_contains",
    "ball_cube_radius",
    "sigma_map",
]


@dataclass(frozen=True)
class WeightSequence:
    """Non-increasing positive weights ``w_i <= 1``, indexed from ``i = 1``.

    ``kind`` is ``"power"`` (``w_i = i**-exponent`` with ``exponent >= 1``) or
    ``"explicit"`` (a finite materialized list, treated as compactly
    supported beyond its length for infinite sums).
    """

    kind: str
    exponent: float = 1.0
    values: tuple = ()
    tail_exponent: float = field(default=0.0)

    def __post_init__(self):
        if self.kind == "power":
            if self.exponent < 1.0:
                raise ValueError(
                    "power weights need exponent >= 1 (square-summability "
                    "with margin requires it)"
                )
            object.__setattr__(self, "tail_exponent", float(self.exponent))
        elif self.kind == "explicit":
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 0:
                raise ValueError("explicit weights need at least one value")
            if vals[0] > 1.0 or np.any(vals <= 0.0):
                raise ValueError("weights must lie in (0, 1]")
            if np.any(np.diff(vals) > 1e-15):
                raise ValueError("weights must be non-increasing")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def w(self, i: int) -> float:
        """Weight at 1-based index ``i``."""
        if i < 1:
            raise IndexError("weights are indexed from 1")
        if self.kind == "power":
            return float(i) ** (-self.exponent)
        if i > len(self.values):
            raise IndexError(
                f"explicit weight sequence has only {len(self.values)} entries"
            )
        return self.values[i - 1]

    def prefix(self, n: int) -> np.ndarray:
        """Array ``[w_1, ..., w_n]``."""
        if self.kind == "power":
            return np.arange(1, n + 1, dtype=float) ** (-self.exponent)
        if n > len(self.values):
            raise IndexError(
                f"explicit weight sequence has only {len(self.values)} entries"
            )
        return np.asarray(self.values[:n], dtype=float)

    def power_sum(self, q: float, rel_tol: float = 1e-8, start: int = 1):
        """Certified evaluation of ``sum_{i>=start} w_i^q``.

        Returns ``(value, tail_bound)`` where ``tail_bound`` bounds the
        neglected remainder.  For power weights the sum is extended until the
        integral tail bound drops below ``rel_tol`` times the partial sum;
        the returned value includes the integral tail estimate.  Explicit
        sequences are finite, so the remainder is exactly zero.
        """
        if self.kind == "explicit":
            vals = np.asarray(self.values[start - 1:], dtype=float)
            return float(np.sum(vals**q)), 0.0
        p = self.exponent * q
        if p <= 1.0:
            raise ValueError(f"sum of w_i^{q} diverges for exponent {self.exponent}")
        n = max(start, 16)
        while True:
            idx = np.arange(start, n + 1, dtype=float)
            partial = float(np.sum(idx ** (-p)))
            # integral sandwich: int_{n+1}^inf <= tail <= int_n^inf
            lo = (n + 1.0) ** (1.0 - p) / (p - 1.0)
            hi = float(n) ** (1.0 - p) / (p - 1.0)
            if hi - lo <= rel_tol * (partial + lo) or n > 10**8:
                return partial + 0.5 * (lo + hi), 0.5 * (hi - lo)
            n *= 4


def make_weights(kind: str = "power", exponent: float = 1.0, values=None) -> WeightSequence:
    """Construct a :class:`WeightSequence`; rejects ``exponent < 1``."""
    if kind == "explicit":
        return WeightSequence(kind="explicit", values=tuple(values))
    return WeightSequence(kind="power", exponent=float(exponent))


@dataclass(frozen=True)
class SmoothnessParams:
    """Input/output smoothness exponents, cube radius and Hölder exponent."""

    s: float
    t: float = 0.0
    r: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.s > 0.5:
            raise ValueError("input smoothness s must exceed 1/2")
        if self.t < 0.0:
            raise ValueError("output smoothness t must be nonnegative")
        if not self.r > 0.0:
            raise ValueError("cube radius r must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("Hölder exponent gamma must lie in (0, 1]")


def weighted_norm(coeffs, s_exp: float, w: WeightSequence) -> float:
    """Weighted coefficient norm ``(sum_i c_i^2 w_i^{-2 s_exp})^{1/2}``.

    ``s_exp = 0`` reduces to the plain Euclidean norm.  Only the finite
    prefix given by ``coeffs`` enters the sum.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1:
        raise ValueError("coeffs must be a flat vector")
    if s_exp < 0.0:
        raise ValueError("s_exp must be nonnegative")
    if c.size == 0:
        return 0.0
    wi = w.prefix(c.size)
    return float(np.sqrt(np.sum(c**2 * wi ** (-2.0 * s_exp))))


def cube_contains(coeffs, params: SmoothnessParams, w: WeightSequence,
                  tol: float = 0.0) -> bool:
    """True iff ``|c_i| <= r * w_i^s`` holds for every prefix index."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return True
    wi = w.prefix(c.size)
    return bool(np.all(np.abs(c) <= params.r * wi**params.s + tol))


def ball_cube_radius(params: SmoothnessParams, eps: float, w: WeightSequence,
                     tail_dim: int | None = None) -> float:
    """Radius ``r_eps = r * (sum_i w_i^{1+2 eps})^{1/2}`` of the covering ball.

    The cube of radius ``r`` sits inside the ball of this radius in the
    slightly weaker scale with exponent ``s - 1/2 - eps``.  The infinite sum
    carries an integral tail certificate; if ``tail_dim`` is given, the sum is
    truncated there and rejected when the certified tail exceeds ``1e-8``
    relative.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    q = 1.0 + 2.0 * eps
    if tail_dim is None:
        total, _ = w.power_sum(q, rel_tol=1e-10)
        return params.r * math.sqrt(total)
    idx = np.arange(1, tail_dim + 1, dtype=float)
    partial = float(np.sum(w.prefix(tail_dim) ** q))
    if w.kind == "power":
        p = w.exponent * q
        if p <= 1.0:
            raise ValueError("sum of w_i^{1+2 eps} diverges")
        tail = float(tail_dim) ** (1.0 - p) / (p - 1.0)
        if tail > 1e-8 * partial:
            raise ValueError(
                f"tail_dim={tail_dim} too small: tail bound {tail:.3e} "
                f"exceeds 1e-8 relative"
            )
        partial += tail
    del idx
    return params.r * math.sqrt(partial)


@dataclass(frozen=True)
class SamplingLaw:
    """Uniform product law on ``[-1,1]^truncation_dim`` pushed onto the cube.

    Draws are deterministic per ``(seed, sample_index)``; see
    :func:`lipdon.harness.sample_inputs`.
    """

    weights: WeightSequence
    params: SmoothnessParams
    truncation_dim: int
    seed: int = 0

    def __post_init__(self):
        if self.truncation_dim < 1:
            raise ValueError("truncation_dim must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def sigma_map(u, law: SamplingLaw) -> np.ndarray:
    """Map noise ``u in [-1,1]^n`` to cube coefficients ``r * w_i^s * u_i``."""
    u = np.asarray(u, dtype=float)
    flat = u.ndim == 1
    u2 = u[None, :] if flat else u
    if np.any(np.abs(u2) > 1.0 + 1e-15):
        raise ValueError("sigma_map inputs must satisfy |u_i| <= 1")
    n = u2.shape[-1]
    scale = law.params.r * law.weights.prefix(n) ** law.params.s
    out = u2 * scale
    return out[0] if flat else out
