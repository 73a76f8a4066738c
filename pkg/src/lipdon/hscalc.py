"""Singular-value functional calculus for finite-rank operators.

For a matrix ``A`` with singular value decomposition
``A = sum_j s_j w_j v_j^T`` and a scalar Lipschitz function ``f`` with
``f(0) = 0``, the calculus maps ``A`` to ``sum_j f(s_j) w_j v_j^T``.  This
map is Lipschitz on the Hilbert-Schmidt (Frobenius) class with constant at
most the Lipschitz constant of ``f``.  Truncating the sum after ``N`` triples
leaves the exact squared error ``sum_{j>N} f(s_j)^2``.

Operators here are plain matrices of moderate size; the infinite-dimensional
picture is represented by the leading block with the tail declared zero,
which preserves singular values exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SVDecomposition",
    "ScalarLipschitzFunction",
    "svd",
    "functional_calculus",
    "truncated_calculus",
    "schatten_norm",
    "hs_smoothness_norm",
    "lipschitz_certificate",
    "identity_fn",
    "soft_threshold",
    "clip_at",
]


@dataclass
class SVDecomposition:
    """Singular triples: values sorted non-increasing, orthonormal vectors."""

    singular_values: np.ndarray
    left_vectors: np.ndarray   # columns w_j
    right_vectors: np.ndarray  # columns v_j

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class ScalarLipschitzFunction:
    """Scalar function on the nonnegative axis with ``f(0) = 0``."""

    evaluate: callable
    lipschitz_constant: float
    fixes_zero: bool = True
    name: str = "f"

    def __post_init__(self):
        if self.lipschitz_constant <= 0:
            raise ValueError("Lipschitz constant must be positive")
        if not self.fixes_zero or abs(self.evaluate(0.0)) != 0.0:
            raise ValueError("functional calculus requires f(0) = 0")

    def __call__(self, x):
        return self.evaluate(x)

    def check_sampled(self, s_max: float = 10.0, trials: int = 256,
                      seed: int = 0, tol: float = 1e-10) -> bool:
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, s_max, size=trials)
        y = rng.uniform(0.0, s_max, size=trials)
        fx = np.asarray(self.evaluate(x), dtype=float)
        fy = np.asarray(self.evaluate(y), dtype=float)
        keep = np.abs(x - y) > 1e-14
        quot = np.abs(fx[keep] - fy[keep]) / np.abs(x[keep] - y[keep])
        return bool(np.all(quot <= self.lipschitz_constant + tol))


identity_fn = ScalarLipschitzFunction(lambda x: x, 1.0, name="identity")


def soft_threshold(c: float = 1.0) -> ScalarLipschitzFunction:
    """``f(x) = max(x - c, 0)``; 1-Lipschitz, vanishes at zero for c >= 0."""
    if c < 0:
        raise ValueError("threshold must be nonnegative")
    return ScalarLipschitzFunction(lambda x: np.maximum(x - c, 0.0), 1.0,
                                   name=f"soft_threshold({c})")


def clip_at(c: float = 1.0) -> ScalarLipschitzFunction:
    """``f(x) = min(x, c)``; 1-Lipschitz with ``f(0) = 0`` for c >= 0."""
    if c < 0:
        raise ValueError("clip level must be nonnegative")
    return ScalarLipschitzFunction(lambda x: np.minimum(x, c), 1.0,
                                   name=f"clip({c})")


def svd(A) -> SVDecomposition:
    """Full singular value decomposition of a finite-rank operator."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("operators are 2-d matrices")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SVDecomposition(singular_values=s, left_vectors=U, right_vectors=Vt.T)


def functional_calculus(f: ScalarLipschitzFunction, A) -> np.ndarray:
    """Apply ``f`` to the singular values: ``sum_j f(s_j) w_j v_j^T``."""
    if not f.fixes_zero:
        raise ValueError("functional calculus requires f(0) = 0")
    dec = svd(A)
    fs = np.asarray(f(dec.singular_values), dtype=float)
    return (dec.left_vectors * fs) @ dec.right_vectors.T


def truncated_calculus(f: ScalarLipschitzFunction, A, N: int) -> np.ndarray:
    """Keep only the leading ``N`` singular triples of the calculus."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    dec = svd(A)
    fs = np.asarray(f(dec.singular_values), dtype=float)
    fs[N:] = 0.0
    return (dec.left_vectors * fs) @ dec.right_vectors.T


def schatten_norm(A, p: float) -> float:
    """``l^p`` norm of the singular values; ``p = 2`` is Frobenius,
    ``p = inf`` the operator norm."""
    if p <= 0:
        raise ValueError("p must be positive")
    s = svd(A).singular_values
    if math.isinf(p):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s**p) ** (1.0 / p))


def hs_smoothness_norm(A, s_exp: float, w) -> float:
    """Weighted singular-value norm ``(sum_j s_j^2 w_j^{-2 s_exp})^{1/2}``."""
    if s_exp < 0:
        raise ValueError("s_exp must be nonnegative")
    s = svd(A).singular_values
    wj = w.prefix(s.size)
    return float(np.sqrt(np.sum(s**2 * wj ** (-2.0 * s_exp))))


def lipschitz_certificate(f: ScalarLipschitzFunction, A, B) -> float:
    """Difference quotient of the calculus at a pair of distinct operators."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    denom = float(np.linalg.norm(A - B))
    if denom < 1e-14:
        raise ValueError("operators must be distinct")
    num = float(np.linalg.norm(functional_calculus(f, A) - functional_calculus(f, B)))
    return num / denom
