"""Riesz bases on the periodic torus with linear encoders and decoders.

The default basis is the real Fourier system on ``[0,1)^d``: the constant
function, then ``sqrt(2) cos(2 pi k.x)`` and ``sqrt(2) sin(2 pi k.x)`` pairs
ordered by frequency magnitude ``|k|`` with lexicographic tie-breaking and
cosine before sine.  On an aligned uniform grid with ``n`` points per axis the
trapezoidal rule makes these functions exactly orthonormal as long as all
frequencies stay below the Nyquist bound, so the encoder (analysis) and
decoder (synthesis) are exact inverses of each other on band-limited data and
the Riesz constants are exactly one.

A user-supplied sampled basis is also accepted; its dual system is obtained
from the Gram matrix and the Riesz constants from the Gram spectrum.

Functions are pure; cached sample matrices are computed once per basis object
and never mutated, so encode/decode over sample batches can run concurrently
with bitwise-identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "RieszBasis",
    "FourierBasis",
    "SampledBasis",
    "EncodedVector",
    "encode",
    "decode",
    "restrict",
    "project",
    "verify_riesz",
]


def _fourier_mode_table(d: int, n_modes: int, freq_cap: int):
    """First ``n_modes`` real Fourier mode descriptors ``(k, trig)``.

    ``k`` is the representative integer frequency vector (first nonzero
    component positive) and ``trig`` is ``"const"``, ``"cos"`` or ``"sin"``.
    Raises when a mode beyond ``freq_cap`` per axis would be needed.
    """
    modes = [((0,) * d, "const")]
    if n_modes <= 1:
        return modes[:n_modes]
    # enumerate representative frequency vectors by (|k|_2, lex)
    reps = []
    for radius in range(1, freq_cap + 1):
        ks = np.indices((2 * radius + 1,) * d).reshape(d, -1).T - radius
        for k in ks:
            if np.max(np.abs(k)) != radius:
                continue  # handled at a smaller radius shell
            nz = k[k != 0]
            if len(nz) == 0 or nz[0] < 0:
                continue  # keep one representative of {k, -k}
            reps.append(tuple(int(v) for v in k))
        reps.sort(key=lambda k: (float(np.linalg.norm(k)), k))
        if 1 + 2 * len(reps) >= n_modes:
            break
    for k in reps:
        modes.append((k, "cos"))
        modes.append((k, "sin"))
        if len(modes) >= n_modes:
            return modes[:n_modes]
    raise ValueError(
        f"requested {n_modes} modes but grid only resolves per-axis "
        f"frequencies up to {freq_cap} (aliasing)"
    )


class RieszBasis:
    """Common interface: sampled basis functions plus dual system."""

    kind = "abstract"

    def __init__(self, d: int, grid_size: int):
        if d < 1 or grid_size < 2:
            raise ValueError("need d >= 1 and grid_size >= 2")
        self.d = d
        self.grid_size = grid_size
        self.npoints = grid_size**d

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, "d": self.d, "grid_size": self.grid_size}

    def grid(self):
        """Tuple of coordinate arrays of the uniform periodic grid."""
        x = np.arange(self.grid_size) / self.grid_size
        return np.meshgrid(*([x] * self.d), indexing="ij")

    def matrix(self, n_terms: int) -> np.ndarray:
        """Samples of the first ``n_terms`` basis functions, flattened rows."""
        raise NotImplementedError

    def dual_matrix(self, n_terms: int) -> np.ndarray:
        raise NotImplementedError

    def function(self, i: int) -> np.ndarray:
        """Grid samples of ``psi_i`` (1-based), shaped ``(n,)*d``."""
        row = self.matrix(i)[i - 1]
        return row.reshape((self.grid_size,) * self.d)

    def inner(self, f, g) -> float:
        """Trapezoidal L2 inner product of two grid functions."""
        return float(np.mean(np.asarray(f) * np.asarray(g)))


class FourierBasis(RieszBasis):
    """Real Fourier orthonormal basis; ``lambda = Lambda = 1`` exactly."""

    kind = "fourier"

    def __init__(self, d: int = 1, grid_size: int = 256):
        super().__init__(d, grid_size)
        self.riesz_lower = 1.0
        self.riesz_upper = 1.0
        self.freq_cap = (grid_size - 1) // 2
        self._cache_n = 0
        self._cache = np.zeros((0, self.npoints))

    @property
    def n_max(self) -> int:
        """Number of modes resolvable below the Nyquist bound."""
        count = 1
        for radius in range(1, self.freq_cap + 1):
            shell = (2 * radius + 1) ** self.d - (2 * radius - 1) ** self.d
            count += shell  # each +/-k pair gives one cos and one sin
        return count

    def matrix(self, n_terms: int) -> np.ndarray:
        if n_terms > self._cache_n:
            modes = _fourier_mode_table(self.d, n_terms, self.freq_cap)
            xs = self.grid()
            rows = np.empty((n_terms, self.npoints))
            rows[: self._cache_n] = self._cache
            for i in range(self._cache_n, n_terms):
                k, trig = modes[i]
                phase = np.zeros_like(xs[0])
                for ax in range(self.d):
                    phase += k[ax] * xs[ax]
                phase *= 2.0 * np.pi
                if trig == "const":
                    rows[i] = 1.0
                elif trig == "cos":
                    rows[i] = np.sqrt(2.0) * np.cos(phase).ravel()
                else:
                    rows[i] = np.sqrt(2.0) * np.sin(phase).ravel()
            self._cache = rows
            self._cache_n = n_terms
        return self._cache[:n_terms]

    def dual_matrix(self, n_terms: int) -> np.ndarray:
        return self.matrix(n_terms)  # orthonormal: dual system equals primal


class SampledBasis(RieszBasis):
    """Basis given by row-wise samples of functions on the aligned grid.

    The dual system is ``G^{-1} Psi`` with ``G`` the Gram matrix; empirical
    Riesz constants are the extreme Gram eigenvalues.
    """

    kind = "sampled"

    def __init__(self, samples: np.ndarray, d: int = 1):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise ValueError("samples must be (n_funcs, n_points)")
        grid_size = round(samples.shape[1] ** (1.0 / d))
        if grid_size**d != samples.shape[1]:
            raise ValueError("sample count is not a d-dim grid")
        super().__init__(d, grid_size)
        self._samples = samples
        gram = samples @ samples.T / self.npoints
        self._gram = gram
        eigs = np.linalg.eigvalsh(gram)
        self.riesz_lower = float(eigs[0])
        self.riesz_upper = float(eigs[-1])
        if self.riesz_lower <= 0:
            raise ValueError("sampled system is not a Riesz basis (singular Gram)")
        self._dual = np.linalg.solve(gram, samples)

    @property
    def n_max(self) -> int:
        return self._samples.shape[0]

    def matrix(self, n_terms: int) -> np.ndarray:
        if n_terms > self.n_max:
            raise ValueError("not enough sampled basis functions")
        return self._samples[:n_terms]

    def dual_matrix(self, n_terms: int) -> np.ndarray:
        if n_terms > self.n_max:
            raise ValueError("not enough sampled basis functions")
        return self._dual[:n_terms]


@dataclass
class EncodedVector:
    """Finite coefficient vector together with its basis descriptor."""

    coefficients: np.ndarray
    basis_id: dict
    length: int = 0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")
        self.length = int(self.coefficients.size)

    def to_json(self) -> str:
        return json.dumps(
            {"coefficients": self.coefficients.tolist(), "basis": self.basis_id}
        )

    @classmethod
    def from_json(cls, text: str) -> "EncodedVector":
        obj = json.loads(text)
        return cls(np.asarray(obj["coefficients"], dtype=float), obj["basis"])


def _coeffs(c) -> np.ndarray:
    if isinstance(c, EncodedVector):
        return c.coefficients
    return np.asarray(c, dtype=float)


def encode(x, basis: RieszBasis, n_terms: int) -> EncodedVector:
    """Analysis: first ``n_terms`` dual inner products ``<x, dual_i>``.

    For the Fourier basis this is the trapezoidal-rule inner product, exact
    for band-limited ``x``.  Requesting modes beyond the grid's Nyquist bound
    is rejected (aliasing).
    """
    x = np.asarray(x, dtype=float)
    if x.size != basis.npoints:
        raise ValueError(
            f"grid mismatch: expected {basis.npoints} samples, got {x.size}"
        )
    if n_terms > basis.n_max:
        raise ValueError(
            f"n_terms={n_terms} exceeds the basis Nyquist bound {basis.n_max}"
        )
    coeffs = basis.dual_matrix(n_terms) @ x.ravel() / basis.npoints
    return EncodedVector(coeffs, basis.descriptor)


def encode_batch(X, basis: RieszBasis, n_terms: int) -> np.ndarray:
    """Analysis of a batch: rows of ``X`` are flattened grid functions."""
    X = np.asarray(X, dtype=float)
    if n_terms > basis.n_max:
        raise ValueError(
            f"n_terms={n_terms} exceeds the basis Nyquist bound {basis.n_max}"
        )
    return X.reshape(X.shape[0], -1) @ basis.dual_matrix(n_terms).T / basis.npoints


def decode(c, basis: RieszBasis) -> np.ndarray:
    """Synthesis: ``sum_i c_i psi_i`` sampled on the grid."""
    coeffs = _coeffs(c)
    if coeffs.size == 0:
        return np.zeros((basis.grid_size,) * basis.d)
    out = coeffs @ basis.matrix(coeffs.size)
    return out.reshape((basis.grid_size,) * basis.d)


def decode_batch(C, basis: RieszBasis) -> np.ndarray:
    """Synthesis of a batch of coefficient rows; returns flattened rows."""
    C = np.asarray(C, dtype=float)
    return C @ basis.matrix(C.shape[1])


def restrict(c, N: int):
    """Keep the first ``N`` coefficients, zero the rest; idempotent."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    coeffs = _coeffs(c).copy()
    coeffs[N:] = 0.0
    if isinstance(c, EncodedVector):
        return EncodedVector(coeffs, c.basis_id)
    return coeffs


def project(c, M: int) -> np.ndarray:
    """First ``M`` coordinates, zero-padded when the vector is shorter."""
    if M < 1:
        raise ValueError("M must be >= 1")
    coeffs = _coeffs(c)
    out = np.zeros(M)
    m = min(M, coeffs.size)
    out[:m] = coeffs[:m]
    return out


def verify_riesz(basis: RieszBasis, trials: int = 64, seed: int = 0,
                 n_terms: int | None = None):
    """Extreme observed Rayleigh quotients ``|sum c_i psi_i|^2 / |c|^2``.

    For the Fourier basis both extremes equal one up to quadrature roundoff.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = n_terms or min(basis.n_max, 33)
    rng = np.random.default_rng(seed)
    mat = basis.matrix(n)
    lo, hi = np.inf, -np.inf
    for _ in range(trials):
        c = rng.standard_normal(n)
        g = c @ mat
        q = np.mean(g**2) / np.sum(c**2)
        lo, hi = min(lo, q), max(hi, q)
    return float(lo), float(hi)
