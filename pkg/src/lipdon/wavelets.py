"""Integer relabeling of tensorized periodic wavelet indices and Besov norms.

A wavelet index on the d-torus is a triple ``(j, k, l)``: level ``j >= 0``,
shift ``k`` in ``{0,...,2^j-1}^d`` and type ``l`` in ``{0,1}^d``, where level
zero admits every type and higher levels exclude the all-zero type.  The
relabeling maps level 0 onto ``{0,...,2^d-1}`` and level ``j >= 1`` onto
``{2^{dj}+1, ..., 2^{d(j+1)}}``, with lexicographic ordering in ``(k, l)``
inside a level.  Consecutive levels ``j >= 1`` tile a contiguous integer
range; the single integer ``2^d`` between level 0 and level 1 is unused by
this convention.

Only the combinatorics and coefficient-space Besov norms live here; no wavelet
functions are synthesized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WaveletIndex",
    "level_types",
    "level_size",
    "level_range",
    "wavelet_relabel",
    "wavelet_relabel_inverse",
    "besov_norm",
    "besov_weighted_l2_norm",
]


@dataclass(frozen=True)
class WaveletIndex:
    """Level / shift / type triple with the torus validity rules."""

    j: int
    k: tuple
    l: tuple

    def validate(self, d: int):
        if self.j < 0:
            raise ValueError("level j must be nonnegative")
        if len(self.k) != d or len(self.l) != d:
            raise ValueError(f"shift and type must have {d} components")
        if any(not 0 <= km < 2**self.j for km in self.k):
            raise ValueError("shift out of range for level")
        if any(lm not in (0, 1) for lm in self.l):
            raise ValueError("type components must be 0 or 1")
        if self.j >= 1 and all(lm == 0 for lm in self.l):
            raise ValueError("all-zero type is only allowed at level 0")


def level_types(j: int, d: int):
    """Admissible types at level ``j``, lexicographically sorted."""
    all_types = sorted(itertools.product((0, 1), repeat=d))
    if j == 0:
        return all_types
    return [l for l in all_types if any(l)]


def level_size(j: int, d: int) -> int:
    """Number of wavelet indices at level ``j``."""
    shifts = (2**j) ** d
    return shifts * len(level_types(j, d))


def level_range(j: int, d: int):
    """Integer range (inclusive) occupied by level ``j`` after relabeling."""
    if j == 0:
        return 0, 2**d - 1
    start = 2 ** (d * j) + 1
    return start, 2 ** (d * (j + 1))


def wavelet_relabel(idx: WaveletIndex, d: int) -> int:
    """Integer label of ``(j, k, l)``; lexicographic in ``(k, l)`` per level."""
    idx.validate(d)
    types = level_types(idx.j, d)
    ntypes = len(types)
    # rank of k in lexicographic order over {0,...,2^j-1}^d
    krank = 0
    for km in idx.k:
        krank = krank * 2**idx.j + km
    lrank = types.index(tuple(idx.l))
    offset = krank * ntypes + lrank
    return level_range(idx.j, d)[0] + offset


def wavelet_relabel_inverse(i: int, d: int) -> WaveletIndex:
    """Inverse of :func:`wavelet_relabel`.

    Rejects negative input and the single unused integer ``2^d`` that the
    level ranges skip between level 0 and level 1.
    """
    if i < 0:
        raise ValueError("labels are nonnegative")
    if i < 2**d:
        j = 0
    elif i == 2**d:
        raise ValueError(f"label {i} = 2^d is unused by the level ranges")
    else:
        j = int(math.log2(i - 1) // d)
        lo, hi = level_range(j, d)
        if not lo <= i <= hi:  # guard rounding at range boundaries
            j += 1 if i > hi else -1
            lo, hi = level_range(j, d)
        assert lo <= i <= hi
    types = level_types(j, d)
    offset = i - level_range(j, d)[0]
    krank, lrank = divmod(offset, len(types))
    k = []
    for _ in range(d):
        krank, km = divmod(krank, 2**j)
        k.append(km)
    k.reverse()
    return WaveletIndex(j=j, k=tuple(k), l=types[lrank])


def besov_norm(coeffs: dict, gamma: float, p: float, d: int) -> float:
    """Coefficient-space Besov norm.

    ``coeffs`` maps :class:`WaveletIndex` to values.  For finite ``p`` the
    norm is ``(sum 2^{j p (gamma + d/2 - d/p)} |c|^p)^{1/p}``; for infinite
    ``p`` it is ``sup 2^{j (gamma + d/2)} |c|``.
    """
    if p < 1:
        raise ValueError("p must lie in [1, inf]")
    if math.isinf(p):
        best = 0.0
        for idx, c in coeffs.items():
            idx.validate(d)
            best = max(best, 2.0 ** (idx.j * (gamma + d / 2.0)) * abs(c))
        return best
    total = 0.0
    for idx, c in coeffs.items():
        idx.validate(d)
        expo = idx.j * p * (gamma + d / 2.0 - d / p)
        total += 2.0**expo * abs(c) ** p
    return total ** (1.0 / p)


def besov_weighted_l2_norm(coeffs: dict, gamma: float, d: int) -> float:
    """Relabeled single-index comparison norm for ``p = 2``.

    Evaluates ``(sum_i max(i, 1)^{2 gamma / d} |c_i|^2)^{1/2}`` over the
    integer labels ``i`` of the given wavelet coefficients.  Clamping the
    label at one (rather than shifting all labels up) keeps the sandwich
    ``besov <= this <= 2^gamma * besov`` exact on every level, including the
    level-0 label ``i = 0``.
    """
    total = 0.0
    q = 2.0 * gamma / d
    for idx, c in coeffs.items():
        i = wavelet_relabel(idx, d)
        total += max(i, 1) ** q * c * c
    return math.sqrt(total)
