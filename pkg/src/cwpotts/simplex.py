"""Points of the probability simplex over q spin values.

A point is stored as the full q-vector (x_1, ..., x_q), x_k >= 0,
sum(x) = 1, so that spin relabelling acts by plain coordinate
permutation.  The (q-1)-dimensional chart used by gradients and
Hessians drops the last coordinate, x_q = 1 - x_1 - ... - x_{q-1}.

Besides the point type this module builds the one-parameter critical
candidates: for 1 <= i <= q/2 and j = q - i the point with j small
coordinates t and i large coordinates (1 - j*t)/i, and its permutation
images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

SUM_TOL = 1e-12


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector over q >= 3 spin values."""

    coords: tuple

    def __post_init__(self):
        q = len(self.coords)
        if q < 3:
            raise DomainError(f"need at least 3 spin values, got q={q}")
        arr = np.asarray(self.coords, dtype=float)
        if np.any(arr < 0):
            raise DomainError(f"negative coordinate in {self.coords}")
        if abs(float(arr.sum()) - 1.0) > SUM_TOL:
            raise DomainError(f"coordinates sum to {arr.sum()!r}, not 1")
        object.__setattr__(self, "coords", tuple(float(c) for c in arr))

    @property
    def q(self) -> int:
        return len(self.coords)

    @property
    def interior(self) -> bool:
        return all(c > 0.0 for c in self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def permuted(self, perm: Sequence[int]) -> "SimplexPoint":
        """Image under the spin relabelling k -> perm[k] (perm is a q-permutation)."""
        if sorted(perm) != list(range(self.q)):
            raise DomainError(f"{perm} is not a permutation of 0..{self.q - 1}")
        out = [0.0] * self.q
        for k, c in enumerate(self.coords):
            out[perm[k]] = c
        return SimplexPoint(tuple(out))


def uniform_point(q: int) -> SimplexPoint:
    """The equidistributed point (1/q, ..., 1/q)."""
    return SimplexPoint((1.0 / q,) * q)


def family_point(q: int, i: int, t: float) -> SimplexPoint:
    """Representative of the (i, t) critical family, large entries last.

    The point has j = q - i coordinates equal to t followed by i
    coordinates equal to (1 - j*t)/i.  Valid for t in (0, 1/j).
    """
    j = _checked_family(q, i, t)
    big = (1.0 - j * t) / i
    return SimplexPoint((t,) * j + (big,) * i)


def family_rep(q: int, i: int, t: float, positions: Iterable[int]) -> SimplexPoint:
    """Permutation image of the (i, t) family point with the large entries
    at the given 0-based coordinate positions."""
    j = _checked_family(q, i, t)
    pos = sorted(set(int(k) for k in positions))
    if len(pos) != i or pos[0] < 0 or pos[-1] >= q:
        raise DomainError(f"positions {positions!r} must be {i} distinct indices in 0..{q - 1}")
    big = (1.0 - j * t) / i
    coords = [t] * q
    for k in pos:
        coords[k] = big
    return SimplexPoint(tuple(coords))


def _checked_family(q: int, i: int, t: float) -> int:
    if not (1 <= i <= q / 2):
        raise DomainError(f"family index i={i} outside [1, q/2] for q={q}")
    j = q - i
    if not (0.0 < t < 1.0 / j):
        raise DomainError(f"t={t} outside (0, 1/{j})")
    return j


def nearest_count_vector(x: SimplexPoint | Sequence[float], N: int) -> tuple:
    """Nearest integer count vector with sum N to the scaled point N*x.

    Floors N*x and repairs the deficit by incrementing the coordinates
    with the largest fractional remainders; remainder ties go to the
    lowest spin index.
    """
    arr = x.as_array() if isinstance(x, SimplexPoint) else np.asarray(x, dtype=float)
    scaled = arr * N
    base = np.floor(scaled).astype(int)
    deficit = N - int(base.sum())
    if deficit < 0:  # only possible through float dust
        raise DomainError(f"cannot round {arr} onto the scale-{N} lattice")
    if deficit > 0:
        remainders = scaled - base
        # stable sort on -remainder keeps low indices first among ties
        order = np.argsort(-remainders, kind="stable")
        for k in order[:deficit]:
            base[k] += 1
    return tuple(int(n) for n in base)


def count_to_point(counts: Sequence[int], N: int | None = None) -> SimplexPoint:
    """The simplex point n/N of a count vector n."""
    counts = tuple(int(c) for c in counts)
    total = sum(counts)
    if N is None:
        N = total
    if total != N or min(counts) < 0:
        raise DomainError(f"{counts} is not a count vector of sum {N}")
    return SimplexPoint(tuple(c / N for c in counts))


def simplex_size(q: int, N: int) -> int:
    """Number of count vectors of length q summing to N."""
    return math.comb(N + q - 1, q - 1)
