"""Energy, entropy and the free-energy potential on the simplex.

The model on q spin values assigns a configuration with spin
proportions x = (x_1, ..., x_q) the energy

    H(x) = -1/2 * |x|^2 - h . x        (h: external field, default 0)

and the entropy S(x) = sum_k x_k log x_k (0*log 0 = 0 on the boundary).
The potential at inverse temperature beta is

    F_beta(x) = H(x) + S(x) / beta .

F_beta is the large-deviation rate of the invariant measure of the
magnetization chain; its minima are the metastable states.  The
interior log correction

    G_beta(x) = log(x_1 * ... * x_q) / (2*beta)

is the O(1/N) refinement of the finite-N potential; it diverges on the
boundary and is reported as a non-finite value there, never clamped.

Gradients and Hessians are taken in the (q-1)-chart that drops the last
coordinate:

    dF/dx_k   = -(x_k - x_q) + (log x_k - log x_q)/beta,
    d2F/dx_k2 = (-1 + 1/(beta x_k)) + (-1 + 1/(beta x_q)),
    d2F/dx_k dx_l = -1 + 1/(beta x_q)          (k != l).

At a family point with j = q - i coordinates t and i coordinates
(1-j*t)/i the Hessian spectrum is closed-form in

    a = -1 + 1/(beta*t),   b = -1 + i/(beta*(1-j*t)):

    i  = 1: a with multiplicity q-2, and a + (q-1)*b;
    i >= 2: a (mult j-1), b (mult i-2), and the two roots of
            z^2 - (a + q*b) z + b*(i*a + j*b).

At the uniform point both reduce to (q-beta)/beta with multiplicity
q-2 plus q*(q-beta)/beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import family
from .errors import DomainError
from .simplex import SimplexPoint, family_point

TOL_ZERO = 1e-8  # eigenvalue magnitude below which a spectrum counts as degenerate


@dataclass(frozen=True)
class PotentialValue:
    """Potential split into its energy, entropy and interior-correction parts.

    f = h_part + s_part/beta; g_part is NaN on the boundary.
    """

    f: float
    h_part: float
    s_part: float
    g_part: float


@dataclass(frozen=True)
class HessianSpectrum:
    """Closed-form Hessian spectrum at a critical point.

    eigenvalues lists all q-1 values with multiplicity, ascending.
    index counts eigenvalues below -TOL_ZERO; degenerate flags any
    eigenvalue within TOL_ZERO of zero.
    """

    a: float
    b: float
    eigenvalues: tuple
    index: int
    degenerate: bool

    @property
    def determinant(self) -> float:
        return float(np.prod(self.eigenvalues))


def _spectrum_from_eigs(a: float, b: float, eigs: Sequence[float]) -> HessianSpectrum:
    eigs = tuple(sorted(float(e) for e in eigs))
    index = sum(1 for e in eigs if e < -TOL_ZERO)
    degenerate = any(abs(e) <= TOL_ZERO for e in eigs)
    return HessianSpectrum(a=a, b=b, eigenvalues=eigs, index=index, degenerate=degenerate)


def energy(x: SimplexPoint, h: Sequence[float] | None = None) -> float:
    """H(x) = -|x|^2/2 - h.x; the model of record has h = 0."""
    arr = x.as_array()
    val = -0.5 * float(arr @ arr)
    if h is not None:
        hv = np.asarray(h, dtype=float)
        if hv.shape != arr.shape:
            raise DomainError(f"field has shape {hv.shape}, expected {arr.shape}")
        val -= float(hv @ arr)
    return val


def entropy(x: SimplexPoint) -> float:
    """S(x) = sum x_k log x_k with the 0*log 0 = 0 convention."""
    arr = x.as_array()
    pos = arr > 0.0
    return float(np.sum(arr[pos] * np.log(arr[pos])))


def log_correction(x: SimplexPoint, beta: float) -> float:
    """G_beta(x) = log(x_1...x_q)/(2*beta); NaN on the boundary."""
    if not x.interior:
        return math.nan
    arr = x.as_array()
    return float(np.sum(np.log(arr)) / (2.0 * beta))


def potential(x: SimplexPoint, beta: float) -> PotentialValue:
    if beta <= 0:
        raise DomainError(f"beta={beta} must be positive")
    h_part = energy(x)
    s_part = entropy(x)
    return PotentialValue(
        f=h_part + s_part / beta,
        h_part=h_part,
        s_part=s_part,
        g_part=log_correction(x, beta),
    )


def gradient(x: SimplexPoint, beta: float) -> np.ndarray:
    """Gradient of F_beta in the (q-1)-chart; interior points only."""
    if not x.interior:
        raise DomainError("gradient requires a strictly interior point")
    arr = x.as_array()
    xq = arr[-1]
    return -(arr[:-1] - xq) + (np.log(arr[:-1]) - math.log(xq)) / beta


def hessian(x: SimplexPoint, beta: float) -> np.ndarray:
    """Hessian of F_beta in the (q-1)-chart; interior points only."""
    if not x.interior:
        raise DomainError("hessian requires a strictly interior point")
    arr = x.as_array()
    last = -1.0 + 1.0 / (beta * arr[-1])
    diag = -1.0 + 1.0 / (beta * arr[:-1])
    H = np.full((x.q - 1, x.q - 1), last)
    H[np.diag_indices(x.q - 1)] = diag + last
    return H


def spectrum_at_uniform(q: int, beta: float) -> HessianSpectrum:
    """Spectrum at (1/q, ..., 1/q): (q-beta)/beta (mult q-2) and q(q-beta)/beta."""
    a = (q - beta) / beta
    return _spectrum_from_eigs(a, a, [a] * (q - 2) + [q * a])


def spectrum_at_family_point(q: int, i: int, t: float) -> HessianSpectrum:
    """Closed-form spectrum at the (i, t) family point at beta = g_i(t)."""
    beta = family.g(i, q, t)  # validates (i, q, t)
    j = q - i
    a = -1.0 + 1.0 / (beta * t)
    b = -1.0 + i / (beta * (1.0 - j * t))
    if i == 1:
        eigs = [a] * (q - 2) + [a + (q - 1) * b]
    else:
        s = a + q * b
        p = b * (i * a + j * b)
        disc = max(s * s - 4.0 * p, 0.0)  # symmetric matrix: clip rounding dust
        root = math.sqrt(disc)
        big = 0.5 * (s + root) if s >= 0 else 0.5 * (s - root)
        small = p / big if big != 0.0 else 0.5 * (s - math.copysign(root, s))
        eigs = [a] * (j - 1) + [b] * (i - 2) + [big, small]
    return _spectrum_from_eigs(a, b, eigs)


def sign_table(q: int, i: int, t: float) -> tuple:
    """Signs of (a, b, i*a + j*b, b*(i*a + j*b)) along the (i)-family.

    Returned as -1/0/+1 per the position of t relative to the
    minimizer m_i and 1/q; at t = 1/q all four values vanish.  For even
    q and i = q/2 the minimizer coincides with 1/q and the inner
    columns collapse.
    """
    family._check_it(i, q, t)
    tol = 1e-12
    if abs(t - 1.0 / q) <= tol:
        return (0, 0, 0, 0)
    if t > 1.0 / q:
        return (-1, 1, 1, 1)
    if 2 * i == q:
        return (1, -1, 1, -1)
    m, _ = family.find_m(i, q)
    if abs(t - m) <= tol:
        return (1, -1, 0, 0)
    if t < m:
        return (1, -1, 1, -1)
    return (1, -1, -1, 1)


def family_location(q: int, i: int, t: float) -> SimplexPoint:
    """The representative simplex point of the (i, t) family."""
    return family_point(q, i, t)
