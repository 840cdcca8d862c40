"""Root equations of the one-parameter critical families.

For 1 <= i <= q/2 and j = q - i, a point with j coordinates t and i
coordinates (1 - j*t)/i is a critical point of the potential at inverse
temperature

    g_i(t) = i / (1 - q*t) * log((1 - j*t) / (i*t)),   t in (0, 1/j),

with the removable singularity g_i(1/q) = q.  Everything in this module
is a consequence of the scalar function g_i and its companions:

    h_i(t) = log((1-j*t)/(i*t)) + (q*t - 1)/(q*t*(1-j*t)),
    g_i'(t) = q*i / (1-q*t)^2 * h_i(t),
    k_i(t) = (1-j*t) * log((1-j*t)/(i*t)) + log(t),  k_i'(t) = -j*log((1-j*t)/(i*t)).

g_i has a unique minimizer m_i; the minimum value beta_s(i) = g_i(m_i)
is the appearance temperature of the family.  For beta >= beta_s(i) the
equation g_i(t) = beta has the two solutions u_i(beta) <= v_i(beta).

All evaluations route the log through log1p of (1-q*t)/(i*t), which is
exact across the removable singularity at t = 1/q (no series window is
needed).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoSolutionError

_RTOL = 4 * np.finfo(float).eps
_REL_EQ = 1e-12  # relative window treated as "beta equals beta_s"


@dataclass(frozen=True)
class RootBracket:
    """An interval certified to contain a root (or minimizer)."""

    lo: float
    hi: float
    certified: bool

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"bracket lo={self.lo} > hi={self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


class UVRoots(NamedTuple):
    u: float
    v: float
    u_bracket: RootBracket
    v_bracket: RootBracket


def _check_it(i: int, q: int, t: float) -> int:
    if not (1 <= i <= q / 2):
        raise DomainError(f"family index i={i} outside [1, q/2] for q={q}")
    j = q - i
    if not (0.0 < t < 1.0 / j):
        raise DomainError(f"t={t} outside (0, 1/{j}) for (i, q)=({i}, {q})")
    return j


def g(i: int, q: int, t: float) -> float:
    """Temperature at which the (i, t) family point is critical."""
    j = _check_it(i, q, t)
    # (1-j*t)/(i*t) = 1 + u with u = (1-q*t)/(i*t); g = log1p(u)/(u*t)
    u = (1.0 - q * t) / (i * t)
    if u == 0.0:
        return 1.0 / t  # = q at t = 1/q
    return float(np.log1p(u) / (u * t))


def h_aux(i: int, q: int, t: float) -> float:
    """Derivative kernel of g: g_i'(t) = q*i*h_i(t)/(1-q*t)^2."""
    j = _check_it(i, q, t)
    u = (1.0 - q * t) / (i * t)
    return float(np.log1p(u) + (q * t - 1.0) / (q * t * (1.0 - j * t)))


def g_prime(i: int, q: int, t: float) -> float:
    j = _check_it(i, q, t)
    s = 1.0 - q * t
    if abs(s) < 1e-9 / q:
        # finite limit across the removable singularity of the h-form
        return _g_prime_series(i, q, t)
    return q * i * h_aux(i, q, t) / (s * s)


def _g_prime_series(i: int, q: int, t: float) -> float:
    # g(1/q + s) = q + c1*s + c2*s^2 + O(s^3)
    j = q - i
    c1 = q * (j * j - i * i) / (2.0 * i)
    c2 = q * q * (i**3 + j**3) / (3.0 * i * i)
    return float(c1 + 2.0 * c2 * (t - 1.0 / q))


def k_aux(i: int, q: int, t: float) -> float:
    """Entropy along the family: k_i(t) = (1-j*t)*log((1-j*t)/(i*t)) + log(t)."""
    j = _check_it(i, q, t)
    u = (1.0 - q * t) / (i * t)
    return float((1.0 - j * t) * np.log1p(u) + np.log(t))


def k_prime(i: int, q: int, t: float) -> float:
    _check_it(i, q, t)
    j = q - i
    u = (1.0 - q * t) / (i * t)
    return float(-j * np.log1p(u))


def find_m(i: int, q: int) -> tuple[float, RootBracket]:
    """Unique minimizer m_i of g_i, with a sign-certified bracket on h_i.

    For even q and i = q/2 the minimizer is exactly 1/q.
    """
    if not (1 <= i <= q / 2):
        raise DomainError(f"family index i={i} outside [1, q/2] for q={q}")
    j = q - i
    if 2 * i == q:
        m = 1.0 / q
        return m, RootBracket(m, m, certified=True)
    # h_i increases on (0, 1/(2j)] and is positive at 1/(2j); it diverges
    # to -inf at 0+, so the sign change brackets the minimizer.
    hi = 1.0 / (2 * j)
    lo = hi / 2.0
    while h_aux(i, q, lo) >= 0.0:
        lo /= 2.0
        if lo < 1e-300:
            raise NoSolutionError(f"no sign change of h for (i, q)=({i}, {q})")
    m = float(brentq(lambda t: h_aux(i, q, t), lo, hi, xtol=1e-17, rtol=_RTOL))
    rho = max(1e-16, abs(m) * 1e-15)
    for _ in range(80):
        if m - rho > 0 and m + rho < hi and h_aux(i, q, m - rho) < 0.0 < h_aux(i, q, m + rho):
            return m, RootBracket(m - rho, m + rho, certified=True)
        rho *= 2.0
    return m, RootBracket(m, m, certified=False)


def beta_s(i: int, q: int) -> float:
    """Appearance temperature beta_s(i) = g_i(m_i) of the (i)-family."""
    if 2 * i == q:
        return float(q)
    m, _ = find_m(i, q)
    return g(i, q, m)


def beta_s_bracket(i: int, q: int) -> tuple[float, RootBracket]:
    """beta_s(i) with a certified enclosure.

    Any point evaluation g(m_hat) upper-bounds the minimum; the lower
    bound subtracts a derivative bound over the minimizer bracket,
    using that |h| on the bracket is maximized at its endpoints (h is
    monotone there) and (1-q*t)^(-2) at the right endpoint.
    """
    if 2 * i == q:
        return float(q), RootBracket(float(q), float(q), certified=True)
    m, mbr = find_m(i, q)
    val = g(i, q, m)
    hmax = max(abs(h_aux(i, q, mbr.lo)), abs(h_aux(i, q, mbr.hi)))
    gp_bound = q * i * hmax / (1.0 - q * mbr.hi) ** 2
    lower = val - gp_bound * mbr.width
    return val, RootBracket(lower, val, certified=mbr.certified)


def solve_uv(i: int, q: int, beta: float) -> UVRoots:
    """Both solutions u <= v of g_i(t) = beta, with certified brackets.

    Requires beta >= beta_s(i).  At beta = beta_s(i) the double root
    m_i is returned for both branches.
    """
    j = q - i
    m, mbr = find_m(i, q)
    bs = g(i, q, m) if 2 * i < q else float(q)
    scale = max(1.0, bs)
    if beta < bs - _REL_EQ * scale:
        raise NoSolutionError(
            f"beta={beta} below the appearance temperature beta_s({i})={bs} for q={q}"
        )
    if beta <= bs + _REL_EQ * scale:
        return UVRoots(m, m, mbr, mbr)

    def f(t: float) -> float:
        return g(i, q, t) - beta

    # decreasing branch: g -> +inf as t -> 0+
    lo = m / 2.0
    while f(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-300:
            raise NoSolutionError(f"failed to bracket u for (i, q, beta)=({i}, {q}, {beta})")
    u = float(brentq(f, lo, m, xtol=1e-17, rtol=_RTOL))
    # increasing branch: g -> +inf as t -> 1/j-
    hi = (m + 1.0 / j) / 2.0
    while f(hi) <= 0.0:
        hi = (hi + 1.0 / j) / 2.0
    v = float(brentq(f, m, hi, xtol=1e-17, rtol=_RTOL))
    ub = _expand_bracket(f, u, lo_cap=0.0, hi_cap=m, increasing=False)
    vb = _expand_bracket(f, v, lo_cap=m, hi_cap=1.0 / j, increasing=True)
    return UVRoots(u, v, ub, vb)


def _expand_bracket(f, root: float, lo_cap: float, hi_cap: float, increasing: bool) -> RootBracket:
    """Smallest power-of-two enclosure of `root` across which f changes sign."""
    rho = max(1e-16, abs(root) * 1e-15)
    for _ in range(80):
        lo = max(root - rho, lo_cap + (hi_cap - lo_cap) * 1e-16)
        hi = min(root + rho, hi_cap - (hi_cap - lo_cap) * 1e-16)
        flo, fhi = f(lo), f(hi)
        ok = (flo < 0.0 < fhi) if increasing else (fhi < 0.0 < flo)
        if ok:
            return RootBracket(lo, hi, certified=True)
        rho *= 2.0
    return RootBracket(root, root, certified=False)
