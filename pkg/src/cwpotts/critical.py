"""Critical points, critical temperatures and their certified computation.

Four temperatures organize the landscape for q >= 3 spin values:

    beta_1 = beta_s(1)      first appearance of the one-large-spin family,
    beta_2 = 2(q-1)/(q-2) * log(q-1)
                            the global minimum moves off the uniform point,
    beta_3                  the lowest saddle switches family (= q for q <= 4,
                            strictly below q for q >= 5),
    beta_4 = q              the uniform point stops being a local minimum.

beta_3 for q >= 5 is the unique zero in (beta_s(2), q) of

    D(beta) = F_beta(u_2) - F_beta(v_1),

which is strictly decreasing there (its beta-derivative scaled by
beta^2 equals k_1(v_1(beta)) - k_2(u_2(beta)), both monotone the right
way).

The module also houses the fixed-step verification suite that encloses
beta_s(2), m_2 and v_1 in one-sided certified brackets and checks three
published inequalities for 5 <= q <= 6500.  Inside that suite the
bracket construction follows a fixed-step descent/walk-out recipe
verbatim (its error constants are what make the brackets certificates);
everywhere else modern bracketing root finders are used.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

from scipy.optimize import brentq

from . import potential as pot
from .errors import DomainError, StructuralError
from .family import (
    RootBracket,
    UVRoots,
    beta_s,
    beta_s_bracket,
    find_m,
    g,
    g_prime,
    h_aux,
    k_aux,
    solve_uv,
)
from .potential import HessianSpectrum, spectrum_at_family_point, spectrum_at_uniform
from .simplex import SimplexPoint, family_point, uniform_point

__all__ = [
    "RootBracket",
    "UVRoots",
    "beta_s",
    "beta_s_bracket",
    "find_m",
    "g",
    "h_aux",
    "k_aux",
    "solve_uv",
    "beta_c",
    "beta_m",
    "TemperatureProfile",
    "temperature_profile",
    "CriticalPoint",
    "enumerate_critical_points",
    "free_energy_family_value",
    "family_value",
    "AppendixRow",
    "AppendixReport",
    "verify_appendix",
]

_Q_COINCIDES_TOL = 1e-9  # |t - 1/q| below this: the family point is the uniform point


def beta_c(q: int) -> float:
    """Closed form 2(q-1)*log(q-1)/(q-2) for the ground-state switch."""
    if q < 3:
        raise DomainError(f"q={q} must be >= 3")
    return 2.0 * (q - 1) * math.log(q - 1) / (q - 2)


def family_value(i: int, q: int, t: float, beta: float) -> float:
    """F_beta at the (i, t) family point through the reduced 1-D formula

        F = (q*j*t^2 - 2*q*t + 1) / (2*i) + log(t) / beta,  j = q - i.
    """
    j = q - i
    return (q * j * t * t - 2.0 * q * t + 1.0) / (2.0 * i) + math.log(t) / beta


def free_energy_family_value(i: int, q: int, beta: float, branch: Literal["u", "v"] = "u") -> float:
    """Potential at u_i(beta) or v_i(beta)."""
    roots = solve_uv(i, q, beta)
    t = roots.u if branch == "u" else roots.v
    return family_value(i, q, t, beta)


def _saddle_gap(q: int, beta: float) -> float:
    """D(beta) = F_beta(u_2) - F_beta(v_1)."""
    r1 = solve_uv(1, q, beta)
    r2 = solve_uv(2, q, beta)
    return family_value(2, q, r2.u, beta) - family_value(1, q, r1.v, beta)


def beta_m(q: int) -> tuple[float, RootBracket]:
    """Gate-switch temperature: exactly q for q <= 4, else the unique
    root of D(beta) in (beta_s(2), q)."""
    if q < 3:
        raise DomainError(f"q={q} must be >= 3")
    if q <= 4:
        return float(q), RootBracket(float(q), float(q), certified=True)
    eps = 1e-8
    lo = beta_s(2, q) + eps
    hi = float(q) - eps
    root = float(brentq(lambda b: _saddle_gap(q, b), lo, hi, xtol=1e-14, rtol=8.9e-16))
    rho = max(1e-13, abs(root) * 1e-13)
    bracket = RootBracket(root, root, certified=False)
    for _ in range(60):
        blo, bhi = max(root - rho, lo), min(root + rho, hi)
        if _saddle_gap(q, blo) > 0.0 > _saddle_gap(q, bhi):
            bracket = RootBracket(blo, bhi, certified=True)
            break
        rho *= 2.0
    return root, bracket


@dataclass(frozen=True)
class TemperatureProfile:
    """All critical temperatures of a given q, with certified brackets."""

    q: int
    beta_s: dict  # i -> (value, RootBracket)
    beta_c: float
    beta_m: tuple  # (value, RootBracket)

    @property
    def beta1(self) -> float:
        return self.beta_s[1][0]

    @property
    def beta2(self) -> float:
        return self.beta_c

    @property
    def beta3(self) -> float:
        return self.beta_m[0]

    @property
    def beta4(self) -> float:
        return float(self.q)


def temperature_profile(q: int) -> TemperatureProfile:
    if q < 3:
        raise DomainError(f"q={q} must be >= 3")
    betas = {i: beta_s_bracket(i, q) for i in range(1, q // 2 + 1)}
    return TemperatureProfile(q=q, beta_s=betas, beta_c=beta_c(q), beta_m=beta_m(q))


# ---------------------------------------------------------------------------
# critical-point enumeration
# ---------------------------------------------------------------------------

Kind = Literal["minimum", "saddle", "higher_index", "maximum", "degenerate"]


@dataclass(frozen=True)
class CriticalPoint:
    """A classified critical point (one representative per permutation orbit)."""

    family: Literal["P", "U", "V"]
    i: int  # 0 for the uniform point
    t: float
    location: SimplexPoint
    spectrum: HessianSpectrum
    orbit_size: int

    @property
    def kind(self) -> Kind:
        s = self.spectrum
        if s.degenerate:
            return "degenerate"
        if s.index == 0:
            return "minimum"
        if s.index == 1:
            return "saddle"
        if s.index == len(s.eigenvalues):
            return "maximum"
        return "higher_index"

    @property
    def label(self) -> str:
        return {
            "minimum": "local minimum",
            "saddle": "saddle point",
            "higher_index": "index >= 2",
            "maximum": "local maximum",
            "degenerate": "degenerate",
        }[self.kind]


def enumerate_critical_points(q: int, beta: float) -> list[CriticalPoint]:
    """All critical points at (q, beta), one representative per orbit.

    The uniform point is always listed.  For each family i <= q/2 with
    beta >= beta_s(i) the u- and v-branch representatives are listed,
    except that a branch whose parameter hits 1/q coincides with the
    uniform point (beta = q), and for even q at i = q/2 the v-branch is
    the u-branch orbit revisited; neither is duplicated.  A double root
    at beta = beta_s(i) appears once, flagged degenerate.
    """
    if q < 3:
        raise DomainError(f"q={q} must be >= 3")
    if beta <= 0:
        raise DomainError(f"beta={beta} must be positive")
    points = [
        CriticalPoint(
            family="P",
            i=0,
            t=1.0 / q,
            location=uniform_point(q),
            spectrum=spectrum_at_uniform(q, beta),
            orbit_size=1,
        )
    ]
    for i in range(1, q // 2 + 1):
        bs = beta_s(i, q)
        if beta < bs - 1e-12 * max(1.0, bs):
            continue
        roots = solve_uv(i, q, beta)
        orbit = math.comb(q, i)
        if roots.u == roots.v:
            if abs(roots.u - 1.0 / q) > _Q_COINCIDES_TOL / q:
                points.append(_family_cp("U", i, q, roots.u, orbit))
            continue
        points.append(_family_cp("U", i, q, roots.u, orbit))
        v_is_uniform = abs(roots.v - 1.0 / q) <= _Q_COINCIDES_TOL / q
        v_repeats_u = 2 * i == q  # even q: the v-branch permutes the u-branch
        if not v_is_uniform and not v_repeats_u:
            points.append(_family_cp("V", i, q, roots.v, orbit))
    return points


def _family_cp(fam: str, i: int, q: int, t: float, orbit: int) -> CriticalPoint:
    return CriticalPoint(
        family=fam,
        i=i,
        t=t,
        location=family_point(q, i, t),
        spectrum=spectrum_at_family_point(q, i, t),
        orbit_size=orbit,
    )


# ---------------------------------------------------------------------------
# certified-bracket verification suite
# ---------------------------------------------------------------------------

_DESCENT_TOL = 1e-6
_MAX_ITER = 10_000_000


def _bracket_beta_s2(q: int) -> tuple[float, float, float, float]:
    """Fixed-step descent for m_2 plus a derivative-scaled enclosure of
    beta_s(2); returns (m_star, rho_m, beta_lo, beta_hi).

    The enclosure constant 36/q is valid for q >= 5 only.
    """
    if q < 5:
        raise DomainError(f"fixed-step enclosure requires q >= 5, got {q}")
    t = 1.0 / (2 * q - 4)
    for _ in range(_MAX_ITER):
        gp = g_prime(2, q, t)
        if gp <= _DESCENT_TOL:
            break
        t -= gp / (300.0 * q * q)
    else:
        raise StructuralError(f"descent for m_2 did not converge at q={q}")
    m_star = t
    gp_star = g_prime(2, q, m_star)
    if gp_star <= 0.0:
        raise StructuralError(f"descent overshot the minimizer at q={q}")
    width = (36.0 / q) * abs(gp_star)
    val = g(2, q, m_star)
    return m_star, gp_star / q, val - width, val + width


def _bracket_m2(q: int, m_star: float, rho_m: float) -> tuple[float, float]:
    """Walk-out enclosure of m_2 from the descent output, step rho_m."""
    if h_aux(2, q, m_star) >= 0.0:
        m_hi = m_star + rho_m
        t = m_star
        while h_aux(2, q, t) >= 0.0:
            t -= rho_m
        m_lo = t - rho_m
    else:
        m_lo = m_star - rho_m
        t = m_star
        while h_aux(2, q, t) <= 0.0:
            t += rho_m
        m_hi = t + rho_m
    return m_lo, m_hi


def _bracket_v1(q: int, beta_lo: float, beta_hi: float) -> tuple[float, float]:
    """Newton plus walk-out enclosure of v_1 at beta_s(2)."""
    t_prev, t = 0.0, 0.8 / q
    for _ in range(10_000):
        if abs(t - t_prev) <= 1e-5 / q:
            break
        t_prev, t = t, t - (g(1, q, t) - beta_hi) / g_prime(1, q, t)
    rho_v = abs(t - t_prev)
    if rho_v == 0.0:
        rho_v = 1e-5 / q  # Newton landed exactly; floor at the stopping width
    v_star = t
    if g(1, q, v_star) > beta_hi:
        v_hi = v_star + rho_v
    else:
        a = v_star
        while g(1, q, a) <= beta_hi:
            a += rho_v
        v_hi = a + rho_v
    if g(1, q, v_star) < beta_lo:
        v_lo = v_star - rho_v
    else:
        b = v_star
        while g(1, q, b) >= beta_lo:
            b -= rho_v
        v_lo = b - rho_v
    return v_lo, v_hi


@dataclass(frozen=True)
class AppendixRow:
    """Certified brackets and inequality margins for one q."""

    q: int
    beta_lo: float
    beta_hi: float
    m2_lo: float
    m2_hi: float
    v1_lo: float
    v1_hi: float
    margin_gap: float  # lower bound of F(u_2) - F(v_1) at beta_s(2)
    margin_phi: float  # lower bound of 2*beta^2*Phi(beta_s(2))
    margin_fstar: float  # lower bound of f_star(q)
    phi_asserted: bool  # the phi margin is a pass/fail claim only on 6..54

    @property
    def ok(self) -> bool:
        if self.margin_gap <= 0.0:
            return False
        if self.phi_asserted and self.margin_phi <= 0.0:
            return False
        return True


@dataclass
class AppendixReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if any(not r.ok for r in self.rows):
            return False
        for r in self.rows:
            if r.q == 6500 and r.margin_fstar <= 0.0:
                return False
        return True

    @property
    def failures(self) -> list:
        bad = [r.q for r in self.rows if not r.ok]
        bad += [r.q for r in self.rows if r.q == 6500 and r.margin_fstar <= 0.0]
        return sorted(set(bad))

    def row(self, q: int) -> AppendixRow:
        for r in self.rows:
            if r.q == q:
                return r
        raise KeyError(q)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                [
                    "q",
                    "beta_s2_lo",
                    "beta_s2_hi",
                    "m2_lo",
                    "m2_hi",
                    "v1_lo",
                    "v1_hi",
                    "margin_gap",
                    "margin_phi",
                    "margin_fstar",
                    "phi_asserted",
                    "ok",
                ]
            )
            for r in self.rows:
                w.writerow(
                    [r.q]
                    + [format(v, ".17g") for v in (
                        r.beta_lo, r.beta_hi, r.m2_lo, r.m2_hi, r.v1_lo, r.v1_hi,
                        r.margin_gap, r.margin_phi, r.margin_fstar,
                    )]
                    + [int(r.phi_asserted), int(r.ok)]
                )


def appendix_row(q: int) -> AppendixRow:
    """Certified brackets and one-sided margins for a single q in [5, 6500]."""
    if not (5 <= q <= 6500):
        raise DomainError(f"q={q} outside the supported verification range [5, 6500]")
    m_star, rho_m, beta_lo, beta_hi = _bracket_beta_s2(q)
    m2_lo, m2_hi = _bracket_m2(q, m_star, rho_m)
    v1_lo, v1_hi = _bracket_v1(q, beta_lo, beta_hi)

    # one-sided bound of F(u_2) - F(v_1) at beta = beta_s(2): the quadratic
    # parts are decreasing in the root below its vertex, the log parts
    # increasing, so endpoints pair up as below.
    f_u2_lo = 0.25 * (q * (q - 2) * (m2_hi - 1.0 / (q - 2)) ** 2 - 2.0 / (q - 2)) + math.log(
        m2_lo
    ) / beta_lo
    f_v1_hi = 0.5 * (q * (q - 1) * (v1_lo - 1.0 / (q - 1)) ** 2 - 1.0 / (q - 1)) + math.log(
        v1_hi
    ) / beta_hi
    margin_gap = f_u2_lo - f_v1_hi

    margin_phi = math.log(q * beta_lo) + 2.0 * k_aux(2, q, m2_hi)
    margin_fstar = (
        (math.log(q * m2_lo) - 0.5) / beta_lo - (q * m2_hi) ** 2 / 8.0 + m2_lo / 4.0 + 251.0 / 2002.0
    )
    return AppendixRow(
        q=q,
        beta_lo=beta_lo,
        beta_hi=beta_hi,
        m2_lo=m2_lo,
        m2_hi=m2_hi,
        v1_lo=v1_lo,
        v1_hi=v1_hi,
        margin_gap=margin_gap,
        margin_phi=margin_phi,
        margin_fstar=margin_fstar,
        phi_asserted=6 <= q <= 54,
    )


def verify_appendix(q_range: Iterable[int] | None = None) -> AppendixReport:
    """Run the certified checks over q_range (default: all of 5..6500).

    Asserted claims: the saddle-gap margin is positive for every q; the
    derivative margin is positive for 6 <= q <= 54 (the q = 5 value is
    reported but not asserted); f_star(6500) is positive.
    """
    if q_range is None:
        q_range = range(5, 6501)
    qs = sorted(set(int(q) for q in q_range))
    report = AppendixReport()
    for q in qs:
        report.rows.append(appendix_row(q))
    return report


# ---------------------------------------------------------------------------
# convenience used by several modules
# ---------------------------------------------------------------------------

def potential_at(q: int, beta: float, which: str) -> float:
    """F_beta at a named critical point: 'p', 'u1', 'v1', 'u2'."""
    if which == "p":
        return pot.potential(uniform_point(q), beta).f
    if which == "u1":
        return free_energy_family_value(1, q, beta, "u")
    if which == "v1":
        return free_energy_family_value(1, q, beta, "v")
    if which == "u2":
        if q < 4:
            raise DomainError("the two-large-spin family requires q >= 4")
        return free_energy_family_value(2, q, beta, "u")
    raise DomainError(f"unknown point name {which!r}")
