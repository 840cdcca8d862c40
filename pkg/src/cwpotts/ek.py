"""Sharp mean-transition-time constants and the reduced inter-well chains.

At a saddle s the diffusion-like prefactor couples the Hessian of the
potential with the mobility matrix

    A(x) = sum_{i<j} sqrt(x_i x_j) (e_j - e_i)(e_j - e_i)^T,  e_q = 0,

whose weights mirror the cycle weights of the chain generator.  The
product Hess(s) A(s) has exactly one negative eigenvalue -mu; the
transition-rate constants are

    omega(s) = mu(s) * exp(-beta G(s)) / sqrt(-det Hess(s)),   s a saddle,
    nu(m)    =         exp(-beta G(m)) / sqrt(beta^2 det Hess(m)),  m a minimum,

with G the interior log correction of the potential.  Mean transition
times grow like (prefactor) * 2*pi*N * exp(N*theta) with theta the
beta-scaled well depth; the reduced chains on the well labels use the
same constants.  Determinants come from the closed-form Hessian
spectra; the product spectrum is obtained by a dense general
eigensolver and must be real up to rounding (a complex residue beyond
tolerance is a hard failure).

Regimes (boundaries included where the constants stay finite):

    (beta_1, beta_2)  q+1 wells, spin wells drain into the uniform well
    beta_2            ground-state tie
    (beta_2, beta_3)  spin wells communicate through the uniform well
    beta_3  (q >= 5)  gate tie: direct and through-the-middle routes add
    (beta_3, q)       direct gates; the uniform well drains on a second scale
    [q, infinity)     the uniform well is gone

For q <= 4 the point beta = beta_3 = q is a degenerate saddle and is
not supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import critical, landscape
from .errors import InvariantViolation, RegimeError
from .potential import hessian, log_correction, spectrum_at_family_point, spectrum_at_uniform
from .simplex import SimplexPoint, family_point

_IMAG_TOL = 1e-10
_BOUNDARY_RTOL = 1e-9


def matrix_A(x: SimplexPoint) -> np.ndarray:
    """Mobility matrix sum_{i<j} sqrt(x_i x_j) (e_j-e_i)(e_j-e_i)^T in the
    (q-1)-chart; symmetric positive definite on the interior."""
    if not x.interior:
        raise RegimeError("the mobility matrix requires an interior point")
    q = x.q
    arr = x.as_array()
    basis = np.vstack([np.eye(q - 1), np.zeros(q - 1)])
    A = np.zeros((q - 1, q - 1))
    for i in range(q):
        for j in range(i + 1, q):
            d = basis[j] - basis[i]
            A += math.sqrt(arr[i] * arr[j]) * np.outer(d, d)
    return A


def _saddle_point(q: int, beta: float, at: Literal["u2", "v1"]) -> SimplexPoint:
    beta1 = critical.beta_s(1, q)
    if at == "v1":
        if beta <= beta1:
            raise RegimeError(f"v_1 does not exist at beta={beta} <= beta_1={beta1}")
        if abs(beta - q) <= _BOUNDARY_RTOL * q:
            raise RegimeError("v_1 merges with the uniform point at beta = q")
        if q >= 4 and beta > q:
            raise RegimeError(f"v_1 is not a saddle for q={q} at beta={beta} > q")
        return family_point(q, 1, critical.solve_uv(1, q, beta).v)
    if at == "u2":
        if q < 4:
            raise RegimeError("the two-large-spin saddle requires q >= 4")
        bs2 = critical.beta_s(2, q)
        if beta <= bs2 + _BOUNDARY_RTOL * bs2:
            raise RegimeError(f"u_2 is degenerate or absent at beta={beta} <= beta_s(2)={bs2}")
        return family_point(q, 2, critical.solve_uv(2, q, beta).u)
    raise RegimeError(f"unknown saddle name {at!r}")


def negative_eigenvalue(q: int, beta: float, at: Literal["u2", "v1"]) -> float:
    """mu > 0 where -mu is the unique negative eigenvalue of Hess(s) A(s)."""
    s = _saddle_point(q, beta, at)
    return _mu_at(s, beta)


def _mu_at(s: SimplexPoint, beta: float) -> float:
    prod = hessian(s, beta) @ matrix_A(s)
    eig = np.linalg.eigvals(prod)
    scale = float(np.max(np.abs(eig)))
    if np.any(np.abs(eig.imag) > _IMAG_TOL * max(1.0, scale)):
        raise InvariantViolation(f"product spectrum is not real: {eig}")
    real = np.sort(eig.real)
    neg = real[real < -_IMAG_TOL * max(1.0, scale)]
    if neg.size != 1:
        raise InvariantViolation(f"expected one negative eigenvalue, got {real}")
    return float(-neg[0])


@dataclass(frozen=True)
class EkConstants:
    """Transition-rate constants at (q, beta); None where the defining
    point is absent in the regime."""

    q: int
    beta: float
    mu_1: float | None  # at the two-large-spin saddle
    mu_o: float | None  # at the one-large-spin saddle
    omega_1: float | None
    omega_o: float | None
    nu_1: float
    nu_o: float | None
    theta_1: float
    theta_o: float | None


def ek_constants(q: int, beta: float) -> EkConstants:
    beta1 = critical.beta_s(1, q)
    if beta <= beta1:
        raise RegimeError(f"no metastability at beta={beta} <= beta_1={beta1}")

    roots1 = critical.solve_uv(1, q, beta)
    u1_point = family_point(q, 1, roots1.u)
    spec_u1 = spectrum_at_family_point(q, 1, roots1.u)
    nu_1 = math.exp(-beta * log_correction(u1_point, beta)) / math.sqrt(
        beta**2 * spec_u1.determinant
    )

    nu_o = None
    if beta < q:
        spec_p = spectrum_at_uniform(q, beta)
        g_p = -q * math.log(q) / (2.0 * beta)
        nu_o = math.exp(-beta * g_p) / math.sqrt(beta**2 * spec_p.determinant)

    mu_o = omega_o = None
    v1_is_saddle = (q == 3 and abs(beta - q) > _BOUNDARY_RTOL * q) or (3 < q and beta < q)
    if v1_is_saddle:
        v1_point = family_point(q, 1, roots1.v)
        mu_o = _mu_at(v1_point, beta)
        det_v1 = spectrum_at_family_point(q, 1, roots1.v).determinant
        omega_o = mu_o * math.exp(-beta * log_correction(v1_point, beta)) / math.sqrt(-det_v1)

    mu_1 = omega_1 = None
    if q >= 4:
        bs2 = critical.beta_s(2, q)
        if beta > bs2 + _BOUNDARY_RTOL * bs2:
            roots2 = critical.solve_uv(2, q, beta)
            u2_point = family_point(q, 2, roots2.u)
            mu_1 = _mu_at(u2_point, beta)
            det_u2 = spectrum_at_family_point(q, 2, roots2.u).determinant
            omega_1 = mu_1 * math.exp(-beta * log_correction(u2_point, beta)) / math.sqrt(-det_u2)

    d = landscape.depths(q, beta)
    return EkConstants(
        q=q, beta=beta, mu_1=mu_1, mu_o=mu_o, omega_1=omega_1, omega_o=omega_o,
        nu_1=nu_1, nu_o=nu_o, theta_1=d.theta_1, theta_o=d.theta_o,
    )


# ---------------------------------------------------------------------------
# reduced chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedChain:
    """Limiting inter-well Markov chain: off-diagonal jump rates on the
    label set, and the depth whose exponential sets the time scale
    2*pi*N*exp(N*theta)."""

    regime: str
    states: tuple
    rates: dict  # (from_label, to_label) -> rate, zero entries omitted
    theta: str  # 'theta_1' or 'theta_o'
    second: "ReducedChain | None" = None


def reduced_chain(q: int, beta: float) -> ReducedChain:
    prof = critical.temperature_profile(q)
    b1, b2, b3 = prof.beta1, prof.beta2, prof.beta3
    if beta <= b1:
        raise RegimeError(f"no metastability at beta={beta} <= beta_1={b1}")
    c = ek_constants(q, beta)
    S = tuple(range(1, q + 1))
    S_hat = ("o",) + S

    def spin_pairs():
        return [(k, l) for k in S for l in S if k != l]

    if abs(beta - b2) <= _BOUNDARY_RTOL * b2:
        rates = {(k, "o"): c.omega_o / c.nu_1 for k in S}
        rates.update({("o", k): c.omega_o / c.nu_o for k in S})
        return ReducedChain("2", S_hat, rates, "theta_1")
    if beta < b2:
        rates = {(k, "o"): c.omega_o / c.nu_1 for k in S}
        return ReducedChain("1-2", S_hat, rates, "theta_1")

    if q <= 4:
        if abs(beta - q) <= _BOUNDARY_RTOL * q:
            raise RegimeError(
                "beta = beta_3 = q is a degenerate saddle for q <= 4; not supported"
            )
        if beta < q:
            second = ReducedChain(
                "4", S_hat, {("o", k): c.omega_o / c.nu_o for k in S}, "theta_o"
            )
            rates = {pair: c.omega_o / (q * c.nu_1) for pair in spin_pairs()}
            return ReducedChain("2-3", S, rates, "theta_1", second=second)
        omega = c.omega_o if q == 3 else c.omega_1
        rates = {pair: omega / c.nu_1 for pair in spin_pairs()}
        return ReducedChain("3-inf", S, rates, "theta_1")

    # q >= 5
    if abs(beta - b3) <= _BOUNDARY_RTOL * b3:
        second = ReducedChain("4", S_hat, {("o", k): c.omega_o / c.nu_o for k in S}, "theta_o")
        rates = {pair: (c.omega_o / q + c.omega_1) / c.nu_1 for pair in spin_pairs()}
        return ReducedChain("3", S, rates, "theta_1", second=second)
    if beta < b3:
        second = ReducedChain("4", S_hat, {("o", k): c.omega_o / c.nu_o for k in S}, "theta_o")
        rates = {pair: c.omega_o / (q * c.nu_1) for pair in spin_pairs()}
        return ReducedChain("2-3", S, rates, "theta_1", second=second)
    if beta < q - _BOUNDARY_RTOL * q:
        second = ReducedChain(
            "5", ("o", "S"), {("o", "S"): q * c.omega_o / c.nu_o}, "theta_o"
        )
        rates = {pair: c.omega_1 / c.nu_1 for pair in spin_pairs()}
        return ReducedChain("3-inf", S, rates, "theta_1", second=second)
    rates = {pair: c.omega_1 / c.nu_1 for pair in spin_pairs()}
    return ReducedChain("3-inf", S, rates, "theta_1")


# ---------------------------------------------------------------------------
# mean transition-time predictions
# ---------------------------------------------------------------------------

Transition = Literal["u1-to-p", "p-to-u1-set", "u1-to-rest"]


def ek_prediction(q: int, beta: float, N: int, transition: Transition) -> float:
    """Leading-order mean transition time at scale N.

    u1-to-p      (beta_1, beta_2]: nu_1/omega_o * 2 pi N exp(N theta_1)
    p-to-u1-set  [beta_2, q):      nu_o/(q omega_o) * 2 pi N exp(N theta_o)
    u1-to-rest   (beta_3, inf):    nu_1/((q-1) omega) * 2 pi N exp(N theta_1),
                 omega = omega_1, except omega_o for q = 3 (no u_2 family).
    """
    prof = critical.temperature_profile(q)
    b1, b2, b3 = prof.beta1, prof.beta2, prof.beta3
    c = ek_constants(q, beta)
    scale = 2.0 * math.pi * N
    if transition == "u1-to-p":
        if not (b1 < beta <= b2 + _BOUNDARY_RTOL * b2):
            raise RegimeError(f"u1-to-p requires beta in (beta_1, beta_2], got {beta}")
        return c.nu_1 / c.omega_o * scale * math.exp(N * c.theta_1)
    if transition == "p-to-u1-set":
        if not (b2 - _BOUNDARY_RTOL * b2 <= beta < q):
            raise RegimeError(f"p-to-u1-set requires beta in [beta_2, q), got {beta}")
        return c.nu_o / (q * c.omega_o) * scale * math.exp(N * c.theta_o)
    if transition == "u1-to-rest":
        if beta <= b3:
            raise RegimeError(f"u1-to-rest requires beta > beta_3={b3}, got {beta}")
        omega = c.omega_o if q == 3 else c.omega_1
        return c.nu_1 / ((q - 1) * omega) * scale * math.exp(N * c.theta_1)
    raise RegimeError(f"unknown transition {transition!r}")
