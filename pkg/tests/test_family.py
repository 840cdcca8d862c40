"""Root-equation layer: g, h, k, minimizers and the u/v branches."""

import math

import numpy as np
import pytest

from cwpotts.errors import DomainError, NoSolutionError
from cwpotts.family import (
    beta_s,
    beta_s_bracket,
    find_m,
    g,
    g_prime,
    h_aux,
    k_aux,
    k_prime,
    solve_uv,
)


def brute_g(i, q, t):
    # direct formula, no removable-singularity handling
    j = q - i
    return i / (1 - q * t) * math.log((1 - j * t) / (i * t))


@pytest.mark.parametrize("q,i", [(3, 1), (4, 1), (4, 2), (5, 2), (7, 3), (10, 2)])
def test_g_matches_direct_formula(q, i):
    j = q - i
    for t in np.linspace(0.01, 1.0 / j - 0.01, 23):
        if abs(1 - q * t) < 1e-3:
            continue
        assert g(i, q, t) == pytest.approx(brute_g(i, q, t), rel=1e-13)


@pytest.mark.parametrize("q,i", [(3, 1), (5, 2), (6, 3), (8, 4), (9, 4)])
def test_g_removable_singularity(q, i):
    assert g(i, q, 1.0 / q) == pytest.approx(q, rel=1e-13)
    # continuity across 1/q
    for s in (1e-12, 1e-9, 1e-7):
        assert g(i, q, 1.0 / q + s) == pytest.approx(q, rel=1e-5)
        assert g(i, q, 1.0 / q - s) == pytest.approx(q, rel=1e-5)


def test_g_symmetric_for_even_half_family():
    # q = 4, i = 2: g is symmetric about 1/4
    for s in (0.01, 0.05, 0.1, 0.2):
        assert g(2, 4, 0.25 - s) == pytest.approx(g(2, 4, 0.25 + s), rel=1e-12)


def test_g_domain_errors():
    with pytest.raises(DomainError):
        g(1, 3, 0.0)
    with pytest.raises(DomainError):
        g(1, 3, 0.5)
    with pytest.raises(DomainError):
        g(2, 3, 0.1)


def test_g_prime_is_derivative():
    for (i, q, t) in [(1, 3, 0.1), (1, 3, 0.3), (2, 5, 0.12), (2, 5, 0.21), (3, 7, 0.05)]:
        h = 1e-7
        fd = (g(i, q, t + h) - g(i, q, t - h)) / (2 * h)
        assert g_prime(i, q, t) == pytest.approx(fd, rel=1e-5)


def test_h_is_g_prime_kernel():
    for (i, q, t) in [(1, 4, 0.07), (2, 6, 0.1), (2, 6, 0.2)]:
        lhs = g_prime(i, q, t)
        rhs = q * i * h_aux(i, q, t) / (1 - q * t) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_h_vanishes_at_minimizer():
    for (i, q) in [(1, 3), (1, 4), (2, 5), (2, 6), (3, 7), (2, 12)]:
        m, br = find_m(i, q)
        assert abs(h_aux(i, q, m)) < 1e-10
        assert br.certified
        if 2 * i != q:
            assert h_aux(i, q, br.lo) < 0 < h_aux(i, q, br.hi)


def test_m_is_exactly_inverse_q_for_even_half():
    for q in (4, 6, 8, 10):
        m, br = find_m(q // 2, q)
        assert m == 1.0 / q
        assert br.width == 0


def test_m2_bounds_large_q():
    # 1/(2 q log q) < m_2 < 1/(q log q) once q > e^8
    q = 3000
    m, _ = find_m(2, q)
    assert 1.0 / (2 * q * math.log(q)) < m < 1.0 / (q * math.log(q))


def test_k_aux_values():
    # k_1(1/q) = -log q
    for q in (3, 5, 8):
        assert k_aux(1, q, 1.0 / q) == pytest.approx(-math.log(q), rel=1e-12)
    # strictly decreasing on (0, 1/q)
    q, i = 6, 2
    ts = np.linspace(0.02, 1.0 / q - 1e-3, 9)
    vals = [k_aux(i, q, t) for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_k_prime_is_derivative():
    for (i, q, t) in [(1, 3, 0.2), (2, 5, 0.1), (2, 8, 0.08)]:
        h = 1e-7
        fd = (k_aux(i, q, t + h) - k_aux(i, q, t - h)) / (2 * h)
        assert k_prime(i, q, t) == pytest.approx(fd, rel=1e-6)


def test_beta_s_even_half_is_q():
    assert beta_s(2, 4) == 4.0
    assert beta_s(3, 6) == 6.0


def test_beta_s_bracket_encloses():
    for (i, q) in [(1, 3), (1, 5), (2, 5), (2, 9)]:
        val, br = beta_s_bracket(i, q)
        assert br.lo <= val <= br.hi
        assert br.certified
        assert br.width < 1e-9 * max(1.0, val)


def test_solve_uv_residuals_and_order():
    cases = [(1, 3, 3.0), (1, 4, 3.4), (1, 5, 4.0), (2, 5, 4.9),
             (2, 6, beta_s(2, 6) + 0.2), (3, 7, beta_s(3, 7) + 0.05)]
    for (i, q, beta) in cases:
        r = solve_uv(i, q, beta)
        assert r.u <= r.v
        assert abs(g(i, q, r.u) - beta) < 1e-11 * beta
        assert abs(g(i, q, r.v) - beta) < 1e-11 * beta
        assert r.u_bracket.contains(r.u) and r.v_bracket.contains(r.v)
        assert r.u_bracket.certified and r.v_bracket.certified


def test_solve_uv_known_values_at_ground_state_switch():
    # at beta = 2(q-1)log(q-1)/(q-2): u_1 = 1/(q(q-1)), v_1 = 1/(2(q-1))
    for q in (3, 4, 5, 8):
        beta = 2 * (q - 1) * math.log(q - 1) / (q - 2)
        r = solve_uv(1, q, beta)
        assert r.u == pytest.approx(1.0 / (q * (q - 1)), rel=1e-12)
        assert r.v == pytest.approx(1.0 / (2 * (q - 1)), rel=1e-12)


def test_solve_uv_even_half_mirror():
    # q = 4, i = 2, beta > 4: v_2 = 1/2 - u_2
    for beta in (4.2, 5.0, 7.0):
        r = solve_uv(2, 4, beta)
        assert r.v == pytest.approx(0.5 - r.u, rel=1e-12)


def test_solve_uv_double_root_at_appearance():
    m, _ = find_m(1, 5)
    r = solve_uv(1, 5, beta_s(1, 5))
    assert r.u == r.v == m


def test_solve_uv_below_appearance_raises():
    with pytest.raises(NoSolutionError):
        solve_uv(1, 3, beta_s(1, 3) - 1e-6)


def test_uv_monotone_in_beta():
    q = 5
    betas = np.linspace(beta_s(1, q) + 0.05, q + 2.0, 12)
    us = [solve_uv(1, q, b).u for b in betas]
    vs = [solve_uv(1, q, b).v for b in betas]
    assert all(a > b for a, b in zip(us, us[1:]))
    assert all(a < b for a, b in zip(vs, vs[1:]))
