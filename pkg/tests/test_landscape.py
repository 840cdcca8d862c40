"""Grid landscape: wells, gates, minimax heights, free energy."""

import math

import numpy as np
import pytest

from cwpotts import critical, landscape
from cwpotts.errors import DomainError, RegimeError
from cwpotts.family import beta_s, solve_uv
from cwpotts.landscape import (
    SimplexGrid,
    depths,
    free_energy,
    free_energy_curve,
    grid_free_energy,
    minimax_height,
    saddle_height,
    wells,
)
from cwpotts.simplex import SimplexPoint, family_rep, simplex_size, uniform_point


# --- grid -------------------------------------------------------------------

def test_grid_node_count_and_lookup():
    g = SimplexGrid(3, 10)
    assert g.n_nodes == simplex_size(3, 10)
    idx = g.index_of((2, 3, 5))
    assert tuple(g.counts[idx]) == (2, 3, 5)
    with pytest.raises(DomainError):
        g.index_of((2, 3, 6))


def test_grid_adjacency_symmetric_and_connected():
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    g = SimplexGrid(4, 6)
    a, b = g.edges()
    # every edge differs by a single exchange
    diff = g.counts[a] - g.counts[b]
    assert np.all(np.sort(diff, axis=1)[:, 0] == -1)
    assert np.all(np.sort(diff, axis=1)[:, -1] == 1)
    assert np.all(np.abs(diff).sum(axis=1) == 2)
    mat = csr_matrix((np.ones(a.size), (a, b)), shape=(g.n_nodes, g.n_nodes))
    n_comp, _ = connected_components(mat, directed=False)
    assert n_comp == 1


def test_grid_potential_matches_pointwise():
    from cwpotts.potential import potential

    g = SimplexGrid(3, 12)
    f = g.potential_values(2.5)
    for idx in (0, 17, 44, g.n_nodes - 1):
        x = SimplexPoint(tuple(g.coords[idx]))
        assert f[idx] == pytest.approx(potential(x, 2.5).f, abs=1e-14)


# --- heights and depths -------------------------------------------------------

def test_saddle_height_branches():
    # q = 3: always the one-large-spin saddle value
    for beta in (2.8, 3.5, 5.0):
        r = solve_uv(1, 3, beta)
        assert saddle_height(3, beta) == pytest.approx(
            critical.family_value(1, 3, r.v, beta), abs=1e-14
        )
    # q = 5: switch at the gate-change temperature
    b3 = critical.beta_m(5)[0]
    v1 = critical.potential_at(5, b3, "v1")
    u2 = critical.potential_at(5, b3, "u2")
    assert v1 == pytest.approx(u2, abs=1e-10)
    beta = 0.5 * (b3 + 5.0)
    assert saddle_height(5, beta) == pytest.approx(critical.potential_at(5, beta, "u2"), abs=1e-14)
    assert critical.potential_at(5, beta, "v1") > saddle_height(5, beta)


def test_saddle_height_requires_saddles():
    with pytest.raises(RegimeError):
        saddle_height(3, 0.9 * beta_s(1, 3))


def test_depths_positive_and_vanishing():
    d = depths(3, 3.5)
    assert d.theta_1 > 0
    assert d.theta_o is None  # beta >= q
    d = depths(3, 2.76)
    assert d.theta_1 > 0 and d.theta_o > 0
    # theta_o -> 0 as beta approaches q from below
    small = depths(3, 2.999).theta_o
    assert 0 < small < 1e-5
    # at the ground-state switch both minima sit at one level
    b2 = critical.beta_c(3)
    d2 = depths(3, b2)
    assert critical.potential_at(3, b2, "p") == pytest.approx(
        critical.potential_at(3, b2, "u1"), abs=1e-12
    )
    assert d2.theta_1 == pytest.approx(d2.theta_o, abs=1e-11)


# --- wells and gates ----------------------------------------------------------

def gate_distance_cells(wd, pair, point):
    return max(
        np.max(np.abs(wd.grid.coords[n] - point.as_array())) * wd.grid.M
        for n in wd.gates[pair]
    )


def test_wells_q3_low_temperature():
    wd = wells(3, 3.5, 200)
    assert sorted(wd.labels, key=str) == [1, 2, 3]
    r = solve_uv(1, 3, 3.5)
    for pair in [(1, 2), (1, 3), (2, 3)]:
        m = ({1, 2, 3} - set(pair)).pop()
        sad = family_rep(3, 1, r.v, positions=[m - 1])
        assert len(wd.gates[pair]) > 0
        assert gate_distance_cells(wd, pair, sad) <= 1.0 + 1e-9


def test_wells_q3_intermediate_has_uniform_well():
    wd = wells(3, 2.8, 200)
    assert sorted(wd.labels, key=str) == [1, 2, 3, "o"]
    r = solve_uv(1, 3, 2.8)
    for k in (1, 2, 3):
        assert len(wd.gates[(k, "o")]) > 0
        sad = family_rep(3, 1, r.v, positions=[k - 1])
        assert gate_distance_cells(wd, (k, "o"), sad) <= 1.0 + 1e-9
    for pair in [(1, 2), (1, 3), (2, 3)]:
        assert len(wd.gates[pair]) == 0


def test_wells_q4_structure():
    wd = wells(4, 3.6, 120)
    assert sorted(wd.labels, key=str) == [1, 2, 3, 4, "o"]
    r = solve_uv(1, 4, 3.6)
    for k in (1, 2, 3, 4):
        sad = family_rep(4, 1, r.v, positions=[k - 1])
        assert len(wd.gates[(k, "o")]) > 0
        assert gate_distance_cells(wd, (k, "o"), sad) <= 1.0 + 1e-9
    for k in (1, 2, 3, 4):
        for l in range(k + 1, 5):
            assert len(wd.gates[(k, l)]) == 0


def test_wells_q5_between_appearance_and_gate_switch():
    # in (beta_s(2), beta_3) the two-large-spin pass clears the gate level
    # by less than a cell, yet the spin-pair gates must stay empty: only
    # the uniform well communicates with the spin wells there
    bs2 = beta_s(2, 5)
    b3 = critical.beta_m(5)[0]
    wd = wells(5, 0.5 * (bs2 + b3), 40)
    assert sorted(wd.labels, key=str) == [1, 2, 3, 4, 5, "o"]
    for k in range(1, 6):
        assert len(wd.gates[(k, "o")]) > 0
        for l in range(k + 1, 6):
            assert len(wd.gates[(k, l)]) == 0


def test_wells_disjoint():
    for (q, beta, M) in [(3, 2.8, 100), (3, 3.5, 100), (4, 3.6, 60)]:
        wd = wells(q, beta, M)
        seen = set()
        for lab, nodes in wd.labels.items():
            s = set(int(n) for n in nodes)
            assert not (s & seen)
            seen |= s


def test_wells_census_across_temperatures_q3():
    # (beta_1, q): spin wells plus the uniform well; beta >= q: spin wells only
    wd = wells(3, 2.9, 200)
    assert len(wd.labels) == 4
    assert len(wd.components) == 4
    wd = wells(3, 3.2, 200)
    assert len(wd.labels) == 3
    # no saddles at all below the first appearance temperature
    with pytest.raises(RegimeError):
        wells(3, 2.0, 60)


def test_wells_input_guards():
    with pytest.raises(DomainError):
        wells(6, 6.2, 30)
    with pytest.raises(DomainError):
        wells(3, 3.5, 10)


# --- minimax -------------------------------------------------------------------

def test_minimax_identity_path():
    g = SimplexGrid(3, 60)
    x = uniform_point(3)
    h = minimax_height(3, 2.5, x, x, 60, grid=g)
    assert h == pytest.approx(g.potential_values(2.5)[g.nearest_node(x)], abs=1e-15)


def test_minimax_between_wells_matches_saddle_height():
    q, beta, M = 3, 3.5, 200
    grid = SimplexGrid(q, M)
    r = solve_uv(1, q, beta)
    a = family_rep(q, 1, r.u, positions=[0])
    b = family_rep(q, 1, r.u, positions=[1])
    got = minimax_height(q, beta, a, b, M, grid=grid)
    H = saddle_height(q, beta)
    ea, eb = grid.edges()
    f = grid.potential_values(beta)
    lipschitz = float(np.max(np.abs(f[ea] - f[eb]))) * M
    assert abs(got - H) <= 3.0 * lipschitz / M


def test_minimax_q5_uses_two_large_spin_gate():
    q, M = 5, 40
    beta = 4.9
    grid = SimplexGrid(q, M)
    r = solve_uv(1, q, beta)
    a = family_rep(q, 1, r.u, positions=[0])
    b = family_rep(q, 1, r.u, positions=[1])
    got = minimax_height(q, beta, a, b, M, grid=grid)
    H = critical.potential_at(q, beta, "u2")
    ea, eb = grid.edges()
    f = grid.potential_values(beta)
    lipschitz = float(np.max(np.abs(f[ea] - f[eb]))) * M
    assert abs(got - H) <= 3.0 * lipschitz / M


def test_minimax_refines_with_resolution():
    q, beta = 3, 3.5
    r = solve_uv(1, q, beta)
    a = family_rep(q, 1, r.u, positions=[0])
    b = family_rep(q, 1, r.u, positions=[1])
    vals = {M: minimax_height(q, beta, a, b, M) for M in (50, 100, 200)}
    gap_1 = abs(vals[50] - vals[100])
    gap_2 = abs(vals[100] - vals[200])
    assert gap_2 < gap_1


# --- free energy ----------------------------------------------------------------

def test_free_energy_high_temperature_closed_form():
    for q in (3, 4, 5):
        b2 = critical.beta_c(q)
        for beta in (0.5, 1.0, 0.99 * b2):
            assert free_energy(q, beta) == pytest.approx(
                -1.0 / (2 * q) - math.log(q) / beta, abs=1e-13
            )


def test_free_energy_low_temperature_tracks_u1():
    for q in (3, 5):
        beta = critical.beta_c(q) + 0.4
        assert free_energy(q, beta) == pytest.approx(
            critical.potential_at(q, beta, "u1"), abs=1e-13
        )


def test_free_energy_continuous_at_switch():
    for q in (3, 4, 5):
        b2 = critical.beta_c(q)
        left = free_energy(q, b2 - 1e-11)
        right = free_energy(q, b2 + 1e-11)
        assert abs(left - right) < 1e-9


def test_free_energy_curve_kink():
    curve = free_energy_curve(3, np.linspace(2.0, 3.5, 16))
    jump_fd = curve.psi_prime_left - curve.psi_prime_right
    assert curve.jump_analytic > 0
    assert jump_fd == pytest.approx(curve.jump_analytic, abs=1e-4)
    assert curve.psi.shape == (16,)


def test_grid_sup_matches_free_energy():
    for (q, beta, M) in [(3, 2.0, 150), (3, 3.2, 150), (4, 3.0, 60)]:
        sup = grid_free_energy(q, beta, M)
        assert abs(sup - (-free_energy(q, beta))) <= 10.0 / M
