"""Exactness and oracle agreement for the magnetization chain."""

import math

import numpy as np
import pytest

from cwpotts import chain, critical
from cwpotts.chain import (
    apply_cycle_decomposition,
    apply_generator,
    build_chain,
    cyclic_decomposition_check,
    exact_mean_hitting_time,
    metastable_sets,
    occupation_fractions,
    order_process,
    sample_hitting_times,
    simulate,
    spin_gibbs_marginal,
    spin_level_oracle,
)
from cwpotts.errors import DomainError, SizeError
from cwpotts.simplex import family_rep, uniform_point


def reverse_rates(c):
    """Rate of the reversed move for every directed move of the chain."""
    x = c.grid.coords
    return x[c.dst, c.move_j] * np.exp(
        0.5 * c.beta * (x[c.dst, c.move_i] - x[c.dst, c.move_j] + 1.0 / c.N)
    )


def u1_nodes(c):
    r = critical.solve_uv(1, c.q, c.beta)
    return [c.state_index(family_rep(c.q, 1, r.u, positions=[k])) for k in range(c.q)]


# --- construction -----------------------------------------------------------

def test_single_site_chain_is_uniform():
    c = build_chain(3, 1, 2.0)
    assert c.n_states == 3
    np.testing.assert_allclose(c.rates, 1.0, rtol=1e-15)
    np.testing.assert_allclose(c.stationary(), 1.0 / 3.0, rtol=1e-14)


def test_rate_closed_form_matches_energy_difference():
    c = build_chain(3, 8, 2.5)
    x = c.grid.coords
    h = -0.5 * np.einsum("ij,ij->i", x, x)
    expect = x[c.src, c.move_i] * np.exp(-0.5 * c.N * c.beta * (h[c.dst] - h[c.src]))
    np.testing.assert_allclose(c.rates, expect, rtol=1e-12)


def test_rate_accessor():
    c = build_chain(3, 4, 2.0)
    assert c.rate((2, 1, 1), 0, 1) == pytest.approx(
        0.5 * math.exp(0.5 * 2.0 * (0.25 - 0.5 + 0.25)), rel=1e-14
    )
    assert c.rate((0, 2, 2), 0, 1) == 0.0  # empty class cannot move


def test_size_cap():
    with pytest.raises(SizeError):
        build_chain(5, 60, 1.0, cap=1000)


@pytest.mark.parametrize("q,N,beta", [(3, 8, 2.0), (3, 12, 3.5), (3, 16, 3.5), (4, 8, 3.6), (5, 6, 4.9)])
def test_detailed_balance(q, N, beta):
    c = build_chain(q, N, beta)
    res = c.log_pi[c.src] + np.log(c.rates) - c.log_pi[c.dst] - np.log(reverse_rates(c))
    assert np.max(np.abs(res)) < 1e-12
    assert abs(c.stationary().sum() - 1.0) < 1e-12
    # the rate of a move vanishes exactly when its spin class is empty
    assert np.all(c.grid.counts[c.src, c.move_i] >= 1)
    assert np.all(c.rates > 0)


def test_stationarity_residual():
    c = build_chain(3, 12, 3.5)
    residual = c.stationary() @ c.generator().toarray()
    assert np.max(np.abs(residual)) < 1e-10


def test_stationary_matches_null_vector():
    c = build_chain(3, 12, 2.5)
    Q = c.generator().toarray()
    # left null vector of the generator, computed independently
    w, vecs = np.linalg.eig(Q.T)
    k = int(np.argmin(np.abs(w)))
    null = np.real(vecs[:, k])
    null = np.abs(null) / np.abs(null).sum()
    assert 0.5 * np.sum(np.abs(null - c.stationary())) < 1e-10


def test_permutation_equivariance():
    c = build_chain(3, 10, 2.7)
    perm = (2, 0, 1)
    for idx in (0, 11, 37):
        counts = c.state_counts(idx)
        permuted = tuple(counts[perm.index(k)] for k in range(3))
        j = c.grid.index_of(permuted)
        assert c.log_pi[idx] == pytest.approx(c.log_pi[j], abs=1e-12)
    # rates transport under relabelling: k -> perm[k] sends the move
    # 0 -> 1 to 2 -> 0 and the state (5, 3, 2) to (3, 2, 5)
    assert c.rate((5, 3, 2), 0, 1) == pytest.approx(c.rate((3, 2, 5), 2, 0), rel=1e-14)


def test_invariant_measure_concentration():
    # below the switch the mass peaks at the uniform state; above, at a
    # one-large-spin state
    from cwpotts.simplex import nearest_count_vector

    c = build_chain(3, 60, 2.0)
    peak = c.state_counts(int(np.argmax(c.log_pi)))
    p_node = (20, 20, 20)
    assert max(abs(a - b) for a, b in zip(peak, p_node)) <= 1
    c = build_chain(3, 60, 3.5)
    peak = np.array(c.state_counts(int(np.argmax(c.log_pi))))
    r = critical.solve_uv(1, 3, 3.5)
    images = [np.array(nearest_count_vector(family_rep(3, 1, r.u, positions=[k]), 60))
              for k in range(3)]
    assert min(np.max(np.abs(peak - im)) for im in images) <= 1


# --- hitting times ------------------------------------------------------------

def test_hitting_time_start_in_target():
    c = build_chain(3, 4, 2.0)
    assert exact_mean_hitting_time(c, (2, 1, 1), [(2, 1, 1)]) == 0.0


def test_hitting_time_single_site_closed_form():
    # three corner states with unit rates: first-step analysis gives
    # u_A = 1/2 + u_C/2, u_C = 1/2 + u_A/2, so u_A = 1
    c = build_chain(3, 1, 2.0)
    t = exact_mean_hitting_time(c, (1, 0, 0), [(0, 1, 0)])
    assert t == pytest.approx(1.0, rel=1e-13)


def test_mc_hitting_times_match_exact():
    c = build_chain(3, 12, 3.5)
    nodes = u1_nodes(c)
    exact = exact_mean_hitting_time(c, nodes[0], nodes[1:])
    samples = sample_hitting_times(c, nodes[0], nodes[1:], runs=3000, seed=11)
    sem = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - exact) <= 3.0 * sem


# --- simulation ----------------------------------------------------------------

def test_simulate_deterministic_per_seed():
    c = build_chain(3, 8, 2.0)
    t1 = simulate(c, uniform_point(3), max_jumps=500, seed=9)
    t2 = simulate(c, uniform_point(3), max_jumps=500, seed=9)
    np.testing.assert_array_equal(t1.states, t2.states)
    np.testing.assert_array_equal(t1.times, t2.times)
    t3 = simulate(c, uniform_point(3), max_jumps=500, seed=10)
    assert not np.array_equal(t1.states, t3.states)


def test_trajectory_moves_are_single_exchanges():
    c = build_chain(3, 8, 2.0)
    traj = simulate(c, uniform_point(3), max_jumps=400, seed=13)
    assert np.all(np.diff(traj.times) > 0)
    counts = c.grid.counts[traj.states]
    diff = counts[1:] - counts[:-1]
    assert np.all(np.abs(diff).sum(axis=1) == 2)
    assert np.all(diff.max(axis=1) == 1) and np.all(diff.min(axis=1) == -1)


def test_simulate_needs_stop_rule():
    c = build_chain(3, 4, 2.0)
    with pytest.raises(DomainError):
        simulate(c, (2, 1, 1), seed=0)


def test_simulate_time_horizon():
    c = build_chain(3, 8, 2.0)
    traj = simulate(c, uniform_point(3), t_max=50.0, seed=1)
    assert traj.times[-1] <= 50.0
    assert traj.hit_time is None


def test_occupation_converges_to_stationary():
    c = build_chain(3, 8, 2.0)
    traj = simulate(c, uniform_point(3), max_jumps=1_000_000, seed=3)
    occ = occupation_fractions(c, traj)
    tv = 0.5 * np.sum(np.abs(occ - c.stationary()))
    assert tv < 0.02


# --- spin-level oracle ----------------------------------------------------------

def test_spin_gibbs_marginal_matches_chain():
    for (q, N, beta) in [(3, 6, 2.0), (3, 8, 2.0), (3, 8, 3.5)]:
        marg = spin_gibbs_marginal(q, N, beta)
        c = build_chain(q, N, beta)
        assert 0.5 * np.sum(np.abs(marg - c.stationary())) < 1e-12


def test_spin_oracle_rates_agree():
    res = spin_level_oracle(3, 8, 2.0, n_jumps=100_000, seed=7)
    zs = res.rate_zscores(min_count=25)
    assert len(zs) > 100
    assert max(abs(z) for *_, z in zs) < 5.0


def test_spin_oracle_single_site_uniform():
    res = spin_level_oracle(3, 1, 2.0, n_jumps=2000, seed=2)
    c = res.chain
    # every corner-to-corner move carries unit rate
    for s, i, j, z in res.rate_zscores(min_count=50):
        assert c.rate(c.state_counts(s), i, j) == pytest.approx(1.0, rel=1e-14)
        assert abs(z) < 5.0


def test_spin_oracle_site_cap():
    with pytest.raises(DomainError):
        spin_level_oracle(3, 17, 2.0, n_jumps=10, seed=0)


# --- cyclic decomposition ---------------------------------------------------------

@pytest.mark.parametrize("q,N", [(3, 6), (3, 10), (4, 6), (4, 10)])
def test_cyclic_decomposition_identity(q, N):
    c = build_chain(q, N, 2.5)
    assert cyclic_decomposition_check(c, trials=20, seed=1) < 1e-10


def test_cyclic_decomposition_annihilates_constants():
    c = build_chain(3, 8, 2.0)
    f = np.ones(c.n_states)
    np.testing.assert_allclose(apply_generator(c, f), 0.0, atol=1e-14)
    np.testing.assert_allclose(apply_cycle_decomposition(c, f), 0.0, atol=1e-14)


# --- order process ------------------------------------------------------------------

def test_metastable_sets_q3_low_temperature():
    c = build_chain(3, 12, 3.5)
    sets, delta = metastable_sets(c)
    assert set(sets) == {1, 2, 3}
    assert delta > 0


def test_order_process_confined_run_is_constant():
    c = build_chain(3, 12, 3.5)
    nodes = u1_nodes(c)
    traj = simulate(c, nodes[0], max_jumps=30, seed=21)
    op = order_process(c, traj)
    labels = {lab for _, lab in op.jumps}
    assert labels == {1}  # short run stays in its starting well


def test_order_process_complete_jump_graph():
    c = build_chain(3, 12, 3.5)
    nodes = u1_nodes(c)
    traj = simulate(c, nodes[0], max_jumps=200_000, seed=5)
    op = order_process(c, traj)
    seq = [lab for _, lab in op.jumps]
    transitions = {(a, b) for a, b in zip(seq, seq[1:])}
    assert transitions == {(a, b) for a in (1, 2, 3) for b in (1, 2, 3) if a != b}


def test_order_process_intermediate_regime_routes_through_uniform_well():
    # between the first two critical temperatures a spin well drains
    # into the uniform well; the first recorded change of metastable
    # set lands there in nearly every run at the resolvable scales
    q, beta, N = 3, 2.76, 60
    c = build_chain(q, N, beta)
    sets, _ = metastable_sets(c)
    assert "o" in sets and 1 in sets
    start = sets[1][int(np.argmin(c.grid.potential_values(beta)[sets[1]]))]
    hits_o = 0
    runs = 40
    for r in range(runs):
        traj = simulate(c, int(start), max_jumps=40_000, seed=1000 + r)
        op = order_process(c, traj)
        seq = [lab for _, lab in op.jumps]
        first_change = next((lab for lab in seq if lab != seq[0]), None)
        assert first_change is not None
        hits_o += first_change == 0
    assert hits_o >= 0.9 * runs
