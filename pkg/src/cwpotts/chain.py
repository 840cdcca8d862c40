"""The empirical-magnetization Markov chain and its exact machinery.

States are count vectors n with sum(n) = N (the scale-N simplex
lattice); the chain jumps n -> n - e_i + e_j at rate

    R(x, x + (e_j - e_i)/N) = x_i * exp(-(N*beta/2) * [H(x') - H(x)]),

where x = n/N.  With H(x) = -|x|^2/2 the exponent closes to
(beta/2) * (x_j - x_i + 1/N).  The invariant measure is the projected
Gibbs measure

    pi(n) ∝ multinomial(N; n) * exp(-beta*N*H(n/N)),

computed exactly in log space through log-gamma (no Stirling
truncation) and normalized by log-sum-exp.  The chain is reversible
for pi.

The generator also decomposes into two-state cycle generators: with
the exact finite-N potential F_N (defined through the multinomial
weight) and the cycle rates

    R0(y) = exp(-(N*beta/2) * [F_N(y') - F_N(y)]),
    R1(y) = exp(-(N*beta/2) * [F_N(y) - F_N(y')]),   y' = y + (e_j - e_i)/N,

one has R(y, y') = w(y) * R0(y) and R(y', y) = w(y) * R1(y) with the
weight w(y) = sqrt(y_i * (y_j + 1/N)), so summing weighted cycle
generators over all cycles reproduces the full generator exactly.
`cyclic_decomposition_check` evaluates both sides on random test
functions and returns the largest discrepancy.

A spin-level simulator (every one of the N sites carries its own spin,
flip rates exp(-beta/2 * energy difference) scaled by 1/N) serves as an
independent oracle: projecting its trajectory onto counts must
reproduce the chain's rates and its Gibbs marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve
from scipy.special import gammaln, logsumexp

from . import critical, landscape
from .errors import DomainError, ResolutionError, SizeError, StructuralError
from .landscape import SimplexGrid
from .simplex import SimplexPoint, simplex_size

_DENSE_SOLVE_MAX = 5000
_RNG_BATCH = 4096


@dataclass
class MagnetizationChain:
    """Finite continuous-time chain on the scale-N magnetization lattice."""

    q: int
    N: int
    beta: float
    grid: SimplexGrid
    log_pi: np.ndarray = field(repr=False)
    # directed move arrays, sorted by source state
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    move_i: np.ndarray = field(repr=False)
    move_j: np.ndarray = field(repr=False)
    rates: np.ndarray = field(repr=False)
    indptr: np.ndarray = field(repr=False)
    exit_rate: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.grid.n_nodes

    def state_index(self, state: Sequence[int] | SimplexPoint) -> int:
        if isinstance(state, SimplexPoint):
            return self.grid.nearest_node(state)
        return self.grid.index_of(state)

    def state_counts(self, idx: int) -> tuple:
        return tuple(int(c) for c in self.grid.counts[idx])

    def rate(self, state: Sequence[int] | SimplexPoint, i: int, j: int) -> float:
        """Rate of the move i -> j out of the given state."""
        s = self.state_index(state)
        lo, hi = self.indptr[s], self.indptr[s + 1]
        sel = (self.move_i[lo:hi] == i) & (self.move_j[lo:hi] == j)
        pos = np.flatnonzero(sel)
        return float(self.rates[lo:hi][pos[0]]) if pos.size else 0.0

    def generator(self) -> csr_matrix:
        n = self.n_states
        Q = csr_matrix((self.rates, (self.src, self.dst)), shape=(n, n)).tolil()
        Q.setdiag(-self.exit_rate)
        return Q.tocsr()

    def stationary(self) -> np.ndarray:
        return np.exp(self.log_pi)


def build_chain(q: int, N: int, beta: float, cap: int = 2_000_000) -> MagnetizationChain:
    if N < 1:
        raise DomainError(f"N={N} must be >= 1")
    size = simplex_size(q, N)
    if size > cap:
        raise SizeError(f"|state space| = {size} exceeds the cap {cap}")
    grid = SimplexGrid(q, N)
    x = grid.coords
    src, dst, mi, mj = grid.directed_moves()
    # exp(-(N*beta/2) dH) with dH = -(x_j - x_i + 1/N)/N
    xi = x[src, mi]
    xj = x[src, mj]
    rates = xi * np.exp(0.5 * beta * (xj - xi + 1.0 / N))

    order = np.argsort(src, kind="stable")
    src, dst, mi, mj, rates = src[order], dst[order], mi[order], mj[order], rates[order]
    indptr = np.searchsorted(src, np.arange(grid.n_nodes + 1))
    exit_rate = np.zeros(grid.n_nodes)
    np.add.at(exit_rate, src, rates)

    h = -0.5 * np.einsum("ij,ij->i", x, x)
    log_weight = gammaln(N + 1) - gammaln(grid.counts + 1).sum(axis=1) - beta * N * h
    log_pi = log_weight - logsumexp(log_weight)
    return MagnetizationChain(
        q=q, N=N, beta=beta, grid=grid, log_pi=log_pi,
        src=src, dst=dst, move_i=mi, move_j=mj, rates=rates,
        indptr=indptr, exit_rate=exit_rate,
    )


def log_finite_potential(chain: MagnetizationChain) -> np.ndarray:
    """Exact finite-N potential F_N with pi ∝ exp(-beta*N*F_N) up to the
    (2 pi N)^((q-1)/2) convention factor."""
    x = chain.grid.coords
    h = -0.5 * np.einsum("ij,ij->i", x, x)
    log_multinom = gammaln(chain.N + 1) - gammaln(chain.grid.counts + 1).sum(axis=1)
    const = 0.5 * (chain.q - 1) * math.log(2 * math.pi * chain.N)
    return h - (log_multinom + const) / (chain.beta * chain.N)


# ---------------------------------------------------------------------------
# exact hitting times
# ---------------------------------------------------------------------------

def _as_index_set(chain: MagnetizationChain, states: Iterable) -> np.ndarray:
    idx = sorted({chain.state_index(s) if not isinstance(s, (int, np.integer)) else int(s)
                  for s in states})
    return np.array(idx, dtype=np.int64)


def exact_mean_hitting_time(chain: MagnetizationChain, start, target: Iterable) -> float:
    """Mean hitting time of the target set from start, by linear solve.

    Solves (Q restricted to non-target states) u = -1; deterministic.
    """
    tgt = _as_index_set(chain, target)
    if tgt.size == 0:
        raise DomainError("target set is empty")
    s0 = chain.state_index(start) if not isinstance(start, (int, np.integer)) else int(start)
    if s0 in set(tgt.tolist()):
        return 0.0
    n = chain.n_states
    keep = np.ones(n, dtype=bool)
    keep[tgt] = False
    keep_idx = np.flatnonzero(keep)
    pos = -np.ones(n, dtype=np.int64)
    pos[keep_idx] = np.arange(keep_idx.size)

    inside = keep[chain.src] & keep[chain.dst]
    rows = pos[chain.src[inside]]
    cols = pos[chain.dst[inside]]
    vals = chain.rates[inside]
    m = keep_idx.size
    A = csr_matrix((vals, (rows, cols)), shape=(m, m)).tolil()
    A.setdiag(-chain.exit_rate[keep_idx])
    rhs = -np.ones(m)
    if m <= _DENSE_SOLVE_MAX:
        sol = np.linalg.solve(A.toarray(), rhs)
    else:
        sol = spsolve(A.tocsr(), rhs)
    if not np.all(np.isfinite(sol)):
        raise StructuralError("restricted generator is singular (unreachable target)")
    return float(sol[pos[s0]])


# ---------------------------------------------------------------------------
# trajectory simulation
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """A simulated path: states[k] is occupied on [times[k], times[k+1])."""

    q: int
    N: int
    beta: float
    seed: int
    times: np.ndarray
    states: np.ndarray  # state indices into the chain grid
    hit_time: float | None  # arrival time at the target, if one was given


class _Drawer:
    """Batched uniform/exponential draws with a deterministic stream."""

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)
        self._u = np.empty(0)
        self._e = np.empty(0)
        self._iu = 0
        self._ie = 0

    def uniform(self) -> float:
        if self._iu >= self._u.size:
            self._u = self.rng.random(_RNG_BATCH)
            self._iu = 0
        v = self._u[self._iu]
        self._iu += 1
        return v

    def exponential(self) -> float:
        if self._ie >= self._e.size:
            self._e = self.rng.standard_exponential(_RNG_BATCH)
            self._ie = 0
        v = self._e[self._ie]
        self._ie += 1
        return v


def simulate(
    chain: MagnetizationChain,
    start,
    *,
    target: Iterable | None = None,
    t_max: float | None = None,
    max_jumps: int | None = None,
    seed: int = 0,
) -> Trajectory:
    """Continuous-time jump simulation, reproducible per seed.

    Stops on hitting `target`, on the time horizon, or after max_jumps,
    whichever comes first (at least one stop rule is required).
    """
    if target is None and t_max is None and max_jumps is None:
        raise DomainError("need a stop rule: target, t_max or max_jumps")
    s = chain.state_index(start) if not isinstance(start, (int, np.integer)) else int(start)
    tgt = set(_as_index_set(chain, target).tolist()) if target is not None else set()

    # per-state cumulative rates for O(log) move selection
    cum = np.cumsum(chain.rates)
    draw = _Drawer(seed)
    times = [0.0]
    states = [s]
    t = 0.0
    hit = 0.0 if s in tgt else None
    jumps = 0
    while hit is None:
        if max_jumps is not None and jumps >= max_jumps:
            break
        lo, hi = chain.indptr[s], chain.indptr[s + 1]
        total = chain.exit_rate[s]
        dt = draw.exponential() / total
        if t_max is not None and t + dt > t_max:
            t = t_max
            break
        t += dt
        u = draw.uniform() * total
        base = cum[lo - 1] if lo > 0 else 0.0
        k = lo + int(np.searchsorted(cum[lo:hi] - base, u, side="right"))
        k = min(k, hi - 1)
        s = int(chain.dst[k])
        times.append(t)
        states.append(s)
        jumps += 1
        if s in tgt:
            hit = t
    return Trajectory(
        q=chain.q, N=chain.N, beta=chain.beta, seed=seed,
        times=np.array(times), states=np.array(states, dtype=np.int64), hit_time=hit,
    )


def sample_hitting_times(
    chain: MagnetizationChain, start, target: Iterable, runs: int, seed: int = 0
) -> np.ndarray:
    """Monte Carlo hitting times; run r uses the substream (seed, r)."""
    out = np.empty(runs)
    for r in range(runs):
        traj = simulate(chain, start, target=target, seed=np.random.SeedSequence((seed, r)))
        out[r] = traj.hit_time
    return out


def occupation_fractions(chain: MagnetizationChain, traj: Trajectory) -> np.ndarray:
    """Time-weighted state occupation of a trajectory."""
    occ = np.zeros(chain.n_states)
    holds = np.diff(traj.times)
    np.add.at(occ, traj.states[:-1], holds)
    total = occ.sum()
    if total <= 0:
        raise DomainError("trajectory carries no holding time")
    return occ / total


# ---------------------------------------------------------------------------
# spin-level oracle
# ---------------------------------------------------------------------------

@dataclass
class SpinOracleResult:
    """Empirical magnetization-level rates tabulated from a spin path.

    jump_counts[s, i, j] counts projected i->j moves out of state s;
    occupation[s] is the total time spent at s; model_rate gives the
    chain rate for each tabulated (state, move).
    """

    chain: MagnetizationChain
    occupation: np.ndarray
    jump_counts: np.ndarray
    n_jumps: int

    def empirical_rate(self, s: int, i: int, j: int) -> float:
        return self.jump_counts[s, i, j] / self.occupation[s]

    def rate_zscores(self, min_count: int = 25):
        """(state, i, j, z) for every tabulated move with enough jumps;
        z compares the empirical rate K/T to the model rate via the
        Poisson standard error sqrt(K)/T."""
        out = []
        for s, i, j in zip(*np.nonzero(self.jump_counts >= min_count)):
            K = self.jump_counts[s, i, j]
            T = self.occupation[s]
            model = self.chain.rate(self.chain.state_counts(s), int(i), int(j))
            z = (K / T - model) / (math.sqrt(K) / T)
            out.append((int(s), int(i), int(j), float(z)))
        return out


def spin_level_oracle(
    q: int, N: int, beta: float, n_jumps: int, seed: int = 0
) -> SpinOracleResult:
    """Simulate the full N-site spin dynamics and project onto counts.

    Site v flips from spin i to spin k at rate
    (1/N) * exp(-(beta/2) * N * [H(x') - H(x)]); all sites of equal spin
    share that rate, so the algorithm draws the move class by its
    aggregate rate and then flips a uniformly chosen site of the class
    (an exact sample of the site-level dynamics).
    """
    if N > 16:
        raise DomainError("the spin-level oracle is limited to N <= 16")
    chain = build_chain(q, N, beta)
    rng = np.random.default_rng(seed)
    spins = rng.integers(0, q, size=N)  # initial configuration
    counts = np.bincount(spins, minlength=q)

    occupation = np.zeros(chain.n_states)
    jump_counts = np.zeros((chain.n_states, q, q), dtype=np.int64)
    sites_by_spin = [list(np.flatnonzero(spins == k)) for k in range(q)]

    for _ in range(n_jumps):
        s = chain.grid.index_of(counts)
        lo, hi = chain.indptr[s], chain.indptr[s + 1]
        local_rates = chain.rates[lo:hi]
        total = chain.exit_rate[s]
        occupation[s] += rng.exponential(1.0 / total)
        u = rng.random() * total
        k = int(np.searchsorted(np.cumsum(local_rates), u, side="right"))
        k = min(k, hi - lo - 1)
        i = int(chain.move_i[lo + k])
        j = int(chain.move_j[lo + k])
        jump_counts[s, i, j] += 1
        # flip a uniformly chosen site of spin i
        pool = sites_by_spin[i]
        site = pool.pop(rng.integers(0, len(pool)))
        spins[site] = j
        sites_by_spin[j].append(site)
        counts[i] -= 1
        counts[j] += 1
    return SpinOracleResult(
        chain=chain, occupation=occupation, jump_counts=jump_counts, n_jumps=n_jumps
    )


def spin_gibbs_marginal(q: int, N: int, beta: float) -> np.ndarray:
    """Magnetization marginal of the spin Gibbs measure by exhaustive
    enumeration of all q^N configurations (independent of the chain's
    multinomial formula)."""
    if q**N > 2_000_000:
        raise SizeError(f"enumeration of {q}^{N} configurations exceeds the cap")
    grid = SimplexGrid(q, N)
    weights_by_state = np.zeros(grid.n_nodes)
    spins = np.zeros(N, dtype=np.int64)
    for code in range(q**N):
        c = code
        for v in range(N):
            spins[v] = c % q
            c //= q
        counts = np.bincount(spins, minlength=q)
        x = counts / N
        h = -0.5 * float(x @ x)
        weights_by_state[grid.index_of(counts)] += math.exp(-beta * N * h)
    total = weights_by_state.sum()
    return weights_by_state / total


# ---------------------------------------------------------------------------
# cyclic decomposition of the generator
# ---------------------------------------------------------------------------

def apply_generator(chain: MagnetizationChain, f: np.ndarray) -> np.ndarray:
    """(L f)(x) = sum over moves R(x, y) [f(y) - f(x)], directly from rates."""
    out = np.zeros(chain.n_states)
    np.add.at(out, chain.src, chain.rates * (f[chain.dst] - f[chain.src]))
    return out


def apply_cycle_decomposition(chain: MagnetizationChain, f: np.ndarray) -> np.ndarray:
    """The same generator assembled from weighted two-state cycle
    generators built on the exact finite-N potential."""
    FN = log_finite_potential(chain)
    coef = chain.N * chain.beta
    x = chain.grid.coords
    out = np.zeros(chain.n_states)
    q = chain.q
    for i in range(q):
        for j in range(i + 1, q):
            base = np.flatnonzero(chain.grid.counts[:, i] >= 1)
            nb_keys = (
                chain.grid.keys[base]
                - chain.grid._weights[i]
                + chain.grid._weights[j]
            )
            nb = np.searchsorted(chain.grid.keys, nb_keys)
            w = np.sqrt(x[base, i] * (x[base, j] + 1.0 / chain.N))
            half_gap = 0.5 * (FN[nb] - FN[base])
            r0 = np.exp(-coef * half_gap)
            r1 = np.exp(coef * half_gap)
            df = f[nb] - f[base]
            np.add.at(out, base, w * r0 * df)
            np.add.at(out, nb, -w * r1 * df)
    return out


def cyclic_decomposition_check(chain: MagnetizationChain, trials: int, seed: int = 0) -> float:
    """Largest |direct - cyclic| over random test functions."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = rng.standard_normal(chain.n_states)
        d = apply_generator(chain, f) - apply_cycle_decomposition(chain, f)
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


# ---------------------------------------------------------------------------
# order process
# ---------------------------------------------------------------------------

@dataclass
class OrderProcess:
    """Trajectory projected onto metastable labels.

    symbols[k] labels states[k] of the trajectory: 0 stands for the
    uniform-point well, 1..q for the spin wells, -1 for transient.
    jumps records (time, label) whenever a metastable set different
    from the previously visited one is entered.
    """

    symbols: np.ndarray
    jumps: list
    delta: float
    label_nodes: dict


def metastable_sets(chain: MagnetizationChain, delta: float | None = None) -> tuple[dict, float]:
    """Depth-trimmed wells on the chain's own lattice.

    The trim delta (in potential units) defaults to half the smallest
    available well depth; a well keeps the nodes lying below its gate
    level minus delta.
    """
    wd = landscape.well_decomposition(chain.q, chain.beta, chain.N, grid=chain.grid)
    depth_1 = wd.level - critical.potential_at(chain.q, chain.beta, "u1")
    avail = [depth_1]
    if "o" in wd.labels:
        avail.append(wd.v1_level - critical.potential_at(chain.q, chain.beta, "p"))
    if delta is None:
        delta = 0.5 * min(avail)
    if delta <= 0 or delta >= min(avail):
        raise DomainError(f"delta={delta} outside (0, {min(avail)})")
    fvals = wd.potential
    sets = {}
    for lab, nodes in wd.labels.items():
        level = wd.v1_level if lab == "o" else wd.level
        trimmed = nodes[fvals[nodes] < level - delta]
        if trimmed.size:
            sets[lab] = trimmed
    return sets, delta


def order_process(
    chain: MagnetizationChain, traj: Trajectory, delta: float | None = None
) -> OrderProcess:
    sets, delta = metastable_sets(chain, delta)
    if not sets:
        raise ResolutionError("no metastable set survives the depth trim at this N")
    symbol_of = -np.ones(chain.n_states, dtype=np.int64)
    for lab, nodes in sets.items():
        symbol_of[nodes] = 0 if lab == "o" else int(lab)
    symbols = symbol_of[traj.states]
    jumps = []
    last = None
    for t, sym in zip(traj.times, symbols):
        if sym >= 0 and sym != last:
            jumps.append((float(t), int(sym)))
            last = int(sym)
    return OrderProcess(symbols=symbols, jumps=jumps, delta=delta, label_nodes=sets)
