"""Global structure of the potential on a discretized simplex.

The simplex is discretized by count vectors n with sum(n) = M; nodes
are adjacent when they differ by a single exchange move
+/- (e_j - e_i)/M.  On that graph the module computes

  * sublevel-set wells: connected components of {F_beta < level},
    labelled by which of the known minima they contain,
  * saddle gates: off-well nodes adjacent to two distinct wells at the
    gate height,
  * minimax (widest-path) heights between two points, exact on the
    finite graph,
  * well depths, and
  * the mean-field free energy psi(beta) = min over local minima of
    F_beta, whose derivative jumps at beta_2 (first-order transition).

The gate height H_beta is F_beta(v_1) for beta in (beta_1, beta_3) and
F_beta(u_2) from beta_3 on (for q = 3 it is always F_beta(v_1)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import critical
from .errors import DomainError, RegimeError, ResolutionError
from .potential import entropy, hessian, spectrum_at_family_point
from .simplex import SimplexPoint, family_rep, nearest_count_vector, simplex_size, uniform_point


class SimplexGrid:
    """Lattice of count vectors of sum M over q coordinates.

    Nodes are stored in colexicographic order (last coordinate most
    significant), which makes the integer key n . (M+1)^[0..q-1]
    strictly increasing and O(log n) searchable.
    """

    def __init__(self, q: int, resolution: int):
        if q < 3:
            raise DomainError(f"q={q} must be >= 3")
        if resolution < 1:
            raise DomainError(f"resolution={resolution} must be >= 1")
        self.q = q
        self.M = resolution
        self.counts = _compositions(resolution, q)
        self._weights = (resolution + 1) ** np.arange(q, dtype=np.int64)
        keys = self.counts @ self._weights
        order = np.argsort(keys)
        self.counts = np.ascontiguousarray(self.counts[order])
        self.keys = keys[order]
        self.coords = self.counts.astype(float) / resolution
        self._edges: tuple | None = None

    @property
    def n_nodes(self) -> int:
        return self.counts.shape[0]

    def index_of(self, counts: Sequence[int]) -> int:
        key = int(np.dot(np.asarray(counts, dtype=np.int64), self._weights))
        pos = int(np.searchsorted(self.keys, key))
        if pos >= self.n_nodes or self.keys[pos] != key:
            raise DomainError(f"{tuple(counts)} is not a node of the grid")
        return pos

    def nearest_node(self, x: SimplexPoint) -> int:
        return self.index_of(nearest_count_vector(x, self.M))

    def directed_moves(self):
        """Arrays (src, dst, i, j) over all single-exchange moves i -> j."""
        src_all, dst_all, i_all, j_all = [], [], [], []
        for i in range(self.q):
            movable = np.flatnonzero(self.counts[:, i] >= 1)
            for j in range(self.q):
                if j == i:
                    continue
                nb_keys = self.keys[movable] - self._weights[i] + self._weights[j]
                dst = np.searchsorted(self.keys, nb_keys)
                src_all.append(movable)
                dst_all.append(dst)
                i_all.append(np.full(movable.size, i, dtype=np.int8))
                j_all.append(np.full(movable.size, j, dtype=np.int8))
        return (
            np.concatenate(src_all),
            np.concatenate(dst_all),
            np.concatenate(i_all),
            np.concatenate(j_all),
        )

    def edges(self):
        """Undirected adjacency as (a, b) index arrays, each edge once."""
        if self._edges is None:
            a_all, b_all = [], []
            for i in range(self.q):
                for j in range(i + 1, self.q):
                    movable = np.flatnonzero(self.counts[:, i] >= 1)
                    nb_keys = self.keys[movable] - self._weights[i] + self._weights[j]
                    nb = np.searchsorted(self.keys, nb_keys)
                    a_all.append(movable)
                    b_all.append(nb)
            self._edges = (np.concatenate(a_all), np.concatenate(b_all))
        return self._edges

    def potential_values(self, beta: float) -> np.ndarray:
        """F_beta on every node, boundary included (0*log 0 = 0)."""
        x = self.coords
        h = -0.5 * np.einsum("ij,ij->i", x, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), 0.0)
        s = np.einsum("ij,ij->i", x, logs)
        return h + s / beta


def _compositions(M: int, q: int) -> np.ndarray:
    if simplex_size(q, M) > 5_000_000:
        raise DomainError(f"grid with q={q}, M={M} exceeds the node cap")
    if q == 1:
        return np.array([[M]], dtype=np.int32)
    blocks = []
    for first in range(M + 1):
        rest = _compositions(M - first, q - 1)
        col = np.full((rest.shape[0], 1), first, dtype=np.int32)
        blocks.append(np.hstack([col, rest]))
    return np.vstack(blocks)


# ---------------------------------------------------------------------------
# heights, wells and gates
# ---------------------------------------------------------------------------

def saddle_height(q: int, beta: float) -> float:
    """Height H_beta of the lowest saddle points."""
    beta1 = critical.beta_s(1, q)
    if beta <= beta1:
        raise RegimeError(f"no saddle points at beta={beta} <= beta_1={beta1}")
    if q == 3:
        return critical.potential_at(q, beta, "v1")
    beta3 = critical.beta_m(q)[0]
    if beta < beta3:
        return critical.potential_at(q, beta, "v1")
    return critical.potential_at(q, beta, "u2")


@dataclass
class Depths:
    theta_1: float
    theta_o: float | None  # absent from beta = q on


def depths(q: int, beta: float) -> Depths:
    """Well depths scaled by beta: theta_1 = beta*(H_beta - F(u_1)) and,
    below beta = q, theta_o = beta*(F(v_1) - F(p))."""
    H = saddle_height(q, beta)
    theta_1 = beta * (H - critical.potential_at(q, beta, "u1"))
    theta_o = None
    if beta < q:
        theta_o = beta * (
            critical.potential_at(q, beta, "v1") - critical.potential_at(q, beta, "p")
        )
    return Depths(theta_1=theta_1, theta_o=theta_o)


@dataclass
class WellDecomposition:
    """Connected sublevel components with labels and gate nodes.

    labels maps a well key ('o' or a spin index 1..q) to a node-index
    array; label_sets lists, per underlying graph component that holds
    at least one label, the set of labels it received (a set of size
    two or more signals a merge at grid precision).  gates maps an
    unordered label pair to the gate node indices between those wells.
    """

    q: int
    beta: float
    grid: SimplexGrid
    level: float
    v1_level: float
    labels: dict
    label_sets: list
    gates: dict
    potential: np.ndarray = field(repr=False)

    @property
    def components(self) -> list:
        """Distinct labelled components (a merged label set contributes once)."""
        seen = {}
        for lab, nodes in sorted(self.labels.items(), key=lambda kv: str(kv[0])):
            seen.setdefault(int(nodes[0]) if len(nodes) else -1, nodes)
        return list(seen.values())


def _component_labels(
    grid: SimplexGrid, fvals: np.ndarray, level: float, edge_ok: np.ndarray | None = None
) -> np.ndarray:
    mask = fvals < level
    a, b = grid.edges()
    keep = mask[a] & mask[b]
    if edge_ok is not None:
        keep &= edge_ok
    mat = csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8), (a[keep], b[keep])),
        shape=(grid.n_nodes, grid.n_nodes),
    )
    _, comp = connected_components(mat, directed=False)
    comp = comp.astype(np.int64)
    comp[~mask] = -1
    return comp


def _level_saddles(q: int, beta: float, level: float) -> list:
    """Permutation images of the index-1 critical points lying at or
    above `level`; each as (location, unstable chart direction, spread).

    These are the ridges that must separate components of {F < level}.
    A ridge narrower than a grid cell is invisible to the lattice, so
    the fill cuts crossing edges near each of them; for ridges the grid
    does resolve the cut is a no-op (both endpoints sit above level).
    spread = sqrt(mu / lambda_min) bounds how far (in cells) a
    separatrix crossing can dip below the level.
    """
    out = []
    candidates = []
    roots1 = critical.solve_uv(1, q, beta)
    candidates.append((1, roots1.v))
    if q >= 4 and beta > critical.beta_s(2, q) * (1 + 1e-12):
        candidates.append((2, critical.solve_uv(2, q, beta).u))
    for i, t in candidates:
        if abs(t - 1.0 / q) <= 1e-9 / q:
            continue  # coincides with the uniform point
        height = critical.family_value(i, q, t, beta)
        if height < level - 1e-9 * max(1.0, abs(level)):
            continue
        spec = spectrum_at_family_point(q, i, t)
        if spec.index != 1:
            continue
        spread = math.sqrt(-min(spec.eigenvalues) / min(e for e in spec.eigenvalues if e > 0))
        for pos in itertools.combinations(range(q), i):
            point = family_rep(q, i, t, positions=pos)
            _, vecs = np.linalg.eigh(hessian(point, beta))
            out.append((point.as_array(), vecs[:, 0], spread, height))
    return out


def _ridge_edge_mask(grid: SimplexGrid, saddles: list) -> np.ndarray | None:
    """Edges safe for flood fill: grid adjacency can hop across a
    separatrix within O(1/M) of a level saddle (both endpoints dip just
    below the level there), which would merge wells that the continuum
    keeps disjoint.  Cut every edge that changes side of the unstable
    direction inside the leak radius of some saddle."""
    if not saddles:
        return None
    a, b = grid.edges()
    ok = np.ones(a.size, dtype=bool)
    cell = 1.0 / grid.M
    for s, w_chart, spread, _height in saddles:
        radius = (math.ceil(0.75 * spread) + 1.5) * cell
        near = np.max(np.abs(grid.coords - s), axis=1) <= radius
        near_edge = near[a] | near[b]
        if not near_edge.any():
            continue
        side = (grid.coords[:, :-1] - s[:-1]) @ w_chart
        flips = side[a] * side[b] < 0.0
        ok &= ~(near_edge & flips)
    return ok


def wells(q: int, beta: float, M: int, grid: SimplexGrid | None = None) -> WellDecomposition:
    """Well decomposition of {F_beta < H_beta}, plus the uniform-point
    well of {F_beta < F_beta(v_1)} while it exists (beta < q).

    Raises ResolutionError when two spin-labelled minima land in one
    component: that cannot happen in the continuum, so the grid is too
    coarse.  A merge of the uniform-point label with a spin label is
    reported through label_sets instead (it happens at grid precision
    near the ground-state switch).
    """
    if M < 20:
        raise DomainError(f"resolution M={M} too coarse (need M >= 20)")
    return well_decomposition(q, beta, M, grid)


def well_decomposition(
    q: int, beta: float, M: int, grid: SimplexGrid | None = None
) -> WellDecomposition:
    """`wells` without the coarseness guard; the magnetization chain uses
    this on its own lattice, where M = N is part of the model."""
    if q > 5:
        raise DomainError("wells are limited to q <= 5 (grid dimension <= 4)")
    grid = grid if grid is not None else SimplexGrid(q, M)
    if grid.q != q or grid.M != M:
        raise DomainError("supplied grid does not match (q, M)")
    H = saddle_height(q, beta)
    fvals = grid.potential_values(beta)
    roots1 = critical.solve_uv(1, q, beta)
    v1_level = critical.family_value(1, q, roots1.v, beta)

    saddles_H = _level_saddles(q, beta, H)
    edge_ok_H = _ridge_edge_mask(grid, saddles_H)
    comp_H = _component_labels(grid, fvals, H, edge_ok_H)
    labels: dict = {}
    comp_of_label: dict = {}
    for k in range(1, q + 1):
        point = family_rep(q, 1, roots1.u, positions=[k - 1])
        node = grid.nearest_node(point)
        if comp_H[node] < 0:
            continue  # the sublevel set misses this minimum at grid precision
        labels[k] = np.flatnonzero(comp_H == comp_H[node])
        comp_of_label[k] = ("H", comp_H[node])

    saddles_v1 = saddles_H
    if beta < q:
        if H < v1_level:  # gate already switched: the v_1 shell sits higher
            saddles_v1 = _level_saddles(q, beta, v1_level)
            edge_ok_v = _ridge_edge_mask(grid, saddles_v1)
            comp_v1 = _component_labels(grid, fvals, v1_level, edge_ok_v)
            source = ("V", comp_v1)
        else:
            comp_v1 = comp_H
            source = ("H", comp_H)
        p_node = grid.nearest_node(uniform_point(q))
        if comp_v1[p_node] >= 0:
            labels["o"] = np.flatnonzero(comp_v1 == comp_v1[p_node])
            comp_of_label["o"] = (source[0], comp_v1[p_node])

    # merge bookkeeping
    groups: dict = {}
    for lab, key in comp_of_label.items():
        groups.setdefault(key, set()).add(lab)
    label_sets = [s for s in groups.values()]
    spin_merge = [s for s in label_sets if len([l for l in s if l != "o"]) > 1]
    if spin_merge:
        raise ResolutionError(
            f"resolution M={M} merges distinct spin wells {sorted(spin_merge[0], key=str)}"
        )

    saddles_v1_extra = [] if saddles_v1 is saddles_H else saddles_v1
    gates = _gates(grid, fvals, labels, q, beta, H, v1_level,
                   saddles_H, saddles_v1_extra, roots1.u)
    return WellDecomposition(
        q=q,
        beta=beta,
        grid=grid,
        level=H,
        v1_level=v1_level,
        labels=labels,
        label_sets=label_sets,
        gates=gates,
        potential=fvals,
    )


_GATE_REACH = 3  # moves of grid-closure dilation around a well


def _descend_basin(q: int, beta: float, x0: np.ndarray, minima: dict) -> object | None:
    """Label of the minimum reached by the gradient flow started at x0.

    Backtracking steepest descent on the continuum potential; the flow
    must end at one of the known minima (the uniform point or a spin
    state), identified by proximity.
    """

    def f_of(arr):
        return -0.5 * float(arr @ arr) + float(np.sum(arr * np.log(arr))) / beta

    x = x0.copy()
    fx = f_of(x)
    for _ in range(5000):
        logs = np.log(x)
        g = -(x[:-1] - x[-1]) + (logs[:-1] - logs[-1]) / beta
        if float(np.max(np.abs(g))) < 1e-7:
            break
        full = np.concatenate([-g, [g.sum()]])  # chart step mapped to the q-vector
        eta = min(0.05, 0.2 * float(np.min(x)) / (float(np.max(np.abs(full))) + 1e-300))
        while eta > 1e-14:
            trial = x + eta * full
            ft = f_of(trial) if np.min(trial) > 0 else math.inf
            if ft < fx:
                x, fx = trial, ft
                break
            eta /= 2.0
        else:
            break
    best, best_d = None, math.inf
    for lab, point in minima.items():
        dist = float(np.max(np.abs(x - point)))
        if dist < best_d:
            best, best_d = lab, dist
    return best if best_d < 0.5 / q else None


def _gates(
    grid: SimplexGrid,
    fvals: np.ndarray,
    labels: dict,
    q: int,
    beta: float,
    H: float,
    v1_level: float,
    saddles_H: list,
    saddles_v1: list,
    u1_root: float,
) -> dict:
    """Grid realization of the pairwise well-closure intersections.

    Each index-1 saddle connects exactly two basins, identified by
    descending the continuum gradient flow from both sides of its
    unstable direction.  The saddle gates that pair of wells when its
    height equals both wells' defining levels (a pass above a well's
    level never lies in that well's closure, however narrow the gap).
    The gate node set is the lowest-potential cluster of off-well nodes
    near the saddle: the grid saddle and its exact symmetry ties.
    """
    a, b = grid.edges()
    # local Lipschitz span per node: largest potential change along an edge
    span = np.zeros(grid.n_nodes)
    d = np.abs(fvals[a] - fvals[b])
    np.maximum.at(span, a, d)
    np.maximum.at(span, b, d)

    any_member = np.zeros(grid.n_nodes, dtype=bool)
    member = {}
    for lab, nodes in labels.items():
        mem = np.zeros(grid.n_nodes, dtype=bool)
        mem[nodes] = True
        member[lab] = mem
        any_member |= mem
    reach = {}
    for lab, mem in member.items():
        # dilate the well a few moves, never through a foreign well
        foreign = any_member & ~mem
        cur = mem.copy()
        for _ in range(_GATE_REACH):
            nxt = cur.copy()
            nxt[b[cur[a]]] = True
            nxt[a[cur[b]]] = True
            cur = (nxt & ~foreign) | mem
        reach[lab] = cur

    minima = {k: family_rep(q, 1, u1_root, positions=[k - 1]).as_array()
              for k in range(1, q + 1)}
    if beta < q:
        minima["o"] = uniform_point(q).as_array()
    level_of = {lab: (v1_level if lab == "o" else H) for lab in labels}

    cell = 1.0 / grid.M
    tol_eq = 1e-9 * max(1.0, abs(H))
    seen = set()
    images = []
    for s, w, spread, height in saddles_H + saddles_v1:
        key = tuple(np.round(s * grid.M * 8).astype(int))
        if key not in seen:
            seen.add(key)
            images.append((s, w, spread, height))

    labs = sorted(labels.keys(), key=str)
    gates = {}
    for n1, l1 in enumerate(labs):
        for l2 in labs[n1 + 1:]:
            gates[(l1, l2)] = np.array([], dtype=np.int64)

    for s, w, spread, height in images:
        w_full = np.concatenate([w, [-w.sum()]])
        delta = 1e-3 / q
        side_a = _descend_basin(q, beta, s + delta * w_full, minima)
        side_b = _descend_basin(q, beta, s - delta * w_full, minima)
        if side_a is None or side_b is None or side_a == side_b:
            continue
        pair = tuple(sorted((side_a, side_b), key=str))
        if pair not in gates:
            continue
        if any(abs(height - level_of[lab]) > tol_eq for lab in pair):
            continue  # the pass clears one well's level: closures cannot meet
        radius = (math.ceil(0.75 * spread) + 3.5) * cell
        near = np.max(np.abs(grid.coords - s), axis=1) <= radius
        cand = np.flatnonzero(near & reach[pair[0]] & reach[pair[1]] & ~any_member)
        if cand.size == 0:
            continue
        order = np.argsort(fvals[cand], kind="stable")
        cand = cand[order]
        fmin = fvals[cand[0]]
        if abs(fmin - height) > 15.0 * max(span[cand[0]], 1e-15) + 1e-9:
            continue
        tie = 1e-9 * max(1.0, abs(fmin))
        cluster = cand[fvals[cand] <= fmin + tie]
        gates[pair] = np.unique(np.concatenate([gates[pair], cluster]))
    return gates


def minimax_height(
    q: int,
    beta: float,
    a: SimplexPoint,
    b: SimplexPoint,
    M: int,
    grid: SimplexGrid | None = None,
) -> float:
    """Widest-path (minimax) value of F_beta between the grid nodes
    nearest to a and b: the smallest level at which the two nodes are
    connected inside the closed sublevel set.  Exact on the grid graph;
    converges to the continuum height as M grows.
    """
    if q > 5:
        raise DomainError("minimax heights are limited to q <= 5")
    grid = grid if grid is not None else SimplexGrid(q, M)
    fvals = grid.potential_values(beta)
    ia, ib = grid.nearest_node(a), grid.nearest_node(b)
    if ia == ib:
        return float(fvals[ia])
    ea, eb = grid.edges()
    order = np.argsort(fvals, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    # the path must include both endpoints: search prefix sizes above that
    lo = int(max(rank[ia], rank[ib])) + 1
    hi = order.size

    def connected(k: int) -> bool:
        active = np.zeros(order.size, dtype=bool)
        active[order[:k]] = True
        keep = active[ea] & active[eb]
        mat = csr_matrix(
            (np.ones(int(keep.sum()), dtype=np.int8), (ea[keep], eb[keep])),
            shape=(order.size, order.size),
        )
        _, comp = connected_components(mat, directed=False)
        return comp[ia] == comp[ib]

    if not connected(hi):
        raise ResolutionError("endpoints are not connected on the grid")
    while lo < hi:
        mid = (lo + hi) // 2
        if connected(mid):
            hi = mid
        else:
            lo = mid + 1
    return float(fvals[order[lo - 1]])


# ---------------------------------------------------------------------------
# mean-field free energy
# ---------------------------------------------------------------------------

def free_energy(q: int, beta: float) -> float:
    """psi(beta): the smallest potential value over the local minima.

    Equals F_beta(p) up to beta_2 and F_beta(u_1) beyond.
    """
    if beta <= 0:
        raise DomainError(f"beta={beta} must be positive")
    values = []
    if beta < q:
        values.append(critical.potential_at(q, beta, "p"))
    if beta >= critical.beta_s(1, q):
        values.append(critical.potential_at(q, beta, "u1"))
    if not values:  # beta <= beta_1 < q: only the uniform minimum exists
        values.append(critical.potential_at(q, beta, "p"))
    return min(values)


@dataclass(frozen=True)
class FreeEnergyCurve:
    q: int
    betas: np.ndarray
    psi: np.ndarray
    beta2: float
    psi_prime_left: float
    psi_prime_right: float
    jump_analytic: float  # (S(u_1) - S(p)) / beta_2^2 = left - right derivative


def free_energy_curve(q: int, beta_grid: Sequence[float]) -> FreeEnergyCurve:
    """psi along a beta grid plus one-sided derivatives at beta_2.

    The one-sided slopes are central differences taken a half-step off
    beta_2 on either side; analytically they are -S(p)/beta_2^2 and
    -S(u_1)/beta_2^2, so the left-minus-right jump is
    (S(u_1) - S(p))/beta_2^2 > 0.
    """
    betas = np.asarray(list(beta_grid), dtype=float)
    psi = np.array([free_energy(q, b) for b in betas])
    b2 = critical.beta_c(q)
    d = 1e-5
    left = (free_energy(q, b2) - free_energy(q, b2 - 2 * d)) / (2 * d)
    right = (free_energy(q, b2 + 2 * d) - free_energy(q, b2)) / (2 * d)
    u1 = critical.solve_uv(1, q, b2).u
    s_u1 = entropy(family_rep(q, 1, u1, positions=[q - 1]))
    s_p = -math.log(q)
    return FreeEnergyCurve(
        q=q,
        betas=betas,
        psi=psi,
        beta2=b2,
        psi_prime_left=left,
        psi_prime_right=right,
        jump_analytic=(s_u1 - s_p) / b2**2,
    )


def grid_free_energy(q: int, beta: float, M: int) -> float:
    """Brute-force sup of -F_beta over the grid (equals -psi up to O(1/M))."""
    grid = SimplexGrid(q, M)
    return float(np.max(-grid.potential_values(beta)))
