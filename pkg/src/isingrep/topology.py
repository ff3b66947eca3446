"""Torus homology tools: wrap-around parity, non-trivial clusters, orbits.

A simple loop is a wrap-around when it crosses a fixed hyperplane's
outgoing edges an odd number of times; the parity is GF(2)-linear in the
configuration and independent of the hyperplane level.  A component is
non-trivial iff its cycle space contains an odd-parity cycle, which holds
iff some fundamental-cycle generator (itself a simple loop) is odd.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .evens import EdgeConfig, bits_to_mask, source_map
from .lattice import Hyperplane, LatticeError, MultiGraph, hyperplane
from .models import OracleSizeError

__all__ = [
    "ComponentInfo",
    "WindingReport",
    "crossing_parity",
    "classify_components",
    "cnt_vertex_count",
    "xor_action",
    "is_simple_loop",
    "count_disjoint_wraparounds",
    "extract_disjoint_wraparounds",
    "group_orbit_stats",
    "OrbitStats",
]


@dataclass(frozen=True)
class ComponentInfo:
    vertices: tuple[int, ...]
    size: int
    parity: int


@dataclass(frozen=True)
class WindingReport:
    """Per-component wrap-around classification of one configuration."""

    components: tuple[ComponentInfo, ...]
    cnt_vertices: frozenset[int]
    cnt_edge_bits: int
    wraparound_lb: int | None = None

    @property
    def n_nontrivial(self) -> int:
        return sum(1 for c in self.components if c.parity)

    @property
    def cnt_size(self) -> int:
        return len(self.cnt_vertices)


def _check_torus(c: EdgeConfig, h: Hyperplane) -> None:
    if c.graph.torus_period is None or c.graph.edge_dirs is None:
        raise LatticeError("wrap-around analysis needs a torus host")
    for e in h.outgoing:
        if not 0 <= e < c.graph.n_edges:
            raise LatticeError("hyperplane does not match the host")


def crossing_parity(c: EdgeConfig, h: Hyperplane) -> int:
    """Parity of the number of open outgoing edges; linear over XOR."""
    _check_torus(c, h)
    return (c.bits & h.outgoing_bits).bit_count() & 1


def _cross_mask(g: MultiGraph, h: Hyperplane) -> np.ndarray:
    mask = np.zeros(g.n_edges, dtype=np.uint8)
    for e in h.outgoing:
        mask[e] = 1
    return mask


def _parity_labels(c: EdgeConfig, h: Hyperplane):
    g = c.graph
    indptr, adj_edge, adj_other = g.adjacency_csr
    labels = np.empty(g.n_vertices, dtype=np.int32)
    nt_flag = np.empty(g.n_vertices, dtype=np.uint8)
    _kernels.component_parity(
        g.n_vertices, indptr, adj_edge, adj_other, c.mask(),
        _cross_mask(g, h), labels, nt_flag,
    )
    return labels, nt_flag


def classify_components(c: EdgeConfig, h: Hyperplane,
                        count_wraparounds: bool = False) -> WindingReport:
    """Components of the open subgraph with non-triviality flags and C_NT."""
    _check_torus(c, h)
    g = c.graph
    labels, nt_flag = _parity_labels(c, h)
    comps: dict[int, list[int]] = {}
    for v in range(g.n_vertices):
        comps.setdefault(int(labels[v]), []).append(v)
    infos = []
    cnt_vertices: set[int] = set()
    for root in sorted(comps):
        members = comps[root]
        parity = int(nt_flag[root])
        infos.append(ComponentInfo(tuple(members), len(members), parity))
        if parity:
            cnt_vertices.update(members)
    cnt_edge_bits = 0
    for e in c.open_edges():
        if nt_flag[labels[g.edges[e][0]]]:
            cnt_edge_bits |= 1 << e
    lb = None
    if count_wraparounds:
        lb = count_disjoint_wraparounds(c, h)
    return WindingReport(tuple(infos), frozenset(cnt_vertices), cnt_edge_bits, lb)


def cnt_vertex_count(c: EdgeConfig, h: Hyperplane) -> int:
    """|C_NT| (vertex count) without materializing the full report."""
    _check_torus(c, h)
    labels, nt_flag = _parity_labels(c, h)
    return int(nt_flag[labels].sum())


def is_simple_loop(c: EdgeConfig) -> bool:
    """One component in which every touched vertex has degree exactly 2."""
    if c.bits == 0:
        return False
    g = c.graph
    deg = np.zeros(g.n_vertices, dtype=np.int64)
    for e in c.open_edges():
        a, b = g.edges[e]
        deg[a] += 2 if a == b else 1
        if a != b:
            deg[b] += 1
    touched = np.nonzero(deg)[0]
    if not np.all(deg[touched] == 2):
        return False
    labels = _kernels.uf_components(g.n_vertices, g.edge_a, g.edge_b, c.mask())
    return len({int(labels[v]) for v in touched}) == 1


def xor_action(eta: EdgeConfig, gamma: EdgeConfig,
               h: Hyperplane | None = None) -> EdgeConfig:
    """eta XOR gamma for a wrap-around gamma; flips the global parity.

    If eta is even the result is even; if eta was trivial the result is
    guaranteed non-trivial (asserted in debug runs).
    """
    if h is None:
        h = hyperplane(eta.graph, 0)
    if not is_simple_loop(gamma):
        raise ValueError("gamma must be a simple loop")
    if crossing_parity(gamma, h) != 1:
        raise ValueError("gamma must have crossing parity 1")
    if not source_map(eta).is_empty():
        raise ValueError("eta must be even")
    result = eta ^ gamma
    if __debug__:
        if classify_components(eta, h).n_nontrivial == 0:
            assert classify_components(result, h).n_nontrivial > 0
    return result


def _extract_odd_simple_cycle(g: MultiGraph, walk_edges: list[int],
                              cross: np.ndarray) -> int:
    """Odd-parity simple cycle (edge bits) inside an odd closed walk.

    The edges used an odd number of times form an even subgraph whose total
    parity is odd; peeling it into edge-disjoint simple cycles must hit an
    odd one.
    """
    odd_use: set[int] = set()
    for e in walk_edges:
        odd_use.symmetric_difference_update((e,))
    incident: dict[int, list[int]] = {}
    for e in odd_use:
        a, b = g.edges[e]
        incident.setdefault(a, []).append(e)
        if b != a:
            incident.setdefault(b, []).append(e)
    unused = set(odd_use)

    def next_unused(v: int):
        for x in incident.get(v, ()):
            if x in unused:
                return x
        return None

    while unused:
        e0 = min(unused)
        start = g.edges[e0][0]
        stack_v = [start]
        stack_e: list[int] = []
        pos = {start: 0}
        while True:
            e = next_unused(stack_v[-1])
            if e is None:
                break  # start vertex exhausted; pick a fresh walk
            unused.discard(e)
            a, b = g.edges[e]
            w = b if a == stack_v[-1] else a
            stack_e.append(e)
            if w in pos:
                i = pos[w]
                cycle = stack_e[i:]
                if sum(int(cross[x]) for x in cycle) & 1:
                    bits = 0
                    for x in cycle:
                        bits |= 1 << x
                    return bits
                for vv in stack_v[i + 1:]:
                    pos.pop(vv, None)
                del stack_v[i + 1:]
                del stack_e[i:]
            else:
                pos[w] = len(stack_v)
                stack_v.append(w)
    raise AssertionError("no odd cycle inside an odd closed walk")


def extract_disjoint_wraparounds(c: EdgeConfig, h: Hyperplane) -> list[EdgeConfig]:
    """Greedy family of pairwise edge-disjoint wrap-arounds inside c.

    Repeatedly runs a BFS in the parity double cover from the least vertex
    of a non-trivial component, extracts an odd simple cycle from the
    returned shortest odd closed walk, and deletes its edges.  The family
    size is a lower bound for the true maximum, never an overcount.
    """
    _check_torus(c, h)
    g = c.graph
    indptr, adj_edge, adj_other = g.adjacency_csr
    cross = _cross_mask(g, h)
    remaining = c.bits
    loops: list[EdgeConfig] = []
    pred_edge = np.empty(2 * g.n_vertices, dtype=np.int32)
    pred_state = np.empty(2 * g.n_vertices, dtype=np.int32)
    while True:
        cfg = EdgeConfig(g, remaining)
        labels, nt_flag = _parity_labels(cfg, h)
        roots = [v for v in range(g.n_vertices) if nt_flag[v] and labels[v] == v]
        if not roots:
            return loops
        start = min(roots)
        found = _kernels.odd_walk_bfs(
            g.n_vertices, indptr, adj_edge, adj_other,
            bits_to_mask(remaining, g.n_edges), cross,
            start, pred_edge, pred_state,
        )
        if not found:
            raise AssertionError("parity flag without an odd closed walk")
        walk = []
        state = 2 * start + 1
        while state != 2 * start:
            walk.append(int(pred_edge[state]))
            state = int(pred_state[state])
        loop_bits = _extract_odd_simple_cycle(g, walk, cross)
        remaining &= ~loop_bits
        loops.append(EdgeConfig(g, loop_bits))


def count_disjoint_wraparounds(c: EdgeConfig, h: Hyperplane) -> int:
    """Greedy lower bound for the maximal number of edge-disjoint wrap-arounds."""
    return len(extract_disjoint_wraparounds(c, h))


@dataclass(frozen=True)
class OrbitStats:
    """|C_NT| statistics over the XOR orbit of disjoint wrap-arounds."""

    size_probs: dict[int, float]
    p_nontrivial: float
    orbit_log2: int

    def mean_size(self) -> float:
        return sum(k * p for k, p in self.size_probs.items())


def group_orbit_stats(omega: EdgeConfig, wraparounds, h: Hyperplane,
                      eta0: EdgeConfig | None = None, mode: str = "exact",
                      rng: np.random.Generator | None = None,
                      n_samples: int = 4096) -> OrbitStats:
    """Distribution of |C_NT(eta0 XOR gamma_A)| over uniform subsets A.

    The wrap-arounds must be pairwise edge-disjoint subsets of omega and
    eta0 an even subgraph of omega; eta0 XOR gamma_A then has the UEG law
    whenever eta0 does.  ``exact`` mode enumerates all 2^m subsets by Gray
    code (m <= 20); ``sampled`` mode draws subsets with an rng.
    """
    g = omega.graph
    if eta0 is None:
        eta0 = EdgeConfig.empty(g)
    if not source_map(eta0).is_empty():
        raise ValueError("eta0 must be even")
    if eta0.bits & ~omega.bits:
        raise ValueError("eta0 must be a subgraph of omega")
    loops = list(wraparounds)
    used = 0
    for gam in loops:
        if gam.bits & ~omega.bits:
            raise ValueError("wrap-around leaves omega")
        if gam.bits & used:
            raise ValueError("wrap-arounds must be pairwise edge-disjoint")
        used |= gam.bits
    m = len(loops)
    counts: dict[int, int] = {}
    if mode == "exact":
        if m > 20:
            raise OracleSizeError(f"orbit has 2^{m} elements, exact cap is 2^20")
        cur = eta0
        for i in range(1 << m):
            if i:
                cur = cur ^ loops[(i & -i).bit_length() - 1]
            s = cnt_vertex_count(cur, h)
            counts[s] = counts.get(s, 0) + 1
        total = 1 << m
    elif mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        for _ in range(n_samples):
            cur = eta0
            for j in range(m):
                if rng.random() < 0.5:
                    cur = cur ^ loops[j]
            s = cnt_vertex_count(cur, h)
            counts[s] = counts.get(s, 0) + 1
        total = n_samples
    else:
        raise ValueError(f"unknown mode {mode!r}")
    size_probs = {k: v / total for k, v in counts.items()}
    p_nt = sum(p for k, p in size_probs.items() if k > 0)
    return OrbitStats(size_probs, p_nt, m)
