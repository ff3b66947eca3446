"""GF(2) cycle-space algebra: source map, even subgraphs, uniform sampling.

Percolation configurations are bit vectors over the edge index space of a
host graph; symmetric difference (XOR) makes them a Z_2-vector space and
the even subgraphs form the kernel of the source map.  The uniform even
subgraph (UEG) is the Haar measure on that kernel, sampled by flipping
fair coins on a fundamental cycle basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import BoundaryCondition, MultiGraph, quotient

__all__ = [
    "EdgeConfig",
    "SourceSet",
    "CycleBasis",
    "bits_to_mask",
    "mask_to_bits",
    "source_map",
    "is_even",
    "cycle_basis",
    "count_even_log2",
    "kappa",
    "sample_ueg",
    "sample_wired_ueg",
    "marginal_ueg_exact",
    "joint_marginal_independence_tv",
    "sample_uog",
    "gf2_reduce",
    "gf2_rank",
    "span_members",
]


def bits_to_mask(bits: int, n: int) -> np.ndarray:
    """Bit-packed int -> uint8 0/1 array of length n (bit i = index i)."""
    if bits < 0:
        raise ValueError("negative bit pattern")
    raw = np.frombuffer(bits.to_bytes((n + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little")


def mask_to_bits(mask: np.ndarray) -> int:
    """uint8/bool 0-1 array -> bit-packed int."""
    packed = np.packbits(mask.astype(np.uint8, copy=False), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


@dataclass(frozen=True)
class EdgeConfig:
    """Subset of edges of a host graph, one bit per edge index (1 = open)."""

    graph: MultiGraph
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.graph.n_edges:
            raise ValueError("config bits exceed the host edge count")

    @staticmethod
    def empty(g: MultiGraph) -> "EdgeConfig":
        return EdgeConfig(g, 0)

    @staticmethod
    def full(g: MultiGraph) -> "EdgeConfig":
        return EdgeConfig(g, (1 << g.n_edges) - 1)

    @staticmethod
    def from_edges(g: MultiGraph, edges) -> "EdgeConfig":
        bits = 0
        for e in edges:
            bits |= 1 << e
        return EdgeConfig(g, bits)

    def __xor__(self, other: "EdgeConfig") -> "EdgeConfig":
        self._check_host(other)
        return EdgeConfig(self.graph, self.bits ^ other.bits)

    def __and__(self, other: "EdgeConfig") -> "EdgeConfig":
        self._check_host(other)
        return EdgeConfig(self.graph, self.bits & other.bits)

    def __or__(self, other: "EdgeConfig") -> "EdgeConfig":
        self._check_host(other)
        return EdgeConfig(self.graph, self.bits | other.bits)

    def _check_host(self, other: "EdgeConfig") -> None:
        if other.graph is not self.graph:
            raise ValueError("configs live on different hosts")

    def open_count(self) -> int:
        """o(w): number of open edges."""
        return self.bits.bit_count()

    def is_open(self, e: int) -> bool:
        return bool((self.bits >> e) & 1)

    def open_edges(self) -> list[int]:
        return [e for e in range(self.graph.n_edges) if (self.bits >> e) & 1]

    def mask(self) -> np.ndarray:
        return bits_to_mask(self.bits, self.graph.n_edges)

    def to_hex(self) -> str:
        width = max(1, (self.graph.n_edges + 3) // 4)
        return format(self.bits, f"0{width}x")

    @staticmethod
    def from_hex(g: MultiGraph, text: str) -> "EdgeConfig":
        return EdgeConfig(g, int(text, 16))


@dataclass(frozen=True)
class SourceSet:
    """Vertices of odd degree (one bit per vertex); always evenly many."""

    graph: MultiGraph
    bits: int

    def vertices(self) -> list[int]:
        return [v for v in range(self.graph.n_vertices) if (self.bits >> v) & 1]

    def __xor__(self, other: "SourceSet") -> "SourceSet":
        if other.graph is not self.graph:
            raise ValueError("source sets live on different hosts")
        return SourceSet(self.graph, self.bits ^ other.bits)

    def is_empty(self) -> bool:
        return self.bits == 0


def source_map(c: EdgeConfig) -> SourceSet:
    """dw: set of vertices with odd open degree (a self-loop adds 2)."""
    bits = 0
    cb = c.bits
    for a, b in c.graph.edges:
        if cb & 1:
            bits ^= (1 << a) ^ (1 << b)
        cb >>= 1
        if not cb:
            break
    return SourceSet(c.graph, bits)


def is_even(c: EdgeConfig, bc: BoundaryCondition | None = None) -> bool:
    """True iff the quotient configuration c^xi is sourceless."""
    if bc is None or bc.is_free():
        return source_map(c).bits == 0
    q = quotient(c.graph, bc)
    return source_map(EdgeConfig(q, c.bits)).bits == 0


def kappa(g: MultiGraph, bits: int) -> int:
    """Number of components of the open subgraph, isolated vertices included."""
    labels = _kernels.uf_components(
        g.n_vertices, g.edge_a, g.edge_b, bits_to_mask(bits, g.n_edges)
    )
    return len(np.unique(labels)) if g.n_vertices else 0


def count_even_log2(c: EdgeConfig) -> int:
    """log2 of the number of even spanning subgraphs of (V, E_c).

    Equals kappa(c) + o(c) - |V|: one independent fair coin per chord of a
    spanning forest of the open subgraph.
    """
    return kappa(c.graph, c.bits) + c.open_count() - c.graph.n_vertices


@dataclass(frozen=True)
class CycleBasis:
    """Fundamental cycle basis of the open subgraph of a host.

    One generator per non-forest open edge; each generator is an even
    configuration containing exactly its own chord among the chords.
    """

    graph: MultiGraph
    forest_edges: tuple[int, ...]
    chord_edges: tuple[int, ...]
    generators: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.generators)


def cycle_basis(g: MultiGraph, open_bits: int | None = None) -> CycleBasis:
    """Deterministic fundamental cycle basis (BFS forest, lowest index first)."""
    if open_bits is None:
        open_bits = (1 << g.n_edges) - 1
    indptr, adj_edge, adj_other = g.adjacency_csr
    visited = np.zeros(g.n_vertices, dtype=bool)
    parent_edge = np.full(g.n_vertices, -1, dtype=np.int64)
    parent_vertex = np.full(g.n_vertices, -1, dtype=np.int64)
    # path_bits[v] = edge set of the forest path root -> v, as a bit int
    path_bits: list[int] = [0] * g.n_vertices
    forest = []
    order = []
    for start in range(g.n_vertices):
        if visited[start]:
            continue
        visited[start] = True
        queue = [start]
        order.append(start)
        while queue:
            v = queue.pop(0)
            for idx in range(indptr[v], indptr[v + 1]):
                e = int(adj_edge[idx])
                if not (open_bits >> e) & 1:
                    continue
                w = int(adj_other[idx])
                if not visited[w]:
                    visited[w] = True
                    parent_edge[w] = e
                    parent_vertex[w] = v
                    path_bits[w] = path_bits[v] | (1 << e)
                    forest.append(e)
                    queue.append(w)
    forest_set = set(forest)
    chords = []
    gens = []
    for e in range(g.n_edges):
        if not (open_bits >> e) & 1 or e in forest_set:
            continue
        a, b = g.edges[e]
        chords.append(e)
        gens.append(path_bits[a] ^ path_bits[b] | (1 << e))
    return CycleBasis(
        graph=g,
        forest_edges=tuple(sorted(forest_set)),
        chord_edges=tuple(chords),
        generators=tuple(gens),
    )


def sample_ueg(c: EdgeConfig, rng: np.random.Generator) -> EdgeConfig:
    """Uniform even subgraph of the open subgraph of c (Haar on its kernel)."""
    g = c.graph
    indptr, adj_edge, adj_other = g.adjacency_csr
    open_mask = c.mask()
    coins = (rng.random(g.n_edges) < 0.5).astype(np.uint8)
    out = np.zeros(g.n_edges, dtype=np.uint8)
    _kernels.ueg_sample(
        g.n_vertices, indptr, adj_edge, adj_other, g.edge_a, g.edge_b,
        open_mask, coins, out,
    )
    return EdgeConfig(g, mask_to_bits(out))


def sample_wired_ueg(
    g: MultiGraph, bc: BoundaryCondition | None, rng: np.random.Generator
) -> EdgeConfig:
    """Uniform sample from the even subgraphs with boundary condition xi.

    Sampled as the UEG of the quotient graph and pulled back through the
    index-preserving edge correspondence.
    """
    q = quotient(g, bc)
    eta = sample_ueg(EdgeConfig.full(q), rng)
    return EdgeConfig(g, eta.bits)


def gf2_reduce(masks) -> list[int]:
    """Row-reduce bit-int vectors over GF(2); returns a basis of their span."""
    basis: list[int] = []
    for m in masks:
        m = int(m)
        for b in basis:
            low = b & -b
            if m & low:
                m ^= b
        if m:
            basis.append(m)
            basis.sort(key=lambda x: x & -x)
    return basis


def gf2_rank(masks) -> int:
    return len(gf2_reduce(masks))


def span_members(basis: list[int]):
    """Iterate the 2^rank span of a GF(2) basis by Gray code (starts at 0)."""
    yield 0
    cur = 0
    for i in range(1, 1 << len(basis)):
        cur ^= basis[(i & -i).bit_length() - 1]
        yield cur


MARGINAL_RANK_CAP = 30


def _restricted_generators(g: MultiGraph, sub_edges, open_bits: int | None):
    cb = cycle_basis(g, open_bits)
    sub = list(sub_edges)
    restricted = []
    for gen in cb.generators:
        m = 0
        for i, e in enumerate(sub):
            if (gen >> int(e)) & 1:
                m |= 1 << i
        restricted.append(m)
    return gf2_reduce(restricted)


def marginal_ueg_exact(
    g: MultiGraph,
    sub_edges,
    bc: BoundaryCondition | None = None,
    ambient: EdgeConfig | None = None,
):
    """Exact marginal of the UEG on a list of host edge indices.

    The restriction map is a group homomorphism, so the marginal is the
    uniform measure on the GF(2) span of the cycle-basis generators
    restricted to the sub-edge coordinates; bit i of the result indexes
    ``sub_edges[i]``.  ``bc`` takes the UEG of the quotient graph,
    ``ambient`` the UEG of an open subgraph (mutually exclusive).
    """
    from .oracle import Distribution, OracleSizeError

    if bc is not None and ambient is not None:
        raise ValueError("give a boundary condition or an ambient config, not both")
    host = g
    open_bits = None
    if bc is not None:
        host = quotient(g, bc)
    if ambient is not None:
        if ambient.graph is not g:
            raise ValueError("ambient config lives on a different host")
        open_bits = ambient.bits
    basis = _restricted_generators(host, sub_edges, open_bits)
    if len(basis) > MARGINAL_RANK_CAP:
        raise OracleSizeError(
            f"marginal span rank {len(basis)} exceeds cap {MARGINAL_RANK_CAP}"
        )
    n = len(list(sub_edges))
    share = 1.0 / (1 << len(basis))
    probs = {m: share for m in span_members(basis)}
    return Distribution(graph=g, nbits=n, probs=probs, kind="edges",
                        edge_labels=tuple(int(e) for e in sub_edges))


def joint_marginal_independence_tv(
    g: MultiGraph,
    sub1,
    sub2,
    bc: BoundaryCondition | None = None,
) -> float:
    """Exact TV between the UEG joint marginal on (sub1, sub2) and the product.

    Both laws are uniform on GF(2) subspaces (the joint span S and the
    product of the projections S1 x S3), and S is a subgroup of S1 x S3, so
    TV = 1 - 2^(rank S - rank S1 - rank S3).  Works at any host size.
    """
    host = quotient(g, bc) if bc is not None else g
    sub1 = [int(e) for e in sub1]
    sub2 = [int(e) for e in sub2]
    if set(sub1) & set(sub2):
        raise ValueError("edge sets must be disjoint")
    r_joint = len(_restricted_generators(host, sub1 + sub2, None))
    r1 = len(_restricted_generators(host, sub1, None))
    r2 = len(_restricted_generators(host, sub2, None))
    return 1.0 - 2.0 ** (r_joint - r1 - r2)


def is_perfect_matching(c: EdgeConfig) -> bool:
    deg = np.zeros(c.graph.n_vertices, dtype=np.int64)
    for e in c.open_edges():
        a, b = c.graph.edges[e]
        if a == b:
            return False
        deg[a] += 1
        deg[b] += 1
    return bool(np.all(deg == 1))


def sample_uog(
    g: MultiGraph, dimerisation: EdgeConfig, rng: np.random.Generator
) -> EdgeConfig:
    """Uniform odd subgraph: a fixed dimerisation XOR the UEG of the host."""
    if dimerisation.graph is not g:
        raise ValueError("dimerisation lives on a different host")
    if not is_perfect_matching(dimerisation):
        raise ValueError("dimerisation is not a perfect matching")
    eta = sample_ueg(EdgeConfig.full(g), rng)
    return dimerisation ^ eta
