"""Finite lattice builders: boxes, tori, hexagonal graphs, slabs, quotients.

All builders are pure functions returning immutable :class:`MultiGraph`
values with deterministic vertex and edge orderings, so percolation
configurations stored as bit vectors are reproducible across runs.
Edge indices are assigned in lexicographic order of
``(generating endpoint coordinate, direction)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "LatticeError",
    "MultiGraph",
    "BoundaryCondition",
    "Hyperplane",
    "EdgeSubset",
    "build_box",
    "build_torus",
    "build_hexagonal_torus",
    "build_hexagonal_patch",
    "build_slab_sheet",
    "build_cut_lattice",
    "path_graph",
    "cycle_graph",
    "quotient",
    "vertex_classes",
    "hyperplane",
    "edge_subset_by_coords",
]

# Edge indices are packed into int32 arrays inside the kernels.
MAX_EDGES = 2**31 - 1


class LatticeError(ValueError):
    """Invalid builder arguments or incompatible graph inputs."""


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Finite multigraph with stable vertex and edge indices.

    Parallel edges and self-loops are permitted (quotients create both).
    ``coords``, when present, embeds the vertices in Z^d with distinct
    coordinates.  ``edge_dirs`` labels each edge with its lattice
    direction (used for torus homology).  ``faces`` lists the internal
    faces of a planar embedding as tuples of edge indices; the outer face
    is implicit.  ``torus_period`` is ``2n`` for periodic hosts.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    coords: tuple[tuple[int, ...], ...] | None = None
    edge_dirs: tuple[int, ...] | None = None
    boundary: frozenset[int] = frozenset()
    faces: tuple[tuple[int, ...], ...] | None = None
    torus_period: int | None = None

    def __post_init__(self):
        if self.n_vertices < 0:
            raise LatticeError("negative vertex count")
        if len(self.edges) > MAX_EDGES:
            raise LatticeError("edge count overflows the 32-bit edge index width")
        for a, b in self.edges:
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise LatticeError(f"edge ({a},{b}) has an out-of-range endpoint")
        if self.coords is not None:
            if len(self.coords) != self.n_vertices:
                raise LatticeError("embedding size does not match vertex count")
            if len(set(self.coords)) != self.n_vertices:
                raise LatticeError("embedding assigns duplicate coordinates")
        if self.edge_dirs is not None and len(self.edge_dirs) != len(self.edges):
            raise LatticeError("edge label count does not match edge count")
        if not all(0 <= v < self.n_vertices for v in self.boundary):
            raise LatticeError("boundary vertex out of range")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_a(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int32)

    @cached_property
    def edge_b(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int32)

    @cached_property
    def coord_array(self) -> np.ndarray:
        if self.coords is None:
            raise LatticeError("graph has no geometric embedding")
        return np.array(self.coords, dtype=np.int64)

    @cached_property
    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR incidence lists ``(indptr, adj_edge, adj_other)``.

        For vertex v the incident (edge index, other endpoint) pairs sit in
        ``adj_edge[indptr[v]:indptr[v+1]]`` sorted by edge index; a self-loop
        appears twice.  Shared by the kernels for BFS forests.
        """
        deg = np.zeros(self.n_vertices + 1, dtype=np.int64)
        for a, b in self.edges:
            deg[a + 1] += 1
            deg[b + 1] += 1
        indptr = np.cumsum(deg)
        adj_edge = np.empty(indptr[-1], dtype=np.int32)
        adj_other = np.empty(indptr[-1], dtype=np.int32)
        fill = indptr[:-1].copy()
        for e, (a, b) in enumerate(self.edges):
            adj_edge[fill[a]] = e
            adj_other[fill[a]] = b
            fill[a] += 1
            adj_edge[fill[b]] = e
            adj_other[fill[b]] = a
            fill[b] += 1
        return indptr, adj_edge, adj_other

    @cached_property
    def _coord_index(self) -> dict:
        if self.coords is None:
            raise LatticeError("graph has no geometric embedding")
        return {c: i for i, c in enumerate(self.coords)}

    def vertex_at(self, coord) -> int:
        return self._coord_index[tuple(coord)]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(deg, self.edge_a, 1)
        np.add.at(deg, self.edge_b, 1)
        return deg

    @property
    def dimension(self) -> int | None:
        if self.coords is None or not self.coords:
            return None
        return len(self.coords[0])

    def to_json_dict(self) -> dict:
        """Golden-file form: {dimension, vertices, edges:[[a,b,label]]}."""
        dirs = self.edge_dirs or (-1,) * self.n_edges
        return {
            "dimension": self.dimension,
            "vertices": [list(c) for c in self.coords] if self.coords else None,
            "edges": [[a, b, d] for (a, b), d in zip(self.edges, dirs)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class BoundaryCondition:
    """A partition of the designated boundary vertices.

    Free = all singletons, wired = one class; every partition in between
    induces a quotient multigraph via :func:`quotient`.
    """

    classes: tuple[frozenset[int], ...]

    @staticmethod
    def free(g: MultiGraph) -> "BoundaryCondition":
        return BoundaryCondition(tuple(frozenset((v,)) for v in sorted(g.boundary)))

    @staticmethod
    def wired(g: MultiGraph) -> "BoundaryCondition":
        if not g.boundary:
            return BoundaryCondition(())
        return BoundaryCondition((frozenset(g.boundary),))

    def validate(self, g: MultiGraph) -> None:
        seen: set[int] = set()
        for cls in self.classes:
            if not cls:
                raise LatticeError("empty boundary class")
            if cls & seen:
                raise LatticeError("boundary classes are not disjoint")
            seen |= cls
        if seen != set(g.boundary):
            raise LatticeError("boundary classes do not cover the boundary")

    def is_free(self) -> bool:
        return all(len(cls) == 1 for cls in self.classes)

    def refines(self, other: "BoundaryCondition") -> bool:
        """True if every class of self is contained in a class of other."""
        return all(any(cls <= big for big in other.classes) for cls in self.classes)


@dataclass(frozen=True)
class Hyperplane:
    """Classification of the torus edges crossing {x_axis = level - 1/2}..{+1/2}.

    ``outgoing`` edges run (v, v+e1) from the hyperplane, ``incoming`` edges
    run into it; together they are all direction-``axis`` edges crossing the
    level.  A percolation configuration wraps around the torus iff it holds
    an odd number of outgoing edges of any one level (the parity does not
    depend on the level).
    """

    axis: int
    level: int
    outgoing: tuple[int, ...]
    incoming: tuple[int, ...]

    @cached_property
    def outgoing_bits(self) -> int:
        mask = 0
        for e in self.outgoing:
            mask |= 1 << e
        return mask


@dataclass(frozen=True, eq=False)
class EdgeSubset:
    """A designated edge subset of a host graph (slab, sheet, window).

    Keeps host edge indices so that marginals of host-graph measures
    restrict onto the subset directly.
    """

    host: MultiGraph
    edge_indices: tuple[int, ...]

    def graph(self) -> MultiGraph:
        """Materialize the subset as a standalone graph on the host's vertices."""
        edges = tuple(self.host.edges[e] for e in self.edge_indices)
        dirs = None
        if self.host.edge_dirs is not None:
            dirs = tuple(self.host.edge_dirs[e] for e in self.edge_indices)
        touched = {v for e in self.edge_indices for v in self.host.edges[e]}
        return MultiGraph(
            n_vertices=self.host.n_vertices,
            edges=edges,
            coords=self.host.coords,
            edge_dirs=dirs,
            boundary=frozenset(self.host.boundary & touched),
        )


def _box_vertices(d: int, n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-n, n + 1), repeat=d))


def build_box(d: int, n: int) -> MultiGraph:
    """Induced subgraph of Z^d on the box [-n, n]^d.

    Boundary vertices are the geometric faces (some |coordinate| equals n).
    """
    if d < 1:
        raise LatticeError("dimension must be >= 1")
    if n < 0:
        raise LatticeError("radius must be >= 0")
    if (2 * n + 1) ** d * d > MAX_EDGES:
        raise LatticeError("box exceeds the edge-index width")
    verts = _box_vertices(d, n)
    index = {c: i for i, c in enumerate(verts)}
    edges = []
    dirs = []
    for c in verts:
        for k in range(d):
            w = list(c)
            w[k] += 1
            w = tuple(w)
            if w in index:
                edges.append((index[c], index[w]))
                dirs.append(k)
    boundary = frozenset(i for i, c in enumerate(verts) if any(abs(x) == n for x in c))
    faces = None
    if d == 2:
        faces = _square_faces(verts, index, edges)
    return MultiGraph(
        n_vertices=len(verts),
        edges=tuple(edges),
        coords=tuple(verts),
        edge_dirs=tuple(dirs),
        boundary=boundary,
        faces=faces,
    )


def _square_faces(verts, index, edges) -> tuple[tuple[int, ...], ...]:
    """Unit-square faces of a planar Z^2 subgraph, as edge-index 4-tuples."""
    edge_index = {}
    for e, (a, b) in enumerate(edges):
        edge_index[(a, b)] = e
        edge_index[(b, a)] = e
    faces = []
    for (x, y), i in index.items():
        corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        if not all(c in index for c in corners):
            continue
        ring = [index[c] for c in corners]
        try:
            face = tuple(
                edge_index[(ring[j], ring[(j + 1) % 4])] for j in range(4)
            )
        except KeyError:
            continue
        faces.append(face)
    return tuple(faces)


def build_torus(d: int, n: int) -> MultiGraph:
    """Quotient torus of the box by 2nZ^d, kept as a multigraph.

    (2n)^d vertices with coordinates in [0, 2n)^d and d*(2n)^d edges, each
    labeled with its lattice direction.  For n=1 every edge pair is parallel
    and both copies are kept.
    """
    if d < 1:
        raise LatticeError("dimension must be >= 1")
    if n < 1:
        raise LatticeError("half-period must be >= 1")
    period = 2 * n
    if period**d * d > MAX_EDGES:
        raise LatticeError("torus exceeds the edge-index width")
    verts = list(itertools.product(range(period), repeat=d))
    index = {c: i for i, c in enumerate(verts)}
    edges = []
    dirs = []
    for c in verts:
        for k in range(d):
            w = list(c)
            w[k] = (w[k] + 1) % period
            edges.append((index[c], index[tuple(w)]))
            dirs.append(k)
    return MultiGraph(
        n_vertices=len(verts),
        edges=tuple(edges),
        coords=tuple(verts),
        edge_dirs=tuple(dirs),
        boundary=frozenset(),
        torus_period=period,
    )


def build_hexagonal_torus(k: int) -> MultiGraph:
    """Trivalent periodic quotient of the hexagonal lattice, period k.

    Brick-wall form on [0,2k)^2: all horizontal edges, a vertical edge at
    (x,y) iff x+y is even.  4k^2 vertices, 6k^2 edges, every degree 3.
    Faces (2k^2 hexagonal bricks) are attached for k >= 2; at k=1 the bricks
    self-touch and no face list is emitted.
    """
    if k < 1:
        raise LatticeError("period must be >= 1")
    m = 2 * k
    verts = list(itertools.product(range(m), repeat=2))
    index = {c: i for i, c in enumerate(verts)}
    edges = []
    dirs = []
    edge_at = {}
    for x, y in verts:
        edge_at[("h", x, y)] = len(edges)
        edges.append((index[(x, y)], index[((x + 1) % m, y)]))
        dirs.append(0)
        if (x + y) % 2 == 0:
            edge_at[("v", x, y)] = len(edges)
            edges.append((index[(x, y)], index[(x, (y + 1) % m)]))
            dirs.append(1)
    faces = None
    if k >= 2:
        face_list = []
        for x, y in verts:
            if (x + y) % 2 != 0:
                continue
            face_list.append(
                (
                    edge_at[("h", x, y)],
                    edge_at[("h", (x + 1) % m, y)],
                    edge_at[("v", (x + 2) % m, y)],
                    edge_at[("h", (x + 1) % m, (y + 1) % m)],
                    edge_at[("h", x, (y + 1) % m)],
                    edge_at[("v", x, y)],
                )
            )
        faces = tuple(face_list)
    return MultiGraph(
        n_vertices=len(verts),
        edges=tuple(edges),
        coords=tuple(verts),
        edge_dirs=tuple(dirs),
        boundary=frozenset(),
        faces=faces,
        torus_period=m,
    )


def build_hexagonal_patch(bricks) -> MultiGraph:
    """Finite hexagonal (brick-wall) patch with planar faces.

    ``bricks`` is either an int (a horizontal strip of that many hexagons)
    or an iterable of brick anchors (x, y) with x+y even.  Each brick at
    (x,y) occupies corners (x..x+2) x (y..y+1).  Boundary vertices are the
    ones on the outer face.
    """
    if isinstance(bricks, int):
        if bricks < 1:
            raise LatticeError("need at least one hexagon")
        anchors = [(2 * i, 0) for i in range(bricks)]
    else:
        anchors = [tuple(a) for a in bricks]
        for x, y in anchors:
            if (x + y) % 2 != 0:
                raise LatticeError(f"brick anchor {(x, y)} must have even x+y")
    corner_set = set()
    for x, y in anchors:
        for dx in range(3):
            for dy in range(2):
                corner_set.add((x + dx, y + dy))
    verts = sorted(corner_set)
    index = {c: i for i, c in enumerate(verts)}

    def brick_edges(x, y):
        return [
            ((x, y), (x + 1, y), 0),
            ((x + 1, y), (x + 2, y), 0),
            ((x, y + 1), (x + 1, y + 1), 0),
            ((x + 1, y + 1), (x + 2, y + 1), 0),
            ((x, y), (x, y + 1), 1),
            ((x + 2, y), (x + 2, y + 1), 1),
        ]

    edge_set = set()
    for x, y in anchors:
        for a, b, k in brick_edges(x, y):
            edge_set.add((a, b, k))
    ordered = sorted(edge_set)
    edges = tuple((index[a], index[b]) for a, b, _ in ordered)
    dirs = tuple(k for _, _, k in ordered)
    edge_pos = {abk: e for e, abk in enumerate(ordered)}
    faces = tuple(
        tuple(edge_pos[abk] for abk in brick_edges(x, y)) for x, y in anchors
    )
    face_count = np.zeros(len(edges), dtype=np.int64)
    for f in faces:
        for e in f:
            face_count[e] += 1
    boundary = frozenset(
        v for e, cnt in enumerate(face_count) if cnt < 2 for v in edges[e]
    )
    return MultiGraph(
        n_vertices=len(verts),
        edges=edges,
        coords=tuple(verts),
        edge_dirs=dirs,
        boundary=boundary,
        faces=faces,
    )


def build_slab_sheet(kind: str, d: int, n: int) -> EdgeSubset:
    """Designated sheet/slab edges inside the host box Lambda_n of Z^d.

    ``hyperplane-sheet`` (d >= 3): all edges with both endpoints on the
    hyperplane {x_d = 0}.  ``two-layer-slab``: all edges with both endpoints
    in {x_d in {0, 1}}.  Returned as an edge subset of the host so exact
    marginals of host measures restrict onto it.
    """
    host = build_box(d, n)
    if kind == "hyperplane-sheet":
        if d < 3:
            raise LatticeError("hyperplane-sheet requires d >= 3")
        keep = {0}
    elif kind == "two-layer-slab":
        if n < 1:
            raise LatticeError("slab needs n >= 1")
        keep = {0, 1}
    else:
        raise LatticeError(f"unknown slab/sheet kind {kind!r}")
    coords = host.coords
    sub = tuple(
        e
        for e, (a, b) in enumerate(host.edges)
        if coords[a][-1] in keep and coords[b][-1] in keep
    )
    return EdgeSubset(host=host, edge_indices=sub)


def _crossing_edges(g: MultiGraph, axis: int, level: int) -> list[int]:
    coords = g.coords
    out = []
    for e, (a, b) in enumerate(g.edges):
        if g.edge_dirs[e] == axis and coords[a][axis] == level:
            out.append(e)
    return out


def build_cut_lattice(base: str, n: int, kept_edge, d: int = 2, level: int = 0) -> MultiGraph:
    """Base graph minus all edges crossing a fixed hyperplane, except one.

    ``base`` is "box" (Z^d box of radius n) or "hexagonal" (strip of n
    hexagons).  The cut removes the direction-0 edges from {x_0 = level} to
    {x_0 = level+1} ("box") or the vertical edges at height ``level``
    ("hexagonal"), sparing ``kept_edge`` (an edge index of the base graph,
    or None when the crossing set is empty).
    """
    if base == "box":
        g = build_box(d, n)
        crossing = set(_crossing_edges(g, 0, level))
    elif base == "hexagonal":
        g = build_hexagonal_patch(n)
        crossing = {
            e
            for e, (a, _) in enumerate(g.edges)
            if g.edge_dirs[e] == 1 and g.coords[a][1] == level
        }
    else:
        raise LatticeError(f"unknown base {base!r}")
    if kept_edge is None:
        if crossing:
            raise LatticeError("kept_edge required: the hyperplane carries edges")
        return g
    if kept_edge not in crossing:
        raise LatticeError(f"edge {kept_edge} does not lie on the cut hyperplane")
    drop = crossing - {kept_edge}
    keep = [e for e in range(g.n_edges) if e not in drop]
    return MultiGraph(
        n_vertices=g.n_vertices,
        edges=tuple(g.edges[e] for e in keep),
        coords=g.coords,
        edge_dirs=tuple(g.edge_dirs[e] for e in keep),
        boundary=g.boundary,
    )


def path_graph(k: int) -> MultiGraph:
    """Path with k edges; endpoints form the boundary."""
    if k < 1:
        raise LatticeError("path needs at least one edge")
    return MultiGraph(
        n_vertices=k + 1,
        edges=tuple((i, i + 1) for i in range(k)),
        coords=tuple((i,) for i in range(k + 1)),
        boundary=frozenset((0, k)),
    )


def cycle_graph(k: int) -> MultiGraph:
    """Cycle C_k (k=2 gives a parallel pair, k=1 a self-loop); all vertices boundary."""
    if k < 1:
        raise LatticeError("cycle needs at least one edge")
    nv = max(k, 1) if k > 1 else 1
    edges = tuple((i, (i + 1) % nv) for i in range(k)) if k > 1 else ((0, 0),)
    return MultiGraph(
        n_vertices=nv,
        edges=edges,
        boundary=frozenset(range(nv)),
    )


def vertex_classes(g: MultiGraph, bc: BoundaryCondition | None) -> np.ndarray:
    """Old-vertex -> quotient-vertex map for a boundary condition.

    Classes collapse onto compact new labels that preserve the order of the
    smallest original member; non-boundary vertices keep their relative
    order.
    """
    rep = np.arange(g.n_vertices, dtype=np.int64)
    if bc is not None:
        bc.validate(g)
        for cls in bc.classes:
            r = min(cls)
            for v in cls:
                rep[v] = r
    reps = np.unique(rep)
    newid = {int(r): i for i, r in enumerate(reps)}
    return np.array([newid[int(rep[v])] for v in range(g.n_vertices)], dtype=np.int64)


def quotient(g: MultiGraph, bc: BoundaryCondition | None) -> MultiGraph:
    """Quotient multigraph G/~xi; edge i of the result corresponds to edge i of g."""
    if bc is None or bc.is_free():
        return g
    vmap = vertex_classes(g, bc)
    n_new = int(vmap.max()) + 1 if g.n_vertices else 0
    edges = tuple((int(vmap[a]), int(vmap[b])) for a, b in g.edges)
    return MultiGraph(
        n_vertices=n_new,
        edges=edges,
        coords=None,
        edge_dirs=g.edge_dirs,
        boundary=frozenset(int(vmap[v]) for v in g.boundary),
        torus_period=g.torus_period,
    )


def hyperplane(g: MultiGraph, level: int) -> Hyperplane:
    """Classify the direction-0 torus edges crossing coordinate level ``level``."""
    if g.torus_period is None or g.edge_dirs is None or g.coords is None:
        raise LatticeError("hyperplanes need a torus host with direction labels")
    period = g.torus_period
    if not (0 <= level < period):
        raise LatticeError(f"level {level} outside [0, {period})")
    outgoing = tuple(_crossing_edges(g, 0, level))
    incoming = tuple(_crossing_edges(g, 0, (level - 1) % period))
    return Hyperplane(axis=0, level=level, outgoing=outgoing, incoming=incoming)


def edge_subset_by_coords(host: MultiGraph, sub: MultiGraph) -> np.ndarray:
    """Host edge index of each edge of ``sub``, matched through coordinates.

    Edge i of ``sub`` maps to ``result[i]`` in the host, so bit layouts of
    the two graphs align positionally.  Requires embeddings on both graphs
    and that every sub edge exists in the host.
    """
    if host.coords is None or sub.coords is None:
        raise LatticeError("coordinate matching requires embeddings")
    lookup = {}
    for e, (a, b) in enumerate(host.edges):
        ca, cb = host.coords[a], host.coords[b]
        lookup[(ca, cb)] = e
        lookup[(cb, ca)] = e
    out = np.empty(sub.n_edges, dtype=np.int64)
    for e, (a, b) in enumerate(sub.edges):
        key = (sub.coords[a], sub.coords[b])
        if key not in lookup:
            raise LatticeError(f"sub edge {key} not present in host")
        out[e] = lookup[key]
    return out
