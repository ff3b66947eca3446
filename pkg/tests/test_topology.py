import numpy as np
import pytest

from _bruteforce import all_simple_cycles, max_disjoint_packing
from isingrep.evens import EdgeConfig
from isingrep.lattice import LatticeError, build_torus, hyperplane
from isingrep.topology import (
    classify_components,
    cnt_vertex_count,
    count_disjoint_wraparounds,
    crossing_parity,
    extract_disjoint_wraparounds,
    group_orbit_stats,
    is_simple_loop,
    xor_action,
)


def straight_cycle(t, direction, offsets):
    """All direction-`direction` edges whose transverse coordinates match."""
    edges = []
    for e in range(t.n_edges):
        if t.edge_dirs[e] != direction:
            continue
        c = t.coords[t.edges[e][0]]
        trans = tuple(x for k, x in enumerate(c) if k != direction)
        if trans == offsets:
            edges.append(e)
    return EdgeConfig.from_edges(t, edges)


def test_crossing_parity_examples(torus22):
    h = hyperplane(torus22, 0)
    row = straight_cycle(torus22, 0, (0,))
    assert crossing_parity(row, h) == 1
    face = EdgeConfig.from_edges(
        torus22,
        [e for e in range(torus22.n_edges)
         if set(torus22.edges[e]) <= {torus22.vertex_at((0, 0)),
                                      torus22.vertex_at((1, 0)),
                                      torus22.vertex_at((0, 1)),
                                      torus22.vertex_at((1, 1))}],
    )
    assert face.open_count() == 4
    assert crossing_parity(face, h) == 0
    assert crossing_parity(row ^ face, h) == 1


def test_crossing_parity_linear(torus22):
    rng = np.random.default_rng(0)
    h = hyperplane(torus22, 1)
    for _ in range(40):
        a = EdgeConfig(torus22, int(rng.integers(0, 1 << 32)))
        b = EdgeConfig(torus22, int(rng.integers(0, 1 << 32)))
        assert crossing_parity(a ^ b, h) == (
            crossing_parity(a, h) ^ crossing_parity(b, h)
        )


def test_classify_components_examples(torus22):
    h = hyperplane(torus22, 0)
    row = straight_cycle(torus22, 0, (0,))
    rep = classify_components(row, h)
    assert rep.n_nontrivial == 1
    assert rep.cnt_size == 4
    assert rep.cnt_edge_bits == row.bits

    face_edges = []
    for e in range(torus22.n_edges):
        a, b = torus22.edges[e]
        sq = {torus22.vertex_at((0, 0)), torus22.vertex_at((1, 0)),
              torus22.vertex_at((0, 1)), torus22.vertex_at((1, 1))}
        if {a, b} <= sq:
            face_edges.append(e)
    face = EdgeConfig.from_edges(torus22, face_edges)
    rep = classify_components(face, h)
    assert rep.n_nontrivial == 0 and rep.cnt_size == 0

    sq2 = {torus22.vertex_at((2, 2)), torus22.vertex_at((3, 2)),
           torus22.vertex_at((2, 3)), torus22.vertex_at((3, 3))}
    plaq = EdgeConfig.from_edges(
        torus22,
        [e for e in range(torus22.n_edges) if set(torus22.edges[e]) <= sq2],
    )
    both = row ^ plaq  # wrap-around plus a vertex-disjoint plaquette
    rep = classify_components(both, h)
    parities = sorted(c.parity for c in rep.components if c.size > 1)
    assert parities == [0, 1]
    assert rep.cnt_vertices == {
        torus22.vertex_at((i, 0)) for i in range(4)
    }


def test_classification_level_invariant(torus22, torus12):
    rng = np.random.default_rng(1)
    for t in (torus22, torus12):
        for _ in range(30):
            cfg = EdgeConfig(t, int(rng.integers(0, 1 << t.n_edges)))
            sizes = {
                cnt_vertex_count(cfg, hyperplane(t, lv))
                for lv in range(t.torus_period)
            }
            assert len(sizes) == 1


def test_nontriviality_matches_simple_loop_oracle(torus12):
    # span criterion == "component contains an odd simple loop", exhaustively
    h = hyperplane(torus12, 0)
    cycles = all_simple_cycles(torus12)
    odd_cycles = [c for c in cycles
                  if bin(c & h.outgoing_bits).count("1") % 2 == 1]
    from isingrep.estimators import clusters

    for bits in range(1 << torus12.n_edges):
        cfg = EdgeConfig(torus12, bits)
        rep = classify_components(cfg, h)
        flagged = {c.vertices[0] for c in rep.components if c.parity}
        lab = clusters(cfg)
        oracle_roots = set()
        for c in odd_cycles:
            if c & ~bits:
                continue
            v = next(v for e in range(torus12.n_edges) if (c >> e) & 1
                     for v in torus12.edges[e])
            oracle_roots.add(min(
                w for w in range(torus12.n_vertices) if lab[w] == lab[v]
            ))
        got = set()
        for comp in rep.components:
            if comp.parity:
                got.add(min(comp.vertices))
        assert got == oracle_roots


def test_xor_action(torus22):
    h = hyperplane(torus22, 0)
    gamma = straight_cycle(torus22, 0, (0,))
    empty = EdgeConfig.empty(torus22)
    out = xor_action(empty, gamma, h)
    assert out.bits == gamma.bits
    back = xor_action(gamma, gamma, h)
    assert back.bits == 0
    face = EdgeConfig.from_edges(torus22, torus22.faces[0]) if torus22.faces \
        else None
    plaq_edges = []
    sq = {torus22.vertex_at((2, 2)), torus22.vertex_at((3, 2)),
          torus22.vertex_at((2, 3)), torus22.vertex_at((3, 3))}
    for e in range(torus22.n_edges):
        if set(torus22.edges[e]) <= sq:
            plaq_edges.append(e)
    plaq = EdgeConfig.from_edges(torus22, plaq_edges)
    res = xor_action(plaq, gamma, h)
    assert classify_components(res, h).n_nontrivial >= 1
    vert = straight_cycle(torus22, 1, (0,))
    with pytest.raises(ValueError):
        xor_action(empty, vert, h)  # parity 0
    with pytest.raises(ValueError):
        xor_action(EdgeConfig.from_edges(torus22, [0]), gamma, h)  # odd eta


def test_is_simple_loop(torus22):
    assert is_simple_loop(straight_cycle(torus22, 0, (0,)))
    assert not is_simple_loop(EdgeConfig.empty(torus22))
    two = straight_cycle(torus22, 0, (0,)) ^ straight_cycle(torus22, 0, (1,))
    assert not is_simple_loop(two)


def test_count_disjoint_examples(torus22):
    h = hyperplane(torus22, 0)
    rows = EdgeConfig.empty(torus22)
    for j in range(3):
        rows = rows ^ straight_cycle(torus22, 0, (j,))
    assert count_disjoint_wraparounds(rows, h) == 3
    verticals = straight_cycle(torus22, 1, (0,))
    assert count_disjoint_wraparounds(verticals, h) == 0
    assert count_disjoint_wraparounds(EdgeConfig.full(torus22), h) >= 4
    loops = extract_disjoint_wraparounds(EdgeConfig.full(torus22), h)
    used = 0
    for lp in loops:
        assert is_simple_loop(lp)
        assert crossing_parity(lp, h) == 1
        assert not lp.bits & used
        used |= lp.bits


def test_count_disjoint_is_lower_bound(torus12):
    # exact maximum from exhaustive packing of odd simple loops
    h = hyperplane(torus12, 0)
    cycles = all_simple_cycles(torus12)
    odd = [c for c in cycles if bin(c & h.outgoing_bits).count("1") % 2 == 1]
    rng = np.random.default_rng(2)
    for _ in range(60):
        bits = int(rng.integers(0, 1 << torus12.n_edges))
        inside = [c for c in odd if not c & ~bits]
        exact = max_disjoint_packing(inside)
        greedy = count_disjoint_wraparounds(EdgeConfig(torus12, bits), h)
        assert greedy <= exact
        assert (greedy == 0) == (exact == 0)


def test_group_orbit_stats(torus22):
    h = hyperplane(torus22, 0)
    gamma = straight_cycle(torus22, 0, (0,))
    omega = EdgeConfig.full(torus22)
    stats = group_orbit_stats(omega, [gamma], h)
    assert stats.p_nontrivial == 0.5
    loops = [straight_cycle(torus22, 0, (j,)) for j in range(4)]
    stats = group_orbit_stats(omega, loops, h)
    # every odd-size subset of disjoint wrap-arounds is non-trivial
    assert stats.p_nontrivial >= 0.5
    assert stats.size_probs.get(0, 0.0) <= 0.5
    empty_orbit = group_orbit_stats(omega, [], h)
    assert empty_orbit.size_probs == {0: 1.0}


def test_group_orbit_validation(torus22):
    h = hyperplane(torus22, 0)
    gamma = straight_cycle(torus22, 0, (0,))
    with pytest.raises(ValueError):
        group_orbit_stats(EdgeConfig.empty(torus22), [gamma], h)
    with pytest.raises(ValueError):
        group_orbit_stats(EdgeConfig.full(torus22), [gamma, gamma], h)
    odd = EdgeConfig.from_edges(torus22, [0])
    with pytest.raises(ValueError):
        group_orbit_stats(EdgeConfig.full(torus22), [gamma], h, eta0=odd)


def test_orbit_sampled_mode(torus22):
    h = hyperplane(torus22, 0)
    loops = [straight_cycle(torus22, 0, (j,)) for j in range(4)]
    rng = np.random.default_rng(3)
    stats = group_orbit_stats(EdgeConfig.full(torus22), loops, h,
                              mode="sampled", rng=rng, n_samples=2000)
    exact = group_orbit_stats(EdgeConfig.full(torus22), loops, h)
    assert abs(stats.p_nontrivial - exact.p_nontrivial) < 0.05


def test_requires_torus(grid33):
    t = build_torus(2, 2)
    h = hyperplane(t, 0)
    with pytest.raises(LatticeError):
        crossing_parity(EdgeConfig.empty(grid33), h)
