import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _bruteforce import all_even_subsets, even_subset_count
from isingrep import _kernels
from isingrep.evens import (
    EdgeConfig,
    bits_to_mask,
    count_even_log2,
    cycle_basis,
    gf2_rank,
    is_even,
    joint_marginal_independence_tv,
    marginal_ueg_exact,
    mask_to_bits,
    sample_ueg,
    sample_uog,
    sample_wired_ueg,
    source_map,
    span_members,
)
from isingrep.lattice import (
    BoundaryCondition,
    build_box,
    build_slab_sheet,
    cycle_graph,
    edge_subset_by_coords,
    path_graph,
)
from isingrep.oracle import Distribution, tv_distance


def exhaustive_ueg_image(g, open_bits=None):
    """Run the UEG kernel over every chord-coin vector; returns the multiset."""
    if open_bits is None:
        open_bits = (1 << g.n_edges) - 1
    indptr, adj_edge, adj_other = g.adjacency_csr
    open_mask = bits_to_mask(open_bits, g.n_edges)
    out_counts = {}
    for coin_bits in range(1 << g.n_edges):
        coins = bits_to_mask(coin_bits, g.n_edges)
        out = np.zeros(g.n_edges, dtype=np.uint8)
        _kernels.ueg_sample(g.n_vertices, indptr, adj_edge, adj_other,
                            g.edge_a, g.edge_b, open_mask, coins, out)
        key = mask_to_bits(out)
        out_counts[key] = out_counts.get(key, 0) + 1
    return out_counts


def test_source_map_examples(triangle, path2):
    single = EdgeConfig.from_edges(path2, [0])
    assert source_map(single).vertices() == [0, 1]
    assert source_map(EdgeConfig.full(triangle)).is_empty()
    assert source_map(EdgeConfig.full(path2)).vertices() == [0, 2]


def test_self_loop_adds_two():
    loop = cycle_graph(1)
    assert source_map(EdgeConfig.full(loop)).is_empty()


@settings(max_examples=60, deadline=None)
@given(a=st.integers(0, 2**12 - 1), b=st.integers(0, 2**12 - 1))
def test_source_map_linear_and_even(a, b):
    g = build_box(2, 1)
    sa, sb = source_map(EdgeConfig(g, a)), source_map(EdgeConfig(g, b))
    assert source_map(EdgeConfig(g, a ^ b)).bits == (sa ^ sb).bits
    assert bin(sa.bits).count("1") % 2 == 0


def test_is_even_with_boundary(grid33):
    face = EdgeConfig.from_edges(grid33, grid33.faces[0])
    assert is_even(face, None)
    wired = BoundaryCondition.wired(grid33)
    # an edge between two boundary vertices becomes a self-loop when wired
    corner_edge = next(
        e for e, (a, b) in enumerate(grid33.edges)
        if a in grid33.boundary and b in grid33.boundary
    )
    path_cfg = EdgeConfig.from_edges(grid33, [corner_edge])
    assert not is_even(path_cfg, None)
    assert is_even(path_cfg, wired)
    # an edge ending at the interior vertex stays odd even when wired
    center = grid33.vertex_at((0, 0))
    center_edge = next(
        e for e, (a, b) in enumerate(grid33.edges) if center in (a, b)
    )
    assert not is_even(EdgeConfig.from_edges(grid33, [center_edge]), wired)


def test_cycle_basis_examples(grid33):
    tree = path_graph(4)
    assert cycle_basis(tree).rank == 0
    ck = cycle_graph(5)
    cb = cycle_basis(ck)
    assert cb.rank == 1
    assert cb.generators[0] == (1 << 5) - 1
    cb = cycle_basis(grid33)
    assert cb.rank == 12 - 9 + 1
    assert gf2_rank(cb.generators) == 4
    # each chord appears in exactly its own generator
    for i, chord in enumerate(cb.chord_edges):
        for j, gen in enumerate(cb.generators):
            assert bool((gen >> chord) & 1) == (i == j)
    for gen in cb.generators:
        assert source_map(EdgeConfig(grid33, gen)).is_empty()


def test_cycle_basis_multigraph(torus12):
    cb = cycle_basis(torus12)
    assert cb.rank == torus12.n_edges - torus12.n_vertices + 1
    for gen in cb.generators:
        assert source_map(EdgeConfig(torus12, gen)).is_empty()


def test_count_even_examples(grid33):
    c4 = cycle_graph(4)
    assert count_even_log2(EdgeConfig.full(c4)) == 1
    tree = path_graph(5)
    assert count_even_log2(EdgeConfig.full(tree)) == 0
    assert count_even_log2(EdgeConfig.full(grid33)) == 4
    assert even_subset_count(grid33, (1 << 12) - 1) == 16


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(0, 2**12 - 1))
def test_count_even_matches_bruteforce(bits):
    g = build_box(2, 1)
    assert 1 << count_even_log2(EdgeConfig(g, bits)) == even_subset_count(g, bits)


def test_sample_ueg_trivial_cases():
    rng = np.random.default_rng(0)
    tree = path_graph(4)
    for _ in range(16):
        assert sample_ueg(EdgeConfig.full(tree), rng).bits == 0
    ck = cycle_graph(4)
    seen = {sample_ueg(EdgeConfig.full(ck), rng).bits for _ in range(64)}
    assert seen == {0, 15}


def test_sample_ueg_exhaustively_uniform(grid33):
    # push every coin vector through the sampler: the image must hit every
    # even subgraph of the grid equally often (exact, no statistics)
    counts = exhaustive_ueg_image(grid33)
    evens = all_even_subsets(grid33, (1 << 12) - 1)
    assert set(counts) == evens
    assert len(set(counts.values())) == 1


def test_sample_ueg_on_subconfig(grid33):
    # open subgraph = one face: image = {empty, face}, balanced
    face_bits = 0
    for e in grid33.faces[0]:
        face_bits |= 1 << e
    counts = exhaustive_ueg_image(grid33, face_bits)
    assert set(counts) == {0, face_bits}
    assert counts[0] == counts[face_bits]


def test_sample_ueg_translation_invariance(grid33):
    # XOR by a fixed even subgraph permutes the exhaustive image
    counts = exhaustive_ueg_image(grid33)
    face_bits = 0
    for e in grid33.faces[0]:
        face_bits |= 1 << e
    shifted = {k ^ face_bits: v for k, v in counts.items()}
    assert shifted == counts


def test_sample_wired_ueg():
    rng = np.random.default_rng(1)
    single = path_graph(1)
    bc = BoundaryCondition.wired(single)
    draws = [sample_wired_ueg(single, bc, rng).bits for _ in range(400)]
    frac = sum(draws) / len(draws)
    assert 0.4 < frac < 0.6
    two = path_graph(2)
    bc = BoundaryCondition.wired(two)
    seen = {sample_wired_ueg(two, bc, rng).bits for _ in range(64)}
    assert seen == {0, 0b11}
    # free boundary: same law as the plain UEG (here: point mass empty)
    assert sample_wired_ueg(two, BoundaryCondition.free(two), rng).bits == 0


def test_marginal_point_mass_on_tree():
    tree = path_graph(3)
    dist = marginal_ueg_exact(tree, [0, 1, 2])
    assert dist.probs == {0: 1.0}


def test_marginal_matches_wired_ueg():
    outer = build_box(2, 2)
    inner = build_box(2, 1)
    sub = [int(e) for e in edge_subset_by_coords(outer, inner)]
    marg = marginal_ueg_exact(outer, sub)
    from isingrep.oracle import enumerate_ueg

    wired = enumerate_ueg(inner, BoundaryCondition.wired(inner))
    assert tv_distance(marg, wired) == 0.0


def test_marginal_single_sheet_edge_bernoulli_half():
    sheet = build_slab_sheet("hyperplane-sheet", 3, 1)
    one = [int(sheet.edge_indices[0])]
    dist = marginal_ueg_exact(sheet.host, one)
    assert dist.probs == {0: 0.5, 1: 0.5}


def test_joint_independence_tv(grid33, c4):
    # columns of the grid separated by the connected middle band
    left = [e for e, (a, b) in enumerate(grid33.edges)
            if grid33.edge_dirs[e] == 1
            and grid33.coords[a][0] == -1 and grid33.coords[b][0] == -1]
    right = [e for e, (a, b) in enumerate(grid33.edges)
             if grid33.edge_dirs[e] == 1
             and grid33.coords[a][0] == 1 and grid33.coords[b][0] == 1]
    assert len(left) == 2 and len(right) == 2
    assert joint_marginal_independence_tv(grid33, left, right) == 0.0
    # cross-check the rank formula against full enumeration of the joint
    joint = marginal_ueg_exact(grid33, left + right)
    m_left = marginal_ueg_exact(grid33, left)
    m_right = marginal_ueg_exact(grid33, right)
    product = {}
    for k1, p1 in m_left.probs.items():
        for k2, p2 in m_right.probs.items():
            product[k1 | (k2 << 2)] = p1 * p2
    prod_dist = Distribution(grid33, 4, product)
    assert tv_distance(joint, prod_dist) == 0.0
    # opposite edges of C4 are perfectly correlated: no separating surface
    assert joint_marginal_independence_tv(c4, [0], [2]) == pytest.approx(0.5)


def test_marginal_rank_cap():
    from isingrep.models import OracleSizeError

    host = build_box(2, 4)
    inner = build_box(2, 3)
    sub = [int(e) for e in edge_subset_by_coords(host, inner)]
    with pytest.raises(OracleSizeError):
        marginal_ueg_exact(host, sub)


def test_sample_uog():
    rng = np.random.default_rng(3)
    single = path_graph(1)
    dimer = EdgeConfig.full(single)
    assert all(sample_uog(single, dimer, rng).bits == 1 for _ in range(8))
    ck = cycle_graph(4)
    dimer = EdgeConfig.from_edges(ck, [0, 2])
    seen = {sample_uog(ck, dimer, rng).bits for _ in range(64)}
    assert seen == {0b0101, 0b1010}
    with pytest.raises(ValueError):
        sample_uog(ck, EdgeConfig.from_edges(ck, [0, 1]), rng)


def test_span_members_gray():
    basis = [0b01, 0b10]
    assert sorted(span_members(basis)) == [0, 1, 2, 3]


def test_hex_roundtrip(grid33):
    cfg = EdgeConfig(grid33, 0b101001110001)
    assert EdgeConfig.from_hex(grid33, cfg.to_hex()).bits == cfg.bits
    assert len(cfg.to_hex()) == 3
