import math

import pytest

from _bruteforce import even_subset_count
from isingrep.evens import EdgeConfig, count_even_log2
from isingrep.lattice import BoundaryCondition, build_box, path_graph
from isingrep.models import ModelParams, OracleSizeError
from isingrep.oracle import (
    Distribution,
    bernoulli_distribution,
    brute_force_even_count,
    connectivity,
    correlation,
    current_truncated,
    enumerate_interfaces,
    enumerate_ising,
    enumerate_loop,
    enumerate_rc,
    enumerate_ueg,
    pushforward_ueg,
    pushforward_union,
    tv_distance,
)


def test_distribution_invariants(grid33):
    d = enumerate_rc(grid33, None, 0.5)
    assert abs(sum(d.probs.values()) - 1.0) < 1e-12
    assert all(p >= 0 for p in d.probs.values())
    with pytest.raises(ValueError):
        Distribution(grid33, 12, {0: 0.5})


def test_tv_examples(path2):
    d1 = Distribution(path2, 2, {0: 0.75, 1: 0.25})
    d2 = Distribution(path2, 2, {0: 0.25, 1: 0.75})
    assert tv_distance(d1, d1) == 0.0
    assert tv_distance(d1, d2) == pytest.approx(0.5)
    point_a = Distribution(path2, 2, {0: 1.0})
    point_b = Distribution(path2, 2, {3: 1.0})
    assert tv_distance(point_a, point_b) == 1.0
    with pytest.raises(ValueError):
        tv_distance(d1, Distribution(path2, 3, {0: 1.0}))


def test_enumerate_rc_single_edge():
    g = path_graph(1)
    for p in (0.2, 0.5, 0.8):
        d = enumerate_rc(g, None, p)
        assert d.prob(1) == pytest.approx(p / (2 - p), rel=1e-12)
    assert enumerate_rc(g, None, 0.0).probs == {0: 1.0}
    assert enumerate_rc(g, None, 1.0).probs == {1: 1.0}


def test_enumerate_loop_examples(triangle):
    g = path_graph(1)
    d = enumerate_loop(g, None, 0.7)
    assert d.prob(1) == 0.0 and d.prob(0) == 1.0
    x = 0.6
    d = enumerate_loop(triangle, None, x)
    assert d.prob(7) == pytest.approx(x**3 / (1 + x**3), rel=1e-12)
    d0 = enumerate_loop(triangle, None, 0.0)
    assert d0.probs == {0: 1.0}


def test_enumerate_loop_wired_consistency(path2):
    # loop model with boundary condition == free loop model of the quotient
    bc = BoundaryCondition.wired(path2)
    from isingrep.lattice import quotient

    via_bc = enumerate_loop(path2, bc, 0.5)
    via_quot = enumerate_loop(quotient(path2, bc), None, 0.5)
    assert tv_distance(via_bc, via_quot) == 0.0
    # and equals the UEG-of-RC pushforward definition (loop_with_bc)
    pushed = pushforward_ueg(enumerate_rc(path2, bc, ModelParams.from_x(0.5).p))
    assert tv_distance(via_bc, pushed) < 1e-13


def test_pushforward_ueg_point_masses(c4):
    tree = path_graph(3)
    d = pushforward_ueg(Distribution(tree, 3, {7: 1.0}))
    assert d.probs == {0: 1.0}
    d = pushforward_ueg(Distribution(c4, 4, {15: 1.0}))
    assert d.probs == {0: 0.5, 15: 0.5}


def test_pushforward_union_point_masses(c4):
    d1 = Distribution(c4, 4, {0b0011: 1.0})
    d2 = Distribution(c4, 4, {0b0110: 1.0})
    u = pushforward_union(d1, d2)
    assert u.probs == {0b0111: 1.0}
    empty = Distribution(c4, 4, {0: 1.0})
    d = bernoulli_distribution(c4, 0.3)
    assert tv_distance(pushforward_union(d, empty), d) < 1e-14


def test_pushforward_union_sparse_matches_dense(triangle):
    d1 = enumerate_loop(triangle, None, 0.5)
    d2 = bernoulli_distribution(triangle, 0.4)
    dense = pushforward_union(d1, d2)
    # sparse route (force by monkeypatching the cap)
    out = {}
    for k1, p1 in d1.probs.items():
        for k2, p2 in d2.probs.items():
            out[k1 | k2] = out.get(k1 | k2, 0.0) + p1 * p2
    assert max(abs(dense.prob(k) - v) for k, v in out.items()) < 1e-14


def test_correlation_examples(grid33):
    g = path_graph(1)
    for beta in (0.3, 0.7):
        assert correlation(g, beta, 0, 1) == pytest.approx(math.tanh(beta), rel=1e-12)
    assert correlation(grid33, 0.0, 0, 5) == pytest.approx(0.0, abs=1e-12)
    beta = 0.45
    rc = enumerate_rc(grid33, None, ModelParams.from_beta(beta).p)
    for w in range(1, grid33.n_vertices):
        assert correlation(grid33, beta, 0, w) == pytest.approx(
            connectivity(rc, 0, w), abs=1e-12
        )


def test_current_truncated(triangle):
    g = path_graph(1)
    d, tail = current_truncated(g, 0.0, cap=20)
    assert d.probs == {0: 1.0} and tail == 0.0
    beta = 1.3
    d, tail = current_truncated(g, beta, cap=40)
    assert d.prob(1) == pytest.approx(
        (math.cosh(beta) - 1) / math.cosh(beta), abs=1e-10
    )
    assert 0 <= tail < 1e-12
    # triangle: truncated law vs the coupling route
    mp = ModelParams.from_beta(0.5)
    single = pushforward_union(
        enumerate_loop(triangle, None, mp.x),
        bernoulli_distribution(triangle, mp.current_union_density),
    )
    d, tail = current_truncated(triangle, 0.5, cap=20)
    assert tv_distance(single, d) <= tail + 1e-11


def test_current_truncated_validation():
    g = path_graph(1)
    with pytest.raises(ValueError):
        current_truncated(g, -1.0)
    with pytest.raises(ValueError):
        current_truncated(g, 1.0, cap=1)


def test_brute_force_even_count_agrees(grid33, torus12):
    for g in (grid33, torus12):
        for bits in (0, 5, (1 << g.n_edges) - 1, 0b1010101):
            assert brute_force_even_count(g, bits) == even_subset_count(g, bits)
            assert brute_force_even_count(g, bits) == 1 << count_even_log2(
                EdgeConfig(g, bits)
            )


def test_enumerate_ueg_support(c4):
    d = enumerate_ueg(c4)
    assert d.probs == {0: 0.5, 15: 0.5}


def test_enumerate_ising_counts(triangle):
    d = enumerate_ising(triangle, 0.3)
    assert d.support_size() == 8
    d = enumerate_ising(triangle, 0.3, boundary_spins={0: +1})
    assert d.support_size() == 4
    assert all(not k & 1 for k in d.probs)


def test_enumerate_interfaces_single_hexagon(hexpatch1):
    x = 0.35
    d = enumerate_interfaces(hexpatch1, x)
    full = (1 << 6) - 1
    assert d.prob(full) == pytest.approx(x**6 / (1 + x**6), rel=1e-12)
    assert tv_distance(d, enumerate_loop(hexpatch1, None, x)) < 1e-14


def test_size_caps():
    big = build_box(2, 3)
    with pytest.raises(OracleSizeError):
        enumerate_rc(big, None, 0.5)
    with pytest.raises(OracleSizeError):
        enumerate_ising(build_box(2, 2), 0.5)
