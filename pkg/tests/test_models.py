import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingrep.evens import EdgeConfig, source_map
from isingrep.lattice import BoundaryCondition, build_box, path_graph
from isingrep.models import (
    Current,
    ExactRcSampler,
    ModelParams,
    OracleSizeError,
    SpinConfig,
    convert,
    dual_parameter,
    interfaces,
    planar_dual,
    sample_bernoulli,
    sample_current,
    sample_domination_triple,
    sample_ising,
    sample_loop,
    sample_rc_exact_coupled,
    sample_rc_sw,
    sw_thinned_bit_samples,
    weight_current,
    weight_ising,
    weight_loop,
    weight_rc,
)
from isingrep.oracle import enumerate_loop, enumerate_rc


def test_convert_examples():
    mp = convert(beta=0.0)
    assert mp.p == 0.0 and mp.x == 0.0
    beta_c = 0.5 * math.log(1 + math.sqrt(2))
    mp = convert(beta=beta_c)
    assert mp.x == pytest.approx(math.sqrt(2) - 1, rel=1e-12)
    assert mp.p == pytest.approx(2 - math.sqrt(2), rel=1e-12)
    mp = convert(x=1.0)
    assert mp.p == 1.0 and math.isinf(mp.beta)


@settings(max_examples=80, deadline=None)
@given(st.floats(min_value=1e-6, max_value=0.999999))
def test_convert_roundtrips(p):
    mp = ModelParams.from_p(p)
    assert ModelParams.from_beta(mp.beta).p == pytest.approx(p, rel=1e-14)
    assert ModelParams.from_x(mp.x).p == pytest.approx(p, rel=1e-14)
    assert mp.p == pytest.approx(2 * mp.x / (mp.x + 1), rel=1e-14)


def test_convert_validation():
    with pytest.raises(ValueError):
        convert(p=1.5)
    with pytest.raises(ValueError):
        convert(beta=-0.1)
    with pytest.raises(ValueError):
        convert(beta=1.0, p=0.5)
    with pytest.raises(ValueError):
        convert()


def test_dual_parameter():
    sd = 2 - math.sqrt(2)
    assert dual_parameter(sd) == pytest.approx(sd, rel=1e-14)
    for p in (0.1, 0.3, 0.5, 0.9):
        ps = dual_parameter(p)
        assert p * ps / ((1 - p) * (1 - ps)) == pytest.approx(2.0, rel=1e-12)
        assert dual_parameter(ps) == pytest.approx(p, rel=1e-14)
    assert dual_parameter(0.5) == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert dual_parameter(0.999) < 0.002
    with pytest.raises(ValueError):
        dual_parameter(1.0)


def test_weight_rc_single_edge():
    g = path_graph(1)
    p = 0.3
    w_open = weight_rc(EdgeConfig.full(g), None, p)
    w_closed = weight_rc(EdgeConfig.empty(g), None, p)
    assert w_open / w_closed == pytest.approx(2 * (p / (1 - p)) / 4)
    assert w_open / (w_open + w_closed) == pytest.approx(p / (2 - p))
    # empty configuration weighs 2^|V|
    g5 = path_graph(4)
    assert weight_rc(EdgeConfig.empty(g5), None, 0.4) == 2.0**5
    # p = 1/2 -> pure 2^kappa
    assert weight_rc(EdgeConfig.full(g5), None, 0.5) == 2.0


def test_weight_rc_endpoints_rejected():
    g = path_graph(1)
    with pytest.raises(ValueError):
        weight_rc(EdgeConfig.full(g), None, 0.0)


def test_weight_ising_loop_current(triangle):
    s = SpinConfig.all_plus(triangle)
    assert weight_ising(s, 0.7) == pytest.approx(math.exp(0.7 * 3))
    assert weight_loop(EdgeConfig.empty(triangle), None, 0.5) == 1.0
    assert weight_loop(EdgeConfig.from_edges(triangle, [0]), None, 0.5) == 0.0
    g = path_graph(1)
    n = Current(g, (2,))
    assert n.sources().is_empty()
    assert weight_current(n, 0.5) == pytest.approx(0.25 / 2)
    assert weight_current(Current(g, (1,)), 0.5) == 0.0
    assert n.trace().bits == 1


def test_sample_bernoulli(grid33):
    rng = np.random.default_rng(0)
    assert sample_bernoulli(grid33, 0.0, rng).bits == 0
    assert sample_bernoulli(grid33, 1.0, rng).bits == (1 << 12) - 1
    counts = np.zeros(12)
    n = 4000
    for _ in range(n):
        counts += sample_bernoulli(grid33, 0.5, rng).mask()
    se = math.sqrt(0.25 / n)
    assert np.all(np.abs(counts / n - 0.5) < 3 * se + 0.01)


def test_sw_extremes(grid33):
    rng = np.random.default_rng(1)
    assert sample_rc_sw(grid33, None, 0.0, 4, rng).bits == 0
    full = (1 << 12) - 1
    assert sample_rc_sw(grid33, None, 1.0, 4, rng).bits == full


def test_sw_single_edge():
    g = path_graph(1)
    rng = np.random.default_rng(2)
    bits = sw_thinned_bit_samples(g, None, 2 / 3, 4000, rng)
    freq = bits.mean()
    # exact open probability p/(2-p) = 1/2
    assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / 1000)  # conservative ess


def test_exact_sampler_single_edge():
    g = path_graph(1)
    s = ExactRcSampler(g, None, 2 / 3)
    assert s.weights[1] == pytest.approx(0.5)
    rng = np.random.default_rng(3)
    freq = s.sample_bits(4000, rng).mean()
    assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / 4000)


def test_exact_sampler_cap():
    with pytest.raises(OracleSizeError):
        ExactRcSampler(build_box(2, 2), None, 0.5)


def test_exact_sampler_wired_matches_oracle(grid33):
    bc = BoundaryCondition.wired(grid33)
    s = ExactRcSampler(grid33, bc, 0.4)
    oracle = enumerate_rc(grid33, bc, 0.4)
    dense = np.zeros(1 << 12)
    for k, p in oracle.probs.items():
        dense[k] = p
    assert np.abs(s.weights - dense).max() < 1e-14


def test_monotone_coupling(grid33):
    rng = np.random.default_rng(4)
    b1, b2 = sample_rc_exact_coupled(grid33, None, 0.4, 0.7, 20000, rng)
    assert not np.any(b1 & ~b2)


def test_sample_loop_extremes(grid33):
    rng = np.random.default_rng(5)
    assert sample_loop(grid33, None, 0.0, rng).bits == 0
    # x=1 is the UEG: every draw is even
    for _ in range(32):
        eta = sample_loop(grid33, None, 1.0, rng)
        assert source_map(eta).is_empty()


def test_sample_loop_matches_oracle(grid33):
    rng = np.random.default_rng(6)
    x = 0.5
    dist = enumerate_loop(grid33, None, x)
    n = 6000
    counts = {}
    for _ in range(n):
        eta = sample_loop(grid33, None, x, rng, backend="exact")
        counts[eta.bits] = counts.get(eta.bits, 0) + 1
    assert set(counts) <= set(dist.probs)
    tv_emp = 0.5 * sum(
        abs(counts.get(k, 0) / n - p) for k, p in dist.probs.items()
    )
    assert tv_emp < 0.03


def test_sample_loop_wired_lives_on_quotient_evens(grid33):
    rng = np.random.default_rng(7)
    bc = BoundaryCondition.wired(grid33)
    from isingrep.evens import is_even

    for _ in range(32):
        eta = sample_loop(grid33, bc, 0.7, rng, backend="exact")
        assert is_even(eta, bc)


def test_sample_current(path2):
    rng = np.random.default_rng(8)
    assert sample_current(path2, 0.0, rng).bits == 0
    g = path_graph(1)
    from isingrep.oracle import current_truncated

    trunc, tail = current_truncated(g, 0.9, cap=40)
    n = 20000
    hits = sum(sample_current(g, 0.9, rng).bits for _ in range(n))
    expect = trunc.prob(1)
    assert expect == pytest.approx(
        (math.cosh(0.9) - 1) / math.cosh(0.9), abs=1e-10
    )
    assert abs(hits / n - expect) < 4 * math.sqrt(expect * (1 - expect) / n) + tail


def test_domination_triple(grid33):
    rng = np.random.default_rng(9)
    for _ in range(400):
        eta, cur, rc = sample_domination_triple(grid33, 0.7, rng)
        assert eta.bits & ~cur.bits == 0
        assert cur.bits & ~rc.bits == 0


def test_sw_chain_invariance_check(grid33):
    # long chain empirical marginal of one edge vs oracle
    rng = np.random.default_rng(10)
    p = 0.6
    bits = sw_thinned_bit_samples(grid33, None, p, 20000, rng)
    oracle = enumerate_rc(grid33, None, p)
    for e in (0, 5, 11):
        emp = ((bits >> np.uint64(e)) & np.uint64(1)).mean()
        exact = sum(pr for k, pr in oracle.probs.items() if (k >> e) & 1)
        assert abs(emp - exact) < 0.02


def test_planar_dual(hexpatch2):
    dual = planar_dual(hexpatch2)
    assert dual.n_vertices == 3  # two bricks + outer face
    assert dual.n_edges == hexpatch2.n_edges
    outer = next(iter(dual.boundary))
    shared = [e for e, (a, b) in enumerate(dual.edges) if outer not in (a, b)]
    assert len(shared) == 1  # exactly one edge separates the two bricks


def test_planar_dual_requires_faces():
    from isingrep.lattice import LatticeError, build_torus

    with pytest.raises(LatticeError):
        planar_dual(build_torus(3, 1))


def test_interfaces_examples(hexpatch1):
    dual = planar_dual(hexpatch1)
    all_plus = SpinConfig.all_plus(dual)
    assert interfaces(hexpatch1, all_plus).bits == 0
    minus_face = SpinConfig(dual, 1)  # face 0 negative, outer positive
    cfg = interfaces(hexpatch1, minus_face)
    assert cfg.bits == (1 << 6) - 1  # the hexagon boundary
    assert source_map(cfg).is_empty()


def test_sample_ising_exact_and_sw(triangle):
    rng = np.random.default_rng(11)
    s = sample_ising(triangle, 0.5, rng, backend="exact")
    assert 0 <= s.bits < 8
    mags = []
    for _ in range(300):
        s = sample_ising(triangle, 0.5, rng, backend="sw", sweeps=8)
        mags.append(sum(s.sign(v) for v in range(3)))
    assert abs(np.mean(mags)) < 0.5  # symmetric without boundary forcing


def test_sample_ising_plus_boundary():
    g = path_graph(2)
    rng = np.random.default_rng(12)
    # pin vertex 0 to +1
    for _ in range(20):
        s = sample_ising(g, 0.8, rng, boundary_spins={0: +1}, backend="exact")
        assert s.sign(0) == 1
