"""Brute-force exact distributions on small hosts: the ground truth layer.

Every model measure is enumerable below the size caps; couplings between
the measures are then checkable as exact total-variation identities.
Distributions are sparse tables keyed by bit-packed configurations on the
effective (quotient) host.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .evens import (
    EdgeConfig,
    bits_to_mask,
    cycle_basis,
    count_even_log2,
    span_members,
)
from .lattice import BoundaryCondition, MultiGraph, quotient
from .models import OracleSizeError

__all__ = [
    "Distribution",
    "OracleSizeError",
    "tv_distance",
    "enumerate_rc",
    "enumerate_loop",
    "enumerate_ueg",
    "enumerate_ising",
    "bernoulli_distribution",
    "pushforward_ueg",
    "pushforward_union",
    "correlation",
    "connectivity",
    "current_truncated",
    "brute_force_even_count",
    "EDGE_MODEL_CAP",
    "SPIN_MODEL_CAP",
]

EDGE_MODEL_CAP = 24
SPIN_MODEL_CAP = 20
DENSE_CAP_BITS = 20
UNION_PRODUCT_CAP = 1 << 24
PROB_SUM_TOL = 1e-12
# acceptance allowance for the truncated-current cross-check (cap 40, beta <= 1)
CURRENT_SERIES_TOL = 1e-8


@dataclass
class Distribution:
    """Finitely-supported probability table over bit-packed configurations.

    ``graph`` is the effective host (already the quotient when a boundary
    condition was applied); for marginal distributions ``edge_labels``
    records which host edge index each bit position stands for.
    """

    graph: MultiGraph
    nbits: int
    probs: dict[int, float]
    kind: str = "edges"
    edge_labels: tuple[int, ...] | None = None

    def __post_init__(self):
        total = sum(self.probs.values())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=PROB_SUM_TOL):
            raise ValueError(f"probabilities sum to {total}, not 1")
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("negative probability")

    def prob(self, key: int) -> float:
        return self.probs.get(key, 0.0)

    def support_size(self) -> int:
        return len(self.probs)

    def expectation(self, fn) -> float:
        return sum(p * fn(k) for k, p in self.probs.items())

    def event_probability(self, predicate) -> float:
        return sum(p for k, p in self.probs.items() if predicate(k))


def _normalized(graph, nbits, weights: dict[int, float], kind="edges",
                edge_labels=None) -> Distribution:
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("all weights vanish")
    probs = {k: w / total for k, w in weights.items() if w > 0}
    return Distribution(graph=graph, nbits=nbits, probs=probs, kind=kind,
                        edge_labels=edge_labels)


def _check_compatible(d1: Distribution, d2: Distribution) -> None:
    if d1.nbits != d2.nbits or d1.kind != d2.kind:
        raise ValueError("distributions live on different index spaces")


def tv_distance(d1: Distribution, d2: Distribution) -> float:
    """Total variation distance (half the L1 gap over the joint support)."""
    _check_compatible(d1, d2)
    keys = set(d1.probs) | set(d2.probs)
    return 0.5 * sum(abs(d1.prob(k) - d2.prob(k)) for k in keys)


def _check_edge_cap(g: MultiGraph, cap: int = EDGE_MODEL_CAP) -> None:
    if g.n_edges > cap:
        raise OracleSizeError(f"host has {g.n_edges} edges, oracle cap is {cap}")


def enumerate_rc(g: MultiGraph, bc: BoundaryCondition | None, p: float) -> Distribution:
    """Exact random-cluster table, weights 2^kappa(w^xi) (p/(1-p))^o(w)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    gq = quotient(g, bc)
    _check_edge_cap(gq)
    n_e = gq.n_edges
    if p == 0.0:
        return Distribution(gq, n_e, {0: 1.0})
    if p == 1.0:
        return Distribution(gq, n_e, {(1 << n_e) - 1: 1.0})
    kap = _kernels.kappa_table(gq.n_vertices, gq.edge_a, gq.edge_b)
    opens = np.bitwise_count(np.arange(1 << n_e, dtype=np.uint64)).astype(np.float64)
    w = np.exp2(kap.astype(np.float64)) * (p / (1.0 - p)) ** opens
    w /= w.sum()
    return Distribution(gq, n_e, {int(m): float(w[m]) for m in range(1 << n_e)})


def enumerate_loop(g: MultiGraph, bc: BoundaryCondition | None, x: float) -> Distribution:
    """Exact loop O(1) table: weight x^o on even quotient configurations."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    gq = quotient(g, bc)
    _check_edge_cap(gq)
    basis = cycle_basis(gq)
    weights: dict[int, float] = {}
    for eta in span_members(list(basis.generators)):
        weights[eta] = float(x) ** eta.bit_count() if eta else 1.0
    return _normalized(gq, gq.n_edges, weights)


def enumerate_ueg(g: MultiGraph, bc: BoundaryCondition | None = None) -> Distribution:
    """Uniform even subgraph table (the x=1 loop model)."""
    return enumerate_loop(g, bc, 1.0)


def bernoulli_distribution(g: MultiGraph, q: float) -> Distribution:
    _check_edge_cap(g)
    if not 0.0 <= q <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    n_e = g.n_edges
    if q == 0.0:
        return Distribution(g, n_e, {0: 1.0})
    if q == 1.0:
        return Distribution(g, n_e, {(1 << n_e) - 1: 1.0})
    opens = np.bitwise_count(np.arange(1 << n_e, dtype=np.uint64)).astype(np.float64)
    w = q**opens * (1.0 - q) ** (n_e - opens)
    return Distribution(g, n_e, {int(m): float(w[m]) for m in range(1 << n_e)})


def _ising_weights(g: MultiGraph, beta: float) -> np.ndarray:
    """exp(-beta H) for every spin pattern (bit v set = spin -1)."""
    n_v = g.n_vertices
    if n_v > SPIN_MODEL_CAP:
        raise OracleSizeError(f"host has {n_v} vertices, spin cap is {SPIN_MODEL_CAP}")
    m = np.arange(1 << n_v, dtype=np.uint64)
    disagree = np.zeros(1 << n_v, dtype=np.int64)
    for a, b in g.edges:
        disagree += (((m >> np.uint64(a)) ^ (m >> np.uint64(b))) & np.uint64(1)).astype(np.int64)
    # H = -(agree - disagree) = 2*disagree - |E|
    energy = 2 * disagree - g.n_edges
    return np.exp(-beta * energy.astype(np.float64))


def enumerate_ising(g: MultiGraph, beta: float,
                    boundary_spins: dict[int, int] | None = None) -> Distribution:
    """Exact Ising table on g (use the quotient for wired classes).

    ``boundary_spins`` pins the given vertices (+1/-1); keys of the table
    are full spin patterns with bit v = 1 meaning spin -1.
    """
    w = _ising_weights(g, beta)
    weights: dict[int, float] = {}
    if boundary_spins:
        fixed_mask = 0
        fixed_bits = 0
        for v, s in boundary_spins.items():
            fixed_mask |= 1 << v
            if s < 0:
                fixed_bits |= 1 << v
        for m in range(w.size):
            if (m & fixed_mask) == fixed_bits:
                weights[m] = float(w[m])
    else:
        weights = {m: float(w[m]) for m in range(w.size)}
    return _normalized(g, g.n_vertices, weights, kind="spins")


def pushforward_ueg(d: Distribution) -> Distribution:
    """Exact law of the uniform even subgraph of a random configuration."""
    if d.kind != "edges":
        raise ValueError("pushforward_ueg needs an edge distribution")
    _check_edge_cap(d.graph)
    g = d.graph
    out: dict[int, float] = {}
    for omega, p in d.probs.items():
        basis = cycle_basis(g, omega)
        share = p / (1 << basis.rank)
        for eta in span_members(list(basis.generators)):
            out[eta] = out.get(eta, 0.0) + share
    return _normalized(g, d.nbits, out)


def _zeta_subset(vec: np.ndarray, nbits: int) -> np.ndarray:
    out = vec.copy()
    idx = np.arange(out.size)
    for j in range(nbits):
        hi = (idx >> j) & 1 == 1
        out[hi] += out[idx[hi] ^ (1 << j)]
    return out


def pushforward_union(d1: Distribution, d2: Distribution) -> Distribution:
    """Exact law of the union (bitwise or) of two independent configurations.

    Accumulates the p1*p2 products directly (all positive, so no
    cancellation); the support product is capped.
    """
    _check_compatible(d1, d2)
    n = d1.nbits
    if d1.support_size() * d2.support_size() > UNION_PRODUCT_CAP:
        raise OracleSizeError("support product exceeds the union cap")
    if n <= DENSE_CAP_BITS:
        keys1 = np.fromiter(d1.probs.keys(), dtype=np.int64)
        probs1 = np.fromiter(d1.probs.values(), dtype=np.float64)
        keys2 = np.fromiter(d2.probs.keys(), dtype=np.int64)
        probs2 = np.fromiter(d2.probs.values(), dtype=np.float64)
        out = np.zeros(1 << n)
        step = max(1, (1 << 22) // max(keys2.size, 1))
        for lo in range(0, keys1.size, step):
            hi = min(lo + step, keys1.size)
            ors = keys1[lo:hi, None] | keys2[None, :]
            w = probs1[lo:hi, None] * probs2[None, :]
            out += np.bincount(ors.ravel(), weights=w.ravel(),
                               minlength=1 << n)
        weights = {int(m): float(out[m]) for m in np.nonzero(out > 0)[0]}
        return _normalized(d1.graph, n, weights)
    out_sparse: dict[int, float] = {}
    for k1, p1 in d1.probs.items():
        for k2, p2 in d2.probs.items():
            k = k1 | k2
            out_sparse[k] = out_sparse.get(k, 0.0) + p1 * p2
    return _normalized(d1.graph, n, out_sparse)


def correlation(g: MultiGraph, beta: float, v: int, w: int) -> float:
    """Two-point function <sigma_v sigma_w> by exact spin enumeration."""
    weights = _ising_weights(g, beta)
    m = np.arange(weights.size, dtype=np.uint64)
    agree = (((m >> np.uint64(v)) ^ (m >> np.uint64(w))) & np.uint64(1)) == 0
    signs = np.where(agree, 1.0, -1.0)
    return float((signs * weights).sum() / weights.sum())


def connectivity(d: Distribution, v: int, w: int) -> float:
    """P[v <-> w] under an exact edge distribution (union-find per config)."""
    if d.kind != "edges":
        raise ValueError("connectivity needs an edge distribution")
    g = d.graph
    total = 0.0
    for bits, p in d.probs.items():
        labels = _kernels.uf_components(
            g.n_vertices, g.edge_a, g.edge_b, bits_to_mask(bits, g.n_edges)
        )
        if labels[v] == labels[w]:
            total += p
    return total


def current_truncated(g: MultiGraph, beta: float, cap: int = 20):
    """Traced sourceless current law with per-edge multiplicities <= cap.

    Sums the per-edge weight series beta^k/k! separately over k = 0, even
    k > 0 and odd k; the sourceless constraint only sees the odd-class
    pattern, which must be an even subgraph.  Returns the normalized
    distribution together with a tail bound: the total variation error
    against the untruncated law is at most the reported value.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if cap < 2:
        raise ValueError("cap must be >= 2")
    gq = g
    n_e = gq.n_edges
    if n_e > DENSE_CAP_BITS:
        raise OracleSizeError("current oracle needs <= 20 edges")
    if beta == 0.0:
        return Distribution(gq, n_e, {0: 1.0}), 0.0
    a_even = sum(beta**k / math.factorial(k) for k in range(2, cap + 1, 2))
    a_odd = sum(beta**k / math.factorial(k) for k in range(1, cap + 1, 2))
    h = np.zeros(1 << n_e)
    basis = cycle_basis(gq)
    for rho in span_members(list(basis.generators)):
        h[rho] = (a_odd / a_even) ** rho.bit_count()
    zeta = _zeta_subset(h, n_e)
    opens = np.bitwise_count(np.arange(1 << n_e, dtype=np.uint64)).astype(np.float64)
    unnorm = a_even**opens * zeta
    z_trunc = float(unnorm.sum())
    # Poisson-series remainder majorant: sum_{k>cap} b^k/k! <= t / (1 - b/(cap+2));
    # mass of sourceless currents with a multiplicity above cap is then at
    # most |E| * R * exp(beta (|E|-1)).
    lead = beta ** (cap + 1) / math.factorial(cap + 1)
    remainder = lead / (1.0 - beta / (cap + 2))
    tail_mass = n_e * remainder * math.exp(beta * max(n_e - 1, 0))
    tail_bound = tail_mass / z_trunc
    weights = {int(m): float(unnorm[m]) for m in np.nonzero(unnorm > 0)[0]}
    dist = _normalized(gq, n_e, weights)
    return dist, tail_bound


def enumerate_interfaces(g: MultiGraph, x: float) -> Distribution:
    """Exact interface law of the plus-boundary Ising model on the dual of g.

    The dual inverse temperature solves exp(-2 beta*) = x, so the spin
    weight exp(beta* sum sigma_f sigma_g) is proportional to x^(number of
    disagreeing face pairs) = x^o(interface config); with the outer face
    pinned to +1 this is the loop O(1) law on the primal edges.
    """
    from .models import SpinConfig, interfaces, planar_dual

    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    _check_edge_cap(g)
    if x == 0.0:
        return Distribution(g, g.n_edges, {0: 1.0})
    dual = planar_dual(g)
    if not dual.boundary:
        raise ValueError("host has no outer face; interfaces need a patch")
    outer = next(iter(dual.boundary))
    beta_star = -0.5 * math.log(x)
    spin_dist = enumerate_ising(dual, beta_star, boundary_spins={outer: +1})
    out: dict[int, float] = {}
    for spin_bits, prob in spin_dist.probs.items():
        cfg = interfaces(g, SpinConfig(dual, spin_bits))
        out[cfg.bits] = out.get(cfg.bits, 0.0) + prob
    return _normalized(g, g.n_edges, out)


def brute_force_even_count(g: MultiGraph, bits: int) -> int:
    """Number of even subsets of the open edge set, by direct enumeration.

    Gray-code walk over all subsets maintaining the odd-vertex count; this
    is the independent check of the 2^(kappa + o - |V|) identity.
    """
    open_edges = [e for e in range(g.n_edges) if (bits >> e) & 1]
    k = len(open_edges)
    parity = bytearray(g.n_vertices)
    odd = 0
    count = 1  # empty subset
    for i in range(1, 1 << k):
        e = open_edges[(i & -i).bit_length() - 1]
        a, b = g.edges[e]
        for vtx in (a, b) if a != b else ():
            parity[vtx] ^= 1
            odd += 1 if parity[vtx] else -1
        if odd == 0:
            count += 1
    return count


def identity_report(g: MultiGraph, bc: BoundaryCondition | None, p: float,
                    tol: float = 1e-12, current_cap: int = 40,
                    host_name: str = "host") -> list[dict]:
    """Exact coupling-identity suite on one host; one record per identity."""
    from .models import ModelParams

    mp = ModelParams.from_p(p)
    bc_name = "free" if bc is None or bc.is_free() else "bc"
    records = []

    def record(identity: str, value: float, tolerance: float):
        records.append({
            "identity": identity,
            "host": host_name,
            "bc": bc_name,
            "params": {"p": mp.p, "x": mp.x, "beta": mp.beta},
            "tv": value,
            "tolerance": tolerance,
            "pass": bool(value <= tolerance),
        })

    rc = enumerate_rc(g, bc, mp.p)
    loop = enumerate_loop(g, bc, mp.x)
    record("ueg_of_rc_is_loop", tv_distance(pushforward_ueg(rc), loop), tol)

    bern_x = bernoulli_distribution(rc.graph, mp.x)
    record("loop_union_bernoulli_is_rc",
           tv_distance(pushforward_union(loop, bern_x), rc), tol)

    bern_cur = bernoulli_distribution(rc.graph, mp.current_union_density)
    single = pushforward_union(loop, bern_cur)
    double = pushforward_union(single, single)
    record("ueg_of_double_current_is_loop",
           tv_distance(pushforward_ueg(double), loop), tol)

    if rc.graph.n_edges <= DENSE_CAP_BITS:
        # tolerance: truncation tail plus the acceptance allowance 1e-8 for
        # float accumulation across the two dense enumeration routes
        trunc, tail = current_truncated(rc.graph, mp.beta, cap=current_cap)
        record("current_union_matches_truncated_series",
               tv_distance(single, trunc), max(tail + tol, CURRENT_SERIES_TOL))

    if g.n_edges <= 12:
        bad = 0
        for bits in range(1 << g.n_edges):
            c = EdgeConfig(g, bits)
            if brute_force_even_count(g, bits) != 1 << count_even_log2(c):
                bad += 1
        record("even_counting_identity", float(bad), 0.0)
    return records


def correlation_report(g: MultiGraph, beta: float, tol: float = 1e-10,
                       host_name: str = "host") -> list[dict]:
    """Two-point identities: Ising vs RC connectivity and its square vs P(x)2."""
    from .models import ModelParams

    mp = ModelParams.from_beta(beta)
    rc = enumerate_rc(g, None, mp.p)
    loop = enumerate_loop(g, None, mp.x)
    bern = bernoulli_distribution(g, mp.current_union_density)
    single = pushforward_union(loop, bern)
    double = pushforward_union(single, single)
    worst_rc = 0.0
    worst_dc = 0.0
    for v in range(g.n_vertices):
        for w in range(v + 1, g.n_vertices):
            corr = correlation(g, beta, v, w)
            worst_rc = max(worst_rc, abs(corr - connectivity(rc, v, w)))
            worst_dc = max(worst_dc, abs(corr**2 - connectivity(double, v, w)))
    return [
        {"identity": "correlation_is_rc_connectivity", "host": host_name,
         "params": {"beta": beta}, "tv": worst_rc, "tolerance": tol,
         "pass": bool(worst_rc <= tol)},
        {"identity": "correlation_squared_is_double_current", "host": host_name,
         "params": {"beta": beta}, "tv": worst_dc, "tolerance": tol,
         "pass": bool(worst_dc <= tol)},
    ]
