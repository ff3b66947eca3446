"""Parameter algebra and samplers for the coupled percolation measures.

Covers Bernoulli percolation, the q=2 random-cluster model, the Ising
model, the loop O(1) model and the traced sourceless single/double random
currents, all tied together by the standard (beta, p, x) parametrisation:

    p = 1 - exp(-2 beta),   x = tanh(beta) = p / (2 - p).

Boundary conditions act through the quotient multigraph; every sampler
returns configurations indexed by the original host's edge order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .evens import EdgeConfig, SourceSet, bits_to_mask, is_even, mask_to_bits, sample_ueg
from .lattice import BoundaryCondition, LatticeError, MultiGraph, quotient, vertex_classes

__all__ = [
    "ModelParams",
    "SpinConfig",
    "Current",
    "convert",
    "dual_parameter",
    "weight_rc",
    "weight_ising",
    "weight_loop",
    "weight_current",
    "sample_bernoulli",
    "SwChain",
    "sample_rc_sw",
    "ExactRcSampler",
    "sample_rc_exact",
    "sample_rc_exact_coupled",
    "sample_loop",
    "sample_current",
    "sample_double_current",
    "sample_domination_triple",
    "sample_ising",
    "planar_dual",
    "interfaces",
    "DEFAULT_BURNIN",
    "DEFAULT_THIN",
]

DEFAULT_BURNIN = 64
DEFAULT_THIN = 4

EXACT_EDGE_CAP = 24
ISING_VERTEX_CAP = 20


class OracleSizeError(ValueError):
    """Host too large for one of the exact enumeration caps."""


@dataclass(frozen=True)
class ModelParams:
    """Coupled parameter triple; construct from any one of beta, p, x."""

    beta: float
    p: float
    x: float

    @staticmethod
    def from_beta(beta: float) -> "ModelParams":
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if math.isinf(beta):
            return ModelParams(beta=math.inf, p=1.0, x=1.0)
        return ModelParams(beta=beta, p=-math.expm1(-2.0 * beta), x=math.tanh(beta))

    @staticmethod
    def from_p(p: float) -> "ModelParams":
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if p == 1.0:
            return ModelParams(beta=math.inf, p=1.0, x=1.0)
        return ModelParams(beta=-0.5 * math.log1p(-p), p=p, x=p / (2.0 - p))

    @staticmethod
    def from_x(x: float) -> "ModelParams":
        if not 0.0 <= x <= 1.0:
            raise ValueError("x must lie in [0, 1]")
        if x == 1.0:
            return ModelParams(beta=math.inf, p=1.0, x=1.0)
        return ModelParams(beta=math.atanh(x), p=2.0 * x / (x + 1.0), x=x)

    @property
    def current_union_density(self) -> float:
        """Bernoulli density 1 - 1/cosh(beta) completing the loop model to a current."""
        if math.isinf(self.beta):
            return 1.0
        return 1.0 - 1.0 / math.cosh(self.beta)


def convert(*, beta: float | None = None, p: float | None = None,
            x: float | None = None) -> ModelParams:
    """Full parameter triple from exactly one of beta, p, x."""
    given = [v is not None for v in (beta, p, x)]
    if sum(given) != 1:
        raise ValueError("give exactly one of beta, p, x")
    if beta is not None:
        return ModelParams.from_beta(beta)
    if p is not None:
        return ModelParams.from_p(p)
    return ModelParams.from_x(x)


def dual_parameter(p: float) -> float:
    """The planar dual p* with p p* = 2 (1-p)(1-p*); an involution on (0,1)."""
    if not 0.0 < p < 1.0:
        raise ValueError("duality is defined for p in (0, 1)")
    return 2.0 * (1.0 - p) / (2.0 - p)


@dataclass(frozen=True)
class SpinConfig:
    """+-1 spins on the vertices; bit v set means spin -1."""

    graph: MultiGraph
    bits: int

    @staticmethod
    def all_plus(g: MultiGraph) -> "SpinConfig":
        return SpinConfig(g, 0)

    def sign(self, v: int) -> int:
        return -1 if (self.bits >> v) & 1 else 1

    def signs(self) -> np.ndarray:
        mask = bits_to_mask(self.bits, self.graph.n_vertices)
        return 1 - 2 * mask.astype(np.int64)


@dataclass(frozen=True)
class Current:
    """Nonnegative integer edge multiplicities."""

    graph: MultiGraph
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if len(self.multiplicities) != self.graph.n_edges:
            raise ValueError("multiplicity count does not match edge count")
        if any(m < 0 for m in self.multiplicities):
            raise ValueError("multiplicities must be nonnegative")

    def sources(self) -> SourceSet:
        parity = [0] * self.graph.n_vertices
        for e, m in enumerate(self.multiplicities):
            if m % 2:
                a, b = self.graph.edges[e]
                parity[a] ^= 1
                parity[b] ^= 1
        bits = 0
        for v, odd in enumerate(parity):
            if odd:
                bits |= 1 << v
        return SourceSet(self.graph, bits)

    def trace(self) -> EdgeConfig:
        bits = 0
        for e, m in enumerate(self.multiplicities):
            if m > 0:
                bits |= 1 << e
        return EdgeConfig(self.graph, bits)


def _energy(s: SpinConfig) -> int:
    """H(sigma) = -sum over edges of sigma_v sigma_w (multiplicity counted)."""
    total = 0
    for a, b in s.graph.edges:
        total += s.sign(a) * s.sign(b)
    return -total


def weight_rc(c: EdgeConfig, bc: BoundaryCondition | None, p: float) -> float:
    """Unnormalized random-cluster weight 2^kappa(c^xi) (p/(1-p))^o(c)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not 0.0 < p < 1.0:
        raise ValueError("p in {0,1} is a point mass; handle it upstream")
    from .evens import kappa

    gq = quotient(c.graph, bc)
    k = kappa(gq, c.bits)
    return (2.0 ** k) * (p / (1.0 - p)) ** c.open_count()


def weight_ising(s: SpinConfig, beta: float) -> float:
    return math.exp(-beta * _energy(s))


def weight_loop(c: EdgeConfig, bc: BoundaryCondition | None, x: float) -> float:
    if not is_even(c, bc):
        return 0.0
    return float(x) ** c.open_count()


def weight_current(n: Current, beta: float) -> float:
    if not n.sources().is_empty():
        return 0.0
    w = 1.0
    for m in n.multiplicities:
        w *= beta**m / math.factorial(m)
    return w


def sample_bernoulli(g: MultiGraph, q: float, rng: np.random.Generator) -> EdgeConfig:
    """Each edge open independently with probability q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    mask = (rng.random(g.n_edges) < q).astype(np.uint8)
    return EdgeConfig(g, mask_to_bits(mask))


def _spin_rep(g: MultiGraph, bc: BoundaryCondition | None):
    """Quotient graph plus quotient-vertex -> original-representative map.

    Cluster spins are drawn from per-original-vertex uniforms through this
    map, so chains on a host and on its quotient can share randomness.
    """
    gq = quotient(g, bc)
    if gq is g:
        return g, np.arange(g.n_vertices, dtype=np.int32)
    vmap = vertex_classes(g, bc)
    rep = np.full(gq.n_vertices, -1, dtype=np.int32)
    for old in range(g.n_vertices - 1, -1, -1):
        rep[vmap[old]] = old
    return gq, rep


class SwChain:
    """Swendsen-Wang Markov chain with the random-cluster measure invariant.

    The chain lives on the quotient graph; :meth:`config` reports the state
    in the original host's edge indexing.  Randomness comes either from the
    chain's own generator (:meth:`advance`) or from caller-provided uniform
    arrays (:meth:`run`), which is how coupled free/wired chains share
    draws.
    """

    def __init__(self, g: MultiGraph, bc: BoundaryCondition | None, p: float,
                 initial: EdgeConfig | None = None):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.host = g
        self.p = float(p)
        self.gq, self.spin_code = _spin_rep(g, bc)
        self.n_uniform_vertices = g.n_vertices
        if initial is None:
            bits = (1 << g.n_edges) - 1
        else:
            bits = initial.bits
        self._bits = bits_to_mask(bits, g.n_edges)
        self._spins = np.zeros(self.gq.n_vertices, dtype=np.uint8)
        # forced_vertex is a quotient-vertex index; forced_spin 1 = spin +1
        self.forced_vertex = -1
        self.forced_spin = 0

    def run(self, edge_unif: np.ndarray, vert_unif: np.ndarray) -> None:
        """Run one sweep per row of the uniform arrays."""
        _kernels.sw_run(
            self.gq.n_vertices, self.gq.edge_a, self.gq.edge_b, self._bits,
            self.p, edge_unif, vert_unif, self.spin_code,
            self.forced_vertex, self.forced_spin, self._spins,
        )

    def advance(self, sweeps: int, rng: np.random.Generator) -> None:
        if sweeps <= 0:
            return
        edge_unif = rng.random((sweeps, self.host.n_edges))
        vert_unif = rng.random((sweeps, self.n_uniform_vertices))
        self.run(edge_unif, vert_unif)

    def config(self) -> EdgeConfig:
        return EdgeConfig(self.host, mask_to_bits(self._bits))

    def spins(self) -> SpinConfig:
        """Spins of the last sweep on the quotient graph (Edwards-Sokal)."""
        bits = mask_to_bits(1 - self._spins)
        return SpinConfig(self.gq, bits)


def sample_rc_sw(g: MultiGraph, bc: BoundaryCondition | None, p: float,
                 sweeps: int, rng: np.random.Generator,
                 initial: EdgeConfig | None = None) -> EdgeConfig:
    """One random-cluster sample after the given number of SW sweeps."""
    chain = SwChain(g, bc, p, initial=initial)
    chain.advance(sweeps, rng)
    return chain.config()


def sw_thinned_bit_samples(g: MultiGraph, bc: BoundaryCondition | None, p: float,
                           n_samples: int, rng: np.random.Generator,
                           burnin: int = DEFAULT_BURNIN, thin: int = DEFAULT_THIN,
                           chunk: int = 4096) -> np.ndarray:
    """Bit-packed Swendsen-Wang samples from one chain, thinned.

    Runs the whole chain inside the kernel (uniforms fed in chunks), so
    million-sample runs on small hosts stay cheap.  Needs <= 63 edges.
    """
    if g.n_edges > 63:
        raise OracleSizeError("bit-packed chain sampling needs <= 63 edges")
    chain = SwChain(g, bc, p)
    chain.advance(burnin, rng)
    gq = chain.gq
    out = np.empty(n_samples, dtype=np.uint64)
    done = 0
    while done < n_samples:
        take = min(chunk, n_samples - done)
        edge_u = rng.random((take * thin, g.n_edges))
        vert_u = rng.random((take * thin, chain.n_uniform_vertices))
        done += _kernels.sw_run_collect(
            gq.n_vertices, gq.edge_a, gq.edge_b, chain._bits, chain.p,
            edge_u, vert_u, chain.spin_code, thin, out, done,
        )
    return out


class ExactRcSampler:
    """Perfect random-cluster sampler by sequential conditional probabilities.

    Precomputes the weight of every configuration of the quotient graph and
    folds them into a prefix-mass heap; a sample is a walk down the heap
    comparing one uniform per edge against the exact conditional opening
    probability.  Shared uniforms across two parameter values realize the
    increasing coupling.
    """

    def __init__(self, g: MultiGraph, bc: BoundaryCondition | None, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.host = g
        self.p = float(p)
        n_e = g.n_edges
        self._degenerate = None
        if p == 0.0:
            self._degenerate = 0
            return
        if p == 1.0:
            self._degenerate = (1 << n_e) - 1
            return
        if n_e > EXACT_EDGE_CAP:
            raise OracleSizeError(
                f"exact sampler cap is {EXACT_EDGE_CAP} edges, host has {n_e}"
            )
        gq = quotient(g, bc)
        kap = _kernels.kappa_table(gq.n_vertices, gq.edge_a, gq.edge_b)
        opens = np.bitwise_count(np.arange(1 << n_e, dtype=np.uint64)).astype(np.float64)
        weights = np.exp2(kap.astype(np.float64)) * (p / (1.0 - p)) ** opens
        self.weights = weights / weights.sum()
        heap = np.empty((1 << (n_e + 1)) - 1, dtype=np.float64)
        heap[(1 << n_e) - 1:] = weights
        for j in range(n_e - 1, -1, -1):
            off, nxt, half = (1 << j) - 1, (1 << (j + 1)) - 1, 1 << j
            heap[off:off + half] = heap[nxt:nxt + half] + heap[nxt + half:nxt + 2 * half]
        self._heap = heap

    def sample_bits(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self._degenerate is not None:
            if self.host.n_edges > 63:
                raise OracleSizeError("bit-packed sampling needs <= 63 edges")
            return np.full(n, self._degenerate, dtype=np.uint64)
        return self.sample_bits_from_uniforms(rng.random((n, self.host.n_edges)))

    def sample_bits_from_uniforms(self, uniforms: np.ndarray) -> np.ndarray:
        if self._degenerate is not None:
            return np.full(uniforms.shape[0], self._degenerate, dtype=np.uint64)
        out = np.empty(uniforms.shape[0], dtype=np.uint64)
        _kernels.rc_tree_walk(self._heap, self.host.n_edges, uniforms, out)
        return out

    def sample(self, rng: np.random.Generator) -> EdgeConfig:
        if self._degenerate is not None:
            return EdgeConfig(self.host, self._degenerate)
        return EdgeConfig(self.host, int(self.sample_bits(1, rng)[0]))


def sample_rc_exact(g: MultiGraph, bc: BoundaryCondition | None, p: float,
                    rng: np.random.Generator) -> EdgeConfig:
    return ExactRcSampler(g, bc, p).sample(rng)


def sample_rc_exact_coupled(g: MultiGraph, bc: BoundaryCondition | None,
                            p1: float, p2: float, n: int,
                            rng: np.random.Generator):
    """n coupled draws (omega_1, omega_2) from shared uniforms; p1 <= p2 nests them."""
    s1 = ExactRcSampler(g, bc, p1)
    s2 = ExactRcSampler(g, bc, p2)
    uniforms = rng.random((n, g.n_edges))
    return s1.sample_bits_from_uniforms(uniforms), s2.sample_bits_from_uniforms(uniforms)


def sample_loop(g: MultiGraph, bc: BoundaryCondition | None, x: float,
                rng: np.random.Generator, backend: str = "exact",
                sweeps: int | None = None) -> EdgeConfig:
    """Loop O(1) sample: an RC sample at p = 2x/(x+1), then the UEG of it.

    The two-stage sampling happens on the quotient graph, matching the
    definition of the loop model with boundary conditions.
    """
    params = ModelParams.from_x(x)
    if x == 0.0:
        return EdgeConfig.empty(g)
    gq = quotient(g, bc)
    if backend == "exact":
        omega_q = EdgeConfig(gq, ExactRcSampler(gq, None, params.p).sample(rng).bits)
    elif backend == "sw":
        n_sweeps = DEFAULT_BURNIN if sweeps is None else sweeps
        omega_q = EdgeConfig(gq, sample_rc_sw(gq, None, params.p, n_sweeps, rng).bits)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    eta = sample_ueg(omega_q, rng)
    return EdgeConfig(g, eta.bits)


def sample_current(g: MultiGraph, beta: float, rng: np.random.Generator,
                   backend: str = "exact", sweeps: int | None = None) -> EdgeConfig:
    """Traced sourceless single current: loop sample union independent Bernoulli."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    params = ModelParams.from_beta(beta)
    eta = sample_loop(g, None, params.x, rng, backend=backend, sweeps=sweeps)
    extra = sample_bernoulli(g, params.current_union_density, rng)
    return eta | extra

def sample_double_current(g: MultiGraph, beta: float, rng: np.random.Generator,
                          backend: str = "exact", sweeps: int | None = None) -> EdgeConfig:
    n1 = sample_current(g, beta, rng, backend=backend, sweeps=sweeps)
    n2 = sample_current(g, beta, rng, backend=backend, sweeps=sweeps)
    return n1 | n2


def sample_domination_triple(g: MultiGraph, beta: float, rng: np.random.Generator):
    """(loop, current, rc) built from shared draws, nested by construction.

    eta <= eta u B_{1-1/cosh} <= eta u B_{tanh} since 1-1/cosh(b) <= tanh(b);
    the three marginals are the loop O(1) model, the traced single current
    and the random-cluster model at coupled parameters.
    """
    params = ModelParams.from_beta(beta)
    gq = g
    omega = ExactRcSampler(gq, None, params.p).sample(rng)
    eta = sample_ueg(omega, rng)
    u = rng.random(g.n_edges)
    low = mask_to_bits((u < params.current_union_density).astype(np.uint8))
    high = mask_to_bits((u < params.x).astype(np.uint8))
    current = EdgeConfig(g, eta.bits | low)
    rc = EdgeConfig(g, eta.bits | high)
    return eta, current, rc


def sample_ising(g: MultiGraph, beta: float, rng: np.random.Generator,
                 bc: BoundaryCondition | None = None,
                 boundary_spins: dict[int, int] | None = None,
                 backend: str = "exact", sweeps: int | None = None) -> SpinConfig:
    """Ising spins on the quotient graph, by exact enumeration or SW + Edwards-Sokal.

    ``boundary_spins`` fixes the spins of the given (quotient) vertices;
    wired classes carry one shared spin by construction.
    """
    gq = quotient(g, bc)
    if backend == "exact":
        from .oracle import enumerate_ising

        dist = enumerate_ising(gq, beta, boundary_spins=boundary_spins)
        keys = list(dist.probs.keys())
        probs = np.array([dist.probs[k] for k in keys])
        pick = rng.choice(len(keys), p=probs / probs.sum())
        return SpinConfig(gq, keys[int(pick)])
    if backend != "sw":
        raise ValueError(f"unknown backend {backend!r}")
    params = ModelParams.from_beta(beta)
    chain = SwChain(gq, None, params.p)
    if boundary_spins:
        items = sorted(boundary_spins.items())
        if len({s for _, s in items}) > 1:
            raise ValueError("SW backend supports one forced spin value")
        v0, s0 = items[0]
        chain.forced_vertex = int(v0)
        chain.forced_spin = 0 if s0 < 0 else 1
    chain.advance(DEFAULT_BURNIN if sweeps is None else sweeps, rng)
    return chain.spins()


def planar_dual(g: MultiGraph) -> MultiGraph:
    """Dual multigraph of a planar host with a face list.

    Dual vertex i is internal face i; if any edge borders fewer than two
    internal faces, a final outer-face vertex is appended.  Dual edge k
    corresponds to primal edge k.
    """
    if g.faces is None:
        raise LatticeError("host has no face structure")
    side = [[] for _ in range(g.n_edges)]
    for f, face in enumerate(g.faces):
        for e in face:
            side[e].append(f)
    if any(len(s) > 2 for s in side):
        raise LatticeError("an edge borders more than two faces")
    needs_outer = any(len(s) < 2 for s in side)
    outer = len(g.faces)
    edges = []
    for s in side:
        pair = list(s) + [outer] * (2 - len(s))
        edges.append((pair[0], pair[1]))
    return MultiGraph(
        n_vertices=len(g.faces) + (1 if needs_outer else 0),
        edges=tuple(edges),
        boundary=frozenset((outer,)) if needs_outer else frozenset(),
    )


def interfaces(g: MultiGraph, spins: SpinConfig) -> EdgeConfig:
    """Interface edges of a spin configuration on the planar dual of g.

    Primal edge e is open iff the two faces separated by e carry opposite
    spins; with plus boundary conditions on the outer face this is the loop
    O(1) coupling.
    """
    dual = planar_dual(g)
    if spins.graph.n_vertices != dual.n_vertices:
        raise LatticeError("spin configuration does not match the dual graph")
    bits = 0
    for e, (f1, f2) in enumerate(dual.edges):
        if spins.sign(f1) != spins.sign(f2):
            bits |= 1 << e
    return EdgeConfig(g, bits)
