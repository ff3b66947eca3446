"""Monte Carlo estimation with batch-means error bars.

Sampling is organized as ``n_batches`` independent replicas, each driven by
its own child stream split off the master seed (numpy SeedSequence spawn
keys), so results are reproducible and independent of how batches are
scheduled across workers.  Markov-chain backends absorb autocorrelation
into the batch means; exact backends are i.i.d. and use the same path.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .evens import EdgeConfig, mask_to_bits, marginal_ueg_exact
from .lattice import (
    BoundaryCondition,
    LatticeError,
    MultiGraph,
    edge_subset_by_coords,
    hyperplane,
    quotient,
)
from .models import (
    DEFAULT_BURNIN,
    DEFAULT_THIN,
    ExactRcSampler,
    ModelParams,
    SwChain,
)
from .topology import count_disjoint_wraparounds, cnt_vertex_count

__all__ = [
    "EstimateRow",
    "SamplerSpec",
    "EdgeEvent",
    "GapEstimate",
    "clusters",
    "estimate",
    "mixing_gap",
    "factorization_gap",
    "event_probability_exact_ueg",
    "batch_rng",
    "DEFAULT_BATCHES",
]

DEFAULT_BATCHES = 32
MIN_BATCHES = 16


def batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    """Counter-split child stream for one batch."""
    ss = np.random.SeedSequence(seed, spawn_key=(batch_index,))
    return np.random.Generator(np.random.PCG64(ss))


def clusters(c: EdgeConfig) -> np.ndarray:
    """Union-find component labels (label = root vertex index)."""
    g = c.graph
    return _kernels.uf_components(g.n_vertices, g.edge_a, g.edge_b, c.mask())


@dataclass(frozen=True)
class EstimateRow:
    observable: str
    estimate: float
    stderr: float
    n_samples: int
    n_batches: int
    host: str
    d: int | None
    n: int | None
    model: str
    beta: float
    p: float
    x: float
    bc: str
    seed: int

    def csv_fields(self) -> list:
        return [
            self.observable, self.host, self.d, self.n, self.model,
            f"{self.beta:.12g}", f"{self.p:.12g}", f"{self.x:.12g}", self.bc,
            f"{self.estimate:.10g}", f"{self.stderr:.4g}",
            self.n_samples, self.seed,
        ]


CSV_HEADER = [
    "observable", "host", "d", "n", "model", "beta", "p", "x", "bc",
    "estimate", "stderr", "n_samples", "seed",
]


@dataclass(frozen=True)
class SamplerSpec:
    """Which measure to sample on which host, and with what backend."""

    graph: MultiGraph
    model: str  # loop | rc | bernoulli | current | double_current
    params: ModelParams
    bc: BoundaryCondition | None = None
    backend: str = "sw"  # sw | exact
    burnin: int = DEFAULT_BURNIN
    thin: int = DEFAULT_THIN
    host_label: str = "host"
    d: int | None = None
    n: int | None = None
    bc_label: str = "free"


class _SampleStream:
    """Yields uint8 edge masks of one batch's samples (host edge indexing)."""

    def __init__(self, spec: SamplerSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.gq = quotient(spec.graph, spec.bc)
        self._chains: list[SwChain] = []
        self._exact: ExactRcSampler | None = None
        model, backend = spec.model, spec.backend
        if model in ("loop", "rc", "current"):
            self._chains = [self._new_chain()] if backend == "sw" else []
        elif model == "double_current":
            self._chains = [self._new_chain(), self._new_chain()] if backend == "sw" else []
        elif model != "bernoulli":
            raise ValueError(f"unknown model {model!r}")
        if backend == "exact" and model != "bernoulli":
            self._exact = ExactRcSampler(self.gq, None, spec.params.p)
        if backend == "sw":
            for chain in self._chains:
                chain.advance(spec.burnin, rng)

    def _new_chain(self) -> SwChain:
        return SwChain(self.gq, None, self.spec.params.p)

    def _rc_mask(self, chain_idx: int = 0) -> np.ndarray:
        if self.spec.backend == "sw":
            chain = self._chains[chain_idx]
            chain.advance(self.spec.thin, self.rng)
            return chain._bits.copy()
        bits = int(self._exact.sample_bits(1, self.rng)[0])
        return EdgeConfig(self.gq, bits).mask()

    def _ueg_of(self, open_mask: np.ndarray) -> np.ndarray:
        g = self.gq
        indptr, adj_edge, adj_other = g.adjacency_csr
        coins = (self.rng.random(g.n_edges) < 0.5).astype(np.uint8)
        out = np.zeros(g.n_edges, dtype=np.uint8)
        _kernels.ueg_sample(g.n_vertices, indptr, adj_edge, adj_other,
                            g.edge_a, g.edge_b, open_mask, coins, out)
        return out

    def _current_mask(self, chain_idx: int = 0) -> np.ndarray:
        eta = self._ueg_of(self._rc_mask(chain_idx))
        extra = self.rng.random(self.gq.n_edges) < self.spec.params.current_union_density
        return np.maximum(eta, extra.astype(np.uint8))

    def next_mask(self) -> np.ndarray:
        model = self.spec.model
        if model == "bernoulli":
            return (self.rng.random(self.gq.n_edges) < self.spec.params.p).astype(np.uint8)
        if model == "rc":
            return self._rc_mask()
        if model == "loop":
            return self._ueg_of(self._rc_mask())
        if model == "current":
            return self._current_mask()
        # double current: union of two independent single currents
        return np.maximum(self._current_mask(0), self._current_mask(1))


def _torus_linf_distances(g: MultiGraph, v: int) -> np.ndarray:
    coords = g.coord_array
    delta = np.abs(coords - coords[v])
    if g.torus_period is not None:
        delta = np.minimum(delta, g.torus_period - delta)
    return delta.max(axis=1)


def make_observable(spec: SamplerSpec, obs):
    """(name, per-sample function on uint8 masks) for an observable tuple."""
    g = spec.graph
    kind = obs[0]
    cluster_graph = quotient(g, spec.bc)

    def labels_of(mask):
        return _kernels.uf_components(
            cluster_graph.n_vertices, cluster_graph.edge_a, cluster_graph.edge_b, mask
        )

    if kind == "p_connect":
        _, v, w = obs

        def fn(mask):
            lab = labels_of(mask)
            return 1.0 if lab[v] == lab[w] else 0.0

        return f"p_connect({v},{w})", fn
    if kind == "p_reach_boundary":
        _, v, k = obs
        if spec.bc is not None and not spec.bc.is_free():
            raise LatticeError("distance observables need the free host")
        dist = _torus_linf_distances(g, v)

        def fn(mask):
            lab = labels_of(mask)
            return 1.0 if dist[lab == lab[v]].max(initial=0) >= k else 0.0

        return f"p_reach_boundary({v},{k})", fn
    if kind == "mean_cluster_size":
        _, v = obs

        def fn(mask):
            lab = labels_of(mask)
            return float((lab == lab[v]).sum())

        return f"mean_cluster_size({v})", fn
    if kind == "mean_radius":
        _, v = obs
        if g.torus_period is not None:
            raise LatticeError("mean_radius is defined on boxes, not tori")
        coords = g.coord_array

        def fn(mask):
            lab = labels_of(mask)
            pts = coords[lab == lab[v]]
            return float((pts.max(axis=0) - pts.min(axis=0)).max())

        return f"mean_radius({v})", fn
    if kind in ("p_in_cnt", "cnt_density"):
        if g.torus_period is None:
            raise LatticeError("C_NT observables require a torus host")
        h = hyperplane(g, 0)
        volume = g.n_vertices
        label = "p_in_cnt(0)" if kind == "p_in_cnt" else "cnt_density"

        def fn(mask):
            cfg = EdgeConfig(g, mask_to_bits(mask))
            return cnt_vertex_count(cfg, h) / volume

        return label, fn
    if kind == "wraparound_lb":
        if g.torus_period is None:
            raise LatticeError("wrap-around counting requires a torus host")
        h = hyperplane(g, 0)

        def fn(mask):
            cfg = EdgeConfig(g, mask_to_bits(mask))
            return float(count_disjoint_wraparounds(cfg, h))

        return "wraparound_lb", fn
    raise ValueError(f"unknown observable {obs!r}")


def _run_batch(spec: SamplerSpec, obs, batch_idx: int, batch_size: int,
               seed: int) -> float:
    rng = batch_rng(seed, batch_idx)
    stream = _SampleStream(spec, rng)
    _, fn = make_observable(spec, obs)
    total = 0.0
    for _ in range(batch_size):
        total += fn(stream.next_mask())
    return total / batch_size


def _worker_count() -> int:
    return max(1, int(os.environ.get("ISINGREP_WORKERS", "1")))


def estimate(obs, spec: SamplerSpec, n_samples: int, seed: int,
             n_batches: int = DEFAULT_BATCHES) -> EstimateRow:
    """Batched mean and batch-means standard error of an observable.

    The sample count is rounded up to a multiple of the batch count; every
    batch is an independent replica (its own burn-in for chain backends).
    """
    if n_batches < MIN_BATCHES:
        raise ValueError(f"need at least {MIN_BATCHES} batches")
    batch_size = -(-n_samples // n_batches)
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_batch, spec, obs, b, batch_size, seed)
                for b in range(n_batches)
            ]
            means = np.array([f.result() for f in futures])
    else:
        means = np.array([
            _run_batch(spec, obs, b, batch_size, seed) for b in range(n_batches)
        ])
    name, _ = make_observable(spec, obs)
    est = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    return EstimateRow(
        observable=name, estimate=est, stderr=se,
        n_samples=batch_size * n_batches, n_batches=n_batches,
        host=spec.host_label, d=spec.d, n=spec.n, model=spec.model,
        beta=spec.params.beta, p=spec.params.p, x=spec.params.x,
        bc=spec.bc_label, seed=seed,
    )


@dataclass(frozen=True)
class EdgeEvent:
    """A local event on the edges of a window subgraph (e.g. a small box).

    ``predicate`` reads the window-bit integer (bit i = window edge i); the
    window edges are located inside each host by coordinate matching, so
    one event can be evaluated on hosts of different sizes.
    """

    window: MultiGraph
    predicate: object
    name: str

    def host_edges(self, host: MultiGraph) -> np.ndarray:
        return edge_subset_by_coords(host, self.window)

    def evaluate_mask(self, host_edges: np.ndarray, mask: np.ndarray) -> bool:
        bits = 0
        for i, e in enumerate(host_edges):
            if mask[e]:
                bits |= 1 << i
        return bool(self.predicate(bits))


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    stderr: float
    p_a: float
    p_b: float
    n_samples: int
    n_batches: int
    seed: int


def _paired_streams(spec_a: SamplerSpec, spec_b: SamplerSpec, rng):
    """Two streams driven by shared uniforms when the hosts align.

    Free and wired variants of the same box share their edge indexing and
    original vertex set, so Swendsen-Wang sweeps, cluster-spin draws and
    chord coins can all reuse one array of uniforms; the two chains then
    form a monotone-ish coupling and the gap estimator variance collapses.
    """
    ga, gb = spec_a.graph, spec_b.graph
    can_pair = (
        spec_a.model == "loop" and spec_b.model == "loop"
        and spec_a.backend == "sw" and spec_b.backend == "sw"
        and ga.n_edges == gb.n_edges and ga.n_vertices == gb.n_vertices
        and spec_a.params == spec_b.params
    )
    if not can_pair:
        return None
    return _PairedLoopStream(spec_a, spec_b, rng)


class _PairedLoopStream:
    def __init__(self, spec_a: SamplerSpec, spec_b: SamplerSpec, rng):
        if spec_a.model != "loop" or spec_b.model != "loop":
            raise ValueError("pairing is implemented for the loop model")
        self.rng = rng
        self.spec = spec_a
        self.qa = quotient(spec_a.graph, spec_a.bc)
        self.qb = quotient(spec_b.graph, spec_b.bc)
        self.ca = SwChain(spec_a.graph, spec_a.bc, spec_a.params.p)
        self.cb = SwChain(spec_b.graph, spec_b.bc, spec_b.params.p)
        self._sweeps(spec_a.burnin)

    def _sweeps(self, k: int) -> None:
        n_e = self.spec.graph.n_edges
        n_v = self.spec.graph.n_vertices
        edge_u = self.rng.random((k, n_e))
        vert_u = self.rng.random((k, n_v))
        self.ca.run(edge_u, vert_u)
        self.cb.run(edge_u, vert_u)

    def next_rc_masks(self):
        self._sweeps(self.spec.thin)
        return self.ca._bits, self.cb._bits

    def next_masks(self):
        self._sweeps(self.spec.thin)
        coins = (self.rng.random(self.spec.graph.n_edges) < 0.5).astype(np.uint8)
        out = []
        for chain, gq in ((self.ca, self.qa), (self.cb, self.qb)):
            indptr, adj_edge, adj_other = gq.adjacency_csr
            eta = np.zeros(gq.n_edges, dtype=np.uint8)
            _kernels.ueg_sample(gq.n_vertices, indptr, adj_edge, adj_other,
                                gq.edge_a, gq.edge_b, chain._bits, coins, eta)
            out.append(eta)
        return out[0], out[1]


MAX_CONDITIONAL_WINDOW = 6


class _ConditionalEvaluator:
    """Exact UEG-conditional probability of a window event given an RC config.

    The loop-model marginal on the window given omega is uniform on the
    GF(2) span of omega's fundamental cycles restricted to the window
    coordinates, so the per-sample statistic is the predicate averaged over
    that span.  Integrating the even-subgraph coins out removes their
    sampling noise entirely (same expectation, smaller variance).
    """

    def __init__(self, gq: MultiGraph, host_edges: np.ndarray, predicate):
        self.gq = gq
        self.predicate = predicate
        self.n_window = len(host_edges)
        self.win_of_edge = np.full(gq.n_edges, -1, dtype=np.int64)
        for i, e in enumerate(host_edges):
            self.win_of_edge[e] = i
        self.basis = np.zeros(max(self.n_window, 1), dtype=np.int64)
        indptr, adj_edge, adj_other = gq.adjacency_csr
        self._csr = (indptr, adj_edge, adj_other)

    def __call__(self, omega_mask: np.ndarray) -> float:
        indptr, adj_edge, adj_other = self._csr
        rank = _kernels.window_cycle_span(
            self.gq.n_vertices, indptr, adj_edge, adj_other,
            self.gq.edge_a, self.gq.edge_b, omega_mask,
            self.win_of_edge, self.n_window, self.basis,
        )
        gens = [int(b) for b in self.basis if b]
        hits = 0
        cur = 0
        total = 1 << rank
        for i in range(total):
            if i:
                cur ^= gens[(i & -i).bit_length() - 1]
            if self.predicate(cur):
                hits += 1
        return hits / total


def mixing_gap(event: EdgeEvent, spec_a: SamplerSpec, spec_b: SamplerSpec,
               n_samples: int, seed: int,
               n_batches: int = DEFAULT_BATCHES,
               conditional: bool | None = None) -> GapEstimate:
    """|P_A[event] - P_B[event]| with a paired batch-means standard error.

    When the two hosts align (same box, different boundary condition) the
    two chains share every uniform, so identical specs give gap exactly 0
    and nearby specs give strongly variance-reduced differences.  For the
    loop model on small windows the even-subgraph stage is integrated out
    exactly per sample (conditional mode, on by default).
    """
    if n_batches < MIN_BATCHES:
        raise ValueError(f"need at least {MIN_BATCHES} batches")
    batch_size = -(-n_samples // n_batches)
    ea = event.host_edges(spec_a.graph)
    eb = event.host_edges(spec_b.graph)
    if conditional is None:
        conditional = (
            spec_a.model == "loop" and spec_b.model == "loop"
            and len(ea) <= MAX_CONDITIONAL_WINDOW
        )
    if conditional and (spec_a.model != "loop" or spec_b.model != "loop"):
        raise ValueError("conditional mode applies to the loop model")
    cond_a = _ConditionalEvaluator(quotient(spec_a.graph, spec_a.bc), ea,
                                   event.predicate) if conditional else None
    cond_b = _ConditionalEvaluator(quotient(spec_b.graph, spec_b.bc), eb,
                                   event.predicate) if conditional else None
    diffs = np.empty(n_batches)
    pa_sum = 0.0
    pb_sum = 0.0
    for b in range(n_batches):
        rng = batch_rng(seed, b)
        paired = _paired_streams(spec_a, spec_b, rng)
        sa = sb = None
        if paired is None:
            sa = _SampleStream(spec_a, rng)
            sb = _SampleStream(spec_b, rng)
        da = db = 0.0
        for _ in range(batch_size):
            if paired is not None and conditional:
                ma, mb = paired.next_rc_masks()
                da += cond_a(ma)
                db += cond_b(mb)
            elif paired is not None:
                ma, mb = paired.next_masks()
                da += event.evaluate_mask(ea, ma)
                db += event.evaluate_mask(eb, mb)
            elif conditional:
                da += cond_a(sa._rc_mask())
                db += cond_b(sb._rc_mask())
            else:
                da += event.evaluate_mask(ea, sa.next_mask())
                db += event.evaluate_mask(eb, sb.next_mask())
        diffs[b] = (da - db) / batch_size
        pa_sum += da / batch_size
        pb_sum += db / batch_size
    gap = abs(float(diffs.mean()))
    se = float(diffs.std(ddof=1) / math.sqrt(n_batches))
    return GapEstimate(gap=gap, stderr=se, p_a=pa_sum / n_batches,
                       p_b=pb_sum / n_batches,
                       n_samples=batch_size * n_batches,
                       n_batches=n_batches, seed=seed)


def factorization_gap(event_a: EdgeEvent, event_b: EdgeEvent, spec: SamplerSpec,
                      n_samples: int, seed: int,
                      n_batches: int = DEFAULT_BATCHES) -> GapEstimate:
    """|P[A and B] - P[A] P[B]| under one measure, batch-means error."""
    if n_batches < MIN_BATCHES:
        raise ValueError(f"need at least {MIN_BATCHES} batches")
    batch_size = -(-n_samples // n_batches)
    ea = event_a.host_edges(spec.graph)
    eb = event_b.host_edges(spec.graph)
    gaps = np.empty(n_batches)
    pa_sum = pb_sum = 0.0
    for b in range(n_batches):
        rng = batch_rng(seed, b)
        stream = _SampleStream(spec, rng)
        na = nb = nab = 0.0
        for _ in range(batch_size):
            mask = stream.next_mask()
            hit_a = event_a.evaluate_mask(ea, mask)
            hit_b = event_b.evaluate_mask(eb, mask)
            na += hit_a
            nb += hit_b
            nab += hit_a and hit_b
        pa, pb, pab = na / batch_size, nb / batch_size, nab / batch_size
        gaps[b] = pab - pa * pb
        pa_sum += pa
        pb_sum += pb
    gap = abs(float(gaps.mean()))
    se = float(gaps.std(ddof=1) / math.sqrt(n_batches))
    return GapEstimate(gap=gap, stderr=se, p_a=pa_sum / n_batches,
                       p_b=pb_sum / n_batches,
                       n_samples=batch_size * n_batches,
                       n_batches=n_batches, seed=seed)


def event_probability_exact_ueg(event: EdgeEvent, g: MultiGraph,
                                bc: BoundaryCondition | None) -> float:
    """Exact probability of a window event under the x=1 loop model (UEG).

    Uses the span form of the exact UEG marginal on the window edges, so it
    works at any host size as long as the window is small.
    """
    host_edges = event.host_edges(g)
    dist = marginal_ueg_exact(g, [int(e) for e in host_edges], bc=bc)
    return dist.event_probability(event.predicate)
