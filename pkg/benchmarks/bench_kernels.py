"""Benchmark the hot kernels with numba against the pure-Python fallback.

Run without arguments to get a comparison table; the script re-executes
itself in subprocesses with ISINGREP_NUMBA=1/0 so each mode gets a fresh
import.  Individual modes: ``python bench_kernels.py --mode numba|pure``.
"""

import argparse
import json
import os
import subprocess
import sys
import time


def time_call(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmarks():
    import numpy as np

    import isingrep
    from isingrep import _kernels
    from isingrep.estimators import SamplerSpec, batch_rng, estimate
    from isingrep.lattice import build_torus, hyperplane
    from isingrep.models import ModelParams, SwChain, sw_thinned_bit_samples
    from isingrep.topology import cnt_vertex_count

    results = {"numba": isingrep.NUMBA_ENABLED}
    t = build_torus(2, 8)
    rng = batch_rng(0, 0)

    chain = SwChain(t, None, 0.75)
    chain.advance(8, rng)  # trigger compilation outside the timed region

    def sw_sweeps():
        chain.advance(200, rng)

    results["sw_sweeps_200_torus8"] = time_call(sw_sweeps)

    indptr, adj_edge, adj_other = t.adjacency_csr
    open_mask = chain._bits.copy()
    coins = (rng.random(t.n_edges) < 0.5).astype(np.uint8)
    out = np.zeros(t.n_edges, dtype=np.uint8)

    def ueg_batch():
        for _ in range(200):
            out[:] = 0
            _kernels.ueg_sample(t.n_vertices, indptr, adj_edge, adj_other,
                                t.edge_a, t.edge_b, open_mask, coins, out)

    ueg_batch()
    results["ueg_sample_200_torus8"] = time_call(ueg_batch)

    h = hyperplane(t, 0)
    cfg = chain.config()

    def classify_batch():
        for _ in range(200):
            cnt_vertex_count(cfg, h)

    classify_batch()
    results["classify_200_torus8"] = time_call(classify_batch)

    from isingrep.lattice import build_box

    g = build_box(2, 1)
    _kernels.kappa_table(g.n_vertices, g.edge_a, g.edge_b)
    results["kappa_table_4096"] = time_call(
        _kernels.kappa_table, g.n_vertices, g.edge_a, g.edge_b)

    sw_thinned_bit_samples(g, None, 0.5, 256, batch_rng(1, 0))
    results["sw_collect_20k_grid"] = time_call(
        sw_thinned_bit_samples, g, None, 0.5, 20000, batch_rng(1, 0))

    spec = SamplerSpec(graph=t, model="loop", params=ModelParams.from_x(0.6),
                       backend="sw", d=2, n=8)
    estimate(("p_in_cnt", 0), spec, 64, seed=2)
    results["estimate_cnt_1k_torus8"] = time_call(
        estimate, ("p_in_cnt", 0), spec, 1000, 2)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", choices=["numba", "pure"], default=None)
    args = parser.parse_args()
    if args.mode is not None:
        os.environ["ISINGREP_NUMBA"] = "1" if args.mode == "numba" else "0"
        print(json.dumps(run_benchmarks()))
        return
    rows = {}
    for mode in ("numba", "pure"):
        env = dict(os.environ, ISINGREP_NUMBA="1" if mode == "numba" else "0")
        out = subprocess.run(
            [sys.executable, __file__, "--mode", mode],
            env=env, capture_output=True, text=True, check=True,
        )
        rows[mode] = json.loads(out.stdout.strip().splitlines()[-1])
    keys = [k for k in rows["numba"] if k != "numba"]
    width = max(len(k) for k in keys)
    print(f"{'kernel':<{width}}  {'numba [s]':>10}  {'pure [s]':>10}  {'speedup':>8}")
    for k in keys:
        tn, tp = rows["numba"][k], rows["pure"][k]
        print(f"{k:<{width}}  {tn:>10.4f}  {tp:>10.4f}  {tp / tn:>7.1f}x")


if __name__ == "__main__":
    main()
