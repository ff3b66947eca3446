"""JSON-configured experiment runner.

Subcommands: ``enumerate-check`` (exact coupling-identity suite, JSON
report), ``torus-scan`` (wrap-around observables across torus sizes, CSV),
``mixing-scan`` (free-vs-wired event gaps across box sizes, CSV) and
``sample`` (raw configuration dump).  Every run is driven by one JSON
config with a mandatory seed; outputs embed the config hash so artifacts
carry their provenance.  Exit codes: 0 pass, 1 identity/acceptance
failure, 2 usage or size-cap error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys

import jsonschema

from .evens import mask_to_bits
from .estimators import (
    CSV_HEADER,
    EdgeEvent,
    SamplerSpec,
    estimate,
    event_probability_exact_ueg,
    mixing_gap,
)
from .evens import EdgeConfig
from .lattice import (
    BoundaryCondition,
    LatticeError,
    MultiGraph,
    build_box,
    build_hexagonal_patch,
    build_hexagonal_torus,
    build_torus,
    cycle_graph,
    hyperplane,
    path_graph,
)
from .models import DEFAULT_BURNIN, DEFAULT_THIN, ModelParams, OracleSizeError
from . import oracle
from .estimators import _SampleStream, batch_rng
from .topology import classify_components

__all__ = ["main"]


HOST_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["box", "torus", "hexagonal-torus", "hexagonal-patch",
                          "path", "cycle", "triangle"]},
        "d": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 0},
        "k": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"enum": ["loop", "rc", "bernoulli", "current", "double_current"]},
        "beta": {"type": "number", "minimum": 0},
        "p": {"type": "number", "minimum": 0, "maximum": 1},
        "x": {"type": "number", "minimum": 0, "maximum": 1},
        "bc": {"enum": ["free", "wired"]},
    },
    "required": ["name"],
    "additionalProperties": False,
}

BACKEND_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["exact", "sw"]},
        "burnin": {"type": "integer", "minimum": 0},
        "thin": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMAS = {
    "enumerate-check": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "host": HOST_SCHEMA,
            "fixtures": {"enum": ["default"]},
            "p_values": {"type": "array", "items": {"type": "number"}},
            "beta_values": {"type": "array", "items": {"type": "number"}},
            "bc": {"type": "array", "items": {"enum": ["free", "wired"]}},
            "tolerance": {"type": "number"},
            "output": {"type": "string"},
        },
        "required": ["seed"],
        "additionalProperties": False,
    },
    "torus-scan": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "d": {"type": "integer", "minimum": 2},
            "model": MODEL_SCHEMA,
            "backend": BACKEND_SCHEMA,
            "scan_n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "n_samples": {"type": "integer", "minimum": 16},
            "observables": {"type": "array"},
            "output": {"type": "string"},
        },
        "required": ["seed", "d", "model", "scan_n", "n_samples", "output"],
        "additionalProperties": False,
    },
    "mixing-scan": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "d": {"type": "integer", "minimum": 1},
            "model": MODEL_SCHEMA,
            "backend": BACKEND_SCHEMA,
            "scan_n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "n_samples": {"type": "integer", "minimum": 16},
            "exact_ueg_check": {"type": "boolean"},
            "output": {"type": "string"},
        },
        "required": ["seed", "d", "model", "scan_n", "n_samples", "output"],
        "additionalProperties": False,
    },
    "sample": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "host": HOST_SCHEMA,
            "model": MODEL_SCHEMA,
            "backend": BACKEND_SCHEMA,
            "n_samples": {"type": "integer", "minimum": 1},
            "output": {"type": "string"},
        },
        "required": ["seed", "host", "model", "n_samples", "output"],
        "additionalProperties": False,
    },
}


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_host(spec: dict) -> MultiGraph:
    kind = spec["kind"]
    if kind == "box":
        return build_box(spec["d"], spec["n"])
    if kind == "torus":
        return build_torus(spec["d"], spec["n"])
    if kind == "hexagonal-torus":
        return build_hexagonal_torus(spec["k"])
    if kind == "hexagonal-patch":
        return build_hexagonal_patch(spec.get("k", 1))
    if kind == "path":
        return path_graph(spec.get("k", 2))
    if kind == "cycle":
        return cycle_graph(spec.get("k", 4))
    if kind == "triangle":
        return cycle_graph(3)
    raise LatticeError(f"unknown host kind {kind!r}")


def _host_label(spec: dict) -> str:
    parts = [spec["kind"]] + [f"{k}={spec[k]}" for k in ("d", "n", "k") if k in spec]
    return ",".join(parts)


def _model_params(model: dict) -> ModelParams:
    given = [k for k in ("beta", "p", "x") if k in model]
    if len(given) != 1:
        raise ValueError("model needs exactly one of beta, p, x")
    key = given[0]
    maker = {"beta": ModelParams.from_beta, "p": ModelParams.from_p,
             "x": ModelParams.from_x}[key]
    return maker(model[key])


def _boundary(g: MultiGraph, name: str) -> BoundaryCondition | None:
    if name == "wired":
        return BoundaryCondition.wired(g)
    return None


def build_sampler_spec(config: dict, g: MultiGraph, host_label: str,
                       d=None, n=None) -> SamplerSpec:
    model = config["model"]
    backend = config.get("backend", {"kind": "sw"})
    bc_name = model.get("bc", "free")
    return SamplerSpec(
        graph=g,
        model=model["name"],
        params=_model_params(model),
        bc=_boundary(g, bc_name),
        backend=backend["kind"],
        burnin=backend.get("burnin", DEFAULT_BURNIN),
        thin=backend.get("thin", DEFAULT_THIN),
        host_label=host_label,
        d=d,
        n=n,
        bc_label=bc_name,
    )


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


DEFAULT_FIXTURES = [
    ("path-2", lambda: path_graph(2)),
    ("triangle", lambda: cycle_graph(3)),
    ("cycle-4", lambda: cycle_graph(4)),
    ("grid-3x3", lambda: build_box(2, 1)),
    ("torus-1-2", lambda: build_torus(2, 1)),
    ("hex-patch-1", lambda: build_hexagonal_patch(1)),
]


def _marginal_lemma_records(tol: float) -> list:
    """Exact marginal-lemma checks: boundary insensitivity, sheet, independence."""
    from .evens import joint_marginal_independence_tv, marginal_ueg_exact
    from .lattice import build_slab_sheet, edge_subset_by_coords

    records = []
    outer, inner = build_box(2, 2), build_box(2, 1)
    sub = [int(e) for e in edge_subset_by_coords(outer, inner)]
    tv = oracle.tv_distance(
        marginal_ueg_exact(outer, sub),
        oracle.enumerate_ueg(inner, BoundaryCondition.wired(inner)),
    )
    records.append({"identity": "ueg_marginal_is_wired_inner_box",
                    "host": "box,d=2,n=2", "params": {}, "tv": tv,
                    "tolerance": tol, "pass": bool(tv <= tol)})

    sheet = build_slab_sheet("hyperplane-sheet", 3, 1)
    sub = [int(e) for e in sheet.edge_indices]
    marg = marginal_ueg_exact(sheet.host, sub)
    n = len(sub)
    uniform = oracle.Distribution(sheet.host, n,
                                  {m: 1.0 / (1 << n) for m in range(1 << n)})
    tv = oracle.tv_distance(marg, uniform)
    records.append({"identity": "sheet_marginal_is_bernoulli_half",
                    "host": "box,d=3,n=1", "params": {}, "tv": tv,
                    "tolerance": tol, "pass": bool(tv <= tol)})

    g3 = build_box(2, 3)
    e1 = set(int(e) for e in edge_subset_by_coords(g3, build_box(2, 1)))
    e2 = set(int(e) for e in edge_subset_by_coords(g3, build_box(2, 2))) - e1
    e3 = set(range(g3.n_edges)) - e1 - e2
    tv = joint_marginal_independence_tv(g3, sorted(e1), sorted(e3))
    records.append({"identity": "separating_annulus_independence",
                    "host": "box,d=2,n=3", "params": {}, "tv": tv,
                    "tolerance": tol, "pass": bool(tv <= tol)})
    return records


def cmd_enumerate_check(config: dict, out_path: str | None) -> int:
    tol = config.get("tolerance", 1e-12)
    p_values = config.get("p_values", [0.2, 0.5, 0.8])
    beta_values = config.get("beta_values", [0.3, 0.7])
    bc_names = config.get("bc", ["free", "wired"])
    if "host" in config:
        hosts = [(_host_label(config["host"]), lambda: build_host(config["host"]))]
        records = []
    else:
        hosts = DEFAULT_FIXTURES
        records = _marginal_lemma_records(tol)
    for label, builder in hosts:
        g = builder()
        for p in p_values:
            for bc_name in bc_names:
                bc = _boundary(g, bc_name)
                if bc_name == "wired" and not g.boundary:
                    continue
                recs = oracle.identity_report(g, bc, p, tol=tol, host_name=label)
                for r in recs:
                    r["bc"] = bc_name
                records.extend(recs)
        for beta in beta_values:
            records.extend(oracle.correlation_report(g, beta, host_name=label))
        if g.faces is not None and g.boundary:
            for x in (0.4, 1.0):
                tv = oracle.tv_distance(
                    oracle.enumerate_interfaces(g, x),
                    oracle.enumerate_loop(g, None, x),
                )
                records.append({
                    "identity": "planar_interfaces_are_loop",
                    "host": label, "params": {"x": x},
                    "tv": tv, "tolerance": tol, "pass": bool(tv <= tol),
                })
    all_pass = all(r["pass"] for r in records)
    report = {
        "config_hash": _config_hash(config),
        "n_identities": len(records),
        "all_pass": all_pass,
        "records": records,
    }
    out, close = _open_out(out_path or config.get("output"))
    json.dump(report, out, indent=2)
    out.write("\n")
    if close:
        out.close()
    return 0 if all_pass else 1


def _write_csv_header(writer, out, config, extra_cols=()):
    out.write(f"# config-sha256: {_config_hash(config)}\n")
    writer.writerow(CSV_HEADER + list(extra_cols))


def cmd_torus_scan(config: dict, out_path: str | None) -> int:
    seed = config["seed"]
    d = config["d"]
    n_samples = config["n_samples"]
    observables = config.get("observables") or ["p_in_cnt", "p_reach_boundary",
                                                "wraparound_lb"]
    _model_params(config["model"])  # validate before any output is opened
    out, close = _open_out(out_path or config["output"])
    writer = csv.writer(out)
    _write_csv_header(writer, out, config, extra_cols=["n_times_estimate"])
    for n in config["scan_n"]:
        g = build_torus(d, n)
        spec = build_sampler_spec(config, g, f"torus,d={d},n={n}", d=d, n=n)
        for obs_name in observables:
            if obs_name == "p_in_cnt":
                obs = ("p_in_cnt", 0)
            elif obs_name == "p_reach_boundary":
                obs = ("p_reach_boundary", 0, n)
            elif obs_name == "wraparound_lb":
                obs = ("wraparound_lb",)
            elif obs_name == "cnt_density":
                obs = ("cnt_density",)
            else:
                raise ValueError(f"unsupported torus-scan observable {obs_name!r}")
            row = estimate(obs, spec, n_samples, seed)
            writer.writerow(row.csv_fields() + [f"{n * row.estimate:.10g}"])
    if close:
        out.close()
    return 0


ORIGIN_EDGE_EVENT_NAME = "origin-incident-edge-open"


def origin_edge_event(d: int) -> EdgeEvent:
    """Event: the edge from the origin in the first lattice direction is open.

    The window is just that one edge, so the conditional (Rao-Blackwell)
    estimator applies.
    """
    origin = (0,) * d
    neighbor = (1,) + (0,) * (d - 1)
    window = MultiGraph(n_vertices=2, edges=((0, 1),),
                        coords=(origin, neighbor))
    return EdgeEvent(
        window=window,
        predicate=lambda bits: bool(bits & 1),
        name=ORIGIN_EDGE_EVENT_NAME,
    )


def cmd_mixing_scan(config: dict, out_path: str | None) -> int:
    seed = config["seed"]
    d = config["d"]
    n_samples = config["n_samples"]
    model = config["model"]
    event = origin_edge_event(d)
    out, close = _open_out(out_path or config["output"])
    writer = csv.writer(out)
    out.write(f"# config-sha256: {_config_hash(config)}\n")
    writer.writerow(["event", "d", "n", "x", "gap", "stderr", "p_free", "p_wired",
                     "n_samples", "seed", "mode"])
    params = _model_params(model)
    for n in config["scan_n"]:
        g = build_box(d, n)
        if config.get("exact_ueg_check") or params.x == 1.0:
            p_free = event_probability_exact_ueg(event, g, None)
            p_wired = event_probability_exact_ueg(event, g, BoundaryCondition.wired(g))
            gap = abs(p_free - p_wired)
            writer.writerow([event.name, d, n, params.x, f"{gap:.12g}", 0.0,
                             f"{p_free:.12g}", f"{p_wired:.12g}", 0, seed, "exact"])
            continue
        base = dict(config)
        spec_free = build_sampler_spec(base, g, f"box,d={d},n={n}", d=d, n=n)
        spec_wired = SamplerSpec(
            graph=g, model=spec_free.model, params=spec_free.params,
            bc=BoundaryCondition.wired(g), backend=spec_free.backend,
            burnin=spec_free.burnin, thin=spec_free.thin,
            host_label=spec_free.host_label, d=d, n=n, bc_label="wired",
        )
        gap = mixing_gap(event, spec_free, spec_wired, n_samples, seed)
        writer.writerow([event.name, d, n, params.x, f"{gap.gap:.10g}",
                         f"{gap.stderr:.4g}", f"{gap.p_a:.10g}",
                         f"{gap.p_b:.10g}", gap.n_samples, seed, "mc"])
    if close:
        out.close()
    return 0


def cmd_sample(config: dict, out_path: str | None) -> int:
    seed = config["seed"]
    g = build_host(config["host"])
    spec = build_sampler_spec(config, g, _host_label(config["host"]))
    is_torus = g.torus_period is not None and g.edge_dirs is not None
    out, close = _open_out(out_path or config["output"])
    writer = csv.writer(out)
    out.write(f"# config-sha256: {_config_hash(config)}\n")
    cols = ["sample_id", "config_hex"]
    if is_torus:
        cols += ["n_components", "n_nontrivial", "cnt_size", "wraparound_lb"]
    writer.writerow(cols)
    rng = batch_rng(seed, 0)
    stream = _SampleStream(spec, rng)
    h = hyperplane(g, 0) if is_torus else None
    for i in range(config["n_samples"]):
        mask = stream.next_mask()
        cfg = EdgeConfig(g, mask_to_bits(mask))
        row = [i, cfg.to_hex()]
        if is_torus:
            report = classify_components(cfg, h, count_wraparounds=True)
            row += [len(report.components), report.n_nontrivial,
                    report.cnt_size, report.wraparound_lb]
        writer.writerow(row)
    if close:
        out.close()
    return 0


COMMANDS = {
    "enumerate-check": cmd_enumerate_check,
    "torus-scan": cmd_torus_scan,
    "mixing-scan": cmd_mixing_scan,
    "sample": cmd_sample,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isingrep",
        description="Exact checks and Monte Carlo experiments for the "
                    "graphical representations of the Ising model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--output", default=None,
                       help="override the config's output path ('-' = stdout)")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
        jsonschema.validate(config, SCHEMAS[args.command])
        return COMMANDS[args.command](config, args.output)
    except (jsonschema.ValidationError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LatticeError, OracleSizeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
