"""Command-line interface: ``prigsl {measure,roles,train,denoise,convert}``.

Every command that writes files also writes ``manifest.json`` next to them.
``train`` and ``denoise`` accept ``--from-manifest`` to repeat a recorded run.
Errors are reported as a single ``category: message`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ConfigError, ParseError, PriGslError
from .graph import Graph, density_matrix, sbm_generate, split_masks
from .io import (
    ensure_dir,
    load_graph,
    read_config,
    read_cora,
    read_edge_list,
    sha256_file,
    write_edge_list,
    write_splits,
)
from .measures import LOG2, centrality, qjs_divergence, vne
from .roles import RoleConfig, role_encode
from .trainer import METHODS, EpochRecord, TrainConfig, denoise_experiment, run_method

MANIFEST = "manifest.json"
RECORD_FIELDS = [f.name for f in dataclasses.fields(EpochRecord) if f.name != "wall_time"]


# ----------------------------------------------------------------- helpers

def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (np.ndarray, tuple)):
        return list(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    # NaN/inf are not valid JSON; emit null
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dump_json(obj, path=None):
    text = json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _words(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def parse_synthetic(spec):
    """``sbm:<blocks>x<size>:<p_in>:<p_out>`` -> ``(blocks list, p_in, p_out)``."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] != "sbm":
        raise ParseError(f"synthetic spec {spec!r} is not sbm:<b>x<size>:<p_in>:<p_out>")
    try:
        b, size = (int(v) for v in parts[1].split("x"))
        p_in, p_out = float(parts[2]), float(parts[3])
    except ValueError:
        raise ParseError(f"synthetic spec {spec!r} has malformed numbers") from None
    if b < 1 or size < 1:
        raise ParseError("synthetic spec needs at least one block of one node")
    return [size] * b, p_in, p_out


def run_id(payload) -> str:
    text = json.dumps(_clean(payload), sort_keys=True, default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ----------------------------------------------------------- graph inputs

def _graph_inputs(opts):
    """Input files with their digests, or the synthetic spec."""
    files = {k: opts.get(k) for k in ("edges", "features", "labels", "splits")}
    if opts.get("synthetic"):
        if any(files.values()):
            raise ConfigError("synthetic: use either --synthetic or input files, not both")
        return {"synthetic": opts["synthetic"]}
    if not files["edges"]:
        raise ConfigError("edges: an edge list or --synthetic spec is required")
    return {k: {"path": str(v), "sha256": sha256_file(v)} for k, v in files.items() if v}


def _check_digests(inputs):
    for name, info in inputs.items():
        if isinstance(info, dict) and sha256_file(info["path"]) != info["sha256"]:
            raise ConfigError(f"{name}: {info['path']} changed since the manifest was written")


def _load_training_graph(opts, seed) -> Graph:
    if opts.get("synthetic"):
        blocks, p_in, p_out = parse_synthetic(opts["synthetic"])
        return sbm_generate(blocks, p_in, p_out, feature_dim=opts["feature_dim"], seed=seed,
                            signal=opts["signal"])
    g = load_graph(opts["edges"], opts.get("features"), opts.get("labels"), opts.get("splits"))
    if g.labels is None:
        raise ConfigError("labels: training needs a label file")
    if g.train_mask is None:
        g = g.with_masks(*split_masks(g.labels, seed=seed))
    return g


def _resolve_config(args) -> TrainConfig:
    """Defaults, then the config file, then explicit flags."""
    values = {}
    if args.config:
        values.update(read_config(args.config))
    for f in dataclasses.fields(TrainConfig):
        v = getattr(args, f"cfg_{f.name}", None)
        if v is not None:
            values[f.name] = v
    if args.seed is not None:
        values["seed"] = args.seed
    return TrainConfig.from_dict(values)


def _write_manifest(out_dir, command, cfg, inputs, seed, options, outputs):
    manifest = {"command": command, "version": __version__, "config": cfg, "inputs": inputs,
                "seed": seed, "options": options,
                "outputs": {k: str(out_dir / v) for k, v in outputs.items()}}
    dump_json(manifest, out_dir / MANIFEST)
    return manifest


# --------------------------------------------------------------- commands

def cmd_measure(args):
    adj = read_edge_list(args.graph)
    dm = density_matrix(adj)
    h = vne(dm)
    out = {"n": dm.n, "edges": int(np.count_nonzero(np.triu(adj, k=1))), "vne": h,
           "vne_bits": h / LOG2, "centrality": centrality(dm)}
    inputs = {"graph": {"path": str(args.graph), "sha256": sha256_file(args.graph)}}
    if args.reference:
        ref = read_edge_list(args.reference, n_nodes=dm.n)
        if ref.shape[0] != dm.n:
            raise ParseError(f"{args.reference}: {ref.shape[0]} nodes, expected {dm.n}")
        dm_ref = density_matrix(ref)
        out["qjs"] = qjs_divergence(dm, dm_ref)
        out["qjs_bits"] = qjs_divergence(dm, dm_ref, bits=True)
        inputs["reference"] = {"path": str(args.reference), "sha256": sha256_file(args.reference)}
    dump_json(out)
    if args.out_dir:
        d = ensure_dir(args.out_dir)
        dump_json(out, d / "measure.json")
        _write_manifest(d, "measure", None, inputs, args.seed, {}, {"measure": "measure.json"})
    return 0


def cmd_roles(args):
    adj = read_edge_list(args.graph)
    cfg = RoleConfig(scales=tuple(args.scales) if args.scales else None, n_scales=args.n_scales,
                     timepoints=tuple(args.timepoints) if args.timepoints else None,
                     n_timepoints=args.n_timepoints, t_max=args.t_max,
                     chebyshev_order=args.chebyshev_order, use_exact=args.exact)
    enc = role_encode(adj, cfg)
    cols = [f"s{i}_t{j}_{p}" for i in range(len(enc.scales))
            for j in range(len(enc.timepoints)) for p in ("re", "im")]
    header = (f"# node role encodings; scales={[float(v) for v in enc.scales]} "
              f"timepoints={[float(v) for v in enc.timepoints]}; "
              "columns ordered scale, timepoint, (re, im)")
    lines = [header, ",".join(["node"] + cols)]
    lines += [",".join([str(i)] + [repr(float(v)) for v in row]) for i, row in enumerate(enc.matrix)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    elif args.out_dir:
        d = ensure_dir(args.out_dir)
        (d / "roles.csv").write_text(text, encoding="utf-8")
        _write_manifest(d, "roles", dataclasses.asdict(cfg),
                        {"graph": {"path": str(args.graph), "sha256": sha256_file(args.graph)}},
                        args.seed, {}, {"roles": "roles.csv"})
    else:
        sys.stdout.write(text)
    return 0


def _write_metrics(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.key()])


def _write_timings(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "wall_time"])
        for r in records:
            w.writerow([r.epoch, f"{r.wall_time:.6f}"])


def _train_opts(args):
    return {"method": getattr(args, "method", None), "synthetic": args.synthetic, "edges": args.edges,
            "features": args.features, "labels": args.labels, "splits": args.splits,
            "feature_dim": args.feature_dim, "signal": args.signal, "threshold": args.threshold}


def run_train(cfg: TrainConfig, opts: dict, out_dir: Path, inputs: dict):
    g = _load_training_graph(opts, cfg.seed)
    result = run_method(opts["method"], g, cfg)
    out_dir = ensure_dir(out_dir)
    outputs = {"metrics": "metrics.csv", "summary": "summary.json",
               "refined_edges": "refined_edges.tsv", "timings": "timings.csv"}
    _write_metrics(out_dir / outputs["metrics"], result.records)
    _write_timings(out_dir / outputs["timings"], result.records)
    kept = write_edge_list(out_dir / outputs["refined_edges"], result.refined.adjacency,
                           threshold=opts["threshold"])
    best = result.records[result.best_epoch - 1]
    payload = {"command": "train", "config": cfg.to_dict(), "inputs": inputs, "options": opts}
    summary = {
        "run_id": run_id(payload), "method": opts["method"], "n": g.n, "edges": g.n_edges,
        "epochs_run": len(result.records), "best_epoch": result.best_epoch,
        "accuracy": result.accuracies, "gamma": best.gamma, "vne": best.vne, "qjs": best.qjs,
        "loss_cls": best.loss_cls, "loss_pri": best.loss_pri, "refined_edges": kept,
    }
    dump_json(summary, out_dir / outputs["summary"])
    _write_manifest(out_dir, "train", cfg.to_dict(), inputs, cfg.seed, opts, outputs)
    return summary


def run_denoise(cfg: TrainConfig, opts: dict, out_dir: Path, inputs: dict, jobs=1):
    g = _load_training_graph(opts, cfg.seed)
    rows = denoise_experiment(g, opts["fractions"], opts["modes"], opts["repeats"], cfg,
                              methods=opts["methods"], jobs=jobs)
    out_dir = ensure_dir(out_dir)
    outputs = {"results": "denoise.csv", "summary": "summary.json"}
    with open(out_dir / outputs["results"], "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["mode", "fraction", "method", "mean_acc", "std_acc",
                                           "repeats"])
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    payload = {"command": "denoise", "config": cfg.to_dict(), "inputs": inputs, "options": opts}
    dump_json({"run_id": run_id(payload), "rows": rows}, out_dir / outputs["summary"])
    _write_manifest(out_dir, "denoise", cfg.to_dict(), inputs, cfg.seed, opts, outputs)
    return rows


def _from_manifest(args, command):
    path = Path(args.from_manifest)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if manifest.get("command") != command:
        raise ConfigError(f"command: manifest records {manifest.get('command')!r}, not {command!r}")
    _check_digests(manifest["inputs"])
    cfg = TrainConfig.from_dict(manifest["config"])
    out_dir = Path(args.out_dir) if args.out_dir else path.parent
    return cfg, manifest["options"], out_dir, manifest["inputs"]


def cmd_train(args):
    if args.from_manifest:
        cfg, opts, out_dir, inputs = _from_manifest(args, "train")
    else:
        if args.method not in METHODS:
            raise ConfigError(f"method: unknown method {args.method!r}")
        cfg = _resolve_config(args)
        opts = _train_opts(args)
        inputs = _graph_inputs(opts)
        out_dir = Path(args.out_dir or "prigsl-out")
    summary = run_train(cfg, opts, out_dir, inputs)
    print(json.dumps(_clean({k: summary[k] for k in ("run_id", "best_epoch", "accuracy")}),
                     sort_keys=True))
    return 0


def cmd_denoise(args):
    if args.from_manifest:
        cfg, opts, out_dir, inputs = _from_manifest(args, "denoise")
    else:
        cfg = _resolve_config(args)
        opts = _train_opts(args)
        opts.pop("method")
        unknown = sorted(set(args.methods) - set(METHODS))
        if unknown:
            raise ConfigError(f"methods: unknown method {unknown[0]!r}")
        bad = sorted(set(args.modes) - {"add", "delete"})
        if bad:
            raise ConfigError(f"modes: unknown noise mode {bad[0]!r}")
        if any(not 0 <= f <= 1 for f in args.fractions):
            raise ConfigError("fractions: values must lie in [0, 1]")
        if args.repeats < 1:
            raise ConfigError("repeats: must be >= 1")
        opts.update(fractions=args.fractions, modes=args.modes, repeats=args.repeats,
                    methods=args.methods)
        inputs = _graph_inputs(opts)
        out_dir = Path(args.out_dir or "prigsl-out")
    rows = run_denoise(cfg, opts, out_dir, inputs, jobs=args.jobs)
    for row in rows:
        print(f"{row['mode']}\t{row['fraction']}\t{row['method']}\t"
              f"{row['mean_acc']:.4f}\t{row['std_acc']:.4f}")
    return 0


def cmd_convert(args):
    g, ids, names = read_cora(args.content, args.cites)
    d = ensure_dir(args.out_dir or "prigsl-data")
    write_edge_list(d / "edges.tsv", g.adjacency, precision=17)
    np.savetxt(d / "features.csv", g.features, delimiter=",", fmt="%.17g")
    with open(d / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "label"])
        w.writerows((i, int(y)) for i, y in enumerate(g.labels))
    write_splits(d / "splits.csv", *split_masks(g.labels, seed=args.seed or 0))
    with open(d / "node_ids.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "original_id", "class_name"])
        w.writerows((i, pid, names[y]) for i, (pid, y) in enumerate(zip(ids, g.labels)))
    inputs = {k: {"path": str(p), "sha256": sha256_file(p)}
              for k, p in (("content", args.content), ("cites", args.cites))}
    _write_manifest(d, "convert", None, inputs, args.seed, {},
                    {k: f"{k}.{ext}" for k, ext in (("edges", "tsv"), ("features", "csv"),
                                                     ("labels", "csv"), ("splits", "csv"),
                                                     ("node_ids", "csv"))})
    print(f"{g.n} nodes, {g.n_edges} edges, {len(names)} classes -> {d}")
    return 0


# ----------------------------------------------------------------- parser

def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_config_flags(p):
    types = {"scales": _floats, "timepoints": _floats, "proj_dim": int, "freeze_gamma": float}
    for f in dataclasses.fields(TrainConfig):
        if f.name == "seed":
            continue
        default = f.default
        if f.name in types:
            kind = types[f.name]
        elif isinstance(default, bool):
            kind = _bool
        elif isinstance(default, int) and f.name != "t_max":
            kind = int
        else:
            kind = float
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, dest=f"cfg_{f.name}", type=kind, default=None,
                       help=f"(default {default})")


def _add_graph_flags(p):
    p.add_argument("--edges", help="edge list u<TAB>v[<TAB>weight]")
    p.add_argument("--features", help="feature CSV, one row per node")
    p.add_argument("--labels", help="label CSV node_id,label")
    p.add_argument("--splits", help="split CSV node_id,split")
    p.add_argument("--synthetic", help="sbm:<blocks>x<size>:<p_in>:<p_out>")
    p.add_argument("--feature-dim", type=int, default=16, help="synthetic feature width")
    p.add_argument("--signal", type=float, default=1.0, help="synthetic class-mean shift")
    p.add_argument("--from-manifest", help="repeat the run recorded in this manifest")


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        p = argparse.ArgumentParser(add_help=False)
        # subcommands suppress their defaults so flags given before them survive
        p.add_argument("--seed", type=int, default=default(None), help="master random seed")
        p.add_argument("--out-dir", default=default(None), help="directory for outputs")
        p.add_argument("--config", default=default(None), help="key = value config file")
        p.add_argument("--jobs", type=int, default=default(1), help="worker processes")
        return p

    common = global_flags(lambda _: argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="prigsl", parents=[global_flags(lambda v: v)],
                                     description="Entropy-regularized graph structure learning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", parents=[common], help="entropy, divergence, centrality")
    p.add_argument("graph")
    p.add_argument("--reference", help="second edge list for the divergence")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("roles", parents=[common], help="role encodings as CSV")
    p.add_argument("graph")
    p.add_argument("--scales", type=_floats)
    p.add_argument("--n-scales", type=int, default=2)
    p.add_argument("--timepoints", type=_floats)
    p.add_argument("--n-timepoints", type=int, default=4)
    p.add_argument("--t-max", type=float, default=25.0)
    p.add_argument("--chebyshev-order", type=int, default=10)
    p.add_argument("--exact", action="store_true", help="exact matrix exponential")
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_roles)

    p = sub.add_parser("train", parents=[common], help="train one model")
    _add_graph_flags(p)
    p.add_argument("--method", default="pri-gsl", help=f"one of {sorted(METHODS)}")
    p.add_argument("--threshold", type=float, default=0.0,
                   help="drop refined edges with weight at or below this")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denoise", parents=[common], help="edge-noise robustness table")
    _add_graph_flags(p)
    p.add_argument("--fractions", type=_floats, default=[0.25, 0.5, 0.75])
    p.add_argument("--modes", type=_words, default=["add", "delete"])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--methods", type=_words, default=["gcn-baseline", "pri-gsl"])
    p.add_argument("--threshold", type=float, default=0.0, help=argparse.SUPPRESS)
    _add_config_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("convert", parents=[common], help="Cora-style files to edge list/CSVs")
    p.add_argument("content", help=".content file")
    p.add_argument("cites", help=".cites file")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PriGslError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid-value: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
