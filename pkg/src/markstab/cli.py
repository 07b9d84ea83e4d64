"""Command-line interface: ``markstab <command> [flags]``.

Exit status is 0 on success, 1 when a command fails on its inputs and 2 on
usage errors. Every command that writes files also writes a run manifest
(``<output>.manifest.json``, or ``manifest.json`` inside an output
directory) holding the argv, seeds, input and output digests and wall time;
:func:`replay` re-runs a command from its manifest.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, benchgen, gbm, statcompare
from .embed import EmbeddingModel, train_embedding, wl_document
from .graph import Graph, GraphFormatError, load_edge_list, load_partition, save_edge_list
from .labeler import build_dataset, read_feature_csv
from .pipeline import PipelineStepError, detect
from .preprocess import connect_components
from .scalescan import ScanConfig, scan
from .simeval import DegenerateSimilarityError, ami_symmetric, ecs, nvi
from .stability import KINDS, StabilityConstructor, eval_q_gen

logger = logging.getLogger("markstab")

DOMAIN_ERRORS = (
    ValueError,
    KeyError,
    OSError,
    GraphFormatError,
    PipelineStepError,
    DegenerateSimilarityError,
    RuntimeError,
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# digests and manifests


def file_digest(path: str | Path) -> str:
    p = Path(path)
    h = hashlib.sha256()
    if p.is_dir():
        for f in sorted(p.iterdir()):
            if f.is_file() and f.name != "manifest.json":
                h.update(f.name.encode())
                h.update(b"\0")
                h.update(hashlib.sha256(f.read_bytes()).digest())
    else:
        h.update(p.read_bytes())
    return h.hexdigest()


def _manifest_path(outputs: list[str]) -> Path | None:
    if not outputs:
        return None
    first = Path(outputs[0])
    return first / "manifest.json" if first.is_dir() else first.with_name(first.name + ".manifest.json")


def write_manifest(path: Path, args: argparse.Namespace, argv: list[str], inputs: list[str],
                   outputs: list[str], stdout: str, extra: dict, wall: float) -> None:
    flags = {k: v for k, v in vars(args).items() if k not in ("handler",)}
    manifest = {
        "tool": "markstab",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "seeds": {k: v for k, v in flags.items() if "seed" in k},
        "inputs": {p: file_digest(p) for p in inputs},
        "outputs": {p: file_digest(p) for p in outputs},
        "stdout_sha256": hashlib.sha256(stdout.encode()).hexdigest(),
        "extra": extra,
        "cwd": os.getcwd(),
        "wall_time_s": wall,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def replay(manifest_path: str | Path) -> int:
    """Re-run the command recorded in a manifest from its original directory."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    prev = os.getcwd()
    os.chdir(manifest["cwd"])
    try:
        return main(manifest["argv"])
    finally:
        os.chdir(prev)


# ---------------------------------------------------------------------------
# shared flag groups


def _default_jobs() -> int:
    env = os.environ.get("MARKSTAB_JOBS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    d = ScanConfig()
    p.add_argument("--tmin", type=float, default=d.log10_t_min, help="log10 of the smallest scale")
    p.add_argument("--tmax", type=float, default=d.log10_t_max, help="log10 of the largest scale")
    p.add_argument("--n-scales", type=int, default=d.n_scales)
    p.add_argument("--n-tries", type=int, default=d.n_tries, help="Louvain runs per scale")
    p.add_argument("--window", type=int, default=d.window)
    p.add_argument("--repro-threshold", type=float, default=d.reproducibility_threshold)
    p.add_argument("--constructor", choices=KINDS, default=d.constructor)


def _scan_config(args) -> ScanConfig:
    return ScanConfig(
        log10_t_min=args.tmin,
        log10_t_max=args.tmax,
        n_scales=args.n_scales,
        n_tries=args.n_tries,
        window=args.window,
        reproducibility_threshold=args.repro_threshold,
        constructor=args.constructor,
    )


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands; each returns (inputs, outputs, stdout text, extra manifest fields)


def cmd_generate(args):
    insts = benchgen.corpus(args.count, args.mode, args.master_seed, xi_values=args.xi,
                            n_range=tuple(args.n_range) if args.n_range else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, inst in enumerate(insts):
        benchgen.write_instance(inst, out, i)
    text = f"wrote {len(insts)} instances to {out}\n"
    return [], [args.out], text, {"instances": len(insts)}


def cmd_preprocess(args):
    g = load_edge_list(args.inp)
    g2, report = connect_components(g)
    save_edge_list(g2, args.out)
    outputs = [args.out]
    if args.report:
        _write_json(args.report, report.to_dict())
        outputs.append(args.report)
    text = f"components {report.components_before}, added {len(report.added_edges)} edges\n"
    return [args.inp], outputs, text, {"added_edges": report.to_dict()["added_edges"]}


def cmd_scan(args):
    g, report = connect_components(load_edge_list(args.graph))
    result = scan(g, _scan_config(args), args.seed)
    result.save(args.out)
    text = f"{len(result.robust_indices)} robust scales: " + " ".join(
        f"{x:.4f}" for x in result.log10_scales[result.robust_indices]) + "\n"
    return [args.graph], [args.out], text, {"added_edges": report.to_dict()["added_edges"]}


def _corpus_graphs(directory: str):
    items = benchgen.read_corpus(directory)
    if not items:
        raise ValueError(f"{directory}: no g_<i>.edges files found")
    return items


def cmd_embed_train(args):
    items = _corpus_graphs(args.corpus)
    docs = [wl_document(connect_components(g)[0], args.wl_depth) for _, g, _, _ in items]
    model = train_embedding(docs, dim=args.dim, epochs=args.epochs, seed=args.seed)
    model.save(args.out)
    return [args.corpus], [args.out], f"trained {args.dim}-d embedding on {len(docs)} graphs\n", {}


def cmd_label(args):
    items = _corpus_graphs(args.corpus)
    emb = EmbeddingModel.load(args.embedding)
    report = build_dataset([(i, g, p) for i, g, p, _ in items], emb, _scan_config(args), args.out,
                           seed=args.seed, jobs=args.jobs)
    text = f"labeled {report.n_rows} graphs, skipped {report.n_skipped}\n"
    extra = {"skipped": [[i, e] for i, e in report.skipped],
             "preprocessed": [r.graph_id for r in report.rows if r.preprocessed]}
    return [args.corpus, args.embedding], [args.out], text, extra


def _eval_lines(model, path) -> str:
    X, y = read_feature_csv(path)
    if y is None:
        raise ValueError(f"{path}: evaluation file needs a t_star_log10 column")
    mae, mse = gbm.evaluate(model, X, y)
    base = float(np.abs(y - model.base_value).mean())
    return f"MAE {mae!r}\nMSE {mse!r}\nmean-baseline MAE {base!r}\n"


def cmd_train(args):
    inputs, outputs, text = [], [], ""
    if args.features:
        X, y = read_feature_csv(args.features)
        if y is None:
            raise ValueError(f"{args.features}: training file needs a t_star_log10 column")
        cfg = gbm.GbmConfig(n_trees=args.n_trees, learning_rate=args.lr, max_depth=args.depth,
                            subsample=args.subsample, seed=args.seed)
        model = gbm.fit(X, y, cfg)
        if not args.out:
            raise UsageError("train --features needs --out")
        gbm.save_model(model, args.out)
        inputs.append(args.features)
        outputs.append(args.out)
    elif args.model:
        model = gbm.load_model(args.model)
        inputs.append(args.model)
    else:
        raise UsageError("train needs --features (to fit) or --model (to evaluate)")
    if args.eval:
        text = _eval_lines(model, args.eval)
        inputs.append(args.eval)
    return inputs, outputs, text, {}


def cmd_detect(args):
    g = load_edge_list(args.graph)
    model = gbm.load_model(args.model)
    emb = EmbeddingModel.load(args.embedding)
    res = detect(g, model, emb, _scan_config(args), args.seed, parallel=not args.sequential)
    payload = res.to_dict()
    timings = payload.pop("timings")
    _write_json(args.out, payload)
    text = (f"chosen log10 scale {res.chosen_scale_log10:.4f} (predicted {res.predicted_t_star_log10:.4f}), "
            f"{res.partition.c} communities\n")
    extra = {"added_edges": payload["preprocess_report"]["added_edges"], "timings": timings}
    return [args.graph, args.model, args.embedding], [args.out], text, extra


def cmd_eval(args):
    pred, truth = load_partition(args.pred), load_partition(args.truth)
    if args.metric == "ami":
        score = ami_symmetric(pred, truth)
    elif args.metric == "ecs":
        score = ecs(pred, truth, args.alpha)
    else:
        score = nvi(pred, truth)
    return [args.pred, args.truth], [], f"{score!r}\n", {}


def cmd_qgen(args):
    g = load_edge_list(args.graph)
    p = load_partition(args.partition)
    if p.n != g.n:
        raise ValueError(f"partition has {p.n} labels for a graph with {g.n} nodes")
    q = eval_q_gen(StabilityConstructor(g, args.constructor).quality(args.t), p)
    return [args.graph, args.partition], [], f"{q!r}\n", {}


def cmd_compare(args):
    table = statcompare.ScoreTable.from_csv(args.scores)
    text = statcompare.format_report(table, args.control, args.alpha) + "\n"
    return [args.scores], [], text, {}


def _sized_graph(n: int, master_seed: int) -> Graph:
    last = None
    for attempt in range(benchgen.MAX_SPEC_RETRIES):
        seed = benchgen.instance_seed(master_seed, "test", n, attempt)
        spec = benchgen.draw_spec("test", np.random.default_rng(seed), seed, xi=0.1, n_range=(n, n + 1))
        try:
            return benchgen.generate(spec).graph
        except benchgen.InfeasibleSpecError as exc:
            last = exc
    raise ValueError(f"no feasible benchmark spec with n={n} ({last})")


def cmd_bench_runtime(args):
    model = gbm.load_model(args.model)
    emb = EmbeddingModel.load(args.embedding)
    graphs: list[tuple[str, Graph]] = [(p, load_edge_list(p)) for p in args.graph or []]
    for n in args.sizes or []:
        graphs.append((f"generated-n{n}", _sized_graph(n, args.seed)))
    if not graphs:
        raise UsageError("bench-runtime needs --graph or --sizes")
    rows = []
    for name, g in graphs:
        timings = detect(g, model, emb, _scan_config(args), args.seed).timings
        rows.append({"graph": name, "n": g.n, "m": g.m, "timings": timings})
    text = "".join(f"{r['graph']}\tn={r['n']}\tm={r['m']}\ttotal={r['timings']['total']:.3f}s\n" for r in rows)
    outputs = []
    if args.out:
        _write_json(args.out, {"runs": rows})
        outputs.append(args.out)
    return list(args.graph or []) + [args.model, args.embedding], outputs, text, {}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markstab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"markstab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--manifest", help="manifest path (default: next to the first output)")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("generate", help="benchmark graphs with planted communities")
    p.add_argument("--count", type=int, required=True, help="instances (per xi in test mode)")
    p.add_argument("--mode", choices=("train", "test"), default="train")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--xi", type=float, nargs="+", help="mixing values (test mode)")
    p.add_argument("--n-range", type=int, nargs=2, metavar=("LO", "HI"), help="node count range [LO, HI)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("preprocess", help="connect a disconnected graph")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(handler=cmd_preprocess)

    p = sub.add_parser("scan", help="multi-scale stability scan")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_scan_flags(p)
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("embed-train", help="train the whole-graph embedding on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--wl-depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_embed_train)

    p = sub.add_parser("label", help="build the training feature CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    _add_scan_flags(p)
    p.set_defaults(handler=cmd_label)

    p = sub.add_parser("train", help="fit or evaluate the scale regressor")
    d = gbm.GbmConfig()
    p.add_argument("--features")
    p.add_argument("--model", help="existing model to evaluate")
    p.add_argument("--out")
    p.add_argument("--eval", help="hold-out CSV; prints MAE and MSE")
    p.add_argument("--n-trees", type=int, default=d.n_trees)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--depth", type=int, default=d.max_depth)
    p.add_argument("--subsample", type=float, default=d.subsample)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("detect", help="one robust partition at the predicted scale")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sequential", action="store_true", help="run the two branches one after the other")
    _add_scan_flags(p)
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("eval", help="compare two partition files")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--metric", choices=("ami", "ecs", "nvi"), default="ami")
    p.add_argument("--alpha", type=float, default=0.9, help="ECS restart parameter")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("qgen", help="stability of a partition at one scale")
    p.add_argument("--graph", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--constructor", choices=KINDS, default=KINDS[0])
    p.set_defaults(handler=cmd_qgen)

    p = sub.add_parser("compare", help="Friedman test and Li post-hoc on a score table")
    p.add_argument("--scores", required=True)
    p.add_argument("--control", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("bench-runtime", help="per-step detection wall time")
    p.add_argument("--graph", nargs="+")
    p.add_argument("--sizes", type=int, nargs="+", help="generate one benchmark graph per node count")
    p.add_argument("--model", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    _add_scan_flags(p)
    p.set_defaults(handler=cmd_bench_runtime)

    for name, sp in sub.choices.items():
        sp.prog = f"markstab {name}"
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        inputs, outputs, text, extra = args.handler(args)
    except UsageError as exc:
        parser._subparsers._group_actions[0].choices[args.command].print_usage(sys.stderr)
        print(f"markstab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"markstab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    sys.stdout.flush()
    path = Path(args.manifest) if args.manifest else _manifest_path(outputs)
    if path is not None:
        write_manifest(path, args, argv, inputs, outputs, text, extra, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
