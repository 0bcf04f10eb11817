"""Command-line interface: ``nnec fit | eval | synth | bench``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .clustering import cluster
from .dataset import DataError, Dataset, load_delimited, load_labels, preprocess
from .equilibrium import EquilibriumParams, as_fraction, trace_lines
from .metrics import aggregate, evaluate, read_results_csv
from .neighbours import build_graph, load_graph, save_graph
from .synthetic import parse_components, sample, to_csv
from .tuning import (
    DEFAULT_KS,
    DEFAULT_LAMBDAS,
    criterion,
    default_k,
    grid_search,
    refined_search,
)

logger = logging.getLogger("nnec")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4
MODES = ("fixed", "full-grid", "refined")


class UsageError(ValueError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _label_column(value: Optional[str]):
    if value is None:
        return None
    return int(value) if value.lstrip("-").isdigit() else value


def _csv_list(text: str, conv):
    return [conv(v) for v in text.split(",") if v.strip()]


def load_input(args) -> Dataset:
    data = load_delimited(
        args.input,
        delimiter=args.delimiter,
        has_header=args.header,
        label_column=_label_column(args.label_column),
    )
    if args.labels is not None:
        data = Dataset(data.points, load_labels(args.labels))
    return data


def run_fit(args) -> dict:
    """Load, preprocess, build the graph, tune or fit, and write artifacts."""
    data = load_input(args)
    if not args.no_preprocess:
        data = preprocess(data, args.max_dim)
    digest = data.content_hash()

    if args.mode == "fixed":
        if args.k is None or args.lam is None:
            raise UsageError("fixed mode needs --k and --lambda")
        lam = as_fraction(args.lam)
        if lam < 1 and not args.allow_small_lambda:
            raise UsageError(f"lambda {lam} is below 1; pass --allow-small-lambda to override")
        ks = [args.k]
    elif args.mode == "full-grid":
        ks = _csv_list(args.ks, int) if args.ks else list(DEFAULT_KS)
    else:
        ks = [args.k if args.k is not None else default_k(data.n)]
    k_max = max(ks)
    if not 1 <= k_max <= data.n - 1:
        raise UsageError(f"k={k_max} must lie in [1, n-1={data.n - 1}]")

    graph = None
    if args.graph_cache and Path(args.graph_cache).exists():
        cached = load_graph(args.graph_cache, digest)
        if cached.k_max >= k_max:
            graph = cached
    if graph is None:
        graph = build_graph(data, k_max, workers=args.workers)
        if args.graph_cache:
            save_graph(graph, args.graph_cache, digest)

    selection = None
    traces: List[dict] = []
    if args.mode == "fixed":
        params = EquilibriumParams(lam, args.k, args.r, args.t_max)
        solution = cluster(graph, params, trace=traces.append if args.trace_out else None)
    else:
        if args.mode == "full-grid":
            lambdas = _csv_list(args.lambdas, as_fraction) if args.lambdas else list(DEFAULT_LAMBDAS)
            report = grid_search(graph, lambdas, ks, args.r, args.t_max, args.workers,
                                 allow_below_one=args.allow_small_lambda)
        else:
            report = refined_search(graph, k=ks[0], r=args.r, t_max=args.t_max, workers=args.workers)
        solution = report.best.solution
        selection = report.to_dict()

    out = {
        "schema_version": SCHEMA_VERSION,
        "content_hash": digest,
        "n": data.n,
        "d": data.d,
        "mode": args.mode,
        "preprocessed": not args.no_preprocess,
        "solution": solution.summary(),
        "criterion": criterion(solution),
    }
    if data.labels is not None:
        out["metrics"] = evaluate(solution.labels, data.labels)
    if args.labels_out:
        _write(args.labels_out, "".join(f"{int(v)}\n" for v in solution.labels))
    if args.report_out:
        _write(args.report_out, _dump(out))
    if selection is not None and args.selection_out:
        _write(args.selection_out, _dump(selection))
    if args.trace_out:
        _write(args.trace_out, trace_lines(traces))
    out["selection"] = selection
    return out


def cmd_fit(args) -> int:
    out = run_fit(args)
    if not args.report_out:
        _write(None, _dump({k: v for k, v in out.items() if k != "selection"}))
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = load_labels(args.pred)
    truth = load_labels(args.truth)
    if len(pred) != len(truth):
        raise UsageError(f"label files differ in length: {len(pred)} vs {len(truth)}")
    _write(args.out, _dump(evaluate(pred, truth, args.ami_average)))
    return EXIT_OK


def cmd_synth(args) -> int:
    comps = parse_components(args.components)
    _write(args.out, to_csv(sample(comps, args.seed)))
    return EXIT_OK


def _write_table(path: Path, names, methods, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", *methods])
        for name, row in zip(names, table):
            w.writerow([name, *[repr(float(v)) if not float(v).is_integer() else int(v) for v in row]])


def _aggregate_to(out_dir: Path, stem: str, names, methods, values) -> dict:
    agg = aggregate(values)
    for key in ("rank", "minmax", "student"):
        _write_table(out_dir / f"{stem}_{key}.csv", names, methods, agg[key])
    return {
        "methods": list(methods),
        "mean_rank": [float(v) for v in agg["mean_rank"]],
        "mean_minmax": [float(v) for v in agg["mean_minmax"]],
        "mean_student": [float(v) for v in agg["mean_student"]],
        "degenerate_rows": [names[i] for i in agg["degenerate_rows"]],
    }


def cmd_bench(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": SCHEMA_VERSION, "tables": {}, "runs": {}}
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        base = Path(args.manifest).parent
        rows = {"ami": [], "ari": [], "accuracy": []}
        names = []
        for entry in manifest["datasets"]:
            ns = argparse.Namespace(
                input=str(base / entry["path"]),
                delimiter=entry.get("delimiter", ","),
                header=entry.get("header", False),
                label_column=None if entry.get("label_column") is None else str(entry["label_column"]),
                labels=None if entry.get("labels") is None else str(base / entry["labels"]),
                no_preprocess=not entry.get("preprocess", True),
                max_dim=entry.get("max_dim", 100),
                mode=entry.get("mode", manifest.get("mode", "full-grid")),
                k=entry.get("k"), lam=entry.get("lambda"), ks=None, lambdas=None,
                r=5, t_max=100, workers=args.workers, graph_cache=None,
                allow_small_lambda=False, labels_out=None, report_out=None,
                selection_out=None, trace_out=None,
            )
            result = run_fit(ns)
            if "metrics" not in result:
                raise UsageError(f"dataset {entry['name']} has no labels")
            names.append(entry["name"])
            for key in rows:
                rows[key].append([result["metrics"][key]])
            summary["runs"][entry["name"]] = {
                "metrics": result["metrics"],
                "lambda": result["solution"]["lambda"],
                "k": result["solution"]["k"],
                "n_clusters": result["solution"]["n_clusters"],
            }
        for key, vals in rows.items():
            _write_table(out_dir / f"results_{key}.csv", names, ["NNEC"], vals)
            summary["tables"][key] = _aggregate_to(out_dir, key, names, ["NNEC"], np.array(vals))
    for path in args.results or []:
        names, methods, values = read_results_csv(path)
        stem = Path(path).stem
        summary["tables"][stem] = _aggregate_to(out_dir, stem, names, methods, values)
    if not args.manifest and not args.results:
        raise UsageError("bench needs --manifest and/or --results")
    (out_dir / "summary.json").write_text(_dump(summary))
    return EXIT_OK


def _add_input_args(p):
    p.add_argument("input", help="delimited text file of points")
    p.add_argument("--delimiter", default=",", help="field separator, or 'whitespace'")
    p.add_argument("--header", action="store_true", help="first line holds column names")
    p.add_argument("--label-column", help="label column index or header name")
    p.add_argument("--labels", help="separate file with one label per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnec", description="Nearest neighbour equilibrium clustering")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="cluster a dataset")
    _add_input_args(p)
    p.add_argument("--mode", choices=MODES, default="full-grid")
    p.add_argument("--k", type=int, help="neighbour count (fixed mode; refined mode override)")
    p.add_argument("--lambda", dest="lam", help="threshold, e.g. 2, 1.4 or 4/3 (fixed mode)")
    p.add_argument("--ks", help="comma-separated k grid (full-grid mode)")
    p.add_argument("--lambdas", help="comma-separated lambda grid (full-grid mode)")
    p.add_argument("--allow-small-lambda", action="store_true", help="permit lambda < 1")
    p.add_argument("--r", type=int, default=5, help="longest detectable cycle")
    p.add_argument("--t-max", type=int, default=100, help="maximum sweeps per growth")
    p.add_argument("--no-preprocess", action="store_true", help="skip scaling and PCA")
    p.add_argument("--max-dim", type=int, default=100, help="PCA target width")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--graph-cache", help="JSON file to read/write the neighbour graph")
    p.add_argument("--labels-out", help="write one label per line")
    p.add_argument("--report-out", help="write the JSON solution report")
    p.add_argument("--selection-out", help="write the JSON model-selection report")
    p.add_argument("--trace-out", help="write grower sweeps as JSON lines (fixed mode)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="compare two label files")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--ami-average", default="arithmetic", choices=("arithmetic", "geometric", "min", "max"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="sample a Gaussian mixture as CSV (label last)")
    p.add_argument("--components", default="five-blobs",
                   help='preset name or JSON list of {"mean": [..], "scale": s, "count": c}')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="fit+eval over a manifest and/or aggregate result matrices")
    p.add_argument("--manifest", help="JSON manifest of labelled datasets")
    p.add_argument("--results", nargs="*", help="results CSVs (rows datasets, columns methods)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (DataError, UsageError, ValueError, KeyError) as err:
        code, kind, msg = EXIT_VALIDATION, "validation", str(err)
    except OSError as err:
        code, kind, msg = EXIT_IO, "io", str(err)
    except Exception as err:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        code, kind, msg = EXIT_INTERNAL, "internal", f"{type(err).__name__}: {err}"
    sys.stderr.write(json.dumps({"error": msg, "kind": kind, "exit_code": code}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
