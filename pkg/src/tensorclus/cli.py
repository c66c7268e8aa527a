"""Command-line interface.

Subcommands:

* ``synth``    generate a labeled synthetic dataset (TCLS file)
* ``inspect``  print a JSON summary of a dataset
* ``metrics``  score a predicted labeling against ground truth
* ``cluster``  run the clustering algorithm over one or more seeds and
  write a JSON result document, plus CSV traces and an error-trace
  figure when ``--trace`` is given

Exit codes: 0 success, 2 validation/usage error, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import ClusterConfig, fit
from .data import Dataset, load_dense, load_idx, save_dense, subsample_per_class, synth_clusters
from .evaluation import accuracy, nmi
from .exceptions import ConfigError, DataFormatError, NumericalError, RankDeficiencyError
from .tensors import frob_norm

__all__ = ["main"]


def _parse_int_list(text):
    return [int(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _load_dataset(source: str) -> Dataset:
    """Load ``path.tcls`` or an ``images,labels`` IDX pair."""
    if "," in source:
        images, labels = source.split(",", 1)
        return load_idx(images.strip(), labels.strip())
    return load_dense(source)


def _read_labels_file(path) -> np.ndarray:
    text = Path(path).read_text().strip()
    if not text:
        raise DataFormatError(f"{path} contains no labels")
    if text.lstrip().startswith("["):
        values = json.loads(text)
    else:
        values = [tok for tok in text.replace(",", " ").split()]
    try:
        return np.asarray([int(v) for v in values], dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: labels must be integers") from exc


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tensorclus",
        description="Tensor clustering with a heterogeneous Tucker model.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--per-cluster", type=int, default=30)
    p.add_argument("--slice-shape", type=_parse_int_list, default=[8, 8],
                   help="comma-separated slice dimensions")
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--centroid-rank", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output TCLS path")

    p = sub.add_parser("inspect", help="summarize a dataset")
    p.add_argument("--dataset", required=True,
                   help="TCLS path, or 'images.idx,labels.idx'")

    p = sub.add_parser("metrics", help="score predicted labels")
    p.add_argument("--true", dest="true_path", required=True)
    p.add_argument("--pred", dest="pred_path", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("cluster", help="run the clustering algorithm")
    p.add_argument("--dataset", required=True,
                   help="TCLS path, or 'images.idx,labels.idx'")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--core-dims", type=_parse_int_list, default=None,
                   help="comma-separated core sizes for the first N-1 modes")
    p.add_argument("--init", choices=["random", "hosvd1", "hosvd2"],
                   default="hosvd1")
    p.add_argument("--max-outer", type=int, default=250)
    p.add_argument("--seeds", type=_parse_int_list, default=[0],
                   help="comma-separated seeds, one full run each")
    p.add_argument("--per-class", type=int, default=None,
                   help="subsample this many samples per class (needs labels)")
    p.add_argument("--classes", type=_parse_int_list, default=None,
                   help="restrict to these class ids when subsampling")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trace", action="store_true",
                   help="also write per-iteration CSV and an error-trace figure")
    return parser


_INIT_NAMES = {"random": "random", "hosvd1": "hosvd_i", "hosvd2": "hosvd_ii"}


def _cmd_synth(args) -> int:
    ds = synth_clusters(
        n_clusters=args.k,
        per_cluster=args.per_cluster,
        slice_shape=args.slice_shape,
        noise_sigma=args.noise,
        separation=args.separation,
        seed=args.seed,
        centroid_rank=args.centroid_rank,
    )
    save_dense(args.out, ds)
    print(json.dumps({
        "written": str(args.out),
        "shape": list(ds.tensor.shape),
        "n_samples": ds.n_samples,
        "n_clusters": args.k,
    }))
    return 0


def _cmd_inspect(args) -> int:
    ds = _load_dataset(args.dataset)
    summary = {
        "name": ds.name,
        "shape": list(ds.tensor.shape),
        "order": ds.tensor.ndim,
        "n_samples": ds.n_samples,
        "frobenius_norm": frob_norm(ds.tensor),
        "has_labels": ds.labels is not None,
    }
    if ds.labels is not None:
        classes, counts = np.unique(ds.labels, return_counts=True)
        summary["class_counts"] = {
            int(c): int(n) for c, n in zip(classes, counts)
        }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_metrics(args) -> int:
    true_labels = _read_labels_file(args.true_path)
    pred_labels = _read_labels_file(args.pred_path)
    if true_labels.size != pred_labels.size:
        raise ConfigError(
            f"label lengths differ: {true_labels.size} vs {pred_labels.size}"
        )
    report = {
        "n_samples": int(true_labels.size),
        "accuracy": accuracy(true_labels, pred_labels),
        "nmi": nmi(true_labels, pred_labels),
    }
    payload = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)
    return 0


def _cmd_cluster(args) -> int:
    ds = _load_dataset(args.dataset)
    if args.per_class is not None:
        ds = subsample_per_class(ds, args.per_class, classes=args.classes,
                                 seed=args.seeds[0])
    if not args.seeds:
        raise ConfigError("at least one seed is required")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    half_norm2 = 0.5 * frob_norm(ds.tensor) ** 2

    runs = []
    traces = {}
    for seed in args.seeds:
        cfg = ClusterConfig(
            n_clusters=args.k,
            core_dims=tuple(args.core_dims) if args.core_dims else None,
            max_outer=args.max_outer,
            init_strategy=_INIT_NAMES[args.init],
            seed=seed,
        )
        start = time.perf_counter()
        result = fit(ds.tensor, cfg)
        elapsed = time.perf_counter() - start
        error_trace = list(result.factors.error_trace)
        run = {
            "seed": seed,
            "labels": [int(v) for v in result.labels],
            "outer_iterations": len(error_trace),
            "error_trace": error_trace,
            "h_trace": [half_norm2 - f for f in error_trace],
            "rtr": [
                {
                    "outer_iteration": t + 1,
                    "iterations": s.iterations,
                    "inner_iterations": s.inner_iterations,
                    "final_grad_norm": s.grad_norm_trace[-1],
                    "reason": s.reason,
                }
                for t, s in enumerate(result.diagnostics)
            ],
            "time_sec": elapsed,
        }
        if ds.labels is not None:
            run["ac"] = accuracy(ds.labels, result.labels)
            run["nmi"] = nmi(ds.labels, result.labels)
        runs.append(run)
        traces[seed] = error_trace

    document = {
        "tool": {"name": "tensorclus", "version": __version__},
        "dataset": {
            "source": args.dataset,
            "name": ds.name,
            "shape": list(ds.tensor.shape),
            "n_samples": ds.n_samples,
            "has_labels": ds.labels is not None,
            "per_class": args.per_class,
            "classes": args.classes,
        },
        "config": {
            "k": args.k,
            "core_dims": args.core_dims,
            "init": _INIT_NAMES[args.init],
            "max_outer": args.max_outer,
            "seeds": args.seeds,
        },
        "runs": runs,
    }
    if ds.labels is not None:
        acs = [r["ac"] for r in runs]
        nmis = [r["nmi"] for r in runs]
        document["summary"] = {
            "ac_mean": float(np.mean(acs)),
            "ac_std": float(np.std(acs)),
            "nmi_mean": float(np.mean(nmis)),
            "nmi_std": float(np.std(nmis)),
        }

    result_path = out_dir / "result.json"
    result_path.write_text(json.dumps(document, indent=2) + "\n")

    if args.trace:
        trace_path = out_dir / "trace.csv"
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "outer_iteration", "model_error", "h",
                             "rtr_iterations", "rtr_inner_iterations",
                             "rtr_final_grad_norm"])
            for run in runs:
                for t, f in enumerate(run["error_trace"]):
                    rtr = run["rtr"][t]
                    writer.writerow([
                        run["seed"], t + 1, f, run["h_trace"][t],
                        rtr["iterations"], rtr["inner_iterations"],
                        rtr["final_grad_norm"],
                    ])
        from .plotting import save_error_trace_figure
        save_error_trace_figure(traces, out_dir / "error_trace.png")

    print(json.dumps({
        "result": str(result_path),
        "seeds": args.seeds,
        **({"summary": document["summary"]} if "summary" in document else {}),
    }))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "inspect": _cmd_inspect,
    "metrics": _cmd_metrics,
    "cluster": _cmd_cluster,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RankDeficiencyError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
