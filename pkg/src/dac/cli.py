"""Command-line front end: dataset synthesis, runs, evaluation, sweeps.

Subcommands:
  synth   write a synthetic Gaussian-mixture dataset (DACF + label file)
  run     multi-seed pipeline runs with CSV + text reports
  eval    print NMI/ARI/ACC (and SC with features) for two label files
  sweep   known-ratio or kprime protocol sweeps

Multi-seed runs execute in parallel when the DAC_THREADS environment
variable is set above 1; report rows are always ordered by seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .data import (
    FileFormatError,
    gen_synthetic,
    load_features,
    load_labels,
    make_split,
    save_features,
    save_labels,
)
from .encoder import TrainConfig
from .metrics import acc, ari, nmi, silhouette
from .pipeline import RunConfig, reinit_ablation_run, run

KNOWN_RATIO_SETTINGS = (0.25, 0.5, 0.75)
KPRIME_MULTIPLIERS = (1, 2, 3, 4)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dac", description="aligned pseudo-label clustering toolkit"
    )
    parser.add_argument("--version", action="version", version=f"dac {__version__}")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian-mixture dataset")
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--n", type=int, required=True, help="samples per cluster")
    p.add_argument("--dim", type=int, required=True, help="feature dimension")
    p.add_argument("--sep", type=float, required=True, help="center sphere radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix (.dacf/.labels appended)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the pipeline over multiple seeds")
    _add_data_flags(p)
    _add_train_flags(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int, help="known cluster count")
    group.add_argument("--kprime", type=int, help="over-provisioned count; K gets estimated")
    p.add_argument("--ablation", choices=("none", "reinit"), default="none")
    p.add_argument("--out", required=True, help="report prefix")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a predicted labeling against ground truth")
    p.add_argument("--truth", required=True, help="ground-truth label file")
    p.add_argument("--pred", required=True, help="predicted label file")
    p.add_argument("--features", help="optional DACF file; adds the silhouette score")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="protocol sweeps over known-ratio or kprime")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--sweep", choices=("known-ratio", "kprime"), required=True)
    p.add_argument("--ablation", choices=("none", "reinit"), default="none")
    p.add_argument("--out", required=True, help="report prefix")
    p.set_defaults(func=cmd_sweep)
    return parser


def _add_data_flags(p):
    p.add_argument("--features", required=True, help="DACF feature file")
    p.add_argument("--labels", required=True, help="label file")
    p.add_argument("--known-ratio", type=float, default=0.75)
    p.add_argument("--labeled-ratio", type=float, default=0.1)
    p.add_argument("--known-classes", default=None,
                   help="optional file of class strings to treat as known "
                        "(overrides the seeded --known-ratio selection)")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--seeds", type=int, default=10, help="number of seeded runs to average")


def _add_train_flags(p):
    p.add_argument("--lr", type=float, default=5e-3, help="pre-training learning rate")
    p.add_argument("--round-lr", type=float, default=None,
                   help="learning rate for the self-supervised rounds (default: --lr)")
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs-per-round", type=int, default=1)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--min-delta", type=float, default=1e-2,
                   help="pre-training early-stop improvement threshold")
    p.add_argument("--max-rounds", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)


def cmd_synth(args) -> int:
    features, labels = gen_synthetic(args.k, args.n, args.dim, args.sep, args.seed)
    save_features(features, f"{args.out}.dacf")
    save_labels([str(int(c)) for c in labels], f"{args.out}.labels")
    print(f"wrote {args.out}.dacf ({features.shape[0]}x{features.shape[1]}) and {args.out}.labels")
    return 0


def _single_run(payload: dict) -> dict:
    """One seeded pipeline run; module-level so worker processes can pickle it."""
    features = payload["features"]
    truth = payload["truth"]
    seed = payload["seed"]
    data = make_split(
        features,
        truth,
        payload["known_ratio"],
        payload["labeled_ratio"],
        seed=seed,
        known_classes=payload["known_classes"],
    )
    cfg = RunConfig(
        k=payload["k"],
        k_prime=payload["k_prime"],
        max_rounds=payload["max_rounds"],
        patience=payload["patience"],
        train=TrainConfig(
            batch_size=payload["batch_size"],
            learning_rate=payload["lr"],
            epochs_per_round=payload["epochs_per_round"],
            seed=seed,
            hidden_dim=payload["hidden_dim"],
            pretrain_min_delta=payload["min_delta"],
        ),
        seed=seed,
        round_learning_rate=payload["round_lr"],
    )
    arm = reinit_ablation_run if payload["ablation"] == "reinit" else run
    _, final, history = arm(data, cfg)
    return {
        "seed": seed,
        "k_used": history.k_used,
        "k_predicted": history.k_predicted,
        "nmi": nmi(truth, final.assignments),
        "ari": ari(truth, final.assignments),
        "acc": acc(truth, final.assignments),
        "best_silhouette": max(r.silhouette for r in history.rounds),
        "rounds": len(history.rounds),
        "history": [
            (r.silhouette, r.kmeans_objective, r.label_change_fraction, r.alignment_cost)
            for r in history.rounds
        ],
    }


def _payloads(args, features, truth, known_ratio=None, k=None, k_prime=None) -> list[dict]:
    base = {
        "features": features,
        "truth": truth,
        "known_ratio": args.known_ratio if known_ratio is None else known_ratio,
        "labeled_ratio": args.labeled_ratio,
        "known_classes": _read_known_classes(args),
        "k": k,
        "k_prime": k_prime,
        "ablation": args.ablation,
        "max_rounds": args.max_rounds,
        "patience": args.patience,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "round_lr": args.round_lr,
        "epochs_per_round": args.epochs_per_round,
        "hidden_dim": args.hidden_dim,
        "min_delta": args.min_delta,
    }
    return [dict(base, seed=args.seed + i) for i in range(args.seeds)]


def _read_known_classes(args):
    """Map a known-class file (one class string per line) to dense ids."""
    if args.known_classes is None:
        return None
    _, names = load_labels(args.labels)
    index = {name: i for i, name in enumerate(names)}
    with open(args.known_classes, "r", encoding="utf-8") as fh:
        wanted = [line for line in fh.read().splitlines() if line]
    unknown = [w for w in wanted if w not in index]
    if unknown:
        raise ValueError(f"known-class file names absent from the label file: {unknown}")
    return {index[w] for w in wanted}


def _execute(payloads: list[dict]) -> list[dict]:
    workers = int(os.environ.get("DAC_THREADS", "1") or "1")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_single_run, payloads))
    return [_single_run(p) for p in payloads]


def _flag_lines(args, extra: dict) -> list[str]:
    skip = {"func", "features", "labels"}
    items = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    items["features_file"] = args.features
    items["labels_file"] = args.labels
    items.update(extra)
    return [f"# {k}={v}" for k, v in sorted(items.items())]


_METRIC_KEYS = ("nmi", "ari", "acc", "best_silhouette")


def _write_run_report(out: str, args, results: list[dict], extra_flags: dict) -> None:
    header = _flag_lines(args, extra_flags)
    with open(f"{out}.csv", "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write("row,seed,k_used,k_predicted,nmi,ari,acc,best_silhouette,rounds\n")
        for r in results:
            fh.write(
                f"seed,{r['seed']},{r['k_used']},{_fmt(r['k_predicted'])},"
                f"{r['nmi']:.6f},{r['ari']:.6f},{r['acc']:.4f},"
                f"{r['best_silhouette']:.6f},{r['rounds']}\n"
            )
        for row_name, agg in (("mean", np.mean), ("std", np.std)):
            vals = {k: agg([r[k] for r in results]) for k in _METRIC_KEYS}
            kp = [r["k_predicted"] for r in results if r["k_predicted"] is not None]
            kp_txt = f"{agg(kp):.2f}" if kp else ""
            fh.write(
                f"{row_name},,,{kp_txt},{vals['nmi']:.6f},{vals['ari']:.6f},"
                f"{vals['acc']:.4f},{vals['best_silhouette']:.6f},\n"
            )
    with open(f"{out}_history.csv", "w", encoding="utf-8") as fh:
        fh.write("seed,round,silhouette,kmeans_objective,label_change_fraction,alignment_cost\n")
        for r in results:
            for i, (sc, obj, change, cost) in enumerate(r["history"], start=1):
                fh.write(f"{r['seed']},{i},{sc:.6f},{obj:.6g},{change:.6f},{cost:.6g}\n")
    with open(f"{out}.txt", "w", encoding="utf-8") as fh:
        fh.write("aligned-clustering run report\n")
        for line in header:
            fh.write(line[2:] + "\n")
        means = {k: np.mean([r[k] for r in results]) for k in _METRIC_KEYS}
        stds = {k: np.std([r[k] for r in results]) for k in _METRIC_KEYS}
        fh.write(f"seeds: {[r['seed'] for r in results]}\n")
        fh.write(
            f"NMI {means['nmi']:.4f}+-{stds['nmi']:.4f}  "
            f"ARI {means['ari']:.4f}+-{stds['ari']:.4f}  "
            f"ACC {means['acc']:.2f}+-{stds['acc']:.2f}\n"
        )
        kp = [r["k_predicted"] for r in results if r["k_predicted"] is not None]
        if kp:
            fh.write(f"predicted K: {kp} (mean {np.mean(kp):.2f})\n")


def _fmt(value) -> str:
    return "" if value is None else str(value)


def cmd_run(args) -> int:
    features = load_features(args.features)
    truth, _ = load_labels(args.labels)
    if features.shape[0] != truth.shape[0]:
        raise ValueError("feature and label files disagree on sample count")
    payloads = _payloads(args, features, truth, k=args.k, k_prime=args.kprime)
    results = _execute(payloads)
    _write_run_report(args.out, args, results, {})
    print(f"wrote {args.out}.csv, {args.out}_history.csv, {args.out}.txt")
    return 0


def cmd_eval(args) -> int:
    truth, _ = load_labels(args.truth)
    pred, _ = load_labels(args.pred)
    if truth.shape[0] != pred.shape[0]:
        raise ValueError(
            f"label files disagree on length: {truth.shape[0]} vs {pred.shape[0]}"
        )
    line = f"NMI {nmi(truth, pred):.4f}  ARI {ari(truth, pred):.4f}  ACC {acc(truth, pred):.2f}"
    if args.features:
        feats = load_features(args.features)
        line += f"  SC {silhouette(feats, pred):.4f}"
    print(line)
    return 0


def cmd_sweep(args) -> int:
    features = load_features(args.features)
    truth, _ = load_labels(args.labels)
    if features.shape[0] != truth.shape[0]:
        raise ValueError("feature and label files disagree on sample count")
    k_true = int(truth.max()) + 1

    if args.sweep == "known-ratio":
        settings = [(f"known_ratio={kr}", {"known_ratio": kr, "k": k_true}) for kr in KNOWN_RATIO_SETTINGS]
    else:
        settings = [
            (f"kprime={m}x{k_true}", {"k_prime": m * k_true})
            for m in KPRIME_MULTIPLIERS
        ]

    all_rows = []
    summaries = []
    for name, overrides in settings:
        payloads = _payloads(
            args,
            features,
            truth,
            known_ratio=overrides.get("known_ratio"),
            k=overrides.get("k"),
            k_prime=overrides.get("k_prime"),
        )
        results = _execute(payloads)
        for r in results:
            all_rows.append((name, r))
        summary = {k: float(np.mean([r[k] for r in results])) for k in _METRIC_KEYS}
        summary["std_acc"] = float(np.std([r["acc"] for r in results]))
        kp = [r["k_predicted"] for r in results if r["k_predicted"] is not None]
        summary["mean_k_predicted"] = float(np.mean(kp)) if kp else None
        summaries.append((name, summary))

    header = _flag_lines(args, {"k_true": k_true})
    with open(f"{args.out}.csv", "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write("setting,mean_nmi,mean_ari,mean_acc,std_acc,mean_best_silhouette,mean_k_predicted\n")
        for name, s in summaries:
            fh.write(
                f"{name},{s['nmi']:.6f},{s['ari']:.6f},{s['acc']:.4f},"
                f"{s['std_acc']:.4f},{s['best_silhouette']:.6f},{_fmt(s['mean_k_predicted'])}\n"
            )
    with open(f"{args.out}_runs.csv", "w", encoding="utf-8") as fh:
        fh.write("setting,seed,k_used,k_predicted,nmi,ari,acc,best_silhouette,rounds\n")
        for name, r in all_rows:
            fh.write(
                f"{name},{r['seed']},{r['k_used']},{_fmt(r['k_predicted'])},"
                f"{r['nmi']:.6f},{r['ari']:.6f},{r['acc']:.4f},"
                f"{r['best_silhouette']:.6f},{r['rounds']}\n"
            )
    with open(f"{args.out}.txt", "w", encoding="utf-8") as fh:
        fh.write(f"sweep report ({args.sweep})\n")
        for line in header:
            fh.write(line[2:] + "\n")
        for name, s in summaries:
            fh.write(f"{name}: NMI {s['nmi']:.4f}  ARI {s['ari']:.4f}  ACC {s['acc']:.2f}\n")
    print(f"wrote {args.out}.csv, {args.out}_runs.csv, {args.out}.txt")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
