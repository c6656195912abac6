"""Command-line interface.

Subcommands: train, eval, bench, encode-verify, cluster, quantize, sweep.
Exit codes: 0 success, 1 verification or evaluation failure, 2 usage error.
``BCP_THREADS`` caps sweep worker parallelism; ``BCP_BACKEND`` selects the
numba or numpy kernel backend.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import backend
from .binarize import freeze
from .cluster import single_linkage
from .dense import train
from .evaluate import bench_scoring, evaluate_pr_auc, evaluate_ranking
from .expressive import encode, exhaustive_tensors, verify_reconstruction
from .model import ModelKind, TrainConfig
from .serialize import (
    FormatError,
    load_dense,
    load_model,
    save_binary,
    save_dense,
)
from .triples import augment_inverse, load_dataset
from .vq import vq_apply


class UsageError(Exception):
    pass


def _load_config_file(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=[k.value for k in ModelKind], default="cp")
    p.add_argument("--dim", type=int, default=200)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--lambda", dest="lambda_all", type=float, default=0.0,
                   help="sets lambda-a/b/c together")
    p.add_argument("--lambda-a", type=float, default=None)
    p.add_argument("--lambda-b", type=float, default=None)
    p.add_argument("--lambda-c", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--neg", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=["float64", "float32"], default="float64")
    p.add_argument("--val-every", type=int, default=20)
    p.add_argument("--no-augment", action="store_true",
                   help="skip inverse-triple augmentation")


def _config_from_args(args) -> TrainConfig:
    la = args.lambda_a if args.lambda_a is not None else args.lambda_all
    lb = args.lambda_b if args.lambda_b is not None else args.lambda_all
    lc = args.lambda_c if args.lambda_c is not None else args.lambda_all
    return TrainConfig(
        dim=args.dim, eta=args.eta, lambda_a=la, lambda_b=lb, lambda_c=lc,
        delta=args.delta, epochs=args.epochs, neg_per_pos=args.neg,
        kind=ModelKind(args.kind), seed=args.seed, dtype=args.dtype,
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="bcp",
        description="CP / B-CP knowledge-graph completion toolkit",
    )
    parser.add_argument("--config", default=None,
                        help="key=value defaults file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    p = subparsers["train"] = sub.add_parser(
        "train", help="train a model and write a model file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--quiet", action="store_true")
    _add_train_flags(p)

    p = subparsers["eval"] = sub.add_parser("eval", help="filtered-ranking metrics for a model file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=["test", "valid"], default="test")
    p.add_argument("--hits", default="1,3,10")
    p.add_argument("--pr-auc", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", action="store_true")

    p = subparsers["bench"] = sub.add_parser("bench", help="float vs bitwise scoring timings")
    p.add_argument("--dmin", type=int, default=10)
    p.add_argument("--dmax", type=int, default=1000)
    p.add_argument("--step", type=int, default=10)
    p.add_argument("--dims", default=None, help="explicit comma list, overrides sweep")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare-backends", action="store_true")
    p.add_argument("--csv", action="store_true")

    p = subparsers["encode-verify"] = sub.add_parser("encode-verify",
                       help="construct exact binary factors and verify them")
    p.add_argument("--ne", type=int, required=True)
    p.add_argument("--nr", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--exhaustive", action="store_true",
                   help="verify every boolean tensor of this shape")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-blocks", type=int, default=4096)

    p = subparsers["cluster"] = sub.add_parser("cluster", help="single-linkage clusters of entity bits")
    p.add_argument("--model", required=True, help="binary model file")
    p.add_argument("--data", required=True, help="dataset directory for labels")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dendrogram", default=None, help="write merge triples CSV here")
    p.add_argument("--csv", action="store_true")

    p = subparsers["quantize"] = sub.add_parser("quantize", help="post-hoc vector quantization of a dense model")
    p.add_argument("--model", required=True, help="dense model file")
    p.add_argument("--out", required=True)

    p = subparsers["sweep"] = sub.add_parser("sweep", help="grid search selected by validation MRR")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV of grid results")
    p.add_argument("--kind", choices=[k.value for k in ModelKind], default="cp")
    p.add_argument("--grid-eta", default="0.025,0.05")
    p.add_argument("--grid-lambda", default="0,0.0001")
    p.add_argument("--grid-delta", default="0.5")
    p.add_argument("--grid-dim", default="200")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--neg", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-every", type=int, default=20)
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--max-points", type=int, default=512)
    return parser, subparsers


def _require_dir(path: str) -> None:
    if not os.path.isdir(path):
        raise UsageError(f"dataset directory not found: {path}")
    if not os.path.exists(os.path.join(path, "train.txt")):
        raise UsageError(f"missing train.txt under {path}")


def _require_file(path: str) -> None:
    if not os.path.exists(path):
        raise UsageError(f"file not found: {path}")


def cmd_train(args) -> int:
    _require_dir(args.data)
    config = _config_from_args(args)
    _, store = load_dataset(args.data, augment=not args.no_augment)

    def progress(epoch, loss, val_mrr):
        if args.quiet:
            return
        line = f"epoch {epoch + 1:4d}  loss {loss:.6f}"
        if val_mrr is not None:
            line += f"  val_mrr {val_mrr:.4f}"
        print(line)

    factors = train(store, config, callback=progress, validate_every=args.val_every)
    if config.kind.is_binary:
        save_binary(args.out, freeze(factors, config.delta))
        save_dense(args.out + ".latent", factors)
        print(f"wrote binary model to {args.out} (latent factors in {args.out}.latent)")
    else:
        save_dense(args.out, factors)
        print(f"wrote dense model to {args.out}")
    return 0


def _load_store_for_model(data_dir: str, model) -> tuple:
    vocab, store = load_dataset(data_dir, augment=False)
    if model.n_relations == 2 * store.n_relations:
        store, vocab = augment_inverse(store, vocab)
    if model.n_entities != store.n_entities:
        raise ValueError(
            f"model has {model.n_entities} entities, dataset has {store.n_entities}"
        )
    if model.n_relations != store.n_relations:
        raise ValueError(
            f"model has {model.n_relations} relations, dataset has {store.n_relations}"
        )
    return vocab, store


def _emit(rows, csv: bool) -> None:
    if csv:
        for name, value in rows:
            print(f"{name},{value}")
    else:
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            if isinstance(value, float):
                print(f"{name:<{width}}  {value:.6f}")
            else:
                print(f"{name:<{width}}  {value}")


def cmd_eval(args) -> int:
    _require_dir(args.data)
    _require_file(args.model)
    model = load_model(args.model)
    try:
        _, store = _load_store_for_model(args.data, model)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    hits = tuple(int(h) for h in args.hits.split(","))
    report = evaluate_ranking(model, store, split=args.split, hits_at=hits)
    rows = report.rows()
    if args.pr_auc:
        rng = np.random.default_rng(args.seed)
        rows += evaluate_pr_auc(model, store, rng, split=args.split).rows()
    _emit(rows, args.csv)
    return 0


def cmd_bench(args) -> int:
    if args.dims:
        dims = [int(d) for d in args.dims.split(",")]
    else:
        dims = list(range(args.dmin, args.dmax + 1, args.step))
    rows = bench_scoring(dims, reps=args.reps, seed=args.seed,
                         compare_backends=args.compare_backends)
    header = ["D", "float_ns", "bitwise_ns"] + sorted(rows[0].extra)
    if args.csv:
        print(",".join(header))
        for r in rows:
            cells = [str(r.dim), f"{r.float_ns:.1f}", f"{r.bitwise_ns:.1f}"]
            cells += [f"{r.extra[k]:.1f}" for k in sorted(r.extra)]
            print(",".join(cells))
    else:
        print(f"backend: {backend.name}")
        print("  ".join(f"{h:>12}" for h in header))
        for r in rows:
            cells = [r.dim, r.float_ns, r.bitwise_ns] + [r.extra[k] for k in sorted(r.extra)]
            print("  ".join(f"{c:>12.1f}" if isinstance(c, float) else f"{c:>12}" for c in cells))
    return 0


def cmd_encode_verify(args) -> int:
    if 2 * args.ne * args.nr > args.max_blocks:
        raise UsageError(
            f"2*ne*nr = {2 * args.ne * args.nr} blocks exceeds --max-blocks {args.max_blocks}"
        )
    rng = np.random.default_rng(args.seed)
    total_scores = 0
    mismatches = []
    n_tensors = 0
    if args.exhaustive:
        tensors = exhaustive_tensors(args.ne, args.nr)
    else:
        tensors = (
            rng.integers(0, 2, size=(args.ne, args.ne, args.nr))
            for _ in range(args.trials)
        )
    for X in tensors:
        factors = encode(X, delta=args.delta)
        report = verify_reconstruction(factors, X)
        total_scores += report.n_scores
        mismatches.extend(report.mismatches)
        n_tensors += 1
    print(f"tensors checked: {n_tensors}")
    print(f"scores checked:  {total_scores}")
    print(f"mismatches:      {len(mismatches)}")
    for m in mismatches[:10]:
        i, j, k, got, want = m
        print(f"  ({i},{j},{k}) got {got} want {want}")
    return 1 if mismatches else 0


def cmd_cluster(args) -> int:
    _require_file(args.model)
    _require_dir(args.data)
    model = load_model(args.model)
    if not hasattr(model, "a_words"):
        raise UsageError("cluster requires a binary model file")
    try:
        vocab, _ = _load_store_for_model(args.data, model)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = [model.a_row(i) for i in range(model.n_entities)]
    dendro, labels = single_linkage(rows, model.scale_triple[0], args.k)
    for idx, label in enumerate(labels):
        print(f"{vocab.entity_labels[idx]}\t{label}")
    if args.dendrogram:
        with open(args.dendrogram, "w", encoding="utf-8") as fh:
            fh.write("cluster_a,cluster_b,height\n")
            for a, b, h in dendro.merges:
                fh.write(f"{a},{b},{h:.9g}\n")
    return 0


def cmd_quantize(args) -> int:
    _require_file(args.model)
    dense = load_dense(args.model)
    save_binary(args.out, vq_apply(dense))
    print(f"wrote vector-quantized model to {args.out}")
    return 0


def _sweep_worker(task) -> tuple[int, float]:
    index, data_dir, augment, cfg_kwargs, val_every = task
    _, store = load_dataset(data_dir, augment=augment)
    config = TrainConfig(**cfg_kwargs)
    if not len(store.splits["valid"]):
        raise ValueError("sweep requires a valid.txt split for model selection")
    collected = {}

    def grab(epoch, loss, val_mrr):
        if val_mrr is not None:
            collected["mrr"] = max(collected.get("mrr", -1.0), val_mrr)

    train(store, config, callback=grab, validate_every=val_every)
    return index, collected.get("mrr", float("nan"))


def cmd_sweep(args) -> int:
    _require_dir(args.data)
    etas = [float(v) for v in args.grid_eta.split(",")]
    lambdas = [float(v) for v in args.grid_lambda.split(",")]
    deltas = [float(v) for v in args.grid_delta.split(",")]
    dims = [int(v) for v in args.grid_dim.split(",")]
    kind = ModelKind(args.kind)
    grid = list(itertools.product(etas, lambdas, deltas, dims))
    if len(grid) > args.max_points:
        raise UsageError(
            f"grid has {len(grid)} points, exceeding --max-points {args.max_points}"
        )
    tasks = []
    for index, (eta, lam, delta, dim) in enumerate(grid):
        cfg = dict(
            dim=dim, eta=eta, lambda_a=lam, lambda_b=lam, lambda_c=lam,
            delta=delta, epochs=args.epochs, neg_per_pos=args.neg,
            kind=kind, seed=args.seed,
        )
        tasks.append((index, args.data, not args.no_augment, cfg, args.val_every))
    workers = int(os.environ.get("BCP_THREADS", "1"))
    results: list[float] = [float("nan")] * len(grid)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, mrr in pool.map(_sweep_worker, tasks):
                results[index] = mrr
    else:
        for task in tasks:
            index, mrr = _sweep_worker(task)
            results[index] = mrr
    best = max(range(len(grid)), key=lambda t: (results[t], -t))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("kind,dim,eta,lambda,delta,epochs,neg,seed,val_mrr\n")
        for (eta, lam, delta, dim), mrr in zip(grid, results):
            fh.write(f"{kind.value},{dim},{eta:g},{lam:g},{delta:g},"
                     f"{args.epochs},{args.neg},{args.seed},{mrr:.6f}\n")
    eta, lam, delta, dim = grid[best]
    print(f"best val_mrr {results[best]:.4f} at eta={eta:g} lambda={lam:g} "
          f"delta={delta:g} dim={dim}")
    print(f"wrote {len(grid)} grid rows to {args.out}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "encode-verify": cmd_encode_verify,
    "cluster": cmd_cluster,
    "quantize": cmd_quantize,
    "sweep": cmd_sweep,
}


def run(argv=None) -> int:
    parser, subparsers = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre, _ = parser.parse_known_args(argv)
    try:
        if pre.config:
            # config entries become subcommand defaults; explicit flags win
            subparser = subparsers[pre.command]
            subparser.set_defaults(
                **_coerce_types(_load_config_file(pre.config), subparser)
            )
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _coerce_types(overrides: dict[str, str], subparser) -> dict:
    actions = {a.dest: a for a in subparser._actions}
    bad = set(overrides) - set(actions)
    if bad:
        raise UsageError(f"unknown config keys: {', '.join(sorted(bad))}")
    out: dict = {}
    for dest, raw in overrides.items():
        action = actions[dest]
        if action.const is True:  # store_true flag
            out[dest] = raw.lower() in ("1", "true", "yes")
        elif action.type is not None:
            out[dest] = action.type(raw)
        else:
            out[dest] = raw
    return out


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
