"""Command-line front door: influence, select, flops, simulate, validate.

Exit codes: 0 success, 1 I/O failure, 2 validation failure.  Errors go to
stderr; pass --json-errors to also emit a machine-readable record on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import data as dio
from . import flops as fl
from .harness import SyntheticSpec, compare_selection, write_report
from .influence import load_checkpoints, sample_validation, score_dataset_influence
from .models import MODEL_REGISTRY, TanhNetModel, make_model
from .selector import (
    SelectionConfig,
    select,
    write_manifest,
    write_subset,
)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="diq",
        description="Difficulty-influence quadrant data selection toolkit",
    )
    p.add_argument("--json-errors", action="store_true", help="emit errors as JSON on stdout")
    sub = p.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("influence", help="score training-sample influence from checkpoints")
    pi.add_argument("--dataset", required=True)
    pi.add_argument("--val", required=True, action="append", help="validation pool file (repeatable)")
    pi.add_argument("--checkpoints", required=True)
    pi.add_argument("--model", default="linear", choices=sorted(MODEL_REGISTRY))
    pi.add_argument("--hidden", type=int, default=8, help="hidden units (mlp model only)")
    pi.add_argument("--k", type=int, default=20, help="validation samples drawn per pool")
    pi.add_argument("--seed", type=int, default=0)
    pi.add_argument("--workers", type=int, default=1)
    pi.add_argument("--scores", default=None, help="existing score file to merge difficulty from")
    pi.add_argument("--out", required=True)

    ps = sub.add_parser("select", help="run quadrant selection over a scored dataset")
    ps.add_argument("--dataset", required=True)
    ps.add_argument("--scores", required=True)
    ps.add_argument("--tau", type=float, default=3.0)
    ps.add_argument("--ratio", type=float, default=1.0)
    ps.add_argument("--dimension", default="overall", choices=["knowledge", "reasoning", "overall"])
    ps.add_argument("--out", required=True, help="manifest output path")
    ps.add_argument("--out-subset", default=None, help="selected-samples output path")

    pf = sub.add_parser("flops", help="estimate training / inference / LoRA FLOPs")
    pf.add_argument("--formula", default="train", choices=["train", "infer", "lora"])
    pf.add_argument("--layers", type=int, required=True)
    pf.add_argument("--hidden", type=int, required=True)
    pf.add_argument("--tokens", type=int, required=True)
    pf.add_argument("--samples", type=int, required=True)
    pf.add_argument("--epochs", type=int, default=1)
    pf.add_argument("--lora-rank", type=int, default=None)
    pf.add_argument("--adapted-matrices", type=int, default=None)
    pf.add_argument("--out", default=None)

    pm = sub.add_parser("simulate", help="paired quadrant-vs-random subset comparison")
    pm.add_argument("--task", default="binary-classification", choices=["regression", "binary-classification"])
    pm.add_argument("--n-train", type=int, default=2000)
    pm.add_argument("--n-val", type=int, default=200)
    pm.add_argument("--dim", type=int, default=10)
    pm.add_argument("--noise-low", type=float, default=0.0)
    pm.add_argument("--noise-high", type=float, default=1.0)
    pm.add_argument("--ratios", default="0.1", help="comma-separated keeping ratios")
    pm.add_argument("--seeds", type=int, default=20, help="number of paired seeds")
    pm.add_argument("--tau", type=float, default=3.0)
    pm.add_argument("--epochs", type=int, default=3)
    pm.add_argument("--lr", type=float, default=0.05)
    pm.add_argument("--probe-lr", type=float, default=0.01)
    pm.add_argument("--k", type=int, default=100)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--out", required=True)

    pv = sub.add_parser("validate", help="check score-table coverage of a dataset")
    pv.add_argument("--dataset", required=True)
    pv.add_argument("--scores", required=True)
    return p


def _cmd_influence(args) -> int:
    dataset = dio.load_dataset(args.dataset)
    pools = [dio.load_dataset(path).samples for path in args.val]
    checkpoints = load_checkpoints(args.checkpoints)
    dim = checkpoints[0].params.size
    if args.model == "mlp":
        feature_dim = (dim - 2 * args.hidden - 1) // args.hidden
        model = TanhNetModel(feature_dim, hidden=args.hidden)
        if model.param_dim != dim:
            raise dio.SchemaError(
                f"checkpoint dim {dim} does not match an mlp with hidden={args.hidden}"
            )
    else:
        model = make_model(args.model, dim)
    if all(args.k > len(pool) for pool in pools):
        print(
            f"warning: k={args.k} exceeds every pool size; using whole pools",
            file=sys.stderr,
        )
    val = sample_validation(pools, k=args.k, seed=args.seed)
    scores = score_dataset_influence(
        model, checkpoints, dataset, val, workers=args.workers
    )
    merged = dio.load_scores(args.scores) if args.scores else None
    with open(args.out, "w", encoding="utf-8") as f:
        for sample_id, influence in scores.items():
            rec: dict = {"id": sample_id}
            if merged is not None:
                entry = merged[sample_id]
                rec.update(
                    knowledge=entry.difficulty.knowledge,
                    reasoning=entry.difficulty.reasoning,
                    overall=entry.difficulty.overall,
                )
            rec["influence"] = influence
            f.write(json.dumps(rec) + "\n")
    return EXIT_OK


def _cmd_select(args) -> int:
    dataset = dio.load_dataset(args.dataset)
    table = dio.load_scores(args.scores)
    config = SelectionConfig(tau=args.tau, ratio=args.ratio, dimension=args.dimension)
    manifest = select(dataset, table, config)
    write_manifest(manifest, args.out)
    if args.out_subset:
        write_subset(dataset, manifest, args.out_subset)
    if manifest.metadata["empty_selection_warning"]:
        print("warning: ratio too small, selection is empty", file=sys.stderr)
    return EXIT_OK


def _cmd_flops(args) -> int:
    shape = fl.ModelShape(
        layers=args.layers,
        hidden=args.hidden,
        tokens_per_sample=args.tokens,
        num_samples=args.samples,
        epochs=args.epochs,
        lora_rank=args.lora_rank,
        adapted_matrices=args.adapted_matrices,
    )
    formula = {"train": fl.flops_train, "infer": fl.flops_infer, "lora": fl.flops_lora}
    value = formula[args.formula](shape)
    out = {
        "formula": args.formula,
        "inputs": {
            "layers": args.layers,
            "hidden": args.hidden,
            "tokens": args.tokens,
            "samples": args.samples,
            "epochs": args.epochs,
            "lora_rank": args.lora_rank,
            "adapted_matrices": args.adapted_matrices,
        },
        "flops": value,
        "flops_1e14": fl.to_1e14(value),
    }
    text = json.dumps(out) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = SyntheticSpec(
        task=args.task,
        n_train=args.n_train,
        n_val=args.n_val,
        feature_dim=args.dim,
        noise_low=args.noise_low,
        noise_high=args.noise_high,
        seed=args.seed,
    )
    ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    report = compare_selection(
        spec,
        ratios=ratios,
        n_seeds=args.seeds,
        tau=args.tau,
        epochs=args.epochs,
        lr=args.lr,
        probe_lr=args.probe_lr,
        k_val=args.k,
    )
    write_report(report, args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    dataset = dio.load_dataset(args.dataset)
    table = dio.load_scores(args.scores)
    report = dio.validate_scores(table, dataset)
    print(
        json.dumps(
            {
                "ok": report.ok,
                "missing": report.missing,
                "orphans": report.orphans,
                "violations": report.violations,
            }
        )
    )
    return EXIT_OK if report.ok else EXIT_VALIDATION


COMMANDS = {
    "influence": _cmd_influence,
    "select": _cmd_select,
    "flops": _cmd_flops,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, OSError) as exc:
        _report_error(args, exc, "io")
        return EXIT_IO
    except (dio.SchemaError, ValueError) as exc:
        _report_error(args, exc, "validation")
        return EXIT_VALIDATION


def _report_error(args, exc: Exception, kind: str) -> None:
    print(f"error: {exc}", file=sys.stderr)
    if getattr(args, "json_errors", False):
        print(json.dumps({"error": str(exc), "kind": kind}))


if __name__ == "__main__":
    sys.exit(main())
