"""Command-line surface: solving, sampling, training, and corpus generation.

Every subcommand reads a line-delimited dataset, writes structured JSON
lines to an output file, and prints a short human-readable summary to
stdout.  Structured output is byte-reproducible for a fixed flag set and
seed.  Exit codes: 0 success, 1 usage error, 2 data validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np

from .classifier import ClassifierParams, TrainConfig, predict, train
from .core import RelaxConfig
from .data import (DatasetRecord, SynthConfig, generate_synthetic,
                   load_dataset)
from .exact import dp_map
from .metrics import evaluate, hard_mask, k_sweep
from .relax import chain_marginals, perturb_and_map_sample, tune_lambda

USAGE_ERROR = 1
DATA_ERROR = 2

ABLATIONS = ("no-continuity", "no-sparsity", "no-entities")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write_lines(path: str, lines: List[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _train_config(args) -> TrainConfig:
    ablations = set(args.ablation or [])
    return TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        temperature=args.temperature,
        edge_bonus=args.edge_bonus,
        budget_fraction=args.budget_fraction,
        seed=args.seed,
        no_continuity="no-continuity" in ablations,
        no_sparsity="no-sparsity" in ablations,
        no_entities="no-entities" in ablations,
        penalty=args.penalty,
    )


def _effective_edge(args) -> float:
    if args.ablation and "no-continuity" in args.ablation:
        return 0.0
    return args.edge_bonus


def _effective_fraction(args) -> float:
    if args.ablation and "no-sparsity" in args.ablation:
        return 1.0
    return args.budget_fraction


def _models(records: List[DatasetRecord], args):
    edge = _effective_edge(args)
    frac = _effective_fraction(args)
    return [rec.chain_model(edge, frac) for rec in records]


def _instances(records: List[DatasetRecord], what: str):
    out = []
    for i, rec in enumerate(records):
        if not rec.has_embeddings:
            raise ValueError(
                f"record {i}: {what} requires embeddings, found scores only")
        out.append(rec.instance())
    return out


def _solve_map(fn, items):
    # Per-instance work runs on a pool; results are gathered in input
    # order so the output file is deterministic.
    with ThreadPoolExecutor() as pool:
        return list(pool.map(fn, items))


def _params_to_json(params: ClassifierParams) -> str:
    return _dump({"weight": [float(x) for x in params.weight.reshape(-1)],
                  "bias": [float(x) for x in params.bias],
                  "labels": list(params.labels)})


def _params_from_file(path: str) -> ClassifierParams:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    labels = tuple(obj["labels"])
    bias = np.asarray(obj["bias"], dtype=float)
    weight = np.asarray(obj["weight"], dtype=float).reshape(len(labels), -1)
    return ClassifierParams(weight=weight, bias=bias, labels=labels)


# --- subcommand bodies -------------------------------------------------------

def _cmd_solve(args) -> int:
    records = load_dataset(args.dataset)
    models = _models(records, args)
    if args.relaxed:
        solved = _solve_map(tune_lambda, models)
        lines = [_dump({"index": i, "mask": str(sol.mask),
                        "score": sol.score, "penalty": lam, "gap": gap})
                 for i, (lam, sol, gap) in enumerate(solved)]
        scores = [sol.score for _, sol, _ in solved]
    else:
        solved = _solve_map(dp_map, models)
        lines = [_dump({"index": i, "mask": str(sol.mask), "score": sol.score})
                 for i, sol in enumerate(solved)]
        scores = [sol.score for sol in solved]
    _write_lines(args.output, lines)
    for i, sol in enumerate(solved[:args.show]):
        sol = sol[1] if args.relaxed else sol
        print(f"instance {i}: mask {sol.mask} score {sol.score:g}")
    print(f"solved {len(records)} instances "
          f"({'relaxed' if args.relaxed else 'exact'}), "
          f"mean score {np.mean(scores) if scores else 0.0:.6f} "
          f"-> {args.output}")
    return 0


def _cmd_marginals(args) -> int:
    records = load_dataset(args.dataset)
    models = _models(records, args)
    cfg = RelaxConfig(penalty=args.penalty or 0.0,
                      temperature=args.temperature, seed=args.seed)
    results = _solve_map(lambda m: chain_marginals(m, cfg), models)
    lines = [_dump({"index": i, "marginals": [float(p) for p in marg.probs],
                    "log_z": marg.logZ})
             for i, marg in enumerate(results)]
    _write_lines(args.output, lines)
    print(f"marginals for {len(records)} instances "
          f"(penalty {cfg.penalty:g}, temperature {cfg.temperature:g}) "
          f"-> {args.output}")
    return 0


def _cmd_sample(args) -> int:
    records = load_dataset(args.dataset)
    models = _models(records, args)
    cfg = RelaxConfig(penalty=args.penalty or 0.0,
                      temperature=args.temperature, seed=args.seed)
    lines = []
    for i, model in enumerate(models):
        batch = perturb_and_map_sample(model, cfg, args.n_samples,
                                       noise_scale=args.noise_scale)
        lines.append(_dump({
            "index": i,
            "empirical_freq": [float(f) for f in batch.empirical_freq],
            "n_samples": args.n_samples, "seed": batch.seed}))
    _write_lines(args.output, lines)
    print(f"{args.n_samples} samples per instance for {len(records)} "
          f"instances (seed {args.seed}) -> {args.output}")
    return 0


def _cmd_tune_lambda(args) -> int:
    records = load_dataset(args.dataset)
    models = _models(records, args)
    solved = _solve_map(tune_lambda, models)
    lines = [_dump({"index": i, "penalty": lam, "mask": str(sol.mask),
                    "score": sol.score, "gap": gap})
             for i, (lam, sol, gap) in enumerate(solved)]
    _write_lines(args.output, lines)
    gaps = [gap for _, _, gap in solved]
    zero = sum(1 for g in gaps if g == 0.0)
    print(f"tuned penalties for {len(records)} instances; "
          f"zero-gap on {zero}/{len(records)} -> {args.output}")
    return 0


def _cmd_train(args) -> int:
    records = load_dataset(args.dataset)
    insts = _instances(records, "train")
    cfg = _train_config(args)
    params, history = train(insts, cfg)
    _write_lines(args.output, [_params_to_json(params)])
    if history:
        last = history[-1]
        print(f"trained on {len(insts)} instances, {cfg.epochs} epochs: "
              f"loss {last['loss']:.6f} train micro-F1 {last['micro_f1']:.4f} "
              f"-> {args.output}")
    return 0


def _cmd_eval(args) -> int:
    records = load_dataset(args.dataset)
    insts = _instances(records, "eval")
    cfg = _train_config(args)
    params = _params_from_file(args.params)
    report = evaluate(insts, params, cfg, exclude_label=args.exclude_label)
    lines = []
    for i, inst in enumerate(insts):
        bits = hard_mask(inst, cfg)
        lines.append(_dump({"index": i,
                            "mask": "".join(str(int(b)) for b in bits),
                            "predicted": predict(inst, params, cfg,
                                                 mask=bits)}))
    lines.append(_dump({"report": report.to_dict()}))
    _write_lines(args.output, lines)
    print(report.to_text())
    print(f"evaluated {len(insts)} instances -> {args.output}")
    return 0


def _cmd_sweep_k(args) -> int:
    records = load_dataset(args.dataset)
    insts = _instances(records, "sweep-k")
    if not 0 < args.split < 1:
        raise ValueError(f"--split must lie in (0, 1), got {args.split}")
    cut = int(round(args.split * len(insts)))
    if cut < 1 or cut >= len(insts):
        raise ValueError("dataset too small for the requested split")
    cfg = _train_config(args)
    rows = k_sweep(insts[:cut], insts[cut:], args.fractions, cfg)
    _write_lines(args.output, [_dump(row) for row in rows])
    for row in rows:
        print(f"fraction {row['fraction']:.2f}: micro-F1 {row['micro_f1']:.4f} "
              f"selected {row['mean_selected_rate']:.3f} "
              f"segments {row['mean_segment_count']:.3f}")
    best = max(rows, key=lambda r: r["micro_f1"])
    print(f"best fraction {best['fraction']:.2f} "
          f"(micro-F1 {best['micro_f1']:.4f}) -> {args.output}")
    return 0


def _cmd_gen(args) -> int:
    cfg = SynthConfig(n_instances=args.n, length_range=tuple(args.length_range),
                      dim=args.dim, n_labels=args.labels,
                      cue_fraction_range=tuple(args.cue_range),
                      distractor_rate=args.distractor_rate,
                      noise_scale=args.noise_scale, seed=args.seed)
    summary = generate_synthetic(cfg, args.output)
    print(_dump(summary))
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget-fraction", type=float, default=0.6)
    common.add_argument("--edge-bonus", type=float, default=0.0)
    common.add_argument("--lambda", dest="penalty", type=float, default=None,
                        help="fixed budget penalty (default: tuned)")
    common.add_argument("--temperature", type=float, default=1.0)
    common.add_argument("--ablation", action="append", choices=ABLATIONS,
                        default=None)
    solver = common.add_mutually_exclusive_group()
    solver.add_argument("--exact", dest="relaxed", action="store_false")
    solver.add_argument("--relaxed", dest="relaxed", action="store_true")
    common.set_defaults(relaxed=False)

    parser = _Parser(prog="chainmask",
                     description="Budgeted chain-mask rationale extraction.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def add(name, fn, needs_dataset=True, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        if needs_dataset:
            p.add_argument("dataset", help="input dataset path")
        p.add_argument("--output", "-o", required=True,
                       help="structured results path")
        p.set_defaults(fn=fn)
        return p

    p = add("solve", _cmd_solve, help="MAP masks per instance")
    p.add_argument("--show", type=int, default=3,
                   help="instances echoed to stdout")

    add("marginals", _cmd_marginals, help="exact selection marginals")

    p = add("sample", _cmd_sample, help="Perturb-and-MAP mask samples")
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--noise-scale", type=float, default=1.0)

    add("tune-lambda", _cmd_tune_lambda,
        help="bisect the budget penalty per instance")

    train_opts = _Parser(add_help=False)
    train_opts.add_argument("--learning-rate", type=float, default=0.5)
    train_opts.add_argument("--epochs", type=int, default=200)

    p = sub.add_parser("train", parents=[common, train_opts],
                       help="fit the relation classifier")
    p.add_argument("dataset")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", parents=[common, train_opts],
                       help="hard-mask evaluation of a trained classifier")
    p.add_argument("dataset")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--params", required=True, help="file written by train")
    p.add_argument("--exclude-label", default=None,
                   help="no-relation label excluded from micro-F1 pools")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep-k", parents=[common, train_opts],
                       help="train/evaluate across budget fractions")
    p.add_argument("dataset")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--fractions", type=float, nargs="+",
                   default=[0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--split", type=float, default=0.8,
                   help="leading fraction of the dataset used for training")
    p.set_defaults(fn=_cmd_sweep_k)

    p = sub.add_parser("gen", parents=[common],
                       help="write a synthetic corpus")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--length-range", type=int, nargs=2, default=[12, 30])
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--labels", type=int, default=4)
    p.add_argument("--cue-range", type=float, nargs=2, default=[0.45, 0.55])
    p.add_argument("--distractor-rate", type=float, default=0.2)
    p.add_argument("--noise-scale", type=float, default=0.1)
    p.set_defaults(fn=_cmd_gen)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_ERROR
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
