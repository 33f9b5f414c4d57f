"""Command line front end: playout, split, train, simulate, evaluate, run, grid."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import benchmarks, harness
from .eventlog import build_vocabulary, prefixes, read_log, write_log
from .metrics import evaluate
from .petrinet import PlayoutConfig, load_net, playout, save_net
from .predictor import (
    PredictorConfig,
    load_predictor,
    markov_baseline,
    save_predictor,
    simulate_log,
    train,
)
from .split import (
    leave_fraction_out,
    lovocv_splits,
    validation_split,
    variant_key,
)


def _load_any_net(args):
    if args.model is not None:
        return benchmarks.build_model(args.model)
    return load_net(args.net)


def _cmd_playout(args) -> int:
    net = _load_any_net(args)
    visits = args.max_visits
    if visits is None:
        visits = harness.UNRESTRICTED_VISITS if args.model in (None, 6) else 1
    log = playout(net, PlayoutConfig(n_traces=args.n_traces, max_marking_visits=visits, seed=args.seed))
    write_log(log, args.out)
    if args.save_net:
        save_net(net, args.save_net)
    print(f"wrote {len(log)} traces to {args.out}")
    return 0


def _cmd_split(args) -> int:
    log = read_log(args.log)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.mode == "lovocv":
        parts = lovocv_splits(log)
    else:
        parts = [leave_fraction_out(log, args.fraction, args.seed)]
    lines = [f"seed\t{args.seed}", f"mode\t{args.mode}"]
    for i, part in enumerate(parts):
        tested = sorted({t for t in part.test.traces})
        lines.append(f"fold {i}\t" + "|".join(variant_key(v) for v in tested))
        if args.write_logs:
            fold_dir = out / f"fold_{i:03d}"
            fold_dir.mkdir(exist_ok=True)
            write_log(part.train, fold_dir / "train.txt")
            write_log(part.test, fold_dir / "test.txt")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(parts)} fold(s) to {out}")
    return 0


def _cmd_train(args) -> int:
    log = read_log(args.log)
    vocab = build_vocabulary(log)
    fields = json.loads(args.config) if args.config else {}
    fields.setdefault("seed", args.seed)
    if args.markov_order:
        pred = markov_baseline(log, args.markov_order)
    else:
        config = PredictorConfig(**fields)
        samples = prefixes(log, vocab, config.window)
        train_samples, val_samples = validation_split(samples, 0.2, args.seed)
        pred = train(config, train_samples, val_samples, vocab)
    save_predictor(pred, args.out)
    print(f"saved {pred.kind} checkpoint to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    pred = load_predictor(args.checkpoint)
    sim, report = simulate_log(pred, n_traces=args.n_traces, max_len=args.max_len, seed=args.seed)
    write_log(sim, args.out)
    if args.report:
        Path(args.report).write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    print(f"wrote {len(sim)} simulated traces to {args.out} "
          f"({report.truncated} truncated, {report.empty} empty)")
    return 0


def _cmd_evaluate(args) -> int:
    report = evaluate(read_log(args.sim), read_log(args.train), read_log(args.test))
    print(f"fitness,{report.fitness!r}")
    print(f"precision,{report.precision!r}")
    print(f"generalisation,{report.generalisation!r}")
    print(f"size_tr,{report.size_tr}")
    print(f"size_te,{report.size_te}")
    print(f"size_sim,{report.size_sim}")
    print(f"correction,{report.correction!r}")
    return 0


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    out = harness.run_experiment(cfg)
    print(f"experiment outputs in {out}")
    if (out / "errors.txt").exists():
        print("some folds failed; see errors.txt", file=sys.stderr)
        return 1
    return 0


def _cmd_grid(args) -> int:
    cfg = harness.load_config(args.config)
    ranking = harness.grid_search(cfg)
    for rank, (combo, score) in enumerate(ranking[: args.top], start=1):
        print(f"{rank}. score={score:.4f} {combo}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowbench",
        description="Play out process models, resample variants, train next-event "
        "predictors and score fitness/precision/generalisation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("playout", help="generate an event log from a model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=int, choices=benchmarks.MODEL_IDS)
    src.add_argument("--net", help="net JSON file")
    p.add_argument("--n-traces", type=int, default=harness.DEFAULT_N_TRACES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-visits", type=int, default=None)
    p.add_argument("--save-net", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_playout)

    p = sub.add_parser("split", help="variant-level resampling of a log")
    p.add_argument("--log", required=True)
    p.add_argument("--mode", choices=("lovocv", "leave-fraction"), default="lovocv")
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--write-logs", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a predictor on a training log")
    p.add_argument("--log", required=True)
    p.add_argument("--config", help="JSON object of predictor fields")
    p.add_argument("--markov-order", type=int, default=0,
                   help="train the Markov baseline of this order instead of the net")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("simulate", help="sample a log from a trained predictor")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n-traces", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="score a simulated log against train/test logs")
    p.add_argument("--sim", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run a full experiment from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="hyperparameter grid search from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=_cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
