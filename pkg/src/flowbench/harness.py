"""End-to-end experiment driver.

One experiment = play out a model, resample at variant level, train one
predictor per fold, simulate a log of the original size from each, and
score fitness / precision / generalisation. Everything is seeded through a
single master seed so a rerun of the same config reproduces every output
file byte for byte.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import benchmarks, metrics, predictor as predictor_mod, split as split_mod
from .eventlog import EventLog, build_vocabulary, prefixes, write_log
from .metrics import CSV_COLUMNS, MetricsReport, evaluate
from .petrinet import PetriNet, PlayoutConfig, load_net, playout, save_net
from .predictor import PredictorConfig, full_context_order, markov_baseline, simulate_log, train
from .split import partition_by_variants, validation_split, variant_key

OUTPUT_ROOT_ENV = "FLOWBENCH_OUTPUT_ROOT"

GRID_FIELD_ORDER = ("use_embedding", "n_layers", "hidden_size", "l1_l2", "dropout")

# Desk-scale defaults; the full-scale protocol (12000 traces, exhaustive
# LOVOCV) is one config edit away.
DEFAULT_N_TRACES = 2000
DEFAULT_LOVOCV_FOLDS = 8

# Play-out of the looping model is effectively unrestricted: the bound only
# exists to guarantee termination, while its variant catalogue (and fold
# enumeration) stays at the documented 1..3 iterations.
UNRESTRICTED_VISITS = 10


@dataclass(frozen=True)
class SplitSpec:
    mode: str  # "lovocv" | "lovocv-k" | "leave-fraction"
    k: int | None = None
    fraction: float | None = None
    repeats: int | None = None

    def __post_init__(self):
        if self.mode == "lovocv":
            pass
        elif self.mode == "lovocv-k":
            if not self.k or self.k < 1:
                raise ValueError("lovocv-k needs k >= 1")
        elif self.mode == "leave-fraction":
            if self.fraction is None or not 0 < self.fraction < 1:
                raise ValueError("leave-fraction needs fraction in (0, 1)")
            if not self.repeats or self.repeats < 1:
                raise ValueError("leave-fraction needs repeats >= 1")
        else:
            raise ValueError(f"unknown split mode {self.mode!r}")

    def label(self) -> str:
        if self.mode == "lovocv":
            return "lovocv"
        if self.mode == "lovocv-k":
            return f"lovocv-k{self.k}"
        return f"leave-{self.fraction}x{self.repeats}"


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str
    model: int | None = None
    net_file: str | None = None
    n_traces: int = DEFAULT_N_TRACES
    split: SplitSpec = field(default_factory=lambda: SplitSpec("lovocv-k", k=DEFAULT_LOVOCV_FOLDS))
    predictor: dict = field(default_factory=dict)
    grid: dict | None = None
    seed: int = 0
    max_marking_visits: int | None = None
    sim_max_len: int | None = None

    def __post_init__(self):
        if (self.model is None) == (self.net_file is None):
            raise ValueError("specify exactly one of model id or net_file")
        if self.model is not None and self.model not in benchmarks.MODEL_IDS:
            raise ValueError(f"model must be in {benchmarks.MODEL_IDS}")
        if self.n_traces < 1:
            raise ValueError("n_traces must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.grid is not None:
            for name, values in self.grid.items():
                if name not in GRID_FIELD_ORDER:
                    raise ValueError(f"unknown grid field {name!r}")
                bad = [v for v in values if v not in predictor_mod.GRID_DOMAINS[name]]
                if bad:
                    raise ValueError(f"grid values {bad} for {name} outside the allowed domain")

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        split_doc = doc.pop("split", None)
        spec = SplitSpec(**split_doc) if split_doc else SplitSpec("lovocv-k", k=DEFAULT_LOVOCV_FOLDS)
        return ExperimentConfig(split=spec, **doc)

    def to_dict(self) -> dict:
        return {
            "out_dir": self.out_dir,
            "model": self.model,
            "net_file": self.net_file,
            "n_traces": self.n_traces,
            "split": {k: v for k, v in self.split.__dict__.items() if v is not None},
            "predictor": dict(self.predictor),
            "grid": self.grid,
            "seed": self.seed,
            "max_marking_visits": self.max_marking_visits,
            "sim_max_len": self.sim_max_len,
        }


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class FoldRow:
    model: str
    setting: str
    fold: int
    test_variants: str
    report: MetricsReport


@dataclass(frozen=True)
class AggregateRow:
    model: str
    setting: str
    folds: int
    mean_fitness: float
    std_fitness: float
    mean_precision: float
    std_precision: float
    mean_generalisation: float
    std_generalisation: float


def derive_seed(master: int, *key: int) -> int:
    """Stable child seed for one purpose; SeedSequence mixes platform-independently."""
    return int(np.random.SeedSequence([master, *key]).generate_state(1)[0])


def resolve_out_dir(out_dir: str) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    path = Path(out_dir)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _resolve_net(cfg: ExperimentConfig) -> tuple[PetriNet, str]:
    if cfg.model is not None:
        return benchmarks.build_model(cfg.model), f"model{cfg.model}"
    return load_net(cfg.net_file), Path(cfg.net_file).stem


def _playout_visits(cfg: ExperimentConfig) -> int:
    if cfg.max_marking_visits is not None:
        return cfg.max_marking_visits
    if cfg.model is not None and cfg.model != 6:
        return 1
    return UNRESTRICTED_VISITS


def _fold_candidates(cfg: ExperimentConfig, log: EventLog) -> list:
    """Variants eligible as test folds, in lexicographic order.

    The looping model's analysis is restricted to its bounded catalogue;
    traces outside it always stay on the training side.
    """
    observed = sorted(split_mod.variants(log))
    if cfg.model == 6:
        catalogue = benchmarks.catalogue_variants(6)
        return [v for v in observed if v in catalogue]
    return observed


def _predictor_config(cfg: ExperimentConfig, log: EventLog, fold_seed: int) -> PredictorConfig:
    fields = dict(cfg.predictor)
    if "window" not in fields and cfg.model == 3:
        # The long-term dependency spans the whole trace: the window must
        # reach back to the first event, so use max trace length - 1.
        fields["window"] = max(len(t) for t in log.traces) - 1
    fields["seed"] = fold_seed
    return PredictorConfig(**fields)


def _sim_max_len(cfg: ExperimentConfig, train_log: EventLog) -> int:
    if cfg.sim_max_len is not None:
        return cfg.sim_max_len
    if cfg.model == 6:
        return 100
    return 2 * max(len(t) for t in train_log.traces)


def _setting_label(cfg: ExperimentConfig, pred_fields: dict) -> str:
    base = PredictorConfig(**{k: v for k, v in pred_fields.items() if k != "seed"})
    pred = (
        f"emb{int(base.use_embedding)}-L{base.n_layers}-h{base.hidden_size}"
        f"-r{base.l1_l2}-d{base.dropout}"
    )
    return f"{cfg.split.label()};{pred}"


def _select_folds(cfg: ExperimentConfig, candidates: list) -> list[list]:
    """Test-variant sets per fold, per the configured split mode."""
    if cfg.split.mode == "lovocv":
        return [[v] for v in candidates]
    if cfg.split.mode == "lovocv-k":
        k = min(cfg.split.k, len(candidates))
        rng = np.random.default_rng(derive_seed(cfg.seed, 2))
        picked = rng.choice(len(candidates), size=k, replace=False)
        return [[candidates[i]] for i in sorted(picked)]
    folds = []
    for repeat in range(cfg.split.repeats):
        rng = np.random.default_rng(derive_seed(cfg.seed, 6, repeat))
        n = len(candidates)
        k = split_mod.round_half_up(cfg.split.fraction * n)
        if k < 1 or k >= n:
            raise ValueError(f"fraction {cfg.split.fraction} selects {k} of {n} variants")
        picked = rng.choice(n, size=k, replace=False)
        folds.append([candidates[i] for i in sorted(picked)])
    return folds


def _write_fold_csv(path: Path, rows: list[FoldRow]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            r = row.report
            writer.writerow(
                [
                    row.model,
                    row.fold,
                    row.test_variants,
                    repr(r.fitness),
                    repr(r.precision),
                    repr(r.generalisation),
                    r.size_tr,
                    r.size_te,
                    r.size_sim,
                    repr(r.correction),
                ]
            )


def aggregate(rows: Sequence[FoldRow]) -> list[AggregateRow]:
    """Mean and population standard deviation per (model, setting) group."""
    groups: dict[tuple[str, str], list[FoldRow]] = {}
    for row in rows:
        groups.setdefault((row.model, row.setting), []).append(row)
    out = []
    for (model, setting), members in sorted(groups.items()):
        fit = np.array([m.report.fitness for m in members])
        prec = np.array([m.report.precision for m in members])
        gen = np.array([m.report.generalisation for m in members])
        out.append(
            AggregateRow(
                model=model,
                setting=setting,
                folds=len(members),
                mean_fitness=float(fit.mean()),
                std_fitness=float(fit.std()),
                mean_precision=float(prec.mean()),
                std_precision=float(prec.std()),
                mean_generalisation=float(gen.mean()),
                std_generalisation=float(gen.std()),
            )
        )
    return out


def _write_aggregate_csv(path: Path, rows: list[AggregateRow]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "model", "setting", "folds",
                "mean_fitness", "std_fitness",
                "mean_precision", "std_precision",
                "mean_generalisation", "std_generalisation",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.model, row.setting, row.folds,
                    repr(row.mean_fitness), repr(row.std_fitness),
                    repr(row.mean_precision), repr(row.std_precision),
                    repr(row.mean_generalisation), repr(row.std_generalisation),
                ]
            )


def _write_table_md(path: Path, rows: list[AggregateRow]) -> None:
    lines = [
        "| Model | Prec. | Fit. | Gen. |",
        "| --- | --- | --- | --- |",
    ]
    for row in rows:
        lines.append(
            f"| {row.model} ({row.setting}) "
            f"| {row.mean_precision:.2f}±{row.std_precision:.2f} "
            f"| {row.mean_fitness:.2f}±{row.std_fitness:.2f} "
            f"| {row.mean_generalisation:.2f}±{row.std_generalisation:.2f} |"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_fold(
    cfg: ExperimentConfig,
    log: EventLog,
    test_variants: list,
    fold_index: int,
    fold_dir: Path | None,
) -> MetricsReport:
    """Train, simulate and score one fold; optionally persist its artifacts."""
    part = partition_by_variants(log, test_variants)
    vocab = build_vocabulary(part.full)
    config = _predictor_config(cfg, log, derive_seed(cfg.seed, 3, fold_index))
    samples = prefixes(part.train, vocab, config.window)
    train_samples, val_samples = validation_split(
        samples, predictor_mod.VALIDATION_FRACTION, derive_seed(cfg.seed, 4, fold_index)
    )
    pred = train(config, train_samples, val_samples, vocab)
    sim, sim_report = simulate_log(
        pred, n_traces=len(part.full), max_len=_sim_max_len(cfg, part.train),
        seed=derive_seed(cfg.seed, 5, fold_index),
    )
    report = evaluate(sim, part.train, part.test)
    if fold_dir is not None:
        fold_dir.mkdir(parents=True, exist_ok=True)
        predictor_mod.save_predictor(pred, fold_dir / "checkpoint.json")
        write_log(sim, fold_dir / "sim.txt")
        (fold_dir / "sim_report.txt").write_text(
            "\n".join(sim_report.lines()) + "\n", encoding="utf-8"
        )
        with (fold_dir / "history.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_accuracy", "learning_rate"])
            for s in pred.history:
                writer.writerow([s.epoch, repr(s.train_loss), repr(s.val_accuracy), repr(s.learning_rate)])
    return report


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Execute one configuration end to end; returns the output directory.

    Fold failures are recorded in errors.txt and skipped; completed folds
    still produce rows and aggregates.
    """
    out = resolve_out_dir(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    net, model_name = _resolve_net(cfg)
    save_net(net, out / "net.json")
    log = playout(
        net,
        PlayoutConfig(
            n_traces=cfg.n_traces,
            max_marking_visits=_playout_visits(cfg),
            seed=derive_seed(cfg.seed, 1),
        ),
    )
    write_log(log, out / "log.txt")

    candidates = _fold_candidates(cfg, log)
    folds = _select_folds(cfg, candidates)
    setting = _setting_label(cfg, cfg.predictor)
    manifest = [f"seed\t{cfg.seed}", f"mode\t{cfg.split.label()}"]
    for i, fold_variants in enumerate(folds):
        manifest.append(f"fold {i}\t" + "|".join(variant_key(v) for v in fold_variants))
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")

    rows: list[FoldRow] = []
    errors: list[str] = []
    for i, fold_variants in enumerate(folds):
        fold_dir = out / "folds" / f"fold_{i:03d}"
        try:
            report = run_fold(cfg, log, fold_variants, i, fold_dir)
        except Exception:
            errors.append(f"fold {i}:\n{traceback.format_exc()}")
            continue
        rows.append(
            FoldRow(
                model=model_name,
                setting=setting,
                fold=i,
                test_variants="|".join(variant_key(v) for v in fold_variants),
                report=report,
            )
        )
    _write_fold_csv(out / "folds.csv", rows)
    agg = aggregate(rows)
    _write_aggregate_csv(out / "aggregate.csv", agg)
    _write_table_md(out / "table.md", agg)
    if errors:
        (out / "errors.txt").write_text("\n".join(errors) + "\n", encoding="utf-8")
    return out


def enumerate_grid(grid: dict) -> list[dict]:
    """All grid combinations in fixed field order (full grid: 180)."""
    names = [n for n in GRID_FIELD_ORDER if n in grid]
    combos = itertools.product(*(grid[n] for n in names))
    return [dict(zip(names, combo)) for combo in combos]


def grid_search(cfg: ExperimentConfig) -> list[tuple[dict, float]]:
    """Run every grid configuration and rank by the mean of the three metrics.

    Each configuration runs as its own experiment under out_dir/grid_NNN.
    Failed configurations are recorded and excluded from the ranking. Ties
    rank lexicographically by configuration values.
    """
    if not cfg.grid:
        raise ValueError("config has no grid")
    out = resolve_out_dir(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    combos = enumerate_grid(cfg.grid)
    scored: list[tuple[dict, float]] = []
    errors: list[str] = []
    for i, combo in enumerate(combos):
        sub = ExperimentConfig(
            out_dir=str(Path(cfg.out_dir) / f"grid_{i:03d}"),
            model=cfg.model,
            net_file=cfg.net_file,
            n_traces=cfg.n_traces,
            split=cfg.split,
            predictor={**cfg.predictor, **combo},
            seed=cfg.seed,
            max_marking_visits=cfg.max_marking_visits,
            sim_max_len=cfg.sim_max_len,
        )
        try:
            sub_dir = run_experiment(sub)
            agg = aggregate_from_csv(sub_dir / "folds.csv")
            if not agg:
                raise RuntimeError("no completed folds")
            row = agg[0]
            score = (row.mean_fitness + row.mean_precision + row.mean_generalisation) / 3.0
        except Exception:
            errors.append(f"grid_{i:03d} {combo}:\n{traceback.format_exc()}")
            continue
        scored.append((combo, score))
    scored.sort(key=lambda item: (-item[1], tuple(item[0][n] for n in sorted(item[0]))))
    with (out / "grid.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "score", *GRID_FIELD_ORDER])
        for rank, (combo, score) in enumerate(scored, start=1):
            writer.writerow(
                [rank, repr(score), *(combo.get(n, "") for n in GRID_FIELD_ORDER)]
            )
    if errors:
        (out / "grid_errors.txt").write_text("\n".join(errors) + "\n", encoding="utf-8")
    return scored


def aggregate_from_csv(path: Path) -> list[AggregateRow]:
    """Rebuild aggregate rows from a folds.csv file."""
    rows: list[FoldRow] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                FoldRow(
                    model=rec["model"],
                    setting="",
                    fold=int(rec["fold"]),
                    test_variants=rec["test_variants"],
                    report=MetricsReport(
                        fitness=float(rec["fitness"]),
                        precision=float(rec["precision"]),
                        generalisation=float(rec["generalisation"]),
                        size_tr=int(rec["size_tr"]),
                        size_te=int(rec["size_te"]),
                        size_sim=int(rec["size_sim"]),
                        correction=float(rec["correction"]),
                    ),
                )
            )
    return aggregate(rows)


def markov_fold_report(
    log: EventLog, test_variants: list, sim_seed: int, order: int | None = None
) -> MetricsReport:
    """Score a memorizing Markov baseline on one fold of a log.

    Trains on the fold's training side at full-context order (unless given),
    simulates |Tr+Te| traces and evaluates; a pipeline check that needs no
    network training.
    """
    part = partition_by_variants(log, test_variants)
    k = order if order is not None else full_context_order(part.train)
    baseline = markov_baseline(part.train, k)
    max_len = 2 * max(len(t) for t in part.train.traces)
    sim, _ = simulate_log(baseline, n_traces=len(part.full), max_len=max_len, seed=sim_seed)
    return evaluate(sim, part.train, part.test)
