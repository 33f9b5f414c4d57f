"""Next-event predictors behind one interface: recurrent net and Markov baseline.

Both kinds expose ``predict_next`` (a probability vector over the vocabulary
with BOS and PAD masked out) and can drive :func:`simulate_log`, which grows
traces token by token until EOS or a length cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import neural
from .eventlog import EventLog, PrefixSample, Vocabulary
from .neural import NetworkParams, RegularizationSpec

# Hyperparameter domains of the tuning grid; PredictorConfig enforces them.
GRID_DOMAINS = {
    "use_embedding": (False, True),
    "n_layers": (1, 2),
    "hidden_size": (16, 32, 64),
    "l1_l2": (0.0, 1e-5, 1e-4, 1e-3, 1e-2),
    "dropout": (0.0, 0.2, 0.4),
}

LR_DECAY_FACTOR = 0.5
VALIDATION_FRACTION = 0.2


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class PredictorConfig:
    """Training configuration; grid-tuned fields are restricted to their domains."""

    use_embedding: bool = False
    n_layers: int = 1
    hidden_size: int = 32
    l1_l2: float = 0.0
    dropout: float = 0.0
    window: int = 10
    batch_size: int = 128
    learning_rate: float = 0.005
    lr_patience: int = 10
    stop_patience: int = 30
    max_epochs: int = 600
    seed: int = 0

    def __post_init__(self):
        for name in ("use_embedding", "n_layers", "hidden_size", "l1_l2", "dropout"):
            if getattr(self, name) not in GRID_DOMAINS[name]:
                raise ValueError(
                    f"{name}={getattr(self, name)!r} outside grid domain {GRID_DOMAINS[name]}"
                )
        for name in ("window", "batch_size", "lr_patience", "stop_patience", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_accuracy: float
    learning_rate: float


@dataclass
class MarkovTable:
    """Order-k conditional count tables with backoff to shorter contexts."""

    order: int
    tables: list[dict]  # tables[j]: context tuple of length j -> {next label: count}


@dataclass
class TrainedPredictor:
    kind: str  # "recurrent" | "markov"
    vocabulary: Vocabulary
    params: NetworkParams | MarkovTable
    config: PredictorConfig | None
    history: list[EpochStats] = field(default_factory=list)


@dataclass(frozen=True)
class SimulationReport:
    n_traces: int
    truncated: int
    empty: int = 0

    def lines(self) -> list[str]:
        return [
            f"traces\t{self.n_traces}",
            f"truncated_at_max_len\t{self.truncated}",
            f"empty\t{self.empty}",
        ]


def samples_to_arrays(samples: Sequence[PrefixSample]) -> tuple[np.ndarray, np.ndarray]:
    prefixes = np.array([s.prefix for s in samples], dtype=np.int64)
    targets = np.array([s.target for s in samples], dtype=np.int64)
    return prefixes, targets


def _validation_accuracy(
    params: NetworkParams, prefixes: np.ndarray, targets: np.ndarray
) -> float:
    probs = neural.forward(params, prefixes, mode="infer")
    return float(np.mean(np.argmax(probs, axis=1) == targets))


def train(
    config: PredictorConfig,
    train_samples: Sequence[PrefixSample],
    val_samples: Sequence[PrefixSample],
    vocab: Vocabulary,
) -> TrainedPredictor:
    """Mini-batch training with plateau decay and early stopping.

    Validation accuracy (argmax prediction equals target) is measured after
    every epoch. The learning rate is halved when it has not improved for
    ``lr_patience`` epochs, training stops after ``stop_patience`` epochs
    without improvement or at ``max_epochs``, and the parameters of the
    best-accuracy epoch are returned. Fully deterministic in
    (config, data, seed).
    """
    if not train_samples or not val_samples:
        raise ValueError("train and validation sample sets must be non-empty")
    train_x, train_y = samples_to_arrays(train_samples)
    val_x, val_y = samples_to_arrays(val_samples)
    if train_x.shape[1] != config.window:
        raise ValueError("sample window does not match config.window")

    params = neural.init_params(
        vocab_size=vocab.size,
        pad_index=vocab.pad,
        hidden_size=config.hidden_size,
        n_layers=config.n_layers,
        use_embedding=config.use_embedding,
        seed=config.seed,
    )
    reg = RegularizationSpec(l1=config.l1_l2, l2=config.l1_l2, dropout=config.dropout)
    state = neural.init_optimizer(params, config.learning_rate)
    rng = np.random.default_rng(config.seed)

    history: list[EpochStats] = []
    best_accuracy = -1.0
    best_params = params.copy()
    wait_lr = 0
    wait_stop = 0
    n = len(train_samples)

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            try:
                loss, grads = neural.loss_and_gradients(
                    params, train_x[idx], train_y[idx], reg, dropout_rng=rng
                )
            except neural.DivergenceError as exc:
                raise TrainingDivergedError(epoch, str(exc)) from exc
            state, params = neural.adam_step(state, params, grads)
            total_loss += loss * len(idx)
        accuracy = _validation_accuracy(params, val_x, val_y)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=total_loss / n,
                val_accuracy=accuracy,
                learning_rate=state.learning_rate,
            )
        )
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_params = params.copy()
            wait_lr = 0
            wait_stop = 0
        else:
            if accuracy == best_accuracy:
                # A tie refreshes the checkpoint (same accuracy, more
                # optimization behind it) but is not an improvement, so the
                # patience counters keep running.
                best_params = params.copy()
            wait_lr += 1
            wait_stop += 1
            if wait_stop >= config.stop_patience:
                break
            if wait_lr >= config.lr_patience:
                state.learning_rate *= LR_DECAY_FACTOR
                wait_lr = 0

    return TrainedPredictor(
        kind="recurrent", vocabulary=vocab, params=best_params, config=config, history=history
    )


# ---------------------------------------------------------------------------
# Markov baseline
# ---------------------------------------------------------------------------


def markov_baseline(train_log: EventLog, order: int) -> TrainedPredictor:
    """Order-k count model over label sequences, with backoff to order 0.

    Contexts are the last ``j`` tokens of BOS-prefixed traces; predictions
    fall back to the longest context with observations, down to the
    unconditional next-token distribution.
    """
    if len(train_log) == 0:
        raise ValueError("training log is empty")
    if order < 1:
        raise ValueError("order must be >= 1")
    from .eventlog import BOS, EOS, build_vocabulary

    vocab = build_vocabulary(train_log)
    tables: list[dict] = [dict() for _ in range(order + 1)]
    for trace in train_log.traces:
        tokens = (BOS,) + trace + (EOS,)
        for pos in range(1, len(tokens)):
            nxt = tokens[pos]
            for j in range(0, order + 1):
                if j > pos:
                    break
                ctx = tokens[pos - j:pos]
                slot = tables[j].setdefault(ctx, {})
                slot[nxt] = slot.get(nxt, 0) + 1
    return TrainedPredictor(
        kind="markov",
        vocabulary=vocab,
        params=MarkovTable(order=order, tables=tables),
        config=None,
        history=[],
    )


def full_context_order(log: EventLog) -> int:
    """Order long enough that every prediction conditions on the whole prefix."""
    return max((len(t) for t in log.traces), default=0) + 1


def _markov_distribution(pred: TrainedPredictor, prefix_labels: tuple[str, ...]) -> np.ndarray:
    from .eventlog import BOS

    table: MarkovTable = pred.params
    vocab = pred.vocabulary
    tokens = (BOS,) + prefix_labels
    for j in range(min(table.order, len(tokens)), -1, -1):
        ctx = tokens[len(tokens) - j:]
        counts = table.tables[j].get(ctx)
        if counts:
            out = np.zeros(vocab.size)
            for label, count in counts.items():
                out[vocab.encode(label)] = count
            return out / out.sum()
    raise RuntimeError("unreachable: order-0 table always has the empty context")


# ---------------------------------------------------------------------------
# Prediction and simulation
# ---------------------------------------------------------------------------


def _window_tokens(vocab: Vocabulary, prefix_labels: Sequence[str], window: int) -> np.ndarray:
    tokens = (vocab.bos,) + vocab.encode_trace(prefix_labels)
    seen = tokens[-window:]
    return np.array((vocab.pad,) * (window - len(seen)) + seen, dtype=np.int64)


def _mask_and_renormalize(probs: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    probs = probs.copy()
    probs[..., vocab.bos] = 0.0
    probs[..., vocab.pad] = 0.0
    return probs / probs.sum(axis=-1, keepdims=True)


def _batch_predict(pred: TrainedPredictor, prefixes: list[tuple[str, ...]]) -> np.ndarray:
    """(n, vocab) next-token distributions with BOS/PAD masked to zero."""
    vocab = pred.vocabulary
    if pred.kind == "recurrent":
        window = pred.config.window
        batch = np.stack([_window_tokens(vocab, p, window) for p in prefixes])
        probs = neural.forward(pred.params, batch, mode="infer")
        return _mask_and_renormalize(probs, vocab)
    if pred.kind == "markov":
        rows = [_markov_distribution(pred, p) for p in prefixes]
        return _mask_and_renormalize(np.stack(rows), vocab)
    raise ValueError(f"unknown predictor kind {pred.kind!r}")


def predict_next(pred: TrainedPredictor, prefix: Sequence[str]) -> np.ndarray:
    """Next-event distribution over the vocabulary given an activity prefix.

    BOS is prepended and window truncation applied internally; BOS and PAD
    receive probability zero and the rest is renormalized. Index the result
    with ``pred.vocabulary``.
    """
    return _batch_predict(pred, [tuple(prefix)])[0]


def simulate_log(
    pred: TrainedPredictor, n_traces: int, max_len: int, seed: int
) -> tuple[EventLog, SimulationReport]:
    """Autoregressively sample an event log from a predictor.

    Every trace starts from BOS and grows by sampling ``predict_next``'s
    distribution until EOS arrives or ``max_len`` activities accumulate;
    traces cut off at the cap are kept and counted in the report.
    """
    if n_traces < 1 or max_len < 1:
        raise ValueError("n_traces and max_len must be >= 1")
    rng = np.random.default_rng(seed)
    vocab = pred.vocabulary
    eos = vocab.eos
    prefixes: list[tuple[str, ...]] = [() for _ in range(n_traces)]
    done: list[tuple[int, tuple[str, ...]]] = []
    active = list(range(n_traces))
    truncated = 0
    while active:
        rows = _batch_predict(pred, [prefixes[i] for i in active])
        still = []
        for row, i in zip(rows, active):
            token = int(rng.choice(vocab.size, p=row))
            if token == eos:
                done.append((i, prefixes[i]))
                continue
            prefixes[i] = prefixes[i] + (vocab.decode(token),)
            if len(prefixes[i]) >= max_len:
                truncated += 1
                done.append((i, prefixes[i]))
            else:
                still.append(i)
        active = still
    done.sort()
    log = EventLog([trace for _, trace in done])
    empty = sum(1 for _, trace in done if not trace)
    return log, SimulationReport(n_traces=n_traces, truncated=truncated, empty=empty)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_predictor(pred: TrainedPredictor, path: str | Path) -> None:
    """Persist a predictor as a JSON checkpoint (shapes, values, vocab, config)."""
    doc: dict = {
        "kind": pred.kind,
        "vocabulary": list(pred.vocabulary.activities),
        "config": None if pred.config is None else pred.config.__dict__,
        "history": [s.__dict__ for s in pred.history],
    }
    if pred.kind == "recurrent":
        doc["params"] = {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in pred.params.items()
        }
        doc["pad_index"] = pred.params.pad_index
        doc["n_layers"] = len(pred.params.layers)
        doc["uses_embedding"] = pred.params.embedding is not None
    elif pred.kind == "markov":
        doc["order"] = pred.params.order
        doc["tables"] = [
            [[list(ctx), counts] for ctx, counts in sorted(table.items())]
            for table in pred.params.tables
        ]
    else:
        raise ValueError(f"unknown predictor kind {pred.kind!r}")
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_predictor(path: str | Path) -> TrainedPredictor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    vocab = Vocabulary(tuple(doc["vocabulary"]))
    config = None if doc["config"] is None else PredictorConfig(**doc["config"])
    history = [EpochStats(**s) for s in doc["history"]]
    if doc["kind"] == "recurrent":
        raw = {
            name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["params"].items()
        }
        layers = [
            neural.LstmLayer(wx=raw[f"l{i}.wx"], wh=raw[f"l{i}.wh"], b=raw[f"l{i}.b"])
            for i in range(doc["n_layers"])
        ]
        params = NetworkParams(
            vocab_size=vocab.size,
            pad_index=doc["pad_index"],
            embedding=raw["embedding"] if doc["uses_embedding"] else None,
            layers=layers,
            w_out=raw["w_out"],
            b_out=raw["b_out"],
        )
        return TrainedPredictor("recurrent", vocab, params, config, history)
    if doc["kind"] == "markov":
        tables = [
            {tuple(ctx): dict(counts) for ctx, counts in table}
            for table in doc["tables"]
        ]
        params = MarkovTable(order=doc["order"], tables=tables)
        return TrainedPredictor("markov", vocab, params, config, history)
    raise ValueError(f"unknown predictor kind {doc['kind']!r}")
