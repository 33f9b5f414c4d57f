"""Event logs, variants, vocabularies and prefix extraction.

An event log is an ordered multiset of traces; a trace is a sequence of
activity labels. Variants are traces compared by exact label-sequence
equality, so plain tuples serve as both trace values and variant keys.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

Trace = tuple[str, ...]
Variant = tuple[str, ...]

BOS = "<BOS>"
EOS = "<EOS>"
PAD = "<PAD>"
SPECIAL_TOKENS = (BOS, EOS, PAD)

TRACE_SEPARATOR = ";"


class LogFormatError(ValueError):
    """Raised when a log file contains a line that cannot be parsed."""


@dataclass(frozen=True)
class EventLog:
    """An ordered list of traces. Immutable; equality is trace-wise."""

    traces: tuple[Trace, ...]

    def __init__(self, traces: Iterable[Sequence[str]] = ()):
        object.__setattr__(self, "traces", tuple(tuple(t) for t in traces))

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def activity_labels(self) -> tuple[str, ...]:
        """Sorted set of labels occurring in the log."""
        labels = {a for t in self.traces for a in t}
        return tuple(sorted(labels))


def variants(log: EventLog) -> Counter:
    """Multiset of variants: variant -> number of traces with that exact sequence."""
    return Counter(log.traces)


def occ(v: Sequence[str], log: EventLog) -> int:
    """Multiplicity of variant ``v`` in ``log`` (0 if absent)."""
    key = tuple(v)
    return sum(1 for t in log.traces if t == key)


@dataclass(frozen=True)
class Vocabulary:
    """Token index map: sorted activity labels first, then BOS, EOS, PAD.

    The ordering rule makes two logs over the same label set produce
    identical vocabularies, which keeps checkpoints and simulations
    comparable across runs.
    """

    activities: tuple[str, ...]
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))
        if len(set(self.activities)) != len(self.activities):
            raise ValueError("duplicate activity labels")
        for special in SPECIAL_TOKENS:
            if special in self.activities:
                raise ValueError(f"activity label collides with special token {special!r}")
        tokens = tuple(self.activities) + SPECIAL_TOKENS
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(tokens)})

    @property
    def size(self) -> int:
        return len(self.activities) + len(SPECIAL_TOKENS)

    @property
    def n_activities(self) -> int:
        return len(self.activities)

    @property
    def bos(self) -> int:
        return self._index[BOS]

    @property
    def eos(self) -> int:
        return self._index[EOS]

    @property
    def pad(self) -> int:
        return self._index[PAD]

    def encode(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in vocabulary") from None

    def decode(self, index: int) -> str:
        tokens = tuple(self.activities) + SPECIAL_TOKENS
        if not 0 <= index < len(tokens):
            raise IndexError(f"token index {index} out of range")
        return tokens[index]

    def encode_trace(self, trace: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.encode(a) for a in trace)


def build_vocabulary(log: EventLog) -> Vocabulary:
    """Deterministic vocabulary over the log's labels (sorted) plus specials."""
    if len(log) == 0:
        raise ValueError("cannot build a vocabulary from an empty log")
    return Vocabulary(log.activity_labels())


class PrefixSample(NamedTuple):
    """One supervised example: a fixed-width token window and the next token."""

    prefix: tuple[int, ...]
    target: int


def prefixes(log: EventLog, vocab: Vocabulary, window: int) -> list[PrefixSample]:
    """All (prefix, next-event) samples of the log.

    A trace <a1..an> yields n+1 samples: <BOS> -> a1, <BOS,a1> -> a2, ...,
    <BOS,a1..an> -> EOS. Prefixes longer than ``window`` are left-truncated
    to the most recent ``window`` tokens, shorter ones left-padded with PAD.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    pad, bos, eos = vocab.pad, vocab.bos, vocab.eos
    samples: list[PrefixSample] = []
    for trace in log.traces:
        tokens = (bos,) + vocab.encode_trace(trace)
        for k in range(1, len(tokens) + 1):
            seen = tokens[:k][-window:]
            prefix = (pad,) * (window - len(seen)) + seen
            target = tokens[k] if k < len(tokens) else eos
            samples.append(PrefixSample(prefix, target))
    return samples


def read_log(path: str | Path) -> EventLog:
    """Parse a log file: one trace per line, labels separated by ';'.

    An empty line is an empty trace (produced only by degenerate simulations);
    a line with blank labels such as ``A;;B`` is malformed.
    """
    text = Path(path).read_text(encoding="utf-8")
    traces: list[tuple[str, ...]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line == "":
            traces.append(())
            continue
        labels = line.split(TRACE_SEPARATOR)
        if any(label == "" for label in labels):
            raise LogFormatError(f"{path}: line {lineno}: empty activity label")
        traces.append(tuple(labels))
    return EventLog(traces)


def write_log(log: EventLog, path: str | Path) -> None:
    """Write a log in the line-per-trace format read back by :func:`read_log`."""
    lines = [TRACE_SEPARATOR.join(trace) for trace in log.traces]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
