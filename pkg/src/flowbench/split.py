"""Variant-level resampling into train/test partitions.

Holding out whole variants (rather than random traces) is what makes the
benchmark measure generalisation: the test log contains only control-flow
behaviour the predictor never saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .eventlog import EventLog, PrefixSample, Variant, variants


@dataclass(frozen=True)
class LogPartition:
    """One train/test split of a log at variant granularity."""

    train: EventLog
    test: EventLog
    full: EventLog

    def __post_init__(self):
        if len(self.train) + len(self.test) != len(self.full):
            raise ValueError("partition sizes do not add up")
        overlap = set(variants(self.train)) & set(variants(self.test))
        if overlap:
            raise ValueError(f"variants appear on both sides: {sorted(overlap)[:3]}")


def round_half_up(x: float) -> int:
    """Fractional counts round half away from zero: round(12.8) = 13, round(2.5) = 3."""
    return int(math.floor(x + 0.5))


def partition_by_variants(log: EventLog, test_variants: Iterable[Sequence[str]]) -> LogPartition:
    """Place every trace of the given variants in test, the rest in train."""
    chosen = {tuple(v) for v in test_variants}
    if not chosen:
        raise ValueError("test_variants must not be empty")
    missing = chosen - set(variants(log))
    if missing:
        raise ValueError(f"test variants not present in log: {sorted(missing)[:3]}")
    train = [t for t in log.traces if t not in chosen]
    test = [t for t in log.traces if t in chosen]
    if not train:
        raise ValueError("partition leaves the training log empty")
    return LogPartition(train=EventLog(train), test=EventLog(test), full=log)


def lovocv_splits(log: EventLog) -> list[LogPartition]:
    """One partition per variant, in lexicographic variant order.

    Partition i holds all cases of variant i in its test log.
    """
    ordered = sorted(variants(log))
    if len(ordered) < 2:
        raise ValueError("leave-one-variant-out needs at least two variants")
    return [partition_by_variants(log, [v]) for v in ordered]


def leave_fraction_out(log: EventLog, fraction: float, seed: int) -> LogPartition:
    """Hold out round(fraction * |variants|) variants, selected uniformly at random."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    ordered = sorted(variants(log))
    k = round_half_up(fraction * len(ordered))
    if k < 1 or k >= len(ordered):
        raise ValueError(
            f"fraction {fraction} selects {k} of {len(ordered)} variants; "
            "need at least one on each side"
        )
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(ordered), size=k, replace=False)
    return partition_by_variants(log, [ordered[i] for i in sorted(picked)])


def validation_split(
    samples: Sequence[PrefixSample], fraction: float, seed: int
) -> tuple[list[PrefixSample], list[PrefixSample]]:
    """Seeded uniform split of prefix samples into (train, validation).

    Both parts keep the input order; their concatenation is a permutation of
    the input multiset.
    """
    if len(samples) < 5:
        raise ValueError("need at least 5 samples to split off a validation set")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    n_val = round_half_up(fraction * len(samples))
    rng = np.random.default_rng(seed)
    val_idx = set(rng.choice(len(samples), size=n_val, replace=False).tolist())
    train = [s for i, s in enumerate(samples) if i not in val_idx]
    val = [s for i, s in enumerate(samples) if i in val_idx]
    return train, val


def variant_key(v: Variant) -> str:
    """Stable one-line rendering of a variant for manifests and CSV cells."""
    return ">".join(v)
