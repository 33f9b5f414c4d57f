"""Variant-multiplicity fitness, precision and generalisation.

All three measures compare variant occurrence counts between a simulated
log and a reference log, capping each simulated count at the reference
count and normalizing by the reference size:

  fitness        = sum over Var(Tr)  of min(occ(v, Sim), occ(v, Tr))     / |Tr|
  precision      = sum over Var(Sim) of min(occ(v, Sim), occ(v, Tr+Te))  / |Sim|
  generalisation = sum over Var(Te)  of min(occ(v, Sim), occ(v, Te))    / |Te|

The counts are nominal, so they are only comparable when the simulated log
has as many traces as the original. When it does not, :func:`evaluate`
rescales every simulated occurrence count by (|Tr|+|Te|)/|Sim| before
taking the minimum and records the factor in the report.
"""

from __future__ import annotations

from dataclasses import dataclass

from .eventlog import EventLog, variants

CSV_COLUMNS = (
    "model",
    "fold",
    "test_variants",
    "fitness",
    "precision",
    "generalisation",
    "size_tr",
    "size_te",
    "size_sim",
    "correction",
)


@dataclass(frozen=True)
class MetricsReport:
    fitness: float
    precision: float
    generalisation: float
    size_tr: int
    size_te: int
    size_sim: int
    correction: float

    def __post_init__(self):
        for name in ("fitness", "precision", "generalisation"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {value}")


def _capped_sum(sim_counts, ref_counts, sim_scale: float) -> float:
    """Sum of min(scaled sim count, ref count) over the reference variants.

    Iterates variants in sorted order; with scale 1 the arithmetic stays in
    integers, so the result is exact and order-independent.
    """
    if sim_scale == 1.0:
        return sum(min(sim_counts.get(v, 0), c) for v, c in sorted(ref_counts.items()))
    return sum(
        min(sim_counts.get(v, 0) * sim_scale, c) for v, c in sorted(ref_counts.items())
    )


def fitness(sim: EventLog, tr: EventLog, *, sim_scale: float = 1.0) -> float:
    """Share of the training log's behaviour, by multiplicity, found in the simulation."""
    if len(tr) == 0:
        raise ValueError("training log is empty")
    return _capped_sum(variants(sim), variants(tr), sim_scale) / len(tr)


def precision(sim: EventLog, full: EventLog, *, sim_scale: float = 1.0) -> float:
    """Share of simulated behaviour that stays within the full original log."""
    if len(sim) == 0:
        raise ValueError("simulated log is empty")
    sim_counts = variants(sim)
    full_counts = variants(full)
    if sim_scale == 1.0:
        total = sum(min(c, full_counts.get(v, 0)) for v, c in sorted(sim_counts.items()))
        return total / len(sim)
    total = sum(
        min(c * sim_scale, full_counts.get(v, 0)) for v, c in sorted(sim_counts.items())
    )
    return total / (len(sim) * sim_scale)


def generalisation(sim: EventLog, te: EventLog, *, sim_scale: float = 1.0) -> float:
    """Share of held-out test behaviour, by multiplicity, reproduced in the simulation."""
    if len(te) == 0:
        raise ValueError("test log is empty")
    return _capped_sum(variants(sim), variants(te), sim_scale) / len(te)


def evaluate(sim: EventLog, tr: EventLog, te: EventLog) -> MetricsReport:
    """All three metrics for one (Sim, Tr, Te) triple, with size correction.

    When |Sim| differs from |Tr|+|Te|, simulated counts are rescaled by
    (|Tr|+|Te|)/|Sim| before capping, which keeps the metrics comparable
    across simulation sizes (doubling Sim at fixed proportions leaves every
    value unchanged).
    """
    if len(tr) == 0 or len(te) == 0 or len(sim) == 0:
        raise ValueError("evaluate needs non-empty Sim, Tr and Te")
    full = EventLog(tr.traces + te.traces)
    scale = 1.0 if len(sim) == len(full) else len(full) / len(sim)
    return MetricsReport(
        fitness=fitness(sim, tr, sim_scale=scale),
        precision=precision(sim, full, sim_scale=scale),
        generalisation=generalisation(sim, te, sim_scale=scale),
        size_tr=len(tr),
        size_te=len(te),
        size_sim=len(sim),
        correction=scale,
    )
