"""Labeled place/transition nets with bounded play-out.

Transitions carry an activity label or ``None`` (silent, routing only).
Play-out fires uniformly among the enabled transitions that would not push
any marking past the per-run visit bound; silent firings are omitted from
the recorded trace. The same bound drives the exhaustive depth-first
enumeration of reachable trace variants, which serves as the ground-truth
variant catalogue for a model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .eventlog import EventLog, Variant

Marking = dict[str, int]

# A single play-out run is retried this many times when the visit bound
# corners it in a dead end before the final marking.
DEADLOCK_RETRIES = 100
# Hard cap on firings per run; only reachable when a net pumps tokens
# without ever repeating a marking.
MAX_RUN_STEPS = 100_000
DEFAULT_ENUMERATION_BUDGET = 1_000_000


class NotEnabledError(ValueError):
    """Raised when firing a transition that is not enabled."""


class PlayoutDeadlockError(RuntimeError):
    """Raised when a run cannot reach the final marking within the retry budget."""


class EnumerationBudgetError(RuntimeError):
    """Raised when variant enumeration exceeds its node budget."""


@dataclass(frozen=True)
class Transition:
    tid: str
    label: str | None  # None = silent


@dataclass(frozen=True)
class PlayoutConfig:
    n_traces: int
    max_marking_visits: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_traces < 1:
            raise ValueError("n_traces must be >= 1")
        if self.max_marking_visits < 1:
            raise ValueError("max_marking_visits must be >= 1")


class PetriNet:
    """Validated net: places, labeled transitions, arcs, initial/final markings."""

    def __init__(
        self,
        places: Iterable[str],
        transitions: Iterable[Transition | tuple[str, str | None]],
        arcs: Iterable[tuple[str, str]],
        initial_marking: Mapping[str, int],
        final_marking: Mapping[str, int],
    ):
        self.places: tuple[str, ...] = tuple(places)
        self.transitions: tuple[Transition, ...] = tuple(
            t if isinstance(t, Transition) else Transition(*t) for t in transitions
        )
        self.arcs: tuple[tuple[str, str], ...] = tuple((s, t) for s, t in arcs)
        self.initial_marking: Marking = {p: int(c) for p, c in initial_marking.items() if c}
        self.final_marking: Marking = {p: int(c) for p, c in final_marking.items() if c}

        place_set = set(self.places)
        tid_set = {t.tid for t in self.transitions}
        if len(place_set) != len(self.places):
            raise ValueError("duplicate place identifiers")
        if len(tid_set) != len(self.transitions):
            raise ValueError("duplicate transition identifiers")
        if place_set & tid_set:
            raise ValueError("place and transition identifiers overlap")
        for src, dst in self.arcs:
            if src in place_set and dst in tid_set:
                continue
            if src in tid_set and dst in place_set:
                continue
            raise ValueError(f"arc ({src!r}, {dst!r}) does not connect a place and a transition")
        for name, marking in (("initial", self.initial_marking), ("final", self.final_marking)):
            for p, c in marking.items():
                if p not in place_set:
                    raise ValueError(f"{name} marking references unknown place {p!r}")
                if c < 0:
                    raise ValueError(f"{name} marking has negative count at {p!r}")
        if not any(t.label is not None for t in self.transitions):
            raise ValueError("net needs at least one labeled transition")

        self._pre: dict[str, tuple[str, ...]] = {t.tid: () for t in self.transitions}
        self._post: dict[str, tuple[str, ...]] = {t.tid: () for t in self.transitions}
        for src, dst in self.arcs:
            if src in place_set:
                self._pre[dst] = self._pre[dst] + (src,)
            else:
                self._post[src] = self._post[src] + (dst,)
        self._labels = {t.tid: t.label for t in self.transitions}
        self._place_order = tuple(sorted(place_set))

    def label(self, tid: str) -> str | None:
        return self._labels[tid]

    def inputs(self, tid: str) -> tuple[str, ...]:
        return self._pre[tid]

    def outputs(self, tid: str) -> tuple[str, ...]:
        return self._post[tid]

    def activity_labels(self) -> tuple[str, ...]:
        return tuple(sorted({t.label for t in self.transitions if t.label is not None}))

    def marking_key(self, m: Marking) -> tuple[int, ...]:
        """Hashable encoding of a marking in a fixed place order."""
        return tuple(m.get(p, 0) for p in self._place_order)

    def check_marking(self, m: Marking) -> None:
        unknown = set(m) - set(self.places)
        if unknown:
            raise ValueError(f"marking references unknown places {sorted(unknown)}")


def enabled(net: PetriNet, m: Marking) -> set[str]:
    """Ids of transitions whose every input place holds at least one token."""
    net.check_marking(m)
    return {t.tid for t in net.transitions if all(m.get(p, 0) >= 1 for p in net.inputs(t.tid))}


def fire(net: PetriNet, m: Marking, tid: str) -> Marking:
    """Fire ``tid``: one token off each input place, one onto each output place."""
    if tid not in net._labels:
        raise NotEnabledError(f"unknown transition {tid!r}")
    if any(m.get(p, 0) < 1 for p in net.inputs(tid)):
        raise NotEnabledError(f"transition {tid!r} is not enabled")
    out = dict(m)
    for p in net.inputs(tid):
        out[p] = out[p] - 1
        if out[p] == 0:
            del out[p]
    for p in net.outputs(tid):
        out[p] = out.get(p, 0) + 1
    return out


def _marking_equals(net: PetriNet, m: Marking, target: Marking) -> bool:
    return net.marking_key(m) == net.marking_key(target)


def _admissible(net: PetriNet, m: Marking, visits: dict, bound: int) -> list[tuple[str, Marking]]:
    """Enabled transitions whose successor marking stays within the visit bound.

    Returned in declaration order so random choice is reproducible.
    """
    options = []
    for t in net.transitions:
        if any(m.get(p, 0) < 1 for p in net.inputs(t.tid)):
            continue
        nxt = fire(net, m, t.tid)
        if visits.get(net.marking_key(nxt), 0) + 1 <= bound:
            options.append((t.tid, nxt))
    return options


class _RunView:
    """Integer-indexed view of a net for the play-out inner loop.

    Transition order matches declaration order, so runs consume the RNG
    exactly as the dict-based semantics would.
    """

    def __init__(self, net: PetriNet):
        index = {p: i for i, p in enumerate(net._place_order)}
        self.n_places = len(index)
        self.pre = [tuple(index[p] for p in net.inputs(t.tid)) for t in net.transitions]
        self.post = [tuple(index[p] for p in net.outputs(t.tid)) for t in net.transitions]
        self.labels = [t.label for t in net.transitions]
        self.initial = tuple(net.initial_marking.get(p, 0) for p in net._place_order)
        self.final = tuple(net.final_marking.get(p, 0) for p in net._place_order)

    def successor(self, m: tuple[int, ...], t: int) -> tuple[int, ...]:
        out = list(m)
        for i in self.pre[t]:
            out[i] -= 1
        for i in self.post[t]:
            out[i] += 1
        return tuple(out)


def _single_run(view: _RunView, rng: np.random.Generator, bound: int) -> tuple[str, ...] | None:
    """One random run from initial to final marking; None if it dead-ends."""
    m = view.initial
    visits = {m: 1}
    trace: list[str] = []
    n_transitions = len(view.pre)
    for _ in range(MAX_RUN_STEPS):
        if m == view.final:
            return tuple(trace)
        options = []
        for t in range(n_transitions):
            if all(m[i] >= 1 for i in view.pre[t]):
                nxt = view.successor(m, t)
                if visits.get(nxt, 0) + 1 <= bound:
                    options.append((t, nxt))
        if not options:
            return None
        t, m = options[int(rng.integers(len(options)))]
        visits[m] = visits.get(m, 0) + 1
        label = view.labels[t]
        if label is not None:
            trace.append(label)
    return None


def playout(net: PetriNet, cfg: PlayoutConfig) -> EventLog:
    """Generate ``cfg.n_traces`` random runs as an event log.

    Each step picks uniformly among the enabled transitions whose firing
    stays within ``cfg.max_marking_visits`` repeated-marking visits for the
    current run. Runs that dead-end are retried up to DEADLOCK_RETRIES times.
    Deterministic in (net, cfg.seed).
    """
    rng = np.random.default_rng(cfg.seed)
    view = _RunView(net)
    traces: list[tuple[str, ...]] = []
    for _ in range(cfg.n_traces):
        for _attempt in range(DEADLOCK_RETRIES):
            run = _single_run(view, rng, cfg.max_marking_visits)
            if run is not None:
                traces.append(run)
                break
        else:
            raise PlayoutDeadlockError(
                f"no run reached the final marking in {DEADLOCK_RETRIES} attempts "
                f"(visit bound {cfg.max_marking_visits})"
            )
    return EventLog(traces)


def enumerate_variants(
    net: PetriNet,
    max_marking_visits: int,
    max_nodes: int = DEFAULT_ENUMERATION_BUDGET,
) -> set[Variant]:
    """Every distinct label sequence reaching the final marking under the bound.

    Depth-first exploration of the bounded firing tree; raises
    :class:`EnumerationBudgetError` after ``max_nodes`` expansions, which
    guards against nets whose markings never repeat.
    """
    if max_marking_visits < 1:
        raise ValueError("max_marking_visits must be >= 1")
    found: set[Variant] = set()
    init = dict(net.initial_marking)
    init_visits = {net.marking_key(init): 1}
    stack: list[tuple[Marking, dict, tuple[str, ...]]] = [(init, init_visits, ())]
    expanded = 0
    while stack:
        m, visits, trace = stack.pop()
        expanded += 1
        if expanded > max_nodes:
            raise EnumerationBudgetError(f"exceeded enumeration budget of {max_nodes} nodes")
        if _marking_equals(net, m, net.final_marking):
            found.add(trace)
            continue
        for tid, nxt in _admissible(net, m, visits, max_marking_visits):
            nxt_visits = dict(visits)
            key = net.marking_key(nxt)
            nxt_visits[key] = nxt_visits.get(key, 0) + 1
            label = net.label(tid)
            stack.append((nxt, nxt_visits, trace + (label,) if label is not None else trace))
    return found


def save_net(net: PetriNet, path: str | Path) -> None:
    """Serialize a net as a JSON document with explicit field names."""
    doc = {
        "places": list(net.places),
        "transitions": [[t.tid, t.label] for t in net.transitions],
        "arcs": [[s, t] for s, t in net.arcs],
        "initial_marking": dict(net.initial_marking),
        "final_marking": dict(net.final_marking),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_net(path: str | Path) -> PetriNet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return PetriNet(
        places=doc["places"],
        transitions=[(tid, label) for tid, label in doc["transitions"]],
        arcs=[(s, t) for s, t in doc["arcs"]],
        initial_marking=doc["initial_marking"],
        final_marking=doc["final_marking"],
    )
