from __future__ import annotations

import numpy as np
import pytest

from flowbench.eventlog import write_log
from flowbench.petrinet import (
    EnumerationBudgetError,
    NotEnabledError,
    PetriNet,
    PlayoutConfig,
    PlayoutDeadlockError,
    Transition,
    enabled,
    enumerate_variants,
    fire,
    load_net,
    playout,
    save_net,
)


def linear_net() -> PetriNet:
    # p1 -> t1 -> p2
    return PetriNet(
        places=["p1", "p2"],
        transitions=[("t1", "A")],
        arcs=[("p1", "t1"), ("t1", "p2")],
        initial_marking={"p1": 1},
        final_marking={"p2": 1},
    )


def sequence_net() -> PetriNet:
    # single sequence <A, B>
    return PetriNet(
        places=["p1", "p2", "p3"],
        transitions=[("t1", "A"), ("t2", "B")],
        arcs=[("p1", "t1"), ("t1", "p2"), ("p2", "t2"), ("t2", "p3")],
        initial_marking={"p1": 1},
        final_marking={"p3": 1},
    )


def join_net() -> PetriNet:
    # p1, p2 -> t -> p3
    return PetriNet(
        places=["p1", "p2", "p3"],
        transitions=[("t", "J")],
        arcs=[("p1", "t"), ("p2", "t"), ("t", "p3")],
        initial_marking={"p1": 1, "p2": 1},
        final_marking={"p3": 1},
    )


def test_enabled_single_transition():
    net = linear_net()
    assert enabled(net, {"p1": 1}) == {"t1"}


def test_enabled_empty_when_no_input_tokens():
    net = linear_net()
    assert enabled(net, {"p2": 1}) == set()


def test_fire_moves_token():
    net = linear_net()
    assert fire(net, {"p1": 1}, "t1") == {"p2": 1}


def test_fire_synchronizing_join():
    net = join_net()
    assert fire(net, {"p1": 1, "p2": 1}, "t") == {"p3": 1}


def test_fire_disabled_transition_rejected():
    net = linear_net()
    with pytest.raises(NotEnabledError):
        fire(net, {"p2": 1}, "t1")


def test_fire_join_needs_both_tokens():
    net = join_net()
    with pytest.raises(NotEnabledError):
        fire(net, {"p1": 1}, "t")


def test_fire_preserves_token_count_for_balanced_transitions():
    net = sequence_net()
    m = {"p1": 1}
    for tid in ("t1", "t2"):
        assert len(net.inputs(tid)) == len(net.outputs(tid))
        before = sum(m.values())
        m = fire(net, m, tid)
        assert sum(m.values()) == before


def test_marking_with_unknown_place_rejected():
    with pytest.raises(ValueError):
        enabled(linear_net(), {"nope": 1})


def test_playout_single_sequence_net():
    log = playout(sequence_net(), PlayoutConfig(n_traces=5, seed=0))
    assert log.traces == (("A", "B"),) * 5


def test_playout_deterministic_byte_level(tmp_path):
    from flowbench.benchmarks import build_model

    net = build_model(4)
    cfg = PlayoutConfig(n_traces=200, max_marking_visits=1, seed=123)
    write_log(playout(net, cfg), tmp_path / "a.txt")
    write_log(playout(net, cfg), tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_playout_traces_are_enumerable_variants():
    from flowbench.benchmarks import build_model

    net = build_model(6)
    catalogue = enumerate_variants(net, max_marking_visits=6)
    log = playout(net, PlayoutConfig(n_traces=300, max_marking_visits=6, seed=9))
    for trace in log:
        assert trace in catalogue


def test_playout_respects_visit_bound():
    from flowbench.benchmarks import build_model

    # Each loop body runs at most max_marking_visits times, so the longest
    # possible trace has 3 loops * bound * 2 activities.
    net = build_model(6)
    bound = 2
    log = playout(net, PlayoutConfig(n_traces=400, max_marking_visits=bound, seed=5))
    assert max(len(t) for t in log) <= 3 * bound * 2
    assert min(len(t) for t in log) >= 6


def test_playout_deadlock_error():
    # Final marking is unreachable: every run ends stuck at p2.
    net = PetriNet(
        places=["p1", "p2", "p3"],
        transitions=[("t1", "A")],
        arcs=[("p1", "t1"), ("t1", "p2")],
        initial_marking={"p1": 1},
        final_marking={"p3": 1},
    )
    with pytest.raises(PlayoutDeadlockError):
        playout(net, PlayoutConfig(n_traces=1, seed=0))


def test_enumerate_variants_budget_guard():
    from flowbench.benchmarks import build_model

    with pytest.raises(EnumerationBudgetError):
        enumerate_variants(build_model(5), max_marking_visits=1, max_nodes=10)


def test_enumerate_single_sequence():
    assert enumerate_variants(sequence_net(), 1) == {("A", "B")}


def test_net_validation_errors():
    with pytest.raises(ValueError):
        PetriNet(["p1"], [("t1", "A")], [("p1", "t9")], {"p1": 1}, {"p1": 1})
    with pytest.raises(ValueError):
        PetriNet(["p1"], [("t1", "A")], [("p1", "t1")], {"zz": 1}, {"p1": 1})
    with pytest.raises(ValueError):
        # silent-only net
        PetriNet(["p1", "p2"], [("t1", None)], [("p1", "t1"), ("t1", "p2")], {"p1": 1}, {"p2": 1})
    with pytest.raises(ValueError):
        # place-to-place arc
        PetriNet(["p1", "p2"], [("t1", "A")], [("p1", "p2")], {"p1": 1}, {"p2": 1})


def test_net_serialization_round_trip(tmp_path):
    from flowbench.benchmarks import build_model

    for model_id in (1, 3, 6):
        net = build_model(model_id)
        path = tmp_path / f"m{model_id}.json"
        save_net(net, path)
        loaded = load_net(path)
        assert loaded.places == net.places
        assert loaded.transitions == net.transitions
        assert loaded.arcs == net.arcs
        assert loaded.initial_marking == net.initial_marking
        assert loaded.final_marking == net.final_marking


def test_net_file_has_exact_field_names(tmp_path):
    import json

    save_net(linear_net(), tmp_path / "net.json")
    doc = json.loads((tmp_path / "net.json").read_text())
    assert set(doc) == {"places", "transitions", "arcs", "initial_marking", "final_marking"}


def test_distinct_seeds_give_distinct_logs():
    from flowbench.benchmarks import build_model

    net = build_model(2)
    a = playout(net, PlayoutConfig(n_traces=50, seed=1))
    b = playout(net, PlayoutConfig(n_traces=50, seed=2))
    assert a.traces != b.traces


def test_playout_config_validation():
    with pytest.raises(ValueError):
        PlayoutConfig(n_traces=0)
    with pytest.raises(ValueError):
        PlayoutConfig(n_traces=1, max_marking_visits=0)
