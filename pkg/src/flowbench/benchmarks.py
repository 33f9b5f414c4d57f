"""The six synthetic benchmark process models.

Each constructor returns a workflow-style net exercising one control-flow
construct. Activity labels follow the ``M<k>_A<i>`` scheme so every model
has an unambiguous vocabulary.

Catalogue of intended variant counts:

  1. five-way parallel split            -> 5! = 120
  2. seven binary XOR splits in a row   -> 2^7 = 128
  3. eight XOR splits, the last forced
     equal to the first                 -> 2^7 = 128
  4. three IOR splits (a | b | ab | ba) -> 4^3 = 64
  5. two parallel branches of five      -> intended 126; the literal 5+5
     structure admits C(10,5) = 252 interleavings, so the enumerated count
     disagrees with the catalogue value -- the manifest flags this instead
     of papering over it
  6. three do-while loops, two-activity
     bodies, 1..3 iterations each       -> 3^3 = 27 (bounded catalogue;
     play-out itself may loop longer)
"""

from __future__ import annotations

from pathlib import Path

from .petrinet import PetriNet, Transition, enumerate_variants

MODEL_IDS = (1, 2, 3, 4, 5, 6)

INTENDED_VARIANT_COUNTS = {1: 120, 2: 128, 3: 128, 4: 64, 5: 126, 6: 27}

# Marking-visit bound under which the variant catalogue of a model is
# enumerated. A do-while body that may run at most three times revisits its
# entry marking at most three times; the acyclic models never revisit any.
CATALOGUE_BOUND = {1: 1, 2: 1, 3: 1, 4: 1, 5: 1, 6: 3}


def _check_model_id(model_id: int) -> None:
    if model_id not in MODEL_IDS:
        raise ValueError(f"model id must be one of {MODEL_IDS}, got {model_id!r}")


def _model_1() -> PetriNet:
    # AND-split into five single-activity branches, silent split/join.
    places = ["src", "snk"]
    transitions = [Transition("split", None), Transition("join", None)]
    arcs: list[tuple[str, str]] = [("src", "split")]
    for i in range(1, 6):
        places += [f"b{i}", f"c{i}"]
        transitions.append(Transition(f"a{i}", f"M1_A{i}"))
        arcs += [("split", f"b{i}"), (f"b{i}", f"a{i}"), (f"a{i}", f"c{i}"), (f"c{i}", "join")]
    arcs.append(("join", "snk"))
    return PetriNet(places, transitions, arcs, {"src": 1}, {"snk": 1})


def _xor_chain(model: int, n_splits: int) -> tuple[list, list, list]:
    places = [f"p{k}" for k in range(n_splits + 1)]
    transitions = []
    arcs = []
    for k in range(1, n_splits + 1):
        for opt in ("a", "b"):
            tid = f"x{k}{opt}"
            transitions.append(Transition(tid, f"M{model}_A{k}{opt}"))
            arcs += [(f"p{k - 1}", tid), (tid, f"p{k}")]
    return places, transitions, arcs


def _model_2() -> PetriNet:
    places, transitions, arcs = _xor_chain(2, 7)
    return PetriNet(places, transitions, arcs, {"p0": 1}, {"p7": 1})


def _model_3() -> PetriNet:
    # Seven free XOR splits plus an eighth whose branch is dictated by the
    # first: the first choice drops a token into a memory place that only the
    # matching final transition can consume.
    places = [f"p{k}" for k in range(9)] + ["mem_a", "mem_b"]
    transitions = []
    arcs = []
    for opt in ("a", "b"):
        tid = f"x1{opt}"
        transitions.append(Transition(tid, f"M3_A1{opt}"))
        arcs += [("p0", tid), (tid, "p1"), (tid, f"mem_{opt}")]
    for k in range(2, 8):
        for opt in ("a", "b"):
            tid = f"x{k}{opt}"
            transitions.append(Transition(tid, f"M3_A{k}{opt}"))
            arcs += [(f"p{k - 1}", tid), (tid, f"p{k}")]
    for opt in ("a", "b"):
        tid = f"x8{opt}"
        transitions.append(Transition(tid, f"M3_A8{opt}"))
        arcs += [("p7", tid), (f"mem_{opt}", tid), (tid, "p8")]
    return PetriNet(places, transitions, arcs, {"p0": 1}, {"p8": 1})


def _model_4() -> PetriNet:
    # Three sequential IOR splits; per split the silent mode choice admits
    # "only a", "only b", or both in parallel (either order).
    places = ["e1", "e2", "e3", "e4"]
    transitions = []
    arcs = []
    for k in range(1, 4):
        la, lb = f"M4_A{k}a", f"M4_A{k}b"
        entry, exit_ = f"e{k}", f"e{k + 1}"
        places += [f"q{k}a", f"q{k}b", f"r{k}a", f"r{k}b", f"d{k}a", f"d{k}b"]
        transitions += [
            Transition(f"pick{k}_a", None),
            Transition(f"pick{k}_b", None),
            Transition(f"pick{k}_ab", None),
            Transition(f"only{k}_a", la),
            Transition(f"only{k}_b", lb),
            Transition(f"par{k}_a", la),
            Transition(f"par{k}_b", lb),
            Transition(f"join{k}", None),
        ]
        arcs += [
            (entry, f"pick{k}_a"), (f"pick{k}_a", f"q{k}a"),
            (entry, f"pick{k}_b"), (f"pick{k}_b", f"q{k}b"),
            (entry, f"pick{k}_ab"), (f"pick{k}_ab", f"r{k}a"), (f"pick{k}_ab", f"r{k}b"),
            (f"q{k}a", f"only{k}_a"), (f"only{k}_a", exit_),
            (f"q{k}b", f"only{k}_b"), (f"only{k}_b", exit_),
            (f"r{k}a", f"par{k}_a"), (f"par{k}_a", f"d{k}a"),
            (f"r{k}b", f"par{k}_b"), (f"par{k}_b", f"d{k}b"),
            (f"d{k}a", f"join{k}"), (f"d{k}b", f"join{k}"), (f"join{k}", exit_),
        ]
    return PetriNet(places, transitions, arcs, {"e1": 1}, {"e4": 1})


def _model_5() -> PetriNet:
    # One AND-split into two sequential branches of five activities each.
    places = ["src", "snk"]
    transitions = [Transition("split", None), Transition("join", None)]
    arcs = [("src", "split")]
    for branch, prefix in (("u", "M5_A"), ("v", "M5_B")):
        places += [f"{branch}{j}" for j in range(6)]
        arcs.append(("split", f"{branch}0"))
        for j in range(1, 6):
            tid = f"{branch}_t{j}"
            transitions.append(Transition(tid, f"{prefix}{j}"))
            arcs += [(f"{branch}{j - 1}", tid), (tid, f"{branch}{j}")]
        arcs.append((f"{branch}5", "join"))
    arcs.append(("join", "snk"))
    return PetriNet(places, transitions, arcs, {"src": 1}, {"snk": 1})


def _model_6() -> PetriNet:
    # Three sequential do-while loops; each body is a two-activity sequence
    # that runs at least once, with a silent repeat/exit choice after it.
    places = ["snk"]
    transitions = []
    arcs = []
    for k in range(1, 4):
        places += [f"l{k}_in", f"l{k}_mid", f"l{k}_done"]
        nxt = f"l{k + 1}_in" if k < 3 else "snk"
        transitions += [
            Transition(f"body{k}_1", f"M6_A{k}1"),
            Transition(f"body{k}_2", f"M6_A{k}2"),
            Transition(f"repeat{k}", None),
            Transition(f"exit{k}", None),
        ]
        arcs += [
            (f"l{k}_in", f"body{k}_1"), (f"body{k}_1", f"l{k}_mid"),
            (f"l{k}_mid", f"body{k}_2"), (f"body{k}_2", f"l{k}_done"),
            (f"l{k}_done", f"repeat{k}"), (f"repeat{k}", f"l{k}_in"),
            (f"l{k}_done", f"exit{k}"), (f"exit{k}", nxt),
        ]
    return PetriNet(places, transitions, arcs, {"l1_in": 1}, {"snk": 1})


_BUILDERS = {1: _model_1, 2: _model_2, 3: _model_3, 4: _model_4, 5: _model_5, 6: _model_6}


def build_model(model_id: int) -> PetriNet:
    """Construct benchmark model 1..6."""
    _check_model_id(model_id)
    return _BUILDERS[model_id]()


def catalogue_bound(model_id: int) -> int:
    _check_model_id(model_id)
    return CATALOGUE_BOUND[model_id]


def catalogue_variants(model_id: int):
    """The model's variant catalogue under its documented visit bound."""
    return enumerate_variants(build_model(model_id), catalogue_bound(model_id))


def manifest_lines() -> list[str]:
    """Per-model enumerated vs intended variant counts, mismatches flagged."""
    lines = ["model\tenumerated\tintended\tstatus"]
    for model_id in MODEL_IDS:
        enumerated = len(catalogue_variants(model_id))
        intended = INTENDED_VARIANT_COUNTS[model_id]
        status = "ok" if enumerated == intended else "MISMATCH: enumeration is the oracle"
        lines.append(f"{model_id}\t{enumerated}\t{intended}\t{status}")
    return lines


def write_manifest(path: str | Path) -> None:
    Path(path).write_text("\n".join(manifest_lines()) + "\n", encoding="utf-8")
