from __future__ import annotations

import numpy as np
from scipy import stats

from flowbench.benchmarks import (
    CATALOGUE_BOUND,
    INTENDED_VARIANT_COUNTS,
    MODEL_IDS,
    build_model,
    catalogue_variants,
    manifest_lines,
    write_manifest,
)
from flowbench.eventlog import variants
from flowbench.petrinet import PlayoutConfig, enabled, playout

EXPECTED_COUNTS = {1: 120, 2: 128, 3: 128, 4: 64, 6: 27}


def test_variant_counts_match_catalogue():
    for model_id, expected in EXPECTED_COUNTS.items():
        assert len(catalogue_variants(model_id)) == expected


def test_model_5_enumerates_the_literal_structure():
    # Two free parallel branches of five interleave in C(10,5) ways; the
    # intended catalogue value differs and the manifest must flag it.
    assert len(catalogue_variants(5)) == 252
    assert INTENDED_VARIANT_COUNTS[5] == 126
    line = [l for l in manifest_lines() if l.startswith("5\t")][0]
    assert "MISMATCH" in line
    for model_id in EXPECTED_COUNTS:
        line = [l for l in manifest_lines() if l.startswith(f"{model_id}\t")][0]
        assert line.endswith("ok")


def test_manifest_file(tmp_path):
    write_manifest(tmp_path / "manifest.tsv")
    text = (tmp_path / "manifest.tsv").read_text()
    assert text.splitlines()[0] == "model\tenumerated\tintended\tstatus"
    assert len(text.splitlines()) == 1 + len(MODEL_IDS)


def test_model_3_last_choice_mirrors_first():
    for v in catalogue_variants(3):
        assert len(v) == 8
        assert (v[7] == "M3_A8a") == (v[0] == "M3_A1a")


def test_model_1_initially_enables_only_the_and_split():
    net = build_model(1)
    assert enabled(net, net.initial_marking) == {"split"}
    assert net.label("split") is None


def test_model_1_traces_are_permutations():
    net = build_model(1)
    labels = set(net.activity_labels())
    log = playout(net, PlayoutConfig(n_traces=50, seed=3))
    for trace in log:
        assert sorted(trace) == sorted(labels)


def test_model_2_traces_follow_the_xor_chain():
    log = playout(build_model(2), PlayoutConfig(n_traces=1000, seed=11))
    for trace in log:
        assert len(trace) == 7
        for k, activity in enumerate(trace, start=1):
            assert activity in (f"M2_A{k}a", f"M2_A{k}b")


def test_model_4_block_behaviours():
    allowed = {("a",), ("b",), ("a", "b"), ("b", "a")}
    for v in catalogue_variants(4):
        for block in ("1", "2", "3"):
            seq = tuple(a[-1] for a in v if a.startswith(f"M4_A{block}"))
            assert seq in allowed


def test_model_6_iteration_counts():
    for v in catalogue_variants(6):
        for k in ("1", "2", "3"):
            runs = sum(1 for a in v if a == f"M6_A{k}1")
            assert 1 <= runs <= CATALOGUE_BOUND[6]


def test_labels_unique_within_each_model():
    for model_id in MODEL_IDS:
        net = build_model(model_id)
        labels = net.activity_labels()
        assert len(labels) == len(set(labels))
        # every label belongs to this model's namespace
        assert all(label.startswith(f"M{model_id}_") for label in labels)


def test_playout_uniformity_models_1_to_3():
    # The play-out policy must make every variant of the choice-free models
    # equally likely; chi-square at alpha 0.01 with >= 1000 traces/variant.
    for model_id in (1, 2, 3):
        expected = EXPECTED_COUNTS[model_id]
        n = 1000 * expected
        log = playout(build_model(model_id), PlayoutConfig(n_traces=n, seed=17))
        counts = variants(log)
        assert len(counts) == expected
        _, p_value = stats.chisquare(np.array(sorted(counts.values())))
        assert p_value > 0.01, f"model {model_id}: p={p_value}"


def test_invalid_model_id():
    import pytest

    with pytest.raises(ValueError):
        build_model(7)
