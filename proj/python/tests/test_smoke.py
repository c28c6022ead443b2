import math

import numpy as np
import pytest

import fullece


def two_records():
    return np.array([[0.8, 0.2], [0.6, 0.4]]), np.array([0, 1])


def test_two_record_example():
    probs, labels = two_records()
    values = fullece.evaluate(probs, labels, num_bins=2)
    assert values["ece"] == pytest.approx(0.2, abs=1e-12)
    assert values["cw-ece"] == pytest.approx(0.2, abs=1e-12)
    assert values["full-ece"] == pytest.approx(0.4, abs=1e-12)
    per_entry = fullece.evaluate(probs, labels, num_bins=2, normalization="per-entry")
    assert per_entry["full-ece"] == pytest.approx(0.2, abs=1e-12)


def test_bin_edges():
    assert fullece.bin_index(0.0, 10) == 1
    assert fullece.bin_index(0.1, 10) == 1
    assert fullece.bin_index(0.10000001, 10) == 2
    assert fullece.bin_index(1.0, 10) == 10


def test_streaming_matches_oracle():
    probs, labels = fullece.generate("zipf", n=500, k=30, alpha=0.4, seed=3)
    for m in (1, 5, 10, 500):
        got = fullece.evaluate(probs, labels, num_bins=m)
        ref = fullece.oracle_metrics(probs, labels, m)
        for key in ("ece", "cw-ece", "full-ece"):
            assert got[key] == pytest.approx(ref[key], rel=1e-12, abs=1e-15)


def test_merge_and_classwise_reduction():
    probs, labels = fullece.generate(n=300, k=8, seed=1)
    whole = fullece.FullAccumulator(8, 10)
    whole.add_batch(probs, labels)
    a, b = fullece.FullAccumulator(8, 10), fullece.FullAccumulator(8, 10)
    a.add_batch(probs[:111], labels[:111])
    b.add_batch(probs[111:], labels[111:])
    a.merge(b)
    assert a.total_records == 300
    assert a.bins()["count"] == whole.bins()["count"]
    assert fullece.compute_full_ece(a) == pytest.approx(fullece.compute_full_ece(whole), rel=1e-12)

    cw = fullece.ClasswiseAccumulator(8, 10)
    cw.add_batch(probs, labels)
    reduced = fullece.merge_full_from_classwise(cw)
    assert reduced.bins()["count"] == whole.bins()["count"]


def test_generator_is_deterministic():
    p1, y1 = fullece.generate(n=50, k=5, seed=9)
    p2, y2 = fullece.generate(n=50, k=5, seed=9)
    assert np.array_equal(p1, p2) and np.array_equal(y1, y2)
    assert np.allclose(p1.sum(axis=1), 1.0)


def test_temperature_and_softmax():
    assert fullece.apply_temperature([0.8, 0.2], 2.0) == pytest.approx([2 / 3, 1 / 3])
    assert fullece.apply_temperature([0.25] * 4, 3.0) == pytest.approx([0.25] * 4)
    e = math.exp(2.0)
    assert fullece.softmax([2.0, 0.0]) == pytest.approx([e / (e + 1), 1 / (e + 1)])


def test_reliability_curve_aggregates_to_metric():
    probs, labels = fullece.generate(n=200, k=4, temperature=2.0, seed=2)
    full = fullece.FullAccumulator(4, 10)
    full.add_batch(probs, labels)
    curve = fullece.reliability_curve(full)
    assert len(curve["rows"]) == 10
    assert curve["value"] == fullece.compute_full_ece(full)


def test_analysis_helpers():
    assert fullece.population_rsd([1.0, 2.0, 3.0])["rsd_percent"] == pytest.approx(40.824829046386306)
    freq = fullece.token_frequency(np.array([0, 0, 1]), 4)
    assert freq["0"] == 0.5 and freq["1-10"] == 0.5
    probs, labels = fullece.generate("zipf", n=200, k=50, seed=4)
    rep = fullece.stability(probs, labels)
    assert set(rep) == {"cw-ece", "full-ece"}
    assert rep["full-ece"]["bins"] == [5, 10, 20, 50, 100, 200, 500]


def test_errors():
    with pytest.raises(fullece.ShapeError):
        fullece.FullAccumulator(3, 10).add([0.5, 0.5], 0)
    with pytest.raises(fullece.DomainError):
        fullece.FullAccumulator(2, 10).add([0.9, 0.5], 0)
    with pytest.raises(fullece.EmptyAccumulatorError):
        fullece.compute_ece(fullece.ConfidenceAccumulator(10))
    with pytest.raises(fullece.BudgetError):
        fullece.ClasswiseAccumulator(1000, 500, cell_budget=1000)
    with pytest.raises(fullece.Error):
        fullece.token_frequency(np.array([5]), 4)
