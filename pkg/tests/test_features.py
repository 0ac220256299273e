import math
import random
from dataclasses import replace

import pytest

from fldeep.bundle import EpochRecord, LayerWeightStats
from fldeep.errors import EmptyTrace
from fldeep.features import (
    N_FEATURES,
    OPERATOR_NAMES,
    TRACE_NAMES,
    extract_features,
    features_from_trace,
    trace_stats,
)
from oracles import stats_oracle


def test_frozen_reference_values():
    got = trace_stats([1.0, 2.0, 3.0, 4.0])
    assert got == pytest.approx(
        (1.0, 4.0, 2.5, 2.5, 1.6666666666666667, 1.2909944487358056, 0.0, 0.6454972243679028),
        abs=1e-15,
    )


def test_single_value():
    assert trace_stats([7.5]) == (7.5, 7.5, 7.5, 7.5, 0.0, 0.0, 0.0, 0.0)


def test_two_values():
    got = trace_stats([1.0, 3.0])
    assert got.var == pytest.approx(2.0)
    assert got.skew == 0.0
    assert got.median == 2.0


def test_constant_input_has_zero_skew():
    assert trace_stats([4.0] * 9).skew == 0.0


def test_empty_input_rejected():
    with pytest.raises(EmptyTrace):
        trace_stats([])


def test_against_independent_oracle():
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(1, 60)
        xs = [rng.uniform(-50, 50) for _ in range(n)]
        got = trace_stats(xs)
        want = stats_oracle(xs)
        for g, w in zip(got, want):
            scale = max(abs(g), abs(w), 1e-12)
            worst = max(worst, abs(g - w) / scale)
    assert worst <= 1e-9


def test_shift_invariance():
    rng = random.Random(7)
    for _ in range(50):
        xs = [rng.uniform(-5, 5) for _ in range(rng.randint(3, 30))]
        base = trace_stats(xs)
        shifted = trace_stats([x + 13.5 for x in xs])
        assert shifted.var == pytest.approx(base.var, rel=1e-8, abs=1e-10)
        assert shifted.std == pytest.approx(base.std, rel=1e-8, abs=1e-10)
        assert shifted.sem == pytest.approx(base.sem, rel=1e-8, abs=1e-10)
        assert shifted.skew == pytest.approx(base.skew, rel=1e-6, abs=1e-8)
        assert shifted.mean == pytest.approx(base.mean + 13.5, rel=1e-9)


def test_scale_invariance():
    rng = random.Random(8)
    for _ in range(50):
        xs = [rng.uniform(-5, 5) for _ in range(rng.randint(3, 30))]
        a = rng.uniform(0.1, 9.0)
        base = trace_stats(xs)
        scaled = trace_stats([a * x for x in xs])
        assert scaled.mean == pytest.approx(a * base.mean, rel=1e-9, abs=1e-12)
        assert scaled.var == pytest.approx(a * a * base.var, rel=1e-8)
        assert scaled.std == pytest.approx(a * base.std, rel=1e-9)
        assert scaled.sem == pytest.approx(a * base.sem, rel=1e-9)
        assert scaled.skew == pytest.approx(base.skew, rel=1e-6, abs=1e-8)
        flipped = trace_stats([-x for x in xs])
        assert flipped.skew == pytest.approx(-base.skew, rel=1e-6, abs=1e-8)


# --- vector layout ----------------------------------------------------------


def record(i, loss, acc, vl=None, va=None, w=None):
    layers = ()
    if w is not None:
        layers = (LayerWeightStats(name="d0", weight_mean_abs=w, weight_std=0.1, bias_mean_abs=0.01),)
    return EpochRecord(epoch=i, loss=loss, accuracy=acc, val_loss=vl, val_accuracy=va, layers=layers)


def test_vector_layout_and_blocks(clean_mlp):
    fv = extract_features(clean_mlp)
    assert len(fv.values) == N_FEATURES == 40
    assert fv.absent_traces == ()
    losses = [rec.loss for rec in clean_mlp.trace]
    assert fv.block("loss") == trace_stats(losses)
    assert fv.finite_prefix_len == len(clean_mlp.trace)
    assert len(OPERATOR_NAMES) == 8 and len(TRACE_NAMES) == 5


def test_absent_traces_become_zero_blocks():
    trace = [record(i, 1.0 - 0.1 * i, 0.5 + 0.05 * i) for i in range(5)]
    fv = features_from_trace(trace)
    assert set(fv.absent_traces) == {"val_loss", "val_accuracy", "weight_mean_abs"}
    for name in fv.absent_traces:
        assert fv.block(name) == (0.0,) * 8
    assert fv.block("loss").max == 1.0


def test_common_finite_prefix():
    trace = [record(i, 2.0 - 0.2 * i, 0.5, vl=2.1 - 0.2 * i, va=0.4, w=0.3) for i in range(8)]
    trace[5] = replace(trace[5], loss=math.nan)
    fv = features_from_trace(trace)
    assert fv.finite_prefix_len == 5
    # every block is computed over the same 5 epochs
    assert fv.block("val_loss") == trace_stats([2.1 - 0.2 * i for i in range(5)])


def test_all_traces_empty_rejected():
    trace = [record(0, math.nan, math.nan)]
    with pytest.raises(EmptyTrace):
        features_from_trace(trace)


def test_weight_trace_averages_layers():
    layers = (
        LayerWeightStats(name="a", weight_mean_abs=0.2, weight_std=0.1, bias_mean_abs=0.0),
        LayerWeightStats(name="b", weight_mean_abs=0.6, weight_std=0.1, bias_mean_abs=0.0),
    )
    trace = [EpochRecord(epoch=0, loss=1.0, accuracy=0.5, layers=layers)]
    fv = features_from_trace(trace)
    assert fv.block("weight_mean_abs").mean == pytest.approx(0.4)
