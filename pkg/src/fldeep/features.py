"""Statistical features summarizing a training trace.

Five per-epoch traces (loss, accuracy, val_loss, val_accuracy and the mean
absolute weight across layers) are each reduced by eight operators, giving a
fixed 40-value vector. Every trace is cut to the common finite prefix first,
so one sample count n applies to all blocks and sem = std / sqrt(n) holds
everywhere. A trace with no usable values contributes a zero block and is
flagged in the vector's provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .bundle import EpochRecord, RunBundle
from .errors import EmptyTrace

TRACE_NAMES = ("loss", "accuracy", "val_loss", "val_accuracy", "weight_mean_abs")
OPERATOR_NAMES = ("min", "max", "median", "mean", "var", "std", "skew", "sem")
LAYOUT_VERSION = "trace-stats/1"
N_FEATURES = len(TRACE_NAMES) * len(OPERATOR_NAMES)


class TraceStats(NamedTuple):
    min: float
    max: float
    median: float
    mean: float
    var: float
    std: float
    skew: float
    sem: float


def trace_stats(values: Sequence[float]) -> TraceStats:
    """Eight summary statistics of a non-empty sequence of finite floats.

    Variance is the n-1 sample variance (0 for a single value); skew uses
    population central moments and is 0 for constant input or fewer than
    three values; sem is std / sqrt(n).
    """
    n = len(values)
    if n == 0:
        raise EmptyTrace("trace_stats needs at least one value")
    xs = [float(v) for v in values]
    mean = math.fsum(xs) / n
    ordered = sorted(xs)
    if n % 2:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    if n >= 2:
        var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    else:
        var = 0.0
    std = math.sqrt(var)
    sem = std / math.sqrt(n)
    if n >= 3:
        m2 = math.fsum((x - mean) ** 2 for x in xs) / n
        m3 = math.fsum((x - mean) ** 3 for x in xs) / n
        skew = 0.0 if m2 == 0.0 else m3 / m2**1.5
    else:
        skew = 0.0
    return TraceStats(ordered[0], ordered[-1], median, mean, var, std, skew, sem)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    finite_prefix_len: int
    absent_traces: tuple[str, ...] = ()
    layout_version: str = LAYOUT_VERSION

    def __post_init__(self) -> None:
        if len(self.values) != N_FEATURES:
            raise ValueError(f"feature vector must have {N_FEATURES} values, got {len(self.values)}")

    def block(self, trace_name: str) -> TraceStats:
        i = TRACE_NAMES.index(trace_name)
        return TraceStats(*self.values[i * 8 : i * 8 + 8])


def _finite_prefix_len(values: Sequence[float | None]) -> int:
    n = 0
    for v in values:
        if v is None or not math.isfinite(v):
            break
        n += 1
    return n


def _raw_traces(trace: Sequence[EpochRecord]) -> dict[str, list[float | None]]:
    weight: list[float | None] = []
    for rec in trace:
        if rec.layers:
            weight.append(math.fsum(lw.weight_mean_abs for lw in rec.layers) / len(rec.layers))
        else:
            weight.append(None)
    return {
        "loss": [rec.loss for rec in trace],
        "accuracy": [rec.accuracy for rec in trace],
        "val_loss": [rec.val_loss for rec in trace],
        "val_accuracy": [rec.val_accuracy for rec in trace],
        "weight_mean_abs": weight,
    }


def features_from_trace(trace: Sequence[EpochRecord], source: str = "<trace>") -> FeatureVector:
    """Reduce a sequence of epoch records to the fixed 40-value layout."""
    raw = _raw_traces(trace)
    prefix_lens = {name: _finite_prefix_len(values) for name, values in raw.items()}
    usable = [n for n in prefix_lens.values() if n > 0]
    if not usable:
        raise EmptyTrace(f"{source}: no trace has a usable value")
    common = min(usable)
    values: list[float] = []
    absent: list[str] = []
    for name in TRACE_NAMES:
        if prefix_lens[name] == 0:
            values.extend([0.0] * len(OPERATOR_NAMES))
            absent.append(name)
        else:
            values.extend(trace_stats([float(v) for v in raw[name][:common]]))
    return FeatureVector(
        values=tuple(values),
        finite_prefix_len=common,
        absent_traces=tuple(absent),
    )


def extract_features(b: RunBundle) -> FeatureVector:
    """Reduce a bundle's trace to the fixed 40-value statistical layout."""
    return features_from_trace(b.trace, source=f"bundle {b.bundle_id}")
