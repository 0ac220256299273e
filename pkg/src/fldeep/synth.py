"""Seeded synthetic bundles, traces, and training corpora.

Everything here is deterministic given its seed. The trace generators encode
recognizable training regimes (healthy descent, oscillating or stalled loss,
early truncation, dead gradients, noisy non-convergence); the classifier
corpus samples them with labels, and the mutation harness reuses the same
generators so injected faults carry the dynamics the classifiers know.
"""

from __future__ import annotations

import math
import random
from typing import Sequence

from .bundle import (
    DatasetManifest,
    EnvManifest,
    EpochRecord,
    LayerSpec,
    LayerWeightStats,
    ModelSpec,
    RunBundle,
)
from .dynvote import DynamicFault
from .features import FeatureVector, features_from_trace
from .kg import KnowledgeGraph, assert_fault, build_kg

BASE_LOSS_FLOOR = 0.10
DECAY_TOTAL = 6.5

TRACE_KINDS = (
    "healthy",
    "lr_high",
    "lr_low",
    "insufficient",
    "bad_loss",
    "bad_act",
    "bad_opt",
)

TRACE_LABELS: dict[str, frozenset[DynamicFault]] = {
    "healthy": frozenset(),
    "lr_high": frozenset({DynamicFault.LEARNING_RATE}),
    "lr_low": frozenset({DynamicFault.LEARNING_RATE}),
    "insufficient": frozenset({DynamicFault.INSUFFICIENT_ITERATION}),
    "bad_loss": frozenset({DynamicFault.LOSS_FN}),
    "bad_act": frozenset({DynamicFault.ACTIVATION_FN}),
    "bad_opt": frozenset({DynamicFault.OPTIMIZER}),
}


def _record(
    rng: random.Random,
    epoch: int,
    loss: float,
    acc: float,
    layer_names: Sequence[str],
    weight: float,
    weight_std: float,
    val_gap: float = 0.06,
) -> EpochRecord:
    return EpochRecord(
        epoch=epoch,
        loss=loss,
        accuracy=acc,
        val_loss=loss * (1.0 + val_gap) + rng.uniform(-0.01, 0.01),
        val_accuracy=max(acc - 0.03 + rng.uniform(-0.01, 0.01), 0.0),
        layers=tuple(
            LayerWeightStats(
                name=name,
                weight_mean_abs=weight * (1.0 + 0.03 * i) + rng.uniform(-0.005, 0.005),
                weight_std=weight_std + rng.uniform(-0.003, 0.003),
                bias_mean_abs=0.05 + rng.uniform(-0.005, 0.005),
            )
            for i, name in enumerate(layer_names)
        ),
    )


def make_trace(
    kind: str, epochs: int, layer_names: Sequence[str], seed: int
) -> tuple[EpochRecord, ...]:
    """A per-epoch trace following one of the named training regimes."""
    rng = random.Random(seed)
    records: list[EpochRecord] = []
    if kind in ("healthy", "insufficient"):
        # exponential descent; "insufficient" cuts it off near the start
        span = epochs if kind == "healthy" else rng.randint(18, 26)
        keep = epochs if kind == "healthy" else rng.randint(1, 4)
        l0 = rng.uniform(2.1, 2.35)
        rate = DECAY_TOTAL / span
        for t in range(keep):
            frac = 1.0 - math.exp(-rate * t)
            loss = BASE_LOSS_FLOOR + (l0 - BASE_LOSS_FLOOR) * math.exp(-rate * t)
            loss += rng.uniform(-0.004, 0.004)
            acc = 0.25 + 0.70 * frac + rng.uniform(-0.01, 0.01)
            weight = 0.35 + 0.30 * frac
            records.append(_record(rng, t, loss, min(acc, 0.99), layer_names, weight, 0.20))
    elif kind == "lr_high":
        base = rng.uniform(2.1, 2.5)
        for t in range(epochs):
            loss = base + 0.7 * abs(math.sin(1.7 * t + rng.uniform(-0.2, 0.2))) + rng.uniform(-0.1, 0.1)
            acc = rng.uniform(0.18, 0.34)
            weight = 0.40 * (1.0 + 0.08 * t)
            records.append(_record(rng, t, loss, acc, layer_names, weight, 0.45, val_gap=0.15))
    elif kind == "lr_low":
        l0 = rng.uniform(2.15, 2.35)
        for t in range(epochs):
            loss = l0 - 0.004 * t + rng.uniform(-0.002, 0.002)
            acc = 0.25 + 0.002 * t + rng.uniform(-0.005, 0.005)
            records.append(_record(rng, t, loss, acc, layer_names, 0.35 + 0.001 * t, 0.18))
    elif kind == "bad_loss":
        plateau = rng.uniform(1.05, 1.40)
        l0 = rng.uniform(2.1, 2.3)
        for t in range(epochs):
            loss = plateau + (l0 - plateau) * math.exp(-0.9 * t) + rng.uniform(-0.03, 0.03)
            acc = 0.45 + 0.12 * math.sin(0.9 * t) + rng.uniform(-0.04, 0.04)
            records.append(_record(rng, t, loss, acc, layer_names, 0.45, 0.22, val_gap=0.20))
    elif kind == "bad_act":
        l0 = rng.uniform(2.55, 2.75)
        for t in range(epochs):
            loss = l0 + rng.uniform(-0.008, 0.008)
            acc = rng.uniform(0.15, 0.21)
            records.append(_record(rng, t, loss, acc, layer_names, 0.40, 0.01))
    elif kind == "bad_opt":
        level = rng.uniform(1.7, 2.0)
        for t in range(epochs):
            level = min(max(level + rng.uniform(-0.22, 0.25), 1.2), 2.8)
            acc = rng.uniform(0.22, 0.48)
            records.append(_record(rng, t, level, acc, layer_names, 0.42, 0.30, val_gap=0.12))
    else:
        raise ValueError(f"unknown trace kind {kind!r}")
    return tuple(records)


BUNDLE_KINDS = ("mlp", "cnn", "reg")


def make_bundle(kind: str, bundle_id: str, seed: int) -> RunBundle:
    """A clean (zero-finding) bundle of one of three model families."""
    rng = random.Random(seed)
    env = EnvManifest(
        python_version="3.10.9",
        os_family="linux",
        cpu_arch="x86_64",
        libraries={"tensorflow": "2.8.0", "numpy": "1.23.5", "keras": "2.8.0", "h5py": "3.6.0"},
    )
    if kind == "mlp":
        dataset = DatasetManifest(
            n_train=8000, n_test=2000, n_features=784, num_classes=10,
            feature_min=0.0, feature_max=1.0, normalized=True, label_encoding="onehot",
        )
        layers = (
            LayerSpec("dense_0", "dense", units=128, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("dense_1", "dense", units=64, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("dense_2", "dense", units=10, activation="softmax",
                      kernel_init="glorot_uniform", bias_init="zeros"),
        )
        model = ModelSpec(
            layers=layers, loss="categorical_crossentropy", optimizer_name="adam",
            learning_rate=0.001, metrics=("accuracy",), epochs=20, batch_size=128,
            task="multiclass-classification",
        )
    elif kind == "cnn":
        dataset = DatasetManifest(
            n_train=4000, n_test=1000, n_features=1024, num_classes=2,
            feature_min=0.0, feature_max=1.0, normalized=True, label_encoding="integer",
        )
        layers = (
            LayerSpec("conv_0", "conv", units=32, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("pool_0", "pooling"),
            LayerSpec("flatten_0", "flatten"),
            LayerSpec("dense_0", "dense", units=64, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("dense_1", "dense", units=1, activation="sigmoid",
                      kernel_init="glorot_uniform", bias_init="zeros"),
        )
        model = ModelSpec(
            layers=layers, loss="binary_crossentropy", optimizer_name="sgd",
            learning_rate=0.01, metrics=("accuracy",), epochs=16, batch_size=64,
            task="binary-classification",
        )
    elif kind == "reg":
        dataset = DatasetManifest(
            n_train=2400, n_test=600, n_features=13, num_classes=None,
            feature_min=-2.5, feature_max=2.8, normalized=True, label_encoding="continuous",
        )
        layers = (
            LayerSpec("dense_0", "dense", units=64, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("dense_1", "dense", units=32, activation="relu",
                      kernel_init="glorot_uniform", bias_init="zeros"),
            LayerSpec("dense_2", "dense", units=1, activation="linear",
                      kernel_init="glorot_uniform", bias_init="zeros"),
        )
        model = ModelSpec(
            layers=layers, loss="mse", optimizer_name="rmsprop",
            learning_rate=0.002, metrics=("mse",), epochs=24, batch_size=32,
            task="regression",
        )
    else:
        raise ValueError(f"unknown bundle kind {kind!r}")
    trace = make_trace("healthy", model.epochs, [l.name for l in layers if l.kind == "dense" or l.kind == "conv"], rng.getrandbits(32))
    return RunBundle(
        bundle_id=bundle_id,
        dataset=dataset,
        model=model,
        train_env=env,
        deploy_env=env,
        trace=trace,
    )


DEFAULT_CORPUS_SEED = 11


def training_corpus(
    n_per_class: int = 40, seed: int = DEFAULT_CORPUS_SEED
) -> list[tuple[FeatureVector, set[DynamicFault]]]:
    """Labeled feature vectors sampled from every trace regime."""
    rng = random.Random(seed)
    layer_names = ("dense_0", "dense_1", "dense_2")
    out: list[tuple[FeatureVector, set[DynamicFault]]] = []
    for kind in TRACE_KINDS:
        for _ in range(n_per_class):
            epochs = rng.randint(14, 28)
            trace = make_trace(kind, epochs, layer_names, rng.getrandbits(32))
            fv = features_from_trace(trace, source=f"synth-{kind}")
            out.append((fv, set(TRACE_LABELS[kind])))
    return out


DEFAULT_LINK_CORPUS_SEED = 13

# type pairs planted frequently enough for link prediction to learn them;
# kept to low-prior fault types so suggestions never outrank rule findings
PLANTED_FREQUENT = (
    ("model", "R14-InsufficientIteration", 0.9),
    ("library", "R06-LibrariesMismatch", 0.9),
)
PLANTED_RARE = (
    ("dataset", "R02-MissingPreprocessing", 0.1),
)


def linkpred_corpus(n_graphs: int = 48, seed: int = DEFAULT_LINK_CORPUS_SEED) -> list[KnowledgeGraph]:
    """Bundle graphs with planted fault edges for embedding training."""
    rng = random.Random(seed)
    graphs = []
    for i in range(n_graphs):
        kind = BUNDLE_KINDS[i % len(BUNDLE_KINDS)]
        b = make_bundle(kind, f"corpus-{i:03d}", rng.getrandbits(32))
        g = build_kg(b)
        ns = g.namespace
        targets = {
            "model": f"{ns}model",
            "dataset": f"{ns}dataset",
            "library": f"{ns}env/train/lib/tensorflow",
        }
        for where, fault_type_id, prob in PLANTED_FREQUENT + PLANTED_RARE:
            if rng.random() < prob:
                assert_fault(g, fault_type_id, targets[where], "planted corpus fault")
        graphs.append(g)
    return graphs
