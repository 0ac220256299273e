"""Dynamic fault prediction by three classifier families voting per label.

Each of the five dynamic fault labels gets an independent binary view
(binary relevance). A label is predicted when at least two of the three
families (random forest, decision tree, nearest neighbors) vote for it.
Labels never seen positive during training are recorded as degenerate and
predicted never, matching what retraining on such data would do anyway.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .classifiers import BootstrapForestClassifier, GiniTreeClassifier, StandardizedKnnVoter
from .errors import CorruptModel, InsufficientData, LayoutMismatch, VersionMismatch
from .features import LAYOUT_VERSION, FeatureVector

FORMAT_NAME = "fldeep-ensemble"
FORMAT_VERSION = 1
MIN_TRAIN_SAMPLES = 10


class DynamicFault(str, Enum):
    LOSS_FN = "LossFn"
    ACTIVATION_FN = "ActivationFn"
    OPTIMIZER = "Optimizer"
    INSUFFICIENT_ITERATION = "InsufficientIteration"
    LEARNING_RATE = "LearningRate"


LABEL_ORDER: tuple[DynamicFault, ...] = (
    DynamicFault.LOSS_FN,
    DynamicFault.ACTIVATION_FN,
    DynamicFault.OPTIMIZER,
    DynamicFault.INSUFFICIENT_ITERATION,
    DynamicFault.LEARNING_RATE,
)

FAMILY_NAMES = ("rf", "dt", "knn")


def majority_vote(family_sets: Sequence[set[DynamicFault]]) -> set[DynamicFault]:
    """Labels carried by at least two of the three family vote sets."""
    if len(family_sets) != len(FAMILY_NAMES):
        raise ValueError(f"expected {len(FAMILY_NAMES)} family vote sets, got {len(family_sets)}")
    out = set()
    for label in LABEL_ORDER:
        if sum(label in votes for votes in family_sets) >= 2:
            out.add(label)
    return out


@dataclass
class EnsembleModel:
    forests: dict[DynamicFault, BootstrapForestClassifier]
    trees: dict[DynamicFault, GiniTreeClassifier]
    knn: StandardizedKnnVoter
    degenerate_labels: frozenset[DynamicFault]
    layout_version: str
    seed: int
    fingerprint: str
    metadata: dict = field(default_factory=dict)


def _training_matrix(
    data: Sequence[tuple[FeatureVector, set[DynamicFault]]],
) -> tuple[np.ndarray, np.ndarray, str]:
    if len(data) < MIN_TRAIN_SAMPLES:
        raise InsufficientData(f"need >= {MIN_TRAIN_SAMPLES} samples, got {len(data)}")
    layouts = {fv.layout_version for fv, _ in data}
    if len(layouts) != 1:
        raise LayoutMismatch(f"mixed feature layouts in training data: {sorted(layouts)}")
    layout = layouts.pop()
    X = np.array([fv.values for fv, _ in data], dtype=np.float64)
    Y = np.zeros((len(data), len(LABEL_ORDER)), dtype=np.int64)
    for i, (_, labels) in enumerate(data):
        for j, label in enumerate(LABEL_ORDER):
            if label in labels:
                Y[i, j] = 1
    return X, Y, layout


def _fingerprint(X: np.ndarray, Y: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps([X.tolist(), Y.tolist()]).encode())
    return digest.hexdigest()[:16]


def train_ensemble(
    data: Sequence[tuple[FeatureVector, set[DynamicFault]]], seed: int
) -> EnsembleModel:
    """Fit one forest and one tree per label plus a shared KNN voter."""
    X, Y, layout = _training_matrix(data)
    master = random.Random(seed)
    forests: dict[DynamicFault, BootstrapForestClassifier] = {}
    trees: dict[DynamicFault, GiniTreeClassifier] = {}
    degenerate = set()
    for j, label in enumerate(LABEL_ORDER):
        y = Y[:, j]
        rf_seed = master.getrandbits(63)
        if y.sum() == 0:
            degenerate.add(label)
        forests[label] = BootstrapForestClassifier(
            n_trees=50, max_depth=8, max_features=7, random_state=rf_seed
        ).fit(X, y)
        trees[label] = GiniTreeClassifier(max_depth=8).fit(X, y)
    knn = StandardizedKnnVoter(k=5, min_votes=3).fit(X, Y)
    return EnsembleModel(
        forests=forests,
        trees=trees,
        knn=knn,
        degenerate_labels=frozenset(degenerate),
        layout_version=layout,
        seed=seed,
        fingerprint=_fingerprint(X, Y),
        metadata={"n_samples": int(X.shape[0]), "degenerate": sorted(d.value for d in degenerate)},
    )


def family_votes(m: EnsembleModel, fv: FeatureVector) -> dict[str, set[DynamicFault]]:
    """Per-family label votes for one feature vector."""
    if fv.layout_version != m.layout_version:
        raise LayoutMismatch(
            f"feature layout {fv.layout_version!r} does not match model layout {m.layout_version!r}"
        )
    row = np.array([fv.values], dtype=np.float64)
    rf_set = set()
    dt_set = set()
    for label in LABEL_ORDER:
        if label in m.degenerate_labels:
            continue
        if int(m.forests[label].predict(row)[0]) == 1:
            rf_set.add(label)
        if int(m.trees[label].predict(row)[0]) == 1:
            dt_set.add(label)
    knn_row = m.knn.predict(row)[0]
    knn_set = {
        label
        for j, label in enumerate(LABEL_ORDER)
        if knn_row[j] == 1 and label not in m.degenerate_labels
    }
    return {"rf": rf_set, "dt": dt_set, "knn": knn_set}


def predict_faults(m: EnsembleModel, fv: FeatureVector) -> set[DynamicFault]:
    votes = family_votes(m, fv)
    return majority_vote([votes[name] for name in FAMILY_NAMES])


def serialize_model(m: EnsembleModel) -> bytes:
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "layout_version": m.layout_version,
        "seed": m.seed,
        "fingerprint": m.fingerprint,
        "labels": [label.value for label in LABEL_ORDER],
        "degenerate": sorted(label.value for label in m.degenerate_labels),
        "rf": {label.value: m.forests[label].to_doc() for label in LABEL_ORDER},
        "dt": {label.value: m.trees[label].to_doc() for label in LABEL_ORDER},
        "knn": m.knn.to_doc(),
        "metadata": m.metadata,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def deserialize_model(blob: bytes) -> EnsembleModel:
    try:
        doc = json.loads(blob.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"undecodable model bytes: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptModel("not an ensemble model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"model format version {doc.get('format_version')!r}, supported {FORMAT_VERSION}"
        )
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise VersionMismatch(
            f"model feature layout {doc.get('layout_version')!r}, current {LAYOUT_VERSION}"
        )
    try:
        forests = {
            DynamicFault(name): BootstrapForestClassifier.from_doc(sub)
            for name, sub in doc["rf"].items()
        }
        trees = {
            DynamicFault(name): GiniTreeClassifier.from_doc(sub) for name, sub in doc["dt"].items()
        }
        knn = StandardizedKnnVoter.from_doc(doc["knn"])
        degenerate = frozenset(DynamicFault(name) for name in doc["degenerate"])
        model = EnsembleModel(
            forests=forests,
            trees=trees,
            knn=knn,
            degenerate_labels=degenerate,
            layout_version=doc["layout_version"],
            seed=int(doc["seed"]),
            fingerprint=str(doc["fingerprint"]),
            metadata=dict(doc.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model structure: {exc}") from None
    if set(model.forests) != set(LABEL_ORDER) or set(model.trees) != set(LABEL_ORDER):
        raise CorruptModel("model does not cover all five labels")
    return model
