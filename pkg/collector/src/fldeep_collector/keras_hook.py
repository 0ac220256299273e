"""The per-epoch Keras hook and the model-spec snapshot it writes."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

try:
    import keras
except ImportError:  # pragma: no cover - tf-bundled fallback
    from tensorflow import keras

from .shim import _diag, encode_value, write_json

_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")

# dedicated activation layer classes whose lowercased names need fixing up
_ACT_LAYER_NAMES = {
    "ReLU": "relu",
    "LeakyReLU": "leaky_relu",
    "PReLU": "prelu",
    "ELU": "elu",
    "Softmax": "softmax",
    "ThresholdedReLU": "thresholded_relu",
}

_BINARY_LOSSES = {"binary_crossentropy", "bce", "hinge", "squared_hinge"}
_MULTICLASS_LOSSES = {
    "categorical_crossentropy",
    "sparse_categorical_crossentropy",
    "cce",
    "scce",
    "kld",
    "kl_divergence",
    "kullback_leibler_divergence",
    "categorical_hinge",
}
_REGRESSION_LOSSES = {
    "mse",
    "mae",
    "mean_squared_error",
    "mean_absolute_error",
    "mean_absolute_percentage_error",
    "mean_squared_logarithmic_error",
    "huber",
    "log_cosh",
    "logcosh",
    "cosine_similarity",
    "poisson",
}


def _snake(name: str) -> str:
    return _CAMEL_RE.sub("_", name).lower()


def _loss_name(loss) -> str:
    if loss is None:
        return ""
    if isinstance(loss, str):
        return loss.strip().lower()
    return _snake(loss.__class__.__name__)


def _activation_name(fn) -> str | None:
    if fn is None:
        return None
    name = getattr(fn, "__name__", None) or getattr(fn, "name", None)
    if name is None:
        name = fn.__class__.__name__
    return _snake(str(name))


def _layer_kind(layer) -> str:
    cls = layer.__class__.__name__
    if cls == "Dense":
        return "dense"
    if "Conv" in cls:
        return "conv"
    if "Pooling" in cls or "Pool" in cls:
        return "pooling"
    if "Dropout" in cls:
        return "dropout"
    if cls == "Flatten":
        return "flatten"
    if cls == "Embedding":
        return "embedding"
    if cls == "Activation" or cls in _ACT_LAYER_NAMES:
        return "activation"
    return "other"


def _layer_spec(layer) -> dict:
    kind = _layer_kind(layer)
    spec: dict = {"name": str(layer.name), "kind": kind}
    units = getattr(layer, "units", None)
    if units is not None:
        spec["units"] = int(units)
    cls = layer.__class__.__name__
    if cls in _ACT_LAYER_NAMES:
        spec["activation"] = _ACT_LAYER_NAMES[cls]
    else:
        act = _activation_name(getattr(layer, "activation", None))
        if act is not None:
            spec["activation"] = act
    for attr, field in (("kernel_initializer", "kernel_init"), ("bias_initializer", "bias_init")):
        init = getattr(layer, attr, None)
        if init is not None:
            spec[field] = _snake(init.__class__.__name__)
    return spec


def _infer_task(loss_name: str, layer_specs: list[dict]) -> str:
    if loss_name in _BINARY_LOSSES:
        return "binary-classification"
    if loss_name in _MULTICLASS_LOSSES:
        return "multiclass-classification"
    if loss_name in _REGRESSION_LOSSES:
        return "regression"
    # unknown loss: read the head instead
    final = layer_specs[-1] if layer_specs else {}
    act = final.get("activation")
    if act == "softmax":
        return "multiclass-classification"
    if act == "sigmoid" and final.get("units", 0) == 1:
        return "binary-classification"
    return "regression"


def _learning_rate(optimizer) -> float | None:
    lr = getattr(optimizer, "learning_rate", None)
    if lr is None:
        return None
    try:
        value = float(np.asarray(lr))
    except (TypeError, ValueError):
        return None  # schedules have no single value
    return value if value > 0 else None


class TrainingRecorder(keras.callbacks.Callback):
    """Writes model.json at fit start and one trace line per epoch.

    A failed write disables the recorder with a diagnostic; the training
    run itself is never interrupted.
    """

    def __init__(self, output_dir: Path, epochs_hint=None, batch_size_hint=None, metrics_hint=None):
        super().__init__()
        self.output_dir = Path(output_dir)
        self.epochs_hint = epochs_hint
        self.batch_size_hint = batch_size_hint
        self.metrics_hint = tuple(metrics_hint) if metrics_hint is not None else None
        self.disabled = False
        self._trace = None
        self._metrics_written = metrics_hint is not None
        self._model_doc = None

    def _abort(self, exc: OSError) -> None:
        _diag(f"recording disabled, training continues: {exc}")
        self.disabled = True
        if self._trace is not None:
            try:
                self._trace.close()
            except OSError:
                pass
            self._trace = None

    def _learnable_layers(self):
        return [l for l in self.model.layers if getattr(l, "kernel", None) is not None]

    def _write_model(self, metrics: tuple[str, ...]) -> None:
        loss = _loss_name(getattr(self.model, "loss", None))
        specs = [_layer_spec(l) for l in self.model.layers]
        epochs = (self.params or {}).get("epochs") or self.epochs_hint or 1
        doc = {
            "layers": specs,
            "loss": loss,
            "optimizer_name": self.model.optimizer.__class__.__name__.lower(),
            "metrics": sorted(metrics),
            "epochs": int(epochs),
            "batch_size": int(self.batch_size_hint or 32),
            "task": _infer_task(loss, specs),
        }
        lr = _learning_rate(self.model.optimizer)
        if lr is not None:
            doc["learning_rate"] = lr
        self._model_doc = doc
        write_json(self.output_dir / "model.json", doc)

    def on_train_begin(self, logs=None):
        if self.disabled:
            return
        try:
            self._write_model(self.metrics_hint or ())
            self._trace = open(self.output_dir / "trace.jsonl", "w")
        except OSError as exc:
            self._abort(exc)

    def on_epoch_end(self, epoch, logs=None):
        if self.disabled or self._trace is None:
            return
        logs = logs or {}
        if not self._metrics_written:
            # fit() only reveals the metric names once logs exist
            found = tuple(
                k for k in logs if k != "loss" and not k.startswith("val_")
            )
            try:
                self._write_model(found)
            except OSError as exc:
                self._abort(exc)
                return
            self._metrics_written = True
        record = {
            "epoch": int(epoch),
            "loss": encode_value(logs.get("loss", float("nan"))),
            "accuracy": encode_value(logs.get("accuracy", logs.get("acc", 0.0))),
            "layers": [
                {
                    "name": str(l.name),
                    "weight_mean_abs": encode_value(np.mean(np.abs(l.kernel.numpy()))),
                    "weight_std": encode_value(np.std(l.kernel.numpy())),
                    "bias_mean_abs": encode_value(
                        np.mean(np.abs(l.bias.numpy()))
                        if getattr(l, "bias", None) is not None
                        else 0.0
                    ),
                }
                for l in self._learnable_layers()
            ],
        }
        for key in ("val_loss", "val_accuracy"):
            if key in logs:
                record[key] = encode_value(logs[key])
        try:
            self._trace.write(json.dumps(record, sort_keys=True) + "\n")
            self._trace.flush()
        except OSError as exc:
            self._abort(exc)

    def on_train_end(self, logs=None):
        if self._trace is not None:
            try:
                self._trace.close()
            except OSError as exc:
                self._abort(exc)
                return
            self._trace = None
