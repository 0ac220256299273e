"""Recorded training-run bundles: on-disk layout, parsing, validation.

A bundle is a directory; its basename is the bundle id. It holds four JSON
manifests plus a JSONL trace:

    dataset.json      counts, value range, normalization, label encoding
    model.json        layers, loss, optimizer, schedule
    train_env.json    python/os/arch plus installed library versions
    deploy_env.json   same shape as train_env.json, optional
    trace.jsonl       one object per epoch: losses, accuracies, weight stats

Non-finite floats travel as the string sentinels "NaN", "Inf" and "-Inf"
because strict JSON has no spelling for them. Epoch counters may start at 0
or 1 and are normalized to 0-based positions.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import InvariantViolation, MissingFile, SchemaViolation

LAYER_KINDS = (
    "dense",
    "conv",
    "pooling",
    "dropout",
    "flatten",
    "embedding",
    "activation",
    "other",
)
TASKS = ("binary-classification", "multiclass-classification", "regression")
LABEL_ENCODINGS = ("onehot", "integer", "continuous")
OS_FAMILIES = ("linux", "windows", "macos", "other")

_VERSION_RE = re.compile(r"^\d+\.\d+(\.\d+)?$")


@dataclass(frozen=True)
class DatasetManifest:
    n_train: int
    n_test: int
    n_features: int
    feature_min: float
    feature_max: float
    normalized: bool
    label_encoding: str
    num_classes: int | None = None


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    units: int | None = None
    activation: str | None = None
    kernel_init: str | None = None
    bias_init: str | None = None


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple[LayerSpec, ...]
    loss: str
    optimizer_name: str
    epochs: int
    batch_size: int
    task: str
    learning_rate: float | None = None
    metrics: tuple[str, ...] = ()


@dataclass(frozen=True)
class EnvManifest:
    python_version: str
    os_family: str
    cpu_arch: str
    libraries: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class LayerWeightStats:
    name: str
    weight_mean_abs: float
    weight_std: float
    bias_mean_abs: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float
    val_loss: float | None = None
    val_accuracy: float | None = None
    layers: tuple[LayerWeightStats, ...] = ()


@dataclass(frozen=True)
class RunBundle:
    bundle_id: str
    dataset: DatasetManifest
    model: ModelSpec
    train_env: EnvManifest
    trace: tuple[EpochRecord, ...]
    deploy_env: EnvManifest | None = None


def decode_extended(value: object, file: str, field_name: str) -> float:
    """Decode a JSON number or a non-finite sentinel string into a float."""
    if isinstance(value, bool):
        raise SchemaViolation(file, field_name, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if value == "NaN":
        return math.nan
    if value == "Inf":
        return math.inf
    if value == "-Inf":
        return -math.inf
    raise SchemaViolation(file, field_name, f"expected a number or non-finite sentinel, got {value!r}")


def encode_extended(value: float) -> float | str:
    """Inverse of decode_extended: non-finite floats become sentinel strings."""
    if math.isnan(value):
        return "NaN"
    if value == math.inf:
        return "Inf"
    if value == -math.inf:
        return "-Inf"
    return value


def test_fraction(dataset: DatasetManifest) -> float:
    """Share of samples held out for testing."""
    return dataset.n_test / (dataset.n_train + dataset.n_test)


def _load_json(root: Path, name: str) -> dict:
    path = root / name
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(name, "<document>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaViolation(name, "<document>", "top level must be an object")
    return data


def _req(data: dict, file: str, field_name: str, kinds: type | tuple) -> object:
    if field_name not in data:
        raise SchemaViolation(file, field_name, "required field is missing")
    value = data[field_name]
    if kinds is float:
        kinds = (int, float)
    if not isinstance(value, kinds) or isinstance(value, bool) and kinds != bool:
        raise SchemaViolation(file, field_name, f"wrong type: {type(value).__name__}")
    return value


def _opt(data: dict, file: str, field_name: str, kinds: type | tuple) -> object | None:
    if field_name not in data or data[field_name] is None:
        return None
    return _req(data, file, field_name, kinds)


def _enum(value: str, allowed: tuple[str, ...], file: str, field_name: str) -> str:
    if value not in allowed:
        raise SchemaViolation(file, field_name, f"{value!r} not one of {allowed}")
    return value


def _version(value: str, file: str, field_name: str) -> str:
    if not _VERSION_RE.match(value):
        raise SchemaViolation(file, field_name, f"{value!r} does not match major.minor[.patch]")
    return value


def _parse_dataset(root: Path) -> DatasetManifest:
    f = "dataset.json"
    data = _load_json(root, f)
    d = DatasetManifest(
        n_train=int(_req(data, f, "n_train", int)),
        n_test=int(_req(data, f, "n_test", int)),
        n_features=int(_req(data, f, "n_features", int)),
        feature_min=decode_extended(_req(data, f, "feature_min", (int, float, str)), f, "feature_min"),
        feature_max=decode_extended(_req(data, f, "feature_max", (int, float, str)), f, "feature_max"),
        normalized=bool(_req(data, f, "normalized", bool)),
        label_encoding=_enum(str(_req(data, f, "label_encoding", str)), LABEL_ENCODINGS, f, "label_encoding"),
        num_classes=_opt(data, f, "num_classes", int),
    )
    if d.n_train < 1:
        raise InvariantViolation(f"{f}: n_train must be >= 1, got {d.n_train}")
    if d.n_test < 0:
        raise InvariantViolation(f"{f}: n_test must be >= 0, got {d.n_test}")
    if d.n_features < 1:
        raise InvariantViolation(f"{f}: n_features must be >= 1, got {d.n_features}")
    if d.num_classes is not None and d.num_classes < 2:
        raise InvariantViolation(f"{f}: num_classes must be >= 2 when present")
    if not (math.isnan(d.feature_min) or math.isnan(d.feature_max)) and d.feature_min > d.feature_max:
        raise InvariantViolation(f"{f}: feature_min exceeds feature_max")
    return d


def _parse_layer(raw: object, index: int) -> LayerSpec:
    f = "model.json"
    ctx = f"layers[{index}]"
    if not isinstance(raw, dict):
        raise SchemaViolation(f, ctx, "layer entry must be an object")
    kind = str(_req(raw, f, "kind", str)).lower()
    if kind not in LAYER_KINDS:
        kind = "other"
    layer = LayerSpec(
        name=str(_req(raw, f, "name", str)),
        kind=kind,
        units=_opt(raw, f, "units", int),
        activation=_opt(raw, f, "activation", str),
        kernel_init=_opt(raw, f, "kernel_init", str),
        bias_init=_opt(raw, f, "bias_init", str),
    )
    if layer.units is not None and layer.units < 1:
        raise InvariantViolation(f"{f}: {ctx}: units must be >= 1 when present")
    if layer.kind == "activation" and not layer.activation:
        raise InvariantViolation(f"{f}: {ctx}: activation-kind layer needs an activation name")
    return layer


def _parse_model(root: Path) -> ModelSpec:
    f = "model.json"
    data = _load_json(root, f)
    raw_layers = _req(data, f, "layers", list)
    layers = tuple(_parse_layer(entry, i) for i, entry in enumerate(raw_layers))
    if not layers:
        raise InvariantViolation(f"{f}: layers must be non-empty")
    loss = data.get("loss")
    if "loss" not in data:
        raise SchemaViolation(f, "loss", "required field is missing")
    if loss is None:
        loss = ""
    if not isinstance(loss, str):
        raise SchemaViolation(f, "loss", f"wrong type: {type(loss).__name__}")
    optimizer = data.get("optimizer_name")
    if "optimizer_name" not in data:
        raise SchemaViolation(f, "optimizer_name", "required field is missing")
    if optimizer is None:
        optimizer = ""
    if not isinstance(optimizer, str):
        raise SchemaViolation(f, "optimizer_name", f"wrong type: {type(optimizer).__name__}")
    lr = _opt(data, f, "learning_rate", (int, float))
    metrics_raw = data.get("metrics", [])
    if not isinstance(metrics_raw, list) or not all(isinstance(m, str) for m in metrics_raw):
        raise SchemaViolation(f, "metrics", "must be a list of strings")
    m = ModelSpec(
        layers=layers,
        loss=loss,
        optimizer_name=optimizer,
        learning_rate=None if lr is None else float(lr),
        metrics=tuple(metrics_raw),
        epochs=int(_req(data, f, "epochs", int)),
        batch_size=int(_req(data, f, "batch_size", int)),
        task=_enum(str(_req(data, f, "task", str)), TASKS, f, "task"),
    )
    if m.epochs < 1:
        raise InvariantViolation(f"{f}: epochs must be >= 1")
    if m.batch_size < 1:
        raise InvariantViolation(f"{f}: batch_size must be >= 1")
    if m.learning_rate is not None and not m.learning_rate > 0:
        raise InvariantViolation(f"{f}: learning_rate must be positive when present")
    return m


def _parse_env(root: Path, name: str) -> EnvManifest:
    data = _load_json(root, name)
    libs_raw = _req(data, name, "libraries", dict)
    libraries: dict[str, str] = {}
    for lib, ver in libs_raw.items():
        if not isinstance(lib, str) or not lib:
            raise SchemaViolation(name, "libraries", "library names must be non-empty strings")
        if not isinstance(ver, str):
            raise SchemaViolation(name, f"libraries[{lib!r}]", "version must be a string")
        libraries[lib] = _version(ver, name, f"libraries[{lib!r}]")
    return EnvManifest(
        python_version=_version(str(_req(data, name, "python_version", str)), name, "python_version"),
        os_family=_enum(str(_req(data, name, "os_family", str)), OS_FAMILIES, name, "os_family"),
        cpu_arch=str(_req(data, name, "cpu_arch", str)),
        libraries=libraries,
    )


def _parse_trace(root: Path) -> tuple[EpochRecord, ...]:
    f = "trace.jsonl"
    path = root / f
    if not path.is_file():
        raise MissingFile(str(path))
    records: list[EpochRecord] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        ctx = f"line {lineno}"
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f, ctx, f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise SchemaViolation(f, ctx, "each line must be an object")
        layers_raw = data.get("layers", [])
        if not isinstance(layers_raw, list):
            raise SchemaViolation(f, f"{ctx}: layers", "must be a list")
        layers = []
        for j, lw in enumerate(layers_raw):
            if not isinstance(lw, dict):
                raise SchemaViolation(f, f"{ctx}: layers[{j}]", "must be an object")
            layers.append(
                LayerWeightStats(
                    name=str(_req(lw, f, "name", str)),
                    weight_mean_abs=decode_extended(
                        _req(lw, f, "weight_mean_abs", (int, float, str)), f, f"{ctx}: weight_mean_abs"
                    ),
                    weight_std=decode_extended(
                        _req(lw, f, "weight_std", (int, float, str)), f, f"{ctx}: weight_std"
                    ),
                    bias_mean_abs=decode_extended(
                        _req(lw, f, "bias_mean_abs", (int, float, str)), f, f"{ctx}: bias_mean_abs"
                    ),
                )
            )
        def _metric(key: str, required: bool) -> float | None:
            if key not in data or data[key] is None:
                if required:
                    raise SchemaViolation(f, f"{ctx}: {key}", "required field is missing")
                return None
            return decode_extended(data[key], f, f"{ctx}: {key}")

        records.append(
            EpochRecord(
                epoch=int(_req(data, f, "epoch", int)),
                loss=_metric("loss", required=True),
                accuracy=_metric("accuracy", required=True),
                val_loss=_metric("val_loss", required=False),
                val_accuracy=_metric("val_accuracy", required=False),
                layers=tuple(layers),
            )
        )
    if not records:
        raise InvariantViolation(f"{f}: trace must contain at least one epoch record")
    origin = records[0].epoch
    if origin not in (0, 1):
        raise InvariantViolation(f"{f}: epoch counter must start at 0 or 1, got {origin}")
    for pos, rec in enumerate(records):
        if rec.epoch != origin + pos:
            raise InvariantViolation(
                f"{f}: epochs must increase by 1; position {pos} has epoch {rec.epoch}"
            )
    names = [tuple(lw.name for lw in rec.layers) for rec in records]
    if any(seq != names[0] for seq in names[1:]):
        raise InvariantViolation(f"{f}: per-epoch layer name sequences differ")
    if origin == 1:
        records = [replace(rec, epoch=rec.epoch - 1) for rec in records]
    return tuple(records)


def parse_bundle(path: str | Path) -> RunBundle:
    """Parse and validate a bundle directory. The directory basename is the id."""
    root = Path(path)
    if not root.is_dir():
        raise MissingFile(str(root))
    bundle_id = root.name
    if not bundle_id:
        raise InvariantViolation("bundle directory has an empty basename")
    deploy = None
    if (root / "deploy_env.json").is_file():
        deploy = _parse_env(root, "deploy_env.json")
    return RunBundle(
        bundle_id=bundle_id,
        dataset=_parse_dataset(root),
        model=_parse_model(root),
        train_env=_parse_env(root, "train_env.json"),
        deploy_env=deploy,
        trace=_parse_trace(root),
    )


def _dataset_doc(d: DatasetManifest) -> dict:
    doc = {
        "n_train": d.n_train,
        "n_test": d.n_test,
        "n_features": d.n_features,
        "feature_min": encode_extended(d.feature_min),
        "feature_max": encode_extended(d.feature_max),
        "normalized": d.normalized,
        "label_encoding": d.label_encoding,
    }
    if d.num_classes is not None:
        doc["num_classes"] = d.num_classes
    return doc


def _model_doc(m: ModelSpec) -> dict:
    layers = []
    for layer in m.layers:
        ld: dict = {"name": layer.name, "kind": layer.kind}
        if layer.units is not None:
            ld["units"] = layer.units
        if layer.activation is not None:
            ld["activation"] = layer.activation
        if layer.kernel_init is not None:
            ld["kernel_init"] = layer.kernel_init
        if layer.bias_init is not None:
            ld["bias_init"] = layer.bias_init
        layers.append(ld)
    doc = {
        "layers": layers,
        "loss": m.loss,
        "optimizer_name": m.optimizer_name,
        "metrics": list(m.metrics),
        "epochs": m.epochs,
        "batch_size": m.batch_size,
        "task": m.task,
    }
    if m.learning_rate is not None:
        doc["learning_rate"] = m.learning_rate
    return doc


def _env_doc(e: EnvManifest) -> dict:
    return {
        "python_version": e.python_version,
        "os_family": e.os_family,
        "cpu_arch": e.cpu_arch,
        "libraries": dict(sorted(e.libraries.items())),
    }


def _trace_line(rec: EpochRecord) -> str:
    doc: dict = {
        "epoch": rec.epoch,
        "loss": encode_extended(rec.loss),
        "accuracy": encode_extended(rec.accuracy),
    }
    if rec.val_loss is not None:
        doc["val_loss"] = encode_extended(rec.val_loss)
    if rec.val_accuracy is not None:
        doc["val_accuracy"] = encode_extended(rec.val_accuracy)
    doc["layers"] = [
        {
            "name": lw.name,
            "weight_mean_abs": encode_extended(lw.weight_mean_abs),
            "weight_std": encode_extended(lw.weight_std),
            "bias_mean_abs": encode_extended(lw.bias_mean_abs),
        }
        for lw in rec.layers
    ]
    return json.dumps(doc, allow_nan=False, sort_keys=True)


def serialize_bundle(bundle: RunBundle, parent_dir: str | Path) -> Path:
    """Write bundle files under parent_dir/bundle_id and return that directory."""
    root = Path(parent_dir) / bundle.bundle_id
    root.mkdir(parents=True, exist_ok=True)
    (root / "dataset.json").write_text(json.dumps(_dataset_doc(bundle.dataset), indent=2, sort_keys=True) + "\n")
    (root / "model.json").write_text(json.dumps(_model_doc(bundle.model), indent=2, sort_keys=True) + "\n")
    (root / "train_env.json").write_text(json.dumps(_env_doc(bundle.train_env), indent=2, sort_keys=True) + "\n")
    if bundle.deploy_env is not None:
        (root / "deploy_env.json").write_text(
            json.dumps(_env_doc(bundle.deploy_env), indent=2, sort_keys=True) + "\n"
        )
    (root / "trace.jsonl").write_text("".join(_trace_line(rec) + "\n" for rec in bundle.trace))
    return root
