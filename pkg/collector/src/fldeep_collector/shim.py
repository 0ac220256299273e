"""Record a training session as an analyzable run bundle.

The bundle is a directory of plain JSON files: dataset.json, model.json,
train_env.json, deploy_env.json (optional), and trace.jsonl with one object
per epoch. Non-finite numbers are written as the sentinel strings "NaN",
"Inf", "-Inf" because JSON has no literals for them. Nothing here imports
the analyzer; the directory layout is the whole contract.
"""

from __future__ import annotations

import importlib.metadata
import json
import math
import os
import platform
import re
import sys
from pathlib import Path

import numpy as np

__all__ = [
    "CollectorError",
    "CollectorSession",
    "attach",
    "probe_dataset",
    "probe_deploy",
    "DEFAULT_LIBRARY_WATCHLIST",
    "NORMALIZED_BAND",
]


class CollectorError(RuntimeError):
    """The session cannot be set up; training itself is never aborted."""


DEFAULT_LIBRARY_WATCHLIST = (
    "tensorflow",
    "keras",
    "numpy",
    "scipy",
    "h5py",
    "pandas",
    "scikit-learn",
)

# data with features in this band counts as normalized; accepts both
# [0, 1] scaling and standardization
NORMALIZED_BAND = (-1.5, 1.5)

_VERSION_RE = re.compile(r"(\d+\.\d+(?:\.\d+)?)")


def encode_value(x: float) -> float | str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    return x


def _diag(message: str) -> None:
    print(f"fldeep-collector: {message}", file=sys.stderr)


def write_json(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _clean_version(raw: str) -> str | None:
    m = _VERSION_RE.match(str(raw).strip())
    return m.group(1) if m else None


def _os_family() -> str:
    system = platform.system().lower()
    if system == "linux":
        return "linux"
    if system == "darwin":
        return "macos"
    if system == "windows":
        return "windows"
    return "other"


def probe_env(libraries: dict[str, str] | None = None) -> dict:
    """Capture the runtime: interpreter, OS, arch, library versions.

    With an explicit `libraries` mapping the watchlist probe is skipped,
    which is how a deployment host reports versions the collector cannot
    import locally. Versions that do not reduce to major.minor[.patch]
    are dropped rather than recorded malformed.
    """
    if libraries is None:
        libraries = {}
        for name in DEFAULT_LIBRARY_WATCHLIST:
            try:
                libraries[name] = importlib.metadata.version(name)
            except importlib.metadata.PackageNotFoundError:
                continue
    versions = {}
    for name, raw in libraries.items():
        v = _clean_version(raw)
        if v is None:
            _diag(f"dropping library {name!r}: unparseable version {raw!r}")
            continue
        versions[str(name)] = v
    python_version = _clean_version(platform.python_version())
    if python_version is None:  # pragma: no cover - interpreter always conforms
        raise CollectorError(f"cannot parse interpreter version {platform.python_version()!r}")
    return {
        "python_version": python_version,
        "os_family": _os_family(),
        "cpu_arch": platform.machine() or "unknown",
        "libraries": versions,
    }


def probe_deploy(output_dir: str | Path, libraries: dict[str, str] | None = None) -> Path:
    """Write deploy_env.json; run this on the deployment host."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "deploy_env.json"
    write_json(path, probe_env(libraries))
    return path


def _label_layout(y: np.ndarray) -> tuple[str, int | None]:
    if y.ndim >= 2 and y.shape[-1] > 1:
        return "onehot", int(y.shape[-1])
    flat = y.reshape(-1)
    integral = np.issubdtype(flat.dtype, np.integer) or (
        np.issubdtype(flat.dtype, np.floating)
        and bool(np.all(np.isfinite(flat)))
        and bool(np.all(flat == np.round(flat)))
    )
    if integral:
        classes = int(np.unique(flat).size)
        return "integer", classes if classes >= 2 else None
    return "continuous", None


def probe_dataset(
    output_dir: str | Path,
    train: tuple,
    test: tuple | None = None,
    normalized_band: tuple[float, float] = NORMALIZED_BAND,
) -> Path:
    """Write dataset.json from (features, labels) pairs.

    Split sizes, flattened feature count, feature value range, the
    normalized heuristic, and the label encoding are all read off the
    arrays; anything that cannot be determined is left absent.
    """
    x_train = np.asarray(train[0])
    y_train = np.asarray(train[1])
    x_test = np.asarray(test[0]) if test is not None else None
    pool = x_train if x_test is None or x_test.size == 0 else np.concatenate(
        [x_train.reshape(-1), x_test.reshape(-1)]
    )
    fmin = float(np.min(pool)) if pool.size else 0.0
    fmax = float(np.max(pool)) if pool.size else 0.0
    lo, hi = normalized_band
    normalized = math.isfinite(fmin) and math.isfinite(fmax) and fmin >= lo and fmax <= hi
    encoding, num_classes = _label_layout(y_train)
    doc = {
        "n_train": int(len(x_train)),
        "n_test": int(len(x_test)) if x_test is not None else 0,
        "n_features": max(1, int(np.prod(x_train.shape[1:], dtype=np.int64))),
        "feature_min": encode_value(fmin),
        "feature_max": encode_value(fmax),
        "normalized": bool(normalized),
        "label_encoding": encoding,
    }
    if num_classes is not None:
        doc["num_classes"] = num_classes
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dataset.json"
    write_json(path, doc)
    return path


class CollectorSession:
    """One recorded run: a bundle directory plus the live epoch hook.

    Pass `session.callback` to fit(); the dataset and deploy probes can run
    any time before or after training.
    """

    def __init__(self, output_dir: Path, callback) -> None:
        self.output_dir = output_dir
        self.callback = callback

    def probe_dataset(self, train: tuple, test: tuple | None = None, **kwargs) -> Path:
        return probe_dataset(self.output_dir, train, test, **kwargs)

    def probe_deploy(self, libraries: dict[str, str] | None = None) -> Path:
        return probe_deploy(self.output_dir, libraries)


def attach(
    model,
    output_dir: str | Path,
    epochs: int | None = None,
    batch_size: int | None = None,
    metrics: tuple[str, ...] | None = None,
    libraries: dict[str, str] | None = None,
) -> CollectorSession:
    """Instrument a compiled Keras model and return the session.

    Writes train_env.json immediately; model.json and trace.jsonl are
    written by the returned callback while fit() runs. `epochs` and
    `batch_size` are fallbacks for what the training loop does not expose
    to callbacks (fit reports epochs; batch size it keeps to itself, so
    pass the value given to fit, else the Keras default of 32 is assumed).
    """
    if getattr(model, "optimizer", None) is None:
        raise CollectorError("model is not compiled; call compile() before attach()")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "train_env.json", probe_env(libraries))
    except OSError as exc:
        raise CollectorError(f"cannot write to {out}: {exc}") from exc
    from .keras_hook import TrainingRecorder

    hook = TrainingRecorder(
        out, epochs_hint=epochs, batch_size_hint=batch_size, metrics_hint=metrics
    )
    return CollectorSession(out, hook)
