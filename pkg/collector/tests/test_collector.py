import json
import math
import shutil

import numpy as np
import pytest

pytest.importorskip("fldeep_collector")
tf = pytest.importorskip("tensorflow")
pytest.importorskip("sklearn")

from sklearn.datasets import load_digits
from tensorflow import keras

from fldeep_collector import (
    CollectorError,
    attach,
    probe_dataset,
    probe_deploy,
    probe_env,
)
from fldeep_collector.keras_hook import TrainingRecorder

from fldeep import cli
from fldeep.bundle import parse_bundle


def small_classifier(n_features=64, n_classes=10, seed=7):
    keras.utils.set_random_seed(seed)
    model = keras.Sequential(
        [
            keras.Input(shape=(n_features,)),
            keras.layers.Dense(32, activation="relu", name="hidden"),
            keras.layers.Dense(n_classes, activation="softmax", name="head"),
        ]
    )
    model.compile(
        optimizer=keras.optimizers.Adam(learning_rate=0.001),
        loss="sparse_categorical_crossentropy",
        metrics=["accuracy"],
    )
    return model


@pytest.fixture(scope="module")
def digits():
    data = load_digits()
    x = (data.data / 16.0).astype("float32")
    y = data.target.astype("int64")
    return (x[:1400], y[:1400]), (x[1400:], y[1400:])


@pytest.fixture(scope="module")
def recorded_run(tmp_path_factory, digits):
    out = tmp_path_factory.mktemp("bundles") / "toy-run"
    train, test = digits
    model = small_classifier()
    session = attach(model, out, batch_size=64)
    session.probe_dataset(train, test)
    model.fit(
        train[0],
        train[1],
        epochs=3,
        batch_size=64,
        validation_split=0.2,
        callbacks=[session.callback],
        verbose=0,
    )
    session.probe_deploy()
    return out


def test_recorded_bundle_parses(recorded_run):
    b = parse_bundle(recorded_run)
    assert b.bundle_id == "toy-run"
    assert [r.epoch for r in b.trace] == [0, 1, 2]
    assert b.model.task == "multiclass-classification"
    assert b.model.loss == "sparse_categorical_crossentropy"
    assert b.model.optimizer_name == "adam"
    assert b.model.learning_rate == pytest.approx(0.001)
    assert b.model.epochs == 3
    assert b.model.batch_size == 64
    assert b.model.metrics == ("accuracy",)
    assert [l.kind for l in b.model.layers] == ["dense", "dense"]
    assert b.model.layers[0].kernel_init == "glorot_uniform"
    assert b.model.layers[1].activation == "softmax"
    assert b.dataset.n_train == 1400
    assert b.dataset.n_test == 397
    assert b.dataset.n_features == 64
    assert b.dataset.normalized is True
    assert b.dataset.label_encoding == "integer"
    assert b.dataset.num_classes == 10


def test_trace_has_one_line_per_epoch(recorded_run):
    lines = (recorded_run / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 3
    for line in lines:
        rec = json.loads(line)
        assert {"epoch", "loss", "accuracy", "val_loss", "val_accuracy", "layers"} <= set(rec)
        assert [l["name"] for l in rec["layers"]] == ["hidden", "head"]
        for stats in rec["layers"]:
            assert stats["weight_mean_abs"] >= 0
            assert stats["weight_std"] >= 0
            assert stats["bias_mean_abs"] >= 0


def test_same_host_envs_match(recorded_run):
    train = json.loads((recorded_run / "train_env.json").read_text())
    deploy = json.loads((recorded_run / "deploy_env.json").read_text())
    assert train == deploy
    assert "numpy" in train["libraries"]
    assert train["os_family"] in ("linux", "windows", "macos", "other")


def test_analyzer_consumes_recorded_bundle(recorded_run, capsys, tmp_path):
    report_path = tmp_path / "report.json"
    code = cli.main(["analyze", str(recorded_run), "--out", str(report_path)])
    capsys.readouterr()
    assert code in (0, 3)
    doc = json.loads(report_path.read_text())
    assert doc["bundle_id"] == "toy-run"
    # same host, no skew: whatever fires, it is not a library mismatch
    assert all(f["fault_type"] != "R06-LibrariesMismatch" for f in doc["findings"])


def test_version_skewed_deploy_is_localized(recorded_run, capsys, tmp_path):
    skewed = tmp_path / "skewed-run"
    shutil.copytree(recorded_run, skewed)
    libs = dict(probe_env()["libraries"])
    major, minor = libs["numpy"].split(".")[:2]
    libs["numpy"] = f"{major}.{int(minor) + 1}.0"
    probe_deploy(skewed, libraries=libs)
    report_path = tmp_path / "report.json"
    code = cli.main(["analyze", str(skewed), "--out", str(report_path)])
    capsys.readouterr()
    assert code == 3
    doc = json.loads(report_path.read_text())
    hits = [f for f in doc["findings"] if f["fault_type"] == "R06-LibrariesMismatch"]
    assert hits and 'libraries["numpy"]' in hits[0]["location"]


def test_nan_loss_written_as_sentinel(tmp_path):
    out = tmp_path / "nan-run"
    model = small_classifier(n_features=4, n_classes=3)
    session = attach(model, out, batch_size=8)
    session.probe_dataset((np.zeros((6, 4), "float32"), np.array([0, 1, 2, 0, 1, 2])))
    cb = session.callback
    cb.set_model(model)
    cb.set_params({"epochs": 3})
    cb.on_train_begin()
    cb.on_epoch_end(0, {"loss": 1.5, "accuracy": 0.3})
    cb.on_epoch_end(1, {"loss": 0.9, "accuracy": 0.5})
    cb.on_epoch_end(2, {"loss": float("nan"), "accuracy": 0.5, "val_loss": float("inf")})
    cb.on_train_end()
    lines = (out / "trace.jsonl").read_text().splitlines()
    last = json.loads(lines[2])
    assert last["loss"] == "NaN"
    assert last["val_loss"] == "Inf"
    b = parse_bundle(out)
    assert math.isnan(b.trace[2].loss)
    assert math.isinf(b.trace[2].val_loss)


def test_attach_requires_compiled_model(tmp_path):
    model = keras.Sequential([keras.Input(shape=(2,)), keras.layers.Dense(1)])
    with pytest.raises(CollectorError, match="not compiled"):
        attach(model, tmp_path / "x")


def test_attach_rejects_unwritable_dir(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    model = small_classifier(n_features=2, n_classes=2)
    with pytest.raises(CollectorError, match="cannot write"):
        attach(model, blocker / "sub")


def test_write_failure_disables_hook_quietly(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    model = small_classifier(n_features=2, n_classes=2)
    hook = TrainingRecorder(blocker / "sub")
    hook.set_model(model)
    hook.set_params({"epochs": 1})
    hook.on_train_begin()
    assert hook.disabled is True
    hook.on_epoch_end(0, {"loss": 1.0, "accuracy": 0.5})
    hook.on_train_end()
    assert "recording disabled" in capsys.readouterr().err


def test_probe_dataset_unscaled(tmp_path):
    x = np.array([[0.0, 12.0], [255.0, 3.0]], dtype="float32")
    probe_dataset(tmp_path, (x, np.array([0, 1])))
    doc = json.loads((tmp_path / "dataset.json").read_text())
    assert doc["normalized"] is False
    assert doc["feature_max"] == 255.0
    assert doc["n_test"] == 0


def test_probe_dataset_regression_labels(tmp_path):
    x = np.random.default_rng(0).normal(size=(20, 3)).astype("float32")
    y = np.random.default_rng(1).normal(size=20).astype("float32")
    probe_dataset(tmp_path, (x, y))
    doc = json.loads((tmp_path / "dataset.json").read_text())
    assert doc["label_encoding"] == "continuous"
    assert "num_classes" not in doc
    assert doc["normalized"] is False or doc["feature_min"] >= -1.5


def test_probe_dataset_onehot_labels(tmp_path):
    x = np.zeros((8, 5), dtype="float32")
    y = np.eye(4, dtype="float32")[np.array([0, 1, 2, 3, 0, 1, 2, 3])]
    probe_dataset(tmp_path, (x, y))
    doc = json.loads((tmp_path / "dataset.json").read_text())
    assert doc["label_encoding"] == "onehot"
    assert doc["num_classes"] == 4
