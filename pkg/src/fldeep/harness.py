"""Mutation-based evaluation of the localization pipeline.

Seven operators each inject one known fault class into a clean bundle. The
harness analyzes every mutant, checks whether the injected class appears in
the top-k findings, and aggregates per-category detection counts. Component
contributions are measured by re-running with one signal source disabled at
a time.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .bundle import RunBundle, parse_bundle, serialize_bundle
from .errors import InapplicableOperator, SchemaViolation, UnknownCategoryMapping
from .pipeline import AnalysisOptions, analyze_bundle
from .ranking import FaultFinding
from .rules import CLASSIFICATION_TASKS, normalize_loss
from .synth import make_trace

CORPUS_VERSION = "fldeep-mutants/1"
EVAL_VERSION = "fldeep-eval/1"

CATEGORIES = (
    "Data",
    "LibMismatch",
    "LossFn",
    "InsufficientIteration",
    "Optimizer",
    "ActivationFn",
)

CATEGORY_OF_FAULT_TYPE: dict[str, str] = {
    "R01-SuboptimalSplit": "Data",
    "R02-MissingPreprocessing": "Data",
    "R03-PythonMismatch": "LibMismatch",
    "R04-HardwareMismatch": "LibMismatch",
    "R05-OsMismatch": "LibMismatch",
    "R06-LibrariesMismatch": "LibMismatch",
    "R11-LossLinkage": "LossFn",
    "R16-LossActivationMismatch": "LossFn",
    "R17-InvalidIntermediate": "LossFn",
    "LossFn": "LossFn",
    "R14-InsufficientIteration": "InsufficientIteration",
    "InsufficientIteration": "InsufficientIteration",
    "R13-SuboptimalOptimizer": "Optimizer",
    "R15-SuboptimalLearningRate": "Optimizer",
    "Optimizer": "Optimizer",
    "LearningRate": "Optimizer",
    "R07-RedundantActivations": "ActivationFn",
    "R08-BiasInit": "ActivationFn",
    "R09-UnitsInit": "ActivationFn",
    "R10-NonLinearActivation": "ActivationFn",
    "R12-ProbabilityConversion": "ActivationFn",
    "R18-WrongActivation": "ActivationFn",
    "R19-MissingActivation": "ActivationFn",
    "ActivationFn": "ActivationFn",
}


def category_of(fault_type: str) -> str:
    try:
        return CATEGORY_OF_FAULT_TYPE[fault_type]
    except KeyError:
        raise UnknownCategoryMapping(fault_type) from None


# --- mutation operators ----------------------------------------------------

_INCOMPATIBLE_LOSS = {
    "categorical_crossentropy": "binary_crossentropy",
    "sparse_categorical_crossentropy": "binary_crossentropy",
    "binary_crossentropy": "categorical_crossentropy",
    "mse": "categorical_crossentropy",
    "mae": "categorical_crossentropy",
}

_UNKNOWN_OPTIMIZERS = ("gradmagic", "turboprop", "sgdplusplus")


def _mutate_loss(b: RunBundle, rng: random.Random) -> RunBundle:
    loss = normalize_loss(b.model.loss)
    new_loss = _INCOMPATIBLE_LOSS.get(loss, "binary_crossentropy")
    return replace(b, model=replace(b.model, loss=new_loss))


def _final_activation_index(b: RunBundle) -> int:
    for i in range(len(b.model.layers) - 1, -1, -1):
        layer = b.model.layers[i]
        if layer.kind == "activation" or layer.activation is not None:
            return i
        if layer.kind in ("dense", "conv", "embedding"):
            return i
    raise InapplicableOperator("model has no layer carrying an activation")


def _mutate_activation(b: RunBundle, rng: random.Random) -> RunBundle:
    if b.model.task not in CLASSIFICATION_TASKS:
        raise InapplicableOperator(
            f"task {b.model.task!r} has no output activation contract to violate"
        )
    i = _final_activation_index(b)
    layer = b.model.layers[i]
    current = (layer.activation or "").lower()
    if current == "softmax":
        choice = rng.choice(("remove", "sigmoid"))
    elif current == "sigmoid":
        choice = rng.choice(("remove", "relu"))
    else:
        choice = "remove"
    layers = list(b.model.layers)
    if choice == "remove":
        if layer.kind == "activation":
            del layers[i]
        else:
            layers[i] = replace(layer, activation=None)
    else:
        layers[i] = replace(layer, activation=choice)
    return replace(b, model=replace(b.model, layers=tuple(layers)))


def _mutate_learning_rate(b: RunBundle, rng: random.Random) -> RunBundle:
    if b.model.learning_rate is None:
        raise InapplicableOperator("bundle records no learning rate")
    factor = rng.choice((1000.0, 0.001))
    new_lr = b.model.learning_rate * factor
    kind = "lr_high" if factor > 1.0 else "lr_low"
    layer_names = tuple(lw.name for lw in b.trace[0].layers) if b.trace else ()
    trace = make_trace(kind, max(len(b.trace), 2), layer_names, rng.getrandbits(32))
    return replace(
        b,
        model=replace(b.model, learning_rate=new_lr),
        trace=trace,
    )


def _mutate_epochs(b: RunBundle, rng: random.Random) -> RunBundle:
    return replace(
        b,
        model=replace(b.model, epochs=1),
        trace=b.trace[:1],
    )


def _mutate_optimizer(b: RunBundle, rng: random.Random) -> RunBundle:
    name = rng.choice(_UNKNOWN_OPTIMIZERS)
    return replace(b, model=replace(b.model, optimizer_name=name))


def _mutate_split(b: RunBundle, rng: random.Random) -> RunBundle:
    total = b.dataset.n_train + b.dataset.n_test
    n_test = max(1, round(total * 0.02))
    return replace(
        b, dataset=replace(b.dataset, n_train=total - n_test, n_test=n_test)
    )


def _bump_minor(version: str) -> str:
    parts = version.split(".")
    parts[1] = str(int(parts[1]) + 1)
    return ".".join(parts)


def _mutate_library(b: RunBundle, rng: random.Random) -> RunBundle:
    if b.deploy_env is None:
        raise InapplicableOperator("bundle records no deployment environment")
    shared = sorted(set(b.train_env.libraries) & set(b.deploy_env.libraries))
    if not shared:
        raise InapplicableOperator("environments share no library to skew")
    lib = rng.choice(shared)
    libs = dict(b.deploy_env.libraries)
    libs[lib] = _bump_minor(libs[lib])
    return replace(b, deploy_env=replace(b.deploy_env, libraries=libs))


@dataclass(frozen=True)
class MutationOperator:
    op_id: str
    category: str
    transform: Callable[[RunBundle, random.Random], RunBundle]


OPERATORS: dict[str, MutationOperator] = {
    op.op_id: op
    for op in (
        MutationOperator("M-LOSS", "LossFn", _mutate_loss),
        MutationOperator("M-ACT", "ActivationFn", _mutate_activation),
        MutationOperator("M-LR", "Optimizer", _mutate_learning_rate),
        MutationOperator("M-EPOCH", "InsufficientIteration", _mutate_epochs),
        MutationOperator("M-OPT", "Optimizer", _mutate_optimizer),
        MutationOperator("M-SPLIT", "Data", _mutate_split),
        MutationOperator("M-LIB", "LibMismatch", _mutate_library),
    )
}

OPERATOR_IDS = tuple(OPERATORS)


@dataclass(frozen=True)
class MutationResult:
    mutant: RunBundle
    operator: str
    category: str


def mutate(b: RunBundle, op_id: str, seed: int) -> MutationResult:
    """Apply one operator; deterministic in (bundle, operator, seed)."""
    if op_id not in OPERATORS:
        raise KeyError(f"unknown mutation operator {op_id!r}")
    op = OPERATORS[op_id]
    rng = random.Random(f"{b.bundle_id}|{op_id}|{seed}")
    mutant = op.transform(b, rng)
    mutant = replace(
        mutant, bundle_id=f"{b.bundle_id}-{op_id.lower()}-s{seed}"
    )
    return MutationResult(mutant=mutant, operator=op_id, category=op.category)


def build_corpus(
    seed_bundles: Sequence[RunBundle],
    out_dir: Path | str,
    n_variants: int = 3,
    base_seed: int = 100,
    operators: Sequence[str] = OPERATOR_IDS,
) -> list[dict]:
    """Write mutants of every seed bundle plus an index; skips inapplicable ones.

    An existing index in out_dir is merged (same bundle_id replaces), so the
    corpus can be assembled one seed bundle at a time.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index: list[dict] = []
    if (out_dir / "index.json").exists():
        index = load_corpus_index(out_dir)
    for b in seed_bundles:
        for op_id in operators:
            for v in range(n_variants):
                try:
                    result = mutate(b, op_id, base_seed + v)
                except InapplicableOperator:
                    continue
                serialize_bundle(result.mutant, out_dir)
                index = [r for r in index if r["bundle_id"] != result.mutant.bundle_id]
                index.append(
                    {
                        "bundle_id": result.mutant.bundle_id,
                        "operator": result.operator,
                        "category": result.category,
                        "source": b.bundle_id,
                    }
                )
    index.sort(key=lambda r: r["bundle_id"])
    doc = {"schema_version": CORPUS_VERSION, "bundles": index}
    (out_dir / "index.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return index


def load_corpus_index(corpus_dir: Path | str) -> list[dict]:
    corpus_dir = Path(corpus_dir)
    path = corpus_dir / "index.json"
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise SchemaViolation("index.json", str(path), "corpus index missing") from None
    except json.JSONDecodeError as exc:
        raise SchemaViolation("index.json", str(path), f"not valid JSON: {exc}") from exc
    if doc.get("schema_version") != CORPUS_VERSION:
        raise SchemaViolation("index.json", "schema_version", f"expected {CORPUS_VERSION}")
    return list(doc.get("bundles", ()))


# --- scoring ---------------------------------------------------------------


@dataclass
class EvalRow:
    samples: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0

    @property
    def accuracy(self) -> float:
        return self.tp / self.samples if self.samples else 0.0


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    pr = tp / (tp + fp) if (tp + fp) else 0.0
    rc = tp / (tp + fn) if (tp + fn) else 0.0
    return pr, rc


def score(
    results: Sequence[tuple[str, Sequence[FaultFinding]]], top_k: int = 3
) -> dict[str, EvalRow]:
    """Aggregate detection counts per category from (truth, findings) pairs.

    A sample counts as detected when its injected category appears among the
    categories of the top-k findings; every other reported category is a
    false positive against that category's row.
    """
    rows = {cat: EvalRow() for cat in CATEGORIES}
    for truth, findings in results:
        if truth not in rows:
            raise UnknownCategoryMapping(truth)
        rows[truth].samples += 1
        reported = []
        for f in findings[:top_k]:
            cat = category_of(f.fault_type)
            if cat not in reported:
                reported.append(cat)
        if truth in reported:
            rows[truth].tp += 1
        else:
            rows[truth].fn += 1
        for cat in reported:
            if cat != truth:
                rows[cat].fp += 1
    return rows


def eval_table(rows: Mapping[str, EvalRow], top_k: int = 3) -> dict:
    """JSON document mirroring the detection table layout."""
    total_samples = sum(r.samples for r in rows.values())
    total_tp = sum(r.tp for r in rows.values())
    return {
        "schema_version": EVAL_VERSION,
        "top_k": top_k,
        "rows": {
            cat: {
                "samples": r.samples,
                "TP": r.tp,
                "FP": r.fp,
                "FN": r.fn,
                "PR": round(r.precision, 6),
                "RC": round(r.recall, 6),
            }
            for cat, r in rows.items()
        },
        "totals": {
            "samples": total_samples,
            "TP": total_tp,
            "accuracy": round(total_tp / total_samples, 6) if total_samples else 0.0,
        },
    }


def evaluate_corpus(
    corpus_dir: Path | str,
    opts: AnalysisOptions | None = None,
    top_k: int = 3,
) -> tuple[dict[str, EvalRow], list[dict]]:
    """Analyze every mutant in a corpus directory and score detections."""
    corpus_dir = Path(corpus_dir)
    index = load_corpus_index(corpus_dir)
    results = []
    detail = []
    for row in index:
        b = parse_bundle(corpus_dir / row["bundle_id"])
        analysis = analyze_bundle(b, opts)
        results.append((row["category"], analysis.findings))
        detail.append(
            {
                "bundle_id": row["bundle_id"],
                "category": row["category"],
                "operator": row["operator"],
                "top": [
                    {"fault_type": f.fault_type, "location": f.location, "score": f.score}
                    for f in analysis.findings[:top_k]
                ],
            }
        )
    return score(results, top_k=top_k), detail


ABLATION_STAGES = ("baseline", "no_static", "no_dynamic", "no_linkpred")


def ablate(
    corpus_dir: Path | str,
    opts: AnalysisOptions | None = None,
    top_k: int = 3,
) -> dict[str, dict]:
    """Re-run the corpus with each signal source disabled in turn."""
    base = opts or AnalysisOptions()
    out = {}
    for stage in ABLATION_STAGES:
        stage_opts = replace(
            base,
            skip_static=stage == "no_static" or base.skip_static,
            skip_dynamic=stage == "no_dynamic" or base.skip_dynamic,
            skip_linkpred=stage == "no_linkpred" or base.skip_linkpred,
        )
        rows, _ = evaluate_corpus(corpus_dir, stage_opts, top_k=top_k)
        detected = sum(r.tp for r in rows.values())
        out[stage] = {"detected": detected, "rows": rows}
    baseline = out["baseline"]["detected"]
    for stage in ABLATION_STAGES[1:]:
        out[stage]["reduction"] = baseline - out[stage]["detected"]
    return out


# --- exact independence test ----------------------------------------------


def fisher_exact(table: Sequence[Sequence[int]]) -> float:
    """Two-sided exact test on a 2x2 contingency table.

    All hypergeometric weights no more probable than the observed table
    (with a tiny relative slack against integer-ratio knife edges) are
    summed. Pure integer arithmetic until the final division.
    """
    try:
        (a, b), (c, d) = table
    except (TypeError, ValueError):
        raise ValueError("table must be a 2x2 of non-negative integers") from None
    cells = (a, b, c, d)
    if any(not isinstance(v, int) or isinstance(v, bool) or v < 0 for v in cells):
        raise ValueError("table must be a 2x2 of non-negative integers")
    r1, r2 = a + b, c + d
    c1, c2 = a + c, b + d
    n = r1 + r2
    if 0 in (r1, r2, c1, c2):
        return 1.0
    lo = max(0, r1 - c2)
    hi = min(r1, c1)
    observed = math.comb(c1, a) * math.comb(c2, r1 - a)
    numerator = 0
    for k in range(lo, hi + 1):
        w = math.comb(c1, k) * math.comb(c2, r1 - k)
        if w * 10_000_000 <= observed * 10_000_001:
            numerator += w
    return numerator / math.comb(n, r1)
