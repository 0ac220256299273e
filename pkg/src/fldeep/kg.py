"""Knowledge graph over a run bundle: triples, queries, N-Triples export.

Entities are IRI strings under a per-bundle namespace (fl://<bundle_id>/...),
predicates are short names that get IRI-ized only at export, and literal
objects are wrapped in Literal so a string literal can never be confused
with an entity id. Every non-literal entity carries exactly one type tag,
kept beside the triple set (types are metadata, not facts, so fact-count
invariants stay simple).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .bundle import RunBundle, test_fraction
from .dynvote import DynamicFault
from .errors import InvariantViolation, SchemaViolation

ENTITY_TYPES = (
    "Dataset",
    "Model",
    "Layer",
    "TrainEnv",
    "DeployEnv",
    "Library",
    "FaultType",
    "Bundle",
    "Fault",
)

# layer kinds that own trainable parameters; rules about weights and
# activations quantify over these
LEARNABLE_KINDS = frozenset({"dense", "conv", "embedding"})
# layer kinds that pass activations through untouched when locating the
# activation in effect at the model output
TRANSPARENT_KINDS = frozenset({"dropout", "flatten", "pooling", "other"})

SLOPE_WINDOW = 5


class Literal(NamedTuple):
    value: str | int | float | bool


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str | Literal


def is_var(term: object) -> bool:
    return isinstance(term, str) and term.startswith("?")


@dataclass
class KnowledgeGraph:
    namespace: str
    triples: set[Triple] = field(default_factory=set)
    entity_types: dict[str, str] = field(default_factory=dict)
    fault_evidence: dict[str, tuple[Triple, ...]] = field(default_factory=dict)

    def add_entity(self, entity: str, type_tag: str) -> str:
        if type_tag not in ENTITY_TYPES:
            raise InvariantViolation(f"unknown entity type tag {type_tag!r}")
        existing = self.entity_types.get(entity)
        if existing is not None and existing != type_tag:
            raise InvariantViolation(
                f"entity {entity} already typed {existing}, cannot retype to {type_tag}"
            )
        self.entity_types[entity] = type_tag
        return entity

    def add(self, subject: str, predicate: str, obj: str | Literal) -> None:
        if not subject or not predicate:
            raise InvariantViolation("triple subject and predicate must be non-empty")
        if isinstance(subject, Literal):
            raise InvariantViolation("literals cannot be subjects")
        if not isinstance(obj, Literal) and obj not in self.entity_types:
            raise InvariantViolation(f"object entity {obj!r} has no type tag")
        if subject not in self.entity_types:
            raise InvariantViolation(f"subject entity {subject!r} has no type tag")
        self.triples.add(Triple(subject, predicate, obj))

    def has(self, subject: str, predicate: str, obj: str | Literal) -> bool:
        return Triple(subject, predicate, obj) in self.triples

    def query(self, pattern: Sequence[object]) -> list[dict[str, object]]:
        """Match one (s, p, o) pattern; ?names are variables.

        Returns one binding dict per match, sorted for determinism.
        """
        s, p, o = pattern
        results = []
        for t in self.triples:
            binding: dict[str, object] = {}
            ok = True
            for term, value in ((s, t.subject), (p, t.predicate), (o, t.object)):
                if is_var(term):
                    name = term[1:]
                    if name in binding and binding[name] != value:
                        ok = False
                        break
                    if name:
                        binding[name] = value
                elif term != value:
                    ok = False
                    break
            if ok:
                results.append(binding)
        return sorted(results, key=lambda b: tuple(_sort_key(b[k]) for k in sorted(b)))

    def entities_of_type(self, type_tag: str) -> list[str]:
        return sorted(e for e, t in self.entity_types.items() if t == type_tag)

    def copy(self) -> "KnowledgeGraph":
        return KnowledgeGraph(
            namespace=self.namespace,
            triples=set(self.triples),
            entity_types=dict(self.entity_types),
            fault_evidence=dict(self.fault_evidence),
        )


def _sort_key(value: object) -> tuple:
    if isinstance(value, Literal):
        return (1, str(value.value))
    return (0, str(value))


def local_name(entity: str) -> str:
    """Last path segment of an entity IRI."""
    return entity.rstrip("/").rsplit("/", 1)[-1]


def namespace_for(bundle_id: str) -> str:
    return f"fl://{bundle_id}/"


def fault_type_entity(ns: str, fault_type_id: str) -> str:
    return f"{ns}fault-type/{fault_type_id}"


def fault_entity(ns: str, fault_type_id: str, location: str) -> str:
    """Deterministic fault id: one fault per (fault type, location) pair."""
    head = fault_type_id.split("-", 1)[0]
    digest = hashlib.sha1(f"{fault_type_id}|{location}".encode()).hexdigest()[:12]
    return f"{ns}fault/{head}/{digest}"


def assert_fault(
    g: KnowledgeGraph, fault_type_id: str, location: str, message: str
) -> tuple[str, bool]:
    """Materialize a fault at an already-typed location entity.

    Returns the fault entity and whether any triple was new.
    """
    ft = fault_type_entity(g.namespace, fault_type_id)
    g.add_entity(ft, "FaultType")
    fe = fault_entity(g.namespace, fault_type_id, location)
    g.add_entity(fe, "Fault")
    changed = False
    for t in (
        Triple(fe, "faultType", ft),
        Triple(fe, "locatedAt", location),
        Triple(fe, "message", Literal(message)),
    ):
        if t not in g.triples:
            g.triples.add(t)
            changed = True
    return fe, changed


def last_k_loss_slope(losses: Sequence[float]) -> float:
    """Mean per-epoch change of the loss over the trailing window.

    (loss[n-1] - loss[n-1-k]) / k with k = min(5, n-1); 0 for a single epoch.
    """
    n = len(losses)
    if n <= 1:
        return 0.0
    k = min(SLOPE_WINDOW, n - 1)
    return (losses[n - 1] - losses[n - 1 - k]) / k


def _final_activation(b: RunBundle) -> tuple[str, int | None]:
    """Activation in effect at the model output and the index of its layer.

    Walks backwards past pass-through layers; stops at the first activation
    layer or parameterized layer. Returns ("", index) when that layer has no
    activation, ("", None) when nothing relevant exists.
    """
    for i in range(len(b.model.layers) - 1, -1, -1):
        layer = b.model.layers[i]
        if layer.kind == "activation":
            return (layer.activation or "", i)
        if layer.kind in LEARNABLE_KINDS:
            return (layer.activation or "", i)
        # pass-through kinds with an explicit activation still count
        if layer.activation:
            return (layer.activation, i)
    return ("", None)


def _final_units(b: RunBundle) -> int:
    for layer in reversed(b.model.layers):
        if layer.kind in LEARNABLE_KINDS and layer.units is not None:
            return layer.units
    return 0


def build_kg(b: RunBundle, dyn: Iterable[DynamicFault] = ()) -> KnowledgeGraph:
    """Translate a bundle plus predicted dynamic labels into facts."""
    ns = namespace_for(b.bundle_id)
    g = KnowledgeGraph(namespace=ns)
    bundle_e = g.add_entity(f"{ns}bundle", "Bundle")
    dataset_e = g.add_entity(f"{ns}dataset", "Dataset")
    model_e = g.add_entity(f"{ns}model", "Model")
    train_e = g.add_entity(f"{ns}env/train", "TrainEnv")

    g.add(bundle_e, "hasDataset", dataset_e)
    g.add(bundle_e, "hasModel", model_e)
    g.add(bundle_e, "hasTrainEnv", train_e)

    d = b.dataset
    g.add(dataset_e, "nTrain", Literal(d.n_train))
    g.add(dataset_e, "nTest", Literal(d.n_test))
    g.add(dataset_e, "nFeatures", Literal(d.n_features))
    g.add(dataset_e, "testFraction", Literal(test_fraction(d)))
    g.add(dataset_e, "featureMin", Literal(d.feature_min))
    g.add(dataset_e, "featureMax", Literal(d.feature_max))
    g.add(dataset_e, "normalized", Literal(d.normalized))
    g.add(dataset_e, "labelEncoding", Literal(d.label_encoding))
    if d.num_classes is not None:
        g.add(dataset_e, "numClasses", Literal(d.num_classes))

    m = b.model
    g.add(model_e, "usesLoss", Literal(m.loss))
    g.add(model_e, "usesOptimizer", Literal(m.optimizer_name))
    if m.learning_rate is not None:
        g.add(model_e, "hasLearningRate", Literal(m.learning_rate))
    g.add(model_e, "epochs", Literal(m.epochs))
    g.add(model_e, "batchSize", Literal(m.batch_size))
    g.add(model_e, "taskType", Literal(m.task))

    layer_entities = []
    for i, layer in enumerate(m.layers):
        layer_e = g.add_entity(f"{ns}model/layer/{i}", "Layer")
        layer_entities.append(layer_e)
        g.add(model_e, "hasLayer", layer_e)
        g.add(layer_e, "layerIndex", Literal(i))
        g.add(layer_e, "layerKind", Literal(layer.kind))
        if layer.units is not None:
            g.add(layer_e, "layerUnits", Literal(layer.units))
        if layer.activation is not None:
            g.add(layer_e, "layerActivation", Literal(layer.activation))
        if layer.kernel_init is not None:
            g.add(layer_e, "layerKernelInit", Literal(layer.kernel_init))
        if layer.bias_init is not None:
            g.add(layer_e, "layerBiasInit", Literal(layer.bias_init))

    # derived model-level facts: rule guards only see bound literals, so
    # aggregate properties of the layer stack are materialized here
    final_act, final_idx = _final_activation(b)
    g.add(model_e, "finalActivation", Literal(final_act))
    g.add(model_e, "finalUnits", Literal(_final_units(b)))
    if final_idx is not None:
        g.add(model_e, "hasFinalLayer", layer_entities[final_idx])
    has_any = any(
        (layer.activation not in (None, "")) or layer.kind == "activation" for layer in m.layers
    )
    g.add(model_e, "hasAnyActivation", Literal(has_any))

    def _env_facts(env_e: str, env) -> None:
        g.add(env_e, "pythonVersion", Literal(env.python_version))
        g.add(env_e, "osFamily", Literal(env.os_family))
        g.add(env_e, "cpuArch", Literal(env.cpu_arch))
        for lib, version in sorted(env.libraries.items()):
            lib_e = g.add_entity(f"{env_e}/lib/{lib}", "Library")
            g.add(env_e, "installedLibrary", lib_e)
            g.add(lib_e, "libraryVersion", Literal(version))

    _env_facts(train_e, b.train_env)
    if b.deploy_env is not None:
        deploy_e = g.add_entity(f"{ns}env/deploy", "DeployEnv")
        g.add(bundle_e, "hasDeployEnv", deploy_e)
        _env_facts(deploy_e, b.deploy_env)

    for rec in b.trace:
        metrics = [rec.loss, rec.accuracy, rec.val_loss, rec.val_accuracy]
        metrics.extend(v for lw in rec.layers for v in (lw.weight_mean_abs, lw.weight_std, lw.bias_mean_abs))
        if any(v is not None and not math.isfinite(v) for v in metrics):
            g.add(model_e, "hasNonFiniteAt", Literal(rec.epoch))
    g.add(model_e, "lastKLossSlope", Literal(last_k_loss_slope([rec.loss for rec in b.trace])))

    for label in sorted(set(dyn), key=lambda l: l.value):
        ft = g.add_entity(fault_type_entity(ns, label.value), "FaultType")
        g.add(model_e, "predictedDynamicFault", ft)

    return g


def build_dynamic_kg(b: RunBundle, dyn: Iterable[DynamicFault] = ()) -> KnowledgeGraph:
    """A graph carrying only the dynamic fault predictions for a bundle.

    Used to measure what the pipeline localizes when every recorded static
    fact is withheld: the model entity exists, but nothing about the bundle
    is asserted beyond the classifier votes.
    """
    ns = namespace_for(b.bundle_id)
    g = KnowledgeGraph(namespace=ns)
    g.add_entity(f"{ns}bundle", "Bundle")
    model_e = g.add_entity(f"{ns}model", "Model")
    for label in sorted(set(dyn), key=lambda l: l.value):
        ft = g.add_entity(fault_type_entity(ns, label.value), "FaultType")
        g.add(model_e, "predictedDynamicFault", ft)
    return g


def format_triple(t: Triple) -> str:
    """One-line human-readable rendering, used for finding evidence."""
    if isinstance(t.object, Literal):
        v = t.object.value
        if isinstance(v, str):
            obj = f'"{v}"'
        elif isinstance(v, bool):
            obj = str(v).lower()
        else:
            obj = str(v)
    else:
        obj = str(t.object)
    return f"{t.subject} {t.predicate} {obj}"


# --- N-Triples rendering -------------------------------------------------

_XSD = "http://www.w3.org/2001/XMLSchema#"


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapping = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}
            if nxt in mapping:
                out.append(mapping[nxt])
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _float_lexical(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if value == math.inf:
        return "INF"
    if value == -math.inf:
        return "-INF"
    return repr(value)


def _render_object(obj: str | Literal) -> str:
    if not isinstance(obj, Literal):
        return f"<{obj}>"
    v = obj.value
    if isinstance(v, bool):
        return f'"{str(v).lower()}"^^<{_XSD}boolean>'
    if isinstance(v, int):
        return f'"{v}"^^<{_XSD}integer>'
    if isinstance(v, float):
        return f'"{_float_lexical(v)}"^^<{_XSD}double>'
    return f'"{_escape(v)}"'


def predicate_iri(ns: str, predicate: str) -> str:
    return f"{ns}vocab/{predicate}"


def export_ntriples(g: KnowledgeGraph) -> bytes:
    """Canonical N-Triples: one line per triple, bytewise sorted."""
    lines = set()
    for t in g.triples:
        line = f"<{t.subject}> <{predicate_iri(g.namespace, t.predicate)}> {_render_object(t.object)} ."
        lines.add(line.encode())
    return b"".join(line + b"\n" for line in sorted(lines))


def _parse_term(token: str) -> str | Literal:
    if token.startswith("<") and token.endswith(">"):
        return token[1:-1]
    if token.startswith('"'):
        end = 1
        while end < len(token):
            if token[end] == '"' and token[end - 1] != "\\":
                break
            end += 1
        body = _unescape(token[1:end])
        suffix = token[end + 1 :]
        if not suffix:
            return Literal(body)
        if suffix == f"^^<{_XSD}boolean>":
            return Literal(body == "true")
        if suffix == f"^^<{_XSD}integer>":
            return Literal(int(body))
        if suffix == f"^^<{_XSD}double>":
            if body == "NaN":
                return Literal(math.nan)
            if body == "INF":
                return Literal(math.inf)
            if body == "-INF":
                return Literal(-math.inf)
            return Literal(float(body))
        raise SchemaViolation("ntriples", "literal", f"unknown datatype suffix {suffix!r}")
    raise SchemaViolation("ntriples", "term", f"cannot parse term {token!r}")


def parse_ntriples(blob: bytes, namespace: str | None = None) -> list[Triple]:
    """Parse exporter-shaped N-Triples back into triples.

    Predicate IRIs under <ns>vocab/ are shortened back to bare names when
    the namespace is supplied or inferable.
    """
    triples = []
    for raw in blob.decode().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.endswith(" ."):
            raise SchemaViolation("ntriples", "line", f"missing terminator: {line!r}")
        body = line[:-2]
        if not body.startswith("<"):
            raise SchemaViolation("ntriples", "subject", f"expected IRI: {body!r}")
        s_end = body.index(">")
        subject = body[1:s_end]
        rest = body[s_end + 1 :].strip()
        p_end = rest.index(">")
        predicate = rest[1:p_end]
        obj_token = rest[p_end + 1 :].strip()
        marker = "vocab/"
        if namespace is not None and predicate.startswith(namespace + marker):
            predicate = predicate[len(namespace) + len(marker) :]
        elif namespace is None and marker in predicate:
            predicate = predicate.rsplit(marker, 1)[1]
        triples.append(Triple(subject, predicate, _parse_term(obj_token)))
    return triples
