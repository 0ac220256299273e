"""Forward-chaining diagnosis rules over the knowledge graph.

Rules are native data: each has positive triple-pattern premises (variables
are "?name" strings), optional negated existence checks, and guards that see
only bound values. Firing materializes a Fault entity whose id hashes the
rule id plus the conclusion binding (fault type and location), so re-running
inference, reordering rules, or matching a rule through two of its clauses
always lands on the same entity. Rules never retract anything; inference
iterates to a fixed point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .errors import UnboundVariable
from .kg import (
    KnowledgeGraph,
    Literal,
    Triple,
    assert_fault,
    fault_entity,
    is_var,
    local_name,
)

CLASSIFICATION_TASKS = frozenset({"binary-classification", "multiclass-classification"})
CROSSENTROPY_LOSSES = frozenset(
    {"binary_crossentropy", "categorical_crossentropy", "sparse_categorical_crossentropy"}
)
CATEGORICAL_LOSSES = frozenset({"categorical_crossentropy", "sparse_categorical_crossentropy"})

_LOSS_ALIASES = {
    "mean_squared_error": "mse",
    "mean_absolute_error": "mae",
    "kullback_leibler_divergence": "kld",
    "log_cosh": "logcosh",
}


def normalize_loss(name: str) -> str:
    n = name.strip().lower()
    return _LOSS_ALIASES.get(n, n)


def normalize_optimizer(name: str) -> str:
    return name.strip().lower()


@dataclass(frozen=True)
class RulesConfig:
    split_low: float = 0.10
    split_high: float = 0.35
    data_range_limit: float = 10.0
    tau_slope: float = 0.01
    lr_low: float = 1e-6
    lr_high: float = 1.0
    known_losses: frozenset[str] = frozenset(
        {
            "binary_crossentropy",
            "categorical_crossentropy",
            "sparse_categorical_crossentropy",
            "mse",
            "mae",
            "huber",
            "hinge",
            "squared_hinge",
            "kld",
            "poisson",
            "logcosh",
            "cosine_similarity",
        }
    )
    known_optimizers: frozenset[str] = frozenset(
        {"sgd", "adam", "adamw", "adamax", "nadam", "rmsprop", "adagrad", "adadelta", "ftrl"}
    )
    nonlinear_activations: frozenset[str] = frozenset(
        {
            "relu",
            "sigmoid",
            "softmax",
            "tanh",
            "elu",
            "selu",
            "gelu",
            "softplus",
            "softsign",
            "leaky_relu",
            "swish",
        }
    )
    learnable_kinds: frozenset[str] = frozenset({"dense", "conv", "embedding"})
    stackable_kinds: frozenset[str] = frozenset({"dense", "conv"})
    constant_inits: frozenset[str] = frozenset({"zeros", "ones", "constant"})

    @classmethod
    def from_json(cls, path: str | Path) -> "RulesConfig":
        data = json.loads(Path(path).read_text())
        kwargs = {}
        for f in cls.__dataclass_fields__:
            if f in data:
                value = data[f]
                kwargs[f] = frozenset(value) if isinstance(value, list) else value
        return cls(**kwargs)


Guard = tuple[tuple[str, ...], Callable[..., bool]]
Pattern = tuple[object, object, object]


@dataclass(frozen=True)
class Clause:
    premises: tuple[Pattern, ...]
    guards: tuple[Guard, ...] = ()
    neg_premises: tuple[Pattern, ...] = ()
    message_fn: Callable[[dict], str] | None = None


@dataclass(frozen=True)
class Rule:
    rule_id: str
    name: str
    location_var: str
    clauses: tuple[Clause, ...]
    location_suffix: str | None = None

    @property
    def fault_type_id(self) -> str:
        return f"{self.rule_id}-{self.name}"


def _pattern_vars(pattern: Pattern) -> set[str]:
    return {term[1:] for term in pattern if is_var(term)}


def validate_rule(rule: Rule) -> None:
    """Reject rules whose guards, negations, or conclusion use unbound names."""
    for clause in rule.clauses:
        bound: set[str] = set()
        for premise in clause.premises:
            bound |= _pattern_vars(premise)
        if rule.location_var not in bound:
            raise UnboundVariable(rule.rule_id, rule.location_var)
        for vars_needed, _ in clause.guards:
            for v in vars_needed:
                if v not in bound:
                    raise UnboundVariable(rule.rule_id, v)


def deref(value: object) -> object:
    return value.value if isinstance(value, Literal) else value


def _substitute(pattern: Pattern, binding: dict) -> Pattern:
    out = []
    for term in pattern:
        if is_var(term) and term[1:] in binding:
            out.append(binding[term[1:]])
        else:
            out.append(term)
    return tuple(out)


def _match_clause(g: KnowledgeGraph, clause: Clause) -> list[dict]:
    bindings: list[dict] = [{}]
    for premise in clause.premises:
        extended: list[dict] = []
        for binding in bindings:
            for partial in g.query(_substitute(premise, binding)):
                merged = dict(binding)
                merged.update(partial)
                extended.append(merged)
        bindings = extended
        if not bindings:
            return []
    survivors = []
    for binding in bindings:
        if any(g.query(_substitute(neg, binding)) for neg in clause.neg_premises):
            continue
        ok = True
        for vars_needed, fn in clause.guards:
            if not fn(*(deref(binding[v]) for v in vars_needed)):
                ok = False
                break
        if ok:
            survivors.append(binding)
    return survivors


def fault_id(ns: str, rule: Rule, location: str) -> str:
    return fault_entity(ns, rule.fault_type_id, location)


def _apply_rule(g: KnowledgeGraph, rule: Rule) -> bool:
    changed = False
    for clause in rule.clauses:
        for binding in _match_clause(g, clause):
            location = binding[rule.location_var]
            message = clause.message_fn(binding) if clause.message_fn else rule.name
            fe, added = assert_fault(g, rule.fault_type_id, location, message)
            evidence = tuple(
                Triple(*_substitute(p, binding)) for p in clause.premises
            )
            merged = tuple(sorted(set(g.fault_evidence.get(fe, ()) + evidence), key=str))
            if merged != g.fault_evidence.get(fe):
                g.fault_evidence[fe] = merged
            changed = changed or added
    return changed


def infer_with_passes(g: KnowledgeGraph, rules: Sequence[Rule]) -> tuple[KnowledgeGraph, int]:
    """Run rules to a fixed point; returns the augmented copy and pass count."""
    for rule in rules:
        validate_rule(rule)
    out = g.copy()
    passes = 0
    while True:
        passes += 1
        changed = False
        for rule in rules:
            if _apply_rule(out, rule):
                changed = True
        if not changed:
            return out, passes


def infer(g: KnowledgeGraph, rules: Sequence[Rule]) -> KnowledgeGraph:
    return infer_with_passes(g, rules)[0]


@dataclass(frozen=True)
class FaultFact:
    fault_entity: str
    fault_type_id: str
    location: str
    messages: tuple[str, ...]
    evidence: tuple[Triple, ...]

    @property
    def rule_id(self) -> str:
        return self.fault_type_id.split("-", 1)[0]


def fault_facts(g: KnowledgeGraph) -> list[FaultFact]:
    """Collect materialized faults, sorted by fault type then location."""
    facts = []
    for fe in g.entities_of_type("Fault"):
        types = [deref(b["t"]) for b in g.query((fe, "faultType", "?t"))]
        locations = [b["l"] for b in g.query((fe, "locatedAt", "?l"))]
        messages = tuple(
            sorted(str(deref(b["m"])) for b in g.query((fe, "message", "?m")))
        )
        for t in types:
            for loc in locations:
                facts.append(
                    FaultFact(
                        fault_entity=fe,
                        fault_type_id=local_name(str(t)),
                        location=str(loc),
                        messages=messages,
                        evidence=g.fault_evidence.get(fe, ()),
                    )
                )
    return sorted(facts, key=lambda f: (f.fault_type_id, f.location))


def _major_minor(version: str) -> tuple[str, ...]:
    return tuple(version.strip().split(".")[:2])


def _severity(v1: str, v2: str) -> str:
    return "major" if v1.strip().split(".")[0] != v2.strip().split(".")[0] else "minor"


def builtin_rules(cfg: RulesConfig | None = None) -> list[Rule]:
    """The 19-rule diagnosis catalog, thresholds taken from cfg."""
    c = cfg or RulesConfig()

    def dyn_guard(label: str) -> Guard:
        return (("ft",), lambda ft, label=label: local_name(str(ft)) == label)

    def ce_violation(loss, fa, fu, enc) -> bool:
        n = normalize_loss(loss)
        if n == "binary_crossentropy":
            return not (fa == "sigmoid" and fu == 1)
        if n == "categorical_crossentropy":
            return not (fa == "softmax" and enc == "onehot")
        if n == "sparse_categorical_crossentropy":
            return not (fa == "softmax" and enc == "integer")
        return False

    rules = [
        Rule(
            rule_id="R01",
            name="SuboptimalSplit",
            location_var="d",
            location_suffix="split",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasDataset", "?d"),
                        ("?d", "testFraction", "?f"),
                        ("?d", "nTest", "?nt"),
                    ),
                    guards=(
                        (
                            ("f", "nt"),
                            lambda f, nt: nt > 0 and (f < c.split_low or f > c.split_high),
                        ),
                    ),
                    message_fn=lambda b: (
                        f"test fraction {deref(b['f']):.4g} is outside "
                        f"[{c.split_low:g}, {c.split_high:g}]"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R02",
            name="MissingPreprocessing",
            location_var="d",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasDataset", "?d"),
                        ("?d", "normalized", "?nz"),
                        ("?d", "featureMin", "?lo"),
                        ("?d", "featureMax", "?hi"),
                    ),
                    guards=(
                        (
                            ("nz", "lo", "hi"),
                            lambda nz, lo, hi: (not nz)
                            and (hi > c.data_range_limit or lo < -c.data_range_limit),
                        ),
                    ),
                    message_fn=lambda b: (
                        f"features span [{deref(b['lo']):g}, {deref(b['hi']):g}] "
                        f"without normalization"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R03",
            name="PythonMismatch",
            location_var="de",
            location_suffix="python_version",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasTrainEnv", "?te"),
                        ("?te", "pythonVersion", "?v1"),
                        ("?b", "hasDeployEnv", "?de"),
                        ("?de", "pythonVersion", "?v2"),
                    ),
                    guards=((("v1", "v2"), lambda v1, v2: _major_minor(v1) != _major_minor(v2)),),
                    message_fn=lambda b: (
                        f"python {deref(b['v1'])} at training vs {deref(b['v2'])} at deployment "
                        f"({_severity(deref(b['v1']), deref(b['v2']))} skew)"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R04",
            name="ArchMismatch",
            location_var="de",
            location_suffix="cpu_arch",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasTrainEnv", "?te"),
                        ("?te", "cpuArch", "?a1"),
                        ("?b", "hasDeployEnv", "?de"),
                        ("?de", "cpuArch", "?a2"),
                    ),
                    guards=((("a1", "a2"), lambda a1, a2: a1.strip() != a2.strip()),),
                    message_fn=lambda b: (
                        f"cpu architecture {deref(b['a1'])} at training vs "
                        f"{deref(b['a2'])} at deployment"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R05",
            name="OsMismatch",
            location_var="de",
            location_suffix="os_family",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasTrainEnv", "?te"),
                        ("?te", "osFamily", "?o1"),
                        ("?b", "hasDeployEnv", "?de"),
                        ("?de", "osFamily", "?o2"),
                    ),
                    guards=((("o1", "o2"), lambda o1, o2: o1 != o2),),
                    message_fn=lambda b: (
                        f"os {deref(b['o1'])} at training vs {deref(b['o2'])} at deployment"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R06",
            name="LibrariesMismatch",
            location_var="l2",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasTrainEnv", "?te"),
                        ("?te", "installedLibrary", "?l1"),
                        ("?l1", "libraryVersion", "?v1"),
                        ("?b", "hasDeployEnv", "?de"),
                        ("?de", "installedLibrary", "?l2"),
                        ("?l2", "libraryVersion", "?v2"),
                    ),
                    guards=(
                        (
                            ("l1", "l2", "v1", "v2"),
                            lambda l1, l2, v1, v2: local_name(str(l1)) == local_name(str(l2))
                            and v1.strip() != v2.strip(),
                        ),
                    ),
                    message_fn=lambda b: (
                        f"library {local_name(str(b['l2']))}: {deref(b['v1'])} at training vs "
                        f"{deref(b['v2'])} at deployment "
                        f"({_severity(deref(b['v1']), deref(b['v2']))} skew)"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R07",
            name="RedundantActivations",
            location_var="l2",
            clauses=(
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l1"),
                        ("?l1", "layerIndex", "?i"),
                        ("?l1", "layerActivation", "?a1"),
                        ("?m", "hasLayer", "?l2"),
                        ("?l2", "layerIndex", "?j"),
                        ("?l2", "layerKind", "?k2"),
                    ),
                    guards=(
                        (
                            ("i", "j", "a1", "k2"),
                            lambda i, j, a1, k2: j == i + 1
                            and k2 == "activation"
                            and a1 in c.nonlinear_activations,
                        ),
                    ),
                    message_fn=lambda b: (
                        f"activation layer right after a layer already using "
                        f"{deref(b['a1'])}"
                    ),
                ),
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l1"),
                        ("?l1", "layerIndex", "?i"),
                        ("?l1", "layerKind", "?k1"),
                        ("?m", "hasLayer", "?l2"),
                        ("?l2", "layerIndex", "?j"),
                        ("?l2", "layerKind", "?k2"),
                    ),
                    guards=(
                        (
                            ("i", "j", "k1", "k2"),
                            lambda i, j, k1, k2: j == i + 1
                            and k1 == "activation"
                            and k2 == "activation",
                        ),
                    ),
                    message_fn=lambda b: "two consecutive activation layers",
                ),
            ),
        ),
        Rule(
            rule_id="R08",
            name="BiasInit",
            location_var="l",
            location_suffix="bias_init",
            clauses=(
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l"),
                        ("?l", "layerKind", "?k"),
                        ("?l", "layerBiasInit", "?bi"),
                    ),
                    guards=(
                        (
                            ("k", "bi"),
                            lambda k, bi: k in c.learnable_kinds and bi != "zeros",
                        ),
                    ),
                    message_fn=lambda b: f"bias initialized with {deref(b['bi'])!r} instead of zeros",
                ),
            ),
        ),
        Rule(
            rule_id="R09",
            name="UnitsInit",
            location_var="l",
            location_suffix="kernel_init",
            clauses=(
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l"),
                        ("?l", "layerKind", "?k"),
                        ("?l", "layerKernelInit", "?ki"),
                    ),
                    guards=(
                        (
                            ("k", "ki"),
                            lambda k, ki: k in c.learnable_kinds and ki in c.constant_inits,
                        ),
                    ),
                    message_fn=lambda b: (
                        f"weights initialized with constant scheme {deref(b['ki'])!r}"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R10",
            name="NonLinearActivation",
            location_var="l",
            location_suffix="activation",
            clauses=(
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l"),
                        ("?l", "layerIndex", "?i"),
                        ("?l", "layerKind", "?k"),
                        ("?l", "layerActivation", "?a"),
                        ("?m", "hasLayer", "?l2"),
                        ("?l2", "layerIndex", "?j"),
                        ("?l2", "layerKind", "?k2"),
                    ),
                    guards=(
                        (
                            ("i", "j", "k", "k2", "a"),
                            lambda i, j, k, k2, a: k in c.stackable_kinds
                            and k2 in c.stackable_kinds
                            and j > i
                            and a == "linear",
                        ),
                    ),
                    message_fn=lambda b: "hidden layer uses a linear activation",
                ),
                Clause(
                    premises=(
                        ("?m", "hasLayer", "?l"),
                        ("?l", "layerIndex", "?i"),
                        ("?l", "layerKind", "?k"),
                        ("?m", "hasLayer", "?l2"),
                        ("?l2", "layerIndex", "?j"),
                        ("?l2", "layerKind", "?k2"),
                    ),
                    neg_premises=(("?l", "layerActivation", "?any"),),
                    guards=(
                        (
                            ("i", "j", "k", "k2"),
                            lambda i, j, k, k2: k in c.stackable_kinds
                            and k2 in c.stackable_kinds
                            and j > i,
                        ),
                    ),
                    message_fn=lambda b: "hidden layer has no activation",
                ),
            ),
        ),
        Rule(
            rule_id="R11",
            name="LossLinkage",
            location_var="m",
            location_suffix="loss",
            clauses=(
                Clause(
                    premises=(("?b", "hasModel", "?m"), ("?m", "usesLoss", "?loss")),
                    guards=(
                        (("loss",), lambda loss: normalize_loss(loss) not in c.known_losses),
                    ),
                    message_fn=lambda b: (
                        f"loss {deref(b['loss'])!r} is absent or unknown"
                        if deref(b["loss"])
                        else "no loss function configured"
                    ),
                ),
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "usesLoss", "?loss"),
                        ("?m", "finalActivation", "?fa"),
                        ("?m", "finalUnits", "?fu"),
                        ("?b", "hasDataset", "?d"),
                        ("?d", "labelEncoding", "?enc"),
                    ),
                    guards=(
                        (
                            ("loss", "fa", "fu", "enc"),
                            lambda loss, fa, fu, enc: normalize_loss(loss) in CROSSENTROPY_LOSSES
                            and ce_violation(loss, fa, fu, enc),
                        ),
                    ),
                    message_fn=lambda b: (
                        f"loss {deref(b['loss'])} is incompatible with final activation "
                        f"{deref(b['fa']) or 'absent'} / {deref(b['fu'])} output unit(s) / "
                        f"{deref(b['enc'])} labels"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R12",
            name="ProbabilityConversion",
            location_var="fl",
            location_suffix="activation",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "taskType", "?t"),
                        ("?m", "usesLoss", "?loss"),
                        ("?m", "finalActivation", "?fa"),
                        ("?m", "hasFinalLayer", "?fl"),
                    ),
                    guards=(
                        (
                            ("t", "loss", "fa"),
                            lambda t, loss, fa: t in CLASSIFICATION_TASKS
                            and normalize_loss(loss) in CROSSENTROPY_LOSSES
                            and fa not in ("softmax", "sigmoid"),
                        ),
                    ),
                    message_fn=lambda b: (
                        f"classifier output is {deref(b['fa']) or 'missing an activation'}, "
                        f"not a probability (softmax/sigmoid)"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R13",
            name="SuboptimalOptimizer",
            location_var="m",
            location_suffix="optimizer",
            clauses=(
                Clause(
                    premises=(("?b", "hasModel", "?m"), ("?m", "usesOptimizer", "?o")),
                    guards=(
                        (("o",), lambda o: normalize_optimizer(o) not in c.known_optimizers),
                    ),
                    message_fn=lambda b: (
                        f"optimizer {deref(b['o'])!r} is absent or unknown"
                        if deref(b["o"])
                        else "no optimizer configured"
                    ),
                ),
                Clause(
                    premises=(("?m", "predictedDynamicFault", "?ft"),),
                    guards=(dyn_guard("Optimizer"),),
                    message_fn=lambda b: "training dynamics point at the optimizer",
                ),
            ),
        ),
        Rule(
            rule_id="R14",
            name="InsufficientIteration",
            location_var="m",
            location_suffix="epochs",
            clauses=(
                Clause(
                    premises=(("?m", "predictedDynamicFault", "?ft"),),
                    guards=(dyn_guard("InsufficientIteration"),),
                    message_fn=lambda b: "training dynamics look stopped too early",
                ),
                Clause(
                    premises=(("?m", "lastKLossSlope", "?s"),),
                    guards=((("s",), lambda s: s < -c.tau_slope),),
                    message_fn=lambda b: (
                        f"loss was still falling at {deref(b['s']):.4g} per epoch when "
                        f"training ended"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R15",
            name="SuboptimalLearningRate",
            location_var="m",
            location_suffix="learning_rate",
            clauses=(
                Clause(
                    premises=(("?m", "predictedDynamicFault", "?ft"),),
                    guards=(dyn_guard("LearningRate"),),
                    message_fn=lambda b: "training dynamics point at the learning rate",
                ),
                Clause(
                    premises=(("?m", "hasLearningRate", "?lr"),),
                    guards=((("lr",), lambda lr: lr < c.lr_low or lr > c.lr_high),),
                    message_fn=lambda b: (
                        f"learning rate {deref(b['lr']):g} is outside "
                        f"[{c.lr_low:g}, {c.lr_high:g}]"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R16",
            name="LossActivationMismatch",
            location_var="m",
            location_suffix="loss",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "usesLoss", "?loss"),
                        ("?m", "finalActivation", "?fa"),
                    ),
                    guards=(
                        (
                            ("loss", "fa"),
                            lambda loss, fa: fa == "softmax"
                            and normalize_loss(loss) == "binary_crossentropy",
                        ),
                    ),
                    message_fn=lambda b: "binary crossentropy behind a softmax output",
                ),
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "usesLoss", "?loss"),
                        ("?m", "finalActivation", "?fa"),
                        ("?m", "finalUnits", "?fu"),
                    ),
                    guards=(
                        (
                            ("loss", "fa", "fu"),
                            lambda loss, fa, fu: fa == "sigmoid"
                            and fu > 1
                            and normalize_loss(loss) in CATEGORICAL_LOSSES,
                        ),
                    ),
                    message_fn=lambda b: (
                        f"categorical loss behind a {deref(b['fu'])}-unit sigmoid output"
                    ),
                ),
            ),
        ),
        Rule(
            rule_id="R17",
            name="InvalidIntermediate",
            location_var="m",
            clauses=(
                Clause(
                    premises=(("?m", "hasNonFiniteAt", "?e"),),
                    message_fn=lambda b: f"non-finite trace value at epoch {deref(b['e'])}",
                ),
            ),
        ),
        Rule(
            rule_id="R18",
            name="WrongActivation",
            location_var="fl",
            location_suffix="activation",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasDataset", "?d"),
                        ("?d", "numClasses", "?nc"),
                        ("?b", "hasModel", "?m"),
                        ("?m", "finalActivation", "?fa"),
                        ("?m", "hasFinalLayer", "?fl"),
                    ),
                    guards=(
                        (("nc", "fa"), lambda nc, fa: nc > 2 and fa == "sigmoid"),
                    ),
                    message_fn=lambda b: (
                        f"sigmoid output for {deref(b['nc'])} classes (needs softmax)"
                    ),
                ),
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "taskType", "?t"),
                        ("?m", "finalActivation", "?fa"),
                        ("?m", "hasFinalLayer", "?fl"),
                    ),
                    guards=(
                        (("t", "fa"), lambda t, fa: t in CLASSIFICATION_TASKS and fa == "relu"),
                    ),
                    message_fn=lambda b: "relu output on a classification task",
                ),
                Clause(
                    premises=(
                        ("?m", "predictedDynamicFault", "?ft"),
                        ("?m", "hasFinalLayer", "?fl"),
                    ),
                    guards=(dyn_guard("ActivationFn"),),
                    message_fn=lambda b: "training dynamics point at the activation function",
                ),
            ),
        ),
        Rule(
            rule_id="R19",
            name="MissingActivation",
            location_var="m",
            location_suffix="layers",
            clauses=(
                Clause(
                    premises=(
                        ("?b", "hasModel", "?m"),
                        ("?m", "hasAnyActivation", "?h"),
                    ),
                    guards=((("h",), lambda h: h is False),),
                    message_fn=lambda b: "no layer in the model applies any activation",
                ),
            ),
        ),
    ]
    for rule in rules:
        validate_rule(rule)
    return rules


RULE_IDS = tuple(f"R{i:02d}" for i in range(1, 20))

DYNAMIC_RULE_FOR_LABEL = {
    "Optimizer": "R13",
    "InsufficientIteration": "R14",
    "LearningRate": "R15",
    "ActivationFn": "R18",
    "LossFn": None,
}
