"""End-to-end analysis of one recorded run bundle.

Order of play: trace features feed the voting ensemble, its labels enter the
knowledge graph beside the recorded facts, the rule base runs to fixed point,
link prediction proposes unasserted fault edges, and everything lands in one
ranked findings list.

Merge policy, in two deliberate asymmetries. A predicted dynamic label only
becomes its own finding when the rule that normally confirms it stayed
silent; otherwise the rule finding already covers it at a higher tier. Link
suggestions are merged only when their fault type is already asserted on a
component of the same type: embeddings generalize a confirmed fault edge to
sibling components, but they never introduce an accusation no other signal
raised, and they never touch a bundle that looks clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

from . import synth
from .bundle import RunBundle
from .dynvote import (
    LABEL_ORDER,
    DynamicFault,
    EnsembleModel,
    predict_faults,
    train_ensemble,
)
from .errors import EmptyTrace
from .features import FeatureVector, extract_features
from .kg import KnowledgeGraph, Triple, build_dynamic_kg, build_kg, format_triple
from .linkpred import LinkModel, LinkSuggestion, suggest_edges, train_linkpred
from .ranking import (
    FaultFinding,
    Tier,
    build_finding,
    entity_path,
    rank,
)
from .rules import (
    DYNAMIC_RULE_FOR_LABEL,
    Rule,
    RulesConfig,
    builtin_rules,
    fault_facts,
    infer_with_passes,
)

DEFAULT_ENSEMBLE_SEED = 7
DEFAULT_LINK_SEED = 5


@lru_cache(maxsize=1)
def default_ensemble() -> EnsembleModel:
    """Ensemble trained on the shipped synthetic corpus; deterministic."""
    return train_ensemble(synth.training_corpus(), seed=DEFAULT_ENSEMBLE_SEED)


@lru_cache(maxsize=1)
def default_link_model() -> LinkModel:
    """Link predictor trained on the shipped graph corpus; deterministic."""
    return train_linkpred(synth.linkpred_corpus(), dim=32, seed=DEFAULT_LINK_SEED)


@dataclass
class AnalysisOptions:
    ensemble: EnsembleModel | None = None
    link_model: LinkModel | None = None
    rules_config: RulesConfig = field(default_factory=RulesConfig)
    rules: Sequence[Rule] | None = None
    priors: Mapping[str, float] | None = None
    skip_dynamic: bool = False
    skip_linkpred: bool = False
    skip_static: bool = False
    link_tau: float | None = None


@dataclass(frozen=True)
class AnalysisResult:
    bundle_id: str
    findings: tuple[FaultFinding, ...]
    graph: KnowledgeGraph
    dynamic_labels: tuple[DynamicFault, ...]
    suggestions: tuple[LinkSuggestion, ...]
    features: FeatureVector | None
    passes: int


def _predict_labels(
    b: RunBundle, opts: AnalysisOptions
) -> tuple[tuple[DynamicFault, ...], FeatureVector | None]:
    if opts.skip_dynamic:
        return (), None
    try:
        fv = extract_features(b)
    except EmptyTrace:
        return (), None
    model = opts.ensemble if opts.ensemble is not None else default_ensemble()
    labels = predict_faults(model, fv)
    ordered = tuple(sorted(labels, key=LABEL_ORDER.index))
    return ordered, fv


def _rule_findings(
    g: KnowledgeGraph, rules: Sequence[Rule], priors: Mapping[str, float] | None
) -> list[FaultFinding]:
    suffix_by_rule = {r.rule_id: r.location_suffix for r in rules}
    out = []
    for fact in fault_facts(g):
        out.append(
            build_finding(
                fault_type=fact.fault_type_id,
                location=entity_path(g, fact.location, suffix_by_rule.get(fact.rule_id)),
                tier=Tier.RULE,
                message="; ".join(fact.messages),
                evidence=tuple(format_triple(t) for t in fact.evidence),
                priors=priors,
            )
        )
    return out


def _dynamic_findings(
    g: KnowledgeGraph,
    labels: Sequence[DynamicFault],
    covered_rule_ids: set[str],
    priors: Mapping[str, float] | None,
) -> list[FaultFinding]:
    out = []
    model_e = f"{g.namespace}model"
    for label in labels:
        mapped = DYNAMIC_RULE_FOR_LABEL[label.value]
        if mapped is not None and mapped in covered_rule_ids:
            continue
        out.append(
            build_finding(
                fault_type=label.value,
                location="model",
                tier=Tier.DYNAMIC,
                message=f"training dynamics carry the signature of a {label.value} fault",
                evidence=(
                    format_triple(
                        Triple(model_e, "predictedDynamicFault",
                               f"{g.namespace}fault-type/{label.value}")
                    ),
                ),
                priors=priors,
            )
        )
    return out


def _link_findings(
    g: KnowledgeGraph,
    suggestions: Sequence[LinkSuggestion],
    echo_types: Mapping[str, set[str]],
    taken: set[tuple[str, str]],
    priors: Mapping[str, float] | None,
) -> list[FaultFinding]:
    out = []
    for s in suggestions:
        if g.entity_types.get(s.component) not in echo_types.get(s.fault_type_id, ()):
            continue
        location = entity_path(g, s.component)
        if (s.fault_type_id, location) in taken:
            continue
        out.append(
            build_finding(
                fault_type=s.fault_type_id,
                location=location,
                tier=Tier.LINK_PREDICTED,
                message=(
                    f"components of this kind carried {s.fault_type_id} in related runs "
                    f"(embedding score {s.score:.4f})"
                ),
                evidence=(format_triple(s.triple),),
                priors=priors,
            )
        )
    return out


def analyze_bundle(b: RunBundle, opts: AnalysisOptions | None = None) -> AnalysisResult:
    """Run the full localization pipeline over one bundle."""
    opts = opts or AnalysisOptions()
    labels, fv = _predict_labels(b, opts)

    if opts.skip_static:
        g = build_dynamic_kg(b, labels)
    else:
        g = build_kg(b, labels)

    rules = list(opts.rules) if opts.rules is not None else builtin_rules(opts.rules_config)
    g, passes = infer_with_passes(g, rules)

    facts = fault_facts(g)
    covered = {f.rule_id for f in facts}
    findings = _rule_findings(g, rules, opts.priors)
    findings.extend(_dynamic_findings(g, labels, covered, opts.priors))

    suggestions: tuple[LinkSuggestion, ...] = ()
    if not opts.skip_linkpred and (facts or labels):
        lm = opts.link_model if opts.link_model is not None else default_link_model()
        suggestions = tuple(suggest_edges(lm, g, tau=opts.link_tau))
        echo_types: dict[str, set[str]] = {}
        for f in facts:
            loc_type = g.entity_types.get(f.location)
            if loc_type is not None:
                echo_types.setdefault(f.fault_type_id, set()).add(loc_type)
        taken = {(f.fault_type, f.location) for f in findings}
        findings.extend(
            _link_findings(g, suggestions, echo_types, taken, opts.priors)
        )

    return AnalysisResult(
        bundle_id=b.bundle_id,
        findings=rank(findings),
        graph=g,
        dynamic_labels=labels,
        suggestions=suggestions,
        features=fv,
        passes=passes,
    )
