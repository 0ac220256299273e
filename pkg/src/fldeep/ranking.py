"""Scoring, ordering and serialization of localized faults.

Every finding carries a tier (how it was derived) and a prior (how often its
fault type is worth the user's attention). The score is the product, so a
rule-confirmed fault always outranks a link-predicted one of the same type,
and within a tier the priors decide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import KeyMissing, SchemaViolation
from .kg import KnowledgeGraph, local_name

REPORT_VERSION = "fldeep-report/1"


class Tier(str, Enum):
    RULE = "rule"
    DYNAMIC = "dynamic"
    LINK_PREDICTED = "link-predicted"

    @property
    def weight(self) -> float:
        return TIER_WEIGHTS[self]


TIER_WEIGHTS: dict[Tier, float] = {
    Tier.RULE: 1.0,
    Tier.DYNAMIC: 0.8,
    Tier.LINK_PREDICTED: 0.5,
}

RULE_FAULT_TYPE_IDS = (
    "R01-SuboptimalSplit",
    "R02-MissingPreprocessing",
    "R03-PythonMismatch",
    "R04-HardwareMismatch",
    "R05-OsMismatch",
    "R06-LibrariesMismatch",
    "R07-RedundantActivations",
    "R08-BiasInit",
    "R09-UnitsInit",
    "R10-NonLinearActivation",
    "R11-LossLinkage",
    "R12-ProbabilityConversion",
    "R13-SuboptimalOptimizer",
    "R14-InsufficientIteration",
    "R15-SuboptimalLearningRate",
    "R16-LossActivationMismatch",
    "R17-InvalidIntermediate",
    "R18-WrongActivation",
    "R19-MissingActivation",
)

DYNAMIC_FAULT_TYPE_IDS = (
    "LossFn",
    "ActivationFn",
    "Optimizer",
    "InsufficientIteration",
    "LearningRate",
)

ALL_FAULT_TYPE_IDS = RULE_FAULT_TYPE_IDS + DYNAMIC_FAULT_TYPE_IDS


def default_priors() -> dict[str, float]:
    """Attention priors per fault type; totals over the shipped vocabulary."""
    priors: dict[str, float] = {}
    for ft in ("R11-LossLinkage", "R16-LossActivationMismatch", "LossFn"):
        priors[ft] = 0.117
    for ft in ("R13-SuboptimalOptimizer", "Optimizer"):
        priors[ft] = 0.03
    for ft in (
        "R07-RedundantActivations",
        "R10-NonLinearActivation",
        "R12-ProbabilityConversion",
        "R18-WrongActivation",
        "R19-MissingActivation",
        "ActivationFn",
    ):
        priors[ft] = 0.08
    for ft in ("R01-SuboptimalSplit", "R02-MissingPreprocessing"):
        priors[ft] = 0.10
    for ft in (
        "R03-PythonMismatch",
        "R04-HardwareMismatch",
        "R05-OsMismatch",
        "R06-LibrariesMismatch",
    ):
        priors[ft] = 0.06
    for ft in (
        "R14-InsufficientIteration",
        "R15-SuboptimalLearningRate",
        "InsufficientIteration",
        "LearningRate",
    ):
        priors[ft] = 0.05
    for ft in ("R08-BiasInit", "R09-UnitsInit"):
        priors[ft] = 0.03
    priors["R17-InvalidIntermediate"] = 0.02
    return priors


@dataclass(frozen=True)
class FaultFinding:
    fault_type: str
    location: str
    tier: Tier
    score: float
    prior: float
    message: str
    evidence: tuple[str, ...] = ()


def build_finding(
    fault_type: str,
    location: str,
    tier: Tier,
    message: str,
    evidence: Sequence[str] = (),
    priors: Mapping[str, float] | None = None,
) -> FaultFinding:
    """Score one localized fault; unknown fault types are a hard error."""
    table = default_priors() if priors is None else priors
    if fault_type not in table:
        raise KeyMissing(fault_type)
    prior = float(table[fault_type])
    return FaultFinding(
        fault_type=fault_type,
        location=location,
        tier=tier,
        score=tier.weight * prior,
        prior=prior,
        message=message,
        evidence=tuple(evidence),
    )


def rank(findings: Iterable[FaultFinding]) -> tuple[FaultFinding, ...]:
    """Order by score descending; ties by fault type, then location."""
    return tuple(
        sorted(findings, key=lambda f: (-f.score, f.fault_type, f.location))
    )


def entity_path(g: KnowledgeGraph, entity: str, suffix: str | None = None) -> str:
    """Human-readable bundle path for a graph entity.

    Layers become model.layers[i]; libraries carry their owning environment;
    an optional suffix names the exact field under the entity.
    """
    tag = g.entity_types.get(entity)
    rel = entity[len(g.namespace):] if entity.startswith(g.namespace) else entity
    if tag == "Dataset":
        path = "dataset"
    elif tag == "Model":
        path = "model"
    elif tag == "Bundle":
        path = "bundle"
    elif tag == "TrainEnv":
        path = "train_env"
    elif tag == "DeployEnv":
        path = "deploy_env"
    elif tag == "Layer":
        path = f"model.layers[{local_name(rel)}]"
    elif tag == "Library":
        parts = rel.split("/")
        if len(parts) != 4 or parts[0] != "env" or parts[2] != "lib":
            raise SchemaViolation("graph", entity, "library entity has unexpected shape")
        env_path = "train_env" if parts[1] == "train" else "deploy_env"
        path = f'{env_path}.libraries["{parts[3]}"]'
    else:
        path = rel
    if suffix:
        path = f"{path}.{suffix}"
    return path


def emit_report(
    findings: Sequence[FaultFinding], bundle_id: str, fmt: str = "json"
) -> str:
    """Render ranked findings as a stable JSON document or readable text."""
    if fmt == "json":
        doc = {
            "schema_version": REPORT_VERSION,
            "bundle_id": bundle_id,
            "finding_count": len(findings),
            "findings": [
                {
                    "fault_type": f.fault_type,
                    "location": f.location,
                    "tier": f.tier.value,
                    "score": f.score,
                    "prior": f.prior,
                    "message": f.message,
                    "evidence": list(f.evidence),
                }
                for f in findings
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        lines = [f"bundle {bundle_id}: {len(findings)} fault(s) localized"]
        for i, f in enumerate(findings, start=1):
            lines.append(
                f"{i}. [{f.tier.value}] {f.fault_type} at {f.location} (score {f.score:.4f})"
            )
            lines.append(f"   {f.message}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> tuple[str, tuple[FaultFinding, ...]]:
    """Inverse of the JSON report; returns (bundle_id, findings)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("report", "<document>", f"not valid JSON: {exc}") from exc
    if doc.get("schema_version") != REPORT_VERSION:
        raise SchemaViolation("report", "schema_version", f"expected {REPORT_VERSION}")
    findings = []
    for row in doc.get("findings", ()):
        try:
            findings.append(
                FaultFinding(
                    fault_type=row["fault_type"],
                    location=row["location"],
                    tier=Tier(row["tier"]),
                    score=float(row["score"]),
                    prior=float(row["prior"]),
                    message=row["message"],
                    evidence=tuple(row["evidence"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise SchemaViolation("report", "findings", str(exc)) from exc
    return doc.get("bundle_id", ""), tuple(findings)
