"""Fault localization for recorded deep-learning training runs.

Feed `analyze_bundle` a parsed run bundle and get back a ranked list of
localized faults, derived from three cooperating signal sources: statistical
classifiers over the training trace, a rule base over a knowledge graph of
the recorded configuration, and link prediction over graph embeddings.
"""

from .bundle import (
    DatasetManifest,
    EnvManifest,
    EpochRecord,
    LayerSpec,
    LayerWeightStats,
    ModelSpec,
    RunBundle,
    parse_bundle,
    serialize_bundle,
)
from .dynvote import (
    DynamicFault,
    EnsembleModel,
    deserialize_model,
    predict_faults,
    serialize_model,
    train_ensemble,
)
from .errors import FldeepError
from .features import FeatureVector, extract_features, trace_stats
from .harness import build_corpus, evaluate_corpus, fisher_exact, mutate, score
from .kg import KnowledgeGraph, build_kg, export_ntriples, parse_ntriples
from .linkpred import (
    LinkModel,
    LinkSuggestion,
    deserialize_linkpred,
    serialize_linkpred,
    suggest_edges,
    train_linkpred,
)
from .pipeline import AnalysisOptions, AnalysisResult, analyze_bundle
from .ranking import FaultFinding, Tier, default_priors, emit_report, parse_report, rank
from .rules import RulesConfig, builtin_rules, fault_facts, infer

__version__ = "0.1.0"

__all__ = [
    "AnalysisOptions",
    "AnalysisResult",
    "DatasetManifest",
    "DynamicFault",
    "EnsembleModel",
    "EnvManifest",
    "EpochRecord",
    "FaultFinding",
    "FeatureVector",
    "FldeepError",
    "KnowledgeGraph",
    "LayerSpec",
    "LayerWeightStats",
    "LinkModel",
    "LinkSuggestion",
    "ModelSpec",
    "RulesConfig",
    "RunBundle",
    "Tier",
    "analyze_bundle",
    "build_corpus",
    "build_kg",
    "builtin_rules",
    "default_priors",
    "deserialize_linkpred",
    "deserialize_model",
    "emit_report",
    "evaluate_corpus",
    "export_ntriples",
    "extract_features",
    "fault_facts",
    "fisher_exact",
    "infer",
    "mutate",
    "parse_bundle",
    "parse_ntriples",
    "parse_report",
    "predict_faults",
    "rank",
    "score",
    "serialize_bundle",
    "serialize_linkpred",
    "serialize_model",
    "suggest_edges",
    "trace_stats",
    "train_ensemble",
    "train_linkpred",
    "__version__",
]
