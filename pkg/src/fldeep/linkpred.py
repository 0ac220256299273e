"""Type-level translational link prediction over fault edges.

Graphs are lifted to type level: every entity maps to its type tag, except
fault-type vocabulary entities which stay distinguishable as singleton types
(FaultType:R14-..., FaultType:LossFn). Fault facts are folded into direct
(component-type, hasFault, fault-type) triples. Embeddings are learned with
a margin ranking loss where negatives corrupt the object type; the score of
an edge is the negative Euclidean distance ||s + r - o||. Because scores
depend only on types, an entity never seen in training inherits its type's
behavior, and renaming instance entities changes nothing.

Suggested edges never fire rules; downstream they surface only as low-tier
findings.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import CorruptModel, LayoutMismatch, VersionMismatch
from .kg import KnowledgeGraph, Literal, Triple, fault_type_entity, local_name
from .rules import fault_facts

FORMAT_NAME = "fldeep-linkpred"
FORMAT_VERSION = 1
HAS_FAULT = "hasFault"
COMPONENT_TYPES = ("Dataset", "Model", "Layer", "TrainEnv", "DeployEnv", "Library")


def lift_type(g: KnowledgeGraph, entity: str) -> str:
    tag = g.entity_types.get(entity)
    if tag is None:
        raise LayoutMismatch(f"entity {entity!r} has no type tag")
    if tag == "FaultType":
        return f"FaultType:{local_name(entity)}"
    return tag


def _literal_tag(lit: Literal) -> str:
    return f"Literal:{type(lit.value).__name__}"


def lift_graph(g: KnowledgeGraph) -> list[tuple[str, str, str]]:
    """Type-level triples of a graph, fault facts folded into hasFault edges."""
    out = []
    for t in sorted(g.triples, key=str):
        if g.entity_types.get(t.subject) == "Fault":
            continue
        s = lift_type(g, t.subject)
        o = _literal_tag(t.object) if isinstance(t.object, Literal) else lift_type(g, t.object)
        out.append((s, t.predicate, o))
    for fact in fault_facts(g):
        out.append((lift_type(g, fact.location), HAS_FAULT, f"FaultType:{fact.fault_type_id}"))
    return out


@dataclass
class LinkModel:
    dim: int
    margin: float
    tau: float
    seed: int
    type_embeddings: dict[str, np.ndarray]
    relation_embeddings: dict[str, np.ndarray]
    losses: list[float] = field(default_factory=list)

    def score(self, s_type: str, relation: str, o_type: str) -> float:
        try:
            es = self.type_embeddings[s_type]
            rr = self.relation_embeddings[relation]
            eo = self.type_embeddings[o_type]
        except KeyError as exc:
            raise LayoutMismatch(f"no embedding for {exc.args[0]!r}") from None
        return -float(np.linalg.norm(es + rr - eo))

    def fault_type_tags(self) -> list[str]:
        return sorted(t for t in self.type_embeddings if t.startswith("FaultType:"))


class TypeLevelLinkPredictor(BaseEstimator):
    """Estimator wrapper: fit on a corpus of graphs, score typed edges."""

    def __init__(
        self,
        dim: int = 32,
        margin: float = 1.0,
        negative_ratio: int = 4,
        step_size: float = 0.01,
        epochs: int = 200,
        tau_percentile: float = 90.0,
        random_state: int = 0,
    ):
        self.dim = dim
        self.margin = margin
        self.negative_ratio = negative_ratio
        self.step_size = step_size
        self.epochs = epochs
        self.tau_percentile = tau_percentile
        self.random_state = random_state

    def fit(self, graphs):
        if self.dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        triples: list[tuple[str, str, str]] = []
        for g in graphs:
            triples.extend(lift_graph(g))
        if not triples:
            raise ValueError("training corpus has no triples")
        types = sorted({s for s, _, _ in triples} | {o for _, _, o in triples})
        relations = sorted({p for _, p, _ in triples})
        t_index = {t: i for i, t in enumerate(types)}
        r_index = {r: i for i, r in enumerate(relations)}

        rng = np.random.RandomState(self.random_state)
        bound = 6.0 / np.sqrt(self.dim)
        E = rng.uniform(-bound, bound, size=(len(types), self.dim))
        R = rng.uniform(-bound, bound, size=(len(relations), self.dim))
        E /= np.maximum(np.linalg.norm(E, axis=1, keepdims=True), 1e-12)
        # relations normalized once at init; entities re-normalized each epoch
        R /= np.maximum(np.linalg.norm(R, axis=1, keepdims=True), 1e-12)

        S = np.array([t_index[s] for s, _, _ in triples])
        P = np.array([r_index[p] for _, p, _ in triples])
        O = np.array([t_index[o] for _, _, o in triples])
        n = len(triples)
        reps = self.negative_ratio
        S = np.repeat(S, reps)
        P = np.repeat(P, reps)
        O = np.repeat(O, reps)
        neg_rng = random.Random(self.random_state + 1)
        ONeg = np.array(
            [self._corrupt(neg_rng, len(types), o) for o in O], dtype=np.int64
        )

        losses = []
        for _ in range(self.epochs):
            dp = E[S] + R[P] - E[O]
            dn = E[S] + R[P] - E[ONeg]
            norm_p = np.linalg.norm(dp, axis=1)
            norm_n = np.linalg.norm(dn, axis=1)
            raw = self.margin + norm_p - norm_n
            losses.append(float(np.mean(np.maximum(raw, 0.0))))
            viol = raw > 0
            if not viol.any():
                continue
            up = dp[viol] / np.maximum(norm_p[viol], 1e-12)[:, None]
            un = dn[viol] / np.maximum(norm_n[viol], 1e-12)[:, None]
            gE = np.zeros_like(E)
            gR = np.zeros_like(R)
            np.add.at(gE, S[viol], up - un)
            np.add.at(gR, P[viol], up - un)
            np.add.at(gE, O[viol], -up)
            np.add.at(gE, ONeg[viol], un)
            # each row steps by at most step_size: average the accumulated
            # pull by how many violated pairs touched that row, so rare
            # vocabulary (fault types) learns as fast as hub types
            cE = np.zeros(len(E))
            cR = np.zeros(len(R))
            np.add.at(cE, S[viol], 1.0)
            np.add.at(cE, O[viol], 1.0)
            np.add.at(cE, ONeg[viol], 1.0)
            np.add.at(cR, P[viol], 1.0)
            E -= self.step_size * gE / np.maximum(cE, 1.0)[:, None]
            R -= self.step_size * gR / np.maximum(cR, 1.0)[:, None]
            E /= np.maximum(np.linalg.norm(E, axis=1, keepdims=True), 1e-12)

        dn = E[S] + R[P] - E[ONeg]
        neg_scores = -np.linalg.norm(dn, axis=1)
        tau = float(np.percentile(neg_scores, self.tau_percentile))
        self.model_ = LinkModel(
            dim=self.dim,
            margin=self.margin,
            tau=tau,
            seed=self.random_state,
            type_embeddings={t: E[i].copy() for t, i in t_index.items()},
            relation_embeddings={r: R[i].copy() for r, i in r_index.items()},
            losses=losses,
        )
        return self

    @staticmethod
    def _corrupt(rng: random.Random, n_types: int, o: int) -> int:
        if n_types < 2:
            return o
        pick = rng.randrange(n_types - 1)
        return pick if pick < o else pick + 1

    @property
    def link_model(self) -> LinkModel:
        if not hasattr(self, "model_"):
            raise NotFittedError("TypeLevelLinkPredictor is not fitted")
        return self.model_


def train_linkpred(corpus, dim: int = 32, seed: int = 0, **kwargs) -> LinkModel:
    est = TypeLevelLinkPredictor(dim=dim, random_state=seed, **kwargs)
    return est.fit(corpus).link_model


@dataclass(frozen=True)
class LinkSuggestion:
    component: str
    fault_type_id: str
    score: float
    triple: Triple


def asserted_fault_pairs(g: KnowledgeGraph) -> set[tuple[str, str]]:
    pairs = {(fact.location, fact.fault_type_id) for fact in fault_facts(g)}
    for b in g.query(("?m", "predictedDynamicFault", "?ft")):
        pairs.add((str(b["m"]), local_name(str(b["ft"]))))
    return pairs


def suggest_edges(
    m: LinkModel, g: KnowledgeGraph, tau: float | None = None
) -> list[LinkSuggestion]:
    """Candidate (component, hasFault, fault-type) edges scoring at or above tau.

    Candidates already asserted in the graph (fault facts or predicted
    dynamic labels) are excluded. Sorted best-first, deterministically.
    """
    if tau is None:
        tau = m.tau
    if HAS_FAULT not in m.relation_embeddings:
        return []
    asserted = asserted_fault_pairs(g)
    components = [
        e for e in sorted(g.entity_types) if g.entity_types[e] in COMPONENT_TYPES
    ]
    out = []
    for comp in components:
        comp_type = lift_type(g, comp)
        for tag in m.fault_type_tags():
            ft_id = tag.split(":", 1)[1]
            if (comp, ft_id) in asserted:
                continue
            score = m.score(comp_type, HAS_FAULT, tag)
            if score >= tau:
                ft_entity = fault_type_entity(g.namespace, ft_id)
                out.append(
                    LinkSuggestion(
                        component=comp,
                        fault_type_id=ft_id,
                        score=score,
                        triple=Triple(comp, HAS_FAULT, ft_entity),
                    )
                )
    return sorted(out, key=lambda s: (-s.score, s.component, s.fault_type_id))


def serialize_linkpred(m: LinkModel) -> bytes:
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "dim": m.dim,
        "margin": m.margin,
        "tau": m.tau,
        "seed": m.seed,
        "types": {t: v.tolist() for t, v in m.type_embeddings.items()},
        "relations": {r: v.tolist() for r, v in m.relation_embeddings.items()},
        "losses": m.losses,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def deserialize_linkpred(blob: bytes) -> LinkModel:
    try:
        doc = json.loads(blob.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"undecodable link model bytes: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptModel("not a link prediction model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"link model format version {doc.get('format_version')!r}, supported {FORMAT_VERSION}"
        )
    try:
        return LinkModel(
            dim=int(doc["dim"]),
            margin=float(doc["margin"]),
            tau=float(doc["tau"]),
            seed=int(doc["seed"]),
            type_embeddings={t: np.array(v, dtype=np.float64) for t, v in doc["types"].items()},
            relation_embeddings={
                r: np.array(v, dtype=np.float64) for r, v in doc["relations"].items()
            },
            losses=[float(x) for x in doc.get("losses", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed link model structure: {exc}") from None
