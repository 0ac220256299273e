import math
from dataclasses import replace

import pytest

from fldeep.dynvote import DynamicFault
from fldeep.errors import InvariantViolation
from fldeep.kg import (
    KnowledgeGraph,
    Literal,
    Triple,
    assert_fault,
    build_dynamic_kg,
    build_kg,
    export_ntriples,
    fault_entity,
    fault_type_entity,
    format_triple,
    last_k_loss_slope,
    local_name,
    namespace_for,
    parse_ntriples,
)


def test_namespace_and_entities(clean_mlp):
    g = build_kg(clean_mlp)
    ns = namespace_for("clean_mlp")
    assert g.namespace == ns == "fl://clean_mlp/"
    for suffix, tag in [
        ("bundle", "Bundle"),
        ("dataset", "Dataset"),
        ("model", "Model"),
        ("model/layer/0", "Layer"),
        ("model/layer/2", "Layer"),
        ("env/train", "TrainEnv"),
        ("env/deploy", "DeployEnv"),
        ("env/train/lib/numpy", "Library"),
        ("env/deploy/lib/tensorflow", "Library"),
    ]:
        assert g.entity_types.get(ns + suffix) == tag, suffix


def test_each_library_adds_two_triples(clean_mlp):
    with_lib = build_kg(clean_mlp)
    libs = dict(clean_mlp.train_env.libraries)
    del libs["h5py"]
    slim = replace(clean_mlp, train_env=replace(clean_mlp.train_env, libraries=libs))
    without = build_kg(slim)
    assert len(with_lib.triples) - len(without.triples) == 2
    ns = with_lib.namespace
    assert ns + "env/train/lib/h5py" not in without.entity_types


def test_derived_model_facts(clean_mlp, clean_reg):
    g = build_kg(clean_mlp)
    ns = g.namespace
    model = ns + "model"

    def value(pred):
        rows = g.query((model, pred, "?v"))
        assert len(rows) == 1, pred
        v = rows[0]["v"]
        return v.value if isinstance(v, Literal) else v

    assert value("finalActivation") == "softmax"
    assert value("finalUnits") == 10
    assert value("hasAnyActivation") is True
    assert value("hasFinalLayer") == ns + "model/layer/2"
    losses = [rec.loss for rec in clean_mlp.trace]
    assert value("lastKLossSlope") == pytest.approx(last_k_loss_slope(losses))

    g2 = build_kg(clean_reg)
    rows = g2.query((g2.namespace + "model", "finalActivation", "?v"))
    assert rows[0]["v"].value == "linear"


def test_nonfinite_epochs_marked(clean_mlp):
    recs = list(clean_mlp.trace)
    recs[4] = replace(recs[4], val_loss=math.inf)
    g = build_kg(replace(clean_mlp, trace=tuple(recs)))
    rows = g.query((g.namespace + "model", "hasNonFiniteAt", "?e"))
    assert [r["e"].value for r in rows] == [4]


def test_dynamic_labels_become_edges(clean_mlp):
    g = build_kg(clean_mlp, {DynamicFault.OPTIMIZER, DynamicFault.LOSS_FN})
    rows = g.query((g.namespace + "model", "predictedDynamicFault", "?ft"))
    names = sorted(local_name(str(r["ft"])) for r in rows)
    assert names == ["LossFn", "Optimizer"]


def test_dynamic_only_graph_has_no_static_facts(clean_mlp):
    g = build_dynamic_kg(clean_mlp, {DynamicFault.LEARNING_RATE})
    assert g.query(("?d", "nTrain", "?v")) == []
    assert g.query(("?m", "usesLoss", "?v")) == []
    assert len(g.query(("?m", "predictedDynamicFault", "?ft"))) == 1


def test_slope_window():
    assert last_k_loss_slope([5.0]) == 0.0
    assert last_k_loss_slope([5.0, 3.0]) == -2.0
    # n=8 -> k=5, slope over the last five steps
    losses = [8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
    assert last_k_loss_slope(losses) == pytest.approx((1.0 - 6.0) / 5)


# --- fault assertion ---------------------------------------------------------


def test_fault_entity_is_deterministic_and_distinct():
    ns = "fl://b/"
    e1 = fault_entity(ns, "R06-LibrariesMismatch", ns + "env/deploy/lib/numpy")
    e2 = fault_entity(ns, "R06-LibrariesMismatch", ns + "env/deploy/lib/numpy")
    e3 = fault_entity(ns, "R06-LibrariesMismatch", ns + "env/deploy/lib/keras")
    assert e1 == e2 != e3
    assert e1.startswith(ns + "fault/R06/")


def test_assert_fault_dedups():
    g = KnowledgeGraph(namespace="fl://b/")
    g.add_entity("fl://b/model", "Model")
    before = len(g.triples)
    e1, added1 = assert_fault(g, "R13-SuboptimalOptimizer", "fl://b/model", "msg")
    e2, added2 = assert_fault(g, "R13-SuboptimalOptimizer", "fl://b/model", "msg")
    assert e1 == e2
    assert added1 and not added2
    assert g.entity_types[e1] == "Fault"
    assert g.entity_types[fault_type_entity("fl://b/", "R13-SuboptimalOptimizer")] == "FaultType"
    assert len(g.triples) > before


# --- serialization -----------------------------------------------------------


def test_ntriples_parse_inverts_export(clean_mlp):
    g = build_kg(clean_mlp, {DynamicFault.LOSS_FN})
    assert_fault(g, "R11-LossLinkage", g.namespace + "model", 'say "hi"\nnewline\\slash')
    blob = export_ntriples(g)
    assert set(parse_ntriples(blob)) == g.triples
    # exporting what was parsed reproduces the bytes
    g2 = g.copy()
    g2.triples = set(parse_ntriples(blob))
    assert export_ntriples(g2) == blob


def test_export_ignores_insertion_order(clean_mlp):
    g = build_kg(clean_mlp)
    g2 = KnowledgeGraph(namespace=g.namespace)
    g2.entity_types.update(g.entity_types)
    for t in sorted(g.triples, key=str, reverse=True):
        g2.add(*t)
    assert export_ntriples(g2) == export_ntriples(g)


def test_ntriples_nonfinite_literals():
    g = KnowledgeGraph(namespace="fl://b/")
    g.add_entity("fl://b/model", "Model")
    g.add("fl://b/model", "x", Literal(math.nan))
    g.add("fl://b/model", "y", Literal(math.inf))
    g.add("fl://b/model", "z", Literal(-math.inf))
    blob = export_ntriples(g)
    text = blob.decode()
    assert '"NaN"' in text and '"INF"' in text and '"-INF"' in text
    back = {t.predicate: t.object.value for t in parse_ntriples(blob)}
    assert math.isnan(back["x"])
    assert back["y"] == math.inf
    assert back["z"] == -math.inf


def test_ntriples_output_is_sorted_and_unique():
    g = KnowledgeGraph(namespace="fl://b/")
    g.add_entity("fl://b/a", "Model")
    g.add("fl://b/a", "p", Literal(2))
    g.add("fl://b/a", "p", Literal(1))
    g.add("fl://b/a", "p", Literal(1))
    lines = export_ntriples(g).decode().splitlines()
    assert len(lines) == 2
    assert lines == sorted(lines)


def test_untyped_entities_rejected():
    g = KnowledgeGraph(namespace="fl://b/")
    with pytest.raises(InvariantViolation):
        g.add("fl://b/ghost", "p", Literal(1))


def test_format_triple():
    t = Triple("fl://b/model", "usesLoss", Literal("mse"))
    assert format_triple(t) == 'fl://b/model usesLoss "mse"'
    t2 = Triple("fl://b/model", "normalized", Literal(True))
    assert format_triple(t2).endswith(" true")
    t3 = Triple("fl://b/bundle", "hasModel", "fl://b/model")
    assert format_triple(t3) == "fl://b/bundle hasModel fl://b/model"


def test_query_binds_variables(clean_mlp):
    g = build_kg(clean_mlp)
    rows = g.query(("?m", "hasLayer", "?l"))
    assert len(rows) == 3
    assert {str(r["m"]) for r in rows} == {g.namespace + "model"}
