import json
import math
import random

import pytest

from fldeep.errors import InapplicableOperator, UnknownCategoryMapping
from fldeep.harness import (
    CATEGORIES,
    OPERATOR_IDS,
    OPERATORS,
    EvalRow,
    build_corpus,
    category_of,
    eval_table,
    fisher_exact,
    load_corpus_index,
    mutate,
    precision_recall,
    score,
)
from fldeep.ranking import Tier, build_finding
from oracles import fisher_oracle


def test_operator_table():
    assert set(OPERATOR_IDS) == {"M-LOSS", "M-ACT", "M-LR", "M-EPOCH", "M-OPT", "M-SPLIT", "M-LIB"}
    assert {op.category for op in OPERATORS.values()} <= set(CATEGORIES)


def test_mutate_is_deterministic(clean_mlp):
    a = mutate(clean_mlp, "M-LOSS", seed=5)
    b = mutate(clean_mlp, "M-LOSS", seed=5)
    assert a.mutant == b.mutant
    assert a.category == "LossFn"


def test_mutant_gets_derived_id(clean_mlp):
    m = mutate(clean_mlp, "M-SPLIT", seed=7).mutant
    assert m.bundle_id == "clean_mlp-m-split-s7"


def test_unknown_operator_rejected(clean_mlp):
    with pytest.raises(KeyError):
        mutate(clean_mlp, "M-NOPE", seed=1)


def test_loss_swap_is_incompatible(clean_mlp, clean_cnn, clean_reg):
    for b in (clean_mlp, clean_cnn, clean_reg):
        m = mutate(b, "M-LOSS", seed=3).mutant
        assert m.model.loss != b.model.loss


def test_activation_mutation(clean_mlp):
    m = mutate(clean_mlp, "M-ACT", seed=2).mutant
    final = m.model.layers[-1]
    assert final.activation != "softmax"


def test_activation_inapplicable_on_regression(clean_reg):
    with pytest.raises(InapplicableOperator):
        mutate(clean_reg, "M-ACT", seed=1)


def test_learning_rate_scaled_and_trace_rewritten(clean_mlp):
    m = mutate(clean_mlp, "M-LR", seed=4).mutant
    ratio = m.model.learning_rate / clean_mlp.model.learning_rate
    assert ratio in (1000.0, 0.001)
    assert m.trace != clean_mlp.trace
    assert len(m.trace) >= 2


def test_epoch_mutation_truncates(clean_cnn):
    m = mutate(clean_cnn, "M-EPOCH", seed=9).mutant
    assert m.model.epochs == 1
    assert len(m.trace) == 1


def test_optimizer_mutation(clean_mlp):
    m = mutate(clean_mlp, "M-OPT", seed=1).mutant
    assert m.model.optimizer_name not in ("adam", "sgd", "rmsprop")


def test_split_mutation(clean_mlp):
    m = mutate(clean_mlp, "M-SPLIT", seed=1).mutant
    total = clean_mlp.dataset.n_train + clean_mlp.dataset.n_test
    assert m.dataset.n_test == max(1, round(total * 0.02))
    assert m.dataset.n_train + m.dataset.n_test == total


def test_library_mutation_bumps_deploy_only(clean_mlp):
    m = mutate(clean_mlp, "M-LIB", seed=100).mutant
    assert m.train_env.libraries == clean_mlp.train_env.libraries
    changed = {
        name
        for name, v in m.deploy_env.libraries.items()
        if clean_mlp.deploy_env.libraries.get(name) != v
    }
    assert len(changed) == 1
    (name,) = changed
    old = clean_mlp.deploy_env.libraries[name].split(".")
    new = m.deploy_env.libraries[name].split(".")
    assert int(new[1]) == int(old[1]) + 1 and new[0] == old[0]


def test_library_mutation_needs_deploy_env(clean_mlp):
    from dataclasses import replace

    with pytest.raises(InapplicableOperator):
        mutate(replace(clean_mlp, deploy_env=None), "M-LIB", seed=1)


def test_build_corpus_and_index(tmp_path, clean_mlp, clean_cnn):
    written = build_corpus([clean_mlp, clean_cnn], tmp_path, n_variants=1, base_seed=50, operators=("M-LIB", "M-OPT"))
    index = load_corpus_index(tmp_path)
    assert len(index) == len(written) == 4
    for row in index:
        assert (tmp_path / row["bundle_id"] / "model.json").is_file()
        assert row["category"] in CATEGORIES
    # rebuilding with an overlapping id replaces, not duplicates
    build_corpus([clean_mlp], tmp_path, n_variants=1, base_seed=50, operators=("M-LIB",))
    again = load_corpus_index(tmp_path)
    assert len(again) == 4
    assert [r["bundle_id"] for r in again] == sorted(r["bundle_id"] for r in again)


def test_corpus_skips_inapplicable(tmp_path, clean_reg):
    written = build_corpus([clean_reg], tmp_path, n_variants=1, base_seed=9, operators=("M-ACT", "M-OPT"))
    assert len(written) == 1


# --- scoring -----------------------------------------------------------------


def finding(fault_type):
    return build_finding(fault_type, "model", Tier.RULE, "m")


def test_category_mapping_totality():
    from fldeep.ranking import ALL_FAULT_TYPE_IDS

    for ft in ALL_FAULT_TYPE_IDS:
        assert category_of(ft) in CATEGORIES
    with pytest.raises(UnknownCategoryMapping):
        category_of("R99-Imaginary")


def test_score_counts_hits_and_misses():
    results = [
        ("LibMismatch", [finding("R06-LibrariesMismatch")]),
        ("LibMismatch", [finding("R13-SuboptimalOptimizer")]),
        ("Optimizer", []),
    ]
    rows = score(results, top_k=3)
    assert (rows["LibMismatch"].tp, rows["LibMismatch"].fn) == (1, 1)
    assert rows["Optimizer"].fn == 1
    # the stray optimizer report against a LibMismatch sample is its FP
    assert rows["Optimizer"].fp == 1
    assert rows["LibMismatch"].samples == 2


def test_score_honors_top_k():
    findings = [finding("R13-SuboptimalOptimizer"), finding("R15-SuboptimalLearningRate"), finding("R06-LibrariesMismatch")]
    rows = score([("LibMismatch", findings)], top_k=2)
    assert rows["LibMismatch"].fn == 1
    rows = score([("LibMismatch", findings)], top_k=3)
    # both optimizer findings collapse into one reported category
    assert rows["LibMismatch"].tp == 1
    assert rows["Optimizer"].fp == 1


def test_score_rejects_unknown_truth():
    with pytest.raises(UnknownCategoryMapping):
        score([("Gremlins", [])])


def test_precision_recall_edge_cases():
    assert precision_recall(0, 0, 0) == (0.0, 0.0)
    assert precision_recall(3, 1, 2) == (0.75, 0.6)


def test_eval_table_shape():
    rows = {cat: EvalRow() for cat in CATEGORIES}
    rows["Data"] = EvalRow(samples=4, tp=3, fp=1, fn=1)
    doc = eval_table(rows, top_k=3)
    assert doc["top_k"] == 3
    data_row = doc["rows"]["Data"]
    assert data_row == {
        "samples": 4,
        "TP": 3,
        "FP": 1,
        "FN": 1,
        "PR": pytest.approx(0.75),
        "RC": pytest.approx(0.75),
    }
    assert doc["totals"]["samples"] == 4
    assert json.loads(json.dumps(doc)) == doc


def test_metric_rows_match_comparison_table():
    table = [
        (16, 0, 3, 1.00, 0.84),
        (20, 0, 0, 1.00, 1.00),
        (11, 2, 5, 0.85, 0.69),
        (8, 1, 5, 0.89, 0.62),
        (3, 7, 7, 0.30, 0.30),
        (24, 3, 2, 0.89, 0.92),
    ]
    for tp, fp, fn, want_pr, want_rc in table:
        pr, rc = precision_recall(tp, fp, fn)
        assert abs(pr - want_pr) <= 0.005
        assert abs(rc - want_rc) <= 0.005


# --- exact independence test -------------------------------------------------


def test_fisher_zero_margin():
    assert fisher_exact([[0, 0], [3, 5]]) == 1.0
    assert fisher_exact([[2, 0], [4, 0]]) == 1.0


def test_fisher_symmetric_table():
    assert fisher_exact([[5, 5], [5, 5]]) == pytest.approx(1.0)


def test_fisher_known_value():
    # classic tea-tasting table
    assert fisher_exact([[3, 1], [1, 3]]) == pytest.approx(0.4857142857142857, abs=1e-12)


def test_fisher_strong_association():
    assert fisher_exact([[12, 0], [0, 12]]) < 1e-5


def test_fisher_matches_enumeration_oracle():
    rng = random.Random(606)
    for _ in range(50):
        table = [[rng.randint(0, 25), rng.randint(0, 25)], [rng.randint(0, 25), rng.randint(0, 25)]]
        got = fisher_exact(table)
        want = fisher_oracle(table)
        assert abs(got - want) <= 1e-9, (table, got, want)


def test_fisher_transpose_invariance():
    rng = random.Random(607)
    for _ in range(25):
        a, b, c, d = (rng.randint(0, 15) for _ in range(4))
        p1 = fisher_exact([[a, b], [c, d]])
        p2 = fisher_exact([[a, c], [b, d]])
        assert p1 == pytest.approx(p2, abs=1e-12)


def test_fisher_validates_input():
    with pytest.raises(Exception):
        fisher_exact([[1, 2], [3, -1]])
    with pytest.raises(Exception):
        fisher_exact([[1.5, 2], [3, 4]])
    with pytest.raises(Exception):
        fisher_exact([[True, False], [1, 2]])
