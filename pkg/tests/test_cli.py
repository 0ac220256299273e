import json

import pytest

from fldeep import cli
from fldeep.kg import parse_ntriples


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_clean_bundle(capsys, fixtures_dir):
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "clean_mlp"))
    assert code == 0
    doc = json.loads(out)
    assert doc["bundle_id"] == "clean_mlp"
    assert doc["finding_count"] == 0
    assert doc["findings"] == []


def test_analyze_faulty_bundle(capsys, fixtures_dir):
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "clean_mlp-m-lib-s100"))
    assert code == 3
    doc = json.loads(out)
    assert doc["finding_count"] >= 1
    top = doc["findings"][0]
    assert top["fault_type"] == "R06-LibrariesMismatch"
    assert 'deploy_env.libraries["' in top["location"]


def test_analyze_text_format(capsys, fixtures_dir):
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "clean_mlp-m-lib-s100"), "--format", "text")
    assert code == 3
    assert "fault(s) localized" in out
    assert "R06-LibrariesMismatch" in out


def test_analyze_missing_bundle(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope"))
    assert code == 2
    assert "invalid bundle" in err


def test_analyze_out_file(capsys, tmp_path, fixtures_dir):
    dest = tmp_path / "report.json"
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "clean_mlp"), "--out", str(dest))
    assert code == 0
    assert out == ""
    assert json.loads(dest.read_text())["bundle_id"] == "clean_mlp"


def test_analyze_export_kg(capsys, tmp_path, fixtures_dir):
    dest = tmp_path / "graph.nt"
    code, _, _ = run(
        capsys, "analyze", str(fixtures_dir / "clean_mlp-m-lib-s100"), "--export-kg", str(dest)
    )
    assert code == 3
    triples = parse_ntriples(dest.read_bytes())
    assert any(t[1].endswith("locatedAt") for t in triples)


def test_bogus_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "x", "--frobnicate"])
    assert exc.value.code == 1


def test_no_command_prints_help(capsys):
    code, _, err = run(capsys)
    assert code == 1
    assert "usage" in err.lower()


def test_train_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "train", "--out", str(a), "--seed", "7", "--per-class", "12")[0] == 0
    assert run(capsys, "train", "--out", str(b), "--seed", "7", "--per-class", "12")[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_model_override_roundtrip(capsys, tmp_path, fixtures_dir):
    model = tmp_path / "tiny.json"
    run(capsys, "train", "--out", str(model), "--seed", "3", "--per-class", "12")
    code, out, _ = run(
        capsys, "analyze", str(fixtures_dir / "clean_mlp"), "--model", str(model)
    )
    assert code == 0
    assert json.loads(out)["finding_count"] == 0


def test_model_override_rejects_junk(capsys, tmp_path, fixtures_dir):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, err = run(
        capsys, "analyze", str(fixtures_dir / "clean_mlp"), "--model", str(bad)
    )
    assert code == 2
    assert "invalid configuration" in err


def test_rules_config_env_fallback(capsys, monkeypatch, tmp_path, fixtures_dir):
    cfg = tmp_path / "rules.json"
    cfg.write_text(json.dumps({"split_low": 0.25}))
    monkeypatch.setenv("FLDEEP_CONFIG", str(cfg))
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "clean_mlp"))
    assert code == 3
    doc = json.loads(out)
    assert any(f["fault_type"] == "R01-SuboptimalSplit" for f in doc["findings"])
    monkeypatch.delenv("FLDEEP_CONFIG")
    assert run(capsys, "analyze", str(fixtures_dir / "clean_mlp"))[0] == 0


def test_explicit_rules_flag_beats_env(capsys, monkeypatch, tmp_path, fixtures_dir):
    loose = tmp_path / "loose.json"
    loose.write_text(json.dumps({"split_low": 0.01}))
    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps({"split_low": 0.25}))
    monkeypatch.setenv("FLDEEP_CONFIG", str(strict))
    code, _, _ = run(
        capsys, "analyze", str(fixtures_dir / "clean_mlp"), "--rules", str(loose)
    )
    assert code == 0


def test_mutate_then_eval(capsys, tmp_path, fixtures_dir):
    corpus = tmp_path / "corpus"
    code, _, err = run(
        capsys,
        "mutate",
        "--bundle", str(fixtures_dir / "clean_mlp"),
        "--out", str(corpus),
        "--ops", "M-LIB,M-SPLIT",
        "--variants", "1",
        "--seed", "11",
    )
    assert code == 0
    assert "2 mutant(s)" in err
    report = tmp_path / "eval.json"
    code, _, _ = run(
        capsys, "eval", "--corpus", str(corpus), "--report", str(report), "--ablate"
    )
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["rows"]["LibMismatch"]["TP"] == 1
    assert doc["rows"]["Data"]["TP"] == 1
    assert set(doc["ablation"]) == {"baseline", "no_static", "no_dynamic", "no_linkpred"}
    assert doc["ablation"]["baseline"]["detected"] == 2


def test_mutate_unknown_op(capsys, fixtures_dir, tmp_path):
    code, _, err = run(
        capsys,
        "mutate",
        "--bundle", str(fixtures_dir / "clean_mlp"),
        "--out", str(tmp_path / "c"),
        "--ops", "M-WAT",
    )
    assert code == 1
    assert "unknown operator" in err


def test_eval_missing_corpus(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--corpus", str(tmp_path / "missing"))
    assert code == 2
    assert "invalid corpus" in err


def test_rules_only_findings_are_a_subset(capsys, fixtures_dir):
    for name in ("clean_mlp", "clean_cnn", "clean_reg", "clean_mlp-m-lib-s100"):
        bundle = str(fixtures_dir / name)
        _, full_out, _ = run(capsys, "analyze", bundle)
        _, rules_out, _ = run(capsys, "analyze", bundle, "--skip-dynamic", "--skip-linkpred")
        keyed = lambda doc: {(f["fault_type"], f["location"]) for f in json.loads(doc)["findings"]}
        assert keyed(rules_out) <= keyed(full_out), name


def test_export_kg_stdout(capsys, fixtures_dir):
    code, out, _ = run(
        capsys, "export-kg", str(fixtures_dir / "clean_mlp"), "--skip-dynamic"
    )
    assert code == 0
    triples = parse_ntriples(out.encode())
    assert any(t[1].endswith("usesLoss") for t in triples)
    assert not any(t[1].endswith("locatedAt") for t in triples)


def test_export_kg_infer_adds_derived_facts(capsys, fixtures_dir):
    plain = run(capsys, "export-kg", str(fixtures_dir / "clean_mlp-m-lib-s100"), "--skip-dynamic")[1]
    inferred = run(
        capsys,
        "export-kg", str(fixtures_dir / "clean_mlp-m-lib-s100"),
        "--skip-dynamic", "--infer",
    )[1]
    assert set(parse_ntriples(plain.encode())) < set(parse_ntriples(inferred.encode()))
    assert any(t[1].endswith("locatedAt") for t in parse_ntriples(inferred.encode()))
