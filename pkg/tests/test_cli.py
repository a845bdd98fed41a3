import json
import math

import jsonschema
import pytest
from referencing import Registry, Resource

from revskew.cli import load_schema, main

SCHEMAS = {name: load_schema(name) for name in ("fiber", "system", "certificate", "report", "entropy")}
REGISTRY = Registry().with_resources(
    (f"{name}.schema.json", Resource.from_contents(s)) for name, s in SCHEMAS.items()
)


def validate(obj, name):
    jsonschema.Draft202012Validator(SCHEMAS[name], registry=REGISTRY).validate(obj)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture()
def generated(tmp_path, capsys):
    def make(kind, *extra):
        path = tmp_path / f"{kind}.json"
        code, _ = run(["generate", kind, *extra, "--out", path], capsys)
        assert code == 0
        validate(json.loads(path.read_text()), "system")
        return path
    return make


def test_validate_generated_near_identity(generated, tmp_path, capsys):
    cfg = generated("near_identity", "--k", 8)
    out = tmp_path / "cert.json"
    code, _ = run(["validate", "--config", cfg, "--out", out], capsys)
    assert code == 0
    cert = json.loads(out.read_text())
    validate(cert, "certificate")
    assert cert["verified"]


def test_validate_drift_counterexample(tmp_path, capsys):
    cfg = tmp_path / "drift.json"
    cfg.write_text(json.dumps({
        "alphabet": 2, "context_half": 1, "base": {"forbidden": []},
        "table": [
            {"context": [0, 0], "map": {"op": "identity"}},
            {"context": [0, 1], "map": {"op": "affine", "scale": 1.0, "offset": 0.01}},
            {"context": [1, 0], "map": {"op": "identity"}},
            {"context": [1, 1], "map": {"op": "identity"}},
        ],
    }))
    code, cap = run(["validate", "--config", cfg], capsys)
    assert code == 1
    cert = json.loads(cap.out)
    validate(cert, "certificate")
    assert cert["worst_pair"]["context"] in ([0, 1], [1, 0])
    assert "worst context" in cap.err


def test_malformed_json_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    for cmd in ("validate", "certify", "entropy"):
        code, _ = run([cmd, "--config", bad], capsys)
        assert code == 64


def test_missing_file_and_bad_flags(tmp_path, capsys):
    assert run(["validate", "--config", tmp_path / "nope.json"], capsys)[0] == 64
    with pytest.raises(SystemExit) as exc:
        main(["certify"])
    assert exc.value.code == 64


def test_unknown_run_config_key(generated, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"system": str(generated("drifting")), "deepness": 3}))
    assert run(["certify", "--config", cfg], capsys)[0] == 64
    cfg.write_text(json.dumps({"system": str(generated("drifting")), "exhaustive_depth": 20}))
    assert run(["certify", "--config", cfg], capsys)[0] == 64


def test_certify_coboundary(generated, tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _ = run(["certify", "--config", generated("coboundary"), "--out", out], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    validate(rep, "report")
    assert rep["case_label"] == "Case1_bounded"
    assert (tmp_path / "report.counts.csv").exists()


def test_certify_drifting(generated, tmp_path, capsys):
    out, csv = tmp_path / "report.json", tmp_path / "counts.csv"
    code, _ = run(["certify", "--config", generated("drifting", "--eps", 0.05), "--out", out, "--csv", csv], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    validate(rep, "report")
    assert rep["case_label"] == "Case2_certified"
    assert round(rep["certified_lower_bound"], 4) == 0.2310
    rows = csv.read_text().splitlines()
    assert rows[0] == "i,|B_i|,ln|B_i|/i" and len(rows) == 31
    i, n, h = rows[-1].split(",")
    assert int(i) == 30 and math.isclose(float(h), math.log(int(n)) / 30)


def test_certify_under_budget(generated, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"system": generated("drifting").name, "depth": 1}))
    code, cap = run(["certify", "--config", cfg], capsys)
    assert code == 2
    rep = json.loads(cap.out)
    validate(rep, "report")
    assert rep["case_label"] == "Inconclusive" and rep["failed_stage"] == "drift_search"


def test_certify_not_reversible(tmp_path, capsys):
    cfg = tmp_path / "sys.json"
    cfg.write_text(json.dumps({
        "alphabet": 2, "context_half": 1,
        "table": [
            {"context": [0, 0], "map": {"op": "qdrift", "eps": 0.1}},
            {"context": [0, 1], "map": {"op": "identity"}},
            {"context": [1, 0], "map": {"op": "identity"}},
            {"context": [1, 1], "map": {"op": "identity"}},
        ],
    }))
    code, cap = run(["certify", "--config", cfg], capsys)
    assert code == 3
    validate(json.loads(cap.out)["certificate"], "certificate")


def test_certify_threads_and_rerun_identical(generated, tmp_path, capsys):
    cfg = generated("drifting")
    a, b, c = (tmp_path / f"{n}.json" for n in "abc")
    assert run(["certify", "--config", cfg, "--out", a, "--threads", 1], capsys)[0] == 0
    assert run(["certify", "--config", cfg, "--out", b, "--threads", 4], capsys)[0] == 0
    assert run(["certify", "--config", cfg, "--out", c], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_generate_is_idempotent(generated, tmp_path, capsys):
    first = generated("random", "--seed", 4)
    again = tmp_path / "again.json"
    run(["generate", "random", "--seed", 4, "--out", again], capsys)
    assert first.read_bytes() == again.read_bytes()


def test_generate_invalid_eps(capsys):
    code, cap = run(["generate", "drifting", "--eps", 0.9], capsys)
    assert code == 64 and "eps" in cap.err


@pytest.mark.parametrize("sft, expected", [
    ({"alphabet": 2, "forbidden": []}, math.log(2)),
    ({"alphabet": 2, "forbidden": [[0, 1, 0], [1, 0, 1]]}, math.log((1 + math.sqrt(5)) / 2)),
])
def test_entropy(sft, expected, tmp_path, capsys):
    cfg = tmp_path / "sft.json"
    cfg.write_text(json.dumps(sft))
    code, cap = run(["entropy", "--config", cfg, "--max-len", 5], capsys)
    assert code == 0
    rep = json.loads(cap.out)
    validate(rep, "entropy")
    assert abs(rep["entropy"] - expected) < 1e-10
    assert len(rep["counts"]) == 5


def test_entropy_empty_subshift(tmp_path, capsys):
    cfg = tmp_path / "sft.json"
    cfg.write_text(json.dumps({"alphabet": 2, "forbidden": [[0], [1]]}))
    code, cap = run(["entropy", "--config", cfg], capsys)
    assert code == 2
    rep = json.loads(cap.out)
    validate(rep, "entropy")
    assert rep["error"] == "EmptySubshift"


def test_scan(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _ = run(["scan", "--kind", "drifting", "--param", "eps", "--values", "0.03,0.05", "--out", out], capsys)
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("kind,param,value,case_label")
    assert len(rows) == 3
    assert all(",Case2_certified," in r for r in rows[1:])


def test_scan_over_k(capsys):
    code, cap = run(["scan", "--kind", "near_identity", "--param", "k", "--values", "0,2", "--max-len", 12], capsys)
    assert code == 0
    assert len(cap.out.splitlines()) == 3


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "revskew", "generate", "drifting", "--eps", "0.9"], capture_output=True)
    assert res.returncode == 64
