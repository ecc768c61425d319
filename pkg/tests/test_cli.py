import json

import numpy as np
import pytest
from click.testing import CliRunner

from qzkp import cli, qip
from qzkp.fixtures import get_fixture, m4_chain, unveil


@pytest.fixture
def runner():
    return CliRunner()


def _export(tmp_path, name, triple, **meta):
    p = tmp_path / f"{name}.json"
    cli.save_protocol(p, *triple, **meta)
    return p


def test_canonical_dumps_format():
    text = cli.canonical_dumps({"b": [1, 0.1, True, None], "a": 1.0})
    assert text == '{"a":1.0,"b":[1,0.10000000000000001,true,null]}\n'
    assert cli.canonical_text(text) == text


@pytest.mark.parametrize("name,fx", [("unveil", unveil), ("m4", m4_chain)])
def test_round_trip_is_canonical_and_faithful(tmp_path, name, fx):
    triple = fx(0.1)
    p = _export(tmp_path, name, triple, epsilon=0.1)
    text = p.read_text()
    assert cli.canonical_text(text) == text
    ps, h, sim, meta = cli.load_protocol(p)
    assert cli.canonical_dumps(cli.export_protocol(ps, h, sim, **meta)) == text
    assert qip.run(ps, h)[0] == pytest.approx(qip.run(*triple[:2])[0], abs=1e-12)
    assert meta["epsilon"] == 0.1
    assert qip.is_public_coin(ps) == qip.is_public_coin(triple[0])


def _doc(tmp_path):
    return json.loads(_export(tmp_path, "u", unveil()).read_text())


def _write(tmp_path, doc, raw=None):
    p = tmp_path / "bad.json"
    p.write_text(raw if raw is not None else json.dumps(doc))
    return str(p)


def test_schema_errors_exit_2(runner, tmp_path):
    doc = _doc(tmp_path)
    doc["extra"] = 1
    assert runner.invoke(cli.main, ["run", _write(tmp_path, doc)]).exit_code == 2
    doc = _doc(tmp_path)
    doc["verifier"][0][0]["colour"] = "red"
    assert runner.invoke(cli.main, ["run", _write(tmp_path, doc)]).exit_code == 2
    doc = _doc(tmp_path)
    doc["meta"]["epsilon"] = float("nan")
    assert runner.invoke(cli.main, ["run", _write(tmp_path, doc, json.dumps(doc))]).exit_code == 2
    assert runner.invoke(cli.main, ["run", _write(tmp_path, None, "{not json")]).exit_code == 2
    assert runner.invoke(cli.main, ["run", str(tmp_path / "missing.json")]).exit_code == 2
    doc = _doc(tmp_path)
    del doc["registers"]["P"]
    assert runner.invoke(cli.main, ["run", _write(tmp_path, doc)]).exit_code == 2


def test_non_unitary_custom_exits_3_with_gate_index(runner, tmp_path):
    doc = _doc(tmp_path)
    doc["prover"][1].insert(0, {"matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]], "wires": [4]})
    r = runner.invoke(cli.main, ["run", _write(tmp_path, doc)])
    assert r.exit_code == 3
    assert "prover[1] gate 0" in r.output


def test_prover_touching_private_wire_exits_3(runner, tmp_path):
    doc = _doc(tmp_path)
    doc["prover"][0].append({"gate": "X", "wires": [0]})
    assert runner.invoke(cli.main, ["run", _write(tmp_path, doc)]).exit_code == 3


def test_cap_exits_4(runner, tmp_path):
    p = _export(tmp_path, "u", unveil())
    r = runner.invoke(cli.main, ["--max-qubits", "4", "run", str(p)])
    assert r.exit_code == 4
    from qzkp._config import set_caps
    set_caps(pure=24)


def test_run_and_failed_claim(runner, tmp_path):
    p = _export(tmp_path, "m4", m4_chain(0.1), epsilon=0.1)
    r = runner.invoke(cli.main, ["run", str(p)])
    assert r.exit_code == 0 and "0.900000000" in r.output
    p = _export(tmp_path, "m4b", m4_chain(0.1), epsilon=0.05)
    assert runner.invoke(cli.main, ["run", str(p)]).exit_code == 1


def test_public_coin_pipeline(runner, tmp_path):
    src = _export(tmp_path, "u", unveil(), epsilon=0.0)
    out = tmp_path / "pc.json"
    r = runner.invoke(cli.main, ["transform", "--kind", "public-coin", str(src), str(out)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(cli.main, ["verify-zk", "--mode", "perfect", str(out)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(cli.main, ["rewind", str(out), "--trials", "2"])
    assert r.exit_code == 0, r.output
    assert "measured 0.500000000 vs claimed 0.5" in r.output


@pytest.mark.parametrize("kind,extra", [("par-rep", ["--k", "2"]), ("seq-rep", ["--k", "2", "--t", "1"]),
                                        ("perfect-complete", ["--eps", "0.1"]),
                                        ("parallelize", [])])
def test_transform_kinds(runner, tmp_path, kind, extra):
    src = _export(tmp_path, "m4", m4_chain(0.1), epsilon=0.1)
    out = tmp_path / "t.json"
    r = runner.invoke(cli.main, ["transform", "--kind", kind, *extra, str(src), str(out)])
    assert r.exit_code == 0, r.output
    assert runner.invoke(cli.main, ["run", str(out)]).exit_code == 0
    assert runner.invoke(cli.main, ["verify-zk", "--mode", "perfect", str(out)]).exit_code == 0


def test_verify_zk_perfect_fails_on_wrong_simulator(runner, tmp_path):
    doc = _doc(tmp_path)
    doc["simulator"][1] = doc["simulator"][1][:-5]
    path = _write(tmp_path, doc)
    assert runner.invoke(cli.main, ["verify-zk", "--mode", "perfect", path]).exit_code == 1
    assert runner.invoke(cli.main, ["verify-zk", "--mode", "statistical", path]).exit_code == 0


def test_rewind_with_verifier_file(runner, tmp_path):
    src = _export(tmp_path, "u", unveil())
    rng = np.random.default_rng(0)
    from qzkp.qla import random_density, random_unitary
    mat = lambda m: [[[float(x.real), float(x.imag)] for x in row] for row in m]
    dv = {"w1": mat(random_unitary(16, rng)), "aux": mat(random_density(2, rng))}
    f = tmp_path / "dv.json"
    f.write_text(json.dumps(dv))
    r = runner.invoke(cli.main, ["rewind", str(src), "--dv-file", str(f)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(cli.main, ["rewind", _write(tmp_path, None, json.dumps(json.loads(
        _export(tmp_path, "m", m4_chain()).read_text())))])
    assert r.exit_code == 3


def test_attack_against_ground_truth(runner, tmp_path):
    p = tmp_path / "no.json"
    assert runner.invoke(cli.main, ["export-fixture", "m4-chain-no", str(p)]).exit_code == 0
    truth = get_fixture("m4-chain-no").cheat_value
    r = runner.invoke(cli.main, ["--out", str(tmp_path / "rep.json"), "attack", str(p),
                                 "--restarts", "2", "--iters", "50"])
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["checks"][0]["measured"] <= truth + 1e-6


def test_exit_codes_deterministic(runner, tmp_path):
    src = _export(tmp_path, "u", unveil())
    a = runner.invoke(cli.main, ["--seed", "5", "rewind", str(src), "--trials", "1"])
    b = runner.invoke(cli.main, ["--seed", "5", "rewind", str(src), "--trials", "1"])
    assert a.exit_code == b.exit_code == 0 and a.output == b.output


@pytest.mark.parametrize("fmt", ["json", "md", "csv"])
def test_report_formats(runner, tmp_path, fmt):
    r = runner.invoke(cli.main, ["report", "--format", fmt, "--only", "6,8"])
    assert r.exit_code == 0, r.output
    assert "C6.parallel" in r.output and "C8.ueps" in r.output
    if fmt == "json":
        doc = json.loads(r.output)
        assert doc["passed"] and all(c["rule"] for c in doc["checks"])
        saved = tmp_path / "r.json"
        saved.write_text(r.output)
        again = runner.invoke(cli.main, ["report", "--format", "csv", "--input", str(saved)])
        assert again.exit_code == 0 and "C6.sequential" in again.output


def test_report_bad_only(runner):
    assert runner.invoke(cli.main, ["report", "--only", "x"]).exit_code == 2
