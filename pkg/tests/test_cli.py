import hashlib
import inspect
import json

import pytest

from loopshift import errors
from loopshift.cli import main


def write(tmp_path, name, **kw):
    d = {"version": 1, "name": name, "degree": 30}
    d.update(kw)
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(d))
    return str(p)


@pytest.fixture
def specs(tmp_path):
    return {
        "F": write(tmp_path, "full", coeffs=[2]),
        "G": write(tmp_path, "renewal", generator={"tag": "constant", "value": 1}),
        "gold": write(tmp_path, "golden", coeffs=[1, 1], degree=12),
        "F2": write(tmp_path, "full2", coeffs=[0, 2]),
        "G2": write(tmp_path, "renewal2", generator={"tag": "constant", "value": 1, "stride": 2}),
    }


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exit_codes_are_distinct():
    classes = [c for _, c in inspect.getmembers(errors, inspect.isclass)
               if issubclass(c, errors.LoopShiftError) and c is not errors.LoopShiftError]
    codes = [c.exit_code for c in classes]
    assert len(codes) == len(set(codes))
    assert all(c >= 10 or c == 2 for c in codes)


def test_analyze_full_shift(capsys, specs):
    code, out, _ = run(capsys, "analyze", specs["F"], "--json")
    r = json.loads(out)
    assert code == 0
    assert float(r["lambda"]["lo"]) <= 2 <= float(r["lambda"]["hi"])
    assert r["spr"] == "Yes" and r["residual_ok"]


def test_analyze_golden_lucas(capsys, specs):
    code, out, _ = run(capsys, "analyze", specs["gold"], "--json")
    r = json.loads(out)
    assert r["fix"] == [1, 3, 4, 7, 11, 18, 29, 47, 76, 123, 199, 322]
    assert abs(float(r["lambda"]["lo"]) - 1.6180339887) < 1e-9
    code, out, _ = run(capsys, "analyze", specs["gold"])
    assert "residual OK" in out and "322" in out


def test_analyze_malformed(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"version": 1,\n "coeffs": [1, 2,]}')
    code, _, err = run(capsys, "analyze", str(p))
    assert code == 2 and "line 2" in err


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", str(tmp_path / "none.json"))
    assert code == 3


def test_entropy_mismatch_exit(capsys, specs, tmp_path):
    code, _, err = run(capsys, "almost-iso", specs["F"], specs["gold"], "--degree", "12",
                       "--output", str(tmp_path / "b"))
    assert code == errors.EntropyMismatch.exit_code == 10
    assert "EntropyMismatch" in err


def test_period_mismatch_exit(capsys, specs, tmp_path):
    code, _, _ = run(capsys, "almost-iso", specs["F2"], specs["F"], "--output", str(tmp_path / "b"))
    assert code == 11


def test_period_two_bundle_and_simulate(capsys, specs, tmp_path):
    out = tmp_path / "bundle"
    code, text, _ = run(capsys, "almost-iso", specs["F2"], specs["G2"], "--output", str(out))
    assert code == 0 and "period   2" in text
    manifest = json.loads((out / "manifest.json").read_text())
    for rel, digest in manifest["files"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    log = (out / "verification.log").read_text()
    assert "FAIL" not in log and "condition_star.F: PASS" in log
    common = json.loads((out / "common.json").read_text())
    assert common["coeffs"][5] == 1 and common["coeffs"][4] == 0

    code, text, _ = run(capsys, "simulate", str(out), "--mode", "injectivity", "--period", "8")
    assert code == 0 and "left" in text

    a = tmp_path / "ct1.json"
    b = tmp_path / "ct2.json"
    for p in (a, b):
        code, _, _ = run(capsys, "simulate", str(out), "--mode", "coding-times",
                         "--samples", "400", "--seed", "5", "--output", str(p))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_tampered_bundle(capsys, specs, tmp_path):
    out = tmp_path / "bundle"
    run(capsys, "almost-iso", specs["F2"], specs["G2"], "--output", str(out), "--verify-period", "0")
    with open(out / "common.json", "a") as fh:
        fh.write(" ")
    code, _, err = run(capsys, "simulate", str(out), "--mode", "injectivity")
    assert code == 2 and "checksum" in err


def test_bundle_is_reproducible(capsys, specs, tmp_path):
    for name in ("b1", "b2"):
        run(capsys, "almost-iso", specs["F2"], specs["G2"], "--output", str(tmp_path / name))
    m1 = (tmp_path / "b1" / "manifest.json").read_text()
    m2 = (tmp_path / "b2" / "manifest.json").read_text()
    assert m1 == m2


def test_simulate_return_times(capsys, specs):
    code, out, _ = run(capsys, "simulate", specs["G"], "--mode", "return-times", "--json")
    r = json.loads(out)
    assert code == 0 and abs(r["ratio"] - 0.5) < 1e-6 and r["exponential"]


def test_simulate_coding_times_needs_bundle(capsys, specs):
    code, _, _ = run(capsys, "simulate", specs["G"], "--mode", "coding-times")
    assert code == 2


def test_loops_lemma_command(capsys, specs):
    code, out, _ = run(capsys, "loops-lemma", specs["G"], "--r", "0,0,0,1", "--json")
    r = json.loads(out)
    assert code == 0 and r["identity"] and r["entropy_preserved"]
    assert r["series"][:5] == [1, 1, 1, 0, 2]
    code, _, _ = run(capsys, "loops-lemma", specs["gold"], "--r", "0,0,1")
    assert code == 16
    code, _, _ = run(capsys, "loops-lemma", specs["gold"], "--r", "x")
    assert code == 2


def test_gapprep_command(capsys, specs):
    code, out, _ = run(capsys, "gapprep", specs["F"], specs["G"], "--json")
    r = json.loads(out)
    assert code == 0 and r["N"] == 3 and r["f"] == r["g"]
    code, out, _ = run(capsys, "gapprep", specs["F"], specs["G"], "--beta", "19/10")
    assert code == 14


def test_first_return_command(capsys, tmp_path):
    out = tmp_path / "fr.json"
    code, text, _ = run(capsys, "first-return", "--matrix", "[[1,1],[1,0]]", "--degree", "6",
                        "--output", str(out))
    assert code == 0 and "z + z^2" in text
    assert json.loads(out.read_text())["coeffs"] == [1, 1, 0, 0, 0, 0]
    code, _, _ = run(capsys, "first-return", "--matrix", "[[0,1],[0,0]]")
    assert code == errors.NotIrreducible.exit_code


def test_global_flags_before_subcommand(capsys, specs):
    code, out, _ = run(capsys, "--degree", "6", "analyze", specs["F"], "--json")
    assert code == 0 and json.loads(out)["degree"] == 6


@pytest.mark.slow
def test_full_shift_bundle(capsys, specs, tmp_path):
    out = tmp_path / "bundle"
    code, text, _ = run(capsys, "almost-iso", specs["F"], specs["G"], "--output", str(out),
                        "--verify-period", "6")
    assert code == 0
    assert "FAIL" not in (out / "verification.log").read_text()
    common = json.loads((out / "common.json").read_text())["coeffs"]
    assert common[:6] == [0, 0, 1, 2, 5, 9]
