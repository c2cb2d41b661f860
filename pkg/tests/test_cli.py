import csv
import io
import json

import pytest

from sepkit.cache import ENV_VAR, Cache, resolve_dir
from sepkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_q(capsys):
    assert run(capsys, "q", "--k", "0", "--alpha", "2")[:2] == (0, "13/323\n")


def test_params(capsys):
    code, out, _ = run(capsys, "params", "--k", "1")
    assert code == 0
    assert "upper: α+11/6, α+13/6, α+9/5, α+11/5, α+12/5, α+13/5" in out


def test_rationalize(capsys):
    code, out, _ = run(capsys, "rationalize", "--value", "0.121212121212121212", "--digits", "18",
                       "--max-den", "1000000")
    assert (code, out) == (0, "4/33\n")


def test_rationalize_failure_exit_code(capsys):
    code, _, err = run(capsys, "rationalize", "--value", "3.14159265358979", "--max-den", "10")
    assert code == 1 and "error" in err


def test_usage_errors(capsys):
    code, _, err = run(capsys, "nonsense")
    assert code == 2
    code, _, err = run(capsys, "q", "--bogus")
    assert code == 2 and "usage" in err
    code, _, err = run(capsys, "q", "--alpha", "1/2")
    assert code == 2
    code, _, _ = run(capsys, "q", "--precision", "10")
    assert code == 2


def test_moments_csv(capsys):
    code, out, _ = run(capsys, "moments", "--count", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [["n", "moment"], ["0", "1"], ["1", "-2/969"], ["2", "20/1716099"]]


def test_json_tags(capsys):
    code, out, _ = run(capsys, "closed-form", "--k", "0", "--alpha", "1", "--format", "json")
    doc = json.loads(out)
    assert doc["rationalized"] == {"exact": "4/33"}
    assert doc["q"]["certified_digits"] >= 30


def test_figure_raw(capsys):
    code, out, _ = run(capsys, "figure", "raw", "--alpha-max", "10")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["alpha", "k=-1", "k=0", "k=1", "k=2", "k=3", "k=4"]
    assert rows[1][1:] == ["1/14", "4/33", "45/286", "1553/8398", "3073/14858", "8348/37145"]
    from fractions import Fraction
    for r in rows[1:]:
        vals = [Fraction(x) for x in r[1:]]
        assert vals == sorted(vals)


def test_figure_dual_json(capsys):
    code, out, _ = run(capsys, "figure", "dual", "--k-max", "200", "--format", "json")
    doc = json.loads(out)
    assert abs(float(doc["summary"]["slope"]) + 0.523280) <= 1e-4


def test_study_and_fit_ansatz(capsys):
    code, out, _ = run(capsys, "study", "ratio", "--k", "-1", "--max", "101")
    assert code == 0 and "0.41981" in out
    code, out, _ = run(capsys, "fit-ansatz", "--k", "4", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and any("9+4α" in e for e in doc["exceptions"])


def test_guess_from_file(tmp_path, capsys):
    f = tmp_path / "pts.csv"
    f.write_text("alpha,value\n" + "".join(f"{a},1/{a + 1}\n" for a in range(1, 21)))
    code, out, _ = run(capsys, "guess", "--input", str(f), "--max-degree", "1", "--format", "json")
    doc = json.loads(out)
    # p0 vanishes (degree -1 by convention)
    assert code == 0 and doc["degrees"] == [-1, 1, 1]


def test_mc_deterministic(capsys):
    a = run(capsys, "mc", "--samples", "2000", "--seed", "4", "--format", "json")[1]
    b = run(capsys, "mc", "--samples", "2000", "--seed", "4", "--format", "json")[1]
    assert a == b
    doc = json.loads(a)
    assert doc["p_d_positive"]["certified_digits"] == 0 and "standard_error" in doc["p_d_positive"]


def test_config_file_and_out(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("format = json\nprecision = 40\n")
    out = tmp_path / "o.json"
    code, stdout, _ = run(capsys, "g1", "--k", "0", "--alpha", "2", "--config", str(cfg), "--out", str(out))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text()) == {"g1": {"exact": "33/6068"}}
    # flags override the file
    code, stdout, _ = run(capsys, "g1", "--k", "0", "--alpha", "2", "--config", str(cfg), "--format", "text")
    assert stdout == "33/6068\n"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "g1", "--config", str(cfg))[0] == 2


def test_estimate_uses_cache(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ENV_VAR, str(tmp_path / "env"))
    code, out1, _ = run(capsys, "estimate", "--N", "30", "--format", "json")
    assert code == 0 and list((tmp_path / "env").glob("*.json"))
    code, out2, _ = run(capsys, "estimate", "--N", "30", "--format", "json", "--cache-dir", str(tmp_path / "flag"))
    assert list((tmp_path / "flag").glob("*.json"))
    assert out1 == out2


def test_cache_rules(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_VAR, str(tmp_path / "a"))
    assert resolve_dir(None) == tmp_path / "a"
    assert resolve_dir(tmp_path / "b") == tmp_path / "b"
    c = Cache(tmp_path)
    key = {"operation": "x", "k": 0}
    c.put(key, {"v": 1}, certified_digits=10)
    assert c.get(key) == {"v": 1}
    assert c.get(key, min_digits=20) is None
    assert c.get({"operation": "x", "k": 1}) is None
    assert not list(tmp_path.glob(".tmp-*"))
