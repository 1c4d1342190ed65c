import json
import os
import subprocess
import sys

import numpy as np
import pytest

from stable_lab import io as sio
from stable_lab.cli import main
from stable_lab.verify import gaussian_closed_form_cf

SAMPLE = ["sample", "--preset", "orbital", "--t", "0.5", "--alpha", "1.5", "--N", "2", "--m", "64", "--n", "1000"]


def _run(argv, tmp_path, name):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out


def test_sample_deterministic(tmp_path):
    code, a = _run(SAMPLE + ["--seed", "7"], tmp_path, "a.csv")
    assert code == 0
    _, b = _run(SAMPLE + ["--seed", "7"], tmp_path, "b.csv")
    _, c = _run(SAMPLE + ["--seed", "8"], tmp_path, "c.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith(sio.ECHO_PREFIX) and len(lines) == 1002
    assert sio.read_matrices(a.read_text()).shape == (1000, 2, 2)


def test_rerun_from_echo(tmp_path):
    _, a = _run(SAMPLE + ["--seed", "9", "--mu", "0.5"], tmp_path, "a.csv")
    code, b = _run(["sample", "--config", str(a)], tmp_path, "b.csv")
    assert code == 0 and a.read_bytes() == b.read_bytes()


def test_seed_defaults_from_entropy_and_is_echoed(tmp_path):
    _, a = _run(["sample", "--n", "3"], tmp_path, "a.csv")
    echo = sio.read_echo(a)
    assert isinstance(echo["seed"], int)
    _, b = _run(["sample", "--config", str(a)], tmp_path, "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_json_format(tmp_path):
    code, a = _run(SAMPLE + ["--seed", "1", "--format", "json", "--n", "4"], tmp_path, "a.json")
    data = json.loads(a.read_text())
    assert code == 0 and len(data["samples"]) == 4 and data["config"]["seed"] == 1


def test_invalid_inputs(tmp_path, capsys):
    assert main(["sample", "--alpha", "2.5", "--n", "1"]) == 2
    assert "alpha" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 2, "atoms": [[1.0, 1.0]], "weights": [1.0]}))
    assert main(["sample", "--measure", str(bad), "--n", "1"]) == 2
    assert "unit norm" in capsys.readouterr().err
    assert main(["sample", "--bogus"]) == 2
    assert main(["sample", "--preset", "orbital", "--N", "1", "--n", "1"]) == 2
    assert main(["sample", "--measure", str(tmp_path / "missing.json")]) == 2


def test_thread_count_does_not_change_output(tmp_path):
    env = dict(os.environ)
    outs = []
    for threads in ("1", "3"):
        env["STABLE_LAB_THREADS"] = threads
        out = tmp_path / f"t{threads}.csv"
        subprocess.run(
            [sys.executable, "-m", "stable_lab"] + SAMPLE + ["--seed", "5", "--out", str(out)],
            env=env, check=True,
        )
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_classify(capsys):
    assert main(["classify", "--preset", "orbital"]) == 0
    assert "FullHerm" in capsys.readouterr().out
    assert main(["classify", "--preset", "traceless", "--N", "3"]) == 0
    assert "TracelessHyperplane" in capsys.readouterr().out
    assert main(["classify", "--preset", "degenerate", "--N", "3"]) == 0
    assert "degenerate" in capsys.readouterr().out


def test_classify_identity_file(tmp_path, capsys):
    f = tmp_path / "id.json"
    f.write_text(json.dumps({"N": 2, "atoms": [[2**-0.5, 2**-0.5]], "weights": [1.0]}))
    assert main(["classify", "--measure", str(f)]) == 0
    assert "IdentityLine" in capsys.readouterr().out


def _cf_table(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def test_cf_compare_gaussian(tmp_path):
    code, out = _run(["cf-compare", "--alpha", "2", "--preset", "traceless", "--m", "4", "--n", "50000",
                      "--n-haar", "50000", "--seed", "3"], tmp_path, "cf.csv")
    assert code == 0
    rows = _cf_table(out)
    zero = [r for r in rows if set(r["s_spec"].split(";")) == {"0"}]
    assert len(zero) == 3 and all(float(r["re_cf"]) == 1.0 and float(r["im_cf"]) == 0.0 for r in zero)
    for r in rows:
        if r["source"] != "empirical":
            continue
        s = sio.from_triangle([float(v) for v in r["s_spec"].split(";")], 2)
        ev = np.linalg.eigvalsh(s)
        exact = gaussian_closed_form_cf(ev[1], 4)
        assert abs(complex(float(r["re_cf"]), float(r["im_cf"])) - exact) <= 5 * float(r["se"])


def test_cf_compare_analytic_vs_empirical_m1(tmp_path):
    code, out = _run(["cf-compare", "--alpha", "1", "--preset", "orbital", "--t", "0.8", "--m", "1",
                      "--n", "50000", "--n-haar", "50000", "--seed", "4", "--mu", "0.3"], tmp_path, "cf.csv")
    assert code == 0
    rows = _cf_table(out)
    by_s = {}
    for r in rows:
        by_s.setdefault(r["s_spec"], {})[r["source"]] = r
    for group in by_s.values():
        a, e = group["analytic"], group["empirical"]
        diff = complex(float(a["re_cf"]), float(a["im_cf"])) - complex(float(e["re_cf"]), float(e["im_cf"]))
        assert abs(diff) < 5 * np.hypot(float(a["se"]), float(e["se"])) + 1e-12


def test_rate_fit_cli(tmp_path):
    code, out = _run(["rate-fit", "--alpha", "1.5", "--preset", "orbital", "--t", "0.3", "--seed", "2",
                      "--n-haar", "20000", "--format", "json"], tmp_path, "r.json")
    rep = json.loads(out.read_text())
    assert code == 0 and rep["verdicts"]["slope_in_window"]
    assert rep["config_hash"] == sio.config_hash(rep["config"])
    assert rep["seed"] == 2
    code, _ = _run(["rate-fit", "--alpha", "1", "--preset", "orbital", "--t", "1", "--seed", "2",
                    "--n-haar", "20000", "--no-drift"], tmp_path, "r2.csv")
    assert code == 3


def test_selftest_subset(tmp_path, capsys):
    out = tmp_path / "self.json"
    assert main(["selftest", "--only", "5,6", "--out", str(out)]) == 0
    assert "2/2 criteria passed" in capsys.readouterr().out
    assert json.loads(out.read_text())["verdicts"] == {"5": True, "6": True}
