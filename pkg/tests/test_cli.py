import json

import pytest

from gibbs_shapes import oracles as orc
from gibbs_shapes.cli import run
from gibbs_shapes.ensemble import THREADS_ENV

CURVE_ARGV = ["curve", "--model", "uniform", "--mu", "-5.3", "--oracle", "auto", "--grid", "0:2:0.05",
              "--exclude", "0.9,1.1", "--n", "200", "--seed", "7"]


def call(capsys, argv):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return lines[0], [ln.split(",") for ln in lines[1:]]


def test_classify(capsys):
    code, out, _ = call(capsys, ["classify", "--model", "uniform"])
    assert code == 0
    assert out.splitlines()[0] == "regime=Supercritical local=Gaussian mu_star=-inf"
    code, out, _ = call(capsys, ["classify", "--model", "power:p=2,a=0.5", "--json"])
    data = json.loads(out)
    assert data["regime"] == "Supercritical" and data["local_profile"] == "DiscreteGaussian"


def test_enumerate(capsys):
    code, out, _ = call(capsys, ["enumerate", "--M", "4"])
    header, body = rows(out)
    assert code == 0 and header == "profile,multiplicity"
    assert len(body) == 5 and sum(int(r[1]) for r in body) == 15


def test_curve_example(capsys):
    code, out, _ = call(capsys, CURVE_ARGV)
    assert code == 0
    header, body = rows(out)
    assert header == "x,empirical_mean,empirical_sd,oracle,n"
    assert len(body) == 41
    for x, _m, _s, o, n in body:
        assert float(o) == orc.step_shape(float(x)) and n == "200"
    comments = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert any("kappa=" in c and "zeta=" in c for c in comments)
    assert any("seed=7" in c for c in comments)


def test_curve_is_byte_identical_across_threads(capsys, monkeypatch):
    outs = []
    for threads in ("1", "4", "1"):
        monkeypatch.setenv(THREADS_ENV, threads)
        outs.append(call(capsys, CURVE_ARGV)[1])
    assert outs[0] == outs[1] == outs[2]


def test_curve_writes_file(tmp_path, capsys):
    path = tmp_path / "c.csv"
    assert run(CURVE_ARGV + ["--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert path.read_text().count("\n") > 41


def test_local_and_simulate(capsys):
    code, out, _ = call(capsys, ["local", "--model", "power:p=2,a=0.5", "--mu", "-40", "--grid=-2:3:1",
                                 "--n", "50", "--oracle", "discrete_gaussian"])
    assert code == 0 and len(rows(out)[1]) == 6
    code, out, _ = call(capsys, ["local", "--model", "power:p=3,a=0.3", "--kappa", "30", "--grid=-1:1:0.5",
                                 "--n", "20"])
    assert code == 0 and "oracle=hard_step" in out
    code, out, _ = call(capsys, ["simulate", "--model", "uniform", "--mu", "0", "--n", "3", "--seed", "1"])
    header, body = rows(out)
    assert code == 0 and header == "sample_index,mass,parts" and len(body) == 3


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model=uniform\nmu=-5.3\ngrid=0:2:0.5\nn=10\nseed=7\n")
    _, a, _ = call(capsys, ["curve", "--config", str(cfg)])
    _, b, _ = call(capsys, ["curve", "--config", str(cfg), "--n", "11"])
    assert len(rows(a)[1]) == 5 and a != b and rows(b)[1][0][-1] == "11"


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["classify"],
    ["curve", "--model", "uniform", "--mu", "-3", "--grid", "0:2:0.1", "--oracle", "gamma"],
    ["curve", "--model", "uniform", "--mu", "-3", "--grid", "2:0:0.1"],
    ["curve", "--model", "nosuchmodel", "--mu", "-3", "--grid", "0:2:0.1"],
    ["curve", "--model", "expr:'-x*ln(x)^2'", "--mu", "0", "--grid", "0:2:0.1"],
    ["local", "--model", "critical:mustar=0,d=2,v=const:0", "--mu", "0.1", "--grid", "0:1:0.5"],
    ["enumerate", "--M", "20"],
    ["curve", "--config", "/nonexistent.cfg"],
])
def test_config_errors_exit_2(capsys, argv):
    assert call(capsys, argv)[0] == 2


def test_numeric_error_exits_3(capsys):
    # mu below mu* = 1: no critical root / divergent sums
    code, _, err = call(capsys, ["curve", "--model", "critical:mustar=1,d=2,v=const:0", "--mu", "0.5",
                                 "--grid", "0:2:0.5"])
    assert code == 3 and "NoRoot" in err
    code, _, err = call(capsys, ["simulate", "--model", "expr:'ln(x)'", "--mu", "0", "--n", "2"])
    assert code == 3 and "DivergentSeries" in err


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = call(capsys, ["verify", "--only", "1,13"])
    assert code == 0 and out.splitlines()[0] == "check_id,status,statistic,threshold"
    assert all(",pass," in ln for ln in out.splitlines()[1:])

    from gibbs_shapes import acceptance
    from gibbs_shapes.verify import CheckResult

    monkeypatch.setitem(acceptance.CRITERIA, "13", lambda p, s: [CheckResult("13.forced", False, 1.0, "<0")])
    code, out, err = call(capsys, ["verify", "--only", "13"])
    assert code == 1 and "13.forced" in err and "13.forced,fail" in out
