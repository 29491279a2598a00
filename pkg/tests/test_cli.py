import json
import subprocess
import sys

import pytest

from entroscope import __version__, cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_combine_scan_byte_identical(capsys):
    _, a, _ = run(["combine", "scan", "--n", "100", "--seed", "7"], capsys)
    _, b, _ = run(["combine", "scan", "--n", "100", "--seed", "7"], capsys)
    assert a == b
    head = a.splitlines()
    assert head[0] == f"# entroscope {__version__}"
    assert head[1] == "# seed: 7"
    assert any(line.startswith("# schema: i:int,H1:float") for line in head[:6])
    assert len([line for line in head if not line.startswith("#")]) == 101


def test_seed_changes_output(capsys):
    _, a, _ = run(["combine", "scan", "--n", "5", "--seed", "1"], capsys)
    _, b, _ = run(["combine", "scan", "--n", "5", "--seed", "2"], capsys)
    assert a != b


def test_gauss_fixture_monogamy_row(capsys):
    code, out, _ = run(["gauss", "check", "--fixture", "gmono8x8", "--op", "steer", "--json"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert abs(res["nu_min"] - 1.01359) < 1e-4
    assert abs(res["gap2"] + 0.816863) < 1e-4


def test_unknown_flag_exit_64(capsys):
    code, _, err = run(["combine", "scan", "--bogus"], capsys)
    assert code == cli.EXIT_USAGE == 64
    assert "usage" in err


def test_unknown_subcommand_exit_64(capsys):
    assert run(["nosuch"], capsys)[0] == 64


def test_malformed_file_exit_2(tmp_path, capsys):
    f = tmp_path / "state.json"
    f.write_text('{"rows": 2, "cols": 2,\n "re": [[1, 0], [0 0]]}')
    code, _, err = run(["entropy", "eval", "--file", str(f)], capsys)
    assert code == 2
    assert "state.json:2:" in err


def test_invalid_state_exit_2(tmp_path, capsys):
    f = tmp_path / "state.json"
    f.write_text(json.dumps({"rows": 2, "cols": 2, "re": [[0.7, 0], [0, 0.7]]}))
    assert run(["entropy", "eval", "--file", str(f)], capsys)[0] == 2


def test_cap_exceeded_exit_3(capsys):
    code, _, err = run(["polar", "run", "--channel", "pure:0.5", "--depth", "4", "--cap", "100"], capsys)
    assert code == 3 and "cap" in err


def test_entropy_eval_bell(tmp_path, capsys):
    f = tmp_path / "bell.json"
    re = [[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 0.5]]
    f.write_text(json.dumps({"rows": 4, "cols": 4, "re": re, "dims": [2, 2]}))
    code, out, _ = run(["entropy", "eval", "--file", str(f), "--json"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and abs(res["mutual_information_0_1"] - 1.3862943611198906) < 1e-12


def test_finite_n_fixture(capsys):
    code, out, _ = run(["hypo", "finite-n", "--json"], capsys)
    res = json.loads(out)["result"]
    assert code == 0
    for key, ref in (("iid", 0.352), ("swapped_last", 0.344), ("adaptive", 0.336)):
        assert abs(res[key] - ref) < 1e-3


def test_hypo_exponent_file(tmp_path, capsys):
    f = tmp_path / "pair.json"
    f.write_text(json.dumps({"rho": {"rows": 2, "cols": 2, "re": [[0.7, 0], [0, 0.3]]},
                             "sigma": {"rows": 2, "cols": 2, "re": [[0.2, 0], [0, 0.8]]}}))
    code, out, _ = run(["hypo", "exponent", "--file", str(f), "--r", "0.1", "--json"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and abs(res["chernoff"] - 0.146184401458320384) < 1e-9


def test_combine_bounds_ln2_suffix(capsys):
    code, out, _ = run(["combine", "bounds", "--h1", "0.5ln2", "--h2", "0.5ln2", "--json"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and abs(res["H1"] - 0.34657359027997264) < 1e-15
    assert "qmgl_iid" in res


def test_polar_out_file(tmp_path, capsys):
    p = tmp_path / "o.csv"
    code, out, _ = run(["polar", "run", "--channel", "bec:0.5", "--depth", "4", "--out", str(p)], capsys)
    assert code == 0 and out == ""
    lines = p.read_text().splitlines()
    assert lines[3].startswith("# summary:") and lines[4] == "# schema: n:int,alpha:float,theta:float,beta:float,mu:float,nu:float"
    assert len(lines) == 6 + 5


def test_thread_setting_does_not_change_bytes(capsys, monkeypatch):
    args = ["polar", "nonstat", "--channels", "bec:0.3,bec:0.7", "--repeat", "4", "--depth", "3"]
    _, a, _ = run(args, capsys)
    monkeypatch.setenv("ENTROSCOPE_THREADS", "2")
    _, b, _ = run(args + ["--threads", "2"], capsys)
    assert a == b


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "entroscope.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


@pytest.mark.parametrize("op", ["ssa", "satur", "petz", "eof"])
def test_gauss_ops_on_file(tmp_path, capsys, op):
    import numpy as np
    from entroscope import gausscm as G
    v = G.random_qcm([("A", 1), ("B", 1), ("C", 1)], np.random.default_rng(0))
    f = tmp_path / "v.json"
    f.write_text(G.cov_to_json(v))
    code, out, _ = run(["gauss", "check", "--file", str(f), "--op", op, "--restarts", "1", "--json"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["is_qcm"]
