import json

import pytest

from svfbench.cli import EXIT_CAP, EXIT_INVALID, EXIT_OK, main
from svfbench.instance_io import load_instance


@pytest.fixture
def exp5(tmp_path):
    p = tmp_path / "exp5.json"
    p.write_text(json.dumps({"omega": 1, "patients": [{"dist": "exponential", "rate": 5 - i}
                                                      for i in range(5)]}))
    return str(p)


@pytest.fixture
def det(tmp_path):
    p = tmp_path / "det.json"
    p.write_text(json.dumps({"omega": 0.5, "patients": [{"dist": "point", "value": v}
                                                        for v in (3, 5, 2)]}))
    return str(p)


def _last_value(out, key):
    lines = out.strip().splitlines()
    i = next(k for k, l in enumerate(lines) if l.startswith(key))
    return lines[i + 1].split(",")


def test_eval_deterministic_is_zero(det, capsys):
    assert main(["eval", "-i", det, "--schedule", "mean"]) == EXIT_OK
    total = _last_value(capsys.readouterr().out, "totalWait")
    assert float(total[2]) == 0.0


def test_ratio_mean(exp5, capsys):
    assert main(["ratio", "--mode", "mean", "-i", exp5]) == EXIT_OK
    row = capsys.readouterr().out.splitlines()[1]
    assert row.endswith("1.00034218")
    assert '"2,1,3,4,5"' in row


def test_svf_and_dump(exp5, tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["svf", "-i", exp5, "--dump-instance", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "1,2,3,4,5"
    assert load_instance(out) == load_instance(exp5)


def test_eval_mc_echoes_seed_and_is_reproducible(exp5, capsys):
    args = ["eval", "-i", exp5, "--mc", "--samples", "2000", "--seed", "11"]
    main(args)
    a = capsys.readouterr().out
    main(args)
    assert a == capsys.readouterr().out
    assert "seed=11" in a


def test_schedule_opt_refuses_omega_one(exp5, capsys):
    assert main(["schedule-opt", "-i", exp5]) == EXIT_INVALID
    assert main(["schedule-opt", "-i", exp5, "--omega", "0.5", "--seq", "1,2,3,4,5"]) == EXIT_OK
    assert "objective" in capsys.readouterr().out


def test_bad_omega_and_file(exp5, tmp_path):
    assert main(["svf", "-i", exp5, "--omega", "1.5"]) == EXIT_INVALID
    assert main(["svf", "-i", str(tmp_path / "missing.json")]) == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text('{"patients": [{"dist": "weird"}]}')
    assert main(["svf", "-i", str(bad)]) == EXIT_INVALID
    assert main(["eval", "-i", exp5, "--seq", "1,1,2,3,4"]) == EXIT_INVALID


def test_unknown_flag():
    assert main(["svf", "--nope"]) == EXIT_INVALID


def test_cap_refusal(tmp_path):
    p = tmp_path / "big.json"
    p.write_text(json.dumps({"patients": [{"dist": "exponential", "rate": i + 1} for i in range(13)]}))
    assert main(["search", "-i", str(p)]) == EXIT_CAP


def test_bounds_csv(exp5, capsys):
    assert main(["bounds", "-i", exp5, "--omega", "0.5", "--which", "all", "--samples", "5000"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert "name,value,stderr,method,assumptions" in out
    names = {l.split(",")[0] for l in out if not l.startswith("#")}
    assert {"envelope", "K", "theorem5"} <= names


def test_reproduce_example3(tmp_path, capsys):
    assert main(["reproduce", "example3", "--out", str(tmp_path)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "1.0787"
    assert (tmp_path / "example3.csv").exists()


def test_reproduce_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SVF_BENCH_OUT", str(tmp_path))
    assert main(["reproduce", "example2"]) == EXIT_OK
    text = (tmp_path / "example2.csv").read_text()
    assert text.startswith("#")
