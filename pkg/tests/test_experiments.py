import math

import pytest

from svfbench import dist as D
from svfbench import experiments as E
from svfbench.sequence import CapExceededError


def test_families():
    inst = E.ExpLinear(4).generate()
    assert [d.rate for d in inst.patients] == [4, 3, 2, 1]
    ln = E.LognormalLinear(3).generate()
    assert ln.patients[2].m == pytest.approx(math.log(150))
    cm = E.CayirliMix(3, 2).generate(0.5)
    assert cm.n == 5 and cm.omega == 0.5
    ex = E.Example2(10, 10, 10).generate(1.0)
    assert ex.patients[0].var == pytest.approx(10)
    assert E.Example2(10).swapped()[0] == 8
    f = E.Figure1(0.75).generate(1.0)
    assert f.n == 200
    assert E.Example3().generate(0.5).n == 7


def test_write_csv_header(tmp_path):
    p = E.write_csv("x", {"seed": 3}, ["a", "b"], [{"a": 1, "b": 0.5}], tmp_path)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# seed=3")
    assert "numpy=" in lines[0]
    assert lines[1] == "a,b"


def test_small_table_runs(tmp_path):
    rows = E.run_table3(4, path=tmp_path)
    assert [r["optimal_sequence"] for r in rows] == ["1,2,3", "1,2,3,4"]
    with pytest.raises(CapExceededError):
        E.run_table3(10, path=tmp_path)
    with pytest.raises(CapExceededError):
        E.run_table4(8, path=tmp_path)


def test_example2_exact(tmp_path):
    row = E.run_example2(path=tmp_path)[0]
    assert row["ratio_swapped"] >= 1.29


def test_twogroup_small(tmp_path):
    row = E.run_twogroup(n=200, samples=200, path=tmp_path)
    assert row["group2_max_wait"] == 0.0


def test_asymptotic_small(tmp_path):
    rows = E.run_asymptotic("exp", k_list=(10,), samples=2000, path=tmp_path)
    assert 0.5 < rows[0]["normalized"] < 1.5
    with pytest.raises(ValueError):
        E.run_asymptotic("bogus", k_list=(10,), samples=10, path=tmp_path)
