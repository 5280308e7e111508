import json

import pytest

from svfbench import dist as D
from svfbench.instance_io import (InstanceFormatError, dump_instance, instance_from_dict,
                                  load_instance)
from svfbench.lindley import Instance

ALL = {
    "omega": 0.4,
    "patients": [
        {"dist": "exponential", "rate": 2.0},
        {"dist": "lognormal", "m": 3.9, "s": 0.33},
        {"dist": "twopoint", "lo": 0, "hi": 11, "p_hi": 0.9},
        {"dist": "point", "value": 4},
        {"dist": "normal", "mean": 1, "sd": 2},
        {"dist": "uniform", "lo": 0, "hi": 1},
        {"dist": "laplace", "loc": 0, "b": 1},
        {"dist": "pareto2", "mu": 0, "sigma": 1, "beta": 4},
        {"dist": "threepoint", "center": 0, "a": 0.5},
        {"dist": "discrete", "step": 0.5, "offset": 2, "probs": [0.25, 0.75]},
        {"dist": "twopoint", "lo": 0, "hi": 1, "p_hi": 0.5, "scale": 3, "negate": True, "shift": 2},
    ],
}


def test_round_trip(tmp_path):
    inst = instance_from_dict(ALL)
    p = tmp_path / "i.json"
    dump_instance(inst, p)
    again = load_instance(p)
    assert again == inst
    assert json.loads(dump_instance(again)) == json.loads(p.read_text())


def test_modifier_order():
    d = instance_from_dict(ALL).patients[-1]
    assert isinstance(d, D.Shifted)
    assert d.mean == pytest.approx(2 - 1.5)


def test_default_omega():
    inst = instance_from_dict({"patients": [{"dist": "point", "value": 1}]})
    assert inst.omega == 1.0


@pytest.mark.parametrize("bad", [
    [],
    {"patients": []},
    {"patients": [{"rate": 1}]},
    {"patients": [{"dist": "nope"}]},
    {"patients": [{"dist": "exponential"}]},
    {"patients": [{"dist": "exponential", "rate": "1"}]},
    {"patients": [{"dist": "exponential", "rate": -1}]},
    {"omega": 0, "patients": [{"dist": "point", "value": 1}]},
    {"patients": [{"dist": "discrete", "step": 1, "offset": 0.5, "probs": [1]}]},
])
def test_malformed(bad):
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)


def test_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        load_instance(p)


def test_unserializable_nesting():
    inst = Instance((D.Scaled(D.Shifted(D.Exponential(1), 1), 2),), 1.0)
    with pytest.raises(InstanceFormatError):
        dump_instance(inst)
