"""JSON instance files.

Top level: ``{"omega": w, "patients": [...]}``. Each patient is an object with
a ``dist`` key and its parameters, plus optional ``scale``, ``negate`` and
``shift`` modifiers applied in that order.
"""

from __future__ import annotations

import json

import numpy as np

from . import dist as D
from .lindley import Instance
from .pmf import GridPMF


class InstanceFormatError(ValueError):
    pass


def _num(obj, key):
    if key not in obj:
        raise InstanceFormatError(f"patient is missing {key!r}: {obj}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{key!r} must be a number, got {v!r}")
    return float(v)


_BUILDERS = {
    "exponential": lambda o: D.Exponential(_num(o, "rate")),
    "lognormal": lambda o: D.Lognormal(_num(o, "m"), _num(o, "s")),
    "lognormal_meansd": lambda o: D.Lognormal(*D.lognormal_from_mean_sd(_num(o, "mean"), _num(o, "sd"))),
    "twopoint": lambda o: D.TwoPoint(_num(o, "lo"), _num(o, "hi"), _num(o, "p_hi")),
    "point": lambda o: D.PointMass(_num(o, "value")),
    "normal": lambda o: D.Normal(_num(o, "mean"), _num(o, "sd")),
    "uniform": lambda o: D.Uniform(_num(o, "lo"), _num(o, "hi")),
    "laplace": lambda o: D.Laplace(_num(o, "loc"), _num(o, "b")),
    "pareto2": lambda o: D.ParetoII(_num(o, "mu"), _num(o, "sigma"), _num(o, "beta")),
    "threepoint": lambda o: D.ThreePointSymmetric(_num(o, "center"), _num(o, "a")),
}


def patient_from_dict(obj) -> D.ServiceDistribution:
    if not isinstance(obj, dict) or "dist" not in obj:
        raise InstanceFormatError(f"patient entries need a 'dist' key: {obj!r}")
    kind = obj["dist"]
    try:
        if kind == "discrete":
            probs = obj.get("probs")
            if not isinstance(probs, list) or not probs:
                raise InstanceFormatError("discrete patient needs a nonempty 'probs' list")
            offset = obj.get("offset", 0)
            if isinstance(offset, bool) or not isinstance(offset, int):
                raise InstanceFormatError("'offset' must be an integer")
            d = D.Discrete(GridPMF(_num(obj, "step"), offset, np.array(probs, dtype=float)))
        elif kind in _BUILDERS:
            d = _BUILDERS[kind](obj)
        else:
            raise InstanceFormatError(f"unknown dist {kind!r}")
        if "scale" in obj:
            d = D.Scaled(d, _num(obj, "scale"))
        if obj.get("negate", False):
            d = D.Negated(d)
        if "shift" in obj:
            d = D.Shifted(d, _num(obj, "shift"))
    except InstanceFormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise InstanceFormatError(str(exc)) from exc
    return d


def instance_from_dict(obj) -> Instance:
    if not isinstance(obj, dict):
        raise InstanceFormatError("instance must be a JSON object")
    pats = obj.get("patients")
    if not isinstance(pats, list) or not pats:
        raise InstanceFormatError("'patients' must be a nonempty array")
    omega = _num(obj, "omega") if "omega" in obj else 1.0
    try:
        return Instance(tuple(patient_from_dict(p) for p in pats), omega)
    except InstanceFormatError:
        raise
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def load_instance(path) -> Instance:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    return instance_from_dict(obj)


def patient_to_dict(d: D.ServiceDistribution) -> dict:
    mods = {}
    if isinstance(d, D.Shifted):
        mods["shift"] = d.c
        d = d.base
    if isinstance(d, D.Negated):
        mods["negate"] = True
        d = d.base
    if isinstance(d, D.Scaled):
        mods["scale"] = d.gamma
        d = d.base
    if isinstance(d, (D.Shifted, D.Scaled, D.Negated)):
        raise InstanceFormatError("modifiers must nest as shift(negate(scale(base)))")
    t = type(d)
    if t is D.Exponential:
        out = {"dist": "exponential", "rate": d.rate}
    elif t is D.Lognormal:
        out = {"dist": "lognormal", "m": d.m, "s": d.s}
    elif t is D.TwoPoint:
        out = {"dist": "twopoint", "lo": d.lo, "hi": d.hi, "p_hi": d.p_hi}
    elif t is D.PointMass:
        out = {"dist": "point", "value": d.value}
    elif t is D.Normal:
        out = {"dist": "normal", "mean": d.mu, "sd": d.sigma}
    elif t is D.Uniform:
        out = {"dist": "uniform", "lo": d.lo, "hi": d.hi}
    elif t is D.Laplace:
        out = {"dist": "laplace", "loc": d.loc, "b": d.scale}
    elif t is D.ParetoII:
        out = {"dist": "pareto2", "mu": d.mu, "sigma": d.sigma, "beta": d.beta}
    elif t is D.ThreePointSymmetric:
        out = {"dist": "threepoint", "center": d.center, "a": d.a}
    elif t is D.Discrete:
        out = {"dist": "discrete", "step": d.pmf.step, "offset": d.pmf.offset,
               "probs": d.pmf.probs.tolist()}
    else:
        raise InstanceFormatError(f"cannot serialize {t.__name__}")
    out.update(mods)
    return out


def instance_to_dict(inst: Instance) -> dict:
    return {"omega": inst.omega, "patients": [patient_to_dict(d) for d in inst.patients]}


def dump_instance(inst: Instance, path=None) -> str:
    text = json.dumps(instance_to_dict(inst), indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
