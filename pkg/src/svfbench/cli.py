"""svf-bench command line."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd

import numpy as np

from . import bounds as B
from . import dist as D
from . import experiments as E
from . import schedule as S
from .instance_io import InstanceFormatError, dump_instance, load_instance
from .lindley import Instance, evaluate_mc, exact_evaluator, run
from .sequence import (CapExceededError, ScheduleRule, default_threads, enumerate_optimal,
                       format_seq, svf)

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3
SCHEDULES = ("mean", "sigma-slack", "lognormal-mult", "opt-discrete", "opt-continuous")
TARGETS = ("table3", "table4", "figure1", "example2", "example3", "cayirli", "asymptotic", "twogroup")


@dataclass
class RunConfig:
    command: str
    instance_path: str | None = None
    omega: float | None = None
    schedule: str = "mean"
    alpha: float | None = None
    grid_step: float | None = None
    tol: float = 1e-8
    seed: int = 0
    samples: int = 100_000
    threads: int = 1
    extended: bool = False
    force: bool = False
    out_path: str | None = None

    @classmethod
    def from_args(cls, a) -> "RunConfig":
        alpha = getattr(a, "alpha", "auto")
        cfg = cls(
            command=a.command,
            instance_path=getattr(a, "instance", None),
            omega=getattr(a, "omega", None),
            schedule=getattr(a, "schedule", "mean"),
            alpha=None if alpha in (None, "auto") else float(alpha),
            grid_step=getattr(a, "grid_step", None),
            tol=getattr(a, "tol", 1e-8),
            seed=getattr(a, "seed", 0),
            samples=getattr(a, "samples", 100_000),
            threads=getattr(a, "threads", None) or default_threads(),
            extended=getattr(a, "extended", False),
            force=getattr(a, "force", False),
            out_path=getattr(a, "out", None),
        )
        if cfg.omega is not None and not 0.0 < cfg.omega <= 1.0:
            raise ValueError("--omega must lie in (0, 1]")
        return cfg


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svf-bench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def inst(sp, required=True):
        sp.add_argument("-i", "--instance", required=required, help="instance JSON file")
        sp.add_argument("--omega", type=float, help="override the instance weight")
        sp.add_argument("--dump-instance", metavar="PATH", help="write the parsed instance back out")

    def sched(sp):
        sp.add_argument("--schedule", choices=SCHEDULES, default="mean")
        sp.add_argument("--alpha", default="auto", help="auto or a number")
        sp.add_argument("--grid-step", type=float, help="grid width for exact discrete evaluation")
        sp.add_argument("--tol", type=float, default=1e-8)

    def par(sp):
        sp.add_argument("--threads", type=int, help="worker processes (default: all cores)")
        sp.add_argument("--force", action="store_true", help="run beyond the enumeration cap")

    def mc(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=100_000)

    e = sub.add_parser("eval", help="cost of a sequence and schedule")
    inst(e)
    sched(e)
    mc(e)
    e.add_argument("--seq", help="1-based comma list (default: SVF)")
    e.add_argument("--x", help="explicit schedule, comma list by patient")
    e.add_argument("--mc", action="store_true", help="simulate instead of exact evaluation")

    s = sub.add_parser("svf", help="print the SVF order")
    inst(s)

    se = sub.add_parser("search", help="exhaustive best sequence")
    inst(se)
    sched(se)
    par(se)
    se.add_argument("--no-prune", action="store_true")
    se.add_argument("--prune-override", action="store_true",
                    help="prune even without a dilation certificate")
    se.add_argument("--log", action="store_true", help="print every evaluated sequence")

    so = sub.add_parser("schedule-opt", help="optimal schedule for one sequence")
    inst(so)
    sched(so)
    so.add_argument("--seq", help="1-based comma list (default: SVF)")

    r = sub.add_parser("ratio", help="SVF approximation ratio")
    inst(r)
    sched(r)
    par(r)
    r.add_argument("--mode", choices=("mean", "opt"), default="mean")

    b = sub.add_parser("bounds", help="computable bounds as CSV")
    inst(b)
    mc(b)
    b.set_defaults(samples=1_000_000)
    b.add_argument("--which", choices=("all", "k", "t5", "t9", "envelope"), default="all")

    rep = sub.add_parser("reproduce", help="regenerate a benchmark CSV")
    rep.add_argument("target", choices=TARGETS)
    rep.add_argument("--extended", action="store_true")
    rep.add_argument("--n-max", type=int)
    rep.add_argument("--out", help="output directory (default $SVF_BENCH_OUT or ./out)")
    par(rep)
    rep.add_argument("--seed", type=int)
    rep.add_argument("--samples", type=int)
    return p


# ---------------------------------------------------------------- helpers


def _parse_seq(text, n):
    if text is None:
        return None
    try:
        seq = tuple(int(t) - 1 for t in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad sequence {text!r}") from exc
    if sorted(seq) != list(range(n)):
        raise ValueError(f"sequence must be a permutation of 1..{n}")
    return seq


def _auto_grid(inst: Instance):
    """Common grid for atomic instances (support and means), else 1.0; None if exponential."""
    if all(type(d) is D.Exponential for d in inst.patients):
        return None
    if not all(D.is_atomic(d) for d in inst.patients):
        return 1.0
    vals = []
    for d in inst.patients:
        v, _ = d.atoms()
        vals.extend(v.tolist())
        vals.append(d.mean)
    fr = [Fraction(x).limit_denominator(1000) for x in vals]
    if any(abs(float(f) - x) > 1e-9 for f, x in zip(fr, vals)):
        return 1.0
    den = reduce(lambda a, b: a * b // gcd(a, b), (f.denominator for f in fr), 1)
    num = reduce(gcd, (abs(int(f * den)) for f in fr), 0)
    return float(Fraction(num, den)) if num else 1.0


def _grid(cfg, inst):
    return cfg.grid_step if cfg.grid_step is not None else _auto_grid(inst)


def _rule(cfg, inst) -> ScheduleRule:
    grid = _grid(cfg, inst)
    if cfg.schedule == "opt-discrete" and grid is None:
        grid = 1.0
    return ScheduleRule(cfg.schedule, cfg.alpha, grid, cfg.tol)


def _schedule(cfg, inst, seq, omega):
    if cfg.schedule == "mean":
        return S.mean_based(inst), {}
    if cfg.schedule == "sigma-slack":
        a, x = S.sigma_slack(inst, omega, cfg.alpha)
        return x, {"alpha": a}
    if cfg.schedule == "lognormal-mult":
        a, x = S.lognormal_multiplicative(inst, omega, cfg.alpha)
        return x, {"alpha": a}
    grid = _grid(cfg, inst)
    if cfg.schedule == "opt-discrete":
        r = S.optimal_schedule_discrete(inst, seq, omega, grid or 1.0,
                                        exact_evaluator(inst, grid or 1.0, "phase"))
    else:
        r = S.optimal_schedule_continuous(inst, seq, omega, cfg.tol, exact_evaluator(inst, grid, "phase"))
    return r.schedule, {"objective": r.objective}


def _load(cfg, args) -> Instance:
    inst = load_instance(cfg.instance_path)
    if cfg.omega is not None:
        inst = inst.with_omega(cfg.omega)
    if getattr(args, "dump_instance", None):
        dump_instance(inst, args.dump_instance)
    return inst


def _print_rows(rows, columns, out=None):
    out = out or sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([E._fmt(r.get(c, "")) for c in columns])


def _print_table(rows, columns, out=None):
    out = out or sys.stdout
    width = {c: max(len(c), *(len(str(E._fmt(r.get(c, "")))) for r in rows)) for c in columns}
    out.write("  ".join(c.ljust(width[c]) for c in columns) + "\n")
    for r in rows:
        out.write("  ".join(str(E._fmt(r.get(c, ""))).ljust(width[c]) for c in columns) + "\n")


# ---------------------------------------------------------------- commands


def cmd_eval(cfg, args):
    inst = _load(cfg, args)
    omega = inst.omega
    seq = _parse_seq(args.seq, inst.n) or svf(inst)
    if args.x:
        x = np.array([float(t) for t in args.x.split(",")])
        extra = {}
    else:
        x, extra = _schedule(cfg, inst, seq, omega)
    for k, v in extra.items():
        print(f"# {k}={v!r}")
    if args.mc:
        print(f"# seed={cfg.seed} samples={cfg.samples}")
        cb, err = evaluate_mc(inst, seq, x, omega, cfg.samples, cfg.seed)
        sys.stdout.write(cb.to_csv())
        print(f"stderr_objective,{err.objective!r}")
    else:
        ev = exact_evaluator(inst, _grid(cfg, inst), "phase")
        cb = run(ev, seq, x, omega)
        sys.stdout.write(cb.to_csv())
    return EXIT_OK


def cmd_svf(cfg, args):
    print(format_seq(svf(_load(cfg, args))))
    return EXIT_OK


def cmd_search(cfg, args, rule=None):
    inst = _load(cfg, args)
    rule = rule or _rule(cfg, inst)
    if rule.per_sequence and inst.omega >= 1.0:
        raise ValueError("schedule optimization needs omega < 1 (omega = 1 makes every slot zero)")
    rep = enumerate_optimal(inst, rule, prune=not getattr(args, "no_prune", False),
                            prune_override=getattr(args, "prune_override", False),
                            grid_step=rule.grid_step, offgrid="phase", threads=cfg.threads,
                            force=cfg.force, keep_log=getattr(args, "log", False))
    if rep.per_sequence_log:
        for obj, seq in rep.per_sequence_log:
            print(f"# {format_seq(seq)} {obj!r}")
    row = rep.row()
    _print_rows([row], E.TABLE_COLUMNS)
    print(f"# svf_sequence={format_seq(rep.svf_seq)} sequences_evaluated={rep.sequences_evaluated} "
          f"pruning={rep.pruning_used}")
    return EXIT_OK


def cmd_schedule_opt(cfg, args):
    inst = _load(cfg, args)
    if cfg.schedule not in ("opt-discrete", "opt-continuous"):
        cfg.schedule = "opt-discrete" if _grid(cfg, inst) is not None else "opt-continuous"
    if inst.omega >= 1.0:
        raise ValueError("schedule optimization needs omega < 1 (omega = 1 makes every slot zero)")
    seq = _parse_seq(args.seq, inst.n) or svf(inst)
    x, extra = _schedule(cfg, inst, seq, inst.omega)
    print("patient,x")
    for j, v in enumerate(x, start=1):
        print(f"{j},{v!r}")
    print(f"objective,{extra['objective']!r}")
    return EXIT_OK


def cmd_ratio(cfg, args):
    inst = _load(cfg, args)
    if args.mode == "opt":
        grid = _grid(cfg, inst)
        rule = ScheduleRule("opt-discrete", grid_step=grid) if grid is not None else \
            ScheduleRule("opt-continuous", tol=cfg.tol)
    else:
        rule = ScheduleRule("mean", grid_step=_grid(cfg, inst))
    return cmd_search(cfg, args, rule)


def cmd_bounds(cfg, args):
    inst = _load(cfg, args)
    omega = inst.omega if inst.omega < 1 else 0.5
    reports = []
    which = args.which

    def attempt(fn):
        try:
            reports.append(fn())
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            if which != "all":
                raise
            logging.info("skipped bound: %s", exc)

    if which in ("all", "envelope"):
        attempt(lambda: B.theorem12_envelope(inst))
    if which in ("all", "k"):
        def k():
            shape = B._shape_of(inst)
            if shape is None:
                raise ValueError("deterministic instance")
            return B.k_constant(shape, omega)
        attempt(k)
        if which == "all":
            attempt(lambda: B.newsvendor_lower(inst, omega))
            attempt(lambda: B.svf_upper(inst, omega))
    if which in ("all", "t5"):
        print(f"# seed={cfg.seed} samples={cfg.samples}")
        attempt(lambda: B.theorem5_bound(inst, cfg.samples, cfg.seed))
    if which in ("all", "t9"):
        attempt(lambda: B.theorem9_bound(inst, omega))
    _print_rows([r.row() for r in reports], ["name", "value", "stderr", "method", "assumptions"])
    return EXIT_OK


def cmd_reproduce(cfg, args):
    t = args.target
    path = cfg.out_path
    kw = {"path": path}
    if t == "table3":
        rows = E.run_table3(args.n_max or (11 if cfg.extended else 9), extended=cfg.extended,
                            threads=cfg.threads, **kw)
        _print_table(rows, E.TABLE_COLUMNS)
    elif t == "table4":
        rows = E.run_table4(args.n_max or (10 if cfg.extended else 7), extended=cfg.extended,
                            threads=cfg.threads, **kw)
        _print_table(rows, E.TABLE_COLUMNS)
    elif t == "figure1":
        rows = E.run_figure1(threads=cfg.threads, **kw)
        _print_table(rows, ["p", "rho1", "optimal_sequence_big_slot"])
    elif t == "example2":
        if cfg.extended:
            seed = args.seed or 0
            print(f"# seed={seed}")
            rows = E.run_example2(50_000, 500, 5_000, extended=True, samples=args.samples or 200,
                                  seed=seed, **kw)
        else:
            rows = E.run_example2(**kw)
        _print_table(rows, ["n", "m", "K", "svf_cost", "swapped_cost", "ratio_swapped", "rho1"])
    elif t == "example3":
        rows = E.run_example3(threads=cfg.threads, **kw)
        print(f"{rows[0]['ratio']:.4f}")
        _print_table(rows, E.TABLE_COLUMNS)
    elif t == "cayirli":
        seed = 1 if args.seed is None else args.seed
        print(f"# seed={seed}")
        rows = E.run_cayirli_bounds(seed, args.samples or 1_000_000, **kw)
        _print_table(rows, ["n_new", "n_return", "theorem5", "theorem5_stderr", "theorem9"])
        summ = E.cayirli_summary(rows)
        print(f"max theorem5 = {summ['theorem5']:.4f} (stderr {summ['theorem5_stderr']:.4f}); "
              f"theorem9 = {summ['theorem9']:.4f}")
    elif t == "asymptotic":
        seed = args.seed or 0
        print(f"# seed={seed}")
        rows = E.run_asymptotic("exp", samples=args.samples or 20_000, seed=seed, **kw)
        _print_table(rows, ["k", "EW", "normalized", "normalized_stderr"])
    elif t == "twogroup":
        seed = args.seed or 0
        print(f"# seed={seed}")
        row = E.run_twogroup(samples=args.samples or 2_000, seed=seed, **kw)
        _print_table([row], ["svf_cost", "svf_stderr", "mixed_cost", "mixed_stderr", "gap",
                             "gap_stderr", "group2_max_wait"])
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval, "svf": cmd_svf, "search": cmd_search, "schedule-opt": cmd_schedule_opt,
    "ratio": cmd_ratio, "bounds": cmd_bounds, "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[args.command](cfg, args)
    except CapExceededError as exc:
        print(f"svf-bench: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InstanceFormatError, ValueError, TypeError, OSError) as exc:
        print(f"svf-bench: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
