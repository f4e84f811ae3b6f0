"""Batch command-line front end.

Subcommands read a flat key=value scenario config and emit CSV (or a
pass/fail report).  Every run is deterministic given its arguments; Monte
Carlo paths use counter-based seeded streams.

Exit codes: 0 success, 2 configuration error, 3 numerical-tolerance
failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import deltakernel as dk
from . import fisher as fi
from . import intensity as it
from . import process as pr
from . import verify as vf
from .errors import ConfigError, QArrivalError, ToleranceError
from .scenario import Scenario, StateFamily, log_family_Fn

THREADS_ENV = "QARRIVAL_THREADS"


def _max_workers():
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def _load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            return Scenario.from_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def _family(kind: str, scn: Scenario) -> StateFamily:
    param = 1.0 if scn.beam else scn.navg
    if kind == "fock":
        return StateFamily.fock(int(round(param)))
    if kind == "coherent":
        return StateFamily.coherent(param)
    if kind == "quasifree":
        return StateFamily.quasifree(param)
    raise ConfigError(f"unknown family {kind!r}")


def _parse_floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def _parse_ints(text: str):
    return [int(round(v)) for v in _parse_floats(text)]


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_intensity(args) -> int:
    scn = _load_scenario(args.config)
    curves = []
    if args.eps_list:
        for eps in _parse_floats(args.eps_list):
            if scn.beam:
                raise ConfigError("eps sweeps need a finite-mode base config")
            curves.append((f"eps={eps:g}", replace(scn, eps=eps)))
    if args.navg_list:
        for navg in _parse_floats(args.navg_list):
            curves.append((f"navg={navg:g}", scn.at_navg(navg)))
    if args.include_beam or scn.beam:
        curves.append(("beam", scn.at_navg(math.inf)))
    if not curves:
        curves.append(("base", scn))

    def build(item):
        label, s = item
        return label, it.build_profile(s, t_max=args.t_max, dt=args.dt)

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        profiles = list(pool.map(build, curves))
    rows = []
    for label, prof in profiles:
        stride = max(1, len(prof.t) // args.points)
        for i in range(0, len(prof.t), stride):
            rows.append((label, float(prof.t[i]), float(prof.omega[i]),
                         float(prof.Omega[i]), float(prof.domega[i])))
    _write_rows(args.out, ("curve", "t", "omega", "Omega", "domega_dp0"), rows)
    print(f"wrote {len(rows)} rows for {len(profiles)} curves to {args.out}")
    return 0


def cmd_density(args) -> int:
    scn = _load_scenario(args.config)
    if not scn.beam:
        raise ConfigError("density curves are defined for the beam config (mode=beam)")
    r0_list = _parse_floats(args.r0_list) if args.r0_list else [scn.r0]
    kinds = [k.strip() for k in args.families.split(",") if k.strip()]
    tv = np.linspace(0.0, args.t_max, args.points)
    rows = []
    dp_obj = dk.DeltaParams(scn.a, scn.m)
    for r0 in r0_list:
        om = dk.beam_intensity(tv, scn.p0, r0, dp_obj)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (om[1:] + om[:-1]) * np.diff(tv))])
        for kind in kinds:
            fam = _family(kind, scn)
            p1 = om * np.exp(log_family_Fn(fam, 1, cum))
            rows.extend((kind, r0, float(t), float(v)) for t, v in zip(tv, p1))
    _write_rows(args.out, ("family", "r0", "t", "p1"), rows)
    if args.pair_out:
        rows2 = []
        tg = np.linspace(1e-3, args.t_max, args.pair_points)
        for r0 in r0_list:
            om = dk.beam_intensity(tg, scn.p0, r0, dp_obj)
            cum_t = np.concatenate([[0.0], np.cumsum(0.5 * (om[1:] + om[:-1]) * np.diff(tg))])
            for kind in kinds:
                fam = _family(kind, scn)
                logf2 = log_family_Fn(fam, 2, cum_t)
                for i, t1 in enumerate(tg):
                    for j in range(i + 1, len(tg)):
                        lw = logf2[j] + math.log(om[i]) + math.log(om[j])
                        rows2.append((kind, r0, float(t1), float(tg[j]), math.exp(lw)))
        _write_rows(args.pair_out, ("family", "r0", "t1", "t2", "p2"), rows2)
    print(f"wrote densities to {args.out}")
    return 0


def cmd_fisher(args) -> int:
    scn = _load_scenario(args.config)
    fam = _family(args.family, scn)
    prof = it.build_profile(scn, t_max=args.t_max, dt=args.dt)
    rows = []
    for n in _parse_ints(args.n_list):
        rep = fi.fisher_info(n, fam, prof)
        rows.append((n, scn.r0, rep.value, rep.conditional, rep.p_tot, rep.noevent_part))
    _write_rows(args.out, ("n", "r0", "I_n", "I_n_cond", "p_n_tot", "noevent_part"), rows)
    print(f"wrote {len(rows)} information rows to {args.out}")
    return 0


def cmd_sweep_density(args) -> int:
    scn = _load_scenario(args.config)
    if not scn.beam:
        raise ConfigError("the density sweep runs in beam mode")
    fam = _family(args.family, scn)
    table = fi.density_sweep(_parse_ints(args.n_list), _parse_floats(args.r0_list),
                             fam, scn.p0, dk.DeltaParams(scn.a, scn.m),
                             t_max=args.t_max, dt=args.dt)
    rows = []
    for i, n in enumerate(table.n_values):
        for j, r0 in enumerate(table.r0_values):
            rows.append((table.family_kind, n, r0, float(table.info[i, j])))
    _write_rows(args.out, ("family", "n", "r0", "I_n"), rows)
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return 0


def cmd_sample(args) -> int:
    scn = _load_scenario(args.config)
    fam = _family(args.family, scn)
    prof = it.build_profile(scn, t_max=args.t_max, dt=args.dt, derivative=False)
    batch = pr.sample_batch(args.n, fam, prof, args.count, args.seed)
    with open(args.out, "w") as fh:
        fh.write("# n_detected,t_1..t_k,terminated\n")
        for rec in batch.records:
            parts = [str(rec.n_detected)]
            parts += [f"{t:.12g}" for t in rec.times]
            parts.append("1" if rec.terminated else "0")
            fh.write(",".join(parts) + "\n")
    print(f"wrote {args.count} records (seed {args.seed}) to {args.out}")
    return 0


def cmd_verify(args) -> int:
    checks = list(vf.INVARIANT_CHECKS)
    if not args.quick:
        checks += vf.ACCEPTANCE_CHECKS
    else:
        checks += [c for c in vf.ACCEPTANCE_CHECKS if c is not vf.check_mc_vs_quadrature]
    results = vf.run_checks(checks)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 4 if failed else 0


def build_parser():
    top = argparse.ArgumentParser(prog="qarrival",
                                  description="arrival-time statistics for absorptive detectors")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="flat key=value scenario file")
        p.add_argument("--t-max", type=float, default=None, help="tabulation horizon")
        p.add_argument("--dt", type=float, default=None, help="tabulation step")

    p = sub.add_parser("intensity", help="omega/Omega traces for detector-width and "
                                         "particle-number sweeps")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--eps-list", default="", help="comma list of detector widths")
    p.add_argument("--navg-list", default="", help="comma list of mean particle numbers")
    p.add_argument("--include-beam", action="store_true")
    p.add_argument("--points", type=int, default=2000, help="rows per curve")
    p.set_defaults(func=cmd_intensity)

    p = sub.add_parser("density", help="first/second arrival densities (beam)")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--families", default="coherent,quasifree")
    p.add_argument("--r0-list", default="")
    p.add_argument("--points", type=int, default=800)
    p.add_argument("--pair-out", default="", help="optional two-arrival grid CSV")
    p.add_argument("--pair-points", type=int, default=60)
    p.set_defaults(func=cmd_density, t_max=30.0)

    p = sub.add_parser("fisher", help="information vs detection count")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="coherent")
    p.add_argument("--n-list", default="1,2,3,4,5")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("sweep-density", help="information over an (n, r0) grid")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="coherent")
    p.add_argument("--n-list", default="1,2,3,5,8")
    p.add_argument("--r0-list", default="0,0.01,0.1,1,10,56.42,100")
    p.set_defaults(func=cmd_sweep_density)

    p = sub.add_parser("sample", help="draw arrival records")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="coherent")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run invariants and acceptance checks")
    p.add_argument("--quick", action="store_true",
                   help="skip the long Monte Carlo comparison")
    p.set_defaults(func=cmd_verify)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ToleranceError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        return 3
    except QArrivalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
