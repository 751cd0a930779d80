"""Command-line front end.

Commands::

    csfem run <model.json> [--out DIR] [--vtk]
    csfem bench <name> [--l X] [--kind K] [--density N] [--steps N]
                       [--out DIR]
    csfem check <kind>
    csfem sweep <name> --l a,b,c --density p,q [--kind K] [--out DIR]

Exit codes: 0 success, 1 parse/validation failure, 2 solver failure,
3 benchmark metric failure.  ``CSFEM_THREADS`` caps element-level
parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
from itertools import product

from . import io as _io
from .basis import ELEMENT_KINDS, MEMBRANE_KINDS
from .benchmarks import (
    BENCH_NAMES,
    STUDIES,
    default_spec,
    generate,
    joint_resistance,
    plate_reaction_curve,
    profile_value,
    ring_profile,
    run_benchmark,
)
from .elements import check_stability
from .errors import CsfemError, ModelError, StepFailureError
from .model import parse_model, validate_model
from .solver import Analysis


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="csfem",
        description="couple-stress membrane finite elements with drilling "
                    "DoFs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a model file")
    p_run.add_argument("model", help="path to a JSON model file")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--vtk", action="store_true",
                       help="write a legacy-VTK file per step")

    p_bench = sub.add_parser("bench", help="run a built-in benchmark study")
    p_bench.add_argument("name", choices=BENCH_NAMES)
    p_bench.add_argument("--l", type=float, default=None,
                         help="characteristic length override")
    p_bench.add_argument("--kind", default=None,
                         help="element kind override")
    p_bench.add_argument("--density", type=int, default=None,
                         help="mesh density override")
    p_bench.add_argument("--steps", type=int, default=None,
                         help="load step override (plate)")
    p_bench.add_argument("--out", default=None, help="output directory")

    p_check = sub.add_parser("check", help="element stability report")
    p_check.add_argument("kind")

    p_sweep = sub.add_parser("sweep", help="parameter sweep of a benchmark")
    p_sweep.add_argument("name", choices=BENCH_NAMES)
    p_sweep.add_argument("--l", required=True,
                         help="comma-separated characteristic lengths")
    p_sweep.add_argument("--density", required=True,
                         help="comma-separated mesh densities")
    p_sweep.add_argument("--kind", default=None)
    p_sweep.add_argument("--out", default=None, help="output directory")
    return parser


def _norm_kind(kind):
    if kind is None:
        return None
    up = kind.upper()
    if up not in ELEMENT_KINDS:
        raise ModelError(f"unknown element kind {kind!r}")
    return up


def _write_run_outputs(out_dir, analysis, history, vtk):
    _io.ensure_dir(out_dir)
    model = analysis.model
    _io.write_nodal_csv(os.path.join(out_dir, "nodes.csv"), model,
                        analysis.dofmap, history[-1].displacements)
    _io.write_fields_csv(os.path.join(out_dir, "fields.csv"), analysis)
    _io.write_history_csv(os.path.join(out_dir, "history.csv"), history)
    if vtk:
        peeq = _io.element_peeq(analysis)
        for k, rec in enumerate(history.steps, start=1):
            _io.write_vtk(os.path.join(out_dir, f"step_{k:04d}.vtk"),
                          model, analysis.dofmap, rec.displacements,
                          peeq if k == len(history.steps) else None)


def cmd_run(args):
    try:
        with open(args.model) as f:
            text = f.read()
    except OSError as exc:
        print(f"error: cannot read {args.model}: {exc}", file=sys.stderr)
        return 1
    try:
        model = parse_model(text)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    diagnostics = validate_model(model)
    if diagnostics:
        for d in diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 1
    analysis = Analysis(model)
    try:
        history = analysis.run()
    except StepFailureError as exc:
        print(f"error: solver failed at step {exc.step}: {exc}",
              file=sys.stderr)
        return 2
    _write_run_outputs(args.out, analysis, history, args.vtk)
    print(f"converged {len(history)} step(s); results in {args.out}")
    return 0


def _print_metrics(result):
    width = max((len(m.name) for m in result.metrics), default=10)
    for m in result.metrics:
        verdict = "PASS" if m.passed else "FAIL"
        note = f"  ({m.note})" if m.note else ""
        print(f"  {m.name:<{width}}  {m.value: .6e}  "
              f"tol {m.tolerance:g}  {verdict}{note}")


def cmd_bench(args):
    kind = _norm_kind(args.kind)
    study = STUDIES[args.name]
    kwargs = {"l": args.l, "density": args.density}
    if args.name in ("patch", "ring", "joint"):
        kwargs["kind"] = kind
    if args.name == "plate":
        kwargs["steps"] = args.steps
    try:
        result, extras = study(**kwargs)
    except StepFailureError as exc:
        print(f"error: solver failed at step {exc.step}: {exc}",
              file=sys.stderr)
        return 2
    print(f"benchmark {args.name}:")
    _print_metrics(result)
    if args.out:
        _io.ensure_dir(args.out)
        _io.write_bench_csv(os.path.join(args.out, f"{args.name}.csv"),
                            [result])
        for pname, profile in result.profiles.items():
            _io.write_profile_csv(
                os.path.join(args.out, f"{args.name}_{pname}.csv"), profile)
        for key, snaps in extras.get("snapshots", {}).items():
            for u, rows in snaps.items():
                tag = f"l{key[0]:g}_n{key[1]}_u{u:g}".replace(".", "p")
                path = os.path.join(args.out, f"plate_peeq_{tag}.csv")
                with open(path, "w") as f:
                    f.write("element,point,x,y,peeq\n")
                    for row in rows:
                        f.write(",".join(repr(v) if isinstance(v, float)
                                         else str(v) for v in row) + "\n")
    print("verdict:", "PASS" if result.passed else "FAIL")
    return 0 if result.passed else 3


def cmd_check(args):
    try:
        kind = _norm_kind(args.kind)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if kind not in MEMBRANE_KINDS:
        print(f"{kind}: not a mixed element (no stability conditions "
              "to check)")
        return 0
    rep = check_stability(kind)
    print(f"stability report for {kind}:")
    print(f"  field sizes: strain {rep.i}x{rep.j}, curvature {rep.m}x{rep.n}")
    print(f"  integration points: {rep.n_ip}; stiffness {rep.n_k}x{rep.n_k}; "
          f"rigid-body modes: {rep.n_f}")
    verdict = "PASS" if rep.inequality_ok else "FAIL"
    print(f"  counting inequality: n_ip*min = {rep.lhs} >= {rep.rhs} "
          f"= max(sizes, n_k - n_f): {verdict}")
    verdict = "PASS" if rep.spectral_ok else "FAIL"
    print(f"  spectral test: {rep.zero_modes} zero-energy modes "
          f"(expected {rep.n_f}): {verdict}")
    print(f"  condition numbers: H4 {rep.cond_H4:.3e}, H5 {rep.cond_H5:.3e}")
    if rep.discrepancy:
        print("  note: the counting inequality disagrees with the spectral "
              "test; the spectral result is authoritative (the counting "
              "form is conservative for some interpolation choices).")
    return 0


def cmd_sweep(args):
    kind = _norm_kind(args.kind)
    lengths = [float(v) for v in args.l.split(",") if v]
    densities = [int(v) for v in args.density.split(",") if v]
    rows = []
    for l, density in product(lengths, densities):
        spec = default_spec(args.name, kind=kind, l=l, density=density)
        model, analysis, history, result = run_benchmark(spec)
        if args.name == "joint":
            value = joint_resistance(model, analysis, history)
        elif args.name == "ring":
            prof = ring_profile(model, analysis.dofmap,
                                history[-1].displacements)
            value = profile_value(prof, 1.4)
        elif args.name == "plate":
            value = plate_reaction_curve(model, analysis, history)[-1, 1]
        else:
            value = max(abs(m.value) for m in result.metrics)
        rows.append((l, density, value))
        print(f"  l={l:g} density={density}: {value:.6e}")
    if args.out:
        _io.ensure_dir(args.out)
        path = os.path.join(args.out, f"sweep_{args.name}.csv")
        with open(path, "w") as f:
            f.write("l,density,value\n")
            for l, density, value in rows:
                f.write(f"{l!r},{density},{value!r}\n")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_sweep(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StepFailureError as exc:
        print(f"error: solver failed at step {exc.step}: {exc}",
              file=sys.stderr)
        return 2
    except CsfemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
