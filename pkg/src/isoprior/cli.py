"""Command-line entry point: ``isoprior {gen,ratio,eval,grad-check,repair}``.

Exit codes: 0 success, 1 I/O or parse error, 2 invalid flags,
3 ``ratio --assert-admissible`` on an inadmissible mask.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import geometry, metrics, relax, repair as repair_mod, synth
from ._json import dumps
from .raster import GridShape, PGMError, load_pgm, save_pgm, threshold_field

EXIT_OK, EXIT_IO, EXIT_FLAGS, EXIT_INADMISSIBLE = 0, 1, 2, 3

GRAD_OPS = ("soft_area", "soft_perimeter", "soft_topology_penalty", "soft_dice_loss",
            "cross_entropy_loss")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_FLAGS)


def _open_unit(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tau", type=_open_unit, default=geometry.DEFAULT_TAU)
    p.add_argument("--lambda", dest="lam", type=_open_unit, default=0.5)
    p.add_argument("--mode", choices=geometry.MODES, default="filled")
    p.add_argument("--estimator", choices=geometry.ESTIMATORS, default="crofton")
    p.add_argument("--aggregate", choices=("mean", "min"), default="mean")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="isoprior", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="rasterize a synthetic shape")
    g.add_argument("--kind", choices=synth.KINDS, required=True)
    g.add_argument("--radius", type=_positive, default=20.0, help="R (outer radius for annuli)")
    g.add_argument("--inner", type=_positive, default=None, help="r for annuli")
    g.add_argument("--axes", type=_positive, nargs=2, metavar=("A", "B"), default=None)
    g.add_argument("--gap", type=float, default=60.0, help="gap angle in degrees")
    g.add_argument("--orientation", type=float, default=0.0)
    g.add_argument("--centers", default=None, help="multi_disk centers 'r,c;r,c'")
    g.add_argument("--size", type=int, nargs=2, metavar=("H", "W"), default=None)

    r = sub.add_parser("ratio", parents=[common], help="compactness report of a mask")
    r.add_argument("mask")
    r.add_argument("--assert-admissible", action="store_true")

    e = sub.add_parser("eval", parents=[common], help="Dice and Hausdorff distance")
    e.add_argument("--pred")
    e.add_argument("--gt")
    e.add_argument("--manifest")

    c = sub.add_parser("grad-check", parents=[common], help="finite-difference gradient check")
    c.add_argument("--op", choices=GRAD_OPS, required=True)
    c.add_argument("--size", type=int, default=16)
    c.add_argument("--step", type=_positive, default=1e-4)
    c.add_argument("--tol", type=_positive, default=1e-4)
    c.add_argument("--beta", type=_positive, default=50.0)

    p = sub.add_parser("repair", parents=[common], help="gradient-descent mask repair")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--reference", default=None, help="fidelity target (default: input thresholded)")
    p.add_argument("--w-dice", type=_nonneg, default=1.0)
    p.add_argument("--w-ce", type=_nonneg, default=1.0)
    p.add_argument("--w-topo", type=_nonneg, default=5.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--step-size", type=_positive, default=repair_mod.DEFAULT_STEP_SIZE)
    p.add_argument("--beta", type=_positive, default=repair_mod.DEFAULT_SOFT.beta)
    p.add_argument("--soft-mode", choices=geometry.MODES, default=repair_mod.DEFAULT_SOFT.mode)
    p.add_argument("--out-mask", default=None)
    p.add_argument("--trace", default=None)
    return parser


def _penalty_config(args) -> geometry.PenaltyConfig:
    agg = "area_weighted_mean" if args.aggregate == "mean" else "min"
    return geometry.PenaltyConfig(args.tau, args.mode, args.estimator, agg)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _cmd_gen(args) -> int:
    if not args.out:
        raise _FlagError("gen requires --out")
    grid = GridShape(*args.size) if args.size else None
    kind = args.kind
    if kind == "disk":
        spec = synth.disk(args.radius, grid)
    elif kind == "ellipse":
        a, b = args.axes or (args.radius, args.radius / 2.0)
        spec = synth.ellipse(a, b, grid)
    elif kind in ("annulus", "broken_annulus"):
        inner = args.inner if args.inner is not None else 0.75 * args.radius
        if kind == "annulus":
            spec = synth.annulus(args.radius, inner, grid)
        else:
            spec = synth.broken_annulus(args.radius, inner, args.gap, args.orientation, grid)
    else:
        if args.centers:
            if grid is None:
                raise _FlagError("multi_disk with --centers requires --size")
            centers = [tuple(float(t) for t in c.split(",")) for c in args.centers.split(";")]
            spec = synth.multi_disk(centers, [args.radius] * len(centers), grid)
        else:
            spec = synth.two_disks(args.radius)
    mask = synth.rasterize(spec)
    save_pgm(args.out, mask)
    sidecar = args.out[:-4] + ".json" if args.out.endswith(".pgm") else args.out + ".json"
    doc = {
        "spec": spec.to_dict(),
        "analytic_mu": {"raw": synth.analytic_mu(spec, "raw"),
                        "filled": synth.analytic_mu(spec, "filled")},
        "analytic_global_mu": synth.analytic_global_mu(spec, "filled"),
    }
    with open(sidecar, "w") as fh:
        fh.write(dumps(doc) + "\n")
    return EXIT_OK


def _cmd_ratio(args) -> int:
    mask = threshold_field(load_pgm(args.mask), args.lam)
    report = geometry.region_report(mask, _penalty_config(args))
    _emit(report.to_json(), args.out)
    if args.assert_admissible and not report.admissible:
        sys.stderr.write(f"error: mask is inadmissible (mu={report.aggregate_mu:.6f} <= tau={args.tau:.6f})\n")
        return EXIT_INADMISSIBLE
    return EXIT_OK


def _cmd_eval(args) -> int:
    if args.manifest:
        with open(args.manifest) as fh:
            rows = metrics.read_manifest(fh.read())
        text, failures = metrics.evaluate_manifest(rows, args.lam, os.path.dirname(args.manifest) or None)
        _emit(text.rstrip("\n"), args.out)
        return EXIT_IO if rows and failures == len(rows) else EXIT_OK
    if not (args.pred and args.gt):
        raise _FlagError("eval requires --pred and --gt, or --manifest")
    pred = threshold_field(load_pgm(args.pred), args.lam)
    gt = threshold_field(load_pgm(args.gt), args.lam)
    rep = metrics.evaluate(pred, gt)
    if args.fmt == "csv":
        hd = f"{rep.hausdorff:.6f}" if rep.hausdorff_defined else "undefined"
        _emit(f"pred,gt,dice,hausdorff\n{args.pred},{args.gt},{rep.dice:.6f},{hd}", args.out)
    else:
        _emit(rep.to_json(), args.out)
    return EXIT_OK


def _cmd_grad_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.size
    field = relax.random_field((n, n), rng)
    target = rng.random((n, n)) > 0.5
    cfg = relax.SoftConfig(beta=args.beta, lam=args.lam, tau=args.tau)
    fn, exclude = relax.gradient_op(args.op, cfg, target, field, args.step)
    report = relax.check_gradient(fn, field, args.step, args.tol, exclude=exclude, name=args.op)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def _cmd_repair(args) -> int:
    if args.steps < 1:
        raise _FlagError("--steps must be at least 1")
    field = load_pgm(args.input)
    reference = (threshold_field(load_pgm(args.reference), args.lam) if args.reference
                 else threshold_field(field, args.lam))
    problem = repair_mod.RepairProblem(
        init_field=field,
        reference=reference,
        weights=repair_mod.Weights(args.w_dice, args.w_ce, args.w_topo),
        steps=args.steps,
        step_size=args.step_size,
        soft=relax.SoftConfig(beta=args.beta, lam=args.lam, tau=args.tau, mode=args.soft_mode),
        seed=args.seed,
    )
    trace = repair_mod.repair(problem)
    if args.out:
        save_pgm(args.out, trace.final_field)
    if args.out_mask:
        save_pgm(args.out_mask, trace.final_mask)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(trace.to_csv())
    report = geometry.region_report(trace.final_mask, _penalty_config(args))
    summary = {
        "iterations": len(trace.records) - 1,
        "initial_total": trace.records[0].total,
        "final_total": trace.records[-1].total,
        "final_mu": report.aggregate_mu,
        "final_penalty": report.penalty,
        "admissible": report.admissible,
        "monotone": repair_mod.accepted_loss_monotone(trace),
    }
    sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


class _FlagError(Exception):
    pass


_COMMANDS = {
    "gen": _cmd_gen,
    "ratio": _cmd_ratio,
    "eval": _cmd_eval,
    "grad-check": _cmd_grad_check,
    "repair": _cmd_repair,
}


def run(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _FlagError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FLAGS
    except (OSError, PGMError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        # spec/shape validation failures raised while building inputs from flags
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FLAGS


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
