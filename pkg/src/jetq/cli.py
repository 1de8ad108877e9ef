"""Command-line front end: invariant computations, equivalence tests, and the
bi-disc / homogeneous-bundle verification suites.

Exit codes: 0 success (or equivalent), 1 not-equivalent (equiv command only),
2 any error or failed verification.  Reports are JSON (or CSV rows) with
stable key order; pass --no-timing for byte-identical reruns.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import bidisc as bd
from . import expr as E
from .calculus import EvalPoint
from .equivalence import (DEFAULT_SEED, DEFAULT_TOL, default_hypersurface_samples,
                          order_k_equivalent)
from .geometry import (curvature_matrix, curvature_split, jet_metric,
                       second_fundamental_form)

SCHEMA_VERSION = 1


class CliError(Exception):
    pass


def _cnum(v: complex) -> list[float]:
    return [float(v.real), float(v.imag)]


def _cmatrix(mat: np.ndarray) -> list:
    if mat.ndim == 1:
        return [_cnum(v) for v in mat]
    return [[_cnum(v) for v in row] for row in mat]


def _seed() -> int:
    env = os.environ.get("JETQ_SEED")
    return int(env, 0) if env else DEFAULT_SEED


def _parse_params(text: str | None) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, val = item.partition("=")
        if not val:
            raise CliError(f"bad parameter assignment {item!r}")
        out[name.strip()] = float(val)
    return out


def _load_kernel(path: str, overrides: dict[str, float]):
    try:
        with open(path, encoding="utf-8") as fh:
            expr, dim, params = E.parse_kernel_file(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read kernel file {path}: {exc}") from exc
    except (ValueError, E.KernelSyntaxError) as exc:
        raise CliError(f"bad kernel file {path}: {exc}") from exc
    params.update(overrides)
    missing = E.parameter_names(expr) - set(params)
    if missing:
        raise CliError(f"unbound parameters in {path}: {sorted(missing)}")
    return expr, dim, params


def _grid(dim: int, radius: float, n_random: int, seed: int):
    return default_hypersurface_samples(dim, radius=radius, n_random=n_random, seed=seed)


def _base_report(args, command: str) -> dict:
    rep = {
        "schema": SCHEMA_VERSION,
        "engine_version": __version__,
        "command": command,
        "config": {
            "kernels": list(args.kernel or []),
            "params": args.params or "",
            "order": args.order,
            "tol": args.tol,
            "samples": args.samples,
            "radius": args.radius,
            "seed": _seed(),
        },
    }
    return rep


def _emit(report: dict, args, items_key: str | None = None,
          default_format: str = "json") -> None:
    if not args.no_timing:
        report["wall_time_s"] = report.get("wall_time_s", 0.0)
    fmt = args.format or default_format
    text: str
    if fmt == "csv" and items_key:
        buf = io.StringIO()
        items = report[items_key]
        if items:
            keys = sorted(items[0])
            writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
            writer.writeheader()
            for it in items:
                writer.writerow({k: it.get(k, "") for k in keys})
        text = buf.getvalue()
    else:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_invariants(args) -> int:
    expr, dim, params = _load_kernel(args.kernel[0], _parse_params(args.params))
    rep = _base_report(args, "invariants")
    t0 = time.perf_counter()
    points = _grid(dim, args.radius, args.samples, _seed())
    results = []
    for zprime in points:
        z0 = (0j,) + zprime
        curv = curvature_matrix(expr, z0, params)
        split = curvature_split(curv)
        sff = second_fundamental_form(expr, z0, params)
        jm = jet_metric(expr, args.order, z0, params)
        results.append({
            "point": _cmatrix(np.array(z0)),
            "curvature": _cmatrix(curv),
            "trans": split.trans,
            "tan": _cmatrix(split.tan),
            "angle": _cmatrix(split.angle),
            "second_fundamental_form": _cmatrix(sff),
            "jet_metric": _cmatrix(jm),
        })
    rep["results"] = results
    if not args.no_timing:
        rep["wall_time_s"] = time.perf_counter() - t0
    _emit(rep, args)
    return 0


def cmd_equiv(args) -> int:
    if len(args.kernel or []) != 2:
        raise CliError("equiv needs exactly two --kernel files")
    overrides = _parse_params(args.params)
    expr_a, dim_a, params_a = _load_kernel(args.kernel[0], overrides)
    expr_b, dim_b, params_b = _load_kernel(args.kernel[1], overrides)
    if dim_a != dim_b:
        raise CliError(f"kernel dimensions differ: {dim_a} vs {dim_b}")
    params = dict(params_a)
    params.update(params_b)
    rep = _base_report(args, "equiv")
    t0 = time.perf_counter()
    samples = _grid(dim_a, args.radius, args.samples, _seed())
    report = order_k_equivalent(expr_a, expr_b, args.order, samples=samples,
                                tol=args.tol, params=params, dimension=dim_a)
    rep["results"] = {
        "verdict": report.verdict,
        "order": report.order,
        "tol": report.tol,
        "residuals": {k: float(v) for k, v in sorted(report.residuals.items())},
        "n_samples": len(report.samples),
    }
    if not args.no_timing:
        rep["wall_time_s"] = time.perf_counter() - t0
    _emit(rep, args)
    return 0 if report.equivalent else 1


def _bidisc_rows(params: bd.ModuleParams, p_max: int) -> list[dict]:
    rows = []
    for p in range(p_max + 1):
        blk = bd.shift_blocks(params, p)
        rows.append({
            "p": p,
            "alpha_p": float(blk.m1[0, 0].real),
            "beta_p1": float(blk.m1[1, 0].real),
            "eta_p": float(blk.m1[1, 1].real),
            "beta_p2": float(blk.m2[1, 0].real),
        })
    return rows


def cmd_bidisc(args) -> int:
    params = bd.ModuleParams(args.lam, args.mu)
    if args.p_max > bd.MAX_ORACLE_DEGREE:
        raise CliError(f"p_max too large for lam+mu (limit {bd.MAX_ORACLE_DEGREE})")
    rep = _base_report(args, f"bidisc {args.subcommand}")
    rep["config"]["lam"] = args.lam
    rep["config"]["mu"] = args.mu
    rep["config"]["p_max"] = args.p_max
    t0 = time.perf_counter()

    if args.subcommand == "table":
        rep["rows"] = _bidisc_rows(params, args.p_max)
        if not args.no_timing:
            rep["wall_time_s"] = time.perf_counter() - t0
        _emit(rep, args, items_key="rows", default_format="csv")
        return 0

    # verify: oracle vs closed forms, then the restricted-kernel triangle
    bf = bd.brute_force_quotient(params, min(args.p_max, bd.MAX_ORACLE_DEGREE))
    block_resid = 0.0
    gram_resid = 0.0
    for p in range(args.p_max + 1):
        cf = bd.shift_blocks(params, p)
        block_resid = max(block_resid,
                          float(np.max(np.abs(bf.blocks[p].m1 - cf.m1))),
                          float(np.max(np.abs(bf.blocks[p].m2 - cf.m2))))
        g, gc = bf.gram[p], bd.gram_data(params, p)
        for a, b in ((g.norm_g1_sq, gc.norm_g1_sq), (g.inner_g1_g2, gc.inner_g1_g2),
                     (g.norm_g2_sq, gc.norm_g2_sq), (g.norm_f2_sq, gc.norm_f2_sq)):
            gram_resid = max(gram_resid, abs(a - b) / (1 + abs(b)))
    tri_jets = 0.0
    tri_series = 0.0
    for z in (0, 0.25, 0.5, 0.25j, -0.35 + 0.25j):
        closed = bd.quotient_kernel_restricted(params, z)
        tri_jets = max(tri_jets, float(np.max(np.abs(
            closed - bd.quotient_kernel_via_jets(params, z)))))
        tri_series = max(tri_series, float(np.max(np.abs(
            closed - bd.quotient_kernel_series(params, z, 300)))))
    contraction = bd.shift_contraction_margin(params, min(args.p_max, 25))
    rep["results"] = {
        "block_residual": block_resid,
        "gram_residual": gram_resid,
        "kq_vs_jets": tri_jets,
        "kq_vs_series": tri_series,
        "contraction_margin": contraction,
    }
    ok = (block_resid <= args.tol and gram_resid <= args.tol
          and tri_jets <= max(args.tol, 1e-10) and tri_series <= 1e-6)
    rep["results"]["verdict"] = "pass" if ok else "fail"
    if not args.no_timing:
        rep["wall_time_s"] = time.perf_counter() - t0
    _emit(rep, args)
    return 0 if ok else 2


def cmd_homog(args) -> int:
    try:
        hb = bd.HomogBundleParams(args.alpha, args.delta, args.beta)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    rep = _base_report(args, "homog")
    rep["config"].update({"alpha": args.alpha, "delta": args.delta, "beta": args.beta})
    t0 = time.perf_counter()
    rng = np.random.default_rng(_seed())
    curv_resid = 0.0
    results = []
    points = [0.0, 0.2, 0.45] + [complex(rng.uniform(0, 0.5) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
                                 for _ in range(max(args.samples - 3, 0))]
    for u1 in points:
        closed = bd.homog_curvature_restriction(hb, u1)
        sym = bd.homog_curvature_symbolic(hb, u1)
        r = float(np.max(np.abs(closed - sym)))
        curv_resid = max(curv_resid, r)
        results.append({"u1": _cnum(complex(u1)), "curvature_residual": r})
    a = hb.alpha + hb.delta + 2 * hb.beta
    b = hb.alpha - hb.delta
    c = hb.alpha + hb.delta - 2 * hb.beta
    rec = bd.homog_coeff_reconstruction(a, b, c, 0.4)
    rec_resid = max(rec.values())
    rep["results"] = {
        "points": results,
        "curvature_residual": curv_resid,
        "reconstruction_residual": rec_resid,
        "verdict": "pass" if (curv_resid <= args.tol and rec_resid <= args.tol) else "fail",
    }
    if not args.no_timing:
        rep["wall_time_s"] = time.perf_counter() - t0
    _emit(rep, args)
    return 0 if rep["results"]["verdict"] == "pass" else 2


def cmd_kernel_parse(args) -> int:
    expr, dim, params = _load_kernel(args.kernel[0], _parse_params(args.params))
    rep = _base_report(args, "kernel parse")
    rep["results"] = {
        "dim": dim,
        "canonical": E.serialize(expr),
        "parameters": sorted(E.parameter_names(expr)),
        "bound": {k: params[k] for k in sorted(params)},
    }
    _emit(rep, args)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetq", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_kernel=False):
        p.add_argument("--kernel", action="append", default=[],
                       help="kernel spec file (repeat for equiv)")
        p.add_argument("--params", default=None, help="name=value,... overrides")
        p.add_argument("--order", type=int, default=2, help="jet order k")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--samples", type=int, default=4,
                       help="number of random sample points")
        p.add_argument("--radius", type=float, default=0.6)
        p.add_argument("--out", default=None, help="write the report here")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--no-timing", action="store_true")

    p_inv = sub.add_parser("invariants", help="curvature, split, second fundamental form")
    common(p_inv)
    p_eq = sub.add_parser("equiv", help="order-k equivalence of two kernels")
    common(p_eq)

    p_bd = sub.add_parser("bidisc", help="bi-disc quotient module suites")
    p_bd.add_argument("subcommand", choices=("table", "verify"))
    p_bd.add_argument("--lam", type=float, required=True)
    p_bd.add_argument("--mu", type=float, required=True)
    p_bd.add_argument("--p-max", type=int, default=10, dest="p_max")
    common(p_bd)

    p_h = sub.add_parser("homog", help="homogeneous rank-2 bundle checks")
    p_h.add_argument("--alpha", type=float, required=True)
    p_h.add_argument("--delta", type=float, required=True)
    p_h.add_argument("--beta", type=float, default=0.0)
    common(p_h)

    p_k = sub.add_parser("kernel", help="kernel file utilities")
    p_k.add_argument("subcommand", choices=("parse",))
    common(p_k)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "invariants":
            return cmd_invariants(args)
        if args.command == "equiv":
            return cmd_equiv(args)
        if args.command == "bidisc":
            return cmd_bidisc(args)
        if args.command == "homog":
            return cmd_homog(args)
        if args.command == "kernel" and args.subcommand == "parse":
            return cmd_kernel_parse(args)
        raise CliError(f"unknown command {args.command}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # parse/evaluation failures map to exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
