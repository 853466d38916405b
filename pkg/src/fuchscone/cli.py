"""Command-line front end.

Commands::

    fuchscone validate --input metric.json
    fuchscone realize  --input metric.json --output realized.json
    fuchscone flow     --input realized.json --W 0 --tau 0.1 --steps 20 --output flow.csv
    fuchscone sweep    --input disk.json --budget-delta 1.5 --output swept.json
    fuchscone check    --seed 3

Exit codes: 0 success, 1 invariant or property failure, 2 unreadable input,
3 metric not strictly convex, 4 line search or continuation failure,
5 iteration budget or sweep budget failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .conemanifold import (
    canonicalize_convex,
    discrete_curvature,
    link_area_inequality,
    slope_report,
    spherical_link,
)
from .errors import FuchsconeError, ParseError
from .hyptrig import hyp_angle, hyp_side, solve_trapezoid
from .io import SurfaceDocument, dump, load, surface_document
from .surface import check_metric
from .sweep import ConeTriangle, HyperbolicTriangle, MergeBudget, sweep_in, theta
from .variational import (
    RealizeOptions,
    flow_trace_csv,
    gradient,
    hessian,
    flow_gap,
    realize,
    write_trace,
)

EXIT_OK = 0
EXIT_FAIL = 1


def _emit(report: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(report, sort_keys=True) + "\n")


def _surface_input(path) -> SurfaceDocument:
    doc = load(path)
    if not isinstance(doc, SurfaceDocument):
        raise ParseError("this command expects a closed surface document")
    return doc


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    doc = load(args.input)
    if isinstance(doc, ConeTriangle):
        errs = doc.check()
        report = {"kind": "cone_triangle", "ok": not errs, "violations": errs}
        if not errs:
            report["six_tuple"] = list(doc.six_tuple())
    else:
        m = doc.metric
        errs = check_metric(m)
        report = {
            "kind": "surface",
            "ok": not errs,
            "violations": errs,
            "genus": int(m.surface.genus),
            "vertices": int(m.surface.n_vertices),
        }
        if not errs:
            report["gauss_bonnet_residual"] = float(m.gauss_bonnet_residual())
    _emit(report)
    return EXIT_OK if not errs else EXIT_FAIL


def _trace_path(output: str | None) -> Path | None:
    if output is None:
        return None
    p = Path(output)
    return p.with_name(p.stem + ".trace.csv")


def cmd_realize(args) -> int:
    doc = _surface_input(args.input)
    errs = check_metric(doc.metric)
    if errs:
        _emit({"ok": False, "violations": errs})
        return EXIT_FAIL
    opts = RealizeOptions(tol=args.tol, max_iter=args.max_iter, vol_tol=args.vol_tol)
    res = realize(doc.metric, opts)
    P = res.manifold
    if args.output:
        dump(surface_document(P.metric, P.heights), args.output)
        with open(_trace_path(args.output), "w") as fh:
            write_trace(res.trace, ["iter", "max_abs_kappa", "S", "step"], fh)
    else:
        write_trace(res.trace, ["iter", "max_abs_kappa", "S", "step"], sys.stdout)
    _emit({
        "ok": True,
        "iterations": res.iterations,
        "max_abs_kappa": res.max_kappa,
        "S": discrete_curvature(P, args.vol_tol),
        "heights": P.heights.tolist(),
    })
    return EXIT_OK


def _parse_vertex_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ParseError(f"--W expects vertex ids, got {text!r}") from exc


def cmd_flow(args) -> int:
    doc = _surface_input(args.input)
    W = _parse_vertex_list(args.W)
    if not W:
        raise ParseError("--W must name at least one vertex")
    if doc.heights is None:
        P0 = realize(doc.metric, RealizeOptions(tol=args.tol, max_iter=args.max_iter, vol_tol=args.vol_tol)).manifold
    else:
        P0 = canonicalize_convex(doc.metric, doc.heights)
    rep = flow_gap(P0, W, args.tau, n_steps=args.steps, tol=args.tol, vol_tol=args.vol_tol)
    csv_text = flow_trace_csv(rep.states, W)
    if args.output:
        Path(args.output).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    negative = all(float(s.kappa_w.max()) < 0 for s in rep.states[1:])
    print(f"gap >= bound: {'PASS' if rep.ok else 'FAIL'} (gap {rep.gap:.6e}, bound {rep.bound:.6e})")
    print(f"kappa_w < 0 for t > 0: {'PASS' if negative else 'FAIL'}")
    _emit({
        "gap": rep.gap,
        "bound": rep.bound,
        "bound_closed_form_with_exp": rep.bound_as_stated,
        "integral": rep.integral,
        "nu": rep.constants.nu,
        "m": rep.constants.m,
        "M": rep.constants.M,
        "ok": rep.ok and negative,
    })
    return EXIT_OK if rep.ok and negative else EXIT_FAIL


def _swept_dict(result) -> dict:
    if isinstance(result, HyperbolicTriangle):
        return {"kind": "hyperbolic_triangle", "sides": list(result.sides), "angles": list(result.angles)}
    return {
        "kind": "swept_triangle",
        "x": list(result.x),
        "beta": list(result.beta),
        "curvature": result.curvature,
        "six_tuple": list(theta(result)),
    }


def cmd_sweep(args) -> int:
    T = load(args.input)
    if not isinstance(T, ConeTriangle):
        raise ParseError("sweep expects a cone_triangle document")
    budget = MergeBudget.from_delta(args.budget_delta)
    order = _parse_vertex_list(args.order) if args.order else None
    res = sweep_in(T, budget, order=order)
    log = []
    for r in res.records:
        window = (r.nu_u + r.nu_v, (r.nu_u + r.nu_v) * math.cosh(r.diam_bound_before))
        log.append({
            "merged": [r.u, r.v],
            "nu_w": r.nu_w,
            "curvature_window": list(window),
            "in_window": bool(window[0] < r.nu_w < window[1]),
            "diameter_before": r.diam_before,
            "diameter_after": r.diam_after,
            "diameter_bound_after": r.diam_bound_after,
            "Delta": budget.delta,
            "two_eta": 2 * budget.eta,
        })
    out = {
        "input_six_tuple": list(T.six_tuple()),
        "result": _swept_dict(res.result),
        "budget": {"Delta": budget.delta, "delta_nu": budget.delta_nu, "delta_D": budget.delta_d},
        "steps": log,
    }
    if args.output:
        Path(args.output).write_text(json.dumps(out, indent=1) + "\n")
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# property suite


def property_suite(seed: int = 0, vol_tol: float = 1e-10, extra_input=None) -> list[tuple[str, bool, str]]:
    """Seeded battery of invariant checks; returns (name, passed, detail) rows."""
    rng = np.random.default_rng(seed)
    rows: list[tuple[str, bool, str]] = []

    if extra_input is not None:
        doc = load(extra_input)
        errs = doc.check() if isinstance(doc, ConeTriangle) else check_metric(doc.metric)
        rows.append(("input_valid", not errs, "; ".join(errs)))

    # trigonometry: cosine law round trip and the right-trapezoid identity
    worst = 0.0
    for _ in range(200):
        b, c = rng.uniform(0.05, 3.0, 2)
        A = rng.uniform(0.05, math.pi - 0.05)
        a = hyp_side(b, c, A)
        worst = max(worst, abs(hyp_angle(a, b, c) - A))
        l, h1, h2 = rng.uniform(0.1, 2.0), *rng.uniform(0.05, 1.0, 2)
        if abs(h1 - h2) < l:
            t = solve_trapezoid(l, h1, h2)
            worst = max(worst, abs(math.sin(t.alpha12) * math.sinh(l) - math.cosh(h2) * math.sinh(t.a12)))
    rows.append(("trig_identities", worst < 1e-12, f"max residual {worst:.2e}"))

    metric = fixtures.refined(seed, count=int(rng.integers(2, 7)))
    try:
        P = realize(metric, RealizeOptions(vol_tol=vol_tol)).manifold
    except FuchsconeError as exc:
        rows.append(("realize", False, str(exc)))
        return rows
    rows.append(("realize", float(np.abs(P.kappa).max()) <= 1e-10, f"max|kappa| {np.abs(P.kappa).max():.2e}"))

    # perturbed admissible heights
    Q = fixtures.perturbed_manifold(metric, P.heights, rng)

    # first variation of S in the heights
    v = int(rng.integers(Q.surface.n_vertices))
    eps = 1e-4
    hp, hm = Q.heights.copy(), Q.heights.copy()
    hp[v] += eps
    hm[v] -= eps
    fd = (discrete_curvature(canonicalize_convex(metric, hp), vol_tol)
          - discrete_curvature(canonicalize_convex(metric, hm), vol_tol)) / (2 * eps)
    err = abs(fd - Q.kappa[v])
    rows.append(("schlaefli_heights", err < 1e-6 + 8 * Q.surface.n_faces * vol_tol / eps, f"|dS/dh - kappa| {err:.2e}"))

    # Hessian: symmetric, sign pattern, non-positive
    H = hessian(Q)
    off = H - np.diag(np.diag(H))
    eig = float(np.linalg.eigvalsh(0.5 * (H + H.T)).max())
    ok = np.allclose(H, H.T, atol=1e-10) and off.min() >= -1e-12 and H.sum(axis=1).max() <= 1e-10 and eig <= 1e-8
    rows.append(("hessian_definiteness", bool(ok), f"max eigenvalue {eig:.2e}"))
    step = 1e-5
    hp, hm = Q.heights.copy(), Q.heights.copy()
    hp[v] += step
    hm[v] -= step
    col = (gradient(canonicalize_convex(metric, hp)) - gradient(canonicalize_convex(metric, hm))) / (2 * step)
    err = float(np.abs(col - H[:, v]).max())
    rows.append(("hessian_fd", err < 1e-5, f"column error {err:.2e}"))

    for name, M in (("realized", P), ("perturbed", Q)):
        rep = slope_report(M)
        rows.append((f"slope_report_{name}", rep.ok, f"{len(rep.violations)} violations"))
        bad, checked = [], 0
        for w in range(M.surface.n_vertices):
            if M.kappa[w] > 1e-12:
                continue  # the inequality concerns vertices with kappa <= 0
            checked += 1
            lhs, rhs = link_area_inequality(spherical_link(M, w))
            if not (lhs >= rhs - 1e-12 and rhs > 0):
                bad.append(w)
        rows.append((f"link_inequality_{name}", not bad, f"{checked} vertices checked, failing {bad}"))

    Sp, Sq = discrete_curvature(P, vol_tol), discrete_curvature(Q, vol_tol)
    rows.append(("maximum_principle", Sp > Sq, f"margin {Sp - Sq:.3e}"))
    return rows


def cmd_check(args) -> int:
    rows = property_suite(args.seed, args.vol_tol, args.input)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [name for name, ok, _ in rows if not ok]
    _emit({"seed": args.seed, "ok": not failed, "failed": failed})
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------------------


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuchscone", description="Convex Fuchsian cone-manifolds from cone-metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        sp.add_argument("--input", required=needs_input)
        sp.add_argument("--output")
        sp.add_argument("--tol", type=_positive, default=1e-10)
        sp.add_argument("--vol-tol", type=_positive, default=1e-9)
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("validate", help="check metric invariants"))
    common(sub.add_parser("realize", help="find the convex cone-manifold with zero particle curvature"))
    fl = sub.add_parser("flow", help="push heights of W and compare the drop of S with the lower bound")
    common(fl)
    fl.add_argument("--W", required=True, help="comma-separated vertex ids")
    fl.add_argument("--tau", type=_positive, default=0.1)
    fl.add_argument("--steps", type=int, default=20)
    sw = sub.add_parser("sweep", help="merge the cone points of a cone-triangle")
    common(sw)
    sw.add_argument("--budget-delta", type=_positive, default=1.5)
    sw.add_argument("--order", help="comma-separated merge order of cone points")
    common(sub.add_parser("check", help="run the seeded property suite"), needs_input=False)
    return p


COMMANDS = {
    "validate": cmd_validate,
    "realize": cmd_realize,
    "flow": cmd_flow,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FuchsconeError as exc:
        _emit({"ok": False, "error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
