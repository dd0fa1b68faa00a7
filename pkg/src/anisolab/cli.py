"""Command-line interface.

Subcommands mirror the pipeline stages: ``wulff`` meshes an integrand's
Wulff shape, ``solve-graph`` runs the Dirichlet solver, ``curvature``
exports a fixture's curvature fields, ``spectrum`` and ``gauss`` run the
respective analyses, ``bounds`` produces a full verdict report, and
``selftest`` runs the no-false-pass guard.  All reports are JSON; meshes
are ASCII OBJ.  Exit code 0 means every evaluated check passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .graph_solver import (
    GraphProblem,
    GraphSolution,
    bc_catenoid,
    bc_edge_sine,
    bc_linear,
    bc_zero,
    lift,
    solve,
)
from .harness import (
    ExperimentConfig,
    default_exhaustion,
    parse_surface,
    report_json,
    selftest,
    verify_bounds,
)
from .integrand import parse_integrand, wulff_mesh
from .objio import grid_faces, write_obj, write_obj_with_fields
from .spectrum import comparison_operator_counts, morse_index_exhaustion
from .surface import SurfacePatch, curvature_field
from .gauss_analysis import (
    critical_set,
    degrees,
    euler_inequality_check,
    index_lower_bound,
    pseudograph_extract,
)
from .errors import AnisolabError, GrazingCircle, NonDiscreteCriticalSet


def _parse_bc(text: str, domain):
    head, _, tail = text.strip().partition(":")
    if head == "zero":
        return bc_zero()
    if head == "linear":
        a, b, c = (float(t) for t in tail.split(","))
        return bc_linear(a, b, c)
    if head == "sine":
        return bc_edge_sine(float(tail) if tail else 0.2, domain)
    if head == "catenoid":
        return bc_catenoid()
    path = Path(text)
    if path.exists():
        payload = json.loads(path.read_text())
        return _parse_bc(payload["bc"], domain)
    raise ValueError(f"unknown boundary data {text!r}")


def _parse_domains(text: str):
    out = []
    for part in text.split(";"):
        vals = [float(t) for t in part.split(",")]
        if len(vals) != 4:
            raise ValueError("each domain needs u0,u1,v0,v1")
        out.append(vals)
    return out


def _surface_or_solution(text: str, grid: int) -> SurfacePatch:
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        payload = json.loads(path.read_text())
        prob = GraphProblem(
            domain=tuple(payload["domain"]),
            shape=tuple(payload["grid"]),
            boundary=bc_zero(),
            spec=parse_integrand(payload["integrand"]),
        )
        u = np.array(payload["u"]).reshape(prob.shape)
        sol = GraphSolution(
            problem=prob,
            u=u,
            residual_linf=payload["residual_linf"],
            iterations=payload["iterations"],
            converged=payload["converged"],
        )
        return lift(sol)
    return parse_surface(text, grid)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        print(text)


def cmd_wulff(args) -> int:
    spec = parse_integrand(args.integrand)
    mesh = wulff_mesh(spec, args.refine)
    write_obj(args.out, mesh.vertices, mesh.faces)
    print(f"wrote {args.out}: {len(mesh.vertices)} vertices, area {mesh.area:.6f}")
    return 0


def cmd_solve_graph(args) -> int:
    spec = parse_integrand(args.integrand)
    domain = tuple(float(t) for t in args.domain.split(","))
    prob = GraphProblem(
        domain=domain,
        shape=(args.grid, args.grid),
        boundary=_parse_bc(args.bc, domain),
        spec=spec,
        tol=args.tol,
        max_iter=args.max_iter,
    )
    sol = solve(prob)
    payload = {
        "grid": list(prob.shape),
        "domain": list(domain),
        "integrand": args.integrand,
        "u": [float(x) for x in sol.u.reshape(-1)],
        "residual_linf": sol.residual_linf,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    _write(args.out, json.dumps(payload))
    print(
        f"solve-graph: converged={sol.converged} iterations={sol.iterations} "
        f"residual={sol.residual_linf:.3e}",
        file=sys.stderr,
    )
    return 0 if sol.converged else 1


def cmd_curvature(args) -> int:
    spec = parse_integrand(args.integrand)
    patch = _surface_or_solution(args.surface, args.grid)
    fld = curvature_field(patch, spec)
    faces = grid_faces(patch.nu_count, patch.nv_count, patch.periodic_u)
    write_obj_with_fields(
        args.out,
        patch.position.reshape(-1, 3),
        faces,
        {
            "h_gamma": fld.h_gamma,
            "k_sigma": fld.k_sigma,
            "k_gamma": fld.k_gamma,
        },
    )
    print(f"wrote {args.out} (+ sidecar), sup|H_gamma| = {np.max(np.abs(fld.h_gamma)):.3e}")
    return 0


def cmd_spectrum(args) -> int:
    spec = parse_integrand(args.integrand)
    patch = _surface_or_solution(args.surface, args.grid)
    domains = _parse_domains(args.domains) if args.domains else default_exhaustion(patch)
    rep = morse_index_exhaustion(patch, spec, [tuple(d) for d in domains], k=args.k)
    cmp_counts = comparison_operator_counts(patch, spec, [tuple(d) for d in domains], k=args.k)
    payload = {
        "domains": [list(d) for d in rep.domains],
        "eigenvalues": [[float(v) for v in vals] for vals in rep.eigenvalues],
        "morse_index": rep.morse_index,
        "stabilized_index": rep.stabilized_index,
        "jacobi_residuals": {k: float(v) for k, v in rep.jacobi_residuals.items()},
        "comparison_counts": cmp_counts,
    }
    _write(args.out, json.dumps(payload))
    return 0


def cmd_gauss(args) -> int:
    spec = parse_integrand(args.integrand)
    patch = _surface_or_solution(args.surface, args.grid)
    patch.genus = args.genus
    fld = curvature_field(patch, spec)
    mesh = wulff_mesh(spec, 4)
    degs = degrees(fld, mesh)
    axis = [float(t) for t in args.axis.split(",")]
    payload = {"degrees": {k: (v if not isinstance(v, bool) else bool(v)) for k, v in degs.items()}}
    try:
        pts = critical_set(fld)
        payload["branch_points"] = [
            {"uv": list(map(float, p.location)), "order": p.branch_order} for p in pts
        ]
    except NonDiscreteCriticalSet as exc:
        payload["branch_points"] = None
        payload["critical_degenerate"] = str(exc)
        pts = []
    try:
        pg = pseudograph_extract(patch, spec, axis, genus=args.genus, fld=fld,
                                 critical_points=pts)
        euler = euler_inequality_check(pg)
        payload["pseudograph"] = {
            "vertices": [
                {"uv": list(map(float, p.location)), "order": p.branch_order}
                for p in pg.vertices
            ],
            "edges": [[[float(x), float(y)] for x, y in e.polyline] for e in pg.edges],
            "N": pg.n_components_complement,
            "euler": euler,
            "lower_bound": index_lower_bound(pg),
        }
    except GrazingCircle as exc:
        payload["pseudograph"] = {"degenerate": str(exc)}
    _write(args.out, json.dumps(payload))
    return 0


def cmd_bounds(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        config = ExperimentConfig(
            surface=args.surface,
            integrand=args.integrand,
            grid=args.grid,
            domains=_parse_domains(args.domains) if args.domains else None,
            genus=args.genus,
            seed=args.seed,
        )
    report = verify_bounds(config)
    _write(args.out, report_json(report))
    for c in report["checks"]:
        state = {True: "pass", False: "FAIL", None: "skip"}[c["passed"]]
        print(f"[{state}] {c['name']}", file=sys.stderr)
    return 0 if report["all_passed"] else 1


def cmd_selftest(args) -> int:
    result = selftest(grid=args.grid)
    print(json.dumps(result))
    return 0 if result["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisolab",
        description="anisotropic minimal surface laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wulff", help="mesh the Wulff shape of an integrand")
    p.add_argument("--integrand", required=True)
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wulff)

    p = sub.add_parser("solve-graph", help="solve the minimal-graph equation")
    p.add_argument("--integrand", required=True)
    p.add_argument("--domain", required=True, help="x0,x1,y0,y1")
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--bc", required=True, help="zero|linear:a,b,c|sine:amp|catenoid|file.json")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve_graph)

    p = sub.add_parser("curvature", help="export curvature fields of a surface")
    p.add_argument("--surface", required=True)
    p.add_argument("--integrand", required=True)
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("spectrum", help="Jacobi spectra over an exhaustion")
    p.add_argument("--surface", required=True, help="fixture spec or solution.json")
    p.add_argument("--integrand", required=True)
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--domains", default=None, help="u0,u1,v0,v1;... (default: nested)")
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gauss", help="Gauss-map degrees and nodal pseudograph")
    p.add_argument("--surface", required=True)
    p.add_argument("--integrand", required=True)
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--axis", default="0,0,1")
    p.add_argument("--genus", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("bounds", help="full verdict report with all checks")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--surface", default="catenoid:2")
    p.add_argument("--integrand", default="const:1")
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--domains", default=None)
    p.add_argument("--genus", type=int, default=0)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selftest", help="no-false-pass corruption check")
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AnisolabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
