"""Command-line interface: tableau inspection, solving, convergence studies,
tableau composition, and stability scans.

Exit codes: 0 success, 1 usage error, 2 numerical failure (Newton failure or
divergence). With --json-errors, failures emit a JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .compose import compose_indc_be
from .harness import fit_order, predict_orders, sweep, verify
from .problems import PROBLEMS
from .quadrature import build_grid
from .schemes import SchemeParseError, format_scheme, parse_scheme
from .solver import SolverError, solve
from .stability import l_stability_probe, scan_region
from .tableau import builtin, builtin_names, tableau_to_json


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="indc",
        description="Deferred-correction IRK solvers for stiff problems")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--json-errors", action="store_true",
                   help="emit numerical errors as JSON on stderr")
    sub = p.add_subparsers(dest="command")

    t = sub.add_parser("tableau", help="print or export a built-in tableau")
    t.add_argument("--name", required=True,
                   help=f"one of {', '.join(builtin_names())}")
    t.add_argument("--json", action="store_true", help="emit tableau JSON")
    t.add_argument("--dump-matrices", type=int, metavar="M", default=None,
                   help="emit S, S^c, P^c as CSV for an M-node grid")

    s = sub.add_parser("solve", help="integrate a problem")
    s.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--scheme", required=True, help="e.g. BE:M=3,K=2")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--trace", metavar="CSV", default=None)

    c = sub.add_parser("converge", help="H-sweep convergence study")
    c.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--scheme", required=True)
    c.add_argument("--T", type=float, required=True)
    c.add_argument("--H", type=float, required=True, help="largest step")
    c.add_argument("--halvings", type=int, required=True)
    c.add_argument("--out", metavar="CSV", default=None)
    c.add_argument("--json", metavar="JSON", dest="json_out", default=None)

    k = sub.add_parser("compose", help="composed BE tableau")
    k.add_argument("--M", type=int, required=True)
    k.add_argument("--K", type=int, required=True)
    k.add_argument("--out", metavar="JSON", default=None)

    st = sub.add_parser("stability", help="stability-region scan")
    st.add_argument("--scheme", required=True)
    st.add_argument("--window", default="-20,5,-15,15",
                    help="re_min,re_max,im_min,im_max")
    st.add_argument("--res", type=int, default=200)
    st.add_argument("--out", metavar="CSV", default=None)
    st.add_argument("--boundary", metavar="CSV", default=None)
    st.add_argument("--svg", metavar="SVG", default=None)
    st.add_argument("--include-left", action="store_true",
                    help="diagnostic: include the left-most node")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _dispatch(args)
    except (SchemeParseError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SolverError as err:
        if args.json_errors:
            print(json.dumps({"error": type(err).__name__, "message": str(err)}),
                  file=sys.stderr)
        else:
            print(f"numerical failure: {err}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "tableau":
        return _cmd_tableau(args)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "converge":
        return _cmd_converge(args)
    if args.command == "compose":
        return _cmd_compose(args)
    if args.command == "stability":
        return _cmd_stability(args)
    raise AssertionError(args.command)


def _cmd_tableau(args) -> int:
    tab = builtin(args.name)
    if args.json:
        print(tableau_to_json(tab))
    else:
        print(f"{tab.name}: s={tab.s}, p={tab.p}, q={tab.q}, "
              f"stiffly_accurate={tab.is_stiffly_accurate()}, "
              f"invertible_A={tab.has_invertible_A()}")
        width = 10
        for i in range(tab.s):
            row = " ".join(f"{a:{width}.6f}" for a in tab.A[i])
            print(f"{tab.c[i]:{width}.6f} | {row}")
        print("-" * (width * (tab.s + 1) + 3))
        print(" " * width + " | " +
              " ".join(f"{x:{width}.6f}" for x in tab.b))
    if args.dump_matrices is not None:
        grid = build_grid(args.dump_matrices)
        Sc, Pc = grid.stage_matrices(tab)
        w = csv.writer(sys.stdout)
        w.writerow(["matrix", "row", "stage"] +
                   [f"n{j}" for j in range(1, grid.n_stencil + 1)])
        for m in range(grid.M):
            w.writerow(["S", m, ""] + list(grid.S[m]))
        for m in range(grid.M):
            for i in range(tab.s):
                w.writerow(["Sc", m, i] + list(Sc[m, i]))
                w.writerow(["Pc", m, i] + list(Pc[m, i]))
    return 0


def _cmd_solve(args) -> int:
    problem = PROBLEMS[args.problem](args.eps)
    scheme = parse_scheme(args.scheme)
    trace = [] if args.trace else None
    y, z = solve(problem, scheme, args.T, args.steps, trace=trace)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "node", "t"]
                       + [f"y{i}" for i in range(problem.dim_y)]
                       + [f"z{i}" for i in range(problem.dim_z)]
                       + ["loop"])
            for step, node, t, yv, zv, loop in trace:
                w.writerow([step, node, t] + list(yv) + list(zv) + [loop])
    print(json.dumps({"t": args.T, "y": list(y), "z": list(z)}))
    return 0


def _cmd_converge(args) -> int:
    problem = PROBLEMS[args.problem](args.eps)
    scheme = parse_scheme(args.scheme)
    H_list = [args.H / 2 ** i for i in range(args.halvings + 1)]
    table = sweep(problem, scheme, args.T, H_list,
                  scheme_spec=format_scheme(scheme))
    rows = []
    for i, H in enumerate(table.H):
        ratio_y = (table.err_y[i - 1] / table.err_y[i]
                   if i and table.err_y[i] else "")
        ratio_z = (table.err_z[i - 1] / table.err_z[i]
                   if i and table.err_z[i] else "")
        rows.append([H, table.err_y[i], table.err_z[i], ratio_y, ratio_z])
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["H", "err_y", "err_z", "ratio_y", "ratio_z"])
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    prediction = predict_orders(scheme, args.eps)
    report = verify(table, prediction)
    payload = {
        "scheme": format_scheme(scheme),
        "verdict": table.verdict,
        "prediction": {
            "leading": prediction.leading,
            "eps_term": prediction.eps_term,
            "dip_H": prediction.dip_H,
            "diverges": prediction.diverges,
        },
        "checks": [{"name": n, "pass": ok, "detail": d}
                   for n, ok, d in report.checks],
    }
    if table.verdict == "ok" and sum(np.isfinite(table.err_z)) >= 3:
        payload["slope_z"] = fit_order(table, component="z")
        if any(e > 0 for e in table.err_y):
            payload["slope_y"] = fit_order(table, component="y")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(payload, fh, indent=2)
    else:
        print(json.dumps(payload, indent=2))
    return 0


def _cmd_compose(args) -> int:
    composed = compose_indc_be(args.M, args.K)
    text = tableau_to_json(composed.tableau)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def _cmd_stability(args) -> int:
    scheme = parse_scheme(args.scheme)
    a, b, c, d = (float(x) for x in args.window.split(","))
    scan = scan_region(scheme, window=((a, b), (c, d)), n=args.res,
                       include_left=args.include_left)
    probe = l_stability_probe(scheme, include_left=args.include_left)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im", "absR"])
            for i, im in enumerate(scan.im):
                for j, re in enumerate(scan.re):
                    w.writerow([re, im, scan.absR[i, j]])
    if args.boundary:
        with open(args.boundary, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["polyline", "re", "im"])
            for pidx, poly in enumerate(scan.boundaries):
                for x, y in poly:
                    w.writerow([pidx, x, y])
    if args.svg:
        _write_svg(args.svg, scan)
    print(json.dumps({
        "scheme": format_scheme(scheme),
        "a_stable_sampled": scan.a_stable_sampled,
        "l_stable_sampled": scan.l_stable_sampled,
        "l_probe_limit": probe["limit_estimate"],
        "stable_area": scan.stable_area,
        "boundaries": len(scan.boundaries),
    }))
    return 0


def _write_svg(path: str, scan, size: int = 600):
    """Boundary polylines as a standalone SVG (no plotting dependency)."""
    re0, re1 = scan.re[0], scan.re[-1]
    im0, im1 = scan.im[0], scan.im[-1]
    sx = size / (re1 - re0)
    sy = size / (im1 - im0)

    def proj(x, y):
        return (x - re0) * sx, size - (y - im0) * sy

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    ax_x, _ = proj(0.0, 0.0)
    _, ax_y = proj(0.0, 0.0)
    parts.append(f'<line x1="{ax_x:.1f}" y1="0" x2="{ax_x:.1f}" y2="{size}" '
                 'stroke="#ccc"/>')
    parts.append(f'<line x1="0" y1="{ax_y:.1f}" x2="{size}" y2="{ax_y:.1f}" '
                 'stroke="#ccc"/>')
    for poly in scan.boundaries:
        pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in
                       (proj(x, y) for x, y in poly))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="black"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


if __name__ == "__main__":
    sys.exit(main())
