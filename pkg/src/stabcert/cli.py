"""Command-line interface.

Exit codes: 0 stable/success, 1 usage or I/O error, 2 unstable,
3 inconclusive (including partial meshes and incomplete coverage),
4 query outside the mesh cover.
"""
import argparse
import json
import sys

import numpy as np

from . import __version__
from .certify import (
    ParameterBox,
    build_bound_mesh,
    certify_stability,
    query_lower_bound,
)
from .errors import BudgetExhausted, OutsideCover, StabCertError
from .fem import PARAMETER_DOMAIN, FemConfig, assemble_fem, scenario_curve, write_scenario_csv
from .lyapunov import build_p, coverage_report, symmetric_stability
from .numerics import is_symmetric
from .operator import alpha, alpha_theta, load_form
from . import serialize

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_INCONCLUSIVE, EXIT_QUERY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vec(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _box(text):
    try:
        return ParameterBox.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _hull(text):
    return [_vec(v) for v in text.split(";")]


def _add_operator(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--demo-fem", type=int, metavar="N", help="built-in 1D FEM operator with N unknowns")
    g.add_argument("--op", metavar="FILE", help="operator JSON file")


def _load_operator(args):
    if args.demo_fem is not None:
        return assemble_fem(FemConfig(args.demo_fem))
    return load_form(args.op)


def _domain(args, form):
    if args.domain is not None:
        if args.domain.p != form.p:
            raise StabCertError(f"domain has dimension {args.domain.p}, operator has p={form.p}")
        return args.domain
    if args.demo_fem is not None:
        lo, hi = zip(*PARAMETER_DOMAIN)
        return ParameterBox(lo, hi)
    raise StabCertError("--domain is required for operator files")


def _config(args):
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        if isinstance(v, ParameterBox):
            v = v.to_dict()
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, list):
            v = [x.tolist() if isinstance(x, np.ndarray) else
                 [y.tolist() for y in x] if isinstance(x, list) else x for x in v]
        out[k] = v
    return out


def cmd_alpha(args):
    form = _load_operator(args)
    if args.psi is not None:
        res = alpha_theta(form, args.psi)
    else:
        res = alpha(form, args.mu)
    print(f"alpha = {res.alpha!r}")
    print("y = " + ",".join(repr(float(v)) for v in res.y_point))
    return EXIT_OK


def cmd_certify(args):
    form = _load_operator(args)
    D = _domain(args, form)
    cert = certify_stability(form, D, tol=args.tol, max_iter=args.max_iter, resolution=args.resolution)
    if args.output:
        serialize.save(cert, args.output, _config(args))
    print(f"verdict: {cert.verdict}")
    if cert.verdict == "stable":
        print(f"certified lower bound on the boundary: {cert.min_cell_bound()!r}")
        return EXIT_OK
    if cert.verdict == "unstable":
        w = cert.witness
        print(f"witness mu = {w['mu']} psi = {w['psi']} alpha = {w['alpha']!r}")
        return EXIT_UNSTABLE
    for n in cert.notes:
        print(f"note: {n}")
    return EXIT_INCONCLUSIVE


def cmd_mesh(args):
    form = _load_operator(args)
    D = _domain(args, form)
    code = EXIT_OK
    try:
        mesh = build_bound_mesh(form, D, args.tol, use_scm=args.use_scm, budget=args.budget,
                                scm_vertices=args.scm_vertices, resolution=args.resolution)
    except BudgetExhausted as e:
        mesh, code = e.partial, EXIT_INCONCLUSIVE
        print(f"warning: {e}; writing partial mesh (bounds remain valid)", file=sys.stderr)
    serialize.save(mesh, args.output, _config(args))
    n_scm = sum(1 for p in mesh.provenance if p == "scm")
    print(f"simplices: {len(mesh.simplices)} vertices: {len(mesh.values)} "
          f"(scm-bounded: {n_scm}) evaluations: {mesh.evaluations} max gap: {max(mesh.gaps)!r}")
    return code


def cmd_query(args):
    mesh = serialize.load(args.mesh)
    try:
        lb = query_lower_bound(mesh, args.mu)
    except OutsideCover as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_QUERY
    print(f"lower bound = {lb!r}")
    if mesh.scm is not None:
        from .scm import ScmState, scm_lower_bound
        state = ScmState.from_dict(mesh.scm)
        psi = mesh.theta_map(args.mu)
        print(f"scm lower bound = {scm_lower_bound(state, psi)!r}")
    return EXIT_OK


def cmd_lyapunov(args):
    form = _load_operator(args)
    D = _domain(args, form)
    certs = []
    for a in args.anchor or []:
        try:
            c = build_p(form, a)
        except StabCertError as e:
            print(f"anchor {a.tolist()} unusable ({e}); this proves nothing", file=sys.stderr)
            continue
        print(f"anchor {a.tolist()}: residual {c.residual:.3e}")
        certs.append(c)
    if not args.anchor and not all(is_symmetric(A) for A in form.terms):
        print("note: nonsymmetric operator and no anchors; only alpha > 0 can cover points")
    report = coverage_report(form, certs, D, args.grid, args.hull or ())
    if args.output:
        cfg = _config(args)
        cfg["operator_hash"] = form.digest()
        doc = serialize.save(certs, args.output, cfg)
        doc["coverage"] = report.to_dict()
        with open(args.output, "w") as f:
            f.write(serialize.dumps(doc))
    if args.csv:
        report.write_csv(args.csv)
    if report.symmetric_verdicts is not None:
        counts = {v: report.symmetric_verdicts.count(v) for v in sorted(set(report.symmetric_verdicts))}
        print(f"symmetric operator verdicts: {counts}")
    for h in report.hulls:
        print(f"hull {h['form']}: lower bound {h['lower_bound']!r} proven={h['proven']}")
    print(f"grid points: {len(report.rows)} uncovered: {len(report.uncovered)}")
    for mu in report.uncovered:
        print("uncovered mu = " + ",".join(f"{v:g}" for v in mu))
    return EXIT_OK if report.fully_covered else EXIT_INCONCLUSIVE


def cmd_scenario(args):
    form = _load_operator(args)
    certs = [build_p(form, a) for a in args.anchor or []]
    lo, hi = args.mu1_range
    rows = scenario_curve(form, args.mu2, np.linspace(lo, hi, args.grid), certs)
    write_scenario_csv(rows, args.output, len(certs))
    print(f"wrote {len(rows)} rows to {args.output}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="stabcert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"stabcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("alpha", help="coercivity constant at one point")
    _add_operator(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--mu", type=_vec)
    g.add_argument("--psi", type=_vec)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("certify", help="prove coercivity over a parameter box")
    _add_operator(p)
    p.add_argument("--domain", type=_box, help="e.g. 0:10,0:2")
    p.add_argument("--tol", type=float, default=0.0, help="required margin (default 0)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--resolution", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("mesh", help="adaptive lower-bound mesh")
    _add_operator(p)
    p.add_argument("--domain", type=_box)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--budget", type=int, default=5000)
    p.add_argument("--use-scm", action="store_true")
    p.add_argument("--scm-vertices", action="store_true")
    p.add_argument("--resolution", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("query", help="lower bound from a mesh file")
    p.add_argument("--mesh", required=True)
    p.add_argument("--mu", type=_vec, required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("lyapunov", help="Lyapunov certificates and coverage report")
    _add_operator(p)
    p.add_argument("--anchor", type=_vec, action="append")
    p.add_argument("--domain", type=_box)
    p.add_argument("--grid", type=int, default=61)
    p.add_argument("--hull", type=_hull, action="append", help="e.g. '0,0;0,2;12,0;17,2'")
    p.add_argument("-o", "--output")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("scenario", help="alpha and alpha_phi curves along mu2 = const")
    _add_operator(p)
    p.add_argument("--mu2", type=float, required=True)
    p.add_argument("--anchor", type=_vec, action="append")
    p.add_argument("--mu1-range", type=_vec, default=np.array([0.0, 30.0]))
    p.add_argument("--grid", type=int, default=61)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scm_vertices", False) and not args.use_scm:
        parser.error("--scm-vertices requires --use-scm")
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, StabCertError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
