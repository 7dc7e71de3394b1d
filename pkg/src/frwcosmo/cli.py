"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 mathematical error, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import sympy as sp

from . import cosmo, expr, numeric, reverse, session, tensor
from .expr import ParseError, parse, symbol
from .report import OutputDocument

EXIT_OK, EXIT_USAGE, EXIT_MATH, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return value == "on"


def _expr_arg(text: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"cannot parse {text!r}: {exc}") from exc


def _params(items) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part.strip():
                continue
            name, _, value = part.partition("=")
            if not value:
                raise UsageError(f"bad parameter {part!r}, expected name=value")
            out[name.strip()] = float(expr.evaluate(_expr_arg(value)))
    return out


def _meta(**extra) -> dict:
    meta = {"seed": "0xC0540"}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------


def cmd_derive(args) -> int:
    lam = symbol("lambda") if args.lambda_ else 0
    model = cosmo.CosmoModel(k=_expr_arg(args.k), units=args.units, fluid=args.fluid, lam=lam)
    system = cosmo.reduce_to_friedmann(model)
    doc = OutputDocument("derive", _meta(units=args.units, **{"lambda": "on" if args.lambda_ else "off"},
                                         fluid="on" if args.fluid else "off"))
    for name, e in system.items():
        doc.add(name, e)
    if args.save:
        try:
            session.save_session(model, system, args.save)
        except OSError as exc:
            raise UsageError(f"cannot write {args.save}: {exc}") from exc
        doc.metadata["saved"] = str(args.save)
    sys.stdout.write(doc.render(args.out))
    return EXIT_OK


def cmd_reverse(args) -> int:
    history = reverse.ExpansionHistory(
        scale_factor=_expr_arg(args.scale_factor) if args.scale_factor else None,
        hubble=_expr_arg(args.hubble) if args.hubble else None,
        k=_expr_arg(args.k),
        t0=_expr_arg(args.t0),
    )
    branch = 1 if args.branch == "+" else -1
    rec = reverse.reconstruct(history, branch=branch, order=args.series_order)
    params = _params(args.params)
    report = reverse.verify_consistency(rec, history, params=params)

    doc = OutputDocument(
        "reverse",
        _meta(units="geometric", branch=args.branch, mode=rec.mode, field_mode=rec.field_mode,
              potential_mode=rec.potential_mode, series_order=rec.order, t0=str(history.t0)),
    )
    for name, e in rec.expressions().items():
        doc.add(name, e)
    doc.add("DV(t) from EcuKG", report.dv_from_kg)
    doc.checks = {
        name: {"zero": r.zero, "path": r.path, "max_abs": r.max_abs, "note": r.note}
        for name, r in report.residuals.items()
    }
    doc.checks["DV consistency"] = {"zero": report.dv_consistent, "max_abs": report.dv_max_abs}
    sys.stdout.write(doc.render(args.out))
    return EXIT_OK if report.ok else EXIT_VERIFY


def run_check_suites(metric_name: str = "frw", fault: str | None = None) -> dict:
    """Run the identity suites; returns name -> passed (None = not applicable)."""
    g = tensor.frw_metric() if metric_name == "frw" else tensor.minkowski_metric()
    results = {}

    if fault == "einstein-sign":
        Ric, Rs = tensor.ricci_tensor(g), tensor.ricci_scalar(g)
        G = tensor.Tensor.from_function("G", ("d", "d"), lambda i, j: Ric[i, j] + g[i, j] * Rs / 2)
    else:
        G = tensor.einstein_tensor(g)
    bianchi = tensor.covariant_divergence(G, g).is_zero()
    G_lam = tensor.einstein_tensor(g, symbol("lambda"))
    results["bianchi"] = bianchi and tensor.covariant_divergence(G_lam, g).is_zero()
    results["metric-compatibility"] = tensor.metric_covariant_derivative(g).is_zero()
    if metric_name == "frw":
        model = cosmo.CosmoModel()
        diff = cosmo.stress_energy_scalar_direct(model) - cosmo.stress_energy_scalar_fluid(model)
        results["stress-equivalence"] = diff.is_zero()
        Ein = cosmo.einstein_equations(model)
        results["off-diagonal"] = all(expr.is_zero(c) for (i, j), c in Ein.items() if i != j)
    else:
        results["stress-equivalence"] = None
        results["off-diagonal"] = None
    return results


def cmd_check(args) -> int:
    results = run_check_suites(args.metric, args.inject_fault)
    failed = False
    for name, ok in results.items():
        status = "n/a" if ok is None else ("PASS" if ok else "FAIL")
        failed |= ok is False
        print(f"{status:4s} {name}")
    return EXIT_VERIFY if failed else EXIT_OK


def _lambdify_phi(e, params):
    phi = symbol("phi")
    e = e.xreplace({symbol(n): v for n, v in params.items()})
    extra = e.free_symbols - {phi}
    if extra:
        raise UsageError(f"unbound symbols in potential: {', '.join(sorted(s.name for s in extra))}")
    return sp.lambdify(phi, e, modules="math")


def cmd_evolve(args) -> int:
    params = _params(args.params)
    V_e = _expr_arg(args.potential)
    DV_e = _expr_arg(args.dpotential) if args.dpotential else sp.diff(V_e, symbol("phi"))
    V, DV = _lambdify_phi(V_e, params), _lambdify_phi(DV_e, params)
    if args.solve_H0 and args.H0 is not None:
        raise UsageError("--H0 and --solve-H0 are mutually exclusive")
    if args.solve_H0:
        H0 = numeric.solve_H0(args.a0, args.phi0, args.dphi0, V, args.k)
    elif args.H0 is None:
        raise UsageError("give --H0 or --solve-H0")
    else:
        H0 = args.H0
    cfg = numeric.IntegrationConfig(
        h=args.dt, t_end=args.t_end, potential=V, dpotential=DV, k=args.k,
        constraint_tol=args.tol, stride=args.stride,
    )
    initial = numeric.EvolutionState(args.t0, args.a0, H0, args.phi0, args.dphi0)
    series = numeric.evolve(initial, cfg)
    if args.out in (None, "-"):
        series.to_csv(sys.stdout)
        stream = sys.stderr
    else:
        try:
            with open(args.out, "w", newline="") as fh:
                series.to_csv(fh)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from exc
        stream = sys.stdout
    print(f"H0 = {H0!r}", file=stream)
    print(f"final constraint residual = {series.constraint[-1]:.3e}", file=stream)
    return EXIT_OK


def cmd_load(args) -> int:
    try:
        archive = session.load_session(args.path)
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc}") from exc
    doc = OutputDocument("load", _meta(**{k: str(v) for k, v in archive.settings.items()}))
    for name, e in archive.expressions.items():
        doc.add(name, e)
    sys.stdout.write(doc.render(args.out))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frwcosmo", description="FRW scalar-field cosmology toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    outputs = ("text", "machine", "latex")

    d = sub.add_parser("derive", help="derive the Friedmann system")
    d.add_argument("--units", choices=("geometric", "symbolic"), default="symbolic")
    d.add_argument("--lambda", dest="lambda_", type=_on_off, default=False, metavar="on|off")
    d.add_argument("--fluid", type=_on_off, default=True, metavar="on|off")
    d.add_argument("--k", default="k")
    d.add_argument("--out", choices=outputs, default="text")
    d.add_argument("--save", type=Path)
    d.set_defaults(func=cmd_derive)

    r = sub.add_parser("reverse", help="reconstruct V(phi) from an expansion history")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--scale-factor")
    src.add_argument("--hubble")
    r.add_argument("--k", default="k")
    r.add_argument("--branch", choices=("+", "-"), default="+")
    r.add_argument("--series-order", type=int, default=4)
    r.add_argument("--t0", default="0")
    r.add_argument("--params", action="append", help="numeric bindings name=value[,...] for series checks")
    r.add_argument("--out", choices=outputs, default="text")
    r.set_defaults(func=cmd_reverse)

    c = sub.add_parser("check", help="run the identity suites")
    c.add_argument("--metric", choices=("frw", "minkowski"), default="frw")
    c.add_argument("--inject-fault", choices=("einstein-sign",), help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("evolve", help="integrate the Friedmann + Klein-Gordon system")
    e.add_argument("--potential", required=True, help="V as an expression in phi")
    e.add_argument("--dpotential", help="dV/dphi (default: symbolic derivative)")
    e.add_argument("--phi0", type=float, default=0.0)
    e.add_argument("--dphi0", type=float, default=0.0)
    e.add_argument("--H0", type=float)
    e.add_argument("--solve-H0", action="store_true")
    e.add_argument("--a0", type=float, default=1.0)
    e.add_argument("--k", type=float, default=0.0)
    e.add_argument("--t0", type=float, default=0.0)
    e.add_argument("--t-end", type=float, required=True)
    e.add_argument("--dt", type=float, default=1e-3)
    e.add_argument("--tol", type=float, default=1e-6, help="constraint tolerance during evolution")
    e.add_argument("--stride", type=int, default=1)
    e.add_argument("--params", action="append")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_evolve)
    ld = sub.add_parser("load", help="print the residuals stored in a session archive")
    ld.add_argument("path", type=Path)
    ld.add_argument("--out", choices=outputs, default="text")
    ld.set_defaults(func=cmd_load)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"frwcosmo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except reverse.NegativeKineticError as exc:
        print(f"frwcosmo: negative kinetic term: {exc}", file=sys.stderr)
        return EXIT_MATH
    except session.SessionFormatError as exc:
        print(f"frwcosmo: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (reverse.NonInvertibleError, expr.SingularSystemError, expr.NonlinearSystemError,
            numeric.ConstraintViolation, numeric.IntegrationError, cosmo.ReductionError) as exc:
        print(f"frwcosmo: {exc}", file=sys.stderr)
        return EXIT_MATH


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
