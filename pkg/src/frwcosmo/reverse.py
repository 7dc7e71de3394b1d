"""Reconstruct the scalar-field potential from a prescribed expansion history.

Given R(t) (or H(t)) the two Einstein equations of the fluid-free system,
in geometric units, are solved for V(t) and dphi^2; the field is integrated
in closed form when possible and otherwise as a Taylor series about t0; the
time is then eliminated to express V and DV as functions of the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .cosmo import D2PHI, DV, EQUATION_NAMES, CosmoModel, reduce_to_friedmann
from .cosmo import V as V_FN
from .expr import (
    NotClosedForm,
    T,
    EvaluationError,
    UndecidableError,
    antiderivative,
    bind_function,
    evaluate,
    is_zero,
    parse,
    simplify,
    solve_linear,
    sqrt_simplify,
    substitute,
    symbol,
    zero_test,
)

PHI_SYM = symbol("phi")
PHI0 = symbol("phi0")
R0 = symbol("R0")

GEOMETRIC = CosmoModel(units="geometric", fluid=False)


class NegativeKineticError(ValueError):
    """dphi^2 < 0 at t0: the history needs H' > K, which no real field supports."""


class NonInvertibleError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionHistory:
    scale_factor: sp.Expr | None = None
    hubble: sp.Expr | None = None
    k: sp.Expr = symbol("k")
    t0: sp.Expr = sp.Integer(0)

    def __post_init__(self):
        if (self.scale_factor is None) == (self.hubble is None):
            raise ValueError("give exactly one of scale_factor or hubble")
        for name in ("scale_factor", "hubble", "k", "t0"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = parse(value)
            if value is not None:
                object.__setattr__(self, name, sp.sympify(value))

    @property
    def H(self) -> sp.Expr:
        if self.hubble is not None:
            return simplify(self.hubble)
        R = self.scale_factor
        return simplify(sp.powsimp(sp.diff(R, T) / R, force=True))

    @property
    def Hdot(self) -> sp.Expr:
        return simplify(sp.diff(self.H, T))

    @property
    def R(self) -> sp.Expr:
        if self.scale_factor is not None:
            return self.scale_factor
        F = antiderivative(self.H, T)
        if isinstance(F, NotClosedForm):
            raise ValueError(f"cannot integrate H(t) = {self.hubble} for the scale factor")
        return R0 * sp.exp(F - F.subs(T, self.t0))

    @property
    def K(self) -> sp.Expr:
        if is_zero(self.k):
            return sp.Integer(0)
        return simplify(self.k / self.R**2)


@dataclass
class Reconstruction:
    V_t: sp.Expr
    dotphi2: sp.Expr
    dphi: sp.Expr
    phi_t: sp.Expr
    V_phi: sp.Expr
    DV_phi: sp.Expr
    kg_residual: sp.Expr
    branch: int = 1
    phi0: sp.Symbol = PHI0
    field_mode: str = "closed"  # how phi(t) was obtained
    potential_mode: str = "closed"  # how V(phi) was obtained
    order: int | None = None
    t0: sp.Expr = sp.Integer(0)
    phi_ref: sp.Expr = PHI0  # V_phi is expanded in powers of (phi - phi_ref)

    @property
    def mode(self) -> str:
        return "series" if "series" in (self.field_mode, self.potential_mode) else "closed"

    def expressions(self) -> dict:
        return {
            "V(t)": self.V_t,
            "dotphi2": self.dotphi2,
            "phi(t)": self.phi_t,
            "V(phi)": self.V_phi,
            "DV(phi)": self.DV_phi,
            "EcuKG": self.kg_residual,
        }


# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def potential_formulas() -> tuple[sp.Expr, sp.Expr]:
    """V and dphi^2 in terms of H, H', K, solved from Ecunr1 and Ecunr2."""
    system = reduce_to_friedmann(GEOMETRIC)
    kin = sp.Derivative(GEOMETRIC.phi, T) ** 2
    e1 = substitute(system.Ecunr1, kin, D2PHI(T))
    e2 = substitute(system.Ecunr2, kin, D2PHI(T))
    sol = solve_linear([e1, e2], [V_FN(T), D2PHI(T)])
    return sol[V_FN(T)], sol[D2PHI(T)]


def _bind_history(e, h: ExpansionHistory):
    e = bind_function(e, "H", h.H)
    e = bind_function(e, "K", h.K)
    return simplify(e)


def reconstruct_potential(h: ExpansionHistory, units: str = "geometric", fluid: bool = False):
    """Return ``(V(t), dphi^2(t))`` for the history."""
    if units != "geometric":
        raise ValueError("reconstruction works in geometric units (G = c = 1)")
    if fluid:
        raise ValueError("reconstruction with fluid matter is not supported")
    V_gen, kin_gen = potential_formulas()
    return sp.expand(_bind_history(V_gen, h)), sp.expand(_bind_history(kin_gen, h))


def _check_kinetic_sign(dotphi2, t0):
    at_t0 = simplify(dotphi2.subs(T, t0))
    free = at_t0.free_symbols
    if not free:
        value = evaluate(at_t0)
        if value < 0:
            raise NegativeKineticError(
                f"dphi^2(t0) = {value:.6g} < 0: H' > K at t0, no real scalar field"
            )
        return
    positive = {s: sp.Dummy(s.name, positive=True) for s in free}
    if at_t0.xreplace(positive).is_negative:
        raise NegativeKineticError(f"dphi^2(t0) = {at_t0} < 0: H' > K at t0, no real scalar field")


def _taylor(e, t0, order) -> list:
    coeffs = []
    d = e
    for n in range(order + 1):
        c = simplify(d.subs(T, t0) / math.factorial(n))
        if c.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
            raise NonInvertibleError(f"Taylor coefficient {n} is singular at t0 = {t0}")
        coeffs.append(c)
        d = sp.diff(d, T)
    return coeffs


def integrate_field(dotphi2, h: ExpansionHistory, branch: int = 1, order: int = 4, phi0=PHI0):
    """phi(t) from dphi = branch*sqrt(dphi^2).

    Returns ``(phi_t, dphi, mode)`` where mode is "closed" or "series"; in
    series mode phi(t0) = phi0.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    _check_kinetic_sign(dotphi2, h.t0)
    dphi = branch * sqrt_simplify(sp.sqrt(dotphi2))
    F = antiderivative(dphi, T)
    if not isinstance(F, NotClosedForm):
        return simplify(F) + phi0, dphi, "closed"
    coeffs = _taylor(dphi, h.t0, order)
    s = T - h.t0
    phi_t = phi0 + sp.Add(*[c * s ** (n + 1) / (n + 1) for n, c in enumerate(coeffs)])
    return phi_t, dphi, "series"


def _invert_family(F):
    """Solve u = F(t) for t when F is A*exp(a t)+B, A*ln(t)+B or A*t^m+B.

    Returns a function of u or None.
    """
    F = sp.expand(F)
    B = sp.Add(*[term for term in sp.Add.make_args(F) if not term.has(T)])
    G = sp.expand(F - B)
    if G == 0:
        return None
    A, g = G.as_independent(T, as_Add=False)
    g = sp.powsimp(g, combine="exp")
    if isinstance(g, sp.exp):
        rate = sp.diff(g.args[0], T)
        if not rate.has(T) and not is_zero(rate) and is_zero(g.args[0] - rate * T):
            return lambda u: sp.log((u - B) / A) / rate
    if isinstance(g, sp.log) and g.args[0] == T:
        return lambda u: sp.exp((u - B) / A)
    if g == T:
        return lambda u: (u - B) / A
    if g.is_Pow and g.base == T and not g.exp.has(T):
        return lambda u: ((u - B) / A) ** (1 / g.exp)
    return None


def _mul(p, q, order):
    """Product of two coefficient lists, truncated after ``u^order``."""
    out = [sp.Integer(0)] * (order + 1)
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        for j in range(order + 1 - i):
            if j < len(q) and q[j] != 0:
                out[i + j] += pi * q[j]
    return [sp.cancel(c) for c in out]


def _compose(c, s, order):
    """sum_n c[n] * s(u)^n as a coefficient list (s has no constant term)."""
    out = [sp.Integer(0)] * (order + 1)
    power = [sp.Integer(1)] + [sp.Integer(0)] * order
    for n, cn in enumerate(c):
        if n > 0:
            power = _mul(power, s, order)
        for i in range(order + 1):
            out[i] += cn * power[i]
    return [simplify(x) for x in out]


def _series_inverse(b, order):
    """Invert u = b1 s + b2 s^2 + ... to the coefficient list of s(u)."""
    if is_zero(b[1]):
        raise NonInvertibleError("dphi(t0) = 0: phi(t) is not locally invertible at t0")
    s = [sp.Integer(0), simplify(1 / b[1])] + [sp.Integer(0)] * (order - 1)
    higher_b = [sp.Integer(0), sp.Integer(0)] + list(b[2 : order + 1])
    for _ in range(order):
        higher = _compose(higher_b, s, order)
        s = [simplify((int(n == 1) - higher[n]) / b[1]) if n else sp.Integer(0) for n in range(order + 1)]
    return s


def _dphi(V_phi):
    # termwise, so (phi - phi0)^2 differentiates to 2 (phi - phi0), not 2 phi - 2 phi0
    return sp.Add(*[sp.factor_terms(sp.diff(term, PHI_SYM)) for term in sp.Add.make_args(V_phi)])


def potential_of_field(V_t, phi_t, t0=sp.Integer(0), order: int = 4, phi0=PHI0):
    """Eliminate t between V(t) and phi(t).

    Returns ``(V_phi, DV_phi, mode, phi_ref)`` with V_phi a function of the
    symbol ``phi``; a series is in powers of ``phi - phi_ref``.
    """
    if not V_t.has(T):
        return V_t, sp.Integer(0), "closed", phi0
    t_of_u = _invert_family(phi_t - phi0)
    if t_of_u is not None:
        u = sp.Dummy("u")
        V_u = V_t.subs(T, t_of_u(u))
        V_u = simplify(sqrt_simplify(sp.powsimp(sp.expand_log(V_u, force=True), force=True)))
        V_phi = sp.expand(V_u).xreplace({u: PHI_SYM - phi0})
        if is_zero(V_phi.subs(PHI_SYM, phi_t) - V_t):
            return V_phi, _dphi(V_phi), "closed", phi0
    # phi(t) from an order-N field velocity is exact through (t - t0)^(N+1);
    # carry the inversion and V(phi) to the same power.
    n_terms = order + 1
    phi_ref = simplify(phi_t.subs(T, t0))
    b = _taylor(phi_t, t0, n_terms)
    s_u = _series_inverse(b, n_terms)
    v = _taylor(V_t, t0, n_terms)
    V_u = _compose(v, s_u, n_terms)
    V_phi = sp.Add(*[c * (PHI_SYM - phi_ref) ** n for n, c in enumerate(V_u)])
    return V_phi, _dphi(V_phi), "series", phi_ref


def reconstruct(h: ExpansionHistory, branch: int = 1, order: int = 4, phi0=PHI0) -> Reconstruction:
    """Run the whole pipeline for one expansion history."""
    V_t, dotphi2 = reconstruct_potential(h)
    phi_t, dphi, field_mode = integrate_field(dotphi2, h, branch=branch, order=order, phi0=phi0)
    V_phi, DV_phi, pot_mode, phi_ref = potential_of_field(V_t, phi_t, h.t0, order=order, phi0=phi0)
    kg = substitute_reconstruction(reduce_to_friedmann(GEOMETRIC).EcuKG, h, V_t, phi_t, DV_phi)
    return Reconstruction(
        V_t=V_t,
        dotphi2=dotphi2,
        dphi=dphi,
        phi_t=phi_t,
        V_phi=V_phi,
        DV_phi=DV_phi,
        kg_residual=kg,
        branch=branch,
        phi0=phi0,
        field_mode=field_mode,
        potential_mode=pot_mode,
        order=order if "series" in (field_mode, pot_mode) else None,
        t0=h.t0,
        phi_ref=phi_ref,
    )


def substitute_reconstruction(e, h: ExpansionHistory, V_t, phi_t, DV_phi=None):
    """Bind H, K, Q, phi, V (and DV, when given) in a Friedmann residual."""
    e = bind_function(e, "H", h.H)
    e = bind_function(e, "K", h.K)
    if e.has(sp.Function("Q", real=True)(T)):
        Hx = h.H
        e = bind_function(e, "Q", -(h.Hdot + Hx**2) / (2 * Hx**2))
    e = bind_function(e, "phi", phi_t)
    e = bind_function(e, "V", V_t)
    if DV_phi is not None:
        e = bind_function(e, "DV", DV_phi.subs(PHI_SYM, phi_t))
    return simplify(e)


# ---------------------------------------------------------------------------
# consistency


@dataclass
class ResidualCheck:
    zero: bool
    path: str
    max_abs: float | None = None
    note: str = ""


@dataclass
class ConsistencyReport:
    mode: str
    residuals: dict = field(default_factory=dict)
    dv_from_kg: sp.Expr | None = None
    dv_consistent: bool = False
    dv_max_abs: float | None = None

    @property
    def ok(self) -> bool:
        return self.dv_consistent and all(r.zero for r in self.residuals.values())


def _grid(h, radius, points):
    t0 = float(h.t0)
    return np.linspace(t0 - radius, t0 + radius, points)


def _max_abs(e, params, grid):
    worst = 0.0
    for tv in grid:
        worst = max(worst, abs(evaluate(e, {**params, "t": float(tv)})))
    return worst


def verify_consistency(
    rec: Reconstruction,
    h: ExpansionHistory,
    params: dict | None = None,
    radius: float = 0.1,
    points: int = 21,
    tol: float = 1e-6,
) -> ConsistencyReport:
    """Substitute the reconstruction into all five residuals.

    Closed-form reconstructions are checked exactly; series reconstructions
    numerically on ``|t - t0| <= radius`` with the symbols bound by ``params``.
    """
    system = reduce_to_friedmann(GEOMETRIC)
    report = ConsistencyReport(mode=rec.mode)
    params = dict(params or {})
    grid = _grid(h, radius, points) if rec.mode == "series" else None
    H_vanishes = is_zero(h.H)
    for name in EQUATION_NAMES:
        eq = system.as_dict()[name]
        if name == "Ecunr22" and H_vanishes:
            report.residuals[name] = ResidualCheck(True, "skipped", note="Q undefined for H = 0")
            continue
        e = substitute_reconstruction(eq, h, rec.V_t, rec.phi_t, rec.DV_phi)
        report.residuals[name] = _check(e, rec.mode, params, grid, tol)

    kg_no_dv = substitute_reconstruction(system.EcuKG, h, rec.V_t, rec.phi_t)
    dv_t = solve_linear([kg_no_dv], [DV(T)])[DV(T)]
    report.dv_from_kg = dv_t
    diff_dv = simplify(dv_t - rec.DV_phi.subs(PHI_SYM, rec.phi_t))
    chk = _check(diff_dv, rec.mode, params, grid, tol)
    report.dv_consistent = chk.zero
    report.dv_max_abs = chk.max_abs
    return report


def _check(e, mode, params, grid, tol) -> ResidualCheck:
    if mode == "closed":
        try:
            zt = zero_test(e)
        except UndecidableError as exc:
            return ResidualCheck(False, "undecidable", note=str(exc))
        return ResidualCheck(zt.value, zt.path)
    try:
        worst = _max_abs(e, params, grid)
    except EvaluationError as exc:
        return ResidualCheck(False, "grid", note=str(exc))
    return ResidualCheck(worst < tol, "grid", max_abs=worst)
