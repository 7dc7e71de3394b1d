"""FRW universe with a minimally coupled scalar field and a perfect fluid.

Builds the stress-energy tensors, the Einstein equations, the conservation
law and the Klein-Gordon equation, then rewrites them in terms of the Hubble
function H, the deceleration factor Q and the curvature factor K = k/R^2.

Conventions:

* scalar pressure and density are ``dphi^2/(2c^2) -/+ V/2``;
* ``R' = H R`` and ``R'' = -2 H^2 R Q``;
* the cosmological constant enters as ``G_ij + lambda g_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import sympy as sp

from .expr import T, function, is_zero, simplify, substitute, symbol
from .tensor import (
    DIM,
    DOWN,
    Tensor,
    covariant_divergence,
    box_scalar,
    einstein_tensor,
    frw_metric,
    raise_index,
)

R = function("R")
H = function("H")
Q = function("Q")
K = function("K")
PHI = function("phi")
V = function("V")
DV = function("DV")
P = function("p")
EPS = function("epsilon")
D2PHI = function("D2Phi")

EQUATION_NAMES = ("EcuKG", "Ecunr1", "Ecunr2", "Ecunr22", "Ecunr3")


class ReductionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CosmoModel:
    """Physical setup.

    ``units="geometric"`` sets G = c = 1.  ``fluid=False`` removes the perfect
    fluid (p = epsilon = 0).  ``lam`` is the cosmological constant (0 = off).
    """

    k: sp.Expr = symbol("k")
    units: str = "symbolic"
    fluid: bool = True
    lam: sp.Expr = sp.Integer(0)

    def __post_init__(self):
        if self.units not in ("symbolic", "geometric"):
            raise ValueError(f"unknown unit mode {self.units!r}")
        object.__setattr__(self, "k", sp.sympify(self.k))
        object.__setattr__(self, "lam", sp.sympify(self.lam))

    @property
    def G(self):
        return sp.Integer(1) if self.units == "geometric" else symbol("G")

    @property
    def c(self):
        return sp.Integer(1) if self.units == "geometric" else symbol("c")

    @property
    def metric(self):
        return _frw(self.k, self.c)

    @property
    def phi(self):
        return PHI(T)

    @property
    def V(self):
        return V(T)

    @property
    def p(self):
        return P(T) if self.fluid else sp.Integer(0)

    @property
    def epsilon(self):
        return EPS(T) if self.fluid else sp.Integer(0)

    def settings(self) -> dict:
        return {
            "k": str(self.k),
            "units": self.units,
            "fluid": self.fluid,
            "lambda": str(self.lam),
        }


@lru_cache(maxsize=16)
def _frw(k, c):
    return frw_metric(k=k, c=c)


@dataclass(frozen=True)
class FriedmannSystem:
    """The five residuals (each ``== 0``) in H, Q, K form."""

    EcuKG: sp.Expr
    Ecunr1: sp.Expr
    Ecunr2: sp.Expr
    Ecunr22: sp.Expr
    Ecunr3: sp.Expr
    notes: dict = field(default_factory=dict, compare=False, hash=False)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in EQUATION_NAMES}

    def items(self):
        return self.as_dict().items()


# ---------------------------------------------------------------------------
# matter


def four_velocity(model: CosmoModel) -> Tensor:
    """Comoving u_i = -c delta^t_i."""
    return Tensor("u", (DOWN,), tuple(-model.c if i == 0 else sp.Integer(0) for i in range(DIM)))


def scalar_pressure_density(model: CosmoModel):
    kin = sp.diff(model.phi, T) ** 2 / (2 * model.c**2)
    return simplify(kin - model.V / 2), simplify(kin + model.V / 2)


def _perfect_fluid(model, name, pressure, density) -> Tensor:
    g = model.metric
    u = four_velocity(model)
    return Tensor.from_function(name, (DOWN, DOWN), lambda i, j: (density + pressure) * u[i] * u[j] + pressure * g[i, j])


@lru_cache(maxsize=16)
def stress_energy_scalar_direct(model: CosmoModel) -> Tensor:
    """T1_ij = d_i phi d_j phi - g_ij (g^ab d_a phi d_b phi + V)/2."""
    g = model.metric
    x = g.coords
    dphi = [sp.diff(model.phi, xi) for xi in x]
    ginv = g.inverse
    kinetic = sum(ginv[a, b] * dphi[a] * dphi[b] for a in range(DIM) for b in range(DIM))
    return Tensor.from_function(
        "T1", (DOWN, DOWN), lambda i, j: dphi[i] * dphi[j] - g[i, j] * (kinetic + model.V) / 2
    )


@lru_cache(maxsize=16)
def stress_energy_scalar_fluid(model: CosmoModel) -> Tensor:
    p_phi, rho_phi = scalar_pressure_density(model)
    return _perfect_fluid(model, "TT1", p_phi, rho_phi)


@lru_cache(maxsize=16)
def stress_energy_fluid(model: CosmoModel) -> Tensor:
    return _perfect_fluid(model, "T2", model.p, model.epsilon)


@lru_cache(maxsize=16)
def stress_energy_total(model: CosmoModel) -> Tensor:
    total = stress_energy_scalar_direct(model) + stress_energy_fluid(model)
    return Tensor("T", total.valence, total.components)


# ---------------------------------------------------------------------------
# field equations


@lru_cache(maxsize=16)
def einstein_equations(model: CosmoModel) -> Tensor:
    """Ein_ij = G_ij + lambda g_ij - 8 pi G T_ij / c^4."""
    g = model.metric
    Gt = einstein_tensor(g, model.lam)
    Tt = stress_energy_total(model)
    coupling = 8 * sp.pi * model.G / model.c**4
    return Tensor.from_function("Ein", (DOWN, DOWN), lambda i, j: Gt[i, j] - coupling * Tt[i, j])


@lru_cache(maxsize=16)
def conservation(model: CosmoModel) -> Tensor:
    """T_i{}^j{}_{;j}."""
    return covariant_divergence(stress_energy_total(model), model.metric)


def _raw_klein_gordon(model):
    return box_scalar(model.phi, model.metric) - DV(T) / 2


def klein_gordon(model: CosmoModel) -> sp.Expr:
    """(phi'' + 3 H phi')/c^2 + DV/2, after R' -> H R."""
    e = _rewrite_hubble(_raw_klein_gordon(model))
    return _normalize(e, DV(T), sp.Rational(1, 2))


# ---------------------------------------------------------------------------
# reduction pipeline

_RDOT = sp.Derivative(R(T), T)
_RDDOT = sp.Derivative(R(T), (T, 2))
_MAX_PASSES = 8


def _has_R_derivative(e):
    return any(d.expr == R(T) for d in e.atoms(sp.Derivative))


def _rewrite_curvature(e, k):
    if isinstance(k, sp.Symbol):
        e = substitute(e, k, K(T) * R(T) ** 2)
    return sp.expand(simplify(e))


def _rewrite_hubble(e):
    for _ in range(_MAX_PASSES):
        if not _has_R_derivative(e):
            return e
        e = sp.expand(substitute(e, _RDOT, H(T) * R(T)))
    raise ReductionError(f"R derivatives survive {_MAX_PASSES} substitution passes")


def _field_kernels(e):
    names = {f.__name__ for f in (R, H, Q, K, PHI, V, DV, P, EPS, D2PHI)}
    return {a for a in e.atoms(sp.Function, sp.Derivative) if _is_field(a, names)}


def _is_field(a, names):
    if isinstance(a, sp.Derivative):
        return True
    return getattr(a.func, "__name__", None) in names


def anchor_coefficient(e, anchor):
    """Coefficient of the monomial ``anchor`` in ``e``: the sum over terms
    whose ratio to ``anchor`` is free of field functions."""
    total = sp.Integer(0)
    for term in sp.Add.make_args(sp.expand(e)):
        ratio = sp.cancel(term / anchor)
        if not _field_kernels(ratio) and not ratio.has(symbol("r"), symbol("theta")):
            total += ratio
    return simplify(total)


def _normalize(e, anchor, target):
    coeff = anchor_coefficient(e, anchor)
    if is_zero(coeff):
        raise ReductionError(f"anchor {anchor} missing from residual")
    return sp.expand(simplify(e * target / coeff))


@lru_cache(maxsize=16)
def reduce_to_friedmann(model: CosmoModel) -> FriedmannSystem:
    """Reduce the field equations to the five residuals EcuKG, Ecunr1,
    Ecunr2, Ecunr22 and Ecunr3.

    Mixed components Ein^t_t and Ein^r_r carry no metric factor, so clearing
    the overall constant afterwards is enough to reach the printed grouping.
    A numeric ``k`` still enters only through K(t) = k/R(t)^2, which is
    dropped when k = 0.
    """
    if not isinstance(model.k, sp.Symbol):
        general = reduce_to_friedmann(replace(model, k=symbol("k")))
        if model.k != 0:
            return general
        flat = {name: sp.expand(e.subs(K(T), 0)) for name, e in general.items()}
        return FriedmannSystem(**flat, notes=general.notes)
    g = model.metric
    mixed = raise_index(einstein_equations(model), 0, g)
    tt, rr = mixed[0, 0], mixed[1, 1]
    cons_t = conservation(model)[0]

    e1 = _rewrite_hubble(_rewrite_curvature(tt, model.k))
    e2_raw = _rewrite_curvature(rr, model.k)
    e22 = _rewrite_hubble(sp.expand(substitute(e2_raw, _RDDOT, -2 * H(T) ** 2 * R(T) * Q(T))))
    e2 = _rewrite_hubble(e2_raw)
    e3 = _rewrite_hubble(_rewrite_curvature(cons_t, model.k))
    kg = _rewrite_hubble(_raw_klein_gordon(model))

    e1 = _normalize(e1, H(T) ** 2, 3)
    e2 = _normalize(e2, H(T) ** 2, 3)
    e22 = _normalize(e22, H(T) ** 2 * Q(T), -4)
    e3 = _normalize(e3, sp.Derivative(V(T), T), sp.Rational(1, 2))
    kg = _normalize(kg, DV(T), sp.Rational(1, 2))

    system = FriedmannSystem(
        EcuKG=kg,
        Ecunr1=e1,
        Ecunr2=e2,
        Ecunr22=e22,
        Ecunr3=e3,
        notes={
            "EcuKG": "box(phi) - DV/2",
            "Ecunr1": "Ein^t_t (tt Einstein equation)",
            "Ecunr2": "Ein^r_r (rr Einstein equation; theta-theta and varphi-varphi are identical)",
            "Ecunr22": "Ein^r_r with R'' = -2 H^2 R Q",
            "Ecunr3": "time component of T_i^j_;j",
        },
    )
    for name, e in system.items():
        if e.has(R(T)):
            raise ReductionError(f"{name} still depends on R(t)")
    return system


def einstein_components(model: CosmoModel) -> dict:
    """Raw (unprocessed) Einstein-equation components, keyed ``Ein_ij``."""
    Ein = einstein_equations(model)
    return {f"Ein_{i}{j}": c for (i, j), c in Ein.items() if i <= j}
