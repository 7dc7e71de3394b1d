"""Tensor calculus on a 4-dimensional coordinate chart.

Components are stored densely as flat tuples of expressions; every derived
object is simplified to canonical form on construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import sympy as sp

from .expr import function, is_zero, simplify, symbol

DIM = 4
UP, DOWN = "u", "d"


@dataclass(frozen=True)
class Metric:
    coords: tuple
    components: sp.ImmutableMatrix
    name: str = "g"

    def __post_init__(self):
        if len(self.coords) != DIM or self.components.shape != (DIM, DIM):
            raise ValueError("metric must be 4x4 over 4 coordinates")
        for i in range(DIM):
            for j in range(i + 1, DIM):
                if not is_zero(self.components[i, j] - self.components[j, i]):
                    raise ValueError("metric is not symmetric")
        if is_zero(self.det):
            raise ValueError("metric is degenerate")

    def __getitem__(self, ij):
        return self.components[ij]

    @cached_property
    def det(self) -> sp.Expr:
        return simplify(self.components.det(method="berkowitz"))

    @cached_property
    def inverse(self) -> sp.ImmutableMatrix:
        g = self.components
        if g.is_diagonal():
            inv = sp.diag(*[1 / g[i, i] for i in range(DIM)])
        else:
            inv = g.adjugate(method="berkowitz") / self.det
        return sp.ImmutableMatrix(DIM, DIM, [simplify(x) for x in inv])

    def as_tensor(self) -> "Tensor":
        return Tensor.from_function(self.name, (DOWN, DOWN), lambda i, j: self.components[i, j])


@dataclass(frozen=True)
class Tensor:
    name: str
    valence: tuple
    components: tuple

    def __post_init__(self):
        if len(self.components) != DIM ** len(self.valence):
            raise ValueError("component count does not match rank")
        if any(v not in (UP, DOWN) for v in self.valence):
            raise ValueError(f"bad valence {self.valence}")

    @classmethod
    def from_function(cls, name, valence, fn, simplified=True):
        rank = len(valence)
        comps = []
        for idx in itertools.product(range(DIM), repeat=rank):
            value = sp.sympify(fn(*idx))
            comps.append(simplify(value) if simplified else value)
        return cls(name, tuple(valence), tuple(comps))

    @property
    def rank(self) -> int:
        return len(self.valence)

    def _offset(self, idx):
        if len(idx) != self.rank:
            raise IndexError(f"{self.name} has rank {self.rank}")
        off = 0
        for i in idx:
            if not 0 <= i < DIM:
                raise IndexError(f"index {i} out of range")
            off = off * DIM + i
        return off

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if self.rank == 0:
            return self.components[0]
        return self.components[self._offset(idx)]

    def indices(self):
        return itertools.product(range(DIM), repeat=self.rank)

    def items(self):
        return zip(self.indices(), self.components)

    def map(self, fn, name=None) -> "Tensor":
        return Tensor(name or self.name, self.valence, tuple(simplify(fn(c)) for c in self.components))

    def __add__(self, other: "Tensor") -> "Tensor":
        self._check_compatible(other)
        comps = tuple(simplify(a + b) for a, b in zip(self.components, other.components))
        return Tensor(f"{self.name}+{other.name}", self.valence, comps)

    def __sub__(self, other: "Tensor") -> "Tensor":
        self._check_compatible(other)
        comps = tuple(simplify(a - b) for a, b in zip(self.components, other.components))
        return Tensor(f"{self.name}-{other.name}", self.valence, comps)

    def scale(self, factor) -> "Tensor":
        return self.map(lambda c: factor * c)

    def _check_compatible(self, other):
        if self.valence != other.valence:
            raise ValueError(f"valence mismatch {self.valence} vs {other.valence}")

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.components)

    def nonzero(self) -> dict:
        return {idx: c for idx, c in self.items() if not is_zero(c)}


# ---------------------------------------------------------------------------
# standard metrics


def minkowski_metric(c=None) -> Metric:
    c = symbol("c") if c is None else sp.sympify(c)
    coords = tuple(symbol(n) for n in ("t", "x", "y", "z"))
    return Metric(coords, sp.ImmutableMatrix(sp.diag(-c**2, 1, 1, 1)), name="minkowski")


def frw_metric(k=None, c=None, scale=None) -> Metric:
    """FRW line element in (t, r, theta, varphi):
    ``-c^2 dt^2 + R(t)^2 [dr^2/(1-k r^2) + r^2 (dtheta^2 + sin^2 theta dvarphi^2)]``."""
    t, r, th, ph = (symbol(n) for n in ("t", "r", "theta", "varphi"))
    k = symbol("k") if k is None else sp.sympify(k)
    c = symbol("c") if c is None else sp.sympify(c)
    R = function("R")(t) if scale is None else sp.sympify(scale)
    g = sp.diag(-c**2, R**2 / (1 - k * r**2), R**2 * r**2, R**2 * r**2 * sp.sin(th) ** 2)
    return Metric((t, r, th, ph), sp.ImmutableMatrix(g), name="frw")


# ---------------------------------------------------------------------------
# curvature


@lru_cache(maxsize=64)
def christoffel(g: Metric) -> Tensor:
    """Gamma^a_{bc} of the Levi-Civita connection."""
    x = g.coords
    ginv = g.inverse
    dg = [[[sp.diff(g[i, j], x[k]) for k in range(DIM)] for j in range(DIM)] for i in range(DIM)]

    def gamma(a, b, c):
        return sp.Rational(1, 2) * sum(
            ginv[a, d] * (dg[d][c][b] + dg[b][d][c] - dg[b][c][d]) for d in range(DIM) if ginv[a, d] != 0
        )

    return Tensor.from_function("Gamma", (UP, DOWN, DOWN), gamma)


@lru_cache(maxsize=64)
def ricci_tensor(g: Metric) -> Tensor:
    """R_{ij} = d_a Gamma^a_{ij} - d_j Gamma^a_{ia} + Gamma^a_{ab} Gamma^b_{ij} - Gamma^a_{ib} Gamma^b_{aj}."""
    x = g.coords
    G = christoffel(g)

    def ric(i, j):
        out = 0
        for a in range(DIM):
            out += sp.diff(G[a, i, j], x[a]) - sp.diff(G[a, i, a], x[j])
            for b in range(DIM):
                out += G[a, a, b] * G[b, i, j] - G[a, i, b] * G[b, a, j]
        return out

    return Tensor.from_function("Ric", (DOWN, DOWN), ric)


@lru_cache(maxsize=64)
def ricci_scalar(g: Metric) -> sp.Expr:
    Ric = ricci_tensor(g)
    ginv = g.inverse
    return simplify(sum(ginv[i, j] * Ric[i, j] for i in range(DIM) for j in range(DIM)))


def einstein_tensor(g: Metric, lam=0) -> Tensor:
    """G_{ij} = R_{ij} - g_{ij} R / 2 + lam g_{ij}."""
    Ric = ricci_tensor(g)
    Rs = ricci_scalar(g)
    lam = sp.sympify(lam)
    return Tensor.from_function(
        "G", (DOWN, DOWN), lambda i, j: Ric[i, j] - sp.Rational(1, 2) * g[i, j] * Rs + lam * g[i, j]
    )


# ---------------------------------------------------------------------------
# index gymnastics and derivatives


def _move_index(T: Tensor, slot: int, g: Metric, to: str) -> Tensor:
    if not 0 <= slot < T.rank:
        raise IndexError(f"slot {slot} out of range for rank {T.rank}")
    frm = DOWN if to == UP else UP
    if T.valence[slot] != frm:
        raise ValueError(f"slot {slot} of {T.name} is not {'down' if frm == DOWN else 'up'}")
    mat = g.inverse if to == UP else g.components
    valence = T.valence[:slot] + (to,) + T.valence[slot + 1 :]

    def comp(*idx):
        out = 0
        for a in range(DIM):
            m = mat[idx[slot], a]
            if m != 0:
                out += m * T[idx[:slot] + (a,) + idx[slot + 1 :]]
        return out

    return Tensor.from_function(T.name, valence, comp)


def raise_index(T: Tensor, slot: int, g: Metric) -> Tensor:
    return _move_index(T, slot, g, UP)


def lower_index(T: Tensor, slot: int, g: Metric) -> Tensor:
    return _move_index(T, slot, g, DOWN)


def covariant_divergence(T: Tensor, g: Metric) -> Tensor:
    """Contract the covariant derivative with the second slot of a rank-2
    tensor: ``T_i{}^j{}_{;j}`` (or ``T^{ij}{}_{;j}``).  A lower second slot is
    raised first; the result keeps the valence of the first slot."""
    if T.rank != 2:
        raise ValueError("covariant divergence needs a rank-2 tensor")
    if T.valence[1] == DOWN:
        T = raise_index(T, 1, g)
    x = g.coords
    Gam = christoffel(g)
    first = T.valence[0]

    def div(i):
        out = sum(sp.diff(T[i, j], x[j]) for j in range(DIM))
        for j in range(DIM):
            for k in range(DIM):
                out += Gam[j, j, k] * T[i, k]
                if first == DOWN:
                    out -= Gam[k, j, i] * T[k, j]
                else:
                    out += Gam[i, j, k] * T[k, j]
        return out

    return Tensor.from_function(f"div({T.name})", (first,), div)


def box_scalar(f, g: Metric) -> sp.Expr:
    """d'Alembertian ``|g|^{-1/2} d_i(|g|^{1/2} g^{ij} d_j f)``, evaluated as
    ``d_i X^i + Gamma^k_{ki} X^i`` with ``X^i = g^{ij} d_j f``."""
    f = sp.sympify(f)
    x = g.coords
    ginv = g.inverse
    Gam = christoffel(g)
    X = [sum(ginv[i, j] * sp.diff(f, x[j]) for j in range(DIM)) for i in range(DIM)]
    out = sum(sp.diff(X[i], x[i]) for i in range(DIM))
    out += sum(Gam[k, k, i] * X[i] for i in range(DIM) for k in range(DIM))
    return simplify(out)


def metric_covariant_derivative(g: Metric) -> Tensor:
    """nabla_k g_{ij}; vanishes for the Levi-Civita connection."""
    x = g.coords
    Gam = christoffel(g)

    def comp(i, j, k):
        out = sp.diff(g[i, j], x[k])
        for a in range(DIM):
            out -= Gam[a, k, i] * g[a, j] + Gam[a, k, j] * g[i, a]
        return out

    return Tensor.from_function("nabla g", (DOWN, DOWN, DOWN), comp)


def metric_from_diagonal(coords: Sequence, diagonal: Sequence, name="g") -> Metric:
    return Metric(tuple(coords), sp.ImmutableMatrix(sp.diag(*diagonal)), name=name)
