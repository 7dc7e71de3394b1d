"""Forward evolution of the fluid-free Friedmann + Klein-Gordon system and
finite-difference helpers.

Geometric units throughout.  The state is (a, H, phi, dphi); H' comes from
the rr Einstein equation and the tt equation is only monitored:

    a'    = a H
    H'    = -(3 H^2 + K + 4 pi (dphi^2 - V)) / 2,      K = k / a^2
    phi'' = -3 H dphi - DV / 2
    constraint = 3 H^2 + 3 K - 4 pi (dphi^2 + V)
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np


class ConstraintViolation(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass
class EvolutionState:
    t: float
    a: float
    H: float
    phi: float
    dphi: float


@dataclass
class IntegrationConfig:
    h: float
    t_end: float
    potential: Callable[[float], float]
    dpotential: Callable[[float], float]
    k: float = 0.0
    constraint_tol: float = 1e-6
    initial_tol: float = 1e-8
    stride: int = 1

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class EvolutionSeries:
    t: np.ndarray
    a: np.ndarray
    H: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    constraint: np.ndarray
    stride: int = 1

    HEADER = ("t", "a", "H", "phi", "dphi", "constraint_residual")

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> EvolutionState:
        return EvolutionState(self.t[-1], self.a[-1], self.H[-1], self.phi[-1], self.dphi[-1])

    def rows(self, stride: int | None = None):
        stride = stride or self.stride
        n = len(self.t)
        idx = list(range(0, n, stride))
        if idx[-1] != n - 1:
            idx.append(n - 1)
        for i in idx:
            yield (self.t[i], self.a[i], self.H[i], self.phi[i], self.dphi[i], self.constraint[i])

    def to_csv(self, stream=None, stride: int | None = None) -> str | None:
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in self.rows(stride):
            writer.writerow([repr(float(x)) for x in row])
        return out.getvalue() if stream is None else None


def read_csv(text: str) -> EvolutionSeries:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != EvolutionSeries.HEADER:
        raise ValueError(f"unexpected header {header}")
    data = np.array([[float(x) for x in row] for row in reader])
    return EvolutionSeries(*data.T)


def constraint_residual(state: EvolutionState, cfg: IntegrationConfig) -> float:
    return 3 * state.H**2 + 3 * cfg.k / state.a**2 - 4 * math.pi * (state.dphi**2 + cfg.potential(state.phi))


def solve_H0(a: float, phi: float, dphi: float, potential, k: float = 0.0) -> float:
    """Expanding-branch H from the constraint."""
    h2 = (4 * math.pi * (dphi**2 + potential(phi)) - 3 * k / a**2) / 3
    if h2 < 0:
        raise ConstraintViolation(f"constraint has no real H0 (H0^2 = {h2:.6g})")
    return math.sqrt(h2)


def _rhs(y, cfg: IntegrationConfig):
    a, H, phi, dphi = y
    K = cfg.k / a**2
    return np.array(
        [
            a * H,
            -(3 * H**2 + K + 4 * math.pi * (dphi**2 - cfg.potential(phi))) / 2,
            dphi,
            -3 * H * dphi - cfg.dpotential(phi) / 2,
        ]
    )


def evolve(initial: EvolutionState, cfg: IntegrationConfig) -> EvolutionSeries:
    """Classical fixed-step RK4 from ``initial.t`` to ``cfg.t_end``.

    Integrates backwards when ``t_end < t``.  The step is shrunk slightly so
    that a whole number of steps lands on ``t_end``.
    """
    r0 = constraint_residual(initial, cfg)
    if abs(r0) > cfg.initial_tol:
        raise ConstraintViolation(f"initial constraint residual {r0:.3e} exceeds {cfg.initial_tol:g}")
    span = cfg.t_end - initial.t
    n = max(1, math.ceil(abs(span) / cfg.h - 1e-9))
    dt = span / n

    y = np.array([initial.a, initial.H, initial.phi, initial.dphi], dtype=float)
    out = np.empty((n + 1, 6))
    out[0] = (initial.t, *y, r0)
    for i in range(1, n + 1):
        k1 = _rhs(y, cfg)
        k2 = _rhs(y + 0.5 * dt * k1, cfg)
        k3 = _rhs(y + 0.5 * dt * k2, cfg)
        k4 = _rhs(y + dt * k3, cfg)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = initial.t + i * dt
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t = {t:.6g}")
        if y[0] <= 0:
            raise IntegrationError(f"scale factor reached {y[0]:.3g} at t = {t:.6g}")
        res = constraint_residual(EvolutionState(t, *y), cfg)
        if abs(res) > cfg.constraint_tol:
            raise IntegrationError(f"constraint residual {res:.3e} exceeds {cfg.constraint_tol:g} at t = {t:.6g}")
        out[i] = (t, *y, res)
    return EvolutionSeries(*out.T, stride=cfg.stride)


# ---------------------------------------------------------------------------
# oracles


def fd_derivative(f: Callable[[float], float], x: float, order: int = 1) -> float:
    """Central difference.

    order 1: h = 1e-6 max(1, |x|), truncation ~ h^2 f'''/6;
    order 2: h = 1e-4 max(1, |x|), truncation ~ h^2 f''''/12.
    """
    scale = max(1.0, abs(x))
    if order == 1:
        h = 1e-6 * scale
        samples = (f(x + h), f(x - h))
        value = (samples[0] - samples[1]) / (2 * h)
    elif order == 2:
        h = 1e-4 * scale
        samples = (f(x + h), f(x), f(x - h))
        value = (samples[0] - 2 * samples[1] + samples[2]) / h**2
    else:
        raise ValueError("order must be 1 or 2")
    if not all(math.isfinite(s) for s in samples):
        raise ValueError(f"non-finite sample near x = {x}")
    return value


@dataclass
class ScanEntry:
    max_abs: float
    argmax: float


@dataclass
class ScanReport:
    entries: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return max((e.max_abs for e in self.entries.values()), default=0.0)

    def below(self, tol: float) -> bool:
        return self.max_abs < tol


def residual_scan(system, bindings: Callable[[float], Mapping], grid: Iterable[float]) -> ScanReport:
    """Evaluate every residual of ``system`` (a FriedmannSystem or a mapping
    of name -> expression) on ``grid``; ``bindings(t)`` supplies the values."""
    from .expr import evaluate

    items = dict(system.items()) if hasattr(system, "items") else dict(system)
    report = ScanReport({name: ScanEntry(0.0, float("nan")) for name in items})
    for tv in grid:
        b = dict(bindings(float(tv)))
        b.setdefault("t", float(tv))
        for name, e in items.items():
            v = abs(evaluate(e, b))
            entry = report.entries[name]
            if v > entry.max_abs or math.isnan(entry.argmax):
                report.entries[name] = ScanEntry(max(v, entry.max_abs), float(tv) if v >= entry.max_abs else entry.argmax)
    return report
