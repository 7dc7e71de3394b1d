import math

import numpy as np
import pytest

from frwcosmo import numeric as nm
from frwcosmo.cosmo import CosmoModel, reduce_to_friedmann


def _const(v):
    return lambda phi: v


def _desitter_cfg(h, t_end, w=1.0):
    return nm.IntegrationConfig(h=h, t_end=t_end, potential=_const(3 * w * w / (4 * math.pi)), dpotential=_const(0.0))


def _closed_desitter(k=1.0, w=1.0):
    """V(phi) = 3w^2/(4pi) + 2w^2 (phi - phi0)^2 with phi(t) = -sqrt(k) e^{-wt}/(2 sqrt(pi) w)."""
    V = lambda p: 3 * w * w / (4 * math.pi) + 2 * w * w * p * p
    DV = lambda p: 4 * w * w * p
    phi_0 = -math.sqrt(k) / (2 * math.sqrt(math.pi) * w)
    dphi_0 = math.sqrt(k) / (2 * math.sqrt(math.pi))
    return V, DV, nm.EvolutionState(0.0, 1.0, w, phi_0, dphi_0)


def test_static_minkowski():
    cfg = nm.IntegrationConfig(h=0.1, t_end=2.0, potential=_const(0.0), dpotential=_const(0.0))
    s = nm.evolve(nm.EvolutionState(0.0, 1.0, 0.0, 0.3, 0.0), cfg)
    assert np.all(s.a == 1.0) and np.all(s.H == 0.0) and np.all(s.phi == 0.3)


def test_flat_de_sitter_exact():
    s = nm.evolve(nm.EvolutionState(0.0, 1.0, 1.0, 0.0, 0.0), _desitter_cfg(1e-3, 1.0))
    assert np.max(np.abs(s.a - np.exp(s.t)) / np.exp(s.t)) < 1e-8
    assert np.max(np.abs(s.constraint)) < 1e-12


def test_rk4_order():
    V, DV, init = _closed_desitter()
    errs = []
    for h in (0.04, 0.02, 0.01):
        cfg = nm.IntegrationConfig(h=h, t_end=2.0, potential=V, dpotential=DV, k=1.0)
        errs.append(abs(nm.evolve(init, cfg).final.a - math.exp(2.0)))
    slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(abs(s - 4) < 0.2 for s in slopes), slopes


def test_curved_de_sitter_round_trip():
    V, DV, init = _closed_desitter()
    cfg = nm.IntegrationConfig(h=1e-3, t_end=1.0, potential=V, dpotential=DV, k=1.0)
    s = nm.evolve(init, cfg)
    assert np.max(np.abs(s.a - np.exp(s.t)) / np.exp(s.t)) < 1e-6
    assert np.max(np.abs(s.constraint)) < 1e-7


def test_time_reversal():
    V, DV, init = _closed_desitter()
    fwd = nm.evolve(init, nm.IntegrationConfig(h=1e-3, t_end=1.0, potential=V, dpotential=DV, k=1.0))
    back = nm.evolve(fwd.final, nm.IntegrationConfig(h=1e-3, t_end=0.0, potential=V, dpotential=DV, k=1.0))
    end = back.final
    assert abs(end.t) < 1e-12
    for got, want in ((end.a, init.a), (end.H, init.H), (end.phi, init.phi), (end.dphi, init.dphi)):
        assert got == pytest.approx(want, abs=1e-7)


def test_initial_constraint_violation():
    with pytest.raises(nm.ConstraintViolation):
        nm.evolve(nm.EvolutionState(0.0, 1.0, 2.0, 0.0, 0.0), _desitter_cfg(1e-2, 1.0))


def test_blow_up_detected():
    # steep potential drives the residual past the monitor tolerance
    V = lambda p: math.exp(8 * p)
    DV = lambda p: 8 * math.exp(8 * p)
    H0 = nm.solve_H0(1.0, 0.0, 0.0, V)
    cfg = nm.IntegrationConfig(h=0.2, t_end=50.0, potential=V, dpotential=DV, constraint_tol=1e-9)
    with pytest.raises(nm.IntegrationError):
        nm.evolve(nm.EvolutionState(0.0, 1.0, H0, 0.0, 0.0), cfg)


def test_solve_H0():
    assert nm.solve_H0(1.0, 0.0, 0.0, _const(3 / (4 * math.pi))) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(nm.ConstraintViolation):
        nm.solve_H0(1.0, 0.0, 0.0, _const(0.0), k=1.0)


def test_csv_round_trip_and_stride():
    s = nm.evolve(nm.EvolutionState(0.0, 1.0, 1.0, 0.0, 0.0), _desitter_cfg(0.1, 1.0))
    text = s.to_csv(stride=3)
    assert text.splitlines()[0] == "t,a,H,phi,dphi,constraint_residual"
    back = nm.read_csv(text)
    assert list(back.t) == [s.t[i] for i in (0, 3, 6, 9, 10)]
    full = nm.read_csv(s.to_csv())
    assert np.array_equal(full.a, s.a)


@pytest.mark.parametrize(
    "f, x, order, exact",
    [
        (math.sin, 0.7, 1, math.cos(0.7)),
        (math.exp, 1.3, 2, math.exp(1.3)),
        (lambda x: x**3, 2.0, 2, 12.0),
    ],
)
def test_fd_derivative(f, x, order, exact):
    assert nm.fd_derivative(f, x, order) == pytest.approx(exact, rel=1e-6)


def test_residual_scan_de_sitter():
    system = reduce_to_friedmann(CosmoModel(units="geometric", fluid=False))
    k, w = 1.0, 1.0
    c = math.sqrt(k) / (2 * math.sqrt(math.pi))

    def bindings(t):
        return {
            "H": w,
            "Q": -0.5,
            "K": lambda s: k * math.exp(-2 * w * s),
            "phi": lambda s: -c * math.exp(-w * s) / w,
            "V": lambda s: 3 * w * w / (4 * math.pi) + k * math.exp(-2 * w * s) / (2 * math.pi),
            "DV": lambda s: 4 * w * w * (-c * math.exp(-w * s) / w),
        }

    report = nm.residual_scan(system, bindings, np.linspace(0.0, 1.0, 11))
    assert report.below(1e-5)
