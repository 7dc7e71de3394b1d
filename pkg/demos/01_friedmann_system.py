"""Derive the Friedmann system for an FRW universe filled with a scalar field
and a perfect fluid, starting from nothing but the line element.

Run:  python3 demos/01_friedmann_system.py
"""

from frwcosmo import cosmo, tensor
from frwcosmo.expr import is_zero, to_text

# The metric carries an opaque scale factor R(t), curvature k and light speed c.
g = tensor.frw_metric()
print("metric diagonal:")
for i, coord in enumerate(g.coords):
    print(f"  g[{coord},{coord}] = {to_text(g[i, i])}")

# Curvature comes first; the Bianchi identity is a free self-test of it.
G = tensor.einstein_tensor(g)
div = tensor.covariant_divergence(G, g)
print("\nBianchi identity holds:", div.is_zero())
print("G_tt =", to_text(G[0, 0]))

# The scalar field's stress tensor written directly and as an effective
# perfect fluid agree component by component.
model = cosmo.CosmoModel()
T1 = cosmo.stress_energy_scalar_direct(model)
TT1 = cosmo.stress_energy_scalar_fluid(model)
print("T1 == TT1:", (T1 - TT1).is_zero())

# Reduce the field equations: curvature through K = k/R^2, R' through H R,
# R'' through the deceleration factor Q.
system = cosmo.reduce_to_friedmann(model)
print("\nFriedmann system (each residual = 0):")
for name, e in system.items():
    print(f"  {name:8s} {to_text(e)}")

# Switching on a cosmological constant adds a single -lambda c^2 term.
lam = cosmo.reduce_to_friedmann(cosmo.CosmoModel(fluid=False, lam=cosmo.symbol("lambda")))
plain = cosmo.reduce_to_friedmann(cosmo.CosmoModel(fluid=False))
print("\nEcunr1 with lambda minus without:", to_text(lam.Ecunr1 - plain.Ecunr1))
print("off-diagonal field equations vanish:",
      all(is_zero(c) for (i, j), c in cosmo.einstein_equations(model).items() if i != j))
