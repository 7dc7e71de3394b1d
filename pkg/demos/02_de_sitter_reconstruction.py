"""Reverse technology: prescribe de Sitter expansion R = exp(w t) and recover
the scalar-field potential that produces it.

Run:  python3 demos/02_de_sitter_reconstruction.py
"""

import sympy as sp

from frwcosmo import reverse
from frwcosmo.expr import T, symbol, to_text

w, k = symbol("w"), symbol("k")

# Ecunr1 and Ecunr2 are linear in V and dphi^2; solving them gives the two
# general formulas in terms of H, H' and K.
V_gen, kin_gen = reverse.potential_formulas()
print("V      =", to_text(V_gen))
print("dphi^2 =", to_text(kin_gen))

history = reverse.ExpansionHistory(scale_factor=sp.exp(w * T), k=k)
rec = reverse.reconstruct(history)
print("\nclosed-form reconstruction:")
for name, e in rec.expressions().items():
    print(f"  {name:8s} = {to_text(e)}")

# Note the constant term of V(phi): it is 3 w^2/(4 pi), the same constant that
# appears in V(t), as it must be after substituting phi(t).

report = reverse.verify_consistency(rec, history)
print("\nresiduals after substitution:")
for name, check in report.residuals.items():
    print(f"  {name:8s} zero={check.zero} ({check.path})")
print("DV from the Klein-Gordon equation:", to_text(report.dv_from_kg))
print("agrees with DV(phi(t)):", report.dv_consistent)

# The other branch of the square root mirrors the field but not the potential.
minus = reverse.reconstruct(history, branch=-1)
print("\nbranch -1 field:", to_text(minus.phi_t))
print("branch -1 V(phi):", to_text(minus.V_phi))

# Contracting open universes cannot be driven by a real scalar field.
try:
    reverse.reconstruct(reverse.ExpansionHistory(scale_factor="R0*exp(-w*t)", k=-1))
except reverse.NegativeKineticError as exc:
    print("\ncontracting, k = -1:", exc)
