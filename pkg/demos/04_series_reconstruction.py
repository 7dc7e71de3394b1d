"""When phi(t) has no closed form the pipeline falls back to Taylor series
about t0.  Accuracy is limited by the series order, not by the algebra.

Run:  python3 demos/04_series_reconstruction.py
"""

from frwcosmo import reverse
from frwcosmo.expr import to_text

for text, k in (("exp(t^2/20)", 1), ("exp(t^2/2)", 2)):
    history = reverse.ExpansionHistory(scale_factor=text, k=k)
    print(f"R(t) = {text}, k = {k}")
    for order in (2, 4, 6):
        rec = reverse.reconstruct(history, order=order)
        report = reverse.verify_consistency(rec, history)
        worst = max([c.max_abs for c in report.residuals.values()] + [report.dv_max_abs])
        print(f"  order {order}: max residual on |t| <= 0.1 = {worst:.2e}  ok={report.ok}")
    print("  V(phi) at order 4:", to_text(reverse.reconstruct(history, order=4).V_phi))
    print()

# The steeper history needs order 6 to get below 1e-6 on the same window:
# the neglected (t - t0)^5 terms of the field velocity scale with the
# curvature of ln R.
