"""Thickness sweeps, convergence-order fits, and thickness recovery.

A sweep compares the direct eigenvalue against the expansion at orders 0..2
for a decreasing list of coating thicknesses, fits the error slopes on
log-log axes, and emits deterministic CSV plus a hand-rolled SVG chart.
Inverting the expansion then recovers the thickness from a single measured
eigenvalue, the practical use of the whole machinery.
"""

from thinspec import bessel
from thinspec.geometry import Circle
from thinspec.report import estimate_thickness, run_sweep, sweep_svg, write_atomic

print("== disk sweep (semi-analytic) ==")
report = run_sweep(Circle(1.0), [0.04, 0.02, 0.01, 0.005], 1.0, 0.48,
                   solver="bessel")
print(f"{'delta':>8} {'err0':>12} {'err1':>12} {'err2':>12} sandwich")
for row in report.rows:
    print(f"{row.delta:8.3f} {row.err0:12.3e} {row.err1:12.3e} {row.err2:12.3e} "
          f"{'ok' if row.sandwich_ok else 'VIOLATED'}")
for order in (0, 1, 2):
    fit = report.fits[order]
    print(f"order-{order} error slope: {fit.slope:.3f} (r^2 = {fit.r2:.5f})")
write_atomic("sweep_disk.csv", report.to_csv())
sweep_svg(report, path="sweep_disk.svg")
print("wrote sweep_disk.csv and sweep_disk.svg")

print("\n== recovering the coating thickness ==")
coeffs = bessel.disk_asymptotic_coeffs(1.0)
true_delta = 0.01
lam = bessel.disk_first_te(bessel.DiskProblem(1.0, true_delta, 0.48))
est = estimate_thickness(lam, coeffs)
print(f"measured eigenvalue {lam:.8f} at true thickness {true_delta}")
print(f"first-order estimate: {est.first_order:.6f} "
      f"({abs(est.first_order - true_delta) / true_delta * 100:.2f}% off)")
print(f"quadratic refinement: {est.quadratic:.6f} "
      f"({abs(est.quadratic - true_delta) / true_delta * 100:.3f}% off)")

print("\nThe same sweep runs on general geometries through the coupled")
print("finite element solver; see the command line:")
print("  thinspec sweep --config demos/config_ellipse_sweep.json --out out/")
