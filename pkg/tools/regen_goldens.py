#!/usr/bin/env python3
"""Regenerate the unit-disk golden values used by the regression tests.

The second-order coefficient comes from the radial corrector solved at two
resolutions; the script refuses to write the fixture unless the two agree to
1e-8, so a stale or broken solver cannot silently refresh the goldens.

Usage: python tools/regen_goldens.py [output-path]
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from thinspec import bessel  # noqa: E402


def main(out_path):
    j01 = bessel.bessel_j_zero(0, 1)
    j01_rec = bessel.bessel_j_zero(0, 1, method="recurrence")
    assert abs(j01 - j01_rec) < 1e-12, "zero-finding routes disagree"
    j11 = bessel.bessel_j_zero(1, 1)

    coarse = bessel.disk_asymptotic_coeffs(1.0, nodes=2000)
    fine = bessel.disk_asymptotic_coeffs(1.0, nodes=4000)
    drift = abs(coarse.lambda2 - fine.lambda2)
    assert drift <= 1e-8, f"resolutions disagree on lambda2 by {drift:.3e}"
    flux_drift = abs(coarse.flux1 - fine.flux1)
    assert flux_drift <= 1e-8, f"resolutions disagree on flux1 by {flux_drift:.3e}"

    lines = [
        "# unit-disk golden values (15 significant digits)",
        "# regenerate with: python tools/regen_goldens.py",
        f"j01 {j01:.15g}",
        f"j11 {j11:.15g}",
        f"lambda0 {fine.lambda0:.15g}",
        f"lambda1 {fine.lambda1:.15g}",
        f"lambda2 {fine.lambda2:.15g}",
        f"flux0 {fine.flux0:.15g}",
        f"flux1 {fine.flux1:.15g}",
    ]
    Path(out_path).write_text("\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    print(f"  lambda2 resolution drift {drift:.2e}, flux1 drift {flux_drift:.2e}")
    print(f"  lambda2 = {fine.lambda2:.15g} (3*lambda0 = {3 * fine.lambda0:.15g})")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(
        Path(__file__).resolve().parents[1] / "tests" / "goldens" / "unit_disk.txt"
    )
    main(out)
