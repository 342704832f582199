"""Sweep harness: thickness sweeps with convergence-order fits, Richardson
mesh-error control, thickness recovery, and deterministic CSV/SVG emission.

A sweep row compares the directly computed first transmission eigenvalue
against the expansion predictions at orders 0..2, carries the Max-Min
sandwich flag (lambda0 - tol <= lambda <= lambda_eroded + tol with tol three
times the Richardson mesh-error estimate), and a mesh-guard flag that admits
the row into order fits only when the estimated mesh error is at most a third
of the model error it would be fitted against.  Disks are swept with the
semi-analytic solver; general geometries run the coupled finite element
pencil on every mesh size in the list and Richardson-extrapolate.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bessel
from .asymptotics import compute_coefficients, geometry_hash
from .errors import BelowLambda0, ConfigError, InsufficientData
from .geometry import Circle, LayerConfig, curve_from_config
from .transmission import first_te

_VERSION = "thinspec-0.1.0"


@dataclass
class FitResult:
    slope: float
    intercept: float
    r2: float
    n_used: int
    note: str = ""


def fit_order(deltas, errors):
    """Least-squares slope of log(error) against log(delta).

    Zero error rows are dropped with a note; fewer than three surviving pairs
    raises InsufficientData.
    """
    deltas = np.asarray(deltas, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(deltas <= 0):
        raise InsufficientData("fit_order: thickness values must be positive")
    keep = errors > 0.0
    note = ""
    if not np.all(keep):
        note = f"dropped {int((~keep).sum())} zero-error row(s)"
    deltas = deltas[keep]
    errors = errors[keep]
    if len(deltas) < 3:
        raise InsufficientData(f"fit_order: need >= 3 positive pairs, have {len(deltas)}")
    x = np.log(deltas)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, len(deltas), note)


@dataclass
class ThicknessEstimate:
    first_order: float
    quadratic: float = None


def estimate_thickness(lam_measured, coeffs):
    """Recover the coating thickness from a measured first transmission
    eigenvalue and the expansion coefficients.

    The first-order estimate is (lam - lambda0)/lambda1; the quadratic
    refinement takes the smaller positive root of
    lambda2*d^2 + lambda1*d = lam - lambda0 when it is real.
    """
    gap = lam_measured - coeffs.lambda0
    if gap < 0:
        raise BelowLambda0(
            f"measured eigenvalue {lam_measured} below lambda0 {coeffs.lambda0}"
        )
    if gap == 0.0:
        return ThicknessEstimate(0.0, 0.0)
    if coeffs.lambda1 is None or coeffs.lambda1 <= 0:
        raise BelowLambda0("thickness recovery needs lambda1 > 0")
    first = gap / coeffs.lambda1
    quad = None
    lam2 = coeffs.lambda2
    if lam2 is None or lam2 == 0.0:
        quad = first
    else:
        disc = coeffs.lambda1**2 + 4.0 * lam2 * gap
        if disc >= 0.0:
            r1 = (-coeffs.lambda1 + math.sqrt(disc)) / (2.0 * lam2)
            r2 = (-coeffs.lambda1 - math.sqrt(disc)) / (2.0 * lam2)
            positive = sorted(r for r in (r1, r2) if r > 0)
            if positive:
                quad = positive[0]
    return ThicknessEstimate(first, quad)


def richardson(h_coarse, v_coarse, h_fine, v_fine, order=2):
    """Eliminate the leading O(h^order) error from two mesh levels.

    Returns (extrapolated value, error estimate of the extrapolated value,
    taken as its distance to the fine-level value)."""
    ratio = (h_coarse / h_fine) ** order
    extrap = v_fine + (v_fine - v_coarse) / (ratio - 1.0)
    return extrap, abs(extrap - v_fine)


@dataclass
class SweepRow:
    delta: float
    lambda_direct: float
    lambda_eroded: float
    pred0: float
    pred1: float
    pred2: float
    err0: float
    err1: float
    err2: float
    sandwich_ok: bool
    mesh_guard_ok: bool
    mesh_est: float = 0.0
    guard2_ok: bool = True


@dataclass
class SweepReport:
    rows: list
    fits: dict
    provenance: dict
    lambda0: float
    lambda1: float
    lambda2: float

    def sandwich_violations(self):
        return [r for r in self.rows if not r.sandwich_ok]

    def to_csv(self):
        lines = [f"# {k} {v}" for k, v in sorted(self.provenance.items())]
        lines.append(
            "delta,lambda_direct,lambda_dirichlet_eroded,pred0,pred1,pred2,"
            "err0,err1,err2,sandwich_ok,mesh_guard_ok"
        )
        for r in self.rows:
            vals = [r.delta, r.lambda_direct, r.lambda_eroded, r.pred0, r.pred1,
                    r.pred2, r.err0, r.err1, r.err2]
            lines.append(
                ",".join(f"{v:.17g}" for v in vals)
                + f",{int(r.sandwich_ok)},{int(r.mesh_guard_ok)}"
            )
        return "\n".join(lines) + "\n"

    def fits_csv(self):
        lines = ["order,slope,intercept,r2,n_used,note"]
        for order in sorted(self.fits):
            f = self.fits[order]
            if f is None:
                lines.append(f"{order},,,,0,insufficient data")
            else:
                lines.append(
                    f"{order},{f.slope:.17g},{f.intercept:.17g},{f.r2:.17g},"
                    f"{f.n_used},{f.note}"
                )
        return "\n".join(lines) + "\n"


def _rows_to_fits(rows):
    fits = {}
    for order in (0, 1, 2):
        if order <= 1:
            usable = [r for r in rows if r.mesh_guard_ok]
        else:
            usable = [r for r in rows if r.guard2_ok]
        try:
            fits[order] = fit_order(
                [r.delta for r in usable],
                [getattr(r, f"err{order}") for r in usable],
            )
        except InsufficientData:
            fits[order] = None
    return fits


def _sweep_disk(curve, deltas, g, n, sandwich_factor):
    if not isinstance(curve, Circle):
        raise ConfigError("semi-analytic sweep requires circle geometry")
    if callable(g) or float(g) != 1.0:
        raise ConfigError("semi-analytic sweep requires unit thickness profile")
    R = curve.radius
    coeffs = bessel.disk_asymptotic_coeffs(R)
    j01 = bessel.bessel_j_zero(0, 1)
    rows = []
    for delta in deltas:
        lam = bessel.disk_first_te(bessel.DiskProblem(R, delta, n))
        lam_eroded = (j01 / (R - delta)) ** 2
        pred0 = coeffs.lambda0
        pred1 = coeffs.lambda0 + delta * coeffs.lambda1
        pred2 = pred1 + delta * delta * coeffs.lambda2
        tol = sandwich_factor * 1e-9 * coeffs.lambda0  # root-refinement scale
        ok = (coeffs.lambda0 - tol <= lam) and (lam <= lam_eroded + tol)
        rows.append(SweepRow(
            delta=delta,
            lambda_direct=lam,
            lambda_eroded=lam_eroded,
            pred0=pred0, pred1=pred1, pred2=pred2,
            err0=abs(lam - pred0), err1=abs(lam - pred1), err2=abs(lam - pred2),
            sandwich_ok=bool(ok),
            mesh_guard_ok=True,
            mesh_est=0.0,
            guard2_ok=True,
        ))
    return rows, coeffs.lambda0, coeffs.lambda1, coeffs.lambda2


def _fem_row_worker(payload):
    """One (delta) row of a finite element sweep: direct eigenvalue and
    eroded Dirichlet value on every mesh size.  Top-level for pickling."""
    curve = curve_from_config(payload["curve"])
    out = {"delta": payload["delta"], "per_h": []}
    for h in payload["h_list"]:
        layer = LayerConfig(payload["delta"], payload["g_value"], payload["n"])
        te = first_te(curve, layer, h, steps=payload["steps"],
                      upper_slack=payload["upper_slack"])
        out["per_h"].append({
            "h": h,
            "lambda_direct": te.lam,
            "lambda_eroded": te.lambda_eroded,
            "lambda0": te.lambda0,
        })
    return out


def _sweep_fem(curve, deltas, g, n, h_list, steps, jobs, sandwich_factor,
               upper_slack):
    if h_list is None or len(h_list) < 2:
        raise ConfigError("finite element sweep needs at least two mesh sizes")
    # expansion coefficients per mesh size, then Richardson in h
    coeff_by_h = []
    for h in h_list:
        layer = LayerConfig(max(deltas), g, n)
        coeff_by_h.append(compute_coefficients(curve, layer, h))
    h_coarse, h_fine = h_list[-2], h_list[-1]
    c_coarse, c_fine = coeff_by_h[-2], coeff_by_h[-1]
    lam0, est0 = richardson(h_coarse, c_coarse.lambda0, h_fine, c_fine.lambda0)
    lam1, _ = richardson(h_coarse, c_coarse.lambda1, h_fine, c_fine.lambda1)
    lam2, _ = richardson(h_coarse, c_coarse.lambda2, h_fine, c_fine.lambda2)

    payloads = [{
        "curve": curve.describe(),
        "delta": delta,
        "h_list": list(h_list),
        "g_value": g if not callable(g) else 1.0,
        "n": n,
        "steps": steps,
        "upper_slack": upper_slack,
    } for delta in deltas]
    if callable(g):
        # callables cannot cross process boundaries; run rows in-process
        jobs = 1
        for p in payloads:
            p["g_value"] = g
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fem_row_worker, payloads))
    else:
        results = [_fem_row_worker(p) for p in payloads]

    rows = []
    for res in results:
        per_h = res["per_h"]
        delta = res["delta"]
        lam_c, lam_f = per_h[-2]["lambda_direct"], per_h[-1]["lambda_direct"]
        lam_direct, est_direct = richardson(h_coarse, lam_c, h_fine, lam_f)
        ero_c, ero_f = per_h[-2]["lambda_eroded"], per_h[-1]["lambda_eroded"]
        lam_eroded, est_eroded = richardson(h_coarse, ero_c, h_fine, ero_f)
        pred0, pred1 = lam0, lam0 + delta * lam1
        pred2 = pred1 + delta * delta * lam2
        err0 = abs(lam_direct - pred0)
        err1 = abs(lam_direct - pred1)
        err2 = abs(lam_direct - pred2)
        # same error measures on the finest single mesh, to estimate how much
        # mesh error survives in each modelled error
        err1_fine = abs(lam_f - (c_fine.lambda0 + delta * c_fine.lambda1))
        err2_fine = abs(lam_f - (c_fine.lambda0 + delta * c_fine.lambda1
                                 + delta * delta * c_fine.lambda2))
        guard1 = abs(err1_fine - err1) <= err1 / 3.0 if err1 > 0 else False
        guard2 = abs(err2_fine - err2) <= err2 / 3.0 if err2 > 0 else False
        mesh_est = max(est_direct, est_eroded, est0)
        tol = sandwich_factor * mesh_est
        ok = (lam0 - tol <= lam_direct) and (lam_direct <= lam_eroded + tol)
        rows.append(SweepRow(
            delta=delta,
            lambda_direct=lam_direct,
            lambda_eroded=lam_eroded,
            pred0=pred0, pred1=pred1, pred2=pred2,
            err0=err0, err1=err1, err2=err2,
            sandwich_ok=bool(ok),
            mesh_guard_ok=bool(guard1),
            mesh_est=mesh_est,
            guard2_ok=bool(guard2),
        ))
    return rows, lam0, lam1, lam2


def run_sweep(curve, deltas, g, n, h_list=None, solver="auto", steps=64,
              jobs=1, sandwich_factor=3.0, upper_slack=5e-3):
    """Sweep coating thicknesses and fit the convergence orders.

    solver 'bessel' uses the semi-analytic disk determinant (circle geometry
    only), 'fem' the coupled pencil on every mesh size in h_list with
    Richardson extrapolation, 'auto' picks by geometry.
    """
    deltas = [float(d) for d in deltas]
    if solver == "auto":
        solver = "bessel" if isinstance(curve, Circle) and not callable(g) and float(g) == 1.0 else "fem"
    if solver == "bessel":
        rows, lam0, lam1, lam2 = _sweep_disk(curve, deltas, g, n, sandwich_factor)
    elif solver == "fem":
        rows, lam0, lam1, lam2 = _sweep_fem(
            curve, deltas, g, n, h_list, steps, jobs, sandwich_factor, upper_slack
        )
    else:
        raise ConfigError(f"unknown solver {solver!r}", field="solver")
    fits = _rows_to_fits(rows)
    provenance = {
        "geometry": geometry_hash(curve),
        "solver": solver,
        "h_list": "none" if h_list is None else ";".join(f"{h:g}" for h in h_list),
        "n": f"{n:g}",
        "version": _VERSION,
    }
    return SweepReport(rows=rows, fits=fits, provenance=provenance,
                       lambda0=lam0, lambda1=lam1, lambda2=lam2)


# ---------------------------------------------------------------------------
# deterministic file emission
# ---------------------------------------------------------------------------

def write_atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def svg_loglog(series, path=None, width=640, height=480, title=""):
    """Minimal hand-emitted log-log chart.

    series: list of (label, deltas, errors, fit or None).  Returns the SVG
    text; writes it when a path is given.
    """
    pts_all = [(d, e) for _, ds, es, _ in series for d, e in zip(ds, es) if e > 0]
    if not pts_all:
        raise InsufficientData("svg_loglog: nothing to plot")
    lx = [math.log10(d) for d, _ in pts_all]
    ly = [math.log10(e) for _, e in pts_all]
    x0, x1 = min(lx) - 0.15, max(lx) + 0.15
    y0, y1 = min(ly) - 0.3, max(ly) + 0.3
    mleft, mright, mtop, mbot = 60, 20, 30, 45

    def sx(v):
        return mleft + (v - x0) / (x1 - x0) * (width - mleft - mright)

    def sy(v):
        return height - mbot - (v - y0) / (y1 - y0) * (height - mbot - mtop)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{mleft}" y1="{height-mbot}" x2="{width-mright}" y2="{height-mbot}" stroke="black"/>',
        f'<line x1="{mleft}" y1="{mtop}" x2="{mleft}" y2="{height-mbot}" stroke="black"/>',
    ]
    for px in range(math.ceil(x0), math.floor(x1) + 1):
        out.append(
            f'<line x1="{sx(px):.1f}" y1="{height-mbot}" x2="{sx(px):.1f}" y2="{mtop}" stroke="#ddd"/>'
            f'<text x="{sx(px):.1f}" y="{height-mbot+16}" text-anchor="middle" font-size="11">1e{px}</text>'
        )
    for py in range(math.ceil(y0), math.floor(y1) + 1):
        out.append(
            f'<line x1="{mleft}" y1="{sy(py):.1f}" x2="{width-mright}" y2="{sy(py):.1f}" stroke="#ddd"/>'
            f'<text x="{mleft-6}" y="{sy(py)+4:.1f}" text-anchor="end" font-size="11">1e{py}</text>'
        )
    for i, (label, ds, es, fit) in enumerate(series):
        color = colors[i % len(colors)]
        for d, e in zip(ds, es):
            if e > 0:
                out.append(
                    f'<circle cx="{sx(math.log10(d)):.1f}" cy="{sy(math.log10(e)):.1f}" r="3.5" fill="{color}"/>'
                )
        if fit is not None:
            xs = [min(math.log10(d) for d in ds), max(math.log10(d) for d in ds)]
            ln10 = math.log(10.0)
            ys = [(fit.slope * x * ln10 + fit.intercept) / ln10 for x in xs]
            out.append(
                f'<line x1="{sx(xs[0]):.1f}" y1="{sy(ys[0]):.1f}" x2="{sx(xs[1]):.1f}" '
                f'y2="{sy(ys[1]):.1f}" stroke="{color}" stroke-dasharray="5,3"/>'
            )
        out.append(
            f'<text x="{width-mright-6}" y="{mtop+16*(i+1)}" text-anchor="end" '
            f'font-size="11" fill="{color}">{label}'
            + (f" (slope {fit.slope:.2f})" if fit is not None else "")
            + "</text>"
        )
    out.append(
        f'<text x="{width/2:.0f}" y="{height-10}" text-anchor="middle" font-size="12">coating thickness</text>'
    )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        write_atomic(path, text)
    return text


def sweep_svg(report, path=None):
    series = []
    for order in (0, 1, 2):
        ds = [r.delta for r in report.rows]
        es = [getattr(r, f"err{order}") for r in report.rows]
        series.append((f"order {order} error", ds, es, report.fits.get(order)))
    return svg_loglog(series, path=path, title="expansion error against coating thickness")
