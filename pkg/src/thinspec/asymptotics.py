"""Thickness expansion of the first transmission eigenvalue on general
smooth domains.

The expansion lambda(delta) ~ lambda0 + delta*lambda1 + delta^2*lambda2 is
assembled from finite element building blocks: lambda0 and its eigenfunction
from a Dirichlet eigensolve, lambda1 as the boundary quadrature of
g * (dv0/dnu)^2, the corrector field v1 from a constrained source solve whose
solvability condition is exactly the lambda1 quadrature, and lambda2 as

    lambda2 = oint ( kappa/2 * g^2 * dv0/dnu + g * dv1/dnu ) * dv0/dnu ds

under this package's convex-positive curvature convention.  Boundary traces
are carried as periodic arclength tables with linear interpolation; curve
quantities (kappa, g) are evaluated exactly at the quadrature points.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NearDegenerate
from .fem import (
    FemField,
    assemble,
    boundary_flux,
    dirichlet_eigs,
    mass_norm,
    solve_constrained_source,
)
from .mesh import generate_mesh

_GAUSS3_NODES = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GAUSS3_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def geometry_hash(curve, layer=None, h=None):
    """Stable short hash of the geometry/coating/resolution description."""
    payload = {"curve": curve.describe()}
    if layer is not None:
        payload["layer"] = layer.describe()
    if h is not None:
        payload["h"] = h
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def periodic_interp(s_table, values, period):
    """Periodic linear interpolant of a boundary-vertex trace table."""
    s_ext = np.concatenate([s_table, [s_table[0] + period]])
    v_ext = np.concatenate([values, [values[0]]])

    def interp(s):
        return np.interp(np.asarray(s, dtype=float) % period, s_ext, v_ext)

    return interp


def _boundary_segments(mesh):
    s = np.asarray(mesh.outer_s, dtype=float)
    period = mesh.curve.s0
    s_next = np.concatenate([s[1:], [s[0] + period]])
    return s, s_next, period


def boundary_quadrature(mesh, integrand):
    """Integrate integrand(s) over the outer boundary with 3-point Gauss per
    vertex segment, in exact arclength."""
    s, s_next, _ = _boundary_segments(mesh)
    half = 0.5 * (s_next - s)
    mid = 0.5 * (s_next + s)
    pts = mid[:, None] + half[:, None] * _GAUSS3_NODES
    vals = integrand(pts)
    return float((half[:, None] * _GAUSS3_WEIGHTS * vals).sum())


@dataclass
class AsymptoticCoefficients:
    """Expansion coefficients with the fields and traces that produced them.

    Built incrementally: compute_lambda0 fills the leading eigenpair, then
    compute_lambda1 / compute_v1 / compute_lambda2 complete the record.
    """

    lambda0: float = None
    lambda1: float = None
    lambda2: float = None
    v0: FemField = None
    v1: FemField = None
    flux0: np.ndarray = None
    flux1: np.ndarray = None
    h: float = None
    geometry_hash: str = ""
    multiplier: float = None
    mesh: object = field(default=None, repr=False)
    K: object = field(default=None, repr=False)
    M: object = field(default=None, repr=False)


def compute_lambda0(curve, h, mesh=None, gap_tol=1e-6):
    """Leading Dirichlet eigenpair on the domain bounded by `curve`.

    Returns an AsymptoticCoefficients seeded with lambda0, the normalized
    sign-fixed eigenfunction, and its inward-normal boundary trace.  Raises
    NearDegenerate when the gap to the second eigenvalue is below
    gap_tol * lambda0 (the construction of the higher coefficients assumes a
    simple leading eigenvalue).
    """
    if mesh is None:
        mesh = generate_mesh(curve, None, h)
    K = assemble(mesh, "stiffness")
    M = assemble(mesh, "mass")
    lams, vecs = dirichlet_eigs(K, M, mesh.outer, 2, mesh=mesh)
    if lams[1] - lams[0] <= gap_tol * lams[0]:
        raise NearDegenerate(
            f"leading eigenvalue not simple: gap {lams[1] - lams[0]:.3e}"
        )
    v0 = vecs[:, 0] / mass_norm(M, vecs[:, 0])
    v0_field = FemField(mesh, v0, constrained=mesh.outer)
    flux0 = boundary_flux(mesh, v0_field, lams[0], K=K, M=M)
    return AsymptoticCoefficients(
        lambda0=float(lams[0]),
        v0=v0_field,
        flux0=flux0,
        h=mesh.h,
        geometry_hash=geometry_hash(curve, h=h) if curve is not None else "unkeyed",
        mesh=mesh,
        K=K,
        M=M,
    )


def compute_lambda1(coeffs, layer):
    """First-order coefficient: boundary quadrature of g * flux0^2."""
    mesh = coeffs.mesh
    f0 = periodic_interp(mesh.outer_s, coeffs.flux0, mesh.curve.s0)

    def integrand(s):
        return layer.g_at(s) * f0(s) ** 2

    lam1 = boundary_quadrature(mesh, integrand)
    coeffs.lambda1 = lam1
    return lam1


def compute_v1(coeffs, layer):
    """Corrector field of the expansion and its boundary trace.

    Solves (Laplacian + lambda0) v1 = -lambda1 v0 with essential data
    -g * dv0/dnu on the boundary, v1 orthogonal to v0.  lambda1 must already
    be the quadrature value: it is the solvability condition of this system,
    and the returned multiplier records the residual defect.
    """
    if coeffs.lambda1 is None:
        raise DomainError("compute_v1: lambda1 must be computed first")
    mesh = coeffs.mesh
    g_b = layer.g_at(mesh.outer_s)
    data = -np.asarray(g_b) * coeffs.flux0
    rhs = FemField(mesh, -coeffs.lambda1 * coeffs.v0.values)
    v1, mu = solve_constrained_source(
        coeffs.K, coeffs.M, coeffs.lambda0, rhs, data, coeffs.v0, mesh.outer
    )
    flux1 = boundary_flux(mesh, v1, coeffs.lambda0, rhs=rhs, K=coeffs.K, M=coeffs.M)
    coeffs.v1 = v1
    coeffs.flux1 = flux1
    coeffs.multiplier = mu
    return v1, flux1


def compute_lambda2(coeffs, layer, curve=None):
    """Second-order coefficient from the recovered traces and curvature."""
    if coeffs.flux1 is None:
        raise DomainError("compute_lambda2: corrector trace missing")
    mesh = coeffs.mesh
    curve = curve if curve is not None else mesh.curve
    f0 = periodic_interp(mesh.outer_s, coeffs.flux0, curve.s0)
    f1 = periodic_interp(mesh.outer_s, coeffs.flux1, curve.s0)

    def integrand(s):
        g = layer.g_at(s)
        kap = curve.curvature(s)
        return (0.5 * kap * g**2 * f0(s) + g * f1(s)) * f0(s)

    lam2 = boundary_quadrature(mesh, integrand)
    coeffs.lambda2 = lam2
    return lam2


def compute_coefficients(curve, layer, h, mesh=None):
    """Full expansion pipeline for one (curve, layer, h) triple."""
    coeffs = compute_lambda0(curve, h, mesh=mesh)
    coeffs.geometry_hash = geometry_hash(curve, layer, h)
    compute_lambda1(coeffs, layer)
    compute_v1(coeffs, layer)
    compute_lambda2(coeffs, layer)
    return coeffs


def evaluate_expansion(coeffs, delta0, order=2):
    """Predicted eigenvalue lambda0 + delta0*lambda1 (+ delta0^2*lambda2)."""
    if order not in (0, 1, 2):
        raise DomainError(f"expansion order must be 0, 1 or 2, got {order}")
    out = coeffs.lambda0
    if order >= 1:
        if coeffs.lambda1 is None:
            raise DomainError("expansion order 1 requested but lambda1 missing")
        out = out + delta0 * coeffs.lambda1
    if order == 2:
        if coeffs.lambda2 is None:
            raise DomainError("expansion order 2 requested but lambda2 missing")
        out = out + delta0 * delta0 * coeffs.lambda2
    return out


@dataclass
class LayerProfile:
    """Stretched-coordinate correction profiles across the coating.

    Defined on {(s, xi): 0 <= xi <= g(s)}; both profiles vanish identically
    on the inner edge xi = g(s), and the first one equals the corrector trace
    -g * dv0/dnu at xi = 0.

    Higher orders are not implemented, but the recursion that produces them
    is mechanical: each new profile solves a second-derivative-in-xi equation
    whose right side collects curvature-weighted derivatives of the earlier
    profiles, with zero value on the inner edge and its xi-slope at xi = 0
    matched to the normal trace of the previous interior corrector; each new
    interior corrector then solves the shifted Helmholtz problem driven by
    the accumulated coefficient-weighted correctors, takes its boundary value
    from the new profile at xi = 0, and is pinned orthogonal to the ground
    mode, which fixes the next expansion coefficient exactly as compute_v1 /
    compute_lambda2 do at this order.
    """

    curve: object
    layer: object
    flux0_of: object
    flux1_of: object

    def w1(self, s, xi):
        return self.flux0_of(s) * (np.asarray(xi, dtype=float) - self.layer.g_at(s))

    def w2(self, s, xi):
        xi = np.asarray(xi, dtype=float)
        g = self.layer.g_at(s)
        kap = self.curve.curvature(s)
        f0 = self.flux0_of(s)
        f1 = self.flux1_of(s)
        return 0.5 * kap * f0 * xi**2 + f1 * xi - 0.5 * kap * f0 * g**2 - f1 * g

    def w2_xi(self, s, xi):
        """Transverse derivative of the second profile."""
        return self.curve.curvature(s) * self.flux0_of(s) * np.asarray(xi, dtype=float) + self.flux1_of(s)


def layer_profiles(coeffs, layer, curve=None):
    mesh = coeffs.mesh
    curve = curve if curve is not None else mesh.curve
    if coeffs.flux1 is None:
        raise DomainError("layer_profiles: corrector trace missing")
    f0 = periodic_interp(mesh.outer_s, coeffs.flux0, curve.s0)
    f1 = periodic_interp(mesh.outer_s, coeffs.flux1, curve.s0)
    return LayerProfile(curve, layer, f0, f1)


def format_coefficients(coeffs):
    """15-significant-digit text record keyed by the geometry hash."""
    lines = [
        f"geometry {coeffs.geometry_hash}",
        f"h {coeffs.h:.15g}",
        f"lambda0 {coeffs.lambda0:.15g}",
    ]
    if coeffs.lambda1 is not None:
        lines.append(f"lambda1 {coeffs.lambda1:.15g}")
    if coeffs.lambda2 is not None:
        lines.append(f"lambda2 {coeffs.lambda2:.15g}")
    return "\n".join(lines) + "\n"


def parse_coefficients(text):
    out = {}
    for raw in text.splitlines():
        parts = raw.split()
        if len(parts) != 2:
            continue
        key, val = parts
        out[key] = val if key == "geometry" else float(val)
    return out
