"""Smooth closed boundary curves, coating descriptions, and tube coordinates.

Curves are arclength-parameterized at construction (adaptive composite
Gauss quadrature of the parametric speed) and orientation-normalized to run
counterclockwise, so the signed curvature of a convex domain is positive and
the unit circle has curvature exactly +1.  With the inward unit normal nu and
unit tangent tau this fixes the frame convention used around the package:

    d tau / ds = +kappa(s) * nu(s),      d nu / ds = -kappa(s) * tau(s).

The tube map carries (s, eta) to x(s) + eta*nu(s); offsets of the boundary by
a coating thickness delta0*g(s) stay inside the curvature reach
eta0 = inf_s 1/|kappa(s)| or are rejected.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, InversionFailed, OffsetTooDeep

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_quad(fun, a, b):
    """Composite 8-point Gauss value of fun over [a, b] (vectorized in b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[..., None] + half[..., None] * _GL_NODES
    vals = fun(nodes)
    return half * (vals * _GL_WEIGHTS).sum(axis=-1)


class BoundaryCurve:
    """Closed C^2 curve queried by arclength.

    Subclasses provide the parametric generator (_xy, _d1, _d2 and, when
    available, _d3 over one period of the raw parameter); this base class owns
    arclength reparameterization, orientation normalization, and the
    arclength-domain queries position / tangent / inward_normal / curvature.
    """

    kind = "generic"

    def __init__(self, t_period, panels=2048):
        self._T = float(t_period)
        self._flip = False
        if self._signed_area() < 0.0:
            self._flip = True
        tg = np.linspace(0.0, self._T, panels + 1)
        seg = _panel_quad(self._speed, tg[:-1], tg[1:])
        self._t_nodes = tg
        self._s_nodes = np.concatenate([[0.0], np.cumsum(seg)])
        self.s0 = float(self._s_nodes[-1])

    # -- generator interface (raw parameter t) ------------------------------
    def _xy(self, t):
        raise NotImplementedError

    def _d1(self, t):
        raise NotImplementedError

    def _d2(self, t):
        raise NotImplementedError

    def _d3(self, t):
        raise NotImplementedError

    # -- raw-parameter helpers ----------------------------------------------
    def _g_xy(self, t):
        return self._xy(self._T - t) if self._flip else self._xy(t)

    def _g_d1(self, t):
        return -self._d1(self._T - t) if self._flip else self._d1(t)

    def _g_d2(self, t):
        return self._d2(self._T - t) if self._flip else self._d2(t)

    def _g_d3(self, t):
        return -self._d3(self._T - t) if self._flip else self._d3(t)

    def _speed(self, t):
        d = self._g_d1(np.asarray(t))
        return np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2)

    def _signed_area(self):
        def integrand(t):
            p = self._xy(np.asarray(t))
            d = self._d1(np.asarray(t))
            return 0.5 * (p[..., 0] * d[..., 1] - p[..., 1] * d[..., 0])

        tg = np.linspace(0.0, self._T, 513)
        return float(np.sum(_panel_quad(integrand, tg[:-1], tg[1:])))

    def _s_of_t(self, t):
        k = np.clip(np.searchsorted(self._t_nodes, t, side="right") - 1, 0,
                    len(self._t_nodes) - 2)
        return self._s_nodes[k] + _panel_quad(self._speed, self._t_nodes[k], t)

    def _t_of_s(self, s):
        s = np.asarray(s, dtype=float) % self.s0
        t = np.interp(s, self._s_nodes, self._t_nodes)
        for _ in range(6):
            resid = self._s_of_t(t) - s
            t = t - resid / self._speed(t)
            if np.max(np.abs(resid)) < 1e-14 * max(self.s0, 1.0):
                break
        return t

    # -- arclength-domain queries -------------------------------------------
    def position(self, s):
        return self._g_xy(self._t_of_s(s))

    def tangent(self, s):
        d = self._g_d1(self._t_of_s(s))
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def inward_normal(self, s):
        tau = self.tangent(s)
        return np.stack([-tau[..., 1], tau[..., 0]], axis=-1)

    def curvature(self, s):
        t = self._t_of_s(s)
        d1 = self._g_d1(t)
        d2 = self._g_d2(t)
        speed2 = d1[..., 0] ** 2 + d1[..., 1] ** 2
        num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        return num / speed2**1.5

    def curvature_derivative(self, s):
        """d kappa / ds, used when building offsets of this curve."""
        t = self._t_of_s(s)
        d1 = self._g_d1(t)
        d2 = self._g_d2(t)
        d3 = self._g_d3(t)
        sp2 = d1[..., 0] ** 2 + d1[..., 1] ** 2
        num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        dnum = d1[..., 0] * d3[..., 1] - d1[..., 1] * d3[..., 0]
        ddot = d1[..., 0] * d2[..., 0] + d1[..., 1] * d2[..., 1]
        dkap_dt = (dnum - 3.0 * num * ddot / sp2) / sp2**1.5
        return dkap_dt / np.sqrt(sp2)

    def reach(self, samples=4096):
        """eta0 = inf_s 1/|kappa(s)| over a dense arclength sample."""
        s = np.linspace(0.0, self.s0, samples, endpoint=False)
        kmax = np.max(np.abs(self.curvature(s)))
        return math.inf if kmax == 0.0 else 1.0 / kmax

    def describe(self):
        """Canonical parameter dict, used for geometry hashing."""
        return {"kind": self.kind}


class Circle(BoundaryCurve):
    """Circle of radius R about the origin; all queries exact closed forms."""

    kind = "circle"

    def __init__(self, radius):
        if radius <= 0:
            raise DomainError("Circle: radius must be positive")
        self.radius = float(radius)
        self.s0 = 2.0 * math.pi * self.radius

    def position(self, s):
        th = np.asarray(s, dtype=float) / self.radius
        return self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def tangent(self, s):
        th = np.asarray(s, dtype=float) / self.radius
        return np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def inward_normal(self, s):
        th = np.asarray(s, dtype=float) / self.radius
        return -np.stack([np.cos(th), np.sin(th)], axis=-1)

    def curvature(self, s):
        return np.full(np.shape(np.asarray(s, dtype=float)), 1.0 / self.radius)[()]

    def curvature_derivative(self, s):
        return np.zeros(np.shape(np.asarray(s, dtype=float)))[()]

    def reach(self, samples=0):
        return self.radius

    def describe(self):
        return {"kind": "circle", "radius": self.radius}


class Ellipse(BoundaryCurve):
    """Axis-aligned ellipse with semi-axes a (x) and b (y)."""

    kind = "ellipse"

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise DomainError("Ellipse: semi-axes must be positive")
        self.a = float(a)
        self.b = float(b)
        super().__init__(2.0 * math.pi)

    def _xy(self, t):
        return np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def _d1(self, t):
        return np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)

    def _d2(self, t):
        return np.stack([-self.a * np.cos(t), -self.b * np.sin(t)], axis=-1)

    def _d3(self, t):
        return np.stack([self.a * np.sin(t), -self.b * np.cos(t)], axis=-1)

    def describe(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


class FourierCurve(BoundaryCurve):
    """Perturbed circle r(theta) = 1 + sum_m modes[m-1]*cos(m*theta)."""

    kind = "fourier"

    def __init__(self, modes):
        self.modes = [float(c) for c in modes]
        if 1.0 - sum(abs(c) for c in self.modes) <= 0.0:
            raise DomainError("FourierCurve: radius perturbation reaches zero")
        super().__init__(2.0 * math.pi)

    def _radius(self, t, order):
        r = np.ones_like(t) if order == 0 else np.zeros_like(t)
        for m, c in enumerate(self.modes, start=1):
            ph = m * t
            if order == 0:
                r = r + c * np.cos(ph)
            elif order == 1:
                r = r - c * m * np.sin(ph)
            elif order == 2:
                r = r - c * m * m * np.cos(ph)
            else:
                r = r + c * m**3 * np.sin(ph)
        return r

    def _xy(self, t):
        t = np.asarray(t, dtype=float)
        r = self._radius(t, 0)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    def _d1(self, t):
        t = np.asarray(t, dtype=float)
        r, r1 = self._radius(t, 0), self._radius(t, 1)
        c, s = np.cos(t), np.sin(t)
        return np.stack([r1 * c - r * s, r1 * s + r * c], axis=-1)

    def _d2(self, t):
        t = np.asarray(t, dtype=float)
        r, r1, r2 = (self._radius(t, k) for k in (0, 1, 2))
        c, s = np.cos(t), np.sin(t)
        return np.stack(
            [(r2 - r) * c - 2 * r1 * s, (r2 - r) * s + 2 * r1 * c], axis=-1
        )

    def _d3(self, t):
        t = np.asarray(t, dtype=float)
        r, r1, r2, r3 = (self._radius(t, k) for k in (0, 1, 2, 3))
        c, s = np.cos(t), np.sin(t)
        return np.stack(
            [(r3 - 3 * r1) * c - (3 * r2 - r) * s,
             (r3 - 3 * r1) * s + (3 * r2 - r) * c],
            axis=-1,
        )

    def describe(self):
        return {"kind": "fourier", "modes": self.modes}


# ---------------------------------------------------------------------------
# coating description
# ---------------------------------------------------------------------------

@dataclass
class LayerConfig:
    """Coating of base thickness delta0 with profile g(s) and index n.

    g is a strictly positive constant or callable of arclength; n is a
    constant in (0, 1) or a callable of position (bounds must then be given
    as n_bounds and still lie in (0, 1)).
    """

    delta0: float
    g: object = 1.0
    n: object = 0.5
    n_bounds: tuple = None

    def __post_init__(self):
        if self.delta0 <= 0:
            raise DomainError("LayerConfig: delta0 must be positive")
        if callable(self.n):
            if self.n_bounds is None:
                raise DomainError("LayerConfig: callable index needs n_bounds")
            lo, hi = self.n_bounds
        else:
            lo = hi = float(self.n)
        if not (0.0 < lo <= hi < 1.0):
            raise DomainError("LayerConfig: index must satisfy 0 < n < 1")
        self.n_lower = float(lo)
        self.n_upper = float(hi)
        # g == 0 is admitted as the degenerate no-coating limit; geometric
        # operations that need actual depth (offsets, meshes) reject it there
        if not callable(self.g) and float(self.g) < 0.0:
            raise DomainError("LayerConfig: thickness profile must be non-negative")

    @property
    def g_is_constant(self):
        return not callable(self.g)

    def g_at(self, s):
        if callable(self.g):
            return np.asarray(self.g(np.asarray(s, dtype=float)), dtype=float)
        return np.full(np.shape(np.asarray(s, dtype=float)), float(self.g))[()]

    def n_at(self, x, y):
        if callable(self.n):
            return np.asarray(self.n(x, y), dtype=float)
        return np.full(np.shape(np.asarray(x, dtype=float)), float(self.n))[()]

    def thickness(self, s):
        return self.delta0 * self.g_at(s)

    def max_thickness(self, curve, samples=2048):
        s = np.linspace(0.0, curve.s0, samples, endpoint=False)
        g = self.g_at(s)
        if np.min(g) < 0.0:
            raise DomainError("LayerConfig: thickness profile must stay non-negative")
        return float(self.delta0 * np.max(g))

    def validate_against(self, curve):
        """Reject coatings that reach the curvature reach of the curve."""
        eta0 = curve.reach()
        if self.max_thickness(curve) >= eta0:
            raise OffsetTooDeep(
                f"coating depth {self.max_thickness(curve):.6g} reaches eta0={eta0:.6g}"
            )

    def describe(self):
        g = "callable" if callable(self.g) else float(self.g)
        n = "callable" if callable(self.n) else float(self.n)
        return {"delta0": self.delta0, "g": g, "n": n}


class OffsetCurve(BoundaryCurve):
    """Inner coating boundary x(s) + delta0*g(s)*nu(s), parameterized by the
    parent curve's arclength."""

    kind = "offset"

    def __init__(self, parent, layer):
        layer.validate_against(parent)
        self.parent = parent
        self.layer = layer
        super().__init__(parent.s0)

    def _depth(self, t, order):
        if self.layer.g_is_constant:
            if order == 0:
                return np.full(np.shape(t), self.layer.delta0 * float(self.layer.g))
            return np.zeros(np.shape(t))
        if order == 0:
            return self.layer.delta0 * self.layer.g_at(t)
        h = 1e-5 * self.parent.s0
        if order == 1:
            return (self._depth(t + h, 0) - self._depth(t - h, 0)) / (2 * h)
        return (self._depth(t + h, 0) - 2 * self._depth(t, 0) + self._depth(t - h, 0)) / h**2

    def _xy(self, t):
        t = np.asarray(t, dtype=float)
        p = self.parent.position(t)
        nu = self.parent.inward_normal(t)
        return p + self._depth(t, 0)[..., None] * nu

    def _d1(self, t):
        t = np.asarray(t, dtype=float)
        tau = self.parent.tangent(t)
        nu = self.parent.inward_normal(t)
        kap = self.parent.curvature(t)
        d, d1 = self._depth(t, 0), self._depth(t, 1)
        return (1.0 - d * kap)[..., None] * tau + d1[..., None] * nu

    def _d2(self, t):
        t = np.asarray(t, dtype=float)
        tau = self.parent.tangent(t)
        nu = self.parent.inward_normal(t)
        kap = self.parent.curvature(t)
        kap1 = self.parent.curvature_derivative(t)
        d, d1, d2 = (self._depth(t, k) for k in (0, 1, 2))
        ct = -(2.0 * d1 * kap + d * kap1)
        cn = kap - d * kap * kap + d2
        return ct[..., None] * tau + cn[..., None] * nu

    def _d3(self, t):
        raise NotImplementedError("offsets of offset curves are not supported")

    def describe(self):
        return {
            "kind": "offset",
            "parent": self.parent.describe(),
            "layer": self.layer.describe(),
        }


# ---------------------------------------------------------------------------
# tube coordinates
# ---------------------------------------------------------------------------

class TubeMap:
    """Diffeomorphism (s, eta) -> x(s) + eta*nu(s) within the curvature reach,
    with the metric factor J(s, eta) = 1 + eta*kappa(s)."""

    def __init__(self, curve):
        self.curve = curve
        self.eta0 = curve.reach()
        # dense sample for nearest-point seeding of the inverse
        n = 512
        self._seed_s = np.linspace(0.0, curve.s0, n, endpoint=False)
        self._seed_xy = curve.position(self._seed_s)

    def forward(self, s, eta):
        p = self.curve.position(s)
        nu = self.curve.inward_normal(s)
        return p + np.asarray(eta, dtype=float)[..., None] * nu

    def jacobian(self, s, eta):
        return 1.0 + np.asarray(eta, dtype=float) * self.curve.curvature(s)

    def inverse(self, point, maxit=50):
        """Project a plane point to tube coordinates (s, eta) by Newton.

        Raises InversionFailed when the projection does not converge within
        maxit iterations or lands outside the curvature reach; both signal a
        point outside the tube neighborhood where the map is a bijection.
        """
        point = np.asarray(point, dtype=float)
        d2 = ((self._seed_xy - point) ** 2).sum(axis=1)
        s = float(self._seed_s[np.argmin(d2)])
        for _ in range(maxit):
            p = self.curve.position(s)
            tau = self.curve.tangent(s)
            nu = self.curve.inward_normal(s)
            kap = float(self.curve.curvature(s))
            dx = point - p
            f = float(dx @ tau)
            eta = float(dx @ nu)
            fp = -(1.0 - kap * eta)
            if fp == 0.0:
                break
            step = f / fp
            s = (s - step) % self.curve.s0
            if abs(f) < 1e-13 * max(1.0, self.curve.s0) and abs(step) < 1e-12:
                if abs(eta) >= self.eta0:
                    raise InversionFailed(
                        f"projected depth {eta:.3g} outside the reach {self.eta0:.3g}"
                    )
                return s, eta
        raise InversionFailed("tube projection did not converge (point outside tube?)")


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def curvature(curve, s):
    """Signed curvature at arclength s (positive on convex boundaries)."""
    return curve.curvature(s)


def offset_curve(curve, layer):
    """Inner coating boundary as a BoundaryCurve.

    A constant-thickness offset of a circle stays an exact circle; everything
    else becomes an OffsetCurve over the parent parameterization.
    """
    layer.validate_against(curve)
    if isinstance(curve, Circle) and layer.g_is_constant:
        return Circle(curve.radius - layer.delta0 * float(layer.g))
    return OffsetCurve(curve, layer)


def tube_map(curve):
    return TubeMap(curve)


def curve_from_config(block):
    """Build a curve from its run-config block."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("geometry block must be a dict with a 'kind' field", field="geometry")
    kind = block["kind"]
    known = {
        "circle": ({"kind", "radius"}, lambda: Circle(block["radius"])),
        "ellipse": ({"kind", "a", "b"}, lambda: Ellipse(block["a"], block["b"])),
        "fourier": ({"kind", "modes"}, lambda: FourierCurve(block["modes"])),
    }
    if kind not in known:
        raise ConfigError(f"unknown geometry kind {kind!r}", field="geometry.kind")
    allowed, build = known[kind]
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unknown geometry keys {sorted(extra)}", field="geometry")
    missing = allowed - set(block)
    if missing:
        raise ConfigError(f"missing geometry keys {sorted(missing)}", field="geometry")
    try:
        return build()
    except DomainError as exc:
        raise ConfigError(str(exc), field="geometry") from exc
