import math

import numpy as np
import pytest

from thinspec.errors import ConfigError, DomainError, InversionFailed, OffsetTooDeep
from thinspec.geometry import (
    BoundaryCurve,
    Circle,
    Ellipse,
    FourierCurve,
    LayerConfig,
    OffsetCurve,
    curvature,
    curve_from_config,
    offset_curve,
    tube_map,
)

CURVES = [
    Circle(1.0),
    Ellipse(2.0, 1.0),
    Ellipse(1.3, 1.0),
    FourierCurve([0.08, 0.0, 0.03]),
]


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_frame_is_unit(curve):
    s = np.linspace(0.0, curve.s0, 57, endpoint=False)
    tau = curve.tangent(s)
    nu = curve.inward_normal(s)
    assert np.max(np.abs(np.linalg.norm(tau, axis=-1) - 1.0)) <= 1e-12
    assert np.max(np.abs(np.linalg.norm(nu, axis=-1) - 1.0)) <= 1e-12


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_periodicity(curve):
    s = np.linspace(0.0, curve.s0, 23, endpoint=False)
    gap = curve.position(s + curve.s0) - curve.position(s)
    assert np.max(np.abs(gap)) <= 1e-12


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_frenet_relation(curve):
    # d tau/ds = +kappa * nu under the convex-positive convention, checked
    # against central differences of the tangent
    s = np.linspace(0.05, curve.s0, 40, endpoint=False)
    h = 1e-6 * curve.s0
    dtau = (curve.tangent(s + h) - curve.tangent(s - h)) / (2.0 * h)
    pred = curve.curvature(s)[..., None] * curve.inward_normal(s)
    scale = np.max(np.abs(pred))
    assert np.max(np.abs(dtau - pred)) / scale <= 1e-6


def test_circle_curvature_exact():
    assert curvature(Circle(1.0), 0.37) == 1.0
    assert curvature(Circle(2.0), 5.0) == 0.5


def test_ellipse_curvature_closed_form():
    # at the point (2, 0): kappa = a*b / (a^2 sin^2 + b^2 cos^2)^(3/2) at t=0
    ell = Ellipse(2.0, 1.0)
    assert float(ell.curvature(0.0)) == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(ell.position(0.0), [2.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_curvature_against_fd_formula(curve):
    """kappa = (x'y'' - y'x'')/|x'|^3 rebuilt from position differences."""
    rng = np.random.default_rng(7)
    s = rng.uniform(0.0, curve.s0, 100)
    h = 1e-5 * curve.s0
    d1 = (curve.position(s + h) - curve.position(s - h)) / (2.0 * h)
    d2 = (curve.position(s + h) - 2.0 * curve.position(s) + curve.position(s - h)) / h**2
    speed = np.linalg.norm(d1, axis=-1)
    kap_fd = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    kap = curve.curvature(s)
    assert np.max(np.abs(kap_fd - kap)) / np.max(np.abs(kap)) <= 1e-6


def test_orientation_normalized_on_clockwise_input():
    class ClockwiseEllipse(BoundaryCurve):
        kind = "cw-ellipse"

        def _xy(self, t):
            return np.stack([1.3 * np.cos(-t), np.sin(-t)], axis=-1)

        def _d1(self, t):
            return np.stack([1.3 * np.sin(-t), -np.cos(-t)], axis=-1)

        def _d2(self, t):
            return np.stack([-1.3 * np.cos(-t), -np.sin(-t)], axis=-1)

        def _d3(self, t):
            return np.stack([-1.3 * np.sin(-t), np.cos(-t)], axis=-1)

    cw = ClockwiseEllipse(2.0 * math.pi)
    ccw = Ellipse(1.3, 1.0)
    s = np.linspace(0.0, ccw.s0, 50, endpoint=False)
    assert np.all(cw.curvature(s) > 0)
    assert np.max(np.abs(np.sort(cw.curvature(s)) - np.sort(ccw.curvature(s)))) <= 1e-9


def test_offset_circle_exact():
    layer = LayerConfig(0.1, 1.0, 0.5)
    inner = offset_curve(Circle(1.0), layer)
    assert isinstance(inner, Circle)
    assert inner.radius == pytest.approx(0.9, abs=1e-15)
    assert inner.s0 == pytest.approx(2.0 * math.pi * 0.9, abs=1e-8)


def test_offset_too_deep():
    with pytest.raises(OffsetTooDeep):
        offset_curve(Circle(1.0), LayerConfig(1.2, 1.0, 0.5))
    # the reach of this ellipse is b^2/a = 1/1.3
    with pytest.raises(OffsetTooDeep):
        offset_curve(Ellipse(1.3, 1.0), LayerConfig(0.9, 1.0, 0.5))


def test_offset_distance_to_parent():
    parent = Ellipse(1.3, 1.0)
    inner = offset_curve(parent, LayerConfig(0.05, 1.0, 0.5))
    assert isinstance(inner, OffsetCurve)
    golden = 0.5 * (math.sqrt(5.0) - 1.0)
    for s in np.linspace(0.0, inner.s0, 40, endpoint=False):
        q = inner.position(s)

        def dist(t):
            return float(np.linalg.norm(parent.position(t) - q))

        # dense scan then golden-section refinement of the nearest parameter
        ts = np.linspace(0.0, parent.s0, 2000, endpoint=False)
        pts = parent.position(ts)
        i = int(np.argmin(((pts - q) ** 2).sum(axis=1)))
        a = ts[i] - 2.0 * parent.s0 / 2000
        b = ts[i] + 2.0 * parent.s0 / 2000
        c, d = b - golden * (b - a), a + golden * (b - a)
        fc, fd = dist(c), dist(d)
        while b - a > 1e-13:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - golden * (b - a)
                fc = dist(c)
            else:
                a, c, fc = c, d, fd
                d = a + golden * (b - a)
                fd = dist(d)
        assert abs(dist(0.5 * (a + b)) - 0.05) <= 1e-8


def test_tube_map_basics():
    tm = tube_map(Circle(1.0))
    assert tm.eta0 == 1.0
    pt = tm.forward(0.0, 0.1)
    assert np.linalg.norm(pt) == pytest.approx(0.9, abs=1e-14)
    s = np.linspace(0.0, 2.0 * math.pi, 9)
    assert np.max(np.abs(tm.jacobian(s, 0.0) - 1.0)) == 0.0
    assert np.max(np.abs(tm.jacobian(s, 0.2) - 1.2)) <= 1e-14


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_tube_metric_positive_inside_reach(curve):
    tm = tube_map(curve)
    s = np.linspace(0.0, curve.s0, 33, endpoint=False)
    for eta in np.linspace(-0.99 * tm.eta0, 0.99 * tm.eta0, 21):
        assert np.all(tm.jacobian(s, eta) > 0.0)


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: f"{c.kind}")
def test_tube_round_trip(curve):
    tm = tube_map(curve)
    for s in np.linspace(0.0, curve.s0, 12, endpoint=False):
        for eta in (-0.85 * tm.eta0, -0.3 * tm.eta0, 0.0, 0.4 * tm.eta0, 0.89 * tm.eta0):
            pt = tm.forward(s, eta)
            s_back, eta_back = tm.inverse(pt)
            gap = np.linalg.norm(tm.forward(s_back, eta_back) - pt)
            assert gap <= 1e-10
            assert abs(eta_back - eta) <= 1e-10


def test_tube_inverse_rejects_far_point():
    tm = tube_map(FourierCurve([0.08]))
    with pytest.raises(InversionFailed):
        tm.inverse(np.array([25.0, 40.0]))


def test_layer_config_validation():
    with pytest.raises(DomainError):
        LayerConfig(-0.1, 1.0, 0.5)
    with pytest.raises(DomainError):
        LayerConfig(0.1, 1.0, 1.5)
    with pytest.raises(DomainError):
        LayerConfig(0.1, 1.0, 0.0)
    with pytest.raises(DomainError):
        LayerConfig(0.1, -1.0, 0.5)
    with pytest.raises(DomainError):
        LayerConfig(0.1, 1.0, lambda x, y: 0.5)  # callable index needs bounds
    cfg = LayerConfig(0.1, 1.0, lambda x, y: 0.5, n_bounds=(0.4, 0.6))
    assert cfg.n_lower == 0.4 and cfg.n_upper == 0.6


def test_variable_thickness_profile():
    layer = LayerConfig(0.05, lambda s: 1.0 + 0.3 * np.cos(2.0 * s), 0.5)
    inner = offset_curve(Circle(1.0), layer)
    s = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    radii = np.linalg.norm(inner.position(s), axis=-1)
    assert radii.min() >= 1.0 - 0.05 * 1.3 - 1e-9
    assert radii.max() <= 1.0 - 0.05 * 0.7 + 1e-9


def test_curve_from_config():
    c = curve_from_config({"kind": "circle", "radius": 2.0})
    assert isinstance(c, Circle) and c.radius == 2.0
    e = curve_from_config({"kind": "ellipse", "a": 1.3, "b": 1.0})
    assert isinstance(e, Ellipse)
    f = curve_from_config({"kind": "fourier", "modes": [0.05, 0.02]})
    assert isinstance(f, FourierCurve)
    with pytest.raises(ConfigError):
        curve_from_config({"kind": "square", "side": 1.0})
    with pytest.raises(ConfigError):
        curve_from_config({"kind": "circle", "radius": 1.0, "extra": 2})
    with pytest.raises(ConfigError):
        curve_from_config({"kind": "circle"})
