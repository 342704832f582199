import math

import numpy as np
import pytest

from thinspec.asymptotics import (
    AsymptoticCoefficients,
    compute_coefficients,
    compute_lambda0,
    compute_lambda1,
    compute_lambda2,
    evaluate_expansion,
    format_coefficients,
    layer_profiles,
    parse_coefficients,
)
from thinspec.errors import DomainError, NearDegenerate
from thinspec.fem import mass_norm
from thinspec.geometry import Circle, Ellipse, LayerConfig
from thinspec.mesh import TriMesh, generate_mesh, square_mesh

LAM0 = 5.783185962946785


def test_lambda0_disk(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    assert abs(coeffs.lambda0 - LAM0) / LAM0 <= 0.005


def test_lambda0_square():
    coeffs = compute_lambda0(None, None, mesh=square_mesh(50))
    exact = 2.0 * math.pi**2
    assert abs(coeffs.lambda0 - exact) / exact <= 0.005


def test_lambda0_scaling():
    mesh = generate_mesh(Circle(1.0), None, 0.06)
    small = compute_lambda0(None, None, mesh=mesh)
    scaled = TriMesh(
        vertices=2.0 * mesh.vertices,
        triangles=mesh.triangles.copy(),
        region=mesh.region.copy(),
        outer=mesh.outer.copy(),
        inner=mesh.inner.copy(),
        outer_s=None,
        curve=None,
    )
    big = compute_lambda0(None, None, mesh=scaled)
    assert abs(big.lambda0 - small.lambda0 / 4.0) / small.lambda0 <= 1e-6


def test_lambda0_degenerate_guard(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    with pytest.raises(NearDegenerate):
        compute_lambda0(None, None, mesh=coeffs.mesh, gap_tol=10.0)


def test_normalization_and_orthogonality(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    assert abs(mass_norm(coeffs.M, coeffs.v0.values) - 1.0) <= 1e-8
    inner = float(coeffs.v0.values @ (coeffs.M.tocsr() @ coeffs.v1.values))
    assert abs(inner) <= 1e-8


def test_lambda1_disk(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    assert abs(coeffs.lambda1 - 2.0 * LAM0) / (2.0 * LAM0) <= 0.01


def test_lambda1_degenerate_profile(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    shadow = AsymptoticCoefficients(
        lambda0=coeffs.lambda0, v0=coeffs.v0, flux0=coeffs.flux0,
        mesh=coeffs.mesh, K=coeffs.K, M=coeffs.M,
    )
    assert compute_lambda1(shadow, LayerConfig(0.01, 0.0, 0.48)) == 0.0


def test_lambda1_linearity_in_profile(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    shadow = AsymptoticCoefficients(
        lambda0=coeffs.lambda0, v0=coeffs.v0, flux0=coeffs.flux0,
        mesh=coeffs.mesh, K=coeffs.K, M=coeffs.M,
    )
    base = compute_lambda1(shadow, LayerConfig(0.01, 1.0, 0.48))
    tripled = compute_lambda1(shadow, LayerConfig(0.01, 3.0, 0.48))
    assert abs(tripled - 3.0 * base) <= 1e-12 * abs(tripled)


def test_lambda1_nonnegative_for_nonnegative_profile(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    shadow = AsymptoticCoefficients(
        lambda0=coeffs.lambda0, v0=coeffs.v0, flux0=coeffs.flux0,
        mesh=coeffs.mesh, K=coeffs.K, M=coeffs.M,
    )
    wavy = LayerConfig(0.01, lambda s: 1.0 + np.cos(3.0 * s), 0.48)  # touches 0
    assert compute_lambda1(shadow, wavy) >= 0.0


def test_lambda1_sign_flip_invariance(disk_coeffs_h02):
    coeffs, layer = disk_coeffs_h02
    flipped = AsymptoticCoefficients(
        lambda0=coeffs.lambda0, v0=coeffs.v0, flux0=-coeffs.flux0,
        mesh=coeffs.mesh, K=coeffs.K, M=coeffs.M,
    )
    lam1 = compute_lambda1(flipped, layer)
    assert abs(lam1 - coeffs.lambda1) <= 1e-12 * coeffs.lambda1


def test_v1_matches_radial_oracle(disk_coeffs_h02, disk_oracle):
    coeffs, _ = disk_coeffs_h02
    radii = np.linalg.norm(coeffs.mesh.vertices, axis=1)
    exact = disk_oracle.v1(radii)
    err = np.max(np.abs(coeffs.v1.values - exact)) / np.max(np.abs(exact))
    assert err <= 0.02


def test_v1_trace_is_exact(disk_coeffs_h02):
    coeffs, layer = disk_coeffs_h02
    g_b = layer.g_at(coeffs.mesh.outer_s)
    assert np.array_equal(coeffs.v1.values[coeffs.mesh.outer], -g_b * coeffs.flux0)


def test_fredholm_multiplier(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    assert abs(coeffs.multiplier) <= 1e-6 * coeffs.lambda1


def test_lambda2_disk(disk_coeffs_h02, goldens):
    coeffs, _ = disk_coeffs_h02
    assert abs(coeffs.lambda2 - goldens["lambda2"]) / goldens["lambda2"] <= 0.02


def test_lambda2_degenerate_profile(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    shadow = AsymptoticCoefficients(
        lambda0=coeffs.lambda0, v0=coeffs.v0, flux0=coeffs.flux0,
        flux1=coeffs.flux1, mesh=coeffs.mesh, K=coeffs.K, M=coeffs.M,
    )
    assert compute_lambda2(shadow, LayerConfig(0.01, 0.0, 0.48)) == 0.0


def test_lambda2_orientation_invariance(disk_coeffs_h02):
    """A clockwise-ingested boundary is normalized at construction, so the
    curvature-weighted quadrature is unchanged."""
    import thinspec.geometry as geo

    class ClockwiseCircle(geo.BoundaryCurve):
        kind = "cw-circle"

        def _xy(self, t):
            return np.stack([np.cos(-t), np.sin(-t)], axis=-1)

        def _d1(self, t):
            return np.stack([np.sin(-t), -np.cos(-t)], axis=-1)

        def _d2(self, t):
            return np.stack([-np.cos(-t), -np.sin(-t)], axis=-1)

        def _d3(self, t):
            return np.stack([-np.sin(-t), np.cos(-t)], axis=-1)

    layer = LayerConfig(0.01, 1.0, 0.48)
    cw = compute_coefficients(ClockwiseCircle(2.0 * math.pi), layer, 0.06)
    ccw = compute_coefficients(Circle(1.0), layer, 0.06)
    assert cw.lambda2 == pytest.approx(ccw.lambda2, rel=1e-3)


def test_profiles_boundary_conditions(disk_coeffs_h02):
    coeffs, layer = disk_coeffs_h02
    prof = layer_profiles(coeffs, layer)
    s = np.linspace(0.0, coeffs.mesh.curve.s0, 37)
    g = layer.g_at(s)
    # both profiles vanish on the inner edge
    assert np.max(np.abs(prof.w1(s, g))) == 0.0
    assert np.max(np.abs(prof.w2(s, g))) <= 1e-14
    # the first profile continues the corrector trace on the outer edge
    assert np.max(np.abs(prof.w1(s, 0.0) + g * prof.flux0_of(s))) <= 1e-12
    # transverse slope of the second profile equals the corrector flux
    assert np.max(np.abs(prof.w2_xi(s, 0.0) - prof.flux1_of(s))) == 0.0


def test_evaluate_expansion(disk_oracle):
    assert evaluate_expansion(disk_oracle, 0.0, 2) == disk_oracle.lambda0
    # the disk has lambda1 = 2*lambda0 in closed form
    pred = evaluate_expansion(disk_oracle, 0.01, 1)
    assert abs(pred - disk_oracle.lambda0 * 1.02) <= 1e-12 * pred
    gap = evaluate_expansion(disk_oracle, 0.03, 2) - evaluate_expansion(disk_oracle, 0.03, 1)
    assert abs(gap - 0.03**2 * disk_oracle.lambda2) <= 1e-14 * disk_oracle.lambda0
    with pytest.raises(DomainError):
        evaluate_expansion(disk_oracle, 0.01, 3)


def test_mesh_convergence_of_coefficients():
    layer = LayerConfig(0.01, 1.0, 0.48)
    values = {0: [], 1: [], 2: []}
    for h in (0.08, 0.04, 0.02):
        co = compute_coefficients(Circle(1.0), layer, h)
        values[0].append(co.lambda0)
        values[1].append(co.lambda1)
        values[2].append(co.lambda2)
    for order in (0, 1, 2):
        v = values[order]
        rate = math.log(abs((v[0] - v[1]) / (v[1] - v[2])), 2.0)
        assert rate >= 1.5


def test_order3_remainder_bounded(disk_oracle, disk_sweep_report):
    for row in disk_sweep_report.rows:
        ratio = row.err2 / row.delta**3
        assert ratio <= 15.0


def test_coefficients_text_record(disk_coeffs_h02):
    coeffs, _ = disk_coeffs_h02
    text = format_coefficients(coeffs)
    back = parse_coefficients(text)
    assert back["geometry"] == coeffs.geometry_hash
    assert back["lambda0"] == pytest.approx(coeffs.lambda0, rel=1e-14)
    assert back["lambda2"] == pytest.approx(coeffs.lambda2, rel=1e-14)


def test_ellipse_pipeline_runs():
    layer = LayerConfig(0.02, 1.0, 0.48)
    co = compute_coefficients(Ellipse(1.3, 1.0), layer, 0.06)
    assert co.lambda1 > 0.0
    assert co.lambda2 > 0.0
    assert abs(co.multiplier) <= 1e-6 * co.lambda1
