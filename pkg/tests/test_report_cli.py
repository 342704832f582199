import json
import math
import os

import numpy as np
import pytest

from thinspec import bessel
from thinspec.cli import main
from thinspec.errors import BelowLambda0, ConfigError, InsufficientData
from thinspec.geometry import Circle
from thinspec.report import (
    estimate_thickness,
    fit_order,
    richardson,
    run_sweep,
    sweep_svg,
)


# ---------------------------------------------------------------------------
# order fitting
# ---------------------------------------------------------------------------

def test_fit_order_exact_cubic():
    deltas = np.array([0.04, 0.02, 0.01, 0.005])
    fit = fit_order(deltas, 7.0 * deltas**3)
    assert abs(fit.slope - 3.0) <= 1e-10
    assert abs(fit.intercept - math.log(7.0)) <= 1e-9
    assert fit.r2 >= 1.0 - 1e-12


def test_fit_order_dominant_term():
    deltas = np.array([0.04, 0.02, 0.01, 0.005])
    fit = fit_order(deltas, 2.0 * deltas + 5.0 * deltas**2)
    assert 0.95 <= fit.slope <= 1.05


def test_fit_order_drops_zero_rows():
    fit = fit_order([0.04, 0.02, 0.01, 0.005], [1.6e-3, 4e-4, 0.0, 2.5e-5])
    assert fit.n_used == 3
    assert "dropped 1" in fit.note


def test_fit_order_insufficient():
    with pytest.raises(InsufficientData):
        fit_order([0.04, 0.02], [1.0, 0.5])


def test_richardson_second_order():
    # v(h) = 3 + 4 h^2 is reproduced exactly
    extrap, est = richardson(0.04, 3.0 + 4.0 * 0.04**2, 0.02, 3.0 + 4.0 * 0.02**2)
    assert abs(extrap - 3.0) <= 1e-14
    assert est == pytest.approx(4.0 * 0.02**2, rel=1e-10)


# ---------------------------------------------------------------------------
# thickness recovery
# ---------------------------------------------------------------------------

def test_thickness_round_trip(disk_oracle):
    lam = bessel.disk_first_te(bessel.DiskProblem(1.0, 0.01, 0.48))
    est = estimate_thickness(lam, disk_oracle)
    assert abs(est.first_order - 0.01) / 0.01 <= 0.15
    assert est.quadratic is not None
    assert abs(est.quadratic - 0.01) / 0.01 <= 0.05


def test_thickness_zero_gap(disk_oracle):
    est = estimate_thickness(disk_oracle.lambda0, disk_oracle)
    assert est.first_order == 0.0


def test_thickness_below_lambda0(disk_oracle):
    with pytest.raises(BelowLambda0):
        estimate_thickness(disk_oracle.lambda0 - 0.1, disk_oracle)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_disk_sweep_rows(disk_sweep_report):
    rep = disk_sweep_report
    assert [r.delta for r in rep.rows] == [0.04, 0.02, 0.01, 0.005]
    assert all(r.sandwich_ok for r in rep.rows)
    assert all(r.mesh_guard_ok for r in rep.rows)
    assert rep.fits[1].slope >= 1.9
    assert rep.fits[2].slope >= 2.7


def test_sweep_csv_layout(disk_sweep_report):
    text = disk_sweep_report.to_csv()
    lines = text.splitlines()
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == ("delta,lambda_direct,lambda_dirichlet_eroded,pred0,pred1,"
                      "pred2,err0,err1,err2,sandwich_ok,mesh_guard_ok")
    data = [ln for ln in lines if not ln.startswith("#")][1:]
    assert len(data) == 4
    assert all(ln.endswith(",1,1") for ln in data)


def test_sweep_determinism():
    a = run_sweep(Circle(1.0), [0.02, 0.01], 1.0, 0.48, solver="bessel")
    b = run_sweep(Circle(1.0), [0.02, 0.01], 1.0, 0.48, solver="bessel")
    assert a.to_csv() == b.to_csv()


def test_sweep_svg(disk_sweep_report, tmp_path):
    path = tmp_path / "sweep.svg"
    text = sweep_svg(disk_sweep_report, path=str(path))
    assert text.startswith("<svg")
    assert "order 1 error" in text
    assert path.read_text() == text


def test_bessel_sweep_rejects_ellipse():
    from thinspec.geometry import Ellipse

    with pytest.raises(ConfigError):
        run_sweep(Ellipse(1.3, 1.0), [0.02, 0.01], 1.0, 0.48, solver="bessel")


def test_fem_sweep_worker_pool_deterministic():
    serial = run_sweep(Circle(1.0), [0.03, 0.02], 1.0, 0.48,
                       h_list=[0.08, 0.06], solver="fem", jobs=1)
    pooled = run_sweep(Circle(1.0), [0.03, 0.02], 1.0, 0.48,
                       h_list=[0.08, 0.06], solver="fem", jobs=2)
    assert serial.to_csv() == pooled.to_csv()


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _write_config(tmp_path, **overrides):
    cfg = {
        "schema": "thinspec/1",
        "geometry": {"kind": "circle", "radius": 1.0},
        "layer": {"delta0": [0.04, 0.02, 0.01, 0.005],
                  "g": {"kind": "const", "value": 1.0}, "n": 0.48},
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_sweep_ok(tmp_path):
    cfg = _write_config(tmp_path, require={"slope1_min": 1.9, "slope2_min": 2.7})
    code = main(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "sweep_fits.csv").exists()
    assert (tmp_path / "sweep.svg").exists()


def test_cli_sweep_determinism(tmp_path):
    cfg = _write_config(tmp_path)
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()


def test_cli_unmet_requirement(tmp_path):
    cfg = _write_config(tmp_path, require={"slope2_min": 5.0})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_cli_empty_delta_list(tmp_path):
    cfg = _write_config(tmp_path, layer={"delta0": [], "n": 0.48})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_unknown_key(tmp_path):
    cfg = _write_config(tmp_path, typo_key=1)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_bad_schema(tmp_path):
    cfg = _write_config(tmp_path, schema="thinspec/99")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_increasing_deltas(tmp_path):
    cfg = _write_config(tmp_path, layer={"delta0": [0.01, 0.02], "n": 0.48})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_task_mismatch(tmp_path):
    cfg = _write_config(tmp_path, task="coeffs")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_disk_oracle(tmp_path, goldens):
    cfg = _write_config(tmp_path)
    assert main(["disk-oracle", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "disk_oracle.csv").read_text().splitlines()
    assert lines[0] == "lambda0,lambda1,lambda2,flux0,flux1"
    vals = [float(v) for v in lines[1].split(",")]
    assert vals[0] == pytest.approx(goldens["lambda0"], rel=1e-12)
    assert vals[1] == pytest.approx(goldens["lambda1"], rel=1e-12)
    assert vals[2] == pytest.approx(goldens["lambda2"], rel=1e-8)


def test_cli_coeffs_task(tmp_path):
    cfg = _write_config(tmp_path, mesh={"h": [0.08, 0.05]},
                        layer={"delta0": [0.01], "n": 0.48})
    assert main(["coeffs", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "coefficients.csv").read_text().splitlines()
    assert lines[0] == "h,lambda0,lambda1,lambda2,multiplier"
    assert len(lines) == 4  # two mesh sizes + extrapolated row
    records = [p for p in os.listdir(tmp_path) if p.startswith("coefficients_")]
    assert len(records) == 2


def test_cli_direct_task(tmp_path):
    cfg = _write_config(tmp_path, mesh={"h": [0.07]},
                        layer={"delta0": [0.02], "n": 0.48})
    assert main(["direct", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "direct.csv").read_text().splitlines()
    assert lines[0].startswith("delta,h,lambda_direct")
    assert len(lines) == 2
    assert (tmp_path / "scan_d0.02_h0.07.csv").exists()


def test_cli_validate_task(tmp_path):
    cfg = _write_config(tmp_path, mesh={"h": [0.07, 0.05]},
                        layer={"delta0": [0.02], "n": 0.48})
    assert main(["validate", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "validate.csv").read_text().splitlines()
    assert lines[0] == "check,delta,value,ok"
    assert all(ln.endswith(",1") for ln in lines[1:])
