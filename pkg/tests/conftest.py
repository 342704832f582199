"""Shared fixtures; the expensive finite element objects are session-scoped."""

import os
import time

import pytest

from thinspec import bessel
from thinspec.asymptotics import compute_coefficients
from thinspec.geometry import Circle, Ellipse, LayerConfig
from thinspec.report import run_sweep
from thinspec.transmission import first_te

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), "goldens", "unit_disk.txt")


@pytest.fixture(scope="session")
def goldens():
    out = {}
    with open(GOLDEN_PATH) as fh:
        for raw in fh:
            if raw.startswith("#") or not raw.strip():
                continue
            key, val = raw.split()
            out[key] = float(val)
    return out


@pytest.fixture(scope="session")
def disk_oracle():
    return bessel.disk_asymptotic_coeffs(1.0)


@pytest.fixture(scope="session")
def disk_coeffs_h02():
    layer = LayerConfig(0.01, 1.0, 0.48)
    return compute_coefficients(Circle(1.0), layer, 0.02), layer


@pytest.fixture(scope="session")
def disk_te():
    """Coupled-pencil solve on the coated unit disk, delta=0.01, h=0.05."""
    return first_te(Circle(1.0), LayerConfig(0.01, 1.0, 0.48), 0.05)


@pytest.fixture(scope="session")
def disk_sweep_report():
    return run_sweep(Circle(1.0), [0.04, 0.02, 0.01, 0.005], 1.0, 0.48,
                     solver="bessel")


@pytest.fixture(scope="session")
def ellipse_sweep_report():
    """(report, wall seconds) for the general-geometry consistency sweep."""
    start = time.perf_counter()
    report = run_sweep(Ellipse(1.3, 1.0), [0.04, 0.02, 0.01], 1.0, 0.48,
                       h_list=[0.04, 0.02], solver="fem")
    return report, time.perf_counter() - start
