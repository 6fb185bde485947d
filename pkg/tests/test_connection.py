import math

import numpy as np
import pytest

from gktwist.core.errors import DomainError
from gktwist.models.geometry import Chart
from gktwist.models.models import Sheet
from gktwist.services.connection import (
    ConnectionSpec,
    bianchi_residual,
    curvature,
    curvature_uv,
    flatness_scan,
    max_torsion,
    sheet_report,
    sheet_scan,
    torsion,
    trace_condition,
)


def test_sphere_christoffels_and_curvature(sphere_spec):
    u = 1.1
    gam, _ = sphere_spec.gamma_at((u, 0.5))
    assert gam[0, 1, 1] == pytest.approx(-math.sin(u) * math.cos(u))
    assert gam[1, 0, 1] == pytest.approx(math.cos(u) / math.sin(u))
    np.testing.assert_allclose(curvature_uv(sphere_spec, (u, 0.5)), [[0.0, -math.sin(u) ** 2], [1.0, 0.0]], atol=1e-12)


def test_traceful_connection_has_scalar_trace(traceful_spec):
    rho = curvature_uv(traceful_spec, (1.0, 0.5))
    np.testing.assert_allclose(rho, [[1.0, 0.0], [0.0, 0.0]], atol=1e-14)
    assert not trace_condition(traceful_spec, (1.0, 0.5))


def test_curvature_is_bilinear_and_antisymmetric(sphere_spec, rng):
    point = (0.9, 0.2)
    x, y = rng.normal(size=2), rng.normal(size=2)
    np.testing.assert_allclose(
        curvature(sphere_spec, x, y, point).rho, -curvature(sphere_spec, y, x, point).rho, atol=1e-12
    )
    doubled = curvature(sphere_spec, 2.0 * x, y, point).rho
    np.testing.assert_allclose(doubled, 2.0 * curvature(sphere_spec, x, y, point).rho, atol=1e-12)


def test_rho_hat_is_skew_for_the_pairing(sphere_spec):
    hat = curvature(sphere_spec, (1.0, 0.0), (0.0, 1.0), (1.2, 0.4)).rho_hat
    pairing = 0.5 * np.block([[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    np.testing.assert_allclose(hat.T @ pairing + pairing @ hat, 0.0, atol=1e-12)


def test_bianchi_holds(traceful_spec, rng):
    triples = [tuple(rng.normal(size=2) for _ in range(3)) for _ in range(4)]
    assert bianchi_residual(traceful_spec, (0.5, 0.5), triples) <= 1e-12


def test_specs_are_torsion_free(sphere_spec, pullback_spec, traceful_spec):
    for spec in (sphere_spec, pullback_spec, traceful_spec):
        assert max_torsion(spec, 3) <= 1e-12


def test_asymmetric_gamma_has_torsion(plane):
    spec = ConnectionSpec.from_gamma(plane, [[["0", "u"], ["0", "0"]], [["0", "0"], ["0", "0"]]])
    np.testing.assert_allclose(torsion(spec, (0.5, 0.0))[0], [[0.0, 0.5], [-0.5, 0.0]])


def test_pullback_of_flat_is_flat(pullback_spec):
    report = flatness_scan(pullback_spec, 4)
    assert report.flat
    assert report.max_norm < 1e-9
    assert report.points == 16


def test_sphere_is_not_flat(sphere_spec):
    report = flatness_scan(sphere_spec, 3)
    assert not report.flat
    assert report.max_norm == pytest.approx(1.0)


def test_flatness_scan_rejects_empty_grid(flat_spec):
    with pytest.raises(DomainError):
        flatness_scan(flat_spec, [])


def test_sheared_flat_connection_stays_flat(flat_spec):
    sheared = flat_spec.sheared()
    assert sheared.chart.bounds[0] == pytest.approx((-1.0, 0.0))
    assert flatness_scan(sheared, 3).max_norm < 1e-12


def test_narrow_chart_has_no_sheared_subchart():
    narrow = ConnectionSpec.flat(Chart(("u", "v"), ((0.0, 0.5), (0.0, 1.0))))
    with pytest.raises(DomainError):
        narrow.sheared()


def test_connections_live_on_planes():
    with pytest.raises(DomainError):
        ConnectionSpec.flat(Chart(("x", "y", "z"), ((0.0, 1.0),) * 3))


def test_sheet_report_separates_trace_free_from_traceful(sphere_spec, traceful_spec, rng):
    sphere = sheet_report(sphere_spec, (1.0, 0.5), rng, samples=10)
    assert sphere["trace_free"]
    assert sphere["annihilates_minus"]
    assert not sphere["annihilates_plus"]
    traceful = sheet_report(traceful_spec, (1.0, 0.5), rng, samples=10)
    assert not traceful["trace_free"]
    assert not traceful["annihilates_minus"]


def test_sheet_scan_kernels(rng):
    plus = sheet_scan(rng, Sheet.PLUS, 30)
    assert plus["kernel_dim"] == 1
    assert plus["kernel_is_scalar"]
    minus = sheet_scan(rng, Sheet.MINUS, 30)
    assert minus["kernel_dim"] == 3
    assert minus["kernel_is_trace_free"]


def _holonomy(spec, corner, eps, steps=20):
    """Parallel transport dV/dt = -omega(x') V around the counterclockwise square of side eps."""
    point = np.asarray(corner, dtype=float)
    transport = np.eye(2)
    h = 1.0 / steps
    for direction in ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)):
        velocity = eps * np.asarray(direction)

        def rhs(t, m):
            return -spec.connection_matrix(velocity, point + t * velocity) @ m

        for n in range(steps):
            t = n * h
            k1 = rhs(t, transport)
            k2 = rhs(t + h / 2, transport + h / 2 * k1)
            k3 = rhs(t + h / 2, transport + h / 2 * k2)
            k4 = rhs(t + h, transport + h * k3)
            transport = transport + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        point = point + velocity
    return transport


def test_holonomy_of_small_loop_fixes_the_sign(sphere_spec, flat_spec):
    eps = 1e-2
    center = (math.pi / 2, 0.5)
    corner = (center[0] - eps / 2, center[1] - eps / 2)
    loop = (_holonomy(sphere_spec, corner, eps) - np.eye(2)) / eps**2
    np.testing.assert_allclose(loop, curvature_uv(sphere_spec, center), atol=2e-2)
    np.testing.assert_allclose(loop, [[0.0, -1.0], [1.0, 0.0]], atol=2e-2)
    np.testing.assert_allclose(_holonomy(flat_spec, (0.0, 0.0), 0.1), np.eye(2), atol=1e-14)
