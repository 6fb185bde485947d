import math

import numpy as np
import pytest

from gktwist.core.errors import DomainError, PositivityError, TorsionError
from gktwist.models.geometry import TwistorChart, TwistorPoint
from gktwist.models.models import TwistorStructure
from gktwist.services.connection import ConnectionSpec
from gktwist.services.twistor import (
    adapted_nijenhuis,
    big_structures,
    bihermitian_data,
    bracket_identity,
    closed_form_gap,
    frame_invariance,
    gamma_form,
    gamma_identity,
    horizontal_lift,
    jpm_nijenhuis,
    nijenhuis_twistor,
    non_kahler_witness,
    twistor_verdict,
)

FLAT_WITNESS = -1.0 / (2.0 + math.sqrt(3.0))


def _points(big, rng, n=2):
    return big.chart.sample(rng, n)


def test_big_structures_are_a_generalized_kaehler_pair(sphere_spec, rng):
    big = big_structures(sphere_spec)
    for point in _points(big, rng, 3):
        measured = big.invariants(point)
        assert measured.pop("positivity_min_eigenvalue") > 0
        assert max(measured.values()) <= 1e-9
        assert big.positivity_identity(point, rng.normal(size=12)) <= 1e-9


def test_positivity_identity_weights_fiber_norms_by_half_pairing(sphere_spec, rng):
    # <X + xi, Y + eta> = 1/2 (xi(Y) + eta(X)) puts 1/2 on |U|^2 + |V|^2 + |phi|^2 + |psi|^2
    big = big_structures(sphere_spec)
    point = _points(big, rng, 1)[0]
    fiber_only = np.zeros(12)
    fiber_only[2:6] = rng.normal(size=4)
    fiber_only[8:12] = rng.normal(size=4)
    assert big.positivity_identity(point, fiber_only) <= 1e-9


def test_bracket_of_horizontal_lifts_is_curvature(sphere_spec, rng):
    big = big_structures(sphere_spec)
    for point in _points(big, rng):
        assert bracket_identity(big, point)["residual"] <= 1e-7


def test_flat_connection_gives_integrable_pair(flat_spec, rng):
    big = big_structures(flat_spec)
    verdict = twistor_verdict(big, _points(big, rng))
    assert verdict.integrable
    assert all(verdict.vanishing().values())


def test_sphere_keeps_i_integrable_and_breaks_j(sphere_spec, rng):
    big = big_structures(sphere_spec)
    verdict = twistor_verdict(big, _points(big, rng))
    vanishing = verdict.vanishing()
    assert vanishing["I.HxH"] is True
    assert vanishing["I.HxV"] is True
    assert vanishing["I.VxV"] is True
    assert vanishing["J.VxV"] is True
    assert verdict.blocks["J.HxV"] > 1e-4
    assert not verdict.integrable


def test_traceful_connection_is_not_integrable(traceful_spec, rng):
    big = big_structures(traceful_spec)
    verdict = twistor_verdict(big, _points(big, rng))
    assert verdict.max_residual > 1e-4
    assert verdict.blocks["J.HxH"] > 1e-4
    assert verdict.vanishing()["I.VxV"] is True
    assert verdict.vanishing()["J.VxV"] is True


@pytest.mark.parametrize("spec_name", ["sphere_spec", "traceful_spec"])
@pytest.mark.parametrize("which", list(TwistorStructure))
def test_closed_form_matches_coordinate_tensor(spec_name, which, request, rng):
    big = big_structures(request.getfixturevalue(spec_name))
    point = _points(big, rng, 1)[0]
    tensor = adapted_nijenhuis(big, which, point)
    for _ in range(3):
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert closed_form_gap(big, which, a, b, point, tensor) <= 1e-6


@pytest.mark.parametrize("spec_name", ["flat_spec", "sphere_spec"])
def test_gamma_vanishes_when_curvature_is_trace_free(spec_name, request, rng):
    big = big_structures(request.getfixturevalue(spec_name))
    for point in _points(big, rng):
        for _ in range(3):
            a, w = rng.normal(size=4), rng.normal(size=4)
            np.testing.assert_allclose(gamma_form(big, a, w, point), 0.0, atol=1e-9)
            result = gamma_identity(big, a, w, point)
            assert result["rhs_max"] <= 1e-6
            assert result["residual"] <= 1e-6


def test_gamma_is_nonzero_for_traceful_curvature_while_n_i_stays_zero(traceful_spec, rng):
    big = big_structures(traceful_spec)
    largest = 0.0
    for point in _points(big, rng):
        for _ in range(3):
            a, w = rng.normal(size=4), rng.normal(size=4)
            largest = max(largest, float(np.max(np.abs(gamma_form(big, a, w, point)))))
            result = gamma_identity(big, a, w, point)
            assert result["residual"] <= 1e-6
            assert result["brute_max"] <= 1e-8
    assert largest > 1e-4


def test_coordinate_frame_nijenhuis_is_antisymmetric(sphere_spec, rng):
    big = big_structures(sphere_spec)
    point = _points(big, rng, 1)[0]
    np.testing.assert_allclose(
        nijenhuis_twistor(big, TwistorStructure.CAL_J, 1, 3, point),
        -nijenhuis_twistor(big, TwistorStructure.CAL_J, 3, 1, point),
        atol=1e-9,
    )
    with pytest.raises(DomainError):
        nijenhuis_twistor(big, TwistorStructure.CAL_J, 0, 13, point)


def test_flat_witness_value(flat_spec):
    big = big_structures(flat_spec)
    point = big.chart.point((0.0, 0.0, 0.0, 0.0, 0.0, math.sqrt(3.0)))
    for sign in (1, -1):
        result = non_kahler_witness(big, point, (1.0, 0.0), (0.0, 1.0), (0.0, 0.0, 0.0, 2.0), sign)
        assert result["closed_form"] == pytest.approx(FLAT_WITNESS, abs=1e-12)
        assert result["gap"] <= 1e-6
        assert abs(result["numeric"]) > 1e-3


def test_witness_rejects_bad_sign(flat_spec):
    big = big_structures(flat_spec)
    point = big.chart.point((0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        non_kahler_witness(big, point, (1.0, 0.0), (0.0, 1.0), (0.0, 0.0, 0.0, 1.0), 0)


def test_bihermitian_data_at_fiber_origin(flat_spec):
    big = big_structures(flat_spec)
    origin = big.chart.point((0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    data = bihermitian_data(big, origin)
    residuals = data.residuals()
    assert residuals.pop("g_min_eigenvalue") > 0
    assert residuals.pop("j_distinct") > 1e-10
    assert max(residuals.values()) <= 1e-9
    lift_u = horizontal_lift(big, (1.0, 0.0), origin)
    assert float(lift_u @ data.g @ lift_u) == pytest.approx(1.0)
    np.testing.assert_allclose(data.b, 0.0, atol=1e-12)


@pytest.mark.parametrize("spec_name", ["flat_spec", "sphere_spec", "traceful_spec"])
def test_j_plus_and_j_minus_integrable_for_torsion_free_connections(spec_name, request, rng):
    big = big_structures(request.getfixturevalue(spec_name))
    for point in _points(big, rng):
        assert max(jpm_nijenhuis(big, point).values()) <= 1e-8


def test_shearing_the_base_keeps_the_verdict(flat_spec, rng):
    result = frame_invariance(flat_spec, rng, 2)
    assert result["agree"]
    assert max(result["sheared"].values()) < 1e-7


def test_torsion_is_rejected(plane):
    spec = ConnectionSpec.from_gamma(plane, [[["0", "u"], ["0", "0"]], [["0", "0"], ["0", "0"]]])
    with pytest.raises(TorsionError):
        big_structures(spec)


def test_mixed_sheet_signs_are_not_positive():
    with pytest.raises(PositivityError):
        TwistorPoint(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, sign_plus=1, sign_minus=-1).validate()


def test_negative_sheet_chart_gives_structures(sphere_spec, rng):
    big = big_structures(sphere_spec, TwistorChart(sphere_spec.chart, sign=-1))
    point = _points(big, rng, 1)[0]
    measured = big.invariants(point)
    assert measured.pop("positivity_min_eigenvalue") > 0
    assert max(measured.values()) <= 1e-9
