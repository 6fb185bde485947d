import json
import math

import pytest

from gktwist.core.errors import ConfigError
from gktwist.models.models import CheckStatus, SuiteName
from gktwist.schemas.config import parse_config
from gktwist.services.runner import freeze_goldens, golden_key, load_goldens, run
from gktwist.services.suites import FLAT_WITNESS, SUITES

PLANE_BOUNDS = ((-1.0, 1.0), (-1.0, 1.0))
SPHERE_BOUNDS = ((0.3, math.pi - 0.3), (0.0, 1.0))
TRACEFUL_GAMMA = [[["v", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]


def _config(make_config, connection, bounds, checks, **extra):
    return parse_config(json.dumps(make_config(connection, bounds, [c.value for c in checks], **extra)))


def _check(report, suite: SuiteName, name: str):
    result = next(s for s in report.suites if s.suite == suite)
    return next(c for c in result.checks if c.name == name)


def test_every_suite_registers_checks():
    assert set(SUITES) == set(SuiteName)
    assert all(SUITES[suite] for suite in SuiteName)


def test_algebra_suites_pass(make_config):
    config = _config(make_config, {"flat": True}, PLANE_BOUNDS, [SuiteName.FIBER_ALGEBRA, SuiteName.COURANT])
    report = run(config)
    assert report.failed_checks() == []
    assert report.status == CheckStatus.PASS


def test_flat_plane_theorem_and_bihermitian(make_config):
    config = _config(make_config, {"flat": True}, PLANE_BOUNDS, [SuiteName.THEOREM, SuiteName.BIHERMITIAN])
    report = run(config)
    assert report.failed_checks() == []
    integrability = _check(report, SuiteName.THEOREM, "integrability")
    assert integrability.details["verdict"] == "integrable"
    witness = _check(report, SuiteName.BIHERMITIAN, "witness")
    assert witness.details["closed_form"]["plus"] == pytest.approx(FLAT_WITNESS)
    assert witness.details["not_kaehler"] is True


def test_traceful_connection_is_reported_not_integrable(make_config):
    config = _config(make_config, {"gamma": TRACEFUL_GAMMA}, ((0.0, 2.0), (0.0, 1.0)), [SuiteName.THEOREM])
    report = run(config)
    integrability = _check(report, SuiteName.THEOREM, "integrability")
    assert integrability.status == CheckStatus.PASS
    assert integrability.details["verdict"] == "not integrable"
    assert integrability.details["trace_free"] is False
    assert "J.HxH" in integrability.details["nonzero_blocks"]
    assert _check(report, SuiteName.THEOREM, "closed-form").status == CheckStatus.PASS
    gamma = _check(report, SuiteName.THEOREM, "gamma-identity")
    assert gamma.status == CheckStatus.PASS
    assert gamma.residuals["gamma"] > 1e-4
    assert gamma.residuals["residual"] <= 1e-6


@pytest.mark.parametrize(
    ("connection", "bounds"),
    [
        ({"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS),
        ({"gamma": TRACEFUL_GAMMA}, ((0.0, 2.0), (0.0, 1.0))),
    ],
)
def test_curved_connections_keep_j_plus_and_j_minus_integrable(make_config, connection, bounds):
    report = run(_config(make_config, connection, bounds, [SuiteName.BIHERMITIAN]))
    jpm = _check(report, SuiteName.BIHERMITIAN, "jpm-nijenhuis")
    assert jpm.status == CheckStatus.PASS
    assert jpm.details["flat"] is False
    assert max(jpm.residuals.values()) <= 1e-8


def test_sphere_theorem_asserts_the_curvature_blocks(make_config):
    report = run(_config(make_config, {"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS, [SuiteName.THEOREM]))
    integrability = _check(report, SuiteName.THEOREM, "integrability")
    assert integrability.status == CheckStatus.PASS
    assert integrability.residuals["J.HxV"] > 1e-4
    closed_form = _check(report, SuiteName.THEOREM, "closed-form")
    assert closed_form.status == CheckStatus.PASS
    assert closed_form.residuals["closed_form_j_gap"] <= 1e-6
    assert _check(report, SuiteName.THEOREM, "gamma-identity").residuals["gamma"] <= 1e-6


def test_suite_samples_do_not_depend_on_other_suites(make_config):
    alone = run(_config(make_config, {"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS, [SuiteName.CONNECTION]))
    together = run(
        _config(
            make_config,
            {"metric": {"E": "1", "G": "sin(u)^2"}},
            SPHERE_BOUNDS,
            [SuiteName.FIBER_ALGEBRA, SuiteName.CONNECTION],
        )
    )
    assert together.suites[1].model_dump() == alone.suites[0].model_dump()


def test_overrides_apply_after_config_tolerances(make_config):
    config = _config(
        make_config, {"flat": True}, PLANE_BOUNDS, [SuiteName.CONNECTION], tolerances={"algebraic": 1e-8}
    )
    assert run(config).tolerances["algebraic"] == 1e-8
    assert run(config, tol_overrides={"algebraic": 1e-7}).tolerances["algebraic"] == 1e-7
    with pytest.raises(ConfigError):
        run(config, tol_overrides={"nope": 1.0})


def test_check_errors_become_failed_results(make_config):
    torsion_gamma = [[["0", "u"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
    config = _config(make_config, {"gamma": torsion_gamma}, PLANE_BOUNDS, [SuiteName.THEOREM])
    report = run(config)
    assert report.status == CheckStatus.FAIL
    invariants = _check(report, SuiteName.THEOREM, "structure-invariants")
    assert invariants.status == CheckStatus.FAIL
    assert invariants.error.startswith("TorsionError")


def test_goldens_freeze_and_load(make_config, tmp_path):
    config = _config(make_config, {"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS, [SuiteName.CONNECTION])
    report = run(config)
    frozen = freeze_goldens(report, 1e-4)
    key = golden_key(SuiteName.CONNECTION, "flatness", "max_curvature")
    assert key in frozen
    path = tmp_path / "goldens.json"
    path.write_text(json.dumps(frozen))
    assert load_goldens(str(path)) == frozen
    path.write_text(json.dumps({key: "one"}))
    with pytest.raises(ConfigError):
        load_goldens(str(path))
