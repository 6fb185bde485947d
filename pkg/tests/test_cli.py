import json
import math

import pytest

from gktwist.core.errors import ConfigError
from gktwist.scripts.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main, parse_overrides

SPHERE_BOUNDS = ((0.3, math.pi - 0.3), (0.0, 1.0))
PLANE_BOUNDS = ((-1.0, 1.0), (-1.0, 1.0))


@pytest.fixture
def write_config(tmp_path, make_config):
    def write(name: str, connection: dict, bounds, checks, **extra) -> str:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(make_config(connection, bounds, checks, **extra)))
        return str(path)

    return write


def test_connection_suite_passes_on_flat_plane(write_config, capsys):
    path = write_config("flat", {"flat": True}, PLANE_BOUNDS, ["connection"])
    assert main(["connection", "--config", path, "--no-timing"]) == EXIT_PASS
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "pass"
    assert report["timing"] is None
    assert report["prng"] == "numpy.random.PCG64"
    [suite] = report["suites"]
    assert suite["suite"] == "connection"
    assert {c["name"] for c in suite["checks"]} >= {"torsion", "flatness", "sheet-scans"}


def test_reports_are_reproducible(write_config, tmp_path):
    path = write_config("sphere", {"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS, ["connection"])
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    for out in (first, second):
        assert main(["all", "--config", path, "--out", str(out), "--no-timing"]) == EXIT_PASS
    assert first.read_bytes() == second.read_bytes()


def test_seed_flag_overrides_config(write_config, capsys):
    path = write_config("flat", {"flat": True}, PLANE_BOUNDS, ["connection"])
    main(["connection", "--config", path, "--seed", "99", "--no-timing"])
    assert json.loads(capsys.readouterr().out)["seed"] == 99


def test_frozen_goldens_pass_and_tampered_ones_fail(write_config, tmp_path):
    path = write_config("sphere", {"metric": {"E": "1", "G": "sin(u)^2"}}, SPHERE_BOUNDS, ["connection"])
    goldens = tmp_path / "goldens.json"
    out = tmp_path / "report.json"
    assert main(["connection", "--config", path, "--out", str(out), "--freeze-goldens", str(goldens)]) == EXIT_PASS
    frozen = json.loads(goldens.read_text())
    assert frozen["connection.flatness.max_curvature"] == pytest.approx(1.0)

    assert main(["connection", "--config", path, "--out", str(out), "--goldens", str(goldens)]) == EXIT_PASS

    goldens.write_text(json.dumps({"connection.flatness.max_curvature": 5.0}))
    assert main(["connection", "--config", path, "--out", str(out), "--goldens", str(goldens)]) == EXIT_FAIL
    report = json.loads(out.read_text())
    flatness = next(c for c in report["suites"][0]["checks"] if c["name"] == "flatness")
    assert flatness["status"] == "fail"
    assert flatness["goldens"][0]["ok"] is False


def test_config_errors_exit_with_two(write_config, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"chart": {"bounds": [[0, 1], [0, 1]]}, "connection": {"flat": True}}))
    assert main(["connection", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["connection", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    path = write_config("flat", {"flat": True}, PLANE_BOUNDS, ["connection"])
    assert main(["connection", "--config", path, "--tol-override", "bogus=1e-3"]) == EXIT_CONFIG
    assert main(["connection", "--config", path, "--goldens", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_parse_overrides():
    assert parse_overrides(["algebraic=1e-6", "flatness = 0.5"]) == {"algebraic": 1e-6, "flatness": 0.5}
    with pytest.raises(ConfigError):
        parse_overrides(["algebraic"])
    with pytest.raises(ConfigError):
        parse_overrides(["algebraic=tiny"])
