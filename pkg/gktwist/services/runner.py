"""
Runner - executes suites for a config and assembles the Report.

Each suite gets its own PRNG, numpy.random.PCG64 seeded with
[seed, suite index], so adding or dropping a suite never shifts the
samples drawn by another one.
"""

import json
import logging
import time

import numpy as np

from gktwist import __version__
from gktwist.core.config import get_settings, resolve_tolerances
from gktwist.core.errors import ConfigError, GktwistError
from gktwist.models.models import CheckStatus, SuiteName
from gktwist.schemas.config import RunConfig
from gktwist.schemas.report import CheckResult, GoldenComparison, Report, SuiteResult
from gktwist.services.suites import SUITES, SuiteContext, plain

logger = logging.getLogger(__name__)

SUITE_ORDER = list(SuiteName)


def golden_key(suite: SuiteName, check: str, residual: str) -> str:
    return f"{suite.value}.{check}.{residual}"


def load_goldens(path: str) -> dict[str, float]:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read goldens {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"goldens file is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or not all(isinstance(v, (int, float)) for v in data.values()):
        raise ConfigError("goldens file must map residual keys to numbers")
    return {str(k): float(v) for k, v in data.items()}


def freeze_goldens(report: Report, floor: float) -> dict[str, float]:
    """Residuals of a report whose magnitude exceeds `floor`, keyed for `load_goldens`."""
    frozen = {}
    for suite in report.suites:
        for result in suite.checks:
            for name, value in result.residuals.items():
                if value is not None and np.isfinite(value) and abs(value) > floor:
                    frozen[golden_key(suite.suite, result.name, name)] = value
    return dict(sorted(frozen.items()))


def _compare_goldens(
    suite: SuiteName, result: CheckResult, goldens: dict[str, float], tol: float
) -> list[GoldenComparison]:
    comparisons = []
    for name, measured in result.residuals.items():
        key = golden_key(suite, result.name, name)
        if key not in goldens:
            continue
        expected = goldens[key]
        ok = measured is not None and abs(measured - expected) <= tol * max(1.0, abs(expected))
        comparisons.append(GoldenComparison(key=key, expected=expected, measured=measured, ok=ok))
    return comparisons


def run_check(suite: SuiteName, name: str, fn, ctx: SuiteContext, goldens: dict[str, float]) -> CheckResult:
    try:
        outcome = fn(ctx)
    except GktwistError as exc:
        logger.warning(f"{suite.value}/{name} raised {type(exc).__name__}: {exc}")
        return CheckResult(name=name, status=CheckStatus.FAIL, error=f"{type(exc).__name__}: {exc}")

    result = CheckResult(
        name=name,
        status=CheckStatus.PASS if outcome.ok else CheckStatus.FAIL,
        residuals={k: float(v) for k, v in outcome.residuals.items()},
        witness=plain(outcome.witness),
        details=plain(outcome.details),
    )
    result.goldens = _compare_goldens(suite, result, goldens, ctx.tol("golden"))
    if any(not g.ok for g in result.goldens):
        result.status = CheckStatus.FAIL
    logger.info(f"{suite.value}/{name}: {result.status.value}")
    return result


def run_suite(config: RunConfig, suite: SuiteName, tolerances: dict[str, float], seed: int, goldens: dict[str, float]) -> SuiteResult:
    rng = np.random.default_rng([seed, SUITE_ORDER.index(suite)])
    ctx = SuiteContext(config=config, spec=config.build_connection(), tolerances=tolerances, rng=rng)
    logger.info(f"running suite {suite.value} on {ctx.spec.label}")
    checks = [run_check(suite, name, fn, ctx, goldens) for name, fn in SUITES[suite]]
    status = CheckStatus.PASS if all(c.status == CheckStatus.PASS for c in checks) else CheckStatus.FAIL
    return SuiteResult(suite=suite, status=status, checks=checks)


def run(
    config: RunConfig,
    suites: list[SuiteName] | None = None,
    tol_overrides: dict[str, float] | None = None,
    goldens: dict[str, float] | None = None,
    seed: int | None = None,
) -> Report:
    """Run `suites` (default: the config's `checks`) and build the report.

    Raises:
        ConfigError: for unknown tolerance overrides.
    """
    settings = get_settings()
    tolerances = resolve_tolerances(config.tolerances, tol_overrides or {})
    seed = config.seed if seed is None else seed
    selected = suites or list(dict.fromkeys(config.checks))
    spec = config.build_connection()

    results, timing = [], {}
    for suite in selected:
        started = time.perf_counter()
        results.append(run_suite(config, suite, tolerances, seed, goldens or {}))
        timing[suite.value] = time.perf_counter() - started

    status = CheckStatus.PASS if all(r.status == CheckStatus.PASS for r in results) else CheckStatus.FAIL
    report = Report(
        version=__version__,
        label=config.label,
        connection=spec.label,
        seed=seed,
        tolerances=tolerances,
        status=status,
        suites=results,
        timing=timing if settings.record_timing else None,
    )
    failed = report.failed_checks()
    if failed:
        logger.info(f"run finished with {len(failed)} failed checks: {', '.join(failed)}")
    else:
        logger.info("run finished, all checks passed")
    return report
