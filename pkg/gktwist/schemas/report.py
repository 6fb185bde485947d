from typing import Any

from pydantic import BaseModel, Field

from gktwist.models.models import CheckStatus, SuiteName


class GoldenComparison(BaseModel):
    key: str
    expected: float
    measured: float
    ok: bool


class CheckResult(BaseModel):
    name: str
    status: CheckStatus
    residuals: dict[str, float] = Field(default_factory=dict)
    witness: dict[str, Any] = Field(default_factory=dict)  # points and inputs that realize the residuals
    details: dict[str, Any] = Field(default_factory=dict)
    goldens: list[GoldenComparison] = Field(default_factory=list)
    error: str | None = None


class SuiteResult(BaseModel):
    suite: SuiteName
    status: CheckStatus
    checks: list[CheckResult]


class Report(BaseModel):
    tool: str = "gktwist"
    version: str
    label: str | None = None
    connection: str
    seed: int
    prng: str = "numpy.random.PCG64"
    tolerances: dict[str, float]
    status: CheckStatus
    suites: list[SuiteResult]
    timing: dict[str, float] | None = None  # wall seconds per suite; not part of the comparison surface

    def comparison_surface(self) -> dict:
        return self.model_dump(mode="json", exclude={"timing"})

    def failed_checks(self) -> list[str]:
        return [
            f"{suite.suite.value}/{check.name}"
            for suite in self.suites
            for check in suite.checks
            if check.status == CheckStatus.FAIL
        ]
