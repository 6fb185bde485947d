import json
import math

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from gktwist.core.config import resolve_tolerances
from gktwist.core.errors import ConfigError, DomainError, ExpressionSyntaxError
from gktwist.models.geometry import Chart, TwistorChart
from gktwist.models.models import SuiteName
from gktwist.services.connection import ConnectionSpec
from gktwist.services.expressions import parse_expression


class ChartBlock(BaseModel):
    names: list[str] = Field(default_factory=lambda: ["u", "v"], min_length=2, max_length=2)
    bounds: list[tuple[float, float]] = Field(..., min_length=2, max_length=2)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _valid_chart(self):
        try:
            self.build()
        except DomainError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self) -> Chart:
        return Chart(tuple(self.names), tuple(self.bounds))


class MetricBlock(BaseModel):
    E: str
    F: str = "0"
    G: str

    model_config = {"extra": "forbid"}


class PullbackBlock(BaseModel):
    map: list[str] = Field(..., min_length=2, max_length=2)  # target coordinates in chart names

    model_config = {"extra": "forbid"}


class ConnectionBlock(BaseModel):
    gamma: list[list[list[str]]] | None = None  # gamma[k][i][j]
    metric: MetricBlock | None = None
    flat: bool | None = None
    pullback: PullbackBlock | None = None
    label: str | None = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _exactly_one_source(self):
        sources = [self.gamma is not None, self.metric is not None, bool(self.flat), self.pullback is not None]
        if sum(sources) != 1:
            raise ValueError("exactly one connection source (gamma | metric | flat | pullback)")
        if self.gamma is not None:
            if len(self.gamma) != 2 or any(len(row) != 2 or any(len(c) != 2 for c in row) for row in self.gamma):
                raise ValueError("gamma must be a 2x2x2 array of expressions")
        return self


class WitnessBlock(BaseModel):
    base: tuple[float, float] | None = None  # defaults to the chart center
    a: tuple[float, float] = (0.0, 0.0)
    b: tuple[float, float] = (0.0, math.sqrt(3.0))
    w: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 2.0)  # (da2, da3, db2, db3)
    x: tuple[float, float] = (1.0, 0.0)
    y: tuple[float, float] = (0.0, 1.0)

    model_config = {"extra": "forbid"}


class TwistorBlock(BaseModel):
    sign: int = 1
    fiber_range: tuple[float, float] = (-2.0, 2.0)
    witness: WitnessBlock = Field(default_factory=WitnessBlock)

    model_config = {"extra": "forbid"}

    @field_validator("sign")
    @classmethod
    def _sign(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("sheet sign must be +1 or -1")
        return value

    @field_validator("fiber_range")
    @classmethod
    def _range(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not value[1] > value[0]:
            raise ValueError("fiber range must have positive extent")
        return value


class SampleBlock(BaseModel):
    """Per-run overrides of the sample counts in Settings."""

    fiber_samples: int | None = Field(None, gt=0)
    gks_samples: int | None = Field(None, gt=0)
    twistor_points: int | None = Field(None, gt=0)
    invariant_points: int | None = Field(None, gt=0)
    identity_vectors: int | None = Field(None, gt=0)
    plus_sheet_scan: int | None = Field(None, ge=50)
    grid_size: int | None = Field(None, gt=0)

    model_config = {"extra": "forbid"}


class RunConfig(BaseModel):
    label: str | None = None
    chart: ChartBlock
    connection: ConnectionBlock
    twistor: TwistorBlock = Field(default_factory=TwistorBlock)
    checks: list[SuiteName] = Field(..., min_length=1)
    seed: int
    tolerances: dict[str, float] = Field(default_factory=dict)
    samples: SampleBlock = Field(default_factory=SampleBlock)

    model_config = {"extra": "forbid"}

    def build_chart(self) -> Chart:
        return self.chart.build()

    def build_twistor_chart(self) -> TwistorChart:
        return TwistorChart(self.build_chart(), self.twistor.sign, tuple(self.twistor.fiber_range))

    def build_connection(self) -> ConnectionSpec:
        """Parse the connection block into a spec.

        Raises:
            ConfigError: naming the offending field and, for syntax errors, the column.
        """
        chart = self.build_chart()
        block = self.connection
        label = block.label or self.label
        if block.flat:
            return ConnectionSpec.flat(chart)
        if block.gamma is not None:
            parsed = []
            for k, plane in enumerate(block.gamma):
                rows = []
                for i, row in enumerate(plane):
                    rows.append(tuple(
                        _parse(f"connection.gamma[{k}][{i}][{j}]", text, chart) for j, text in enumerate(row)
                    ))
                parsed.append(tuple(rows))
            return ConnectionSpec.from_gamma(chart, parsed, label or "gamma")
        if block.metric is not None:
            e, f, g = (
                _parse(f"connection.metric.{key}", getattr(block.metric, key), chart) for key in ("E", "F", "G")
            )
            return ConnectionSpec.from_metric(chart, e, f, g, label or "levi-civita")
        mapping = [_parse(f"connection.pullback.map[{i}]", text, chart) for i, text in enumerate(block.pullback.map)]
        return ConnectionSpec.from_chart_map(chart, mapping, label or "pullback")


def _parse(path: str, text: str, chart: Chart):
    try:
        return parse_expression(text, chart.names)
    except ExpressionSyntaxError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        path = ".".join(str(p) for p in error["loc"]) or "<root>"
        parts.append(f"{path}: {error['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run config, including its expressions and tolerance keys.

    Raises:
        ConfigError: with a path-qualified message.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
    try:
        config.build_connection()
    except DomainError as exc:
        raise ConfigError(f"connection: {exc}") from None
    resolve_tolerances(config.tolerances)
    return config


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text)
