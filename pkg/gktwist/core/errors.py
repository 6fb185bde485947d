"""Exception hierarchy shared by the engine, the config layer and the CLI."""


class GktwistError(Exception):
    """Root of every error raised on purpose by gktwist."""


class ConfigError(GktwistError):
    """Run config is unreadable or violates the schema. Messages carry the field path."""


class ExpressionSyntaxError(GktwistError, ValueError):
    def __init__(self, text: str, position: int, detail: str = ""):
        self.text = text
        self.position = position  # 1-based column
        self.detail = detail
        message = f"syntax error at column {position} in {text!r}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class DomainError(GktwistError, ValueError):
    """Point outside a chart, off a hyperboloid sheet, or a degenerate input."""


class StructureError(GktwistError, ValueError):
    """An endomorphism that should be a generalized complex structure is not one."""


class PositivityError(StructureError):
    """A pair (I, J) does not make <I., J.> positive definite."""


class ChartMismatchError(GktwistError, ValueError):
    pass


class TorsionError(GktwistError, ValueError):
    pass
