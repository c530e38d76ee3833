class CensorlabError(Exception):
    """Base class for errors raised by censorlab."""


class ConfigError(CensorlabError, ValueError):
    """
    Invalid simulation or experiment configuration.

    key: dotted path of the offending field, when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class UndefinedMetricError(CensorlabError, ValueError):
    """A rate or ranking metric is undefined for the supplied slice (e.g. no positives)."""


class SchemaError(CensorlabError, ValueError):
    """
    Tabular input does not match the expected schema.

    rows: 1-based data-row numbers of offending rows (header excluded).
    columns: offending or missing column names.
    """

    def __init__(
        self,
        message: str,
        rows: list[int] | None = None,
        columns: list[str] | None = None,
    ):
        self.rows = list(rows or [])
        self.columns = list(columns or [])
        if self.columns:
            message = f"{message} (columns: {', '.join(self.columns)})"
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:20])
            more = f" and {len(self.rows) - 20} more" if len(self.rows) > 20 else ""
            message = f"{message} (rows: {shown}{more})"
        super().__init__(message)


class ConvergenceError(CensorlabError, RuntimeError):
    """SMO stopped at max_iter before the KKT violation fell below tolerance."""

    def __init__(self, max_violation: float, iterations: int, tol: float):
        self.max_violation = max_violation
        self.iterations = iterations
        self.tol = tol
        super().__init__(
            f"SMO did not converge after {iterations} iterations: "
            f"max KKT violation {max_violation:.3e} > tol {tol:.1e}"
        )


class RealizationError(CensorlabError, RuntimeError):
    """A single simulation realization failed; carries its index."""

    def __init__(self, realization_index: int, cause: BaseException):
        self.realization_index = realization_index
        self.cause = cause
        super().__init__(
            f"realization {realization_index} failed: {type(cause).__name__}: {cause}"
        )
