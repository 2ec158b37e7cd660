"""Exception and warning types shared across the package."""


class SharedRbfError(Exception):
    """Base class for all package errors."""


class MissingDataError(SharedRbfError):
    """A required cell is empty; complete cases are required."""


class SchemaError(SharedRbfError):
    """Input file or column declaration does not match the expected schema."""


class ParseError(SharedRbfError):
    """A cell could not be parsed as the declared type."""


class DegenerateOutcomeError(SharedRbfError):
    """Outcome vector is constant; min-max scaling is undefined."""


class DegenerateColumnError(SharedRbfError):
    """A continuous or ordinal covariate column is constant."""


class UnknownLevelError(SharedRbfError):
    """A nominal code outside the declared level range was seen at transform time."""


class DegenerateCentersError(SharedRbfError):
    """All RBF centers coincide; the bandwidth formula is undefined."""


class NumericalError(SharedRbfError):
    """A linear-algebra or sampling step failed beyond recoverable retries."""


class ConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap without converging."""


class DegenerateResidualWarning(UserWarning):
    """All residuals are zero; the error-scale proposal rate was floored."""


class SingularDesignWarning(UserWarning):
    """A least-squares design was singular; a small ridge was added."""
