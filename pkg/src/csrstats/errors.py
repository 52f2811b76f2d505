"""Exception hierarchy shared by the whole package."""


class CsrStatsError(Exception):
    """Base class for errors raised by csrstats."""


class InputError(CsrStatsError):
    """Invalid or degenerate input (bad files, empty samples, shape mismatch).

    CLI maps this to exit code 2.
    """


class NumericalError(CsrStatsError):
    """A computation broke down numerically (divergent fit, non-finite likelihood).

    CLI maps this to exit code 3.
    """
