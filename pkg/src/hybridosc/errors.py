"""Exception hierarchy shared by every module."""


class HybridOscError(Exception):
    """Base class for all simulator errors."""


class LeakageError(HybridOscError):
    """Population reached the top of the Fock truncation; raise ``n_max``."""


class CPTPError(HybridOscError):
    """A dissipative step produced a density matrix that is not positive."""


class DomainError(HybridOscError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(HybridOscError):
    """A fixed-step integration did not converge under step halving."""


class HeraldImpossibleError(HybridOscError):
    """The requested measurement outcome has (numerically) zero probability."""


class AliasError(HybridOscError):
    """The requested Wigner extent exceeds the alias-free range of the grid."""


class CoverageError(HybridOscError):
    """The phase-space grid does not hold enough of the Wigner mass."""


class ConfigError(HybridOscError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(message)


class ParseError(HybridOscError):
    """Syntax or validation error in a sequence or config file."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
