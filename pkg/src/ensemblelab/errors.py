class EnsembleLabError(Exception):
    """Base class for every error raised by the package."""


class GridError(EnsembleLabError, ValueError):
    pass


class FieldError(EnsembleLabError, ValueError):
    pass


class StencilError(EnsembleLabError, ValueError):
    pass


class VariantError(EnsembleLabError, TypeError):
    pass


class DensityError(EnsembleLabError, ValueError):
    pass


class SingularJacobianError(EnsembleLabError, ArithmeticError):
    pass


class CFLError(EnsembleLabError, RuntimeError):
    pass


class CausticError(EnsembleLabError, RuntimeError):
    pass


class NegativeDensityError(EnsembleLabError, RuntimeError):
    pass


class HistoryError(EnsembleLabError, ValueError):
    pass


class PhaseUnwrapError(EnsembleLabError, ValueError):
    pass


class ConfigError(EnsembleLabError, ValueError):
    pass
