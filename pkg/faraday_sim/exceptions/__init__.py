class FaradaySimError(Exception):
    exit_code = 2


class NumericalError(FaradaySimError):
    exit_code = 2


class InvalidSpinError(NumericalError, ValueError):
    """The spin quantum number is not a positive multiple of 1/2."""


class DimensionMismatchError(NumericalError, ValueError):
    pass


class NumericalConsistencyError(NumericalError):
    """A quantity that must be real carried an imaginary residue."""


class InvalidAxisError(NumericalError, ValueError):
    pass


class InvalidHamiltonianError(NumericalError, ValueError):
    """The generator handed to a propagator is not Hermitian."""


class IntegrationError(NumericalError):
    """The master-equation integrator produced an unphysical state."""


class StepSizeUnderflowError(IntegrationError):
    """Step halving exceeded the configured number of substeps per output interval."""


class GridMismatchError(NumericalError, ValueError):
    pass


class InfiniteNoiseError(NumericalError, ValueError):
    """Zero photons per bin: the shot-noise sigma diverges."""


class UndersampledGridError(NumericalError, ValueError):
    pass


class EnvelopeError(NumericalError, ValueError):
    pass


class FitError(NumericalError):
    """Neither decay model could be fitted."""


class EmptyWindowError(NumericalError, ValueError):
    pass


class UnknownTaskTypeError(FaradaySimError):
    pass
