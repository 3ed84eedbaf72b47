"""
Custom exceptions for the biphoton HOM toolkit
Provides clear, actionable error messages for parameter, numerical and configuration failures
"""


class BiphotonError(Exception):
    """Base exception for all toolkit errors"""

    def __init__(self, message: str, details: str = "", solution: str = ""):
        """
        Initialize toolkit error with structured message.

        Args:
            message: Brief error description
            details: Specific information about what went wrong
            solution: Clear steps to fix the problem
        """
        self.message = message
        self.details = details
        self.solution = solution

        parts = [message]
        if details:
            parts.append(f"\nDetails: {details}")
        if solution:
            parts.append(f"\nSolution: {solution}")

        super().__init__("\n".join(parts))


# Parameter Errors
class ParameterError(BiphotonError):
    """Base exception for invalid physical parameters"""
    pass


class InvalidParameterError(ParameterError):
    """Raised when a physical parameter is non-finite or out of range"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[INVALID_PARAMETER] Physical parameter is invalid",
            details=details or "A bandwidth, frequency or delay is non-finite or out of range.",
            solution="Bandwidths and the central frequency must be finite and strictly positive"
        )


class DegenerateStateError(ParameterError):
    """Raised when the modulation annihilates the whole biphoton state"""

    def __init__(self, beta: float, details: str = ""):
        self.beta = beta
        super().__init__(
            message="[DEGENERATE_STATE] Modulated state has vanishing norm",
            details=details or f"The normalization denominator vanishes at beta={beta!r} s.",
            solution="Move beta away from the zero of the modulation or switch the modulation kind"
        )


# Numerical Errors
class NumericalError(BiphotonError):
    """Base exception for numerical failures"""
    pass


class QuadratureOrderError(NumericalError):
    """Raised when a quadrature rule cannot resolve the integrand"""

    def __init__(self, details: str = "", required_order: int | None = None):
        self.required_order = required_order
        hint = f" (at least {required_order})" if required_order else ""
        super().__init__(
            message="[QUADRATURE_ORDER] Quadrature order too low",
            details=details or "The integrand is undersampled by the requested rule.",
            solution=f"Increase the quadrature order{hint} or shorten the gate window"
        )


class SeriesConvergenceError(NumericalError):
    """Raised when a series does not converge within its term budget"""

    def __init__(self, details: str = "", terms: int = 0):
        self.terms = terms
        super().__init__(
            message="[SERIES_CONVERGENCE] Series did not converge",
            details=details or f"The tail bound was not met after {terms} terms.",
            solution="Use the adaptive Hermite scaling or relax the tolerance"
        )


class SpecialFunctionDomainError(NumericalError):
    """Raised when a special function is called outside its domain"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[DOMAIN] Argument outside the function domain",
            details=details or "The argument violates the function precondition.",
            solution="Check the sign and range of the arguments"
        )


class SpecialFunctionOverflowError(NumericalError):
    """Raised when a special function result is not representable"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[OVERFLOW] Result exceeds the floating-point range",
            details=details or "The result overflows double precision.",
            solution="Use the exponentially scaled variant of the function"
        )


class TruncationError(NumericalError):
    """Raised when a truncated Fock basis loses too much trace"""

    def __init__(self, deficit: float, dim: int, suggested_dim: int | None = None):
        self.deficit = deficit
        self.dim = dim
        self.suggested_dim = suggested_dim
        suggestion = f"Use dim >= {suggested_dim}" if suggested_dim else "Increase the truncation dimension"
        super().__init__(
            message="[TRUNCATION] Truncated basis too small",
            details=f"Trace deficit {deficit:.3e} at dim={dim}.",
            solution=suggestion
        )


class InternalConsistencyError(NumericalError):
    """Raised when two independent routes to one quantity disagree"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[INTERNAL_CHECK] Internal consistency check failed",
            details=details or "Two independent evaluations disagree beyond tolerance.",
            solution="Report the parameters; this indicates a numerical defect"
        )


# Resonance Errors
class ResonanceError(BiphotonError):
    """Base exception for resonance search failures"""
    pass


class NoResonanceError(ResonanceError):
    """Raised when no D_S minimum lies inside the search bracket"""

    def __init__(self, order_n: int, details: str = ""):
        self.order_n = order_n
        super().__init__(
            message="[NO_RESONANCE] No minimum inside the search bracket",
            details=details or f"Resonance n={order_n} is not resolved around its seed.",
            solution="Use a lower resonance order; dips broaden and merge at large beta"
        )


class ShallowDipError(ResonanceError):
    """Raised when a dip never crosses the requested level"""

    def __init__(self, level: float, details: str = ""):
        self.level = level
        super().__init__(
            message="[SHALLOW_DIP] Dip does not cross the half level",
            details=details or f"D_S stays above {level} on the flank.",
            solution="Use level='half_prominence' or a more entangled state"
        )


class PeakUnresolvedError(ResonanceError):
    """Raised when a Schmidt-number peak is too small to measure"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[PEAK_UNRESOLVED] Schmidt-number peak below threshold",
            details=details or "K at the resonance does not rise above its baseline.",
            solution="Check the modulation kind and the resonance order"
        )


# Configuration Errors
class ConfigurationError(BiphotonError):
    """Base exception for job configuration failures"""
    pass


class InvalidConfigError(ConfigurationError):
    """Raised when a job file or flag value is invalid"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[CONFIG] Invalid configuration",
            details=details or "The job configuration could not be parsed.",
            solution="Fix the offending key; run 'python hom_manager.py sweep --help' for the key list"
        )


class UnknownFigureError(ConfigurationError):
    """Raised when a figure preset id is not recognized"""

    def __init__(self, figure_id: str):
        self.figure_id = figure_id
        super().__init__(
            message="[UNKNOWN_FIGURE] Unknown figure preset",
            details=f"'{figure_id}' is not one of fig2, fig4, fig5, fig6, fig7.",
            solution="Run 'python hom_manager.py figure --help' to list the presets"
        )


class InvalidEstimatorError(ConfigurationError):
    """Raised when an estimator set is empty or incompatible with the job"""

    def __init__(self, details: str = ""):
        super().__init__(
            message="[ESTIMATOR] Invalid estimator selection",
            details=details or "The estimator set is empty or does not fit the modulation kind.",
            solution="Pick estimators valid for the modulation kind of the job"
        )
