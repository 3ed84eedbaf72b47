"""
Parameter Validator for the biphoton toolkit
Validates physical parameters and sweep grids with detailed error messages
"""

import math
from typing import Tuple


class ParameterValidator:
    """
    Validates physical parameters and provides detailed error information.

    Every check returns (is_valid, error_message); the error message is empty
    when the value is valid. Callers decide which exception to raise.
    """

    MIN_GRID_COUNT = 2
    MAX_GRID_COUNT = 1_000_000

    @staticmethod
    def validate_positive(name: str, value) -> Tuple[bool, str]:
        """
        Check that a bandwidth or frequency is a finite, strictly positive real.

        Args:
            name: Parameter name used in the message
            value: Value to check

        Returns:
            tuple: (is_valid, error_message)
        """
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"{name} must be a real number, found {type(value).__name__}"
        if not math.isfinite(value):
            return False, f"{name} must be finite, found {value!r}"
        if value <= 0:
            return False, f"{name} must be strictly positive, found {value!r}"
        return True, ""

    @staticmethod
    def validate_sigma_p(value) -> Tuple[bool, str]:
        """Pump bandwidth: strictly positive, or +inf for the separable limit."""
        if isinstance(value, (int, float)) and not isinstance(value, bool) and value == math.inf:
            return True, ""
        return ParameterValidator.validate_positive('sigma_p', value)

    @staticmethod
    def validate_time(name: str, value) -> Tuple[bool, str]:
        """Delays may be negative but must be finite."""
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"{name} must be a real number, found {type(value).__name__}"
        if not math.isfinite(value):
            return False, f"{name} must be finite, found {value!r}"
        return True, ""

    @staticmethod
    def validate_non_negative_time(name: str, value) -> Tuple[bool, str]:
        """Time-delay parameters such as beta must be finite and >= 0."""
        is_valid, error = ParameterValidator.validate_time(name, value)
        if not is_valid:
            return is_valid, error
        if value < 0:
            return False, f"{name} must be non-negative, found {value!r}"
        return True, ""

    @staticmethod
    def validate_grid(minimum: float, maximum: float, count: int, spacing: str) -> Tuple[bool, str]:
        """
        Check a sweep grid definition.

        Returns:
            tuple: (is_valid, error_message)
        """
        if spacing not in ('linear', 'log'):
            return False, f"spacing must be 'linear' or 'log', found {spacing!r}"
        if not isinstance(count, int) or isinstance(count, bool):
            return False, f"count must be an integer, found {count!r}"
        if not ParameterValidator.MIN_GRID_COUNT <= count <= ParameterValidator.MAX_GRID_COUNT:
            return False, (
                f"count must lie in [{ParameterValidator.MIN_GRID_COUNT}, "
                f"{ParameterValidator.MAX_GRID_COUNT}], found {count}"
            )
        if not (math.isfinite(minimum) and math.isfinite(maximum)):
            return False, f"grid bounds must be finite, found [{minimum}, {maximum}]"
        if minimum >= maximum:
            return False, f"grid needs min < max, found [{minimum}, {maximum}]"
        if spacing == 'log' and minimum <= 0:
            return False, f"log spacing needs min > 0, found {minimum}"
        return True, ""
