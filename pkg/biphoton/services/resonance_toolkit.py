"""
Resonance toolkit
Locates antibunching resonances, measures dip and peak half-widths and converts between beta, path length and epsilon
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from biphoton.models import (
    REFERENCE_OMEGA,
    SPEED_OF_LIGHT,
    BiphotonState,
    ModulationKind,
    ModulationSpec,
    SpdcParams,
    derived_constants,
    normalize,
)
from biphoton.services.schmidt_engine import (
    approx_k_closed,
    mehler_params,
    schmidt_numeric,
    sigma_p_from_k,
)
from biphoton.services.symmetry_engine import ds_closed_modulated, ds_closed_spdc
from biphoton.utils.exceptions import (
    BiphotonError,
    InternalConsistencyError,
    InvalidParameterError,
    NoResonanceError,
    PeakUnresolvedError,
    ShallowDipError,
    TruncationError,
)

logger = logging.getLogger(__name__)

HALF_MINIMUM = 'half_minimum'
HALF_PROMINENCE = 'half_prominence'

# Search half-width in units of 2 Omega beta / pi, as a fraction of the seed, capped midway to the neighbours
BRACKET_FRACTION = 0.1
BRACKET_CAP = 0.5

# Crossing tolerance in units of 2 Omega beta / pi (beta0 x 1e-6 corresponds to 1e-6)
CROSSING_XTOL = 1e-9
GOLDEN_TOL = 1e-8

PEAK_THRESHOLD = 1e-3
KNEE_SLOPE = 2e-3


@dataclass(frozen=True)
class ResonanceReport:
    """
    Center, depth and half-widths of one antibunching resonance.

    Widths are measured on the right flank. hwhm_convention names the D_S
    level used ('half_minimum' is D_S = -1/2), k_convention the K level.
    """

    order_n: int
    omega: float
    beta_center: float
    ds_at_center: float
    k_at_center: float | None = None
    k_method: str | None = None
    k0: float | None = None
    hwhm_beta: float | None = None
    hwhm_epsilon: float | None = None
    hwhm_delta_l: float | None = None
    hwhm_convention: str | None = None
    k_peak_beta: float | None = None
    k_hwhm_beta: float | None = None
    k_hwhm_delta_l: float | None = None
    k_surrogate_at_crossing: float | None = None
    k_numeric_at_crossing: float | None = None
    k_convention: str = HALF_PROMINENCE
    wing_dip_depth: float | None = None

    @property
    def beta_center_over_beta0(self) -> float:
        return 2.0 * self.omega * self.beta_center / math.pi

    @property
    def k_hwhm_attoseconds(self) -> float | None:
        return None if self.k_hwhm_beta is None else self.k_hwhm_beta * 1e18


def _theta_to_beta(theta: float, omega: float) -> float:
    return math.pi * theta / (2.0 * omega)


def _cosine_state(spdc: SpdcParams, theta: float) -> BiphotonState:
    return normalize(spdc, ModulationSpec(ModulationKind.COSINE, _theta_to_beta(theta, spdc.omega)))


def _ds_at(spdc: SpdcParams, theta: float) -> float:
    return ds_closed_modulated(_cosine_state(spdc, theta)).d_s


def _k_surrogate_at(spdc: SpdcParams, theta: float) -> float:
    return approx_k_closed(_cosine_state(spdc, theta))


def _k_at_center(spdc: SpdcParams, beta: float) -> tuple[float, str]:
    state = normalize(spdc, ModulationSpec(ModulationKind.COSINE, beta))
    try:
        return schmidt_numeric(state).k, 'numeric_diag'
    except TruncationError as e:
        logger.warning(f"Numeric Schmidt number unavailable at the center ({e.details}); using approx_closed")
        return approx_k_closed(state), 'approx_closed'


def locate_resonance(state: BiphotonState, n: int, compute_k: bool = True) -> ResonanceReport:
    """
    Refine the n-th D_S minimum by golden-section search around pi (2n+1)/(2 Omega).

    Args:
        state: state whose SPDC parameters define the resonance (its modulation is replaced)
        n: resonance order
        compute_k: also diagonalize the density matrix at the center

    Raises:
        NoResonanceError: If no minimum lies inside the bracket
    """
    if n < 0:
        raise InvalidParameterError(f"Resonance order must be non-negative, got {n}")
    spdc = state.spdc
    seed = 2.0 * n + 1.0
    half_width = min(BRACKET_FRACTION * seed, BRACKET_CAP)
    lower, upper = seed - half_width, seed + half_width

    def objective(theta: float) -> float:
        return _ds_at(spdc, theta)

    try:
        result = minimize_scalar(objective, bracket=(lower, seed, upper), method='golden', options={'xtol': GOLDEN_TOL})
    except (ValueError, BiphotonError) as e:
        raise NoResonanceError(n, f"Golden-section search failed around 2 Omega beta / pi = {seed}: {e}")

    theta = float(result.x)
    if not lower < theta < upper:
        raise NoResonanceError(n, f"Minimum at 2 Omega beta / pi = {theta:.6f} left the bracket [{lower}, {upper}]")

    beta_center = _theta_to_beta(theta, spdc.omega)
    report = ResonanceReport(order_n=n, omega=spdc.omega, beta_center=beta_center, ds_at_center=float(result.fun))
    logger.info(f"Resonance n={n}: 2 Omega beta / pi = {theta:.9f}, D_S = {report.ds_at_center:.9f}")

    if compute_k:
        k_value, k_method = _k_at_center(spdc, beta_center)
        report = replace(report, k_at_center=k_value, k_method=k_method, k0=mehler_params(spdc).k0)
    return report


def epsilon_estimate(state: BiphotonState, n: int = 0) -> float:
    """Small-beta half-minimum width arccos(1 - beta_n^2 xi^2 / 3)/pi."""
    beta_n = _theta_to_beta(2.0 * n + 1.0, state.spdc.omega)
    xi_sq = derived_constants(state.spdc).xi_sq
    return math.acos(1.0 - beta_n ** 2 * xi_sq / 3.0) / math.pi


def _right_crossing(function, start: float, limit: float) -> float | None:
    """Bisect the first sign change of function on (start, limit]; function(start) < 0."""
    step = 1e-6
    previous = start
    while previous < limit:
        candidate = min(start + step, limit)
        if function(candidate) > 0.0:
            return bisect(function, previous, candidate, xtol=CROSSING_XTOL)
        previous = candidate
        step *= 2.0
    return None


def hwhm_ds(state: BiphotonState, report: ResonanceReport, level: str = HALF_MINIMUM) -> ResonanceReport:
    """
    Half-width of the D_S dip on its right flank.

    Args:
        state: state defining the SPDC parameters
        report: output of locate_resonance
        level: 'half_minimum' (D_S = -1/2) or 'half_prominence'
            (midpoint between the dip bottom and the unmodulated D_S)

    Raises:
        ShallowDipError: If the dip never crosses the level
    """
    spdc = state.spdc
    if level == HALF_MINIMUM:
        target = -0.5
    elif level == HALF_PROMINENCE:
        target = 0.5 * (report.ds_at_center + ds_closed_spdc(spdc).d_s)
    else:
        raise InvalidParameterError(f"Unknown width level {level!r}")

    if report.ds_at_center >= target:
        raise ShallowDipError(target, f"Dip bottom {report.ds_at_center:.6f} does not reach {target:.6f}")

    center = report.beta_center_over_beta0
    crossing = _right_crossing(lambda theta: _ds_at(spdc, theta) - target, center, center + 1.0)
    if crossing is None:
        raise ShallowDipError(target, f"D_S stays below {target:.6f} up to the next maximum")

    epsilon = crossing - center
    hwhm_beta = _theta_to_beta(epsilon, spdc.omega)
    hwhm_delta_l = 2.0 * SPEED_OF_LIGHT * hwhm_beta
    wavelength = 2.0 * math.pi * SPEED_OF_LIGHT / spdc.omega
    if abs(wavelength * epsilon / 2.0 - hwhm_delta_l) > 1e-12 * hwhm_delta_l:
        raise InternalConsistencyError("Path-length width differs between the lambda and beta routes")

    logger.info(f"D_S half-width ({level}) at n={report.order_n}: epsilon={epsilon:.6g}, "
                f"delta L={hwhm_delta_l * 1e9:.4f} nm")
    return replace(report, hwhm_beta=hwhm_beta, hwhm_epsilon=epsilon, hwhm_delta_l=hwhm_delta_l,
                   hwhm_convention=level)


def hwhm_k(state: BiphotonState, report: ResonanceReport, confirm: bool = True) -> ResonanceReport:
    """
    Half-prominence width of the Schmidt-number peak.

    The closed-form surrogate locates the peak and its (K0 + K_peak)/2 crossing;
    the numeric diagonalization confirms the K value at the crossing. The
    lowest surrogate K in the wings, minus K0, is stored as wing_dip_depth.

    Raises:
        PeakUnresolvedError: If the peak does not rise above K0
    """
    spdc = state.spdc
    k0 = mehler_params(spdc).k0
    center = report.beta_center_over_beta0

    def negative_k(theta: float) -> float:
        return -_k_surrogate_at(spdc, theta)

    window = 0.02
    try:
        result = minimize_scalar(negative_k, bracket=(center - window, center, center + window), method='golden',
                                 options={'xtol': GOLDEN_TOL})
        peak_theta, k_peak = float(result.x), -float(result.fun)
    except ValueError:
        peak_theta, k_peak = center, _k_surrogate_at(spdc, center)

    if k_peak - k0 < PEAK_THRESHOLD * k0:
        raise PeakUnresolvedError(f"Peak K={k_peak:.6g} against baseline K0={k0:.6g}")

    half_level = 0.5 * (k0 + k_peak)
    crossing = _right_crossing(lambda theta: half_level - _k_surrogate_at(spdc, theta), peak_theta, peak_theta + 1.0)
    if crossing is None:
        raise PeakUnresolvedError(f"K never falls to {half_level:.6g} before the next resonance")

    width_theta = crossing - peak_theta
    k_hwhm_beta = _theta_to_beta(width_theta, spdc.omega)

    k_numeric = None
    if confirm:
        try:
            k_numeric = schmidt_numeric(_cosine_state(spdc, crossing)).k
        except TruncationError as e:
            logger.warning(f"Numeric confirmation skipped: {e.details}")

    wings = np.linspace(peak_theta + width_theta, peak_theta + 20.0 * width_theta, 200)
    wing_values = np.array([_k_surrogate_at(spdc, theta) for theta in wings])

    logger.info(f"K half-width at n={report.order_n}: {width_theta:.6g} beta0 units, "
                f"{k_hwhm_beta * 1e18:.4f} as")
    return replace(
        report,
        k0=k0,
        k_peak_beta=_theta_to_beta(peak_theta, spdc.omega),
        k_hwhm_beta=k_hwhm_beta,
        k_hwhm_delta_l=2.0 * SPEED_OF_LIGHT * k_hwhm_beta,
        k_surrogate_at_crossing=_k_surrogate_at(spdc, crossing),
        k_numeric_at_crossing=k_numeric,
        wing_dip_depth=float(wing_values.min() - k0),
    )


@dataclass(frozen=True)
class ResonanceCurve:
    """D_S at the first resonance against the Schmidt number of the unmodulated state."""

    k_values: np.ndarray
    sigma_p_values: np.ndarray
    ds_values: np.ndarray
    slopes: np.ndarray
    knee_k: float | None
    monotone: bool


def ds_vs_k_at_resonance(sigma1: float, sigma2: float, k_grid, omega: float = REFERENCE_OMEGA,
                         threshold: float = KNEE_SLOPE) -> ResonanceCurve:
    """
    Sweep D_S(beta0) over Schmidt numbers via the sigma_p inversion.

    The knee is the first K where |dD_S/dK| drops below threshold.
    """
    k_values = np.asarray(k_grid, dtype=float)
    if k_values.ndim != 1 or k_values.size < 2 or np.any(k_values <= 1.0):
        raise InvalidParameterError("k_grid needs at least two values, all above 1")

    beta0 = _theta_to_beta(1.0, omega)
    sigma_p_values = np.empty_like(k_values)
    ds_values = np.empty_like(k_values)
    for i, k in enumerate(k_values):
        sigma_p = sigma_p_from_k(float(k), sigma1, sigma2)
        spdc = SpdcParams(sigma1=sigma1, sigma2=sigma2, sigma_p=sigma_p, omega=omega)
        sigma_p_values[i] = sigma_p
        ds_values[i] = ds_closed_modulated(normalize(spdc, ModulationSpec(ModulationKind.COSINE, beta0))).d_s

    slopes = np.gradient(ds_values, k_values)
    below = np.flatnonzero(np.abs(slopes) < threshold)
    knee = float(k_values[below[0]]) if below.size else None
    monotone = bool(np.all(np.diff(ds_values) <= 1e-12))
    logger.info(f"D_S(beta0) over K in [{k_values[0]:.4g}, {k_values[-1]:.4g}]: knee at K={knee}")
    return ResonanceCurve(k_values=k_values, sigma_p_values=sigma_p_values, ds_values=ds_values,
                          slopes=slopes, knee_k=knee, monotone=monotone)


@dataclass(frozen=True)
class UnitConversions:
    """Equivalent views of one MZI setting at carrier omega."""

    beta_s: float
    delta_l_m: float
    epsilon: float
    order_n: int
    lambda_fraction: float
    wavelength_m: float

    @property
    def beta_as(self) -> float:
        return self.beta_s * 1e18

    @property
    def delta_l_nm(self) -> float:
        return self.delta_l_m * 1e9


def unit_conversions(omega: float, beta: float | None = None, delta_l: float | None = None,
                     epsilon: float | None = None, order_n: int | None = None) -> UnitConversions:
    """
    Convert one of beta (s), delta_l (m) or epsilon into every other view.

    epsilon = 2 Omega beta / pi - (2n + 1) is taken relative to the nearest
    odd resonance, or to order_n when given.
    """
    given = [value is not None for value in (beta, delta_l, epsilon)]
    if sum(given) != 1:
        raise InvalidParameterError("Give exactly one of beta, delta_l or epsilon")

    if epsilon is not None:
        n = order_n or 0
        beta = _theta_to_beta(2.0 * n + 1.0 + epsilon, omega)
    elif delta_l is not None:
        beta = delta_l / (2.0 * SPEED_OF_LIGHT)

    theta = 2.0 * omega * beta / math.pi
    n = order_n if order_n is not None else max(0, int(round((theta - 1.0) / 2.0)))
    delta = 2.0 * SPEED_OF_LIGHT * beta
    wavelength = 2.0 * math.pi * SPEED_OF_LIGHT / omega
    return UnitConversions(
        beta_s=beta,
        delta_l_m=delta,
        epsilon=epsilon if epsilon is not None else theta - (2.0 * n + 1.0),
        order_n=n,
        lambda_fraction=delta / wavelength,
        wavelength_m=wavelength,
    )
