"""
Symmetry degree engine
Closed-form, series and quadrature evaluations of D_S and the coincidence probability P_2c
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from biphoton.models import (
    DEGENERACY_THRESHOLD,
    BiphotonState,
    ModulationKind,
    SpdcParams,
    derived_constants,
)
from biphoton.services.quadrature_pool import quadrature_pool
from biphoton.utils.exceptions import (
    DegenerateStateError,
    InternalConsistencyError,
    InvalidParameterError,
    QuadratureOrderError,
    SeriesConvergenceError,
    SpecialFunctionOverflowError,
)
from biphoton.utils.specfun import GAUSS_HERMITE, GAUSS_LEGENDRE, normalized_hermite_table
from homlab import settings

logger = logging.getLogger(__name__)

# |D_S| up to 1 + CLAMP_TOLERANCE is treated as rounding and clamped
CLAMP_TOLERANCE = 1e-6
IMAGINARY_TOLERANCE = 1e-9
MAX_SERIES_TERMS = 5000
MAX_SERIES_ORDER = 320
SMALL_BETA_LIMIT = 0.1


class SymmetryMethod(str, Enum):
    CLOSED_SPDC = 'closed_spdc'
    CLOSED_MODULATED = 'closed_modulated'
    PARITY_SERIES = 'parity_series'
    QUADRATURE = 'quadrature'
    FINITE_GATE = 'finite_gate'


@dataclass(frozen=True)
class SymmetryResult:
    """Symmetry degree with its coincidence probability and the route that produced it."""

    d_s: float
    p_2c: float
    method: SymmetryMethod
    d_s_plus: float | None = None
    d_s_minus: float | None = None
    series_terms_used: int | None = None
    clamped: bool = False


def _finalize(d_s: float, method: SymmetryMethod, numerical: bool = False, **parts) -> SymmetryResult:
    clamped = False
    if abs(d_s) > 1.0:
        if abs(d_s) > 1.0 + CLAMP_TOLERANCE:
            details = f"{method.value} returned D_S={d_s:.12g}, outside [-1, 1]"
            if numerical:
                raise QuadratureOrderError(details)
            raise InternalConsistencyError(details)
        logger.warning(f"Clamping D_S={d_s:.12g} from {method.value} to the unit interval")
        d_s = math.copysign(1.0, d_s)
        clamped = True
    return SymmetryResult(d_s=d_s, p_2c=(1.0 - d_s) / 2.0, method=method, clamped=clamped, **parts)


def _unmodulated_amplitude(spdc: SpdcParams) -> float:
    """Prefactor of the closed form at zero delay, in bandwidth ratios."""
    r2 = spdc.ratio ** 2
    if spdc.is_separable:
        return 2.0 * spdc.ratio / (1.0 + r2)
    rp2 = spdc.sigma_p_ratio ** 2
    return 2.0 * spdc.ratio * math.sqrt(1.0 + r2 + rp2) / (math.sqrt(1.0 + r2) * math.sqrt(rp2 * (1.0 + r2) + 4.0 * r2))


def ds_closed_spdc(spdc: SpdcParams) -> SymmetryResult:
    """
    Closed-form symmetry degree of the unmodulated Gaussian state.

    Always non-negative; the separable limit is taken exactly.
    """
    xi_sq = derived_constants(spdc).xi_sq
    d_s = _unmodulated_amplitude(spdc) * math.exp(-spdc.delta_tau ** 2 * xi_sq)
    return _finalize(d_s, SymmetryMethod.CLOSED_SPDC)


def ds_closed_modulated(state: BiphotonState) -> SymmetryResult:
    """
    Closed-form symmetry degree of a harmonically modulated state.

    Cosine modulation uses the bracket [e^(-b^2 g^2 sp^2) cos 2bW + e^(-b^2 xi^2) cosh 2b dt xi^2]
    over 1 + e^(-b^2 a^2) cos 2bW; sine flips the sign of the cos 2bW terms.

    Raises:
        DegenerateStateError: If the denominator vanishes
    """
    spdc = state.spdc
    if state.kind is ModulationKind.NONE:
        return _finalize(ds_closed_spdc(spdc).d_s, SymmetryMethod.CLOSED_MODULATED)

    constants = derived_constants(spdc)
    beta = state.beta
    dt = spdc.delta_tau
    cos2 = math.cos(2.0 * beta * spdc.omega)
    sign = 1.0 if state.kind is ModulationKind.COSINE else -1.0

    denominator = 1.0 + sign * math.exp(-beta ** 2 * constants.alpha_sq) * cos2
    if denominator < DEGENERACY_THRESHOLD:
        raise DegenerateStateError(beta, f"Closed-form denominator {denominator:.3e}")

    # exp(-dt^2 xi^2 - b^2 xi^2) cosh(2 b dt xi^2) as two Gaussians
    delay_term = 0.5 * (math.exp(-constants.xi_sq * (dt - beta) ** 2) + math.exp(-constants.xi_sq * (dt + beta) ** 2))
    pump_term = math.exp(-dt ** 2 * constants.xi_sq - beta ** 2 * constants.pump_term) * cos2
    d_s = _unmodulated_amplitude(spdc) * (delay_term + sign * pump_term) / denominator
    return _finalize(d_s, SymmetryMethod.CLOSED_MODULATED)


def _d_precision(state: BiphotonState) -> np.ndarray:
    scaled = state.scaled
    a = 0.5 + 0.5 / scaled.r2 ** 2
    c = scaled.pump_precision
    return np.array([[a + c, c], [c, a + c]])


def ds_quadrature_of(amplitude, precision, order: int | None = None) -> SymmetryResult:
    """
    Quadrature oracle for an arbitrary amplitude on nondimensional axes.

    Args:
        amplitude: callable psi(x, y) accepting arrays, normalized to unit norm
        precision: 2x2 matrix P with psi(x, y) psi*(y, x) ~ exp(-X^T P X)
        order: Gauss-Hermite order per principal axis

    Returns:
        SymmetryResult: method 'quadrature'

    Raises:
        QuadratureOrderError: If the imaginary residue or |D_S| exposes undersampling
    """
    order = order or settings.QUAD_ORDER
    rule = quadrature_pool.product_rule(precision, order)
    values = amplitude(rule.x, rule.y) * np.conj(amplitude(rule.y, rule.x))
    overlap = complex(rule.integrate_plain(values))
    if abs(overlap.imag) > IMAGINARY_TOLERANCE:
        raise QuadratureOrderError(f"Imaginary residue {overlap.imag:.3e} at order {order}")
    return _finalize(overlap.real, SymmetryMethod.QUADRATURE, numerical=True)


def ds_quadrature(state: BiphotonState, order: int | None = None) -> SymmetryResult:
    """
    Oracle symmetry degree by 2D Gauss-Hermite quadrature.

    The rule is laid along the principal axes of the Gaussian envelope of
    psi(x, y) psi*(y, x), so narrow pump ridges cost no extra nodes.
    """
    scaled = state.scaled
    precision = _d_precision(state)
    order = order or settings.QUAD_ORDER
    rule = quadrature_pool.product_rule(precision, order)
    x, y = rule.x, rule.y

    log_weight = scaled.log_envelope(x, y) + scaled.log_envelope(y, x) + rule.exponent
    phase = np.exp(-1j * scaled.delta_tau * (x - y))
    values = scaled.norm_sq * np.exp(log_weight) * phase * scaled.modulation_factor(x) * scaled.modulation_factor(y)
    overlap = complex(rule.integrate(values))
    if abs(overlap.imag) > IMAGINARY_TOLERANCE:
        raise QuadratureOrderError(f"Imaginary residue {overlap.imag:.3e} at order {order}")
    return _finalize(overlap.real, SymmetryMethod.QUADRATURE, numerical=True)


@dataclass(frozen=True)
class SeriesScaling:
    """
    Frequency unit s and Mehler coefficient z of the parity series.

    exp(-t (X+Y)^2) = exp(-kappa (X^2+Y^2)) sqrt(1-z^2) sum z^n H_n(X) H_n(Y) / (2^n n!)
    with t = s^2/rp^2; ``weight`` is the Gaussian exponent of each coefficient integral.
    """

    s: float
    z: float
    kappa: float
    weight: float
    one_minus_abs_z: float


def _mehler_coefficients(t: float) -> tuple[float, float, float]:
    root = math.sqrt(1.0 + 4.0 * t * t)
    z = -2.0 * t / (1.0 + root)
    gap = (1.0 + 1.0 / (root + 2.0 * t)) / (1.0 + root)
    kappa = t * gap
    return z, kappa, gap


def series_scaling(state: BiphotonState, scaling: str = 'adaptive') -> SeriesScaling:
    """
    Choose the expansion unit of the parity series.

    'golden' keeps t = 1, i.e. z = -(sqrt(5)-1)/2. 'adaptive' solves
    kappa(t) + t rp^2/(2 xi^2) = 1 so that every coefficient integral
    carries exactly exp(-X^2) and its terms are Poisson-bounded.
    """
    scaled = state.scaled
    if math.isinf(scaled.rp):
        raise InvalidParameterError("The parity series needs a finite pump bandwidth; use ds_separable_limit")
    xi_sq = scaled.r2 ** 2 / (1.0 + scaled.r2 ** 2)
    rp_sq = scaled.rp ** 2

    if scaling == 'golden':
        t = 1.0
    elif scaling == 'adaptive':
        def excess(value: float) -> float:
            return _mehler_coefficients(value)[1] + value * rp_sq / (2.0 * xi_sq) - 1.0

        t = brentq(excess, 0.0, 2.0 * xi_sq / rp_sq, xtol=1e-15, rtol=1e-15, maxiter=200)
    else:
        raise InvalidParameterError(f"Unknown series scaling {scaling!r}")

    z, kappa, gap = _mehler_coefficients(t)
    s = math.sqrt(t) * scaled.rp
    return SeriesScaling(s=s, z=z, kappa=kappa, weight=kappa + s * s / (2.0 * xi_sq), one_minus_abs_z=gap)


def ds_parity_series(state: BiphotonState, tol: float | None = None, scaling: str = 'adaptive',
                     order: int | None = None) -> SymmetryResult:
    """
    Symmetry degree from the Hermite expansion of the pump ridge.

    Even-index terms build D_S+ from the even part of phi_12, odd-index terms
    build D_S- from its odd part; D_S = D_S+ - D_S-.

    Args:
        state: normalized state with finite sigma_p
        tol: tail tolerance of the geometric bound
        scaling: 'adaptive' (default) or 'golden'
        order: Gauss-Hermite order of the coefficient integrals

    Raises:
        SeriesConvergenceError: If the tail bound is not met within the term budget
    """
    tol = tol or settings.TOL
    scaled = state.scaled
    plan = series_scaling(state, scaling)

    bandwidth = plan.s * (abs(scaled.beta) + abs(scaled.delta_tau))
    mean = 0.5 * bandwidth ** 2
    n_min = int(math.ceil(mean + 10.0 * math.sqrt(mean) + 10.0))
    order = order or min(max(settings.SERIES_ORDER, n_min + 20), MAX_SERIES_ORDER)
    max_terms = min(MAX_SERIES_TERMS, order)

    rule = quadrature_pool.get_rule(GAUSS_HERMITE, order)
    X = rule.nodes / math.sqrt(plan.weight)

    def carrier(points):
        return np.exp(-1j * scaled.delta_tau * plan.s * points) * scaled.modulation_factor(plan.s * points)

    forward, mirrored = carrier(X), carrier(-X)
    even_part = rule.weights * 0.5 * (forward + mirrored)
    odd_part = rule.weights * 0.5 * (forward - mirrored)

    # nodes are rescaled by 1/sqrt(weight), hence the 1/weight on |I_n|^2
    prefactor = (scaled.norm_sq * plan.s ** 2 * math.sqrt(plan.one_minus_abs_z * (1.0 + abs(plan.z)))
                 * math.sqrt(math.pi) / plan.weight)
    plus = minus = 0.0
    previous_term = math.inf
    power = 1.0
    terms = 0
    converged = False

    try:
        polynomials = normalized_hermite_table(max_terms - 1, X)
    except SpecialFunctionOverflowError as e:
        raise SeriesConvergenceError(f"Coefficient integrals overflow with {scaling} scaling: {e}", terms=0)

    for n in range(max_terms):
        coefficient = np.dot(polynomials[n], even_part if n % 2 == 0 else odd_part)
        term = prefactor * power * (coefficient.real ** 2 + coefficient.imag ** 2)
        if not math.isfinite(term):
            raise SeriesConvergenceError(f"Non-finite series term at n={n} with {scaling} scaling", terms=n)
        if n % 2 == 0:
            plus += term
        else:
            minus += abs(term)
        terms = n + 1
        power *= plan.z
        if n >= n_min and max(abs(term), abs(previous_term)) / plan.one_minus_abs_z < tol:
            converged = True
            break
        previous_term = term

    if not converged:
        raise SeriesConvergenceError(
            f"Tail bound {tol:.1e} not met after {terms} terms ({scaling} scaling, z={plan.z:.6f})", terms=terms
        )

    logger.debug(f"Parity series converged after {terms} terms (z={plan.z:.6f}, s={plan.s:.4g})")
    return _finalize(plus - minus, SymmetryMethod.PARITY_SERIES, numerical=True,
                     d_s_plus=plus, d_s_minus=minus, series_terms_used=terms)


def ds_separable_limit(state: BiphotonState, order: int | None = None) -> float:
    """
    Symmetry degree of a separable state, N^2 |integral of phi_12|^2.

    Non-negative by construction.
    """
    scaled = state.scaled
    if not math.isinf(scaled.rp):
        raise InvalidParameterError("ds_separable_limit needs sigma_p = inf")
    xi = scaled.r2 / math.sqrt(1.0 + scaled.r2 ** 2)
    rule = quadrature_pool.get_rule(GAUSS_HERMITE, order or settings.SERIES_ORDER)
    x = math.sqrt(2.0) * xi * rule.nodes
    integrand = np.exp(-1j * scaled.delta_tau * x) * scaled.modulation_factor(x)
    integral = math.sqrt(2.0) * xi * complex(rule.integrate(integrand))
    return scaled.norm_sq * (integral.real ** 2 + integral.imag ** 2)


def ds_small_beta_approx(state: BiphotonState, beta: float | None = None) -> float:
    """
    Small-beta form 1 + 2 b cos2bW / (1 + cos2bW - b cos2bW), b = beta^2 xi^2.

    Logs a regime warning when beta^2 xi^2 exceeds 0.1.
    """
    beta = state.beta if beta is None else beta
    spdc = state.spdc
    b = beta ** 2 * derived_constants(spdc).xi_sq
    if b > SMALL_BETA_LIMIT:
        logger.warning(f"beta^2 xi^2 = {b:.3g} is outside the small-beta regime")
    cos2 = math.cos(2.0 * beta * spdc.omega)
    denominator = 1.0 + cos2 - b * cos2
    if abs(denominator) < DEGENERACY_THRESHOLD:
        raise DegenerateStateError(beta, f"Small-beta denominator {denominator:.3e}")
    return 1.0 + 2.0 * b * cos2 / denominator


def finite_gate_required_order(state: BiphotonState, tau_f: float) -> int:
    """Gauss-Legendre order that resolves the sinc kernels and the pump ridge."""
    scaled = state.scaled
    window = 6.0 * max(1.0, scaled.r2)
    gate = state.spdc.sigma1 * tau_f
    ridge = 1.0 if math.isinf(scaled.rp) else max(1.0, 1.0 / scaled.rp)
    return int(math.ceil(1.25 * gate * window + 4.0 * window * ridge)) + 16


def p2c_finite_gate(state: BiphotonState, tau_f: float, order: int | None = None) -> float:
    """
    Coincidence probability for a finite detection window tau_f.

    Integrates psi(x, y) psi*(x + y - y', y') [K(y - y') - K(x - y')] / 2pi
    with K(d) = sin(T d)/d on a Gauss-Legendre cube of +-6 max(sigma).
    Tends to (1 - D_S)/2 as sigma tau_f grows.

    Raises:
        QuadratureOrderError: If the order undersamples the sinc kernels
    """
    if not math.isfinite(tau_f) or tau_f < 0:
        raise InvalidParameterError(f"Gate window must be finite and non-negative, got {tau_f!r}")
    scaled = state.scaled
    required = finite_gate_required_order(state, tau_f)
    order = order or required
    if order < required:
        raise QuadratureOrderError(
            f"Order {order} undersamples the gate window sigma*tau_f={state.spdc.sigma1 * tau_f:.3g}",
            required_order=required,
        )

    gate = state.spdc.sigma1 * tau_f
    if gate == 0.0:
        return 0.0
    window = 6.0 * max(1.0, scaled.r2)
    nodes, weights = quadrature_pool.get_rule(GAUSS_LEGENDRE, order).on_interval(-window, window)

    def kernel(d):
        return gate * np.sinc(gate * d / math.pi)

    pair_weights = np.outer(weights, weights)
    y_kernel = kernel(nodes[:, None] - nodes[None, :]) * pair_weights
    total = 0.0 + 0.0j
    for x, wx in zip(nodes, weights):
        left = scaled.amplitude(x, nodes)
        shifted = x + nodes[:, None] - nodes[None, :]
        right = np.conj(scaled.amplitude(shifted, np.broadcast_to(nodes[None, :], shifted.shape)))
        x_kernel = kernel(x - nodes)[None, :] * pair_weights
        total += wx * np.sum(left[:, None] * right * (y_kernel - x_kernel))

    probability = total / (2.0 * math.pi)
    if abs(probability.imag) > 1e-6:
        logger.warning(f"Finite-gate integral carries an imaginary residue {probability.imag:.3e}")
    logger.debug(f"Finite gate sigma*tau_f={gate:.3g} at order {order}: P2c={probability.real:.12g}")
    return float(probability.real)


def p2c_delta_limit(state: BiphotonState) -> float:
    """Reference value (1 - D_S)/2 of the finite-gate integral."""
    return ds_quadrature(state).p_2c
