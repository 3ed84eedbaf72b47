"""
Schmidt decomposition engine
Exact Gaussian spectra and numerical, perturbative and heuristic Schmidt numbers of modulated states
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from scipy import special

from biphoton.models import (
    DEGENERACY_THRESHOLD,
    BiphotonState,
    ModulationKind,
    SpdcParams,
    derived_constants,
)
from biphoton.utils.exceptions import (
    DegenerateStateError,
    InternalConsistencyError,
    InvalidParameterError,
    SpecialFunctionDomainError,
    TruncationError,
)
from biphoton.utils.specfun import bessel_i0e, g_polynomial, g_polynomial_table, mehler_sum
from homlab import settings

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-9
PURITY_TOLERANCE = 1e-10
NEGATIVE_EIGENVALUE_FLOOR = -1e-10

# Amplitude terms fall off as z^n, the eigenvalues as z^(2n)
RECONSTRUCTION_TOL = 1e-16

# Above this sigma_p/sigma1 (or beta^2 xi^2) the small-sigma_p form is out of regime
SMALL_SIGMA_P_LIMIT = 0.1

# K - 1 below this maps to an infinite pump bandwidth
SEPARABLE_K_MARGIN = 1e-14


class SchmidtMethod(str, Enum):
    EXACT_GEOMETRIC = 'exact_geometric'
    NUMERIC_DIAG = 'numeric_diag'
    PERTURBATIVE = 'perturbative'
    HEURISTIC = 'heuristic'
    APPROX_CLOSED = 'approx_closed'


@dataclass(frozen=True)
class MehlerParams:
    """
    Parameters of the Mehler form of the Gaussian amplitude.

    s1, s2 are mode widths in rad/s and z in [0, 1) the geometric ratio;
    one_minus_z_sq is carried separately since 1 - z^2 loses every digit
    for strongly entangled states. n_tilde_sq refers to the beta it was
    built with.
    """

    s1: float
    s2: float
    z: float
    one_minus_z_sq: float
    alpha_sq: float
    gamma_sq: float
    xi_sq: float
    n_tilde_sq: float
    beta: float = 0.0

    @property
    def k0(self) -> float:
        """Schmidt number (1 + z^2)/(1 - z^2) of the unmodulated state."""
        return (2.0 - self.one_minus_z_sq) / self.one_minus_z_sq

    @property
    def z_sq(self) -> float:
        return 1.0 - self.one_minus_z_sq if self.z > 0.5 else self.z * self.z


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt eigenvalues in decreasing order with truncation metadata."""

    eigenvalues: np.ndarray
    truncation: int
    trace_deficit: float
    k: float
    method: SchmidtMethod
    k_closed: float | None = None


def _n_tilde_sq(spdc: SpdcParams, alpha_sq: float, beta: float) -> float:
    denominator = 1.0 + math.cos(2.0 * beta * spdc.omega) * math.exp(-beta ** 2 * alpha_sq)
    if denominator < DEGENERACY_THRESHOLD:
        raise DegenerateStateError(beta, f"1 + cos(2 beta Omega) exp(-beta^2 alpha^2) = {denominator:.3e}")
    return 2.0 / denominator


def mehler_params(spdc: SpdcParams, beta: float = 0.0) -> MehlerParams:
    """
    Compute s1, s2 and z of the Mehler decomposition with the Gaussian moments.

    The separable limit returns z = 0, s1 = sigma1, s2 = sigma2.

    Raises:
        InternalConsistencyError: If alpha^2 != s1^2 (1 + z^2)/(1 - z^2)
    """
    constants = derived_constants(spdc)
    n_tilde_sq = _n_tilde_sq(spdc, constants.alpha_sq, beta)
    if spdc.is_separable:
        return MehlerParams(
            s1=spdc.sigma1, s2=spdc.sigma2, z=0.0, one_minus_z_sq=1.0, alpha_sq=constants.alpha_sq,
            gamma_sq=constants.gamma_sq, xi_sq=constants.xi_sq, n_tilde_sq=n_tilde_sq, beta=beta,
        )

    s1_sq, s2_sq, sp_sq = spdc.sigma1 ** 2, spdc.sigma2 ** 2, spdc.sigma_p ** 2
    s1 = (spdc.sigma1 * math.sqrt(spdc.sigma_p) * (s2_sq + sp_sq) ** 0.25
          / ((s1_sq + sp_sq) ** 0.25 * (s1_sq + s2_sq + sp_sq) ** 0.25))
    s2 = s1 * (spdc.sigma2 / spdc.sigma1) * math.sqrt((s1_sq + sp_sq) / (s2_sq + sp_sq))

    upper = s1 ** 2 * (s1_sq + sp_sq)
    lower = s1_sq * sp_sq
    z = math.sqrt(max(upper - lower, 0.0) / (upper + lower))
    one_minus_z_sq = 2.0 * lower / (upper + lower)

    params = MehlerParams(
        s1=s1, s2=s2, z=z, one_minus_z_sq=one_minus_z_sq, alpha_sq=constants.alpha_sq,
        gamma_sq=constants.gamma_sq, xi_sq=constants.xi_sq, n_tilde_sq=n_tilde_sq, beta=beta,
    )
    implied = s1 ** 2 * params.k0
    if abs(implied - constants.alpha_sq) > IDENTITY_TOLERANCE * constants.alpha_sq:
        raise InternalConsistencyError(
            f"alpha^2={constants.alpha_sq:.15g} but s1^2 (1+z^2)/(1-z^2)={implied:.15g}"
        )
    return params


def truncation_dim(mehler: MehlerParams, tol: float | None = None) -> int:
    """Smallest N with z^(2N) < tol, capped by the configured maximum."""
    tol = tol or settings.TOL
    if mehler.z == 0.0:
        return 1
    log_ratio = math.log1p(-mehler.one_minus_z_sq) if mehler.z > 0.5 else 2.0 * math.log(mehler.z)
    needed = int(math.ceil(math.log(tol) / log_ratio))
    return max(1, min(needed, settings.MAX_SCHMIDT_DIM))


def _geometric_eigenvalues(mehler: MehlerParams, dim: int) -> np.ndarray:
    if mehler.z == 0.0:
        return np.array([1.0])
    n = np.arange(dim)
    log_ratio = math.log1p(-mehler.one_minus_z_sq) if mehler.z > 0.5 else 2.0 * math.log(mehler.z)
    return mehler.one_minus_z_sq * np.exp(n * log_ratio)


def _k_from(eigenvalues: np.ndarray) -> float:
    return 1.0 / float(np.sum(eigenvalues ** 2))


def schmidt_standard(spdc: SpdcParams, tol: float | None = None) -> SchmidtSpectrum:
    """
    Exact geometric spectrum (1 - z^2) z^(2n) of the unmodulated state.

    Raises:
        InternalConsistencyError: If the closed-form K and 1/sum(lambda^2) disagree
    """
    mehler = mehler_params(spdc)
    dim = truncation_dim(mehler, tol)
    eigenvalues = _geometric_eigenvalues(mehler, dim)
    deficit = max(0.0, 1.0 - float(np.sum(eigenvalues)))
    k_closed = mehler.k0
    k_sum = _k_from(eigenvalues)
    if abs(k_sum - k_closed) > 1e-10 * k_closed:
        raise InternalConsistencyError(f"Geometric K {k_sum:.15g} differs from (1+z^2)/(1-z^2)={k_closed:.15g}")
    return SchmidtSpectrum(eigenvalues=eigenvalues, truncation=dim, trace_deficit=deficit, k=k_closed,
                           method=SchmidtMethod.EXACT_GEOMETRIC, k_closed=k_closed)


def sigma_p_from_k(k: float, sigma1: float, sigma2: float) -> float:
    """
    Pump bandwidth giving Schmidt number k for the given signal bandwidths.

    Returns math.inf when k is within SEPARABLE_K_MARGIN of 1.

    Raises:
        SpecialFunctionDomainError: If k <= 1
    """
    if not math.isfinite(k) or k <= 1.0:
        raise SpecialFunctionDomainError(f"Schmidt number must exceed 1, got {k!r}")
    if k - 1.0 < SEPARABLE_K_MARGIN:
        return math.inf
    half_sum = 0.5 * (sigma1 ** 2 + sigma2 ** 2)
    product = sigma1 ** 2 * sigma2 ** 2 / ((k - 1.0) * (k + 1.0))
    # sqrt(a^2 + b) - a without cancellation
    return math.sqrt(product / (math.sqrt(half_sum ** 2 + product) + half_sum))


def _require_cosine(state: BiphotonState) -> None:
    if state.kind is ModulationKind.SINE:
        raise InvalidParameterError("Schmidt analysis of modulated states supports cosine modulation only")
    if state.spdc.is_separable:
        raise InvalidParameterError("Modulated Schmidt analysis needs a finite pump bandwidth")


def _modulation_argument(mehler: MehlerParams, beta: float) -> float:
    """x = beta^2 s1^2 / 2 of the displacement polynomials."""
    return 0.5 * (beta * mehler.s1) ** 2


def scalar_product_basis(p: int, n: int, beta: float, mehler: MehlerParams, omega: float) -> float:
    """
    Real scalar product of the p-th Schmidt mode with the cosine-modulated n-th mode.

    cos(beta Omega) and sin(beta Omega) select the parity of p - n; the
    displacement factor exp(-beta^2 s1^2 / 4) is included.
    """
    if p < 0 or n < 0:
        raise SpecialFunctionDomainError(f"Mode indices must be non-negative, got ({p}, {n})")
    x = _modulation_argument(mehler, beta)
    m = abs(p - n)
    magnitude = g_polynomial(p, n, x) * math.exp(-0.5 * x)
    if m % 2 == 0:
        return math.cos(beta * omega) * (-1) ** (m // 2) * magnitude
    return math.sin(beta * omega) * (-1) ** ((m + 1) // 2) * magnitude


def scalar_product_matrix(mehler: MehlerParams, beta: float, omega: float, dim: int) -> np.ndarray:
    """All scalar products for p, n < dim; symmetric and real."""
    x = _modulation_argument(mehler, beta)
    table = g_polynomial_table(dim, x) * math.exp(-0.5 * x)
    index = np.arange(dim)
    m = np.abs(index[:, None] - index[None, :])
    even_sign = np.where((m // 2) % 2 == 0, 1.0, -1.0)
    odd_sign = np.where(((m + 1) // 2) % 2 == 0, 1.0, -1.0)
    phase = np.where(m % 2 == 0, math.cos(beta * omega) * even_sign, math.sin(beta * omega) * odd_sign)
    return phase * table


def gram_matrix(mehler: MehlerParams, beta: float, omega: float, dim: int) -> np.ndarray:
    """Overlaps of the modulated modes, 1/2 (delta + scalar products at doubled beta)."""
    return 0.5 * np.eye(dim) + 0.5 * scalar_product_matrix(mehler, 2.0 * beta, omega, dim)


def _modulated_setup(state: BiphotonState, dim: int | None, tol: float | None):
    _require_cosine(state)
    mehler = mehler_params(state.spdc, state.beta)
    dim = dim or truncation_dim(mehler, tol)
    return mehler, dim, _geometric_eigenvalues(mehler, dim)


def reduced_density_matrix(state: BiphotonState, dim: int | None = None, tol: float | None = None) -> np.ndarray:
    """
    Reduced density matrix of photon 1 in the Schmidt basis of the unmodulated state.

    Raises:
        TruncationError: If the trace deficit exceeds the configured tolerance
    """
    mehler, dim, eigenvalues = _modulated_setup(state, dim, tol)
    products = scalar_product_matrix(mehler, state.beta, state.spdc.omega, dim)
    weighted = products * np.sqrt(eigenvalues)[None, :]
    rho = mehler.n_tilde_sq * (weighted @ weighted.T)

    deficit = 1.0 - float(np.trace(rho))
    if deficit > settings.TRACE_TOL:
        x = _modulation_argument(mehler, state.beta)
        suggested = dim + int(math.ceil(x + 10.0 * math.sqrt(x))) + 10
        if dim >= settings.MAX_SCHMIDT_DIM:
            suggested = None
        raise TruncationError(deficit, dim, suggested)
    return rho


def _spectrum(values: np.ndarray, dim: int, method: SchmidtMethod, k: float | None = None) -> SchmidtSpectrum:
    ordered = np.sort(values)[::-1]
    ordered = ordered[ordered > 0.0]
    deficit = max(0.0, 1.0 - float(np.sum(ordered)))
    return SchmidtSpectrum(eigenvalues=ordered, truncation=dim, trace_deficit=deficit,
                           k=k if k is not None else _k_from(ordered), method=method)


def schmidt_numeric(state: BiphotonState, dim: int | None = None, tol: float | None = None) -> SchmidtSpectrum:
    """
    Schmidt spectrum by symmetric eigen-decomposition of the reduced density matrix.

    Raises:
        InternalConsistencyError: If the eigenvalue and Frobenius purities disagree
    """
    rho = reduced_density_matrix(state, dim, tol)
    values = scipy.linalg.eigh(rho, eigvals_only=True)
    if values.min() < NEGATIVE_EIGENVALUE_FLOOR:
        raise InternalConsistencyError(f"Density matrix eigenvalue {values.min():.3e} below the PSD floor")
    values = np.clip(values, 0.0, None)

    purity = float(np.sum(values ** 2))
    frobenius = float(np.sum(rho ** 2))
    if abs(purity - frobenius) > PURITY_TOLERANCE:
        raise InternalConsistencyError(f"Purity {purity:.15g} from eigenvalues vs {frobenius:.15g} from Frobenius")

    spectrum = _spectrum(values, rho.shape[0], SchmidtMethod.NUMERIC_DIAG, k=1.0 / purity)
    logger.debug(f"Numeric K={spectrum.k:.10g} at beta={state.beta:.6g} s (dim={rho.shape[0]})")
    return spectrum


def schmidt_perturbative(state: BiphotonState, dim: int | None = None, tol: float | None = None) -> SchmidtSpectrum:
    """Diagonal of the density matrix taken as the spectrum; the deficit is kept, not renormalized."""
    mehler, dim, eigenvalues = _modulated_setup(state, dim, tol)
    products = scalar_product_matrix(mehler, state.beta, state.spdc.omega, dim)
    diagonal = mehler.n_tilde_sq * (products ** 2 @ eigenvalues)
    return _spectrum(diagonal, dim, SchmidtMethod.PERTURBATIVE)


def schmidt_heuristic(state: BiphotonState, dim: int | None = None, tol: float | None = None) -> SchmidtSpectrum:
    """
    Laguerre-weighted geometric spectrum.

    lambda_m [1 + e^(-b^2 s1^2) cos(2 b W) L_m(2 b^2 s1^2)] / [1 + e^(-b^2 a^2) cos(2 b W)]
    """
    mehler, dim, eigenvalues = _modulated_setup(state, dim, tol)
    beta, omega = state.beta, state.spdc.omega
    y = 2.0 * (beta * mehler.s1) ** 2
    laguerre = special.eval_laguerre(np.arange(dim), y)
    numerator = 1.0 + math.exp(-0.5 * y) * math.cos(2.0 * beta * omega) * laguerre
    values = eigenvalues * numerator * 0.5 * mehler.n_tilde_sq

    deficit = 1.0 - float(np.sum(values))
    if abs(deficit) > settings.TRACE_TOL:
        logger.warning(f"Heuristic spectrum misses unit trace by {deficit:.3e} at dim={dim}")
    return _spectrum(values, dim, SchmidtMethod.HEURISTIC)


def approx_k_closed(state: BiphotonState) -> float:
    """
    Closed-form Schmidt number of the heuristic spectrum.

    K0 (1 + e^(-b^2 a^2) c)^2 / (1 + 2R + R^2 I0(4 eta^2 z^2)), c = cos(2 beta Omega),
    R = c exp(-eta^2 (1 + z^4)), eta^2 = b^2 s1^2 / (1 - z^4).
    """
    _require_cosine(state)
    mehler = mehler_params(state.spdc, state.beta)
    beta = state.beta
    cos2 = math.cos(2.0 * beta * state.spdc.omega)
    z_sq = mehler.z_sq
    one_minus_z4 = mehler.one_minus_z_sq * (1.0 + z_sq)
    eta_sq = (beta * mehler.s1) ** 2 / one_minus_z4
    ratio = cos2 * math.exp(-eta_sq * (1.0 + z_sq ** 2))
    # R^2 I0(u) with the exponential folded into the scaled Bessel function
    bessel_term = cos2 ** 2 * bessel_i0e(4.0 * eta_sq * z_sq) * math.exp(-2.0 * eta_sq * mehler.one_minus_z_sq ** 2)
    numerator = (1.0 + math.exp(-beta ** 2 * mehler.alpha_sq) * cos2) ** 2
    return mehler.k0 * numerator / (1.0 + 2.0 * ratio + bessel_term)


def approx_k_small_sigma_p(state: BiphotonState) -> float:
    """
    Small-sigma_p form K0 (1 + c - bc)^2 / [(1 + c - bc/2)^2 + c^2 b^2 / 4], b = beta^2 xi^2.

    Logs a regime warning outside sigma_p << sigma1 or beta^2 xi^2 << 1.
    """
    _require_cosine(state)
    spdc = state.spdc
    mehler = mehler_params(spdc, state.beta)
    b = state.beta ** 2 * mehler.xi_sq
    if spdc.sigma_p_ratio > SMALL_SIGMA_P_LIMIT or b > SMALL_SIGMA_P_LIMIT:
        logger.warning(
            f"Small-sigma_p Schmidt form used outside its regime "
            f"(sigma_p/sigma1={spdc.sigma_p_ratio:.3g}, beta^2 xi^2={b:.3g})"
        )
    c = math.cos(2.0 * state.beta * spdc.omega)
    numerator = (1.0 + c - b * c) ** 2
    denominator = (1.0 + c - 0.5 * b * c) ** 2 + 0.25 * (c * b) ** 2
    if denominator < DEGENERACY_THRESHOLD:
        raise DegenerateStateError(state.beta, f"Small-sigma_p denominator {denominator:.3e}")
    return mehler.k0 * numerator / denominator


def reconstruct_jsa(mehler: MehlerParams, spdc: SpdcParams, omega1, omega2, terms: int | None = None):
    """
    Mehler series N sqrt(pi) sqrt(1 - z^2) sum z^n psi_n(w1~/s1) psi_n(-w2~/s2)
    of the unmodulated, undelayed amplitude.
    """
    terms = terms or truncation_dim(mehler, RECONSTRUCTION_TOL ** 2)
    x = (np.asarray(omega1, dtype=float) - spdc.omega) / mehler.s1
    y = -(np.asarray(omega2, dtype=float) - spdc.omega) / mehler.s2
    norm = 1.0 / math.sqrt(math.pi * mehler.s1 * mehler.s2)
    series = mehler_sum(np.ravel(x), np.ravel(y), mehler.z, terms).reshape(np.shape(x))
    return norm * math.sqrt(math.pi * mehler.one_minus_z_sq) * series


def estimate_k(state: BiphotonState, method: SchmidtMethod | str, tol: float | None = None) -> float:
    """Schmidt number of a state by the named estimator."""
    method = SchmidtMethod(method)
    if method is SchmidtMethod.EXACT_GEOMETRIC:
        return schmidt_standard(state.spdc, tol).k
    if method is SchmidtMethod.NUMERIC_DIAG:
        return schmidt_numeric(state, tol=tol).k
    if method is SchmidtMethod.PERTURBATIVE:
        return schmidt_perturbative(state, tol=tol).k
    if method is SchmidtMethod.HEURISTIC:
        return schmidt_heuristic(state, tol=tol).k
    return approx_k_closed(state)
