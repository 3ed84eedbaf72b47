"""
Biphoton state models
Parameter records, normalization and point evaluation of joint spectral amplitudes
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property

import numpy as np

from biphoton.services.quadrature_pool import quadrature_pool
from biphoton.utils.exceptions import DegenerateStateError, InvalidParameterError
from biphoton.utils.validators import ParameterValidator
from homlab import settings

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

# sigma_p above this fraction of the carrier breaks the narrow-band detection model
NARROW_BAND_RATIO = 0.1

# Smallest admissible 1 +/- cos(2 beta Omega) exp(-beta^2 alpha^2)
DEGENERACY_THRESHOLD = 1e-12

# Laboratory parameters of the reference configuration (angular units)
REFERENCE_SIGMA = 2.0 * math.pi * 10e12
REFERENCE_OMEGA = 2.0 * math.pi * 844.5e12


def _require(check: tuple[bool, str]) -> None:
    is_valid, error = check
    if not is_valid:
        raise InvalidParameterError(error)


class ModulationKind(str, Enum):
    NONE = 'none'
    COSINE = 'cosine'
    SINE = 'sine'


@dataclass(frozen=True)
class SpdcParams:
    """
    Physical parameters of the Gaussian SPDC amplitude.

    Bandwidths and the carrier are angular frequencies (rad/s), delays are
    in seconds. ``sigma_p=math.inf`` is the separable limit.
    """

    sigma1: float
    sigma2: float
    sigma_p: float
    omega: float
    tau1: float = 0.0
    tau2: float = 0.0

    def __post_init__(self):
        _require(ParameterValidator.validate_positive('sigma1', self.sigma1))
        _require(ParameterValidator.validate_positive('sigma2', self.sigma2))
        _require(ParameterValidator.validate_sigma_p(self.sigma_p))
        _require(ParameterValidator.validate_positive('omega', self.omega))
        _require(ParameterValidator.validate_time('tau1', self.tau1))
        _require(ParameterValidator.validate_time('tau2', self.tau2))
        if self.narrow_band_warning:
            logger.warning(
                f"sigma_p={self.sigma_p:.4g} rad/s exceeds {NARROW_BAND_RATIO} of the carrier; "
                f"the narrow-band coincidence model is stretched"
            )

    @property
    def delta_tau(self) -> float:
        return self.tau2 - self.tau1

    @property
    def is_separable(self) -> bool:
        return math.isinf(self.sigma_p)

    @property
    def narrow_band_warning(self) -> bool:
        return not self.is_separable and self.sigma_p > NARROW_BAND_RATIO * self.omega

    @property
    def ratio(self) -> float:
        """Bandwidth ratio r = sigma2/sigma1."""
        return self.sigma2 / self.sigma1

    @property
    def sigma_p_ratio(self) -> float:
        return self.sigma_p / self.sigma1

    def with_delta_tau(self, delta_tau: float) -> 'SpdcParams':
        return replace(self, tau2=self.tau1 + delta_tau)

    def with_sigma_p(self, sigma_p: float) -> 'SpdcParams':
        return replace(self, sigma_p=sigma_p)

    def with_ratio(self, ratio: float) -> 'SpdcParams':
        return replace(self, sigma2=self.sigma1 * ratio)

    @classmethod
    def from_ratios(cls, sigma1: float, omega: float, sigma2_ratio: float = 1.0,
                    sigma_p_ratio: float = 1.0, delta_tau: float = 0.0) -> 'SpdcParams':
        """Build parameters from sigma2/sigma1 and sigma_p/sigma1 ratios."""
        return cls(
            sigma1=sigma1,
            sigma2=sigma1 * sigma2_ratio,
            sigma_p=math.inf if math.isinf(sigma_p_ratio) else sigma1 * sigma_p_ratio,
            omega=omega,
            tau1=0.0,
            tau2=delta_tau,
        )


def lab_reference(sigma_p_ratio: float = 0.01, delta_tau: float = 0.0) -> SpdcParams:
    """sigma1 = sigma2 = 2pi x 10 THz at the 2pi x 844.5 THz carrier."""
    return SpdcParams.from_ratios(REFERENCE_SIGMA, REFERENCE_OMEGA, 1.0, sigma_p_ratio, delta_tau)


@dataclass(frozen=True)
class ModulationSpec:
    """Harmonic factor cos(beta w1) or sin(beta w1) applied to arm 1; beta in seconds."""

    kind: ModulationKind = ModulationKind.NONE
    beta: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', ModulationKind(self.kind))
        except ValueError:
            raise InvalidParameterError(f"Unknown modulation kind {self.kind!r}")
        _require(ParameterValidator.validate_non_negative_time('beta', self.beta))
        if self.kind is ModulationKind.NONE:
            object.__setattr__(self, 'beta', 0.0)

    @property
    def delta_l(self) -> float:
        """MZI path-length difference 2 c beta in metres."""
        return 2.0 * SPEED_OF_LIGHT * self.beta

    @classmethod
    def from_delta_l(cls, kind, delta_l: float) -> 'ModulationSpec':
        return cls(kind=kind, beta=delta_l / (2.0 * SPEED_OF_LIGHT))

    def factor(self, omega1):
        """Modulation factor m(omega1)."""
        if self.kind is ModulationKind.COSINE:
            return np.cos(self.beta * np.asarray(omega1, dtype=float))
        if self.kind is ModulationKind.SINE:
            return np.sin(self.beta * np.asarray(omega1, dtype=float))
        return np.ones_like(np.asarray(omega1, dtype=float))


UNMODULATED = ModulationSpec()


@dataclass(frozen=True)
class DerivedConstants:
    """
    Gaussian moments that enter every closed form.

    alpha_sq and xi_sq are in (rad/s)^2; gamma_sq is dimensionless and
    pump_term = gamma_sq * sigma_p^2 keeps a finite value in the separable limit.
    """

    alpha_sq: float
    gamma_sq: float
    pump_term: float
    xi_sq: float


def derived_constants(spdc: SpdcParams) -> DerivedConstants:
    s1, s2 = spdc.sigma1 ** 2, spdc.sigma2 ** 2
    xi_sq = s1 * s2 / (s1 + s2)
    if spdc.is_separable:
        return DerivedConstants(alpha_sq=s1, gamma_sq=0.0, pump_term=xi_sq, xi_sq=xi_sq)

    sp = spdc.sigma_p ** 2
    gamma_sq = s1 * s2 / ((s1 + s2) * sp + 4.0 * s1 * s2)
    return DerivedConstants(
        alpha_sq=s1 * (s2 + sp) / (s1 + s2 + sp),
        gamma_sq=gamma_sq,
        pump_term=gamma_sq * sp,
        xi_sq=xi_sq,
    )


def beta_zero(omega: float) -> float:
    """First antibunching resonance pi/(2 Omega)."""
    return math.pi / (2.0 * omega)


def beta_resonance(n: int, omega: float) -> float:
    """Resonance pi (2n+1)/(2 Omega)."""
    if n < 0:
        raise InvalidParameterError(f"Resonance order must be non-negative, got {n}")
    return math.pi * (2 * n + 1) / (2.0 * omega)


def hom_dip_half_width(spdc: SpdcParams) -> float:
    """Delay at which the unmodulated symmetry degree falls to 1/2 (seconds)."""
    s1, s2 = spdc.sigma1 ** 2, spdc.sigma2 ** 2
    return math.sqrt(math.log(2.0)) * math.sqrt(s1 + s2) / (spdc.sigma1 * spdc.sigma2)


def hom_dip_optical_path(spdc: SpdcParams) -> float:
    return SPEED_OF_LIGHT * hom_dip_half_width(spdc)


@dataclass(frozen=True)
class ScaledState:
    """
    Nondimensional view of a state: frequencies in units of sigma1 around
    the carrier (x = (w - Omega)/sigma1), times in units of 1/sigma1.
    """

    r2: float
    rp: float
    omega: float
    beta: float
    beta_omega: float
    tau1: float
    tau2: float
    kind: ModulationKind
    norm_sq: float

    @property
    def delta_tau(self) -> float:
        return self.tau2 - self.tau1

    @property
    def pump_precision(self) -> float:
        return 0.0 if math.isinf(self.rp) else 1.0 / self.rp ** 2

    def log_envelope(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -0.5 * x ** 2 - 0.5 * (y / self.r2) ** 2 - 0.5 * self.pump_precision * (x + y) ** 2

    def modulation_factor(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ModulationKind.COSINE:
            return np.cos(self.beta_omega + self.beta * x)
        if self.kind is ModulationKind.SINE:
            return np.sin(self.beta_omega + self.beta * x)
        return np.ones_like(x)

    def phase(self, x, y):
        return np.exp(1j * (self.tau1 * np.asarray(x) + self.tau2 * np.asarray(y)))

    def envelope_precision(self) -> np.ndarray:
        """Matrix Q with |psi|^2 proportional to exp(-X^T Q X)."""
        c = self.pump_precision
        return np.array([[1.0 + c, c], [c, 1.0 / self.r2 ** 2 + c]])

    def amplitude(self, x, y):
        """Scaled amplitude sigma1 * psi with the constant carrier phase dropped."""
        return math.sqrt(self.norm_sq) * np.exp(self.log_envelope(x, y)) * self.phase(x, y) * self.modulation_factor(x)


@dataclass(frozen=True)
class BiphotonState:
    """
    Normalized biphoton state.

    norm_sq is the squared normalization constant in (rad/s)^-2;
    ``route`` records whether it came from closed-form Gaussian integrals
    or from quadrature.
    """

    spdc: SpdcParams
    modulation: ModulationSpec
    norm_sq: float
    route: str = 'analytic'

    @property
    def kind(self) -> ModulationKind:
        return self.modulation.kind

    @property
    def beta(self) -> float:
        return self.modulation.beta

    @cached_property
    def scaled(self) -> ScaledState:
        spdc = self.spdc
        s1 = spdc.sigma1
        return ScaledState(
            r2=spdc.sigma2 / s1,
            rp=math.inf if spdc.is_separable else spdc.sigma_p / s1,
            omega=spdc.omega / s1,
            beta=self.beta * s1,
            beta_omega=self.beta * spdc.omega,
            tau1=spdc.tau1 * s1,
            tau2=spdc.tau2 * s1,
            kind=self.kind,
            norm_sq=self.norm_sq * s1 ** 2,
        )

    def with_modulation(self, modulation: ModulationSpec) -> 'BiphotonState':
        return normalize(self.spdc, modulation)

    def total_probability(self, order: int | None = None) -> float:
        """Integral of |psi|^2 on the principal-axis Gauss-Hermite grid."""
        scaled = self.scaled
        rule = quadrature_pool.product_rule(scaled.envelope_precision(), order or settings.QUAD_ORDER)
        values = np.abs(scaled.amplitude(rule.x, rule.y)) ** 2
        return float(rule.integrate_plain(values))


def _unmodulated_norm_sq_scaled(r2: float, rp: float) -> float:
    pump = 0.0 if math.isinf(rp) else 1.0 / rp ** 2
    determinant = 1.0 / r2 ** 2 + (1.0 + 1.0 / r2 ** 2) * pump
    return math.sqrt(determinant) / math.pi


def modulation_overlap(spdc: SpdcParams, beta: float) -> float:
    """cos(2 beta Omega) exp(-beta^2 alpha^2), the interference term of |m|^2."""
    constants = derived_constants(spdc)
    return math.cos(2.0 * beta * spdc.omega) * math.exp(-beta ** 2 * constants.alpha_sq)


def quadrature_norm_sq(spdc: SpdcParams, modulation: ModulationSpec, order: int | None = None) -> float:
    """
    Squared normalization constant from 2D quadrature of |psi|^2.

    Raises:
        DegenerateStateError: If the modulated state has (numerically) zero norm
    """
    s1 = spdc.sigma1
    rp = math.inf if spdc.is_separable else spdc.sigma_p / s1
    envelope_state = ScaledState(
        r2=spdc.sigma2 / s1, rp=rp, omega=spdc.omega / s1, beta=modulation.beta * s1,
        beta_omega=modulation.beta * spdc.omega, tau1=0.0, tau2=0.0, kind=modulation.kind, norm_sq=1.0,
    )
    rule = quadrature_pool.product_rule(envelope_state.envelope_precision(), order or settings.QUAD_ORDER)
    integral = float(rule.integrate(envelope_state.modulation_factor(rule.x) ** 2))
    relative = integral * _unmodulated_norm_sq_scaled(envelope_state.r2, rp)
    if relative < 0.5 * DEGENERACY_THRESHOLD:
        raise DegenerateStateError(modulation.beta, f"Relative norm {relative:.3e} of the modulated state")
    return 1.0 / (integral * s1 ** 2)


def normalize(spdc: SpdcParams, modulation: ModulationSpec = UNMODULATED, route: str = 'auto',
              order: int | None = None) -> BiphotonState:
    """
    Build a normalized state.

    Args:
        spdc: physical parameters
        modulation: harmonic modulation of arm 1
        route: 'auto' (closed form for none/cosine, quadrature for sine),
            'analytic' or 'quadrature'
        order: Gauss-Hermite order of the quadrature route

    Returns:
        BiphotonState: immutable normalized state

    Raises:
        DegenerateStateError: If the modulation annihilates the state
        InvalidParameterError: If the route is unknown
    """
    if route not in ('auto', 'analytic', 'quadrature'):
        raise InvalidParameterError(f"Unknown normalization route {route!r}")

    kind = modulation.kind
    if route == 'quadrature' or (route == 'auto' and kind is ModulationKind.SINE):
        return BiphotonState(spdc, modulation, quadrature_norm_sq(spdc, modulation, order), 'quadrature')

    s1 = spdc.sigma1
    rp = math.inf if spdc.is_separable else spdc.sigma_p / s1
    norm_sq = _unmodulated_norm_sq_scaled(spdc.sigma2 / s1, rp) / s1 ** 2
    if kind is not ModulationKind.NONE:
        overlap = modulation_overlap(spdc, modulation.beta)
        denominator = 1.0 + overlap if kind is ModulationKind.COSINE else 1.0 - overlap
        if denominator < DEGENERACY_THRESHOLD:
            raise DegenerateStateError(modulation.beta, f"1 {'+' if kind is ModulationKind.COSINE else '-'} "
                                                        f"cos(2 beta Omega) exp(-beta^2 alpha^2) = {denominator:.3e}")
        norm_sq *= 2.0 / denominator

    return BiphotonState(spdc, modulation, norm_sq, 'analytic')


def evaluate_jsa(state: BiphotonState, omega1, omega2):
    """
    Joint spectral amplitude at physical angular frequencies, full phase included.

    Returns:
        complex or np.ndarray: psi(omega1, omega2)
    """
    spdc = state.spdc
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    d1 = w1 - spdc.omega
    d2 = w2 - spdc.omega
    exponent = -0.5 * (d1 / spdc.sigma1) ** 2 - 0.5 * (d2 / spdc.sigma2) ** 2
    if not spdc.is_separable:
        exponent = exponent - 0.5 * ((d1 + d2) / spdc.sigma_p) ** 2
    phase = np.exp(1j * (w1 * spdc.tau1 + w2 * spdc.tau2))
    value = math.sqrt(state.norm_sq) * np.exp(exponent) * phase * state.modulation.factor(w1)
    return value if np.ndim(value) else complex(value)


def phi12(state: BiphotonState, omega_tilde):
    """phi_1(w~ + Omega) * conj(phi_2(w~ + Omega)) of the product-form amplitude."""
    spdc = state.spdc
    w = np.asarray(omega_tilde, dtype=float)
    envelope = np.exp(-0.5 * w ** 2 * (1.0 / spdc.sigma1 ** 2 + 1.0 / spdc.sigma2 ** 2))
    phase = np.exp(1j * (w + spdc.omega) * (spdc.tau1 - spdc.tau2))
    return envelope * phase * state.modulation.factor(w + spdc.omega)


def phi12_parity_split(state: BiphotonState, omega_tilde):
    """
    Even and odd parts of phi_12 about the carrier.

    Returns:
        tuple: (even, odd) with even + odd == phi12(omega_tilde)
    """
    forward = phi12(state, omega_tilde)
    mirrored = phi12(state, -np.asarray(omega_tilde, dtype=float))
    return 0.5 * (forward + mirrored), 0.5 * (forward - mirrored)


@dataclass(frozen=True)
class MziTransform:
    """
    Port modulations of an MZI with arm lengths L1 and L2.

    The common factor exp(i w1 (L1 + L2) / 2c) is kept as metadata only;
    a negative L2 - L1 shows up as ``sign`` on the sine port.
    """

    port1: ModulationSpec
    port3: ModulationSpec
    path_sum: float
    sign: int

    def global_phase(self, omega1):
        return np.exp(1j * np.asarray(omega1, dtype=float) * self.path_sum / (2.0 * SPEED_OF_LIGHT))


def mzi_transform_description(length1: float, length2: float) -> MziTransform:
    """
    Map MZI arm lengths (metres) onto the two output-port modulations.

    Raises:
        InvalidParameterError: If a length is negative or not finite
    """
    _require(ParameterValidator.validate_non_negative_time('L1', length1))
    _require(ParameterValidator.validate_non_negative_time('L2', length2))
    difference = length2 - length1
    beta = abs(difference) / (2.0 * SPEED_OF_LIGHT)
    return MziTransform(
        port1=ModulationSpec(ModulationKind.COSINE, beta),
        port3=ModulationSpec(ModulationKind.SINE, beta),
        path_sum=length1 + length2,
        sign=-1 if difference < 0 else 1,
    )
