import math
from unittest import TestCase

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from biphoton.models import (
    REFERENCE_OMEGA,
    REFERENCE_SIGMA,
    ModulationKind,
    ModulationSpec,
    SpdcParams,
    beta_zero,
    hom_dip_half_width,
    lab_reference,
    normalize,
)
from biphoton.services.symmetry_engine import (
    SymmetryMethod,
    ds_closed_modulated,
    ds_closed_spdc,
    ds_parity_series,
    ds_quadrature,
    ds_quadrature_of,
    ds_separable_limit,
    ds_small_beta_approx,
    finite_gate_required_order,
    p2c_delta_limit,
    p2c_finite_gate,
)
from biphoton.utils.exceptions import (
    DegenerateStateError,
    InvalidParameterError,
    QuadratureOrderError,
    SeriesConvergenceError,
)

KINDS = (ModulationKind.COSINE, ModulationKind.SINE)


def _state(sigma_p_ratio, theta=0.0, kind=ModulationKind.COSINE, ratio=1.0, delay=0.0):
    """Normalized state at beta = theta * pi / (2 Omega) and delay in units of 1/sigma1."""
    spdc = SpdcParams.from_ratios(REFERENCE_SIGMA, REFERENCE_OMEGA, ratio, sigma_p_ratio, delay / REFERENCE_SIGMA)
    return normalize(spdc, ModulationSpec(kind, theta * beta_zero(REFERENCE_OMEGA)))


class ClosedFormTests(TestCase):
    """Unit tests for the closed-form symmetry degrees"""

    def test_equal_bandwidths_are_symmetric(self):
        for ratio in (1.0, 0.1, 0.01, math.inf):
            result = ds_closed_spdc(lab_reference(ratio))
            self.assertAlmostEqual(result.d_s, 1.0, places=14)
            self.assertAlmostEqual(result.p_2c, 0.0, places=14)
            self.assertIs(result.method, SymmetryMethod.CLOSED_SPDC)

    def test_separable_unequal_bandwidths(self):
        spdc = SpdcParams.from_ratios(REFERENCE_SIGMA, REFERENCE_OMEGA, 2.0, math.inf)
        self.assertAlmostEqual(ds_closed_spdc(spdc).d_s, 0.8, places=14)

    def test_half_depth_at_dip_half_width(self):
        spdc = lab_reference(0.01)
        delayed = spdc.with_delta_tau(hom_dip_half_width(spdc))
        self.assertAlmostEqual(ds_closed_spdc(delayed).d_s, 0.5, places=12)

    def test_resonant_cosine_antibunches(self):
        state = _state(0.01, theta=1.0)
        result = ds_closed_modulated(state)
        self.assertLessEqual(result.d_s, -0.99)
        self.assertAlmostEqual(result.p_2c, (1.0 - result.d_s) / 2.0, places=15)

    def test_unmodulated_state_delegates(self):
        state = normalize(lab_reference(0.1, delta_tau=5e-15))
        self.assertAlmostEqual(ds_closed_modulated(state).d_s, ds_closed_spdc(state.spdc).d_s, places=15)


class QuadratureOracleTests(TestCase):
    """Unit tests for the Gauss-Hermite oracle"""

    def test_antisymmetrized_amplitude(self):
        """Test that an exchange-antisymmetric amplitude reaches -1"""
        precision = np.array([[1.25, 1.0], [1.0, 1.25]])

        def base(x, y):
            norm = math.sqrt(1.5) / math.pi
            return math.sqrt(norm) * np.exp(-0.5 * x ** 2 - 0.125 * y ** 2 - 0.5 * (x + y) ** 2)

        d_g = ds_quadrature_of(base, precision).d_s
        self.assertAlmostEqual(d_g, math.sqrt(1.5 / 1.640625), places=10)

        def antisymmetric(x, y):
            return (base(x, y) - base(y, x)) / math.sqrt(2.0 - 2.0 * d_g)

        self.assertAlmostEqual(ds_quadrature_of(antisymmetric, precision).d_s, -1.0, delta=1e-8)
        self.assertAlmostEqual(ds_quadrature_of(antisymmetric, precision, order=200).d_s, -1.0, delta=1e-8)


class SymmetryOraclePropertyTests(TestCase):
    """
    Property-based tests comparing every estimator with the quadrature oracle
    """

    @settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-2.0, max_value=1.0),
        st.floats(min_value=0.5, max_value=2.0),
        st.floats(min_value=0.0, max_value=3.0),
    )
    def test_closed_spdc_matches_quadrature(self, log_ratio, ratio, delay):
        """
        Property: For any pump width, bandwidth ratio and delay, the unmodulated
        closed form agrees with quadrature to 1e-8.
        """
        state = _state(10.0 ** log_ratio, ratio=ratio, delay=delay, kind=ModulationKind.NONE)
        self.assertAlmostEqual(ds_closed_spdc(state.spdc).d_s, ds_quadrature(state).d_s, delta=1e-8)

    @settings(max_examples=40, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-2.0, max_value=1.0),
        st.floats(min_value=0.05, max_value=100.0),
        st.floats(min_value=0.0, max_value=3.0),
        st.sampled_from(KINDS),
    )
    def test_closed_modulated_matches_quadrature(self, log_ratio, theta, delay, kind):
        """
        Property: For any cosine or sine modulation the closed form agrees with
        quadrature to 1e-8.
        """
        try:
            state = _state(10.0 ** log_ratio, theta=theta, kind=kind, delay=delay)
            closed = ds_closed_modulated(state).d_s
        except DegenerateStateError:
            return
        self.assertAlmostEqual(closed, ds_quadrature(state).d_s, delta=1e-8)

    @settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-2.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=50.0),
        st.floats(min_value=0.0, max_value=3.0),
        st.sampled_from(KINDS),
    )
    def test_parity_series_matches_quadrature(self, log_ratio, theta, delay, kind):
        """
        Property: For any finite pump width the adaptive parity series agrees
        with quadrature to 1e-7 and D_S+ - D_S- reproduces D_S.
        """
        try:
            state = _state(10.0 ** log_ratio, theta=theta, kind=kind, delay=delay)
        except DegenerateStateError:
            return
        result = ds_parity_series(state)
        self.assertAlmostEqual(result.d_s, ds_quadrature(state).d_s, delta=1e-7)
        self.assertGreaterEqual(result.d_s_plus, 0.0)
        self.assertGreaterEqual(result.d_s_minus, 0.0)
        self.assertAlmostEqual(result.d_s, result.d_s_plus - result.d_s_minus, delta=1e-12)


class ParitySeriesTests(TestCase):
    """Unit tests for the parity decomposition"""

    def test_golden_scaling_at_wide_pump(self):
        state = _state(1.0, theta=1.0)
        golden = ds_parity_series(state, scaling='golden')
        adaptive = ds_parity_series(state)
        self.assertAlmostEqual(golden.d_s, adaptive.d_s, delta=1e-8)

    def test_golden_scaling_diverges_for_narrow_pump(self):
        state = _state(0.01, theta=1.0)
        with self.assertRaises(SeriesConvergenceError):
            ds_parity_series(state, scaling='golden')

    def test_resonance_has_no_even_part(self):
        result = ds_parity_series(_state(0.1, theta=1.0))
        self.assertLess(result.d_s_plus, 1e-10)
        self.assertLess(result.d_s, 0.0)

    def test_doubled_resonance_has_no_odd_part(self):
        result = ds_parity_series(_state(0.1, theta=2.0))
        self.assertLess(result.d_s_minus, 1e-10)

    def test_unknown_scaling_and_separable_input(self):
        with self.assertRaises(InvalidParameterError):
            ds_parity_series(_state(0.1, theta=1.0), scaling='silver')
        with self.assertRaises(InvalidParameterError):
            ds_parity_series(_state(math.inf, theta=1.0))


class SeparableLimitTests(TestCase):
    """Unit tests for the separable-state estimator"""

    def test_matches_closed_form(self):
        for kind in KINDS:
            state = _state(math.inf, theta=0.7, kind=kind, ratio=2.0, delay=0.4)
            self.assertAlmostEqual(ds_separable_limit(state), ds_closed_modulated(state).d_s, delta=1e-9)

    def test_never_negative_at_resonance(self):
        state = _state(math.inf, theta=1.0)
        self.assertGreaterEqual(ds_separable_limit(state), 0.0)

    def test_needs_infinite_pump(self):
        with self.assertRaises(InvalidParameterError):
            ds_separable_limit(_state(0.1, theta=1.0))


class SmallBetaTests(TestCase):
    """Unit tests for the small-beta approximation"""

    def test_agrees_at_first_resonance(self):
        state = _state(0.01, theta=1.0)
        self.assertAlmostEqual(ds_small_beta_approx(state), ds_closed_modulated(state).d_s, delta=0.01)

    def test_warns_outside_regime(self):
        state = _state(0.01, theta=30.0)
        with self.assertLogs('biphoton.services.symmetry_engine', level='WARNING'):
            ds_small_beta_approx(state)

    def test_zero_beta_is_unity(self):
        for ratio in (1.0, 0.1, 0.01):
            self.assertEqual(ds_small_beta_approx(_state(ratio, theta=0.0)), 1.0)
            self.assertAlmostEqual(ds_closed_spdc(lab_reference(ratio)).d_s, 1.0, places=14)


class ZeroModulationPropertyTests(TestCase):
    """
    Property-based tests for the collapse of the modulated estimators at beta = 0
    """

    @settings(max_examples=25, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-2.0, max_value=1.0),
        st.floats(min_value=0.5, max_value=2.0),
        st.floats(min_value=0.0, max_value=3.0),
    )
    def test_cosine_at_zero_beta_is_unmodulated(self, log_ratio, ratio, delay):
        """
        Property: For any pump width, bandwidth ratio and delay, a cosine modulation
        with beta = 0 reproduces the unmodulated symmetry degree in every estimator.
        """
        state = _state(10.0 ** log_ratio, theta=0.0, ratio=ratio, delay=delay)
        expected = ds_closed_spdc(state.spdc).d_s
        self.assertAlmostEqual(ds_closed_modulated(state).d_s, expected, delta=1e-12)
        self.assertAlmostEqual(ds_quadrature(state).d_s, expected, delta=1e-8)
        self.assertAlmostEqual(ds_parity_series(state).d_s, expected, delta=1e-7)


class FiniteGateTests(TestCase):
    """Unit tests for the finite detection window"""

    def setUp(self):
        self.state = normalize(lab_reference(1.0, delta_tau=1.0 / REFERENCE_SIGMA))
        self.limit = p2c_delta_limit(self.state)

    def test_wider_gate_approaches_delta_limit(self):
        gaps = [
            abs(p2c_finite_gate(self.state, gate / REFERENCE_SIGMA, order=96) - self.limit)
            for gate in (0.5, 1.0, 2.0)
        ]
        self.assertGreater(gaps[0], gaps[1])
        self.assertGreater(gaps[1], gaps[2])

    def test_long_gate_matches_delta_limit(self):
        for gate in (10.0, 50.0):
            value = p2c_finite_gate(self.state, gate / REFERENCE_SIGMA)
            self.assertAlmostEqual(value, self.limit, delta=1e-3, msg=f"sigma*tau_f={gate}")

    def test_narrow_pump_ladder_converges(self):
        """Test the gate ladder of a long-lived biphoton approaching the delta-detector limit"""
        state = normalize(lab_reference(0.1, delta_tau=1.0 / REFERENCE_SIGMA))
        limit = p2c_delta_limit(state)
        gaps = [abs(p2c_finite_gate(state, gate / REFERENCE_SIGMA) - limit) for gate in (10.0, 20.0, 50.0)]
        self.assertGreater(gaps[0], gaps[1])
        self.assertGreater(gaps[1], gaps[2])
        self.assertLess(gaps[2], 1e-3)

    def test_vanishing_gate_closes_the_window(self):
        for gate in (1e-3, 1e-2):
            value = p2c_finite_gate(self.state, gate / REFERENCE_SIGMA)
            self.assertLess(abs(value), 1e-4, msg=f"sigma*tau_f={gate}")

    def test_required_order_grows_with_gate(self):
        short = finite_gate_required_order(self.state, 1.0 / REFERENCE_SIGMA)
        long = finite_gate_required_order(self.state, 10.0 / REFERENCE_SIGMA)
        self.assertLess(short, long)

    def test_invalid_gates(self):
        with self.assertRaises(QuadratureOrderError):
            p2c_finite_gate(self.state, 10.0 / REFERENCE_SIGMA, order=20)
        with self.assertRaises(InvalidParameterError):
            p2c_finite_gate(self.state, -1e-15)
        self.assertEqual(p2c_finite_gate(self.state, 0.0), 0.0)
