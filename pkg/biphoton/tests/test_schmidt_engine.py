import math
from unittest import TestCase

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from biphoton.models import (
    REFERENCE_OMEGA,
    REFERENCE_SIGMA,
    ModulationKind,
    ModulationSpec,
    beta_zero,
    evaluate_jsa,
    lab_reference,
    normalize,
)
from biphoton.services.schmidt_engine import (
    SchmidtMethod,
    approx_k_closed,
    approx_k_small_sigma_p,
    estimate_k,
    gram_matrix,
    mehler_params,
    reconstruct_jsa,
    reduced_density_matrix,
    schmidt_heuristic,
    schmidt_numeric,
    schmidt_perturbative,
    schmidt_standard,
    scalar_product_basis,
    scalar_product_matrix,
    sigma_p_from_k,
    truncation_dim,
)
from biphoton.services.symmetry_engine import ds_closed_modulated
from biphoton.utils.exceptions import (
    DegenerateStateError,
    InvalidParameterError,
    SpecialFunctionDomainError,
    TruncationError,
)


def _cosine(sigma_p_ratio, theta):
    return normalize(lab_reference(sigma_p_ratio), ModulationSpec(ModulationKind.COSINE,
                                                                  theta * beta_zero(REFERENCE_OMEGA)))


class StandardSpectrumTests(TestCase):
    """Unit tests for the geometric spectrum of the unmodulated state"""

    def test_sigma_p_roundtrip(self):
        for ratio in (3.0, 1.0, 0.1, 0.01):
            spdc = lab_reference(ratio)
            k = schmidt_standard(spdc).k
            self.assertAlmostEqual(sigma_p_from_k(k, spdc.sigma1, spdc.sigma2) / spdc.sigma_p, 1.0, places=10)

    def test_sigma_p_from_k_limits(self):
        with self.assertRaises(SpecialFunctionDomainError):
            sigma_p_from_k(1.0, REFERENCE_SIGMA, REFERENCE_SIGMA)
        with self.assertRaises(SpecialFunctionDomainError):
            sigma_p_from_k(0.5, REFERENCE_SIGMA, REFERENCE_SIGMA)
        self.assertEqual(sigma_p_from_k(1.0 + 1e-15, REFERENCE_SIGMA, REFERENCE_SIGMA), math.inf)

    def test_separable_state_has_one_mode(self):
        spectrum = schmidt_standard(lab_reference(math.inf))
        self.assertEqual(spectrum.k, 1.0)
        self.assertEqual(spectrum.truncation, 1)

    def test_spectrum_is_geometric(self):
        spectrum = schmidt_standard(lab_reference(0.1))
        ratios = spectrum.eigenvalues[1:] / spectrum.eigenvalues[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
        self.assertLess(spectrum.trace_deficit, 1e-9)
        self.assertIs(spectrum.method, SchmidtMethod.EXACT_GEOMETRIC)

    def test_truncation_grows_with_entanglement(self):
        self.assertLess(truncation_dim(mehler_params(lab_reference(1.0))),
                        truncation_dim(mehler_params(lab_reference(0.01))))

    def test_mehler_series_reconstructs_amplitude(self):
        spdc = lab_reference(1.0)
        state = normalize(spdc)
        grid = spdc.omega + spdc.sigma1 * np.linspace(-2.0, 2.0, 9)
        w1, w2 = np.meshgrid(grid, grid)
        mehler = mehler_params(spdc)
        series = reconstruct_jsa(mehler, spdc, w1, w2)
        direct = evaluate_jsa(state, w1, w2)
        scale = float(np.max(np.abs(direct)))
        np.testing.assert_allclose(series, direct.real, rtol=0.0, atol=1e-12 * scale)
        shallow = reconstruct_jsa(mehler, spdc, w1, w2, terms=truncation_dim(mehler, 1e-16))
        self.assertGreater(float(np.max(np.abs(shallow - direct.real))), float(np.max(np.abs(series - direct.real))))


class ScalarProductTests(TestCase):
    """Unit tests for the modulated-mode overlaps"""

    def test_matrix_matches_scalar_version(self):
        state = _cosine(0.1, 1.3)
        mehler = mehler_params(state.spdc, state.beta)
        matrix = scalar_product_matrix(mehler, state.beta, state.spdc.omega, 6)
        for p in range(6):
            for n in range(6):
                expected = scalar_product_basis(p, n, state.beta, mehler, state.spdc.omega)
                self.assertAlmostEqual(matrix[p, n], expected, delta=1e-12)

    def test_gram_matrix_fixes_the_trace(self):
        """Test n~^2 sum lambda_n G_nn = 1"""
        state = _cosine(1.0, 1.3)
        mehler = mehler_params(state.spdc, state.beta)
        dim = truncation_dim(mehler)
        eigenvalues = schmidt_standard(state.spdc).eigenvalues[:dim]
        gram = gram_matrix(mehler, state.beta, state.spdc.omega, dim)
        self.assertAlmostEqual(mehler.n_tilde_sq * float(eigenvalues @ np.diag(gram)), 1.0, delta=1e-8)

    def test_negative_index_rejected(self):
        mehler = mehler_params(lab_reference(0.1))
        with self.assertRaises(SpecialFunctionDomainError):
            scalar_product_basis(-1, 0, 1e-16, mehler, REFERENCE_OMEGA)


class DensityMatrixTests(TestCase):
    """Unit tests for the reduced density matrix"""

    def test_unit_trace_and_symmetry(self):
        rho = reduced_density_matrix(_cosine(0.1, 1.0))
        self.assertAlmostEqual(float(np.trace(rho)), 1.0, delta=1e-8)
        np.testing.assert_allclose(rho, rho.T, atol=1e-15)

    def test_short_truncation_raises(self):
        with self.assertRaises(TruncationError) as context:
            reduced_density_matrix(_cosine(0.1, 1.0), dim=2)
        self.assertGreater(context.exception.suggested_dim, 2)

    def test_sine_and_separable_inputs_rejected(self):
        sine = normalize(lab_reference(0.1), ModulationSpec(ModulationKind.SINE, beta_zero(REFERENCE_OMEGA)))
        with self.assertRaises(InvalidParameterError):
            schmidt_numeric(sine)
        with self.assertRaises(InvalidParameterError):
            approx_k_closed(sine)
        with self.assertRaises(InvalidParameterError):
            approx_k_closed(_cosine(math.inf, 1.0))


class ModulatedSchmidtTests(TestCase):
    """Unit tests for the Schmidt number of cosine-modulated states"""

    def test_numeric_reduces_to_geometric_without_modulation(self):
        for ratio in (1.0, 0.1, 0.01):
            state = _cosine(ratio, 0.0)
            k0 = mehler_params(state.spdc).k0
            self.assertAlmostEqual(schmidt_numeric(state).k / k0, 1.0, delta=1e-8)

    def test_resonance_raises_schmidt_number(self):
        """Test the entanglement gain at the first antibunching resonance"""
        state = _cosine(0.01, 1.0)
        k0 = mehler_params(state.spdc).k0
        for value in (
            schmidt_heuristic(state).k,
            approx_k_closed(state),
            approx_k_small_sigma_p(state),
            schmidt_perturbative(state).k,
        ):
            self.assertGreaterEqual(value / k0, 1.9)
            self.assertLessEqual(value / k0, 2.1)
        numeric = schmidt_numeric(state).k / k0
        self.assertGreaterEqual(numeric, 1.25)
        self.assertLessEqual(numeric, 1.45)

    def test_off_resonance_keeps_schmidt_number(self):
        state = _cosine(0.01, 2.0)
        k0 = mehler_params(state.spdc).k0
        self.assertAlmostEqual(schmidt_numeric(state).k / k0, 1.0, delta=0.01)
        self.assertAlmostEqual(approx_k_closed(state) / k0, 1.0, delta=0.01)

    def test_numeric_and_closed_form_agree_at_wide_pump(self):
        for theta in (1.0, 2.0):
            state = _cosine(1.0, theta)
            numeric = schmidt_numeric(state).k
            self.assertLess(abs(approx_k_closed(state) / numeric - 1.0), 0.05, msg=f"theta={theta}")

    def test_extrema_coincide(self):
        """Test that the D_S minimum and the K maximum sit on the same beta"""
        thetas = np.linspace(0.9, 1.1, 201)
        for ratio in (1.0, 0.1, 0.01):
            ds = [ds_closed_modulated(_cosine(ratio, theta)).d_s for theta in thetas]
            ks = [approx_k_closed(_cosine(ratio, theta)) for theta in thetas]
            self.assertLessEqual(abs(int(np.argmin(ds)) - int(np.argmax(ks))), 3, msg=f"sigma_p/sigma1={ratio}")
            self.assertAlmostEqual(thetas[int(np.argmin(ds))], 1.0, delta=0.01)

    def test_delay_leaves_schmidt_number_unchanged(self):
        """Test that the arm delay, a local phase, does not change K"""
        beta = 1.3 * beta_zero(REFERENCE_OMEGA)
        modulation = ModulationSpec(ModulationKind.COSINE, beta)
        prompt = schmidt_numeric(normalize(lab_reference(0.1), modulation)).k
        delayed = schmidt_numeric(normalize(lab_reference(0.1, delta_tau=50e-15), modulation)).k
        self.assertAlmostEqual(delayed, prompt, places=10)

    def test_small_sigma_p_form_warns_outside_regime(self):
        with self.assertLogs('biphoton.services.schmidt_engine', level='WARNING'):
            approx_k_small_sigma_p(_cosine(1.0, 1.0))

    def test_estimate_k_dispatch(self):
        state = _cosine(0.1, 1.0)
        self.assertEqual(estimate_k(state, 'exact_geometric'), schmidt_standard(state.spdc).k)
        self.assertEqual(estimate_k(state, SchmidtMethod.APPROX_CLOSED), approx_k_closed(state))
        self.assertAlmostEqual(estimate_k(state, 'numeric_diag'), schmidt_numeric(state).k, places=12)
        with self.assertRaises(ValueError):
            estimate_k(state, 'tensor_network')


class SchmidtPropertyTests(TestCase):
    """
    Property-based tests for the numeric Schmidt spectrum
    """

    @settings(max_examples=25, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-1.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=5.0),
    )
    def test_schmidt_number_at_least_one(self, log_ratio, theta):
        """
        Property: For any cosine modulation the numeric Schmidt number is at least 1
        and the eigenvalues sum to 1 within the trace tolerance.
        """
        spectrum = schmidt_numeric(_cosine(10.0 ** log_ratio, theta))
        self.assertGreaterEqual(spectrum.k, 1.0 - 1e-12)
        self.assertLess(spectrum.trace_deficit, 1e-7)

    @settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(
        st.floats(min_value=-2.0, max_value=0.5),
        st.floats(min_value=0.0, max_value=6.0),
    )
    def test_heuristic_spectrum_has_unit_trace(self, log_ratio, theta):
        """
        Property: For any cosine modulation away from degeneracy the Laguerre-weighted
        heuristic eigenvalues sum to 1.
        """
        state = _cosine(10.0 ** log_ratio, theta)
        try:
            n_tilde_sq = mehler_params(state.spdc, state.beta).n_tilde_sq
        except DegenerateStateError:
            return
        if n_tilde_sq > 1e6:
            return
        spectrum = schmidt_heuristic(state, tol=1e-16)
        self.assertAlmostEqual(float(np.sum(spectrum.eigenvalues)), 1.0, delta=1e-8)
