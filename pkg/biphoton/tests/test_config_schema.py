import math
import tempfile
from pathlib import Path
from unittest import TestCase

from biphoton.models import REFERENCE_OMEGA, REFERENCE_SIGMA, ModulationKind, SPEED_OF_LIGHT
from biphoton.utils.config_schema import (
    config_from_params,
    delta_l_nm,
    load_config,
    params_from_config,
    parse_config_text,
    serialize_config,
)
from biphoton.utils.exceptions import InvalidConfigError

JOB_TEXT = """
# first resonance scan
sigma1_thz=10
SIGMA2_THZ=10
sigma_p_ratio=0.01
modulation_kind=cosine
axis=beta
windows=0:4;20:24
count=101
estimators=closed_modulated, numeric_diag
series_key=sigma_p_ratio
series_values=1,0.1,inf
tol=1e-9
threads=2
"""


class ParseConfigTests(TestCase):
    """Unit tests for key-value job files"""

    def test_parses_typed_values(self):
        values = parse_config_text(JOB_TEXT)
        self.assertEqual(values['sigma2_thz'], 10.0)
        self.assertEqual(values['modulation_kind'], 'cosine')
        self.assertEqual(values['windows'], ((0.0, 4.0), (20.0, 24.0)))
        self.assertEqual(values['estimators'], ('closed_modulated', 'numeric_diag'))
        self.assertEqual(values['series_values'], (1.0, 0.1, math.inf))
        self.assertEqual(values['count'], 101)
        self.assertEqual(values['threads'], 2)
        self.assertNotIn('omega_thz', values)

    def test_rejects_unknown_key(self):
        with self.assertRaises(InvalidConfigError):
            parse_config_text("sigma3_thz=10\n")

    def test_rejects_case_variant_duplicates(self):
        with self.assertRaises(InvalidConfigError):
            parse_config_text("tol=1e-9\nTOL=1e-8\n")

    def test_rejects_malformed_values(self):
        for text in (
            "sigma1_thz=ten\n",
            "sigma1_thz=inf\n",
            "count=2.5\n",
            "tol=\n",
            "tol=2\n",
            "threads=0\n",
            "modulation_kind=triangle\n",
            "windows=0:1:2\n",
            "beta_as=1\ndelta_l_nm=1\n",
        ):
            with self.assertRaises(InvalidConfigError, msg=text):
                parse_config_text(text)

    def test_serialized_text_parses_back(self):
        values = parse_config_text(JOB_TEXT)
        self.assertEqual(parse_config_text(serialize_config(values)), values)

    def test_serialize_rejects_unknown_keys(self):
        with self.assertRaises(InvalidConfigError):
            serialize_config({'colour': 'blue'})


class ParamsFromConfigTests(TestCase):
    """Unit tests for unit conversion into parameter records"""

    def test_defaults_give_reference_state(self):
        spdc, modulation = params_from_config({})
        self.assertAlmostEqual(spdc.sigma1 / REFERENCE_SIGMA, 1.0, places=14)
        self.assertAlmostEqual(spdc.omega / REFERENCE_OMEGA, 1.0, places=14)
        self.assertAlmostEqual(spdc.sigma_p_ratio, 0.01, places=14)
        self.assertIs(modulation.kind, ModulationKind.NONE)

    def test_infinite_ratio_is_separable(self):
        spdc, _ = params_from_config(parse_config_text("sigma_p_ratio=inf\n"))
        self.assertTrue(spdc.is_separable)

    def test_delays_and_path_length(self):
        values = parse_config_text("tau2_fs=5\nmodulation_kind=sine\ndelta_l_nm=0.5\n")
        spdc, modulation = params_from_config(values)
        self.assertAlmostEqual(spdc.delta_tau, 5e-15, delta=1e-28)
        self.assertIs(modulation.kind, ModulationKind.SINE)
        self.assertAlmostEqual(modulation.beta, 0.5e-9 / (2.0 * SPEED_OF_LIGHT), delta=1e-30)
        self.assertAlmostEqual(delta_l_nm(modulation.beta), 0.5, places=12)

    def test_physical_range_errors(self):
        for values in ({'sigma1_thz': -1.0}, {'sigma_p_ratio': 0.0}, {'modulation_kind': 'cosine', 'beta_as': -3.0}):
            with self.assertRaises(InvalidConfigError, msg=str(values)):
                params_from_config(values)

    def test_lab_view_roundtrip(self):
        values = parse_config_text("sigma2_thz=20\ntau1_fs=1.5\nmodulation_kind=cosine\nbeta_as=1.25\n")
        spdc, modulation = params_from_config(values)
        view = config_from_params(spdc, modulation)
        self.assertAlmostEqual(view['sigma2_thz'], 20.0, places=12)
        self.assertAlmostEqual(view['tau1_fs'], 1.5, places=12)
        self.assertAlmostEqual(view['beta_as'], 1.25, places=12)


class LoadConfigTests(TestCase):
    """Unit tests for reading job files from disk"""

    def test_reads_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'job.env'
            path.write_text(JOB_TEXT, encoding='utf-8')
            self.assertEqual(load_config(path), parse_config_text(JOB_TEXT))

    def test_missing_file(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(InvalidConfigError):
                load_config(Path(directory) / 'missing.env')
