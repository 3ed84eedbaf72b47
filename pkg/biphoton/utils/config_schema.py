"""
Key-value configuration schema
Parses, validates and serializes job files in lab units (THz, fs, as, nm)
"""

import io
import logging
import math
from pathlib import Path

from dotenv import dotenv_values

from biphoton.models import (
    SPEED_OF_LIGHT,
    ModulationKind,
    ModulationSpec,
    SpdcParams,
)
from biphoton.utils.exceptions import InvalidConfigError, ParameterError
from biphoton.utils.validators import ParameterValidator

logger = logging.getLogger(__name__)

THZ = 2.0 * math.pi * 1e12
FS = 1e-15
AS = 1e-18
NM = 1e-9

PARAMETER_KEYS = (
    'sigma1_thz', 'sigma2_thz', 'sigma_p_ratio', 'omega_thz',
    'tau1_fs', 'tau2_fs', 'modulation_kind', 'beta_as', 'delta_l_nm',
)
SWEEP_KEYS = (
    'name', 'axis', 'min', 'max', 'count', 'spacing', 'estimators', 'windows',
    'series_key', 'series_values', 'quad_order', 'series_order', 'tol', 'threads',
)

DEFAULTS = {
    'sigma1_thz': 10.0,
    'sigma2_thz': 10.0,
    'sigma_p_ratio': 0.01,
    'omega_thz': 844.5,
    'tau1_fs': 0.0,
    'tau2_fs': 0.0,
    'modulation_kind': 'none',
}


def _float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise InvalidConfigError(f"{key} must be numeric, found {raw!r}")
    if not math.isfinite(value):
        raise InvalidConfigError(f"{key} must be finite, found {raw!r}")
    return value


def _ratio(key: str, raw: str) -> float:
    if raw.strip().lower() in ('inf', '+inf', 'infinity'):
        return math.inf
    return _float(key, raw)


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise InvalidConfigError(f"{key} must be an integer, found {raw!r}")


def _text(key: str, raw: str) -> str:
    return raw.strip()


def _kind(key: str, raw: str) -> str:
    value = raw.strip().lower()
    if value not in {kind.value for kind in ModulationKind}:
        raise InvalidConfigError(f"{key} must be one of none, cosine, sine; found {raw!r}")
    return value


def _names(key: str, raw: str) -> tuple[str, ...]:
    return tuple(part.strip().lower() for part in raw.split(',') if part.strip())


def _numbers(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_ratio(key, part) for part in raw.split(',') if part.strip())


def _windows(key: str, raw: str) -> tuple[tuple[float, float], ...]:
    windows = []
    for part in raw.split(';'):
        if not part.strip():
            continue
        bounds = part.split(':')
        if len(bounds) != 2:
            raise InvalidConfigError(f"{key} entries must read min:max, found {part!r}")
        windows.append((_float(key, bounds[0]), _float(key, bounds[1])))
    return tuple(windows)


CONVERTERS = {
    'sigma1_thz': _float,
    'sigma2_thz': _float,
    'sigma_p_ratio': _ratio,
    'omega_thz': _float,
    'tau1_fs': _float,
    'tau2_fs': _float,
    'modulation_kind': _kind,
    'beta_as': _float,
    'delta_l_nm': _float,
    'name': _text,
    'axis': _text,
    'min': _float,
    'max': _float,
    'count': _int,
    'spacing': _text,
    'estimators': _names,
    'windows': _windows,
    'series_key': _text,
    'series_values': _numbers,
    'quad_order': _int,
    'series_order': _int,
    'tol': _float,
    'threads': _int,
}


def parse_config_text(text: str) -> dict:
    """
    Parse key-value text into typed values.

    Keys are case-insensitive; '#' starts a comment.

    Raises:
        InvalidConfigError: On unknown keys, empty or malformed values
    """
    raw_values = dotenv_values(stream=io.StringIO(text))
    values = {}
    for raw_key, raw in raw_values.items():
        key = raw_key.strip().lower()
        if key not in CONVERTERS:
            raise InvalidConfigError(f"Unknown configuration key {raw_key!r}")
        if key in values:
            raise InvalidConfigError(f"Key {key!r} given twice")
        if raw is None or raw.strip() == '':
            raise InvalidConfigError(f"Key {key!r} has no value")
        values[key] = CONVERTERS[key](key, raw)

    if 'beta_as' in values and 'delta_l_nm' in values:
        raise InvalidConfigError("Give either beta_as or delta_l_nm, not both")
    for key in ('quad_order', 'series_order', 'threads', 'count'):
        if key in values and values[key] < 1:
            raise InvalidConfigError(f"{key} must be at least 1, found {values[key]}")
    if 'tol' in values and not 0.0 < values['tol'] < 1.0:
        raise InvalidConfigError(f"tol must lie in (0, 1), found {values['tol']}")
    return values


def load_config(path) -> dict:
    """Read and parse a job file."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise InvalidConfigError(f"Cannot read {path}: {e}")
    values = parse_config_text(text)
    logger.info(f"Loaded {len(values)} keys from {path}")
    return values


def params_from_config(values: dict) -> tuple[SpdcParams, ModulationSpec]:
    """
    Build SPDC parameters and the modulation from parsed values.

    Raises:
        InvalidConfigError: If a physical value is out of range
    """
    merged = {**DEFAULTS, **values}
    for key in ('sigma1_thz', 'sigma2_thz', 'omega_thz'):
        is_valid, error = ParameterValidator.validate_positive(key, merged[key])
        if not is_valid:
            raise InvalidConfigError(error)
    is_valid, error = ParameterValidator.validate_sigma_p(merged['sigma_p_ratio'])
    if not is_valid:
        raise InvalidConfigError(error.replace('sigma_p', 'sigma_p_ratio'))

    sigma1 = merged['sigma1_thz'] * THZ
    try:
        spdc = SpdcParams(
            sigma1=sigma1,
            sigma2=merged['sigma2_thz'] * THZ,
            sigma_p=merged['sigma_p_ratio'] * sigma1,
            omega=merged['omega_thz'] * THZ,
            tau1=merged['tau1_fs'] * FS,
            tau2=merged['tau2_fs'] * FS,
        )
        kind = ModulationKind(merged['modulation_kind'])
        if 'delta_l_nm' in merged:
            modulation = ModulationSpec.from_delta_l(kind, merged['delta_l_nm'] * NM)
        else:
            modulation = ModulationSpec(kind, merged.get('beta_as', 0.0) * AS)
    except ParameterError as e:
        raise InvalidConfigError(e.details)
    return spdc, modulation


def config_from_params(spdc: SpdcParams, modulation: ModulationSpec) -> dict:
    """Lab-unit view of a parameter record, the inverse of params_from_config."""
    return {
        'sigma1_thz': spdc.sigma1 / THZ,
        'sigma2_thz': spdc.sigma2 / THZ,
        'sigma_p_ratio': spdc.sigma_p_ratio,
        'omega_thz': spdc.omega / THZ,
        'tau1_fs': spdc.tau1 / FS,
        'tau2_fs': spdc.tau2 / FS,
        'modulation_kind': modulation.kind.value,
        'beta_as': modulation.beta / AS,
    }


def _format(value) -> str:
    if isinstance(value, float):
        return 'inf' if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ';'.join(f"{_format(lo)}:{_format(hi)}" for lo, hi in value)
        return ','.join(_format(item) for item in value)
    return str(value)


def serialize_config(values: dict) -> str:
    """Write values as key=value lines in schema order."""
    lines = []
    for key in PARAMETER_KEYS + SWEEP_KEYS:
        if key in values:
            lines.append(f"{key}={_format(values[key])}")
    unknown = set(values) - set(PARAMETER_KEYS + SWEEP_KEYS)
    if unknown:
        raise InvalidConfigError(f"Cannot serialize unknown keys {sorted(unknown)}")
    return '\n'.join(lines) + '\n'


def delta_l_nm(beta: float) -> float:
    """Path-length difference in nm for an MZI delay beta in seconds."""
    return 2.0 * SPEED_OF_LIGHT * beta / NM
