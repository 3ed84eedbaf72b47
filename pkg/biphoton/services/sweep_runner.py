"""
Sweep runner
Executes parameter sweeps over beta, K, sigma_p and delta_tau grids and writes CSV or JSONL with provenance
"""

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from biphoton.models import (
    REFERENCE_OMEGA,
    BiphotonState,
    ModulationKind,
    ModulationSpec,
    SpdcParams,
    beta_zero,
    lab_reference,
    normalize,
)
from biphoton.services.resonance_toolkit import hwhm_ds, locate_resonance
from biphoton.services.schmidt_engine import (
    approx_k_closed,
    approx_k_small_sigma_p,
    mehler_params,
    schmidt_heuristic,
    schmidt_numeric,
    schmidt_perturbative,
    schmidt_standard,
    sigma_p_from_k,
    truncation_dim,
)
from biphoton.services.symmetry_engine import (
    ds_closed_modulated,
    ds_closed_spdc,
    ds_parity_series,
    ds_quadrature,
    ds_separable_limit,
    ds_small_beta_approx,
)
from biphoton.utils.config_schema import FS, PARAMETER_KEYS, config_from_params, delta_l_nm, params_from_config
from biphoton.utils.exceptions import (
    BiphotonError,
    DegenerateStateError,
    InvalidConfigError,
    InvalidEstimatorError,
    UnknownFigureError,
)
from biphoton.utils.specfun import mehler_identity_residual
from biphoton.utils.validators import ParameterValidator
from homlab import settings

logger = logging.getLogger(__name__)

ERROR_TOKEN = 'ERR'

_ALL_KINDS = frozenset(ModulationKind)
_MODULATED = frozenset({ModulationKind.COSINE, ModulationKind.SINE})

# estimator name -> modulation kinds it accepts
DS_ESTIMATORS = {
    'closed_spdc': frozenset({ModulationKind.NONE}),
    'closed_modulated': _MODULATED,
    'quadrature': _ALL_KINDS,
    'parity_series': _ALL_KINDS,
    'separable_limit': _ALL_KINDS,
    'small_beta': frozenset({ModulationKind.COSINE}),
}
K_ESTIMATORS = {
    'exact_geometric': frozenset({ModulationKind.NONE}),
    'numeric_diag': frozenset({ModulationKind.COSINE}),
    'perturbative': frozenset({ModulationKind.COSINE}),
    'heuristic': frozenset({ModulationKind.COSINE}),
    'approx_k_closed': frozenset({ModulationKind.COSINE}),
    'approx_small_sigma_p': frozenset({ModulationKind.COSINE}),
}

SERIES_KEYS = ('ratio', 'sigma_p_ratio', 'delta_tau_fs', 'beta_over_beta0')


class SweepAxis(str, Enum):
    BETA = 'beta'
    K = 'k'
    SIGMA_P = 'sigma_p'
    DELTA_TAU = 'delta_tau'


AXIS_UNITS = {
    SweepAxis.BETA: 'beta_over_beta0',
    SweepAxis.K: 'k',
    SweepAxis.SIGMA_P: 'sigma_p_ratio',
    SweepAxis.DELTA_TAU: 'delta_tau_fs',
}


@dataclass(frozen=True)
class GridSpec:
    """One window of grid points on the sweep axis, in boundary units."""

    minimum: float
    maximum: float
    count: int
    spacing: str = 'linear'

    def __post_init__(self):
        is_valid, error = ParameterValidator.validate_grid(self.minimum, self.maximum, self.count, self.spacing)
        if not is_valid:
            raise InvalidConfigError(error)

    def values(self) -> np.ndarray:
        if self.spacing == 'log':
            return np.geomspace(self.minimum, self.maximum, self.count)
        return np.linspace(self.minimum, self.maximum, self.count)


@dataclass(frozen=True)
class SweepJob:
    """
    A sweep over one axis with optional curve family.

    series_key names an override applied before each pass over the grids
    ('ratio', 'sigma_p_ratio', 'delta_tau_fs' or 'beta_over_beta0').
    """

    spdc: SpdcParams
    modulation: ModulationSpec
    axis: SweepAxis
    grids: tuple[GridSpec, ...]
    estimators: tuple[str, ...]
    series_key: str | None = None
    series_values: tuple[float, ...] = ()
    quad_order: int | None = None
    series_order: int | None = None
    tol: float | None = None
    threads: int | None = None
    name: str = 'sweep'

    def __post_init__(self):
        try:
            object.__setattr__(self, 'axis', SweepAxis(self.axis))
        except ValueError:
            raise InvalidConfigError(f"Unknown axis {self.axis!r}; use beta, k, sigma_p or delta_tau")
        if not self.grids:
            raise InvalidConfigError("A sweep needs at least one grid window")
        if not self.estimators:
            raise InvalidEstimatorError("The estimator set is empty")
        if len(set(self.estimators)) != len(self.estimators):
            raise InvalidEstimatorError(f"Duplicate estimators in {self.estimators}")
        if self.axis is SweepAxis.BETA and self.modulation.kind is ModulationKind.NONE:
            raise InvalidConfigError("A beta sweep needs modulation_kind cosine or sine")
        if self.series_key is not None and self.series_key not in SERIES_KEYS:
            raise InvalidConfigError(f"Unknown series_key {self.series_key!r}; use one of {', '.join(SERIES_KEYS)}")
        if self.series_key is not None and not self.series_values:
            raise InvalidConfigError(f"series_key {self.series_key!r} needs series_values")

        kind = self.modulation.kind
        if self.series_key == 'beta_over_beta0' and kind is ModulationKind.NONE:
            raise InvalidConfigError("A beta_over_beta0 series needs a modulated state")
        for name in self.estimators:
            kinds = DS_ESTIMATORS.get(name) or K_ESTIMATORS.get(name)
            if kinds is None:
                known = ', '.join(list(DS_ESTIMATORS) + list(K_ESTIMATORS))
                raise InvalidEstimatorError(f"Unknown estimator {name!r}; known: {known}")
            if kind not in kinds:
                raise InvalidEstimatorError(f"Estimator {name!r} does not apply to modulation kind {kind.value}")

    @property
    def ds_estimators(self) -> tuple[str, ...]:
        return tuple(name for name in self.estimators if name in DS_ESTIMATORS)

    @property
    def k_estimators(self) -> tuple[str, ...]:
        return tuple(name for name in self.estimators if name in K_ESTIMATORS)

    @property
    def effective_quad_order(self) -> int:
        return self.quad_order or settings.QUAD_ORDER

    @property
    def effective_series_order(self) -> int:
        return self.series_order or settings.SERIES_ORDER

    @property
    def effective_tol(self) -> float:
        return self.tol or settings.TOL

    @property
    def effective_threads(self) -> int:
        return max(1, self.threads or settings.THREADS)

    def columns(self) -> list[str]:
        names = []
        if self.series_key:
            names.append(self.series_key)
        names += ['window', AXIS_UNITS[self.axis], 'beta_s', 'beta_over_beta0', 'delta_l_nm', 'sigma_p_ratio']
        names += [f"ds_{name}" for name in self.ds_estimators]
        if self.ds_estimators:
            names.append('p2c')
        names += [f"k_{name}" for name in self.k_estimators]
        names += ['trunc_dim', 'error']
        return list(dict.fromkeys(names))


@dataclass(frozen=True)
class SweepPoint:
    series_value: float | None
    window: int
    axis_value: float


@dataclass
class SweepResult:
    """Header, ordered rows and wall-clock time per row."""

    header: dict
    columns: list[str]
    rows: list[dict]
    timing: list[float] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return sum(1 for row in self.rows if row['error'])


def sweep_job_from_config(values: dict) -> SweepJob:
    """
    Build a job from parsed configuration values.

    Raises:
        InvalidConfigError: On missing or inconsistent sweep keys
    """
    if 'axis' not in values:
        raise InvalidConfigError("Missing sweep key 'axis'")
    if 'estimators' not in values:
        raise InvalidEstimatorError("Missing sweep key 'estimators'")

    spdc, modulation = params_from_config(values)
    count = values.get('count', 101)
    spacing = values.get('spacing', 'linear')
    if 'windows' in values:
        grids = tuple(GridSpec(lo, hi, count, spacing) for lo, hi in values['windows'])
    else:
        if 'min' not in values or 'max' not in values:
            raise InvalidConfigError("Give min and max, or windows")
        grids = (GridSpec(values['min'], values['max'], count, spacing),)

    return SweepJob(
        spdc=spdc,
        modulation=modulation,
        axis=values['axis'],
        grids=grids,
        estimators=values['estimators'],
        series_key=values.get('series_key'),
        series_values=values.get('series_values', ()),
        quad_order=values.get('quad_order'),
        series_order=values.get('series_order'),
        tol=values.get('tol'),
        threads=values.get('threads'),
        name=values.get('name', 'sweep'),
    )


def _apply(spdc: SpdcParams, modulation: ModulationSpec, key: str, value: float):
    """Apply a boundary-unit override to the parameters."""
    if key == 'ratio':
        return spdc.with_ratio(value), modulation
    if key == 'sigma_p_ratio':
        return spdc.with_sigma_p(math.inf if math.isinf(value) else value * spdc.sigma1), modulation
    if key in ('delta_tau_fs', SweepAxis.DELTA_TAU.value):
        return spdc.with_delta_tau(value * FS), modulation
    if key in ('beta_over_beta0', SweepAxis.BETA.value):
        return spdc, ModulationSpec(modulation.kind, math.pi * value / (2.0 * spdc.omega))
    if key == SweepAxis.SIGMA_P.value:
        return spdc.with_sigma_p(value * spdc.sigma1), modulation
    if key == SweepAxis.K.value:
        return spdc.with_sigma_p(sigma_p_from_k(value, spdc.sigma1, spdc.sigma2)), modulation
    raise InvalidConfigError(f"Unknown override {key!r}")


def point_state(job: SweepJob, point: SweepPoint) -> BiphotonState:
    """Normalized state at one grid point."""
    spdc, modulation = job.spdc, job.modulation
    if job.series_key is not None:
        spdc, modulation = _apply(spdc, modulation, job.series_key, point.series_value)
    spdc, modulation = _apply(spdc, modulation, job.axis.value, point.axis_value)
    return normalize(spdc, modulation)


def _ds_value(name: str, state: BiphotonState, job: SweepJob) -> float:
    if name == 'closed_spdc':
        return ds_closed_spdc(state.spdc).d_s
    if name == 'closed_modulated':
        return ds_closed_modulated(state).d_s
    if name == 'quadrature':
        return ds_quadrature(state, job.effective_quad_order).d_s
    if name == 'parity_series':
        return ds_parity_series(state, tol=job.effective_tol, order=job.series_order).d_s
    if name == 'separable_limit':
        return ds_separable_limit(state, job.effective_series_order)
    return ds_small_beta_approx(state)


def _k_value(name: str, state: BiphotonState, job: SweepJob) -> tuple[float, int | None]:
    tol = job.effective_tol
    if name == 'exact_geometric':
        spectrum = schmidt_standard(state.spdc, tol)
    elif name == 'numeric_diag':
        spectrum = schmidt_numeric(state, tol=tol)
    elif name == 'perturbative':
        spectrum = schmidt_perturbative(state, tol=tol)
    elif name == 'heuristic':
        spectrum = schmidt_heuristic(state, tol=tol)
    elif name == 'approx_k_closed':
        return approx_k_closed(state), None
    else:
        return approx_k_small_sigma_p(state), None
    return spectrum.k, spectrum.truncation


def _error_tag(name: str, error: BiphotonError) -> str:
    return f"{name}: {error.message}" + (f" ({error.details})" if error.details else '')


def compute_row(job: SweepJob, point: SweepPoint) -> dict:
    """
    Evaluate every estimator at one grid point.

    Failures are recorded in the row as ERR cells with the reason in 'error'.
    """
    row = {name: '' for name in job.columns()}
    if job.series_key:
        row[job.series_key] = point.series_value
    row['window'] = point.window
    row[AXIS_UNITS[job.axis]] = point.axis_value
    errors = []

    try:
        state = point_state(job, point)
    except BiphotonError as e:
        for name in job.columns():
            if name.startswith(('ds_', 'k_')) or name == 'p2c':
                row[name] = ERROR_TOKEN
        row['error'] = _error_tag('state', e)
        return row

    derived = {
        'beta_s': state.beta,
        'beta_over_beta0': 2.0 * state.spdc.omega * state.beta / math.pi,
        'delta_l_nm': delta_l_nm(state.beta),
        'sigma_p_ratio': state.spdc.sigma_p_ratio,
    }
    for name, value in derived.items():
        if row[name] == '':
            row[name] = value

    for name in job.ds_estimators:
        try:
            row[f"ds_{name}"] = _ds_value(name, state, job)
        except BiphotonError as e:
            row[f"ds_{name}"] = ERROR_TOKEN
            errors.append(_error_tag(name, e))
    if job.ds_estimators:
        first = row[f"ds_{job.ds_estimators[0]}"]
        row['p2c'] = ERROR_TOKEN if first == ERROR_TOKEN else (1.0 - first) / 2.0

    dims = []
    for name in job.k_estimators:
        try:
            row[f"k_{name}"], dim = _k_value(name, state, job)
            if dim is not None:
                dims.append(dim)
        except BiphotonError as e:
            row[f"k_{name}"] = ERROR_TOKEN
            errors.append(_error_tag(name, e))
    if job.k_estimators:
        if not dims:
            try:
                dims.append(truncation_dim(mehler_params(state.spdc, state.beta), job.effective_tol))
            except BiphotonError as e:
                errors.append(_error_tag('trunc_dim', e))
        row['trunc_dim'] = max(dims) if dims else ERROR_TOKEN

    for name, value in row.items():
        estimated = name.startswith(('ds_', 'k_')) or name == 'p2c'
        if estimated and isinstance(value, float) and not math.isfinite(value):
            row[name] = ERROR_TOKEN
            errors.append(f"{name}: non-finite value")
    row['error'] = '; '.join(errors)
    return row


def sweep_points(job: SweepJob) -> list[SweepPoint]:
    """Grid points in output order: series value, then window, then axis value."""
    points = []
    for series_value in job.series_values or (None,):
        for window, grid in enumerate(job.grids):
            points.extend(SweepPoint(series_value, window, float(value)) for value in grid.values())
    return points


def _timed_row(job: SweepJob, point: SweepPoint) -> tuple[dict, float]:
    start = time.perf_counter()
    row = compute_row(job, point)
    return row, time.perf_counter() - start


def run_sweep(job: SweepJob) -> SweepResult:
    """
    Run every grid point of a job.

    Rows are computed on a thread pool and collected in grid order, so the
    row content does not depend on the thread count.
    """
    points = sweep_points(job)
    threads = job.effective_threads
    logger.info(f"Sweep '{job.name}': {len(points)} points on axis {job.axis.value} with {threads} thread(s)")

    start = time.perf_counter()
    if threads == 1:
        outcomes = [_timed_row(job, point) for point in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = list(executor.map(lambda point: _timed_row(job, point), points))

    rows = [row for row, _ in outcomes]
    result = SweepResult(header=_header(job, rows), columns=job.columns(), rows=rows,
                         timing=[elapsed for _, elapsed in outcomes])
    if result.error_count:
        logger.warning(f"Sweep '{job.name}': {result.error_count} of {len(rows)} rows carry errors")
    logger.info(f"Sweep '{job.name}' finished in {time.perf_counter() - start:.2f} s")
    return result


def _header(job: SweepJob, rows: list[dict]) -> dict:
    dims = [row['trunc_dim'] for row in rows if isinstance(row.get('trunc_dim'), int)]
    return {
        'name': job.name,
        'version': settings.VERSION,
        'axis': job.axis.value,
        'axis_unit': AXIS_UNITS[job.axis],
        'windows': [[grid.minimum, grid.maximum, grid.count, grid.spacing] for grid in job.grids],
        'series_key': job.series_key,
        'series_values': list(job.series_values),
        'estimators': list(job.estimators),
        'quad_order': job.effective_quad_order,
        'series_order': job.effective_series_order,
        'tol': job.effective_tol,
        'max_trunc_dim': max(dims) if dims else None,
        'params': config_from_params(job.spdc, job.modulation),
    }


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return 'inf' if value > 0 else ERROR_TOKEN
    return value


def _header_record(header: dict) -> dict:
    return {key: ({k: _json_value(v) for k, v in value.items()} if isinstance(value, dict) else value)
            for key, value in header.items()}


def write_csv(result: SweepResult, stream) -> None:
    """
    Write '#' header lines, one header row, then data rows.

    Floats carry 17 significant digits.
    """
    for key, value in _header_record(result.header).items():
        stream.write(f"# {key}: {json.dumps(value)}\n")
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_cell(row[name]) for name in result.columns])


def write_jsonl(result: SweepResult, stream) -> None:
    """Write a header record followed by one record per row."""
    stream.write(json.dumps({'header': _header_record(result.header)}, sort_keys=True) + '\n')
    for row in result.rows:
        record = {name: _json_value(row[name]) for name in result.columns}
        stream.write(json.dumps(record, sort_keys=True) + '\n')


WRITERS = {
    'csv': write_csv,
    'jsonl': write_jsonl,
}


def figure_job(figure_id: str) -> SweepJob:
    """
    Preconfigured sweeps at sigma1 = sigma2 = 2pi x 10 THz, Omega = 2pi x 844.5 THz.

    Raises:
        UnknownFigureError: If the id is not one of fig2, fig4, fig5, fig6, fig7
    """
    figure_id = figure_id.strip().lower()
    if figure_id == 'fig2':
        return SweepJob(
            spdc=lab_reference(), modulation=ModulationSpec(), axis=SweepAxis.K,
            grids=(GridSpec(1.001, 10.0, 200),), estimators=('closed_spdc', 'exact_geometric'),
            series_key='ratio', series_values=(1.0, 2.0, 3.0, 5.0), name='fig2',
        )
    if figure_id == 'fig4':
        return SweepJob(
            spdc=lab_reference(0.01), modulation=ModulationSpec(ModulationKind.COSINE), axis=SweepAxis.BETA,
            grids=(GridSpec(0.0, 4.0, 2001), GridSpec(20.0, 24.0, 2001), GridSpec(80.0, 84.0, 2001)),
            estimators=('closed_modulated',), name='fig4',
        )
    if figure_id == 'fig5':
        return SweepJob(
            spdc=lab_reference(0.01), modulation=ModulationSpec(ModulationKind.COSINE), axis=SweepAxis.BETA,
            grids=(GridSpec(0.0, 4.0, 801), GridSpec(0.98, 1.02, 401)),
            estimators=('closed_modulated', 'approx_k_closed', 'numeric_diag'),
            series_key='sigma_p_ratio', series_values=(1.0, 0.1, 0.01), name='fig5',
        )
    if figure_id == 'fig6':
        return SweepJob(
            spdc=lab_reference(), modulation=ModulationSpec(ModulationKind.COSINE, math.pi / (2.0 * REFERENCE_OMEGA)),
            axis=SweepAxis.K, grids=(GridSpec(1.001, 20.0, 400),), estimators=('closed_modulated',), name='fig6',
        )
    if figure_id == 'fig7':
        return SweepJob(
            spdc=lab_reference(1.0), modulation=ModulationSpec(ModulationKind.COSINE), axis=SweepAxis.BETA,
            grids=(GridSpec(0.0, 4.0, 2001),), estimators=('numeric_diag', 'approx_k_closed'),
            series_key='sigma_p_ratio', series_values=(1.0, 0.1), name='fig7',
        )
    raise UnknownFigureError(figure_id)


FIGURE_IDS = ('fig2', 'fig4', 'fig5', 'fig6', 'fig7')


# ============================================================================
# Validation suite
# ============================================================================
@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, value: float, tolerance: float, detail: str = '') -> None:
        passed = math.isfinite(value) and value <= tolerance
        self.checks.append(CheckResult(name, passed, value, tolerance, detail))
        log = logger.info if passed else logger.error
        log(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (tolerance {tolerance:.1e}) {detail}")


ORACLE_DRAWS = 100
ORACLE_TOLERANCE = 1e-7
ORACLE_SEED = 20240521


def _random_draws(rng: np.random.Generator, count: int):
    """Log-uniform sigma_p/sigma1 in [1e-3, 10], beta Omega in [0, 300], delta_tau sigma1 in [0, 3]."""
    reference = lab_reference()
    for _ in range(count):
        sigma_p_ratio = 10.0 ** rng.uniform(-3.0, 1.0)
        ratio = 10.0 ** rng.uniform(-0.3, 0.3)
        beta = rng.uniform(0.0, 300.0) / reference.omega
        delta_tau = rng.uniform(0.0, 3.0) / reference.sigma1
        kind = (ModulationKind.NONE, ModulationKind.COSINE, ModulationKind.SINE)[int(rng.integers(3))]
        spdc = SpdcParams.from_ratios(reference.sigma1, reference.omega, ratio, sigma_p_ratio, delta_tau)
        yield spdc, ModulationSpec(kind, beta)


def _oracle_checks(report: ValidationReport, quad_order: int | None) -> None:
    rng = np.random.default_rng(ORACLE_SEED)
    worst = {'closed': 0.0, 'series': 0.0}
    failures = []
    skipped = 0
    for spdc, modulation in _random_draws(rng, ORACLE_DRAWS):
        try:
            state = normalize(spdc, modulation)
            oracle = ds_quadrature(state, quad_order).d_s
        except BiphotonError as e:
            if isinstance(e, DegenerateStateError):
                skipped += 1
                continue
            failures.append(e.message)
            continue
        try:
            closed = ds_closed_modulated(state).d_s
            series = ds_parity_series(state).d_s
        except BiphotonError as e:
            failures.append(e.message)
            continue
        worst['closed'] = max(worst['closed'], abs(closed - oracle))
        worst['series'] = max(worst['series'], abs(series - oracle))

    detail = f"({skipped} degenerate draws skipped)"
    if failures:
        detail += f"; {len(failures)} draws raised, first: {failures[0]}"
        worst = {key: math.inf for key in worst}
    report.add('oracle: closed forms vs quadrature', worst['closed'], ORACLE_TOLERANCE, detail)
    report.add('oracle: parity series vs quadrature', worst['series'], ORACLE_TOLERANCE, detail)


def _parity_checks(report: ValidationReport) -> None:
    spdc = lab_reference(0.1)
    odd = ds_parity_series(normalize(spdc, ModulationSpec(ModulationKind.COSINE, math.pi / (2.0 * spdc.omega))))
    report.add('parity: odd modulation has no even part', abs(odd.d_s_plus), 1e-10)
    even = ds_parity_series(normalize(spdc, ModulationSpec(ModulationKind.COSINE, math.pi / spdc.omega)))
    report.add('parity: even modulation has no odd part', abs(even.d_s_minus), 1e-10)

    rng = np.random.default_rng(ORACLE_SEED + 1)
    lowest = math.inf
    for _ in range(20):
        separable = SpdcParams.from_ratios(spdc.sigma1, spdc.omega, 10.0 ** rng.uniform(-0.3, 0.3), math.inf,
                                           rng.uniform(0.0, 3.0) / spdc.sigma1)
        beta = rng.uniform(0.0, 300.0) / spdc.omega
        try:
            state = normalize(separable, ModulationSpec(ModulationKind.COSINE, beta))
        except BiphotonError:
            continue
        lowest = min(lowest, ds_separable_limit(state))
    report.add('parity: separable states never antibunch', max(0.0, -lowest), 1e-12)


def _mehler_check(report: ValidationReport, q_sign: float) -> None:
    grid = np.linspace(-3.0, 3.0, 25)
    x, y = np.meshgrid(grid, grid)
    residual = float(np.max(mehler_identity_residual(x.ravel(), y.ravel(), q_sign=q_sign)))
    report.add('mehler: golden expansion of exp(-(x+y)^2)', residual, 1e-9)


def _truncation_check(report: ValidationReport) -> None:
    spdc = lab_reference(0.1)
    state = normalize(spdc, ModulationSpec(ModulationKind.COSINE, beta_zero(spdc.omega)))
    dim = truncation_dim(mehler_params(spdc, state.beta))
    try:
        base = schmidt_numeric(state, dim=dim).k
        doubled = schmidt_numeric(state, dim=2 * dim).k
    except BiphotonError as e:
        report.add('schmidt: K stable under doubled truncation', math.inf, settings.TRACE_TOL, e.message)
        return
    report.add('schmidt: K stable under doubled truncation', abs(doubled / base - 1.0), settings.TRACE_TOL,
               f"(dim {dim}: K={base:.10g}, dim {2 * dim}: K={doubled:.10g})")


def _resonance_checks(report: ValidationReport) -> None:
    spdc = lab_reference(0.01)
    state = normalize(spdc)
    try:
        center = locate_resonance(state, 0, compute_k=False)
        widths = hwhm_ds(state, center)
    except BiphotonError as e:
        report.add('resonance: first dip located', math.inf, 0.0, e.message)
        return
    report.add('resonance: D_S at beta0 reaches -0.99', center.ds_at_center + 0.99, 0.0)
    report.add('resonance: epsilon within 30% of 0.003', abs(widths.hwhm_epsilon - 0.003) / 0.003, 0.3)
    report.add('resonance: delta L within 30% of 0.5 nm', abs(widths.hwhm_delta_l * 1e9 - 0.5) / 0.5, 0.3)

    mehler = mehler_params(spdc)
    doubled = approx_k_closed(normalize(spdc, ModulationSpec(ModulationKind.COSINE, center.beta_center)))
    report.add('resonance: closed-form K doubles at beta0', abs(doubled / mehler.k0 - 2.0), 0.1)


def validate_suite(q_sign: float = -1.0, quad_order: int | None = None) -> ValidationReport:
    """
    Run the cross-estimator oracle suite, parity checks, the Mehler identity, the Schmidt
    truncation check and the resonance benchmarks.

    Failures are reported as data; callers map report.passed to the exit status.
    """
    report = ValidationReport()
    start = time.perf_counter()
    _oracle_checks(report, quad_order)
    _parity_checks(report)
    _mehler_check(report, q_sign)
    _truncation_check(report)
    _resonance_checks(report)
    failed = sum(1 for check in report.checks if not check.passed)
    logger.info(f"Validation finished in {time.perf_counter() - start:.1f} s: {failed} failed of {len(report.checks)}")
    return report


def job_with_overrides(job: SweepJob, **overrides) -> SweepJob:
    """Copy of a job with non-None overrides applied (CLI flags beat job keys)."""
    return replace(job, **{key: value for key, value in overrides.items() if value is not None})


def job_with_parameters(job: SweepJob, values: dict) -> SweepJob:
    """
    Copy of a job whose SPDC parameters and modulation are overlaid with job-file values.

    Keys the file leaves out keep the job's own values; sweep keys are ignored.

    Raises:
        InvalidConfigError: If a physical value is out of range
    """
    ignored = sorted(key for key in values if key not in PARAMETER_KEYS)
    if ignored:
        logger.warning(f"Keys {', '.join(ignored)} do not apply to a preset sweep and are ignored")
    parameters = {key: value for key, value in values.items() if key in PARAMETER_KEYS}
    spdc, modulation = params_from_config({**config_from_params(job.spdc, job.modulation), **parameters})
    logger.info(f"Sweep {job.name} runs with {len(parameters)} parameter overrides")
    return replace(job, spdc=spdc, modulation=modulation)
