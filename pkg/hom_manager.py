#!/usr/bin/env python3
"""
HOM Lab - Sweep and Analysis Utility

Runs parameter sweeps, figure datasets, resonance analysis and the
validation suite from the command line.

Usage:
    python hom_manager.py --help
    python hom_manager.py sweep --config job.env --out sweep.csv
    python hom_manager.py figure fig4 --format jsonl --out fig4.jsonl
    python hom_manager.py resonance --n 0 --with-k
    python hom_manager.py validate

Exit codes: 0 success, 1 validation or computation failure, 2 configuration error.
"""
import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from homlab import settings
from biphoton.models import ModulationSpec, lab_reference, normalize
from biphoton.services.resonance_toolkit import (
    HALF_MINIMUM,
    HALF_PROMINENCE,
    epsilon_estimate,
    hwhm_ds,
    hwhm_k,
    locate_resonance,
)
from biphoton.services.sweep_runner import (
    FIGURE_IDS,
    WRITERS,
    figure_job,
    job_with_overrides,
    job_with_parameters,
    run_sweep,
    sweep_job_from_config,
    validate_suite,
)
from biphoton.utils.config_schema import load_config, params_from_config
from biphoton.utils.exceptions import BiphotonError, ConfigurationError, InvalidConfigError

logger = logging.getLogger('homlab.cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


@contextmanager
def open_output(path):
    if path is None:
        yield sys.stdout
        return
    with open(Path(path), 'w', encoding='utf-8', newline='') as stream:
        yield stream


def _overrides(args) -> dict:
    return {'threads': args.threads, 'quad_order': args.quad_order, 'tol': args.tol}


def _emit(result, args) -> int:
    with open_output(args.out) as stream:
        WRITERS[args.format](result, stream)
    if args.out:
        print(f"Wrote {len(result.rows)} rows to {args.out}")
    if result.error_count:
        print(f"{result.error_count} rows carry errors (see the 'error' column)", file=sys.stderr)
        if args.strict:
            return EXIT_FAILURE
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.config:
        raise InvalidConfigError("The sweep command needs --config <path>")
    job = job_with_overrides(sweep_job_from_config(load_config(args.config)), **_overrides(args))
    return _emit(run_sweep(job), args)


def cmd_figure(args) -> int:
    job = figure_job(args.figure_id)
    if args.config:
        job = job_with_parameters(job, load_config(args.config))
    job = job_with_overrides(job, **_overrides(args))
    return _emit(run_sweep(job), args)


def cmd_resonance(args) -> int:
    if args.config:
        spdc, _ = params_from_config(load_config(args.config))
    else:
        spdc = lab_reference()
    state = normalize(spdc, ModulationSpec())

    report = locate_resonance(state, args.n, compute_k=args.with_k)
    report = hwhm_ds(state, report, level=args.level)
    if args.with_k:
        report = hwhm_k(state, report)

    print(f"Resonance n={report.order_n}")
    print(f"  2 Omega beta / pi : {report.beta_center_over_beta0:.9f}")
    print(f"  beta              : {report.beta_center * 1e18:.6f} as")
    print(f"  D_S at center     : {report.ds_at_center:.9f}")
    print(f"  HWHM ({report.hwhm_convention}) : epsilon={report.hwhm_epsilon:.6g}, "
          f"delta L={report.hwhm_delta_l * 1e9:.4f} nm")
    print(f"  epsilon estimate  : {epsilon_estimate(state, args.n):.6g}")
    if args.with_k:
        print(f"  K at center       : {report.k_at_center:.6f} ({report.k_method}), K0={report.k0:.6f}")
        print(f"  K half-width      : {report.k_hwhm_attoseconds:.4f} as, wing dip {report.wing_dip_depth:.3e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_suite(q_sign=1.0 if args.mis_signed_q else -1.0, quad_order=args.quad_order)
    for check in report.checks:
        status = 'PASS' if check.passed else 'FAIL'
        print(f"{status}  {check.name}: {check.value:.3e} <= {check.tolerance:.1e} {check.detail}".rstrip())
    failed = sum(1 for check in report.checks if not check.passed)
    print(f"\n{len(report.checks) - failed} passed, {failed} failed")
    return EXIT_OK if report.passed else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=f'HOM Lab {settings.VERSION} - biphoton symmetry and entanglement sweeps',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s sweep --config job.env --out sweep.csv
  %(prog)s figure fig5 --threads 4 --out fig5.csv
  %(prog)s figure fig6 --config lab.env --out fig6.csv
  %(prog)s resonance --n 0 --with-k
  %(prog)s validate
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    def add_output_flags(sub):
        sub.add_argument('--out', help='Output path (default: stdout)')
        sub.add_argument('--format', choices=sorted(WRITERS), default='csv', help='Output format')
        sub.add_argument('--threads', type=int, help='Worker threads')
        sub.add_argument('--quad-order', type=int, help='Gauss-Hermite order of the quadrature oracle')
        sub.add_argument('--tol', type=float, help='Series and truncation tolerance')
        sub.add_argument('--strict', action='store_true', help='Exit 1 if any row carries an error')

    sweep_parser = subparsers.add_parser('sweep', help='Run a sweep from a job file')
    sweep_parser.add_argument('--config', help='Job file (key=value lines)')
    add_output_flags(sweep_parser)

    figure_parser = subparsers.add_parser('figure', help='Run a preconfigured figure sweep')
    figure_parser.add_argument('figure_id', choices=FIGURE_IDS)
    figure_parser.add_argument('--config', help='Job file whose SPDC and modulation keys replace the preset values')
    add_output_flags(figure_parser)

    resonance_parser = subparsers.add_parser('resonance', help='Locate a resonance and measure its widths')
    resonance_parser.add_argument('--config', help='Job file with the SPDC parameters')
    resonance_parser.add_argument('--n', type=int, default=0, help='Resonance order')
    resonance_parser.add_argument('--level', choices=(HALF_MINIMUM, HALF_PROMINENCE), default=HALF_MINIMUM)
    resonance_parser.add_argument('--with-k', action='store_true', help='Also compute the Schmidt-number peak')

    validate_parser = subparsers.add_parser('validate', help='Run the cross-estimator validation suite')
    validate_parser.add_argument('--quad-order', type=int, help='Override the quadrature oracle order')
    validate_parser.add_argument('--mis-signed-q', action='store_true', help='Flip the Mehler coefficient sign')
    return parser


COMMANDS = {
    'sweep': cmd_sweep,
    'figure': cmd_figure,
    'resonance': cmd_resonance,
    'validate': cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    settings.configure_logging()
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("\nInterrupted")
        return EXIT_FAILURE
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BiphotonError as e:
        logger.error(f"Command {args.command} failed: {e.message}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
