import argparse
import logging
import sys

from grassmann_quantization.config_handler import (
    parse_config_file,
    parse_int_list,
    parse_tolerances,
)
from grassmann_quantization.example_geometries import (
    FlatPoint,
    SpherePoint,
    flat_idempotency_residual,
    flat_polarization_residual,
    sphere_cycle,
    sphere_idempotency_residual,
)
from grassmann_quantization.quantization_maps import overcompleteness_residual
from grassmann_quantization.report import REPORT_FORMATS, emit_report, write_path_csv
from grassmann_quantization.verification import (
    DEFAULT_TOLERANCES,
    PATH_GEOMETRIES,
    SUITES,
    SuiteConfig,
    path_study,
    run_suite,
)

# command-line flag -> SuiteConfig field
VERIFY_OPTIONS = {
    "suite": "suite",
    "dim": "dims",
    "rank": "ranks",
    "samples": "samples",
    "seed": "seed",
    "tol": "tolerances",
    "workers": "workers",
    "cases": "cases",
    "out": "output",
}


def _step_list(text):
    return parse_int_list(text) if str(text).strip() else []


def build_parser():
    parser = argparse.ArgumentParser(
        description="Numerical checks of quantization on the cotangent bundle of a Grassmannian."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Run a verification suite and write a report.")
    verify.add_argument(
        "--config",
        type=str,
        help="Path to configuration file (.ini). Command-line arguments override config file values.",
    )
    verify.add_argument(
        "--suite",
        choices=sorted(SUITES),
        default="all",
        help="Suite to run (default: all)",
    )
    verify.add_argument(
        "--dim", type=parse_int_list, default=[2, 3], help="Dimensions d, e.g. 2,3,4 (default: 2,3)"
    )
    verify.add_argument(
        "--rank", type=parse_int_list, default=[1, 2], help="Ranks n, e.g. 1,2 (default: 1,2)"
    )
    verify.add_argument(
        "--samples", type=int, default=20000, help="Monte Carlo samples N (default: 20000)"
    )
    verify.add_argument("--seed", type=int, default=0, help="Root seed (default: 0)")
    verify.add_argument(
        "--tol",
        type=parse_tolerances,
        default={},
        help=f"Tolerance overrides name=value,... Names: {', '.join(DEFAULT_TOLERANCES)}",
    )
    verify.add_argument("--workers", type=int, default=1, help="Worker threads (default: 1)")
    verify.add_argument(
        "--cases", type=int, default=20, help="Random instances per case (default: 20)"
    )
    verify.add_argument(
        "--out",
        type=str,
        default="results/report.json",
        help="Report path (default: results/report.json)",
    )
    verify.add_argument(
        "--format",
        choices=REPORT_FORMATS,
        default="json",
        help="Report format (default: json)",
    )

    path = commands.add_parser("path", help="Discrete-vs-ODE transport convergence series.")
    path.add_argument("--geometry", choices=PATH_GEOMETRIES, default="sphere_octant")
    path.add_argument(
        "--steps",
        type=_step_list,
        default=[300, 600, 1200, 2400],
        help="Step counts m, e.g. 300,3000 (default: 300,600,1200,2400)",
    )
    path.add_argument(
        "--out",
        type=str,
        default="results/path_study.csv",
        help="CSV path (default: results/path_study.csv)",
    )

    examples = commands.add_parser("examples", help="Closed-form flat and sphere examples.")
    examples.add_argument("model", choices=("flat", "sphere"))
    examples.add_argument(
        "--hbar", type=float, default=0.5, help="Planck constant of the flat model (default: 0.5)"
    )
    examples.add_argument(
        "--quad",
        type=int,
        default=None,
        help="Quadrature order (default: 64 for flat, 16 for sphere)",
    )
    return parser


def _given(flag, argv):
    return any(arg == f"--{flag}" or arg.startswith(f"--{flag}=") for arg in argv)


def run_verify(args, argv, parser):
    config_args = {}
    if args.config:
        try:
            config_args = parse_config_file(args.config)
        except (FileNotFoundError, ValueError) as error:
            parser.error(str(error))

    for flag, field_name in VERIFY_OPTIONS.items():
        value = getattr(args, flag)
        if _given(flag, argv) or field_name not in config_args:
            config_args[field_name] = value

    try:
        config = SuiteConfig(**config_args)
    except (TypeError, ValueError) as error:
        parser.error(str(error))

    report = run_suite(config)
    for case in report.cases:
        status = "PASS" if case.passed else "FAIL"
        print(f"{status}  {case.name}: residual={case.residual} bound={case.bound}")
    failed = sum(not case.passed for case in report.cases)
    print(f"\nSuite '{config.suite}': {report.verdict} ({len(report.cases) - failed}/{len(report.cases)} passed)")

    emit_report(report, config.output, args.format)
    return report.exit_code


def run_path(args):
    rows = path_study(args.geometry, args.steps)
    for row in rows:
        print(f"m={row['m']}: error={row['error']:.3e} phase={row['phase']:.6f}")
    write_path_csv(rows, args.out)
    return 0


def run_examples(args):
    if args.model == "flat":
        order = args.quad or 64
        p = FlatPoint.from_coordinates(0.3, 0.0, -0.2, 0.0, hbar=args.hbar)
        w = FlatPoint.from_coordinates(-0.4, 0.0, 0.5, 0.0, hbar=args.hbar)
        continued = FlatPoint.from_coordinates(-0.4, 0.1, 0.5, -0.1, hbar=args.hbar)
        results = {
            "idempotency, real locus": (flat_idempotency_residual(p, w, order), 1e-8),
            "idempotency, continued": (flat_idempotency_residual(p, continued, order), 1e-6),
            "kahler slice polarization": (flat_polarization_residual(p, w, "kahler"), 1e-6),
            "real slice polarization": (
                flat_polarization_residual(
                    p, FlatPoint.from_coordinates(-0.4, 0.0, 0.0, 0.5, hbar=args.hbar), "real_polarized"
                ),
                1e-6,
            ),
        }
    else:
        order = args.quad or 16
        z1 = SpherePoint.from_stereographic(0.3 + 0.2j, 0.3 - 0.2j).stereographic()
        z2 = SpherePoint.from_stereographic(-0.5 + 0.1j, -0.5 - 0.1j).stereographic()
        continued = SpherePoint.from_stereographic(0.2 + 0.1j, 0.25 - 0.05j).stereographic()
        results = {
            "reproducing identity, real points": (sphere_idempotency_residual(z1, z2, order), 1e-8),
            "reproducing identity, continued": (sphere_idempotency_residual(continued, z2, order), 1e-8),
            "quadrature overcompleteness": (
                overcompleteness_residual(sphere_cycle(order), None, None).residual,
                1e-9,
            ),
        }
    passed = True
    for name, (residual, tolerance) in results.items():
        ok = residual <= tolerance
        passed = passed and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: residual={residual:.3e} (tolerance {tolerance:g})")
    return 0 if passed else 1


def main(argv=None):
    """Parse command-line arguments and run the requested command."""
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(format="[%(module)-12s] %(message)s", level=logging.INFO)
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "verify":
        return run_verify(args, argv, parser)
    if args.command == "path":
        return run_path(args)
    return run_examples(args)


if __name__ == "__main__":
    sys.exit(main())
