"""
Command-line entry point.

Usage:
    $ python -m MonoHam gen --kind gradient --m 4 --order 3 --out fields.json
    $ python -m MonoHam check --input fields.json --mode joint
    $ python -m MonoHam pipeline --input fields.json --report report.json

Exit codes: 0 every check passed, 1 a mathematical failure (witness or violation),
2 a usage, input, size or internal error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Callable, Dict, List, Optional

import numpy as np

from MonoHam import __version__
from MonoHam.core import (CheckResult, FieldTuple, GridHamiltonian, InputFormatError, InternalError, MonoHamError,
                          NInvolution)
from MonoHam.hamiltonian import (VARIANT_CORRECTED, VARIANT_PRINTED, ConvergenceError, NotMonotoneError,
                                 antisymmetrize, build_maximal_H, build_two_var_F, lift_F_to_H,
                                 two_var_F_checks, verify_dualrep, verify_representation)
from MonoHam.loggers.my_logger import setup_logging
from MonoHam.monotonicity import (METHOD_ENUMERATE, METHOD_NEGATIVE_CYCLE, CycleWitness, check_all_orders,
                                  check_joint, check_single, check_step, cost_tensor)
from MonoHam.scenarios.field_examples import KINDS, LAYOUTS, generate_example
from MonoHam.transport import (METHOD_EXACT, METHOD_LOCAL, diagonal_coupling, duality_gap,
                               solve_involution_polar, solve_sigma_kantorovich, violating_cycle_from_coupling)
from MonoHam.utilities.bcolors import bcolors
from MonoHam.utilities.config_loader import ConfigLoader, SolverParameters, fields_to_frame
from MonoHam.utilities.tools import SEED_STREAMS, dump_json, file_digest, get_timestamp, spawn_seeds

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

GAP_TOL = 1e-7
WEAK_DUALITY_TOL = 1e-8
ZERO_TOL = 1e-8
ANTISYMMETRY_TOL = 1e-12

METHOD_ALIASES = {"enum": METHOD_ENUMERATE, "bellman": METHOD_NEGATIVE_CYCLE,
                  METHOD_ENUMERATE: METHOD_ENUMERATE, METHOD_NEGATIVE_CYCLE: METHOD_NEGATIVE_CYCLE}


@dataclass
class RunReport:
    """Machine-readable record of one CLI run; only ``timing`` and ``created`` vary between reruns."""
    command: List[str]
    version: str = __version__
    input_digest: Dict[str, str] = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)
    created: str = field(default_factory=get_timestamp)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAIL

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def timed(self, stage: str, func: Callable, *args, **kwargs):
        logger.info("stage %s started", stage)
        start = perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            self.timing[stage] = perf_counter() - start
            logger.info("stage %s finished in %.3f s", stage, self.timing[stage])

    def to_dict(self) -> dict:
        return {"command": self.command, "version": self.version, "input_digest": self.input_digest,
                "parameters": self.parameters, "seeds": self.seeds, "passed": self.passed,
                "checks": [check.to_dict() for check in self.checks], "results": self.results,
                "timing": self.timing, "created": self.created}


def _outcome_check(name: str, outcome, operation: str) -> CheckResult:
    if isinstance(outcome, CycleWitness):
        return CheckResult(name, False, abs(outcome.defect), operation=operation, witness=outcome.to_dict())
    return CheckResult(name, True, 0.0, operation=operation, details={"min_defect": outcome.min_defect})


def _load_fields(args, report: RunReport) -> FieldTuple:
    path = Path(args.input)
    report.input_digest[str(path)] = file_digest(path)
    return ConfigLoader().load_fields(path)


def _selected_field(fields: FieldTuple, ell: int):
    if not 1 <= ell <= fields.order - 1:
        raise InputFormatError(f"--field {ell} is outside 1..{fields.order - 1} for order {fields.order}")
    return fields.field(ell)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_check(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    order = args.order or fields.order
    tolerance = params.tolerance if args.tolerance is None else args.tolerance
    method = METHOD_ALIASES[args.method]
    if args.mode == "joint":
        if args.order and args.order != fields.order:
            raise MonoHamError(f"--order {args.order} differs from the fields' order {fields.order}")
        outcome = check_joint(fields, tolerance, cap=params.enumeration_cap)
        report.add(_outcome_check("check_joint", outcome, "check_joint"))
        return
    u = _selected_field(fields, args.field)
    if args.mode == "single":
        outcome = check_single(fields.domain, u, order, tolerance, method, cap=params.enumeration_cap)
        report.add(_outcome_check("check_single", outcome, "check_single"))
    elif args.mode == "step":
        outcome = check_step(fields.domain, u, order, args.step, tolerance, cap=params.enumeration_cap)
        report.add(_outcome_check("check_step", outcome, "check_step"))
    else:
        outcome = check_all_orders(fields.domain, u, tolerance, cap=params.enumeration_cap)
        report.add(_outcome_check("check_all_orders", outcome, "check_all_orders"))


def _build(fields: FieldTuple, params: SolverParameters, report: RunReport, tol=None, max_iter=None):
    H, representation = report.timed(
        "build_maximal_H", build_maximal_H, fields, tol=tol or params.fixed_point_tol,
        max_iter=max_iter or params.max_iter, tolerance=params.tolerance, check_tol=params.check_tol,
        cap=params.tensor_cap, max_variables=params.lp_max_variables)
    report.checks.extend(representation.checks)
    report.results["representation"] = representation.to_dict()
    return H, representation


def cmd_hamiltonian_build(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    H, representation = _build(fields, params, report, args.tol, args.max_iter)
    if args.emit:
        dump_json(H.to_dict(), args.emit)
    if args.trace:
        representation.trace_frame().to_csv(args.trace, index=False)


def cmd_hamiltonian_verify(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    report.input_digest[str(args.hamiltonian)] = file_digest(args.hamiltonian)
    H = GridHamiltonian.from_dict(ConfigLoader().load(args.hamiltonian), trust_flags=False)
    representation = verify_representation(H, fields, params.check_tol)
    report.checks.extend(representation.checks)
    report.results["representation"] = representation.to_dict()


def cmd_hamiltonian_lift(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    order = args.order or fields.order
    u = _selected_field(fields, args.field)
    F = report.timed("build_two_var_F", build_two_var_F, fields.domain, u, order, params.tolerance,
                     params.check_tol, params.lp_max_variables)
    report.checks.extend(two_var_F_checks(F, fields.domain, u, order, params.check_tol))
    variants = [VARIANT_PRINTED, VARIANT_CORRECTED] if args.variant == "both" else [args.variant]
    lifts = {}
    for variant in variants:
        lift = lift_F_to_H(F, order, variant, params.check_tol, params.tensor_cap)
        lifts[variant] = lift.to_dict()
        if args.emit:
            target = Path(args.emit)
            if len(variants) > 1:
                target = target.with_name(f"{target.stem}_{variant}{target.suffix}")
            dump_json(lift.H.to_dict(), target)
    # variant properties are reported, not judged
    report.results["lift"] = lifts
    report.results["F"] = F.to_dict()


def cmd_transport_solve(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    result = report.timed("solve_sigma_kantorovich", solve_sigma_kantorovich, fields, params.tensor_cap,
                          params.lp_max_variables, params.lp_feasibility_tol, params.lp_pivot_tol)
    report.results["transport"] = {"value": result.value, "diagnostics": result.diagnostics}
    report.add(CheckResult("lp_optimum_zero", result.value >= -ZERO_TOL, max(-result.value, 0.0),
                           operation="solve_sigma_kantorovich"))
    witness = violating_cycle_from_coupling(result, fields, params.tolerance)
    if witness is not None:
        report.results["transport"]["violating_cycle"] = witness.to_dict()
    if args.emit:
        dump_json(result.coupling.to_dict(), args.emit)


def _involution(fields: FieldTuple, params: SolverParameters, report: RunReport, method: str, seed: int,
                restarts: int):
    result = report.timed("solve_involution_polar", solve_involution_polar, fields, method=method, seed=seed,
                          restarts=restarts, factorial_cap=params.involution_factorial_cap)
    report.results["involution"] = result.to_dict()
    report.add(CheckResult("involution_optimum_zero", result.value >= -ZERO_TOL, max(-result.value, 0.0),
                           operation="solve_involution_polar"))
    return result


def cmd_involution_solve(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    seeds = report.seeds["streams"]
    _involution(fields, params, report, args.method, args.seed if args.seed is not None else seeds["involution"],
                args.restarts or params.restarts)


def _duality(fields: FieldTuple, H: GridHamiltonian, report: RunReport):
    bar_H = report.timed("antisymmetrize", antisymmetrize, H)
    residual = float(np.abs(bar_H.rotation_sum()).max())
    scale = 1.0 + float(np.abs(H.values).max())
    report.add(CheckResult("antisymmetrize", residual <= ANTISYMMETRY_TOL * scale, residual,
                           operation="antisymmetrize"))
    dual = verify_dualrep(H, fields, bar_H)
    report.checks.extend(dual.checks)
    gap = duality_gap(fields, bar_H, NInvolution.identity(fields.m, fields.order))
    report.results["duality_gap"] = gap
    report.add(CheckResult("duality_gap", -WEAK_DUALITY_TOL <= gap <= GAP_TOL, abs(gap), operation="duality_gap"))


def cmd_duality_verify(args, params: SolverParameters, report: RunReport):
    fields = _load_fields(args, report)
    H, _ = _build(fields, params, report)
    _duality(fields, H, report)


def cmd_gen(args, params: SolverParameters, report: RunReport):
    seed = args.seed if args.seed is not None else report.seeds["streams"]["generate"]
    fields = generate_example(args.kind, args.m, args.d, args.order, seed, args.layout)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        fields_to_frame(fields).to_csv(out, index=False)
    else:
        dump_json(fields.to_dict(), out)
    report.results["generated"] = {"kind": args.kind, "path": str(out), "seed": seed, "digest": file_digest(out)}


def cmd_pipeline(args, params: SolverParameters, report: RunReport):
    """check -> psi -> fixed point -> bar_H -> dual representation -> LP -> involution -> duality gap."""
    fields = _load_fields(args, report)
    outcome = report.timed("check_joint", check_joint, fields, params.tolerance, params.enumeration_cap)
    report.add(_outcome_check("check_joint", outcome, "check_joint"))
    if not outcome.passed:
        logger.warning("fields are not jointly monotone; pipeline stops after the check")
        return
    H, _ = _build(fields, params, report)
    _duality(fields, H, report)
    transport = report.timed("solve_sigma_kantorovich", solve_sigma_kantorovich, fields, params.tensor_cap,
                             params.lp_max_variables, params.lp_feasibility_tol, params.lp_pivot_tol)
    report.results["transport"] = {"value": transport.value, "diagnostics": transport.diagnostics}
    report.add(CheckResult("lp_optimum_zero", abs(transport.value) <= ZERO_TOL, abs(transport.value),
                           operation="solve_sigma_kantorovich"))
    diagonal_value = diagonal_coupling(fields.domain, fields.order).integrate(cost_tensor(fields, params.tensor_cap))
    report.add(CheckResult("diagonal_attains", abs(diagonal_value - transport.value) <= ZERO_TOL,
                           abs(diagonal_value - transport.value), operation="diagonal_coupling"))
    if fields.domain.is_uniform:
        method = METHOD_EXACT if fields.m <= params.involution_factorial_cap else METHOD_LOCAL
        _involution(fields, params, report, method, report.seeds["streams"]["involution"], params.restarts)
    else:
        report.results["involution"] = {"skipped": "non-uniform weights"}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def get_argument_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config-file', type=str, help='JSON file of solver parameters.')
    common.add_argument('-v', '--verbose', action='count', default=0, help='More logging (repeat for debug).')
    common.add_argument('-q', '--quiet', action='store_true', help='Log warnings only.')
    common.add_argument('--no-color', action='store_true', help='Plain summary output.')
    common.add_argument('--report', type=str, help='Write the JSON run report here instead of stdout.')
    common.add_argument('--tensor-cap', type=int, help='Largest dense tensor, in entries.')
    common.add_argument('--seed', type=int, help='Master seed.')

    parser = argparse.ArgumentParser(prog='MonoHam', description='Monotonicity, Hamiltonian and transport checks '
                                     'for sampled vector fields.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    check = sub.add_parser('check', parents=[common], help='Cycle monotonicity checks.')
    check.add_argument('-i', '--input', required=True, help='Fields file (JSON or CSV).')
    check.add_argument('--mode', choices=['joint', 'single', 'step', 'all'], default='joint')
    check.add_argument('--order', type=int, help='Cycle length N (defaults to the fields order).')
    check.add_argument('--step', type=int, default=1)
    check.add_argument('--field', type=int, default=1, help='Field slot used by single-field modes.')
    check.add_argument('--tolerance', type=float)
    check.add_argument('--method', choices=sorted(METHOD_ALIASES), default='enum')
    check.set_defaults(handler=cmd_check)

    hamiltonian = sub.add_parser('hamiltonian', help='Hamiltonian representations.')
    ham_sub = hamiltonian.add_subparsers(dest='action', required=True)
    build = ham_sub.add_parser('build', parents=[common])
    build.add_argument('-i', '--input', required=True)
    build.add_argument('--tol', type=float, help='Fixed-point tolerance.')
    build.add_argument('--max-iter', type=int)
    build.add_argument('--emit', type=str, help='Write the Hamiltonian tensor here.')
    build.add_argument('--trace', type=str, help='Write the per-iteration trace as CSV here.')
    build.set_defaults(handler=cmd_hamiltonian_build)
    verify = ham_sub.add_parser('verify', parents=[common])
    verify.add_argument('--hamiltonian', required=True)
    verify.add_argument('--fields', dest='input', required=True)
    verify.set_defaults(handler=cmd_hamiltonian_verify)
    lift = ham_sub.add_parser('lift-f', parents=[common])
    lift.add_argument('-i', '--input', required=True)
    lift.add_argument('--order', type=int)
    lift.add_argument('--field', type=int, default=1)
    lift.add_argument('--variant', choices=[VARIANT_PRINTED, VARIANT_CORRECTED, 'both'], default='both')
    lift.add_argument('--emit', type=str)
    lift.set_defaults(handler=cmd_hamiltonian_lift)

    transport = sub.add_parser('transport', help='Sigma-invariant transport.')
    transport_sub = transport.add_subparsers(dest='action', required=True)
    solve = transport_sub.add_parser('solve', parents=[common])
    solve.add_argument('-i', '--input', required=True)
    solve.add_argument('--emit', type=str, help='Write the optimal coupling here.')
    solve.set_defaults(handler=cmd_transport_solve)

    involution = sub.add_parser('involution', help='N-involution polar problem.')
    involution_sub = involution.add_subparsers(dest='action', required=True)
    inv_solve = involution_sub.add_parser('solve', parents=[common])
    inv_solve.add_argument('-i', '--input', required=True)
    inv_solve.add_argument('--method', choices=[METHOD_EXACT, METHOD_LOCAL], default=METHOD_EXACT)
    inv_solve.add_argument('--restarts', type=int)
    inv_solve.set_defaults(handler=cmd_involution_solve)

    duality = sub.add_parser('duality', help='Duality gap at the identity.')
    duality_sub = duality.add_subparsers(dest='action', required=True)
    dual_verify = duality_sub.add_parser('verify', parents=[common])
    dual_verify.add_argument('--fields', dest='input', required=True)
    dual_verify.set_defaults(handler=cmd_duality_verify)

    gen = sub.add_parser('gen', parents=[common], help='Generate an example fields file.')
    gen.add_argument('--kind', choices=KINDS, required=True)
    gen.add_argument('--m', type=int, default=4)
    gen.add_argument('--d', type=int, default=1)
    gen.add_argument('--order', type=int, default=3)
    gen.add_argument('--layout', choices=LAYOUTS, default='random')
    gen.add_argument('--out', required=True)
    gen.set_defaults(handler=cmd_gen)

    pipeline = sub.add_parser('pipeline', parents=[common], help='Run every stage on one fields file.')
    pipeline.add_argument('-i', '--input', required=True)
    pipeline.set_defaults(handler=cmd_pipeline)
    return parser


def _seed_record(seed: int) -> dict:
    return {"scheme": "numpy SeedSequence(seed).spawn(%d), stream k -> generate_state(1)[0]" % len(SEED_STREAMS),
            "seed": seed, "streams": spawn_seeds(seed)}


def run_pipeline(fields_file, params: Optional[SolverParameters] = None) -> RunReport:
    """Run every stage on one fields file; ``report.exit_code`` is the CLI exit code.

    Input, size and convergence errors propagate as exceptions.
    """
    params = params or SolverParameters().with_environment()
    report = RunReport(command=["pipeline", "-i", str(fields_file)], parameters=params.to_dict(),
                       seeds=_seed_record(params.seed))
    cmd_pipeline(argparse.Namespace(input=fields_file), params, report)
    return report


def _resolve_parameters(args) -> SolverParameters:
    params = ConfigLoader().load_parameters(getattr(args, 'config_file', None))
    return params.with_overrides(tensor_cap=getattr(args, 'tensor_cap', None), seed=getattr(args, 'seed', None))


def _print_summary(report: RunReport, colors: bcolors, stream):
    print(colors.header(f"MonoHam {' '.join(report.command)}"), file=stream)
    for check in report.checks:
        print(f"  {colors.status(check.passed)}  {check.name:<28} residual {check.residual:.3e}", file=stream)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = get_argument_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_PASS
    setup_logging(-1 if args.quiet else args.verbose)
    report = RunReport(command=argv)
    try:
        params = _resolve_parameters(args)
        report.parameters = params.to_dict()
        report.seeds = _seed_record(params.seed)
        args.handler(args, params, report)
    except NotMonotoneError as exc:
        report.add(CheckResult("jointly_monotone", False, abs(exc.witness.defect), operation="check_joint",
                               witness=exc.witness.to_dict()))
        logger.warning("%s", exc)
    except ConvergenceError as exc:
        report.add(CheckResult("fixed_point", False, exc.residual, operation="build_maximal_H"))
        report.results["representation"] = exc.report.to_dict()
        logger.warning("%s", exc)
    except InternalError as exc:
        print(f"MonoHam: internal error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (MonoHamError, ValueError, OSError) as exc:
        print(f"MonoHam: {exc}", file=sys.stderr)
        return EXIT_ERROR

    text = dump_json(report, args.report)
    if args.report:
        _print_summary(report, bcolors(enabled=not args.no_color), sys.stdout)
    else:
        print(text)
    return report.exit_code
