"""Command-line frontend for hofer-lab.

Exit codes: 0 when every invariant of the run holds, 2 when a violation was found,
1 for configuration or runtime errors (reported as one JSON object on stderr).
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from pydantic import ValidationError

from .config import (
    AKSection,
    ConvergenceSection,
    DiophantineSection,
    ExpLiouvilleAlpha,
    ExperimentConfig,
    HarnessSection,
    LabSettings,
    RecurrenceSection,
    RigiditySection,
    get_lab_settings,
    load_experiment_config,
)
from .core import output
from .core.ak_forge import ak_build, conjugated_rotation, plan_schedule
from .core.diophantine import ContinuedFraction, TorusVector, exp_liouville_witnesses, verify_certificate
from .core.errors import ConfigurationError, LabError
from .core.experiments import (
    columns_converge,
    entropy_slope,
    hofer_convergence_diagnostic,
    inequality_harness,
    lab_constants,
    recurrence_experiment,
    recurrence_pairs,
    rigidity_scan,
)
from .core.models import GridSpec, IntegratorParams, NormEstimate, fraction_to_str, to_fraction
from .core.norms import NOISE_FLOOR_FACTOR
from .core.phase_space import grid_mesh, level_counts
from .core.sweep import configure_workers

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


def _metadata(command: str, config: ExperimentConfig) -> output.RunMetadata:
    manifold, grid, integrator = config.manifold, config.grid, config.integrator
    return output.RunMetadata(
        command=command,
        config_sha256=output.config_digest(config.model_dump_json()),
        seed=config.seed,
        grid="x".join(str(c) for c in grid.counts) + f" levels={grid.levels}",
        meshes=[grid_mesh(manifold, counts) for counts in level_counts(manifold, grid)],
        tolerance_policy=(
            f"implicit-midpoint step={integrator.step!r} tol={integrator.tolerance!r}; "
            f"certificates below {NOISE_FLOOR_FACTOR:g}x tol"
        ),
    )


def _emit(
    command: str,
    config: ExperimentConfig,
    out_dir: Path,
    columns: Sequence[str],
    rows: List[List[Any]],
    summary: Dict[str, Any],
    estimates: Optional[List[NormEstimate]] = None,
) -> None:
    metadata = _metadata(command, config)
    output.write_csv(out_dir / f"{command}.csv", columns, rows, metadata)
    if estimates is not None:
        norms_path = out_dir / f"{command}-norms.csv"
        output.write_csv(norms_path, output.NORM_COLUMNS, output.norm_rows(estimates), metadata)
    output.write_summary(out_dir / f"{command}.json", summary)


def _exit_for(invariants: Dict[str, Optional[bool]]) -> int:
    return EXIT_VIOLATION if any(value is False for value in invariants.values()) else EXIT_OK


# ============================================================================
# Subcommands
# ============================================================================


def run_constants(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    sampled, constants = lab_constants(config.manifold, config.grid, config.atlas)
    rows = output.constants_rows(config.manifold.kind.value, sampled, constants)
    summary = {"atlas": sampled.model_dump(), "constants": constants.model_dump(), "invariants": {}}
    _emit("constants", config, out_dir, output.CONSTANTS_COLUMNS, rows, summary)
    return EXIT_OK


def run_verify_inequality(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.harness or HarnessSection()
    family = section.family.model_copy(update={"integrator": config.integrator})
    if args.count is not None:
        section = section.model_copy(update={"count": args.count})
    sampled, constants = lab_constants(family.manifold, config.grid, config.atlas)
    report = inequality_harness(family, section.count, config.seed, constants, sampled.lipschitz_L, config.grid)
    invariants = {
        "no_violations": report.violations == 0,
        "witness_found_for_all_sub_delta": report.witness_successes == report.witness_attempts,
        "complete": not report.partial,
    }
    summary = {
        "report": report.model_dump(mode="json", exclude={"samples"}),
        "invariants": invariants,
    }
    _emit(
        "verify-inequality",
        config,
        out_dir,
        output.HARNESS_COLUMNS,
        output.harness_rows(report),
        summary,
        estimates=output.harness_estimates(report),
    )
    return _exit_for(invariants)


def run_rigidity(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.rigidity or RigiditySection()
    _, constants = lab_constants(config.manifold, config.grid, config.atlas)
    alpha = section.alpha.build()
    schedule = section.alpha.growth if isinstance(section.alpha, ExpLiouvilleAlpha) else None
    if section.approximant_stage is not None:
        planned = plan_schedule(section.approximant_stage, integrator=config.integrator)
        built = ak_build(planned, config.grid)
        if not built.complete:
            raise LabError(f"approximant build failed: {built.failure}", {"stage": built.failed_stage})
        base: Any = built.approximants[-1]
    else:
        representative = TorusVector.of(alpha).representative()[0]
        base = conjugated_rotation(section.conjugator, representative)
    report = rigidity_scan(
        base,
        alpha,
        constants.C,
        config.grid,
        manifold=config.manifold,
        iterates=section.iterates,
        q_limit=section.q_limit,
        c=section.c,
        schedule=schedule,
    )
    invariants = {"holder": report.holder_ok, "envelope": report.envelope_ok, "exp_chain": report.chain_ok}
    summary = {
        "alpha_representative": report.alpha_representative,
        "studies_approximant": report.studies_approximant,
        "hofer_decreasing": report.hofer_decreasing,
        "c0_decreasing": report.c0_decreasing,
        "C": constants.C,
        "invariants": invariants,
    }
    _emit(
        "rigidity",
        config,
        out_dir,
        output.RIGIDITY_COLUMNS,
        output.rigidity_rows(report),
        summary,
        estimates=output.rigidity_estimates(report),
    )
    return _exit_for(invariants)


def run_ak_build(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.ak or AKSection()
    if section.schedule is not None:
        schedule = section.schedule.model_copy(update={"integrator": config.integrator})
    else:
        schedule = plan_schedule(section.stages, base_peak=section.base_peak, integrator=config.integrator)
    result = ak_build(schedule, config.grid)
    invariants = {"all_stages_accepted": result.complete, "derivative_ledger": result.derivative_ledger_ok}
    summary = {
        "alphas": [fraction_to_str(stage.alpha) for stage in schedule.stages],
        "failed_stage": result.failed_stage,
        "failure": result.failure,
        "invariants": invariants,
    }
    _emit("ak-build", config, out_dir, output.AK_COLUMNS, output.ak_rows(result), summary)
    return _exit_for(invariants)


def run_recurrence(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.recurrence or RecurrenceSection()
    reports = [recurrence_experiment(section.alpha.build(), section.region, section.N, manifold=config.manifold)]
    reports += recurrence_pairs(section.pairs, config.seed, section.pairs_N)
    invariants = {"density_above_bound": all(r.passed for r in reports)}
    summary = {"runs": len(reports), "failures": sum(not r.passed for r in reports), "invariants": invariants}
    _emit("recurrence", config, out_dir, output.RECURRENCE_COLUMNS, output.recurrence_rows(reports), summary)
    return _exit_for(invariants)


def run_entropy(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.entropy
    if section is None:
        raise ConfigurationError("the entropy subcommand needs an 'entropy' section with a map")
    fit = entropy_slope(section.map, section.n_max, config.grid, config.manifold)
    invariants = {
        "slope_within_limit": None if section.max_slope is None else fit.slope <= section.max_slope,
    }
    summary = {
        "slope": fit.slope,
        "bound": fit.bound,
        "n_used": list(fit.n_used),
        "partial": fit.partial,
        "invariants": invariants,
    }
    _emit("entropy", config, out_dir, output.ENTROPY_COLUMNS, output.entropy_rows(fit), summary)
    return _exit_for(invariants)


def _parse_check(text: Optional[str]) -> Optional[Fraction]:
    if text is None:
        return None
    try:
        return to_fraction(text.split("=", 1)[-1])
    except ValueError as e:
        raise ConfigurationError(f"--check expects c=<rational>, got {text!r}") from e


def run_diophantine(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.diophantine or DiophantineSection()
    if args.construct is not None:
        section = section.model_copy(
            update={"alpha": ExpLiouvilleAlpha(schedule=args.construct, stages=args.stages), "expect_witness": True}
        )
    c = _parse_check(args.check) or section.c
    k_max = args.k_max or section.k_max
    alpha = section.alpha.build()
    if not isinstance(alpha, ContinuedFraction):
        raise ConfigurationError("the diophantine subcommand needs an irrational rotation number")
    certificate = exp_liouville_witnesses(alpha, c, k_max)
    verified = verify_certificate(certificate, alpha)
    invariants = {
        "certificate_verified": verified,
        "witness_present": bool(certificate.witnesses) if section.expect_witness else None,
    }
    summary = {
        "continued_fraction": alpha.descriptor(),
        "proves_liouville": alpha.proves_liouville,
        "certificate": certificate.to_json_dict(),
        "invariants": invariants,
    }
    _emit("diophantine", config, out_dir, output.LIOUVILLE_COLUMNS, output.liouville_rows(certificate), summary)
    return _exit_for(invariants)


def run_convergence(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    section = config.convergence or ConvergenceSection()
    alpha = section.alpha.build()
    if not isinstance(alpha, ContinuedFraction):
        raise ConfigurationError("the convergence subcommand needs a continued fraction")
    alpha.ensure(section.terms)
    sequence = [Fraction(p, q) for p, q in alpha.convergents()[: section.terms]]
    rows = hofer_convergence_diagnostic(sequence, alpha, section.j_list, manifold=config.manifold)
    columns = columns_converge(rows)
    invariants = {"columns_converge": all(columns.values())}
    summary = {"columns": {str(j): ok for j, ok in columns.items()}, "invariants": invariants}
    _emit("convergence", config, out_dir, output.CONVERGENCE_COLUMNS, output.convergence_rows(rows), summary)
    return _exit_for(invariants)


COMMANDS: Dict[str, Callable[[argparse.Namespace, ExperimentConfig, Path], int]] = {
    "constants": run_constants,
    "verify-inequality": run_verify_inequality,
    "rigidity": run_rigidity,
    "ak-build": run_ak_build,
    "recurrence": run_recurrence,
    "entropy": run_entropy,
    "diophantine": run_diophantine,
    "convergence": run_convergence,
}


# ============================================================================
# Argument Parsing
# ============================================================================


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigurationError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise ConfigurationError(f"{self.prog}: {message}", {"usage": self.format_usage().strip()})


def build_parser() -> argparse.ArgumentParser:
    common = LabArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=int, help="Override the config seed")
    common.add_argument("--grid", help="Sample grid 'NxM' (overrides the config)")
    common.add_argument("--out", type=Path, help="Output directory (default: $HOFER_LAB_OUT_DIR or results)")
    common.add_argument("--tol", type=float, help="Integrator fixed-point tolerance")
    common.add_argument("--threads", type=int, help="Sweep worker count (affects speed only)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level")

    parser = LabArgumentParser(prog="hofer-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="Atlas ε, L and inequality δ, C")
    harness = sub.add_parser("verify-inequality", parents=[common], help="Seeded Hölder-inequality harness")
    harness.add_argument("--count", type=int, help="Number of samples")
    sub.add_parser("rigidity", parents=[common], help="Rigidity scan along convergent denominators")
    sub.add_parser("ak-build", parents=[common], help="Build and measure Anosov-Katok approximants")
    sub.add_parser("recurrence", parents=[common], help="Return densities against the recurrence bound")
    sub.add_parser("entropy", parents=[common], help="Derivative-growth entropy bound")
    dio = sub.add_parser("diophantine", parents=[common], help="Continued fractions and Liouville certificates")
    dio.add_argument("--construct", help="Growth schedule such as c_n=n")
    dio.add_argument("--stages", type=int, default=4, help="Constructed stages")
    dio.add_argument("--check", help="Decay parameter as c=<rational>")
    dio.add_argument("--k-max", type=int, help="Largest k scanned")
    sub.add_parser("convergence", parents=[common], help="Hofer-bound convergence along convergents")
    sub.add_parser("schema", help="Print the experiment config JSON schema")
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    update: Dict[str, Any] = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.grid is not None:
        try:
            update["grid"] = GridSpec.parse(args.grid, levels=config.grid.levels)
        except (ValueError, ValidationError) as e:
            raise ConfigurationError(str(e)) from e
    if args.tol is not None:
        try:
            update["integrator"] = IntegratorParams.model_validate(
                {**config.integrator.model_dump(), "tolerance": args.tol}
            )
        except ValidationError as e:
            raise ConfigurationError(f"invalid --tol {args.tol!r}: {e}") from e
    return config.model_copy(update=update) if update else config


def _report_error(error: Exception) -> None:
    details = error.details if isinstance(error, LabError) else {}
    payload = {"error": str(error), "type": type(error).__name__, "details": details}
    print(json.dumps(payload, default=str), file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None, settings: Optional[LabSettings] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "schema":
            print(json.dumps(ExperimentConfig.model_json_schema(), indent=2, sort_keys=True))
            return EXIT_OK
        settings = settings or get_lab_settings()
        logging.basicConfig(
            level=getattr(logging, args.log_level or settings.log_level),
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        configure_workers(args.threads or settings.threads)
        config = _apply_overrides(load_experiment_config(args.config), args)
        out_dir = args.out or Path(config.output_dir or settings.out_dir)
        logger.info("running %s into %s", args.command, out_dir)
        return COMMANDS[args.command](args, config, out_dir)
    except (LabError, ValueError) as e:
        _report_error(e)
        return EXIT_ERROR
    except Exception as e:
        logger.exception("unexpected failure")
        _report_error(e)
        return EXIT_ERROR


def main() -> None:
    """Main entry point for the hofer-lab command."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
