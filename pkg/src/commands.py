"""
Subcommands
===========

Every CLI subcommand is a function registered with ``@command`` and looked up
through a ``CommandRegistry``. A command receives a ``RunContext`` (validated
config, seed, output directory, positional file arguments), writes its
artifacts and returns the paths it wrote. Failures are raised as
``LabError`` subclasses; the CLI turns them into exit codes.

Usage:
    from src.commands import create_lab_commands

    registry = create_lab_commands()
    outputs = registry.execute("solve", context)
"""

import inspect
import logging
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .arrowspec import (
    CHAR_POLY_TOL,
    CLOSED_FORM_TOL,
    DEFLATION_TOL,
    ORACLE_RESIDUAL_TOL,
    TRACE_TOL,
    run_arrow_suite,
)
from .dirichlet import (
    construct_subsolution,
    exhaustion_strips,
    sandwich_check,
    solve,
    solve_degenerate,
    solve_supersolution,
)
from .errors import DomainError, VerificationFailed
from .harness import (
    analytic_profile_problem,
    convergence_study,
    geodesic_problem,
    guan_inequality_probe,
    manufactured_problem,
    probe_rows,
    run_ladder,
)
from .prodgrid import ProductGrid, read_field_csv, write_field_csv
from .reports import ComparisonSummary, SubsolutionSummary, dumps_sorted, write_model_json, write_rows_csv
from .run_config import RunConfig
from .symcone import TOL_CHECK, TOL_ROOT, OperatorSpec, run_cone_suite

logger = logging.getLogger(__name__)

GRADIENT_FD_TOL = 1e-6
SYMMETRY_TOL = 1e-10
MIN_CONVERGENCE_ORDER = 1.8
COMPARISON_TOL = 1e-7
EXHAUSTION_LEVELS = (0.5, 0.25, 0.125, 0.0625)


@dataclass
class RunContext:
    """Everything a subcommand needs to run and to say where it wrote."""
    config: RunConfig
    output_dir: Path
    seed: int
    files: List[str] = field(default_factory=list)

    def path(self, name: str) -> Path:
        return self.output_dir / name


@dataclass
class CommandInfo:
    """Information about a command."""
    name: str
    function: Callable[[RunContext], List[Path]]
    description: str
    usage: str = ""
    needs_files: int = 0


def command(name: str, description: Optional[str] = None, usage: Optional[str] = None, needs_files: int = 0):
    """
    Decorator to register a function as a subcommand.

    Args:
        name: subcommand name as typed on the command line
        description: one-line help text (defaults to the docstring)
        usage: usage example
        needs_files: number of positional file arguments the command takes
    """
    def decorator(func: Callable) -> Callable:
        func._command_name = name
        func._command_description = description or inspect.getdoc(func) or f"Run {name}"
        func._command_usage = usage or f"{name} CONFIG"
        func._command_needs_files = needs_files
        return func

    return decorator


class CommandRegistry:
    """Registry of laboratory subcommands."""

    def __init__(self):
        self.commands: Dict[str, CommandInfo] = {}

    def add_command(self, func: Callable) -> None:
        if not hasattr(func, "_command_name"):
            raise ValueError(f"Function {func.__name__} is not decorated with @command")
        self.commands[func._command_name] = CommandInfo(
            name=func._command_name,
            function=func,
            description=func._command_description,
            usage=func._command_usage,
            needs_files=func._command_needs_files,
        )

    def help_text(self) -> str:
        """One line per subcommand: usage, then description."""
        width = max((len(info.usage) for info in self.commands.values()), default=0)
        return "\n".join(f"  {info.usage:<{width}}  {info.description}" for info in self.commands.values())

    def list_command_names(self) -> List[str]:
        return list(self.commands)

    def execute(self, name: str, context: RunContext) -> List[Path]:
        info = self.commands.get(name)
        if info is None:
            raise DomainError(f"unknown subcommand {name!r}")
        if len(context.files) != info.needs_files:
            raise DomainError(f"{name} takes {info.needs_files} file argument(s), got {len(context.files)}")
        context.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"COMMAND_START: {name} seed={context.seed} -> {context.output_dir}")
        outputs = info.function(context)
        logger.info(f"COMMAND_DONE: {name} wrote {len(outputs)} file(s)")
        return outputs


# ============================================================================
# SHARED PIECES
# ============================================================================

def cone_suite_operators(max_n: int = 4) -> List[OperatorSpec]:
    """log_ma and σ_k^{1/k} for every k ≤ n ≤ max_n, plus σ_2/σ_1 on n=3."""
    ops: List[OperatorSpec] = []
    for n in range(2, max_n + 1):
        ops.append(OperatorSpec.log_ma(n))
        ops.extend(OperatorSpec.sigma_k_root(n, k) for k in range(1, n + 1))
    ops.append(OperatorSpec.hessian_quotient(3, 2, 1))
    return ops


def cone_row_failures(row: Dict) -> int:
    failures = int(row["violations"])
    failures += int(row["slack_concavity"] < -TOL_CHECK)
    failures += int(row["min_grad_component"] <= 0.0)
    failures += int(row["grad_fd_error"] >= GRADIENT_FD_TOL)
    failures += int(row["symmetry_error"] >= SYMMETRY_TOL)
    failures += int(row["level_residual"] >= TOL_ROOT)
    failures += int(not row["level_monotone"])
    return failures


def tolerance_set(config: RunConfig) -> Dict[str, float]:
    tolerances = config.solver_settings().tolerances()
    tolerances.update({
        "tol_check": TOL_CHECK,
        "tol_root": TOL_ROOT,
        "gradient_fd": GRADIENT_FD_TOL,
        "symmetry": SYMMETRY_TOL,
        "oracle_residual": ORACLE_RESIDUAL_TOL,
        "trace": TRACE_TOL,
        "char_poly": CHAR_POLY_TOL,
        "closed_form": CLOSED_FORM_TOL,
        "deflation": DEFLATION_TOL,
        "comparison": COMPARISON_TOL,
    })
    return tolerances


def _probe_builder(config: RunConfig):
    probe = config.probe
    if probe.family == "geodesic":
        return partial(geodesic_problem, c=probe.geodesic_c, eps_schedule=config.solver.eps_schedule)
    op = config.build_operator()
    chi = config.build_matrix("chi")
    omega = config.build_matrix("omega")
    return lambda grid: manufactured_problem(op, grid, probe.amplitude, chi, omega)


# ============================================================================
# COMMANDS
# ============================================================================

@command("verify-cones", "Sampled structural and growth-criteria checks for every operator family")
def verify_cones(ctx: RunContext) -> List[Path]:
    ops = cone_suite_operators()
    configured = ctx.config.build_operator()
    if configured not in ops:
        ops.append(configured)
    rows = run_cone_suite(ops, ctx.config.run.samples, ctx.seed)
    for row in rows:
        row["failures"] = cone_row_failures(row)
    columns = list(rows[0].keys())
    outputs = [write_rows_csv(ctx.path("cones.csv"), rows, columns)]
    failures = sum(row["failures"] for row in rows)
    if failures:
        raise VerificationFailed(f"cone suite: {failures} failed check(s)", failures)
    return outputs


@command("verify-arrow", "Eigenvalue localization, identities and deflation on random arrow matrices")
def verify_arrow(ctx: RunContext) -> List[Path]:
    arrow = ctx.config.arrow
    result = run_arrow_suite(
        n_values=range(arrow.n_min, arrow.n_max + 1),
        instances=arrow.instances,
        epsilons=arrow.epsilons,
        corner_factors=arrow.corner_factors,
        seed=ctx.seed,
        closed_form_instances=arrow.closed_form_instances,
        deflation_instances=arrow.deflation_instances,
    )
    outputs = [write_rows_csv(ctx.path("arrow.csv"), result.rows)]
    summary = ctx.path("arrow_summary.json")
    summary.write_text(dumps_sorted({
        "closed_form_error": result.closed_form_error,
        "deflation_failures": result.deflation_failures,
        "violations": result.violations,
    }))
    outputs.append(summary)
    if result.violations:
        raise VerificationFailed(f"arrow suite: {result.violations} violation(s)", result.violations)
    return outputs


@command("subsolution", "Construct the strict subsolution φ + t·h from the Poisson function")
def subsolution(ctx: RunContext) -> List[Path]:
    prob = ctx.config.build_problem()
    sub = construct_subsolution(prob, ctx.config.solver.margin_target, ctx.config.solver_settings())
    strips = exhaustion_strips(sub, EXHAUSTION_LEVELS)
    summary = SubsolutionSummary(
        operator=prob.op.label,
        grid=prob.grid.to_dict(),
        t_star=sub.t_star,
        margin=sub.margin,
        normal_derivative_max=sub.normal_derivative_max,
        strips=[asdict(strip) for strip in strips],
    )
    return [
        write_field_csv(ctx.path("subsolution.csv"), {"h": sub.h, "u_sub": sub.u_sub}),
        write_model_json(ctx.path("subsolution.json"), summary),
    ]


@command("solve", "Continuity-method solve of the nondegenerate problem, with barrier sandwich")
def solve_command(ctx: RunContext) -> List[Path]:
    prob = ctx.config.build_problem()
    report, sub = solve(prob, ctx.config.solver.margin_target, ctx.config.solver_settings())
    u_sup = solve_supersolution(prob)
    sandwich = sandwich_check(report.u, sub.u_sub, u_sup, prob.omega)
    summary = report.summary()
    summary.sandwich = dict(asdict(sandwich), ok=sandwich.ok)
    if not sandwich.ok:
        logger.warning(f"SANDWICH_VIOLATION: lower={sandwich.lower_violation:.3e} "
                       f"upper={sandwich.upper_violation:.3e}")
    return [
        write_field_csv(ctx.path("solution.csv"), {"u_sub": sub.u_sub, "u_sup": u_sup, "u": report.u}),
        write_model_json(ctx.path("report.json"), summary),
    ]


@command("solve-degenerate", "Solve the ε-lifted problems down the schedule and tabulate the Cauchy differences")
def solve_degenerate_command(ctx: RunContext) -> List[Path]:
    prob = ctx.config.build_problem()
    report, table = solve_degenerate(prob, ctx.config.solver.eps_schedule, ctx.config.solver_settings())
    rows = [row.model_dump() for row in table.rows]
    return [
        write_field_csv(ctx.path("solution.csv"), {"u": report.u}),
        write_rows_csv(ctx.path("cauchy.csv"), rows,
                       ["eps", "sup_diff_to_prev", "admissibility_margin", "residual_sup", "sup_dev_reference"]),
        write_model_json(ctx.path("report.json"), report.summary()),
        write_model_json(ctx.path("cauchy.json"), table),
    ]


@command("probe-estimates", "Estimate ratios across a grid ladder and the sampled concavity gain")
def probe_estimates(ctx: RunContext) -> List[Path]:
    config = ctx.config
    verdict = run_ladder(
        _probe_builder(config),
        config.build_grid(),
        config.probe.ladder,
        refine_all=config.probe.refine_all,
        margin_target=config.solver.margin_target,
        settings=config.solver_settings(),
    )
    if not verdict.bounded:
        logger.warning(f"PROBE_NO_PLATEAU: {verdict.family} boundary={verdict.bounded_boundary} "
                       f"global={verdict.bounded_global}")
    op = config.build_operator()
    study = convergence_study(
        partial(analytic_profile_problem, op, amplitude=config.probe.amplitude),
        config.build_grid(),
        config.probe.ladder,
        refine_all=config.probe.refine_all,
        margin_target=config.solver.margin_target,
        settings=config.solver_settings(),
    )
    if study.min_order is not None and study.min_order < MIN_CONVERGENCE_ORDER:
        logger.warning(f"CONVERGENCE_ORDER_LOW: {study.family} min order {study.min_order:.3f}")
    guan = [guan_inequality_probe(op, np.ones(op.n), beta, config.run.samples, ctx.seed).model_dump()
            for beta in config.probe.betas]
    return [
        write_rows_csv(ctx.path("probe.csv"), probe_rows(verdict)),
        write_rows_csv(ctx.path("guan.csv"), guan,
                       ["operator", "beta", "samples", "qualifying", "epsilon_hat", "inconclusive"]),
        write_model_json(ctx.path("probe.json"), verdict),
        write_rows_csv(ctx.path("convergence.csv"), [row.model_dump() for row in study.rows],
                       ["resolution", "mesh_width", "error", "order", "residual_sup"]),
        write_model_json(ctx.path("convergence.json"), study),
    ]


@command("compare", "Comparison principle on two solution files", "compare CONFIG FIRST.csv SECOND.csv",
         needs_files=2)
def compare(ctx: RunContext) -> List[Path]:
    grid: ProductGrid = ctx.config.build_grid()
    first, second = (read_field_csv(path, grid, column="u") for path in ctx.files)
    summary = ComparisonSummary(
        first=str(ctx.files[0]),
        second=str(ctx.files[1]),
        sup_diff=float(np.max(np.abs(first.values - second.values))),
        sup_boundary_diff=float(np.max(np.abs(first.boundary().values - second.boundary().values))),
        tolerance=COMPARISON_TOL,
    )
    outputs = [write_model_json(ctx.path("compare.json"), summary)]
    if not summary.ok:
        raise VerificationFailed(f"comparison: interior difference exceeds boundary difference by {summary.excess:.3e}")
    return outputs


def create_lab_commands() -> CommandRegistry:
    registry = CommandRegistry()
    for func in (verify_cones, verify_arrow, subsolution, solve_command, solve_degenerate_command,
                 probe_estimates, compare):
        registry.add_command(func)
    return registry
