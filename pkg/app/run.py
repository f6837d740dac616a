"""Main entry point for qmarginal.

Usage:
    python -m app compat channels.json
    python -m app marginal scenario.json --out verdict.json
    python -m app robustness state.json --free 2-ext --emit-witness --samples 1000
    python -m app symext state.json --n 3
    python -m app selfcompat channel.json --method all
    python -m app region --d 16 --grid 101 --out region_d16.csv
    python -m app game game.json --state state.json

Exit codes: 0 compatible / feasible, 1 incompatible / infeasible,
2 ambiguous or error (one-line diagnostic on stderr).
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from app.config import AppConfig, load_config
from app.criteria.entropy import depol_region_scan, equal_noise_flip, write_region_csv
from app.errors import QMarginalError, SolverFailure
from app.formats.codec import (
    analytic_pair,
    build_channel,
    build_game,
    build_margin,
    build_scenario,
    build_state,
    game_to_model,
    load_model,
    matrix_to_json,
)
from app.formats.schemas import (
    AnalyticVerdict,
    ChannelFile,
    ChannelsFile,
    GameFile,
    GameReport,
    RobustnessReport,
    RunRecordModel,
    ScenarioFile,
    SelfCompatReport,
    StateFile,
    VerdictReport,
)
from app.games.correlation import canonicalize, payoff, witness_to_game
from app.ops.crosscheck import METHODS, check_self_compatibility
from app.ops.versioning import create_run_record
from app.quantum.random import default_rng
from app.sdp.marginal import (
    AMBIGUOUS,
    FEASIBLE,
    FeasibilityVerdict,
    FreeSetSpec,
    RobustnessResult,
    channel_compatible,
    consistent_robustness,
    generalized_marginal_robustness,
    generalized_robustness,
    marginal_feasible,
    max_free_payoff,
    sample_free_states,
    symmetric_extension,
)

logger = logging.getLogger("qmarginal")

EXIT_COMPATIBLE = 0
EXIT_INCOMPATIBLE = 1
EXIT_AMBIGUOUS = 2

COMMANDS = ("compat", "marginal", "robustness", "symext", "selfcompat", "region", "game")


@dataclass
class RunConfig:
    """One CLI invocation: command, files and effective configuration."""

    command: str
    inputs: list[Path]
    output: Optional[Path]
    config: AppConfig
    fmt: str = "json"
    params: dict = field(default_factory=dict)

    @property
    def tolerances(self):
        return self.config.tolerances

    @property
    def solver(self):
        return self.config.solver

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def dim_cap(self) -> int:
        return self.config.solver.dim_cap

    def record(self) -> RunRecordModel:
        record = create_run_record(self.command, self.inputs, self.config, self.params)
        return RunRecordModel(**record.to_json())


def add_global_flags(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    """Flags accepted before or after the subcommand.

    Subcommand copies use SUPPRESS so an absent flag keeps the top-level value.
    """

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--tol", type=float, default=default(None), help="Hermiticity/PSD/trace tolerance")
    parser.add_argument("--seed", type=int, default=default(None), help="Seed for sampled instances")
    parser.add_argument(
        "--dim-cap", type=int, default=default(None), help="Largest joint dimension sent to the solver"
    )
    parser.add_argument("--solver-tol", type=float, default=default(None), help="Solver accuracy")
    parser.add_argument("--out", type=Path, default=default(None), help="Output file (default: stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default=default("json"), dest="fmt")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="qmarginal",
        description="qmarginal - quantum marginal problems and channel compatibility",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_global_flags(parser)
    common = argparse.ArgumentParser(add_help=False)
    add_global_flags(common, suppress=True)

    sub = parser.add_subparsers(dest="command", required=True)

    compat = sub.add_parser("compat", parents=[common], help="Compatibility of channels sharing one input")
    compat.add_argument("input", type=Path, help="Channels JSON file")

    marginal = sub.add_parser("marginal", parents=[common], help="Feasibility of a marginal scenario")
    marginal.add_argument("input", type=Path, help="Scenario JSON file")

    robustness = sub.add_parser("robustness", parents=[common], help="Robustness against a free set")
    robustness.add_argument("input", type=Path, help="Scenario file (consistent, generalized) or state file")
    robustness.add_argument(
        "--free", default="consistent", help="consistent | generalized | N-ext | sep | sep-K"
    )
    robustness.add_argument("--emit-witness", action="store_true", help="Include witness and derived game")
    robustness.add_argument("--samples", type=int, default=0, help="Spot-check the witness on sampled free states")

    symext = sub.add_parser("symext", parents=[common], help="Symmetric extendibility of a bipartite state")
    symext.add_argument("input", type=Path, help="State JSON file")
    symext.add_argument("--n", type=int, default=2)

    selfcompat = sub.add_parser("selfcompat", parents=[common], help="Self-compatibility of a channel")
    selfcompat.add_argument("input", type=Path, help="Channel JSON file")
    selfcompat.add_argument("--method", choices=list(METHODS) + ["all"], default="all")
    selfcompat.add_argument("--n", type=int, default=None, help="Number of copies (default: from file)")

    region = sub.add_parser("region", parents=[common], help="Depolarizing compatibility region scan (CSV)")
    region.add_argument("--d", type=int, required=True)
    region.add_argument("--grid", type=int, default=101)
    region.add_argument("--workers", type=int, default=None)

    game = sub.add_parser("game", parents=[common], help="Payoff of a correlation game on a state")
    game.add_argument("input", type=Path, help="Game JSON file")
    game.add_argument("--state", type=Path, required=True, help="State JSON file")

    return parser.parse_args(argv)


def effective_config(args: argparse.Namespace, base: AppConfig) -> AppConfig:
    """Apply CLI overrides on top of the environment configuration."""
    tolerances = base.tolerances.with_overall(args.tol) if args.tol is not None else base.tolerances
    solver = base.solver
    if args.solver_tol is not None:
        solver = replace(solver, tol=args.solver_tol)
    if args.dim_cap is not None:
        if args.dim_cap < 1:
            raise ValueError(f"--dim-cap must be positive, got {args.dim_cap}")
        solver = replace(solver, dim_cap=args.dim_cap)
    seed = args.seed if args.seed is not None else base.seed
    return replace(base, tolerances=tolerances, solver=solver, seed=seed)


def build_run_config(args: argparse.Namespace, config: AppConfig) -> RunConfig:
    inputs = [p for p in (getattr(args, "input", None), getattr(args, "state", None)) if p is not None]
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "input", "state", "out", "fmt", "tol", "seed", "dim_cap", "solver_tol")
    }
    return RunConfig(
        command=args.command,
        inputs=inputs,
        output=args.out,
        config=config,
        fmt=args.fmt,
        params={k: str(v) for k, v in params.items()},
    )


# ============================================================
# Output
# ============================================================


def _flatten(data: dict, prefix: str = "") -> dict:
    row = {}
    for key, value in data.items():
        if isinstance(value, dict):
            row.update(_flatten(value, f"{prefix}{key}_"))
        elif value is None or isinstance(value, (str, int, float, bool)):
            row[f"{prefix}{key}"] = value
    return row


def emit(report: BaseModel, rc: RunConfig) -> None:
    """Write a report as JSON, or its scalar fields as a one-row CSV."""
    if rc.fmt == "csv":
        text = pd.DataFrame([_flatten(report.model_dump())]).to_csv(index=False, lineterminator="\n")
    else:
        text = report.model_dump_json(indent=2) + "\n"
    if rc.output is None:
        sys.stdout.write(text)
        return
    rc.output.parent.mkdir(parents=True, exist_ok=True)
    rc.output.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {rc.output}")


def fail(message: str) -> int:
    """One-line diagnostic on stderr."""
    sys.stderr.write(f"qmarginal: {' '.join(message.split())}\n")
    return EXIT_AMBIGUOUS


def _finite(x: float) -> Optional[float]:
    return float(x) if x is not None and np.isfinite(x) else None


def verdict_exit(status: str, diagnostics: str = "") -> int:
    if status == FEASIBLE:
        return EXIT_COMPATIBLE
    if status == AMBIGUOUS:
        return fail(f"ambiguous verdict: {diagnostics or 'inside the tolerance band'}")
    return EXIT_INCOMPATIBLE


def verdict_report(
    command: str, verdict: FeasibilityVerdict, rc: RunConfig, analytic: Optional[AnalyticVerdict] = None
) -> VerdictReport:
    return VerdictReport(
        command=command,
        status=verdict.status,
        compatible=None if verdict.status == AMBIGUOUS else verdict.feasible,
        t=_finite(verdict.t),
        dual_value=_finite(verdict.dual_value),
        gap=_finite(verdict.gap),
        joint=matrix_to_json(verdict.joint.matrix) if verdict.joint is not None else None,
        certificate=[matrix_to_json(z.matrix) for z in verdict.certificate],
        diagnostics=verdict.diagnostics,
        analytic=analytic,
        run=rc.record(),
    )


# ============================================================
# Commands
# ============================================================


def cmd_compat(rc: RunConfig) -> int:
    """Channels file -> compatibility verdict."""
    spec = load_model(rc.inputs[0], ChannelsFile)
    channels = [build_channel(c) for c in spec.channels]
    margin = build_margin(spec.margin, channels[0].d_in, rc.tolerances)
    verdict = channel_compatible(channels, margin, rc.solver, rc.tolerances)
    logger.info(f"{len(channels)} channels: {verdict.status}")
    analytic = analytic_pair(spec.channels, rc.solver)
    if analytic is not None:
        logger.info(f"Closed form ({analytic.criterion}): compatible={analytic.compatible}")
        if verdict.status != AMBIGUOUS and analytic.compatible != verdict.feasible:
            logger.warning("Closed form and cone program disagree")
    emit(verdict_report("compat", verdict, rc, analytic), rc)
    return verdict_exit(verdict.status, verdict.diagnostics)


def cmd_marginal(rc: RunConfig) -> int:
    """Scenario file -> marginal feasibility verdict."""
    scenario = build_scenario(load_model(rc.inputs[0], ScenarioFile), rc.tolerances)
    verdict = marginal_feasible(scenario, rc.solver)
    logger.info(f"Scenario with {scenario.n} marginals: {verdict.status}")
    emit(verdict_report("marginal", verdict, rc), rc)
    return verdict_exit(verdict.status, verdict.diagnostics)


def _robustness_exit(result: RobustnessResult, rc: RunConfig) -> int:
    if result.status == AMBIGUOUS:
        return fail(f"robustness undecided: {result.diagnostics}")
    return EXIT_COMPATIBLE if result.t <= rc.solver.feas_tol else EXIT_INCOMPATIBLE


def cmd_robustness(rc: RunConfig, free_text: str, emit_witness: bool, samples: int) -> int:
    """Scenario or state file -> robustness with optional witness and game."""
    report_kwargs: dict = {}
    if free_text in ("consistent", "generalized"):
        scenario = build_scenario(load_model(rc.inputs[0], ScenarioFile), rc.tolerances)
        if free_text == "consistent":
            result = consistent_robustness(scenario, rc.solver)
        else:
            result = generalized_marginal_robustness(scenario, rc.solver)
    else:
        free = FreeSetSpec.parse(free_text, rc.solver.sep_level)
        rho = build_state(load_model(rc.inputs[0], StateFile), rc.tolerances)
        result = generalized_robustness(rho, free, rc.solver)
        if result.solved and emit_witness:
            game = witness_to_game(result.witness)
            free_max = max_free_payoff(game.operator(), free, rc.solver)
            report_kwargs["game"] = game_to_model(game)
            report_kwargs["game_ratio"] = payoff(rho, game) / free_max
        if result.solved and samples > 0:
            states = sample_free_states(free, *rho.dims, samples, default_rng(rc.seed), factors=rho.factors)
            sampled = max(result.witness.expectation(s) for s in states)
            report_kwargs["sampled_free_max"] = sampled
            if sampled > 1 + 1e-6:
                logger.warning(f"Witness exceeds 1 on a sampled free state: {sampled:.6f}")

    logger.info(f"Robustness against {result.free}: t={result.t:.6g} gap={result.gap:.2e}")
    report = RobustnessReport(
        command="robustness",
        free=result.free,
        status=result.status,
        t=_finite(result.t),
        primal=_finite(result.primal),
        dual=_finite(result.dual),
        gap=_finite(result.gap),
        witness=[matrix_to_json(w.matrix) for w in result.witness_blocks] if emit_witness else [],
        diagnostics=result.diagnostics,
        run=rc.record(),
        **report_kwargs,
    )
    emit(report, rc)
    return _robustness_exit(result, rc)


def cmd_symext(rc: RunConfig, n: int) -> int:
    """State file -> n-fold symmetric extendibility verdict."""
    rho = build_state(load_model(rc.inputs[0], StateFile), rc.tolerances)
    verdict = symmetric_extension(rho, n, rc.solver)
    emit(verdict_report("symext", verdict, rc), rc)
    return verdict_exit(verdict.status, verdict.diagnostics)


def cmd_selfcompat(rc: RunConfig, method: str, n: Optional[int]) -> int:
    """Channel file -> self-compatibility verdicts, cross-checked when several methods run."""
    spec = load_model(rc.inputs[0], ChannelFile)
    phi = build_channel(spec.channel)
    margin = build_margin(spec.margin, phi.d_in, rc.tolerances)
    methods = METHODS if method == "all" else (method,)
    report = check_self_compatibility(phi, margin, methods, n or spec.n, rc.solver, rc.tolerances)
    emit(SelfCompatReport(command="selfcompat", run=rc.record(), **report.to_json()), rc)
    if report.status == "disagree":
        values = ", ".join(f"{v.method}={v.verdict}({v.value})" for v in report.verdicts)
        return fail(f"methods disagree: {values}")
    if report.self_compatible is None:
        return fail("no method reached a decisive verdict")
    return EXIT_COMPATIBLE if report.self_compatible else EXIT_INCOMPATIBLE


def cmd_region(rc: RunConfig, d: int, grid: int, workers: Optional[int]) -> int:
    """Depolarizing region scan -> CSV."""
    df = depol_region_scan(d, grid, workers)
    below, above = equal_noise_flip(df)
    logger.info(f"Equal-noise boundary for d={d} between {below:.4f} and {above:.4f}")
    path = rc.output or rc.config.output_dir / f"region_d{d}_grid{grid}.csv"
    write_region_csv(df, path)
    logger.info(f"Wrote {len(df)} rows to {path}")
    return EXIT_COMPATIBLE


def cmd_game(rc: RunConfig) -> int:
    """Game and state files -> payoff report."""
    rho = build_state(load_model(rc.inputs[1], StateFile), rc.tolerances)
    game = build_game(load_model(rc.inputs[0], GameFile), rho.factors, rc.tolerances)
    low, high = game.payoff_extrema()
    canonical = canonicalize(game)
    emit(
        GameReport(
            command="game",
            payoff=payoff(rho, game),
            payoff_min=low,
            payoff_max=high,
            canonical_payoff=payoff(rho, canonical),
            canonical_rewards=canonical.rewards.tolist(),
            run=rc.record(),
        ),
        rc,
    )
    return EXIT_COMPATIBLE


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command; returns the exit code."""
    try:
        config = effective_config(args, load_config())
        logging.basicConfig(
            level=getattr(logging, config.log_level.upper(), logging.INFO),
            format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
            stream=sys.stderr,
        )
        rc = build_run_config(args, config)
        logger.info(f"Running {rc.command} (seed={rc.seed})")

        if rc.command == "compat":
            return cmd_compat(rc)
        if rc.command == "marginal":
            return cmd_marginal(rc)
        if rc.command == "robustness":
            return cmd_robustness(rc, args.free, args.emit_witness, args.samples)
        if rc.command == "symext":
            return cmd_symext(rc, args.n)
        if rc.command == "selfcompat":
            return cmd_selfcompat(rc, args.method, args.n)
        if rc.command == "region":
            return cmd_region(rc, args.d, args.grid, args.workers)
        if rc.command == "game":
            return cmd_game(rc)
        return fail(f"unknown command {rc.command!r}")

    except ValidationError as e:
        return fail(f"invalid input: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}")
    except (QMarginalError, SolverFailure, json.JSONDecodeError, ValueError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        return fail(str(e))


def main(argv: Optional[Sequence[str]] = None):
    """Entry point."""
    args = parse_args(argv)
    sys.exit(run(args))


if __name__ == "__main__":
    main()
