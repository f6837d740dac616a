"""Thin wrapper around cvxpy solves with fallback and status bookkeeping."""

import logging
import time
from dataclasses import dataclass

import cvxpy as cp

from app.config import DEFAULT_SOLVER, SolverConfig
from app.errors import SolverFailure

logger = logging.getLogger(__name__)

ACCEPTED = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)


@dataclass
class SolveOutcome:
    """Result of one cone-program solve."""

    name: str
    status: str
    value: float
    solver: str
    seconds: float

    @property
    def inaccurate(self) -> bool:
        return self.status == cp.OPTIMAL_INACCURATE


def solver_options(solver: str, config: SolverConfig) -> dict:
    """Tolerance keywords understood by the given solver."""
    if solver == "CLARABEL":
        return {"tol_gap_abs": config.tol, "tol_gap_rel": config.tol, "tol_feas": config.tol}
    if solver == "SCS":
        return {"eps_abs": config.tol, "eps_rel": config.tol, "max_iters": config.max_iters}
    if solver == "CVXOPT":
        return {"abstol": config.tol, "reltol": config.tol, "feastol": config.tol}
    return {}


def solve(problem: cp.Problem, name: str, config: SolverConfig = DEFAULT_SOLVER) -> SolveOutcome:
    """Solve ``problem``; try the fallback solver if the first one fails.

    Raises:
        SolverFailure: when no solver reaches an (inaccurate) optimum
    """
    attempts = [config.solver]
    if config.fallback and config.fallback != config.solver:
        attempts.append(config.fallback)
    size = sum(v.size for v in problem.variables())
    failures = []
    for solver in attempts:
        start = time.perf_counter()
        try:
            problem.solve(solver=solver, **solver_options(solver, config))
        except (cp.error.SolverError, ValueError) as e:
            failures.append(f"{solver}: {e}")
            logger.warning(f"{name}: solver {solver} raised {e}")
            continue
        elapsed = time.perf_counter() - start
        status = problem.status
        if status not in ACCEPTED:
            failures.append(f"{solver}: status {status}")
            logger.warning(f"{name}: solver {solver} finished with status {status}")
            continue
        if status == cp.OPTIMAL_INACCURATE:
            logger.warning(f"{name}: solver {solver} reports an inaccurate optimum")
        logger.info(
            f"{name}: {size} scalar variables, solver {solver}, status {status}, "
            f"value {problem.value:.9g}, {elapsed:.2f}s"
        )
        return SolveOutcome(name, status, float(problem.value), solver, elapsed)
    raise SolverFailure(f"{name}: no solver succeeded ({'; '.join(failures)})")
