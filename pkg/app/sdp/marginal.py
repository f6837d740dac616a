"""Marginal problems, symmetric extensions and robustness programs.

A scenario fixes states ρ_k on A⊗B_k sharing the margin ρ_A. A joint state
lives on A⊗B_1⊗...⊗B_n (positions 0, 1, ..., n). Every robustness program is
solved in primal and dual form; feasibility verdicts are read off the
consistent robustness and its dual.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import cvxpy as cp
import numpy as np
from scipy.linalg import fractional_matrix_power

from app.config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, Tolerances
from app.errors import DimensionError, InconsistentMarginError, NumericalError, SolverFailure
from app.quantum.channels import measurement_channel
from app.quantum.choi import (
    ChoiState,
    KrausChannel,
    PurifiedMargin,
    canonical_purification,
    choi_channel,
    choi_state,
)
from app.quantum.qobj import (
    DensityOperator,
    HermitianOperator,
    Povm,
    SystemLabel,
    maximally_mixed,
    ptrace_matrix,
    relabel,
)
from app.quantum.random import random_extendible_state, random_separable_state
from app.sdp.extension import check_dimension, copy_symmetry, lift, margin, psd, value
from app.sdp.solver import SolveOutcome, solve

logger = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
AMBIGUOUS = "ambiguous"


# ============================================================
# Domain types
# ============================================================


@dataclass(frozen=True, eq=False)
class MarginalScenario:
    """States ρ_k on A⊗B_k with a common A-margin."""

    A: SystemLabel
    Bs: tuple[SystemLabel, ...]
    marginals: tuple[DensityOperator, ...]
    margin_tol: float = DEFAULT_TOLERANCES.margin

    def __post_init__(self):
        bs = tuple(self.Bs)
        marginals = tuple(self.marginals)
        if not marginals or len(bs) != len(marginals):
            raise DimensionError(f"Need one marginal per B system, got {len(bs)} and {len(marginals)}")
        names = [self.A.name] + [b.name for b in bs]
        if len(set(names)) != len(names):
            raise DimensionError(f"System names must be unique, got {names}")
        fixed = []
        for b, rho in zip(bs, marginals):
            if rho.dims != (self.A.dim, b.dim):
                raise DimensionError(
                    f"Marginal on {list(rho.names)} has dims {rho.dims}, "
                    f"expected {(self.A.dim, b.dim)}"
                )
            fixed.append(rho if rho.factors == (self.A, b) else relabel(rho, (self.A, b)))
        margins = [ptrace_matrix(rho.matrix, rho.dims, [0]) for rho in fixed]
        deviation = max(float(np.max(np.abs(m - margins[0]))) for m in margins)
        if deviation > self.margin_tol:
            raise InconsistentMarginError(
                f"inconsistent common margin: A-margins differ by {deviation:.3e} "
                f"(tolerance {self.margin_tol:g})"
            )
        object.__setattr__(self, "Bs", bs)
        object.__setattr__(self, "marginals", tuple(fixed))

    @classmethod
    def from_states(cls, states: Sequence[DensityOperator], margin_tol: float = DEFAULT_TOLERANCES.margin) -> "MarginalScenario":
        """Scenario whose A is the first factor of the first state."""
        a = states[0].factors[0]
        bs = []
        for k, rho in enumerate(states):
            b = rho.factors[1]
            if b.name == a.name or b.name in {x.name for x in bs}:
                b = SystemLabel(f"B{k + 1}", b.dim)
            bs.append(b)
        return cls(a, tuple(bs), tuple(states), margin_tol)

    @property
    def n(self) -> int:
        return len(self.Bs)

    @property
    def dims(self) -> list[int]:
        return [self.A.dim] + [b.dim for b in self.Bs]

    @property
    def joint_factors(self) -> tuple[SystemLabel, ...]:
        return (self.A,) + self.Bs

    @property
    def rho_A(self) -> DensityOperator:
        """Average of the A-margins."""
        margins = [ptrace_matrix(r.matrix, r.dims, [0]) for r in self.marginals]
        return DensityOperator((self.A,), sum(margins) / len(margins))

    def harmonized(self) -> list[np.ndarray]:
        """Marginal matrices shifted so their A-margins agree exactly."""
        target = self.rho_A.matrix
        out = []
        for b, rho in zip(self.Bs, self.marginals):
            own = ptrace_matrix(rho.matrix, rho.dims, [0])
            out.append(rho.matrix + np.kron(target - own, np.eye(b.dim) / b.dim))
        return out

    def identical(self, tol: float = 1e-12) -> bool:
        first = self.marginals[0].matrix
        return all(
            r.matrix.shape == first.shape and np.max(np.abs(r.matrix - first)) <= tol
            for r in self.marginals
        )


@dataclass(frozen=True)
class FreeSetSpec:
    """Free set for generalized robustness.

    ``copies``-extendible states; with ``ppt`` the extension must also have a
    positive partial transpose on A (an outer approximation of the separable
    set, tighter as ``copies`` grows).
    """

    copies: int = 2
    ppt: bool = False

    def __post_init__(self):
        if self.copies < 1:
            raise ValueError(f"Free set needs at least one copy, got {self.copies}")

    @classmethod
    def n_extendible(cls, n: int) -> "FreeSetSpec":
        return cls(copies=n, ppt=False)

    @classmethod
    def separable(cls, level: int = DEFAULT_SOLVER.sep_level) -> "FreeSetSpec":
        return cls(copies=level, ppt=True)

    @classmethod
    def parse(cls, text: str, default_level: int = DEFAULT_SOLVER.sep_level) -> "FreeSetSpec":
        """Parse ``N-ext``, ``sep`` or ``sep-K``."""
        text = text.strip().lower()
        try:
            if text.endswith("-ext"):
                return cls.n_extendible(int(text[: -len("-ext")]))
            if text == "sep":
                return cls.separable(default_level)
            if text.startswith("sep-"):
                return cls.separable(int(text[len("sep-") :]))
        except ValueError:
            pass
        raise ValueError(f"Unknown free set {text!r}; use N-ext, sep or sep-K")

    @property
    def label(self) -> str:
        return f"sep-{self.copies}" if self.ppt else f"{self.copies}-ext"


@dataclass(frozen=True, eq=False)
class BroadcastChannel:
    """A channel A -> B_1...B_n whose output factors are kept apart."""

    channel: KrausChannel
    outputs: tuple[SystemLabel, ...]

    def reduced(self, k: int) -> KrausChannel:
        """Channel A -> B_k obtained by discarding the other outputs."""
        dims = [b.dim for b in self.outputs]
        d_in = self.channel.d_in
        rest = int(np.prod(dims)) // dims[k]
        kraus = []
        for op in self.channel.kraus:
            t = np.moveaxis(op.reshape(dims + [d_in]), k, 0).reshape(dims[k], rest, d_in)
            kraus.extend(t[:, m, :] for m in range(rest))
        return KrausChannel(self.channel.in_label, self.outputs[k], tuple(kraus), self.channel.tol)


@dataclass
class FeasibilityVerdict:
    """Outcome of a marginal-feasibility decision."""

    status: str
    joint: Optional[DensityOperator] = None
    certificate: tuple[HermitianOperator, ...] = ()
    gap: float = float("nan")
    t: float = float("nan")
    dual_value: float = float("nan")
    broadcast: Optional[BroadcastChannel] = None
    diagnostics: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def certificate_value(self, states: Sequence[np.ndarray]) -> float:
        """Σ_k tr[Z_k ρ_k]; negative on the rejected marginals."""
        return float(sum(np.real(np.trace(z.matrix @ np.asarray(s))) for z, s in zip(self.certificate, states)))


@dataclass
class RobustnessResult:
    """Optimal noise weight with primal optimizers and dual witness."""

    t: float
    noise: tuple[DensityOperator, ...] = ()
    joint: Optional[DensityOperator] = None
    witness_blocks: tuple[HermitianOperator, ...] = ()
    primal: float = float("nan")
    dual: float = float("nan")
    gap: float = float("nan")
    status: str = "optimal"
    free: str = "consistent"
    noise_channels: tuple[KrausChannel, ...] = ()
    diagnostics: str = ""

    @property
    def witness(self) -> HermitianOperator:
        if len(self.witness_blocks) != 1:
            raise ValueError(f"Result has {len(self.witness_blocks)} witness blocks; use witness_blocks")
        return self.witness_blocks[0]

    @property
    def solved(self) -> bool:
        return self.status != AMBIGUOUS


# ============================================================
# Helpers
# ============================================================


def clip_psd(matrix: np.ndarray) -> np.ndarray:
    """Nearest unit-trace PSD matrix by eigenvalue clipping."""
    m = np.asarray(matrix, dtype=complex)
    m = (m + m.conj().T) / 2
    evals, evecs = np.linalg.eigh(m)
    evals = np.clip(evals, 0.0, None)
    m = (evecs * evals) @ evecs.conj().T
    return m / np.real(np.trace(m))


def to_state(matrix: np.ndarray, factors: Sequence[SystemLabel]) -> DensityOperator:
    return DensityOperator(tuple(factors), clip_psd(matrix))


def fix_a_margin(matrix: np.ndarray, dims: Sequence[int], rho_A: np.ndarray) -> np.ndarray:
    """(M ⊗ I) X (M ⊗ I)† with M = ρ_A^{1/2} X_A^{-1/2}, so the A-margin is exactly ρ_A."""
    x_a = ptrace_matrix(matrix, dims, [0])
    m = fractional_matrix_power(rho_A, 0.5) @ fractional_matrix_power(x_a, -0.5)
    rest = int(np.prod(dims[1:]))
    full = np.kron(m, np.eye(rest))
    out = full @ matrix @ full.conj().T
    return (out + out.conj().T) / 2


def classify(t: float, dual: float, feas_tol: float) -> str:
    if t <= feas_tol:
        return FEASIBLE
    if dual > feas_tol:
        return INFEASIBLE
    return AMBIGUOUS


def _status(*outcomes: SolveOutcome) -> str:
    return "inaccurate" if any(o.inaccurate for o in outcomes) else "optimal"


@dataclass
class _ConsistentSolution:
    t: float
    dual: float
    joint: np.ndarray
    noise: list[np.ndarray]
    witnesses: list[np.ndarray]
    multiplier: np.ndarray
    status: str


def _solve_consistent(
    scenario: MarginalScenario, shared_noise: bool, config: SolverConfig, name: str
) -> _ConsistentSolution:
    """Consistent robustness: min t with margins ρ_k + Y_k, tr Y_k = t, tr_B Y_k = t ρ_A."""
    dims = scenario.dims
    check_dimension(dims, config.dim_cap, name)
    total = int(np.prod(dims))
    rhos = scenario.harmonized()
    rho_a = scenario.rho_A.matrix
    d_a = scenario.A.dim
    reduce = config.symmetric_reduction and scenario.identical() and len(set(dims[1:])) == 1
    shared = shared_noise or reduce

    x = cp.Variable((total, total), hermitian=True)
    t = cp.Variable()
    if shared:
        ys = [cp.Variable((d_a * dims[1],) * 2, hermitian=True)] * scenario.n
    else:
        ys = [cp.Variable((d_a * b,) * 2, hermitian=True) for b in dims[1:]]
    constraints = [x >> 0]
    checked = range(1) if reduce else range(scenario.n)
    if reduce:
        constraints += copy_symmetry(x, dims, range(1, scenario.n + 1))
    for k in checked:
        constraints.append(margin(x, dims, [0, k + 1]) == rhos[k] + ys[k])
    for k, y in enumerate(ys[:1] if shared else ys):
        constraints += [
            y >> 0,
            cp.real(cp.trace(y)) == t,
            cp.partial_trace(y, [d_a, dims[k + 1]], axis=1) == t * rho_a,
        ]
    primal = cp.Problem(cp.Minimize(t), constraints)
    primal_outcome = solve(primal, f"{name} (primal)", config)

    ws = [cp.Variable((d_a * b,) * 2, hermitian=True) for b in dims[1:]]
    g = cp.Variable((d_a, d_a), hermitian=True)
    bound = (
        np.eye(total)
        + lift(g, dims, [0])
        - cp.real(cp.trace(g @ rho_a)) * np.eye(total)
        - sum(lift(w, dims, [0, k + 1]) for k, w in enumerate(ws))
    )
    dual_constraints = [psd(bound)]
    if shared_noise:
        dual_constraints.append(psd(sum(ws)))
    else:
        dual_constraints += [w >> 0 for w in ws]
    objective = sum(cp.real(cp.trace(r @ w)) for r, w in zip(rhos, ws)) - 1
    dual = cp.Problem(cp.Maximize(objective), dual_constraints)
    dual_outcome = solve(dual, f"{name} (dual)", config)

    y_values = [value(y) for y in ys]
    return _ConsistentSolution(
        t=max(float(t.value), 0.0),
        dual=dual_outcome.value,
        joint=value(x),
        noise=y_values,
        witnesses=[value(w) for w in ws],
        multiplier=value(g),
        status=_status(primal_outcome, dual_outcome),
    )


def _farkas_blocks(scenario: MarginalScenario, sol: _ConsistentSolution) -> list[np.ndarray]:
    """Z_k with Σ_k lift Z_k ⪰ 0 and Σ_k tr[Z_k ρ_k] = -dual."""
    rho_a = scenario.rho_A.matrix
    g = sol.multiplier
    shift = float(np.real(np.trace(g @ rho_a)))
    blocks = []
    for b, w in zip(scenario.Bs, sol.witnesses):
        eye = np.eye(scenario.A.dim * b.dim)
        blocks.append((eye + np.kron(g, np.eye(b.dim)) - shift * eye) / scenario.n - w)
    return blocks


def _robustness_from(
    scenario: MarginalScenario, sol: _ConsistentSolution, config: SolverConfig, free: str
) -> RobustnessResult:
    noise = ()
    if sol.t > config.feas_tol:
        noise = tuple(
            to_state(y / sol.t, (scenario.A, b)) for y, b in zip(sol.noise, scenario.Bs)
        )
    return RobustnessResult(
        t=sol.t,
        noise=noise,
        joint=to_state(sol.joint, scenario.joint_factors),
        witness_blocks=tuple(
            HermitianOperator((scenario.A, b), w) for w, b in zip(sol.witnesses, scenario.Bs)
        ),
        primal=sol.t,
        dual=sol.dual,
        gap=sol.t - sol.dual,
        status=sol.status,
        free=free,
    )


def _verdict_from(scenario: MarginalScenario, sol: _ConsistentSolution, config: SolverConfig) -> FeasibilityVerdict:
    status = classify(sol.t, sol.dual, config.feas_tol)
    verdict = FeasibilityVerdict(status=status, gap=sol.t - sol.dual, t=sol.t, dual_value=sol.dual)
    if status == FEASIBLE:
        verdict.joint = to_state(sol.joint, scenario.joint_factors)
    elif status == INFEASIBLE:
        verdict.certificate = tuple(
            HermitianOperator((scenario.A, b), z)
            for z, b in zip(_farkas_blocks(scenario, sol), scenario.Bs)
        )
    logger.info(f"Marginal problem verdict: {status} (t={sol.t:.3e}, dual={sol.dual:.3e})")
    return verdict


def _extension_scenario(rho: DensityOperator, n: int) -> MarginalScenario:
    if len(rho.factors) != 2:
        raise DimensionError(f"Expected a bipartite state, got factors {list(rho.names)}")
    if n < 1:
        raise ValueError(f"Number of copies must be positive, got {n}")
    a, b = rho.factors
    bs = tuple(SystemLabel(f"{b.name}{k + 1}", b.dim) for k in range(n))
    return MarginalScenario(a, bs, tuple(relabel(rho, (a, bk)) for bk in bs))


# ============================================================
# Operations
# ============================================================


def marginal_feasible(scenario: MarginalScenario, config: SolverConfig = DEFAULT_SOLVER) -> FeasibilityVerdict:
    """Decide whether a joint state on A⊗B_1⊗...⊗B_n reproduces every marginal."""
    try:
        sol = _solve_consistent(scenario, False, config, "marginal_feasible")
    except SolverFailure as e:
        logger.warning(f"Marginal problem left undecided: {e}")
        return FeasibilityVerdict(status=AMBIGUOUS, diagnostics=str(e))
    return _verdict_from(scenario, sol, config)


def symmetric_extension(
    rho: DensityOperator, n: int, config: SolverConfig = DEFAULT_SOLVER
) -> FeasibilityVerdict:
    """Decide whether ρ_AB has an extension to A⊗B^n with every AB_k margin equal to ρ."""
    if n < 2:
        raise ValueError(f"Symmetric extension needs n >= 2, got {n}")
    scenario = _extension_scenario(rho, n)
    try:
        sol = _solve_consistent(scenario, True, config, f"symmetric_extension(n={n})")
    except SolverFailure as e:
        logger.warning(f"Symmetric extension left undecided: {e}")
        return FeasibilityVerdict(status=AMBIGUOUS, diagnostics=str(e))
    verdict = _verdict_from(scenario, sol, config)
    if verdict.certificate:
        total = sum(z.matrix for z in verdict.certificate)
        verdict.certificate = (HermitianOperator(rho.factors, total),)
    return verdict


def consistent_robustness(
    scenario: MarginalScenario, config: SolverConfig = DEFAULT_SOLVER
) -> RobustnessResult:
    """Least noise weight t, with noise sharing the margin ρ_A, making the tuple compatible."""
    try:
        sol = _solve_consistent(scenario, False, config, "consistent_robustness")
    except SolverFailure as e:
        return RobustnessResult(t=float("nan"), status=AMBIGUOUS, diagnostics=str(e))
    return _robustness_from(scenario, sol, config, "consistent")


def consistent_extension_robustness(
    rho: DensityOperator, n: int = 2, config: SolverConfig = DEFAULT_SOLVER
) -> RobustnessResult:
    """Consistent robustness for n-fold symmetric extendibility (one shared noise state).

    The witness is Σ_k W_k on A⊗B.
    """
    scenario = _extension_scenario(rho, n)
    try:
        sol = _solve_consistent(scenario, True, config, f"consistent_extension_robustness(n={n})")
    except SolverFailure as e:
        return RobustnessResult(t=float("nan"), status=AMBIGUOUS, diagnostics=str(e))
    result = _robustness_from(scenario, sol, config, f"consistent-{n}-ext")
    result.noise = result.noise[:1]
    if result.noise:
        result.noise = (relabel(result.noise[0], rho.factors),)
    result.witness_blocks = (HermitianOperator(rho.factors, sum(sol.witnesses)),)
    return result


def generalized_robustness(
    rho: DensityOperator, free: FreeSetSpec, config: SolverConfig = DEFAULT_SOLVER
) -> RobustnessResult:
    """min tr σ over the cone of the free set with σ ⪰ ρ; t = min - 1.

    The dual optimum W satisfies W ⪰ 0, tr[σW] <= 1 on the free set and
    tr[ρW] = 1 + t.
    """
    if len(rho.factors) != 2:
        raise DimensionError(f"Expected a bipartite state, got factors {list(rho.names)}")
    d_a, d_b = rho.dims
    n = free.copies
    dims = [d_a] + [d_b] * n
    name = f"generalized_robustness({free.label})"
    total = check_dimension(dims, config.dim_cap, name)
    target = rho.matrix

    x = cp.Variable((total, total), hermitian=True)
    sigma = margin(x, dims, [0, 1])
    constraints = [x >> 0, psd(sigma - target)]
    if config.symmetric_reduction:
        constraints += copy_symmetry(x, dims, range(1, n + 1))
    else:
        constraints += [margin(x, dims, [0, k]) == sigma for k in range(2, n + 1)]
    if free.ppt:
        constraints.append(psd(cp.partial_transpose(x, dims, axis=0)))
    primal = cp.Problem(cp.Minimize(cp.real(cp.trace(sigma))), constraints)

    hs = [cp.Variable((d_a * d_b,) * 2, hermitian=True) for _ in range(n)]
    w = np.eye(d_a * d_b) + sum(hs)
    bound = -sum(lift(h, dims, [0, k + 1]) for k, h in enumerate(hs))
    dual_constraints = [psd(w)]
    if free.ppt:
        p = cp.Variable((total, total), hermitian=True)
        dual_constraints.append(p >> 0)
        bound = bound - cp.partial_transpose(p, dims, axis=0)
    dual_constraints.append(psd(bound))
    dual = cp.Problem(cp.Maximize(cp.real(cp.trace(target @ w))), dual_constraints)

    try:
        primal_outcome = solve(primal, f"{name} (primal)", config)
        dual_outcome = solve(dual, f"{name} (dual)", config)
    except SolverFailure as e:
        return RobustnessResult(t=float("nan"), status=AMBIGUOUS, free=free.label, diagnostics=str(e))

    t = max(primal_outcome.value - 1.0, 0.0)
    sigma_value = value(sigma)
    noise = ()
    if t > config.feas_tol:
        noise = (to_state((sigma_value - target) / t, rho.factors),)
    joint_factors = (rho.factors[0],) + tuple(
        SystemLabel(f"{rho.factors[1].name}{k + 1}", d_b) for k in range(n)
    )
    witness = value(w)
    return RobustnessResult(
        t=t,
        noise=noise,
        joint=to_state(value(x), joint_factors),
        witness_blocks=(HermitianOperator(rho.factors, witness),),
        primal=primal_outcome.value,
        dual=dual_outcome.value,
        gap=primal_outcome.value - dual_outcome.value,
        status=_status(primal_outcome, dual_outcome),
        free=free.label,
    )


def generalized_marginal_robustness(
    scenario: MarginalScenario, config: SolverConfig = DEFAULT_SOLVER
) -> RobustnessResult:
    """Robustness of a tuple without the common-margin condition on the noise.

    min tr X subject to tr_{rest}X ⪰ ρ_k; dual max Σ tr[ρ_k W_k] with
    W_k ⪰ 0 and Σ_k lift W_k ⪯ I.
    """
    dims = scenario.dims
    name = "generalized_marginal_robustness"
    total = check_dimension(dims, config.dim_cap, name)
    rhos = [r.matrix for r in scenario.marginals]

    x = cp.Variable((total, total), hermitian=True)
    margins = [margin(x, dims, [0, k + 1]) for k in range(scenario.n)]
    constraints = [x >> 0] + [psd(m - r) for m, r in zip(margins, rhos)]
    primal = cp.Problem(cp.Minimize(cp.real(cp.trace(x))), constraints)

    ws = [cp.Variable((scenario.A.dim * b.dim,) * 2, hermitian=True) for b in scenario.Bs]
    bound = np.eye(total) - sum(lift(w, dims, [0, k + 1]) for k, w in enumerate(ws))
    dual = cp.Problem(
        cp.Maximize(sum(cp.real(cp.trace(r @ w)) for r, w in zip(rhos, ws))),
        [w >> 0 for w in ws] + [psd(bound)],
    )
    try:
        primal_outcome = solve(primal, f"{name} (primal)", config)
        dual_outcome = solve(dual, f"{name} (dual)", config)
    except SolverFailure as e:
        return RobustnessResult(t=float("nan"), status=AMBIGUOUS, free="generalized", diagnostics=str(e))

    t = max(primal_outcome.value - 1.0, 0.0)
    noise = ()
    if t > config.feas_tol:
        noise = tuple(
            to_state((value(m) - r) / t, (scenario.A, b))
            for m, r, b in zip(margins, rhos, scenario.Bs)
        )
    return RobustnessResult(
        t=t,
        noise=noise,
        joint=to_state(value(x), scenario.joint_factors),
        witness_blocks=tuple(
            HermitianOperator((scenario.A, b), value(w)) for w, b in zip(ws, scenario.Bs)
        ),
        primal=primal_outcome.value,
        dual=dual_outcome.value,
        gap=primal_outcome.value - dual_outcome.value,
        status=_status(primal_outcome, dual_outcome),
        free="generalized",
    )


def max_free_payoff(
    witness: HermitianOperator, free: FreeSetSpec, config: SolverConfig = DEFAULT_SOLVER
) -> float:
    """max tr[σW] over states σ of the free set."""
    d_a, d_b = witness.dims
    n = free.copies
    dims = [d_a] + [d_b] * n
    total = check_dimension(dims, config.dim_cap, "max_free_payoff")
    x = cp.Variable((total, total), hermitian=True)
    sigma = margin(x, dims, [0, 1])
    constraints = [x >> 0, cp.real(cp.trace(x)) == 1]
    constraints += [margin(x, dims, [0, k]) == sigma for k in range(2, n + 1)]
    if free.ppt:
        constraints.append(psd(cp.partial_transpose(x, dims, axis=0)))
    problem = cp.Problem(cp.Maximize(cp.real(cp.trace(witness.matrix @ sigma))), constraints)
    return solve(problem, f"max_free_payoff({free.label})", config).value


def max_free_block_payoff(
    blocks: Sequence[HermitianOperator],
    scenario: MarginalScenario,
    consistent: bool = True,
    config: SolverConfig = DEFAULT_SOLVER,
) -> float:
    """max Σ_k tr[σ_k W_k] over compatible tuples σ_k (with A-margin ρ_A if ``consistent``)."""
    if len(blocks) != scenario.n:
        raise DimensionError(f"Need {scenario.n} witness blocks, got {len(blocks)}")
    dims = scenario.dims
    total = check_dimension(dims, config.dim_cap, "max_free_block_payoff")
    x = cp.Variable((total, total), hermitian=True)
    constraints = [x >> 0, cp.real(cp.trace(x)) == 1]
    if consistent:
        constraints.append(margin(x, dims, [0]) == scenario.rho_A.matrix)
    objective = sum(
        cp.real(cp.trace(w.matrix @ margin(x, dims, [0, k + 1]))) for k, w in enumerate(blocks)
    )
    problem = cp.Problem(cp.Maximize(objective), constraints)
    return solve(problem, "max_free_block_payoff", config).value


def sample_free_states(
    free: FreeSetSpec,
    d_a: int,
    d_b: int,
    count: int,
    rng: np.random.Generator,
    factors: Optional[Sequence[SystemLabel]] = None,
) -> list[DensityOperator]:
    """Random members of the free set.

    Extendible sets are sampled through symmetrized random extensions; for
    PPT-constrained sets random separable states are used.
    """
    if free.ppt:
        return [random_separable_state(d_a, d_b, rng, factors=factors) for _ in range(count)]
    rank_choices = [1, 2, d_a * d_b**free.copies]
    return [
        random_extendible_state(d_a, d_b, free.copies, rng, factors=factors, rank=int(rng.choice(rank_choices)))
        for _ in range(count)
    ]


# ============================================================
# Channel picture
# ============================================================


def choi_scenario(
    channels: Sequence[KrausChannel],
    margin_state: PurifiedMargin,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> MarginalScenario:
    """Marginal scenario of the Choi states, outputs labeled B1, B2, ..."""
    if not channels:
        raise ValueError("Need at least one channel")
    for phi in channels:
        if phi.d_in != margin_state.dim:
            raise DimensionError(
                f"Channel input dimension {phi.d_in} does not match margin dimension {margin_state.dim}"
            )
    a = margin_state.label
    bs = tuple(SystemLabel(f"B{k + 1}", phi.d_out) for k, phi in enumerate(channels))
    states = tuple(
        relabel(choi_state(phi, margin_state, tolerances).state, (a, b)) for phi, b in zip(channels, bs)
    )
    return MarginalScenario(a, bs, states, tolerances.margin)


def _default_margin(channels: Sequence[KrausChannel], tolerances: Tolerances) -> PurifiedMargin:
    label = SystemLabel("A", channels[0].d_in)
    return canonical_purification(maximally_mixed(label), tolerances)


def _channel_from_joint(
    joint: np.ndarray,
    dims: Sequence[int],
    margin_state: PurifiedMargin,
    out_label: SystemLabel,
    tolerances: Tolerances,
) -> KrausChannel:
    fixed = fix_a_margin(clip_psd(joint), dims, margin_state.rho_A.matrix)
    state = DensityOperator((margin_state.label, out_label), fixed)
    return choi_channel(ChoiState(margin_state, state, tolerances.margin), tolerances)


def channel_compatible(
    channels: Sequence[KrausChannel],
    margin_state: Optional[PurifiedMargin] = None,
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FeasibilityVerdict:
    """Decide compatibility through the marginal problem of the Choi states.

    On success the joint state is turned back into a broadcasting channel.
    """
    margin_state = margin_state or _default_margin(channels, tolerances)
    scenario = choi_scenario(channels, margin_state, tolerances)
    verdict = marginal_feasible(scenario, config)
    if verdict.feasible and verdict.joint is not None:
        combined = SystemLabel("".join(b.name for b in scenario.Bs), int(np.prod(scenario.dims[1:])))
        try:
            channel = _channel_from_joint(
                verdict.joint.matrix, scenario.dims, margin_state, combined, tolerances
            )
            verdict.broadcast = BroadcastChannel(channel, scenario.Bs)
        except (NumericalError, ValueError) as e:
            logger.warning(f"Could not rebuild the broadcasting channel: {e}")
            verdict.diagnostics = f"broadcast reconstruction failed: {e}"
    return verdict


def incompatibility_robustness(
    channels: Sequence[KrausChannel],
    margin_state: Optional[PurifiedMargin] = None,
    method: str = "choi",
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RobustnessResult:
    """Least noise weight making the channels compatible.

    ``choi`` solves the consistent robustness of the Choi scenario for the
    given margin; ``direct`` uses the maximally mixed margin, i.e. the
    standard Choi matrices. Both agree by the affine channel-state bijection.
    """
    if method not in ("choi", "direct"):
        raise ValueError(f"Unknown method {method!r}; use 'choi' or 'direct'")
    if method == "direct" or margin_state is None:
        margin_state = _default_margin(channels, tolerances)
    scenario = choi_scenario(channels, margin_state, tolerances)
    result = consistent_robustness(scenario, config)
    result.free = f"channels/{method}"
    if result.noise:
        try:
            result.noise_channels = tuple(
                _channel_from_joint(tau.matrix, tau.dims, margin_state, b, tolerances)
                for tau, b in zip(result.noise, scenario.Bs)
            )
        except (NumericalError, ValueError) as e:
            logger.warning(f"Could not rebuild noise channels: {e}")
    return result


def self_compatibility_robustness(
    phi: KrausChannel,
    margin_state: Optional[PurifiedMargin] = None,
    n: int = 2,
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RobustnessResult:
    """Consistent extension robustness of the Choi state of ``phi``."""
    margin_state = margin_state or _default_margin([phi], tolerances)
    state = choi_state(phi, margin_state, tolerances).state
    result = consistent_extension_robustness(state, n, config)
    if result.noise:
        try:
            result.noise_channels = (
                _channel_from_joint(
                    result.noise[0].matrix, result.noise[0].dims, margin_state, state.factors[1], tolerances
                ),
            )
        except (NumericalError, ValueError) as e:
            logger.warning(f"Could not rebuild the noise channel: {e}")
    return result


def measurements_compatible(
    povms: Sequence[Povm],
    margin_state: Optional[PurifiedMargin] = None,
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FeasibilityVerdict:
    """Joint measurability, decided as compatibility of the measurement channels."""
    if not povms:
        raise ValueError("Need at least one POVM")
    if any(p.system.dim != povms[0].system.dim for p in povms):
        raise DimensionError(f"POVMs act on different dimensions {[p.system.dim for p in povms]}")
    channels = [measurement_channel(p, in_label=SystemLabel("A", p.system.dim)) for p in povms]
    verdict = channel_compatible(channels, margin_state, config, tolerances)
    logger.info(f"{len(povms)} measurements: {verdict.status}")
    return verdict


def joint_povm(broadcast: BroadcastChannel) -> dict[tuple[int, ...], np.ndarray]:
    """Parent POVM G_(a_1..a_n) = Φ†(|a_1..a_n><a_1..a_n|) of a broadcast of measurement channels."""
    dims = [b.dim for b in broadcast.outputs]
    effects = {}
    for flat, outcome in enumerate(np.ndindex(*dims)):
        effects[outcome] = sum(np.outer(k[flat].conj(), k[flat]) for k in broadcast.channel.kraus)
    return effects
