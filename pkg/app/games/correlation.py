"""Correlation games and their relation to robustness witnesses.

A game is a pair of local POVMs with a real reward table; its payoff on a
shared state is tr[ρ W_G] with W_G = Σ ω_ab M_a ⊗ N_b.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from app.config import DEFAULT_SOLVER, SolverConfig
from app.errors import DegenerateGameError, DimensionError, NumericalError
from app.games.povm import ic_povm
from app.quantum.qobj import DensityOperator, HermitianOperator, Povm
from app.sdp.marginal import (
    FreeSetSpec,
    MarginalScenario,
    RobustnessResult,
    generalized_robustness,
    max_free_block_payoff,
    max_free_payoff,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CorrelationGame:
    """Local POVMs for Alice and Bob with a reward table ω[a, b]."""

    alice: Povm
    bob: Povm
    rewards: np.ndarray

    def __post_init__(self):
        rewards = np.asarray(self.rewards, dtype=float)
        if rewards.shape != (len(self.alice), len(self.bob)):
            raise DimensionError(
                f"Reward table shape {rewards.shape} does not match "
                f"{len(self.alice)} x {len(self.bob)} outcomes"
            )
        rewards.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)

    def operator(self) -> HermitianOperator:
        """W_G = Σ ω_ab M_a ⊗ N_b."""
        matrix = sum(
            self.rewards[a, b] * np.kron(m.matrix, n.matrix)
            for a, m in enumerate(self.alice.effects)
            for b, n in enumerate(self.bob.effects)
        )
        return HermitianOperator((self.alice.system, self.bob.system), matrix)

    def payoff_extrema(self) -> tuple[float, float]:
        """Minimum and maximum payoff over all states."""
        evals = np.linalg.eigvalsh(self.operator().matrix)
        return float(evals[0]), float(evals[-1])

    def with_rewards(self, rewards: np.ndarray) -> "CorrelationGame":
        return CorrelationGame(self.alice, self.bob, rewards)


def payoff(rho: DensityOperator, game: CorrelationGame) -> float:
    """Expected reward Σ ω_ab tr[(M_a ⊗ N_b) ρ]."""
    if rho.dims != (game.alice.system.dim, game.bob.system.dim):
        raise DimensionError(f"State dims {rho.dims} do not fit the game's local systems")
    total = 0.0
    for a, m in enumerate(game.alice.effects):
        for b, n in enumerate(game.bob.effects):
            total += game.rewards[a, b] * np.real(np.trace(np.kron(m.matrix, n.matrix) @ rho.matrix))
    return float(total)


def canonicalize(game: CorrelationGame) -> CorrelationGame:
    """Affinely rescale rewards so payoffs range over [0, 1]."""
    low, high = game.payoff_extrema()
    if high - low <= 1e-12:
        raise DegenerateGameError(f"Game payoff is constant ({low:.6g}) on all states")
    return game.with_rewards((game.rewards - low) / (high - low))


def witness_to_game(
    witness: HermitianOperator,
    alice: Optional[Povm] = None,
    bob: Optional[Povm] = None,
) -> CorrelationGame:
    """Write W as Σ ω_ab M_a ⊗ N_b over informationally complete local POVMs.

    Rewards solve a real least-squares system; they may be negative.

    Raises:
        NumericalError: if the reconstruction residual exceeds 1e-8
    """
    if len(witness.factors) != 2:
        raise DimensionError(f"Witness must be bipartite, got factors {list(witness.names)}")
    a_label, b_label = witness.factors
    alice = alice or ic_povm(a_label)
    bob = bob or ic_povm(b_label)
    columns = [
        np.kron(m.matrix, n.matrix).reshape(-1) for m in alice.effects for n in bob.effects
    ]
    basis = np.array(columns).T
    target = witness.matrix.reshape(-1)
    system = np.vstack([basis.real, basis.imag])
    rhs = np.concatenate([target.real, target.imag])
    coefficients, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    residual = float(np.max(np.abs(basis @ coefficients - target)))
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"Witness decomposition residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    rewards = coefficients.reshape(len(alice), len(bob))
    return CorrelationGame(alice, bob, rewards)


@dataclass
class GameAdvantage:
    """A game separating ρ from the free set and its payoff ratio."""

    game: CorrelationGame
    ratio: float
    payoff: float
    free_max: float
    robustness: RobustnessResult


def game_advantage(
    rho: DensityOperator, free: FreeSetSpec, config: SolverConfig = DEFAULT_SOLVER
) -> GameAdvantage:
    """Game from the robustness witness; payoff(ρ) / max over the free set equals 1 + t."""
    result = generalized_robustness(rho, free, config)
    game = witness_to_game(result.witness)
    value = payoff(rho, game)
    free_max = max_free_payoff(game.operator(), free, config)
    ratio = value / free_max
    logger.info(f"Game advantage against {free.label}: ratio {ratio:.6f} (1 + t = {1 + result.t:.6f})")
    return GameAdvantage(game=game, ratio=ratio, payoff=value, free_max=free_max, robustness=result)


@dataclass
class DirectSumEvaluation:
    """Payoff of block games on a tuple of states."""

    block_payoffs: list[float]
    total: float
    normalized: float
    free_max: float
    ratio: float
    games: tuple[CorrelationGame, ...] = ()


def direct_sum_game(
    scenario: MarginalScenario,
    witness_blocks: Sequence[Union[HermitianOperator, CorrelationGame]],
    consistent: bool = True,
    config: SolverConfig = DEFAULT_SOLVER,
    with_games: bool = False,
) -> DirectSumEvaluation:
    """Evaluate one block per marginal, treating the tuple as a direct sum.

    The free maximum ranges over compatible tuples, restricted to the common
    margin ρ_A when ``consistent``.
    """
    if len(witness_blocks) != scenario.n:
        raise DimensionError(f"Need {scenario.n} witness blocks, got {len(witness_blocks)}")
    blocks = [b.operator() if isinstance(b, CorrelationGame) else b for b in witness_blocks]
    block_payoffs = [b.expectation(rho) for b, rho in zip(blocks, scenario.marginals)]
    total = float(sum(block_payoffs))
    free_max = max_free_block_payoff(blocks, scenario, consistent, config)
    games: tuple[CorrelationGame, ...] = ()
    if with_games:
        games = tuple(
            b if isinstance(b, CorrelationGame) else witness_to_game(b) for b in witness_blocks
        )
    return DirectSumEvaluation(
        block_payoffs=block_payoffs,
        total=total,
        normalized=total / scenario.n,
        free_max=free_max,
        ratio=total / free_max,
        games=games,
    )
