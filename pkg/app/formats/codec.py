"""Conversion between file schemas and domain objects."""

import logging
from pathlib import Path
from typing import Optional, Sequence, TypeVar, Union

import numpy as np
from pydantic import BaseModel

from app.config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, Tolerances
from app.criteria.analytic import PauliProbVector, depol_compatible, depol_margin, pauli_compatible
from app.errors import DimensionError
from app.formats.schemas import (
    AnalyticVerdict,
    ChannelSpec,
    GameFile,
    GameModel,
    KrausChannelSpec,
    LabelModel,
    MatrixJSON,
    NamedChannelSpec,
    PauliChannelSpec,
    ScenarioFile,
    StateFile,
)
from app.games.correlation import CorrelationGame
from app.quantum.channels import named_channel, pauli_channel
from app.quantum.choi import KrausChannel, PurifiedMargin, canonical_purification
from app.quantum.qobj import DensityOperator, HermitianOperator, Povm, SystemLabel, maximally_mixed
from app.sdp.marginal import MarginalScenario

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def matrix_to_json(matrix: np.ndarray) -> MatrixJSON:
    m = np.asarray(matrix, dtype=complex)
    return [[(float(z.real), float(z.imag)) for z in row] for row in m]


def matrix_from_json(data: MatrixJSON) -> np.ndarray:
    rows = [[complex(re, im) for re, im in row] for row in data]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise DimensionError("Matrix rows must be non-empty and of equal length")
    return np.array(rows, dtype=complex)


def label_from_model(model: LabelModel) -> SystemLabel:
    return SystemLabel(model.name, model.dim)


def load_model(path: Union[str, Path], model: type[ModelT]) -> ModelT:
    """Read and validate a JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    return model.model_validate_json(text)


def build_channel(spec: ChannelSpec) -> KrausChannel:
    """Expand a channel spec into Kraus form."""
    if isinstance(spec, KrausChannelSpec):
        kraus = tuple(matrix_from_json(k) for k in spec.kraus)
        return KrausChannel(SystemLabel("A", spec.in_dim), SystemLabel("B", spec.out_dim), kraus)
    if isinstance(spec, PauliChannelSpec):
        return pauli_channel(spec.p)
    if isinstance(spec, NamedChannelSpec):
        return named_channel(spec.name, d=spec.d, mu=spec.mu, q=spec.q, p=spec.p, gamma=spec.gamma)
    raise ValueError(f"Unsupported channel spec {spec!r}")


def density(
    factors: Sequence[SystemLabel], matrix: np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> DensityOperator:
    """Validate a state at the configured tolerances, then rescale it to unit trace."""
    kwargs = dict(tol=tolerances.herm, psd_tol=tolerances.psd, trace_tol=tolerances.trace)
    rho = DensityOperator(tuple(factors), matrix, **kwargs)
    return DensityOperator(rho.factors, rho.matrix / np.real(np.trace(rho.matrix)), **kwargs)


def build_margin(
    data: Optional[MatrixJSON], d: int, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> PurifiedMargin:
    """Canonical purification of the given margin, or of I/d when absent."""
    label = SystemLabel("A", d)
    rho = maximally_mixed(label) if data is None else density((label,), matrix_from_json(data), tolerances)
    return canonical_purification(rho, tolerances)


def build_scenario(spec: ScenarioFile, tolerances: Tolerances = DEFAULT_TOLERANCES) -> MarginalScenario:
    a = label_from_model(spec.A)
    bs = tuple(label_from_model(entry.B) for entry in spec.marginals)
    states = tuple(
        density((a, b), matrix_from_json(entry.state), tolerances)
        for b, entry in zip(bs, spec.marginals)
    )
    return MarginalScenario(a, bs, states, tolerances.margin)


def build_state(spec: StateFile, tolerances: Tolerances = DEFAULT_TOLERANCES) -> DensityOperator:
    factors = tuple(label_from_model(f) for f in spec.factors)
    return density(factors, matrix_from_json(spec.state), tolerances)


def _povm(effects: Sequence[MatrixJSON], label: SystemLabel, tolerances: Tolerances) -> Povm:
    operators = tuple(HermitianOperator((label,), matrix_from_json(e), tolerances.herm) for e in effects)
    return Povm(operators, tolerances.psd)


def build_game(
    spec: GameFile, factors: Sequence[SystemLabel], tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CorrelationGame:
    a, b = factors
    return CorrelationGame(
        _povm(spec.alice, a, tolerances), _povm(spec.bob, b, tolerances), np.array(spec.rewards, dtype=float)
    )


def game_to_model(game: CorrelationGame) -> GameModel:
    return GameModel(
        alice=[matrix_to_json(e.matrix) for e in game.alice.effects],
        bob=[matrix_to_json(e.matrix) for e in game.bob.effects],
        rewards=game.rewards.tolist(),
    )


# W(q, p) on a qubit: (1, 0) -> x, (1, 1) -> y, (0, 1) -> z
_WEYL_TO_PAULI = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


def pauli_weights(spec: ChannelSpec) -> Optional[PauliProbVector]:
    """Pauli weights of a qubit channel spec, or None when it is not a Pauli channel."""
    if isinstance(spec, PauliChannelSpec):
        return PauliProbVector.of(spec.p)
    if not isinstance(spec, NamedChannelSpec) or spec.d != 2:
        return None
    if spec.name == "identity":
        return PauliProbVector(1.0, 0.0, 0.0, 0.0)
    if spec.name == "depolarizing":
        weights = np.full(4, spec.mu / 4)
        weights[_WEYL_TO_PAULI[(spec.q % 2, spec.p % 2)]] += 1 - spec.mu
        return PauliProbVector.of(weights)
    return None


def analytic_pair(
    specs: Sequence[ChannelSpec], config: SolverConfig = DEFAULT_SOLVER
) -> Optional[AnalyticVerdict]:
    """Closed-form verdict for two depolarizing or two Pauli channels."""
    if len(specs) != 2:
        return None
    first, second = specs
    depolarizing = all(isinstance(s, NamedChannelSpec) and s.name == "depolarizing" for s in specs)
    if depolarizing and first.d == second.d and first.d >= 2:
        return AnalyticVerdict(
            criterion="depolarizing",
            compatible=depol_compatible(first.mu, second.mu, first.d),
            margin_to_boundary=float(depol_margin(first.mu, second.mu, first.d)),
        )
    p, q = pauli_weights(first), pauli_weights(second)
    if p is None or q is None:
        return None
    verdict = pauli_compatible(p, q, config)
    certificate = None
    if verdict.certificate is not None:
        cert = verdict.certificate
        certificate = {"lambda": cert.lambda_, "mu": cert.mu, "nu": cert.nu, "min_eig": cert.min_eig}
    return AnalyticVerdict(
        criterion="pauli",
        compatible=verdict.compatible,
        certificate=certificate,
        margin_to_boundary=float(verdict.margin),
    )
