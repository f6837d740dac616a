"""File-format schemas using Pydantic.

Complex matrices are nested arrays of [re, im] pairs in row-major order;
system labels are {"name": str, "dim": int}.
"""

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field

ComplexPair = tuple[float, float]
MatrixJSON = list[list[ComplexPair]]


class LabelModel(BaseModel):
    """A named tensor factor."""

    name: str = Field(min_length=1)
    dim: int = Field(ge=1)


# ============================================================
# Channel inputs
# ============================================================


class KrausChannelSpec(BaseModel):
    """Channel given by explicit Kraus operators."""

    kind: Literal["kraus"] = "kraus"
    in_dim: int = Field(ge=1)
    out_dim: int = Field(ge=1)
    kraus: list[MatrixJSON] = Field(min_length=1)


class NamedChannelSpec(BaseModel):
    """Shorthand for a named family.

    depolarizing uses d, mu and the Weyl shift (q, p); amplitude_damping uses
    gamma; identity and measure_prepare use d.
    """

    kind: Literal["named"] = "named"
    name: Literal["identity", "depolarizing", "amplitude_damping", "measure_prepare"]
    d: int = Field(default=2, ge=1)
    mu: float = Field(default=0.0, ge=0.0, le=1.0)
    q: int = 0
    p: int = 0
    gamma: float = Field(default=0.0, ge=0.0, le=1.0)


class PauliChannelSpec(BaseModel):
    """Pauli channel with weights (p0, px, py, pz)."""

    kind: Literal["pauli"] = "pauli"
    p: list[float] = Field(min_length=4, max_length=4)


ChannelSpec = Annotated[
    Union[KrausChannelSpec, NamedChannelSpec, PauliChannelSpec],
    Field(discriminator="kind"),
]


class ChannelsFile(BaseModel):
    """Channels sharing one input, with an optional full-rank margin (default I/d)."""

    channels: list[ChannelSpec] = Field(min_length=1)
    margin: Optional[MatrixJSON] = None


class ChannelFile(BaseModel):
    """A single channel, for self-compatibility checks."""

    channel: ChannelSpec
    margin: Optional[MatrixJSON] = None
    n: int = Field(default=2, ge=2)


# ============================================================
# State inputs
# ============================================================


class MarginalEntry(BaseModel):
    B: LabelModel
    state: MatrixJSON


class ScenarioFile(BaseModel):
    """Marginal scenario: states on A⊗B_k sharing the A-margin."""

    A: LabelModel
    marginals: list[MarginalEntry] = Field(min_length=1)


class StateFile(BaseModel):
    """A bipartite state on A⊗B."""

    factors: list[LabelModel] = Field(min_length=2, max_length=2)
    state: MatrixJSON


class GameFile(BaseModel):
    """Correlation game: local effects and a reward table."""

    alice: list[MatrixJSON] = Field(min_length=1)
    bob: list[MatrixJSON] = Field(min_length=1)
    rewards: list[list[float]]


# ============================================================
# Outputs
# ============================================================


class RunRecordModel(BaseModel):
    command: str
    input_hash: str
    config_hash: str
    seed: int
    app_version: str


class AnalyticVerdict(BaseModel):
    """Closed-form verdict with its distance to the boundary."""

    criterion: Literal["depolarizing", "pauli"]
    compatible: bool
    certificate: Optional[dict[str, float]] = None
    margin_to_boundary: float


class VerdictReport(BaseModel):
    """Feasibility / compatibility verdict."""

    command: str
    status: Literal["feasible", "infeasible", "ambiguous"]
    compatible: Optional[bool] = None
    t: Optional[float] = None
    dual_value: Optional[float] = None
    gap: Optional[float] = None
    joint: Optional[MatrixJSON] = None
    certificate: list[MatrixJSON] = Field(default_factory=list)
    diagnostics: str = ""
    analytic: Optional[AnalyticVerdict] = None
    run: Optional[RunRecordModel] = None


class GameModel(BaseModel):
    alice: list[MatrixJSON]
    bob: list[MatrixJSON]
    rewards: list[list[float]]


class RobustnessReport(BaseModel):
    """Robustness value with optional witness and derived game."""

    command: str
    free: str
    status: str
    t: Optional[float] = None
    primal: Optional[float] = None
    dual: Optional[float] = None
    gap: Optional[float] = None
    witness: list[MatrixJSON] = Field(default_factory=list)
    game: Optional[GameModel] = None
    game_ratio: Optional[float] = None
    sampled_free_max: Optional[float] = None
    diagnostics: str = ""
    run: Optional[RunRecordModel] = None


class MethodVerdictModel(BaseModel):
    method: str
    verdict: str
    value: Optional[float] = None
    exact: bool


class SelfCompatReport(BaseModel):
    """Self-compatibility verdicts from one or more methods."""

    command: str
    status: Literal["agree", "disagree"]
    self_compatible: Optional[bool] = None
    methods: list[MethodVerdictModel]
    conflicts: list[str] = Field(default_factory=list)
    run: Optional[RunRecordModel] = None


class GameReport(BaseModel):
    """Payoff of a game on a state and its canonical form."""

    command: str
    payoff: float
    payoff_min: float
    payoff_max: float
    canonical_payoff: float
    canonical_rewards: list[list[float]]
    run: Optional[RunRecordModel] = None
