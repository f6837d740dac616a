"""Tests for file formats."""

import json

import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from app.config import DEFAULT_TOLERANCES
from app.errors import DimensionError, InconsistentMarginError
from app.formats.codec import (
    analytic_pair,
    build_channel,
    build_game,
    build_margin,
    build_scenario,
    build_state,
    game_to_model,
    load_model,
    matrix_from_json,
    matrix_to_json,
    pauli_weights,
)
from app.formats.schemas import ChannelsFile, ChannelSpec, GameFile, ScenarioFile, StateFile
from app.games.correlation import CorrelationGame
from app.games.povm import ic_povm
from app.quantum.channels import depolarizing
from app.quantum.qobj import SystemLabel

BELL = [
    [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
]


class TestMatrixCodec:
    """Test complex matrix encoding."""

    def test_encoding(self):
        """Entries should become [re, im] pairs in row-major order."""
        data = matrix_to_json(np.array([[1, 2j], [-2j, 3]]))
        assert data == [[(1.0, 0.0), (0.0, 2.0)], [(-0.0, -2.0), (3.0, 0.0)]]

    def test_decoding(self):
        """Pairs should decode to complex entries."""
        m = matrix_from_json([[(0.5, 0.0), (0.0, -0.5)], [(0.0, 0.5), (0.5, 0.0)]])
        assert m[0, 1] == -0.5j
        assert m.shape == (2, 2)

    def test_ragged(self):
        """Ragged rows should be rejected."""
        with pytest.raises(DimensionError):
            matrix_from_json([[(1.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]])


class TestChannelSpecs:
    """Test channel specifications."""

    adapter = TypeAdapter(ChannelSpec)

    def test_named(self):
        """A named depolarizing channel should expand to Kraus form."""
        spec = self.adapter.validate_python({"kind": "named", "name": "depolarizing", "d": 2, "mu": 0.4})
        phi = build_channel(spec)
        rho = np.array([[0.7, 0.1], [0.1, 0.3]])
        assert np.allclose(phi.apply(rho), depolarizing(0.4, 2).apply(rho))

    def test_pauli(self):
        """A Pauli spec should build a qubit channel."""
        spec = self.adapter.validate_python({"kind": "pauli", "p": [0.7, 0.1, 0.1, 0.1]})
        assert build_channel(spec).d_in == 2

    def test_kraus(self):
        """Explicit Kraus operators should be validated for trace preservation."""
        spec = self.adapter.validate_python(
            {"kind": "kraus", "in_dim": 2, "out_dim": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]]}
        )
        with pytest.raises(ValueError, match="trace preserving"):
            build_channel(spec)

    def test_unknown_kind(self):
        """An unknown discriminator should fail validation."""
        with pytest.raises(ValidationError):
            self.adapter.validate_python({"kind": "teleport"})

    def test_margin_default(self):
        """A missing margin should purify I/d."""
        margin = build_margin(None, 3)
        assert np.allclose(margin.rho_A.matrix, np.eye(3) / 3)


class TestFiles:
    """Test whole input files."""

    def test_channels_file(self, tmp_path):
        """Should load a channels file from disk."""
        path = tmp_path / "channels.json"
        path.write_text(json.dumps({"channels": [{"kind": "named", "name": "identity", "d": 2}] * 2}))
        spec = load_model(path, ChannelsFile)
        assert len(spec.channels) == 2
        assert spec.margin is None

    def test_malformed_json(self, tmp_path):
        """Malformed JSON should raise a validation error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            load_model(path, ChannelsFile)

    def test_scenario(self):
        """A scenario file should build a marginal scenario."""
        spec = ScenarioFile.model_validate(
            {
                "A": {"name": "A", "dim": 2},
                "marginals": [
                    {"B": {"name": "B1", "dim": 2}, "state": BELL},
                    {"B": {"name": "B2", "dim": 2}, "state": BELL},
                ],
            }
        )
        scenario = build_scenario(spec)
        assert scenario.n == 2
        assert [b.name for b in scenario.Bs] == ["B1", "B2"]

    def test_scenario_inconsistent(self):
        """Different A-margins should be rejected while building."""
        product = [[[1.0 if (i == j and i < 2) else 0.0, 0.0] for j in range(4)] for i in range(4)]
        product = [[[v / 2, 0.0] for v, _ in row] for row in product]
        spec = ScenarioFile.model_validate(
            {
                "A": {"name": "A", "dim": 2},
                "marginals": [
                    {"B": {"name": "B1", "dim": 2}, "state": BELL},
                    {"B": {"name": "B2", "dim": 2}, "state": product},
                ],
            }
        )
        with pytest.raises(InconsistentMarginError, match="inconsistent common margin"):
            build_scenario(spec)

    def test_game_round_trip(self):
        """A game written out should load back with the same rewards."""
        a, b = SystemLabel("A", 2), SystemLabel("B", 2)
        state = build_state(
            StateFile.model_validate({"factors": [{"name": "A", "dim": 2}, {"name": "B", "dim": 2}], "state": BELL})
        )
        game = CorrelationGame(ic_povm(a), ic_povm(b), np.arange(16.0).reshape(4, 4))
        loaded = build_game(GameFile.model_validate(game_to_model(game).model_dump()), state.factors)
        assert np.allclose(loaded.rewards, game.rewards)
        assert np.allclose(loaded.operator().matrix, game.operator().matrix)


def _scaled_mixed(scale: float) -> dict:
    state = [[[scale / 4 if i == j else 0.0, 0.0] for j in range(4)] for i in range(4)]
    return {"factors": [{"name": "A", "dim": 2}, {"name": "B", "dim": 2}], "state": state}


class TestConfiguredTolerances:
    """Validation of loaded operators follows the configured tolerances."""

    def test_default_rejects_trace_offset(self):
        """A 1e-5 trace offset exceeds the default tolerance."""
        with pytest.raises(ValueError, match="trace"):
            build_state(StateFile.model_validate(_scaled_mixed(1 + 1e-5)))

    def test_loose_tolerance_accepts_and_normalizes(self):
        """A loose tolerance accepts the state and rescales it to unit trace."""
        rho = build_state(StateFile.model_validate(_scaled_mixed(1 + 1e-5)), DEFAULT_TOLERANCES.with_overall(1e-3))
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-14)
        assert np.allclose(rho.matrix, np.eye(4) / 4)

    def test_loose_tolerance_reaches_margin(self):
        """The channel margin is validated with the same tolerances."""
        data = [[[0.5 + 1e-5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]
        with pytest.raises(ValueError, match="trace"):
            build_margin(data, 2)
        margin = build_margin(data, 2, DEFAULT_TOLERANCES.with_overall(1e-3))
        assert np.allclose(margin.rho_A.matrix, np.eye(2) / 2, atol=1e-5)

    def test_loose_tolerance_reaches_povm(self):
        """Game effects are validated with the same tolerances."""
        a, b = SystemLabel("A", 2), SystemLabel("B", 2)
        game = CorrelationGame(ic_povm(a), ic_povm(b), np.ones((4, 4)))
        model = game_to_model(game).model_dump()
        re, im = model["alice"][0][0][1]
        model["alice"][0][0][1] = (re + 1e-6, im)
        spec = GameFile.model_validate(model)
        with pytest.raises(ValueError):
            build_game(spec, (a, b))
        loaded = build_game(spec, (a, b), DEFAULT_TOLERANCES.with_overall(1e-3))
        assert len(loaded.alice) == 4


CHANNEL = TypeAdapter(ChannelSpec)


class TestAnalyticPair:
    """Closed-form verdicts attached to channel pairs."""

    def test_shifted_depolarizing_weights(self):
        """A W(1,1)-shifted depolarizing qubit channel should put its weight on y."""
        spec = CHANNEL.validate_python({"kind": "named", "name": "depolarizing", "d": 2, "mu": 0.4, "q": 1, "p": 1})
        assert pauli_weights(spec).as_array() == pytest.approx([0.1, 0.1, 0.7, 0.1])

    def test_non_pauli(self):
        """Amplitude damping is not a Pauli channel."""
        spec = CHANNEL.validate_python({"kind": "named", "name": "amplitude_damping", "gamma": 0.3})
        assert pauli_weights(spec) is None

    def test_depolarizing_margin(self):
        """Qudit depolarizing pairs use the closed-form margin."""
        spec = CHANNEL.validate_python({"kind": "named", "name": "depolarizing", "d": 3, "mu": 0.5})
        verdict = analytic_pair([spec, spec])
        assert verdict.criterion == "depolarizing"
        assert verdict.compatible
        assert verdict.margin_to_boundary == pytest.approx(0.5 + 2 / 3 * 0.5 + 0.5 - 1)

    def test_pauli_certificate(self):
        """Completely depolarizing Pauli channels should come with a certificate."""
        spec = CHANNEL.validate_python({"kind": "pauli", "p": [0.25, 0.25, 0.25, 0.25]})
        verdict = analytic_pair([spec, spec])
        assert verdict.criterion == "pauli"
        assert verdict.compatible
        assert set(verdict.certificate) == {"lambda", "mu", "nu", "min_eig"}

    def test_not_a_pair(self):
        """Only pairs should get a closed-form verdict."""
        spec = CHANNEL.validate_python({"kind": "pauli", "p": [1, 0, 0, 0]})
        assert analytic_pair([spec]) is None
        assert analytic_pair([spec] * 3) is None
