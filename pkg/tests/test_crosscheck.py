"""Tests for the self-compatibility cross-check."""

import pytest

from app.ops.crosscheck import (
    COMPATIBLE,
    INCOMPATIBLE,
    INCONCLUSIVE,
    UNDECIDED,
    CrossCheckReport,
    MethodVerdict,
    check_closed_form,
    check_entropic,
    check_sdp,
    check_self_compatibility,
)
from app.quantum.channels import amplitude_damping, depolarizing, identity
from app.quantum.choi import canonical_purification
from app.quantum.qobj import SystemLabel, maximally_mixed


def uniform_margin(d: int = 2):
    return canonical_purification(maximally_mixed(SystemLabel("A", d)))


class TestMethods:
    """Test the individual methods."""

    def test_closed_form(self):
        """Should decide qubit channels and skip larger ones."""
        assert check_closed_form(identity(2), uniform_margin()).verdict == INCOMPATIBLE
        assert check_closed_form(depolarizing(0.5, 2), uniform_margin()).verdict == COMPATIBLE
        assert check_closed_form(identity(3), uniform_margin(3)).verdict == UNDECIDED

    def test_closed_form_value(self):
        """Depolarizing(0.5) should sit about 0.202 inside the compatible side."""
        verdict = check_closed_form(depolarizing(0.5, 2), uniform_margin())
        assert verdict.value == pytest.approx(0.5 - 0.2977, abs=1e-3)

    def test_sdp(self):
        """The cone program should agree on clear cases."""
        assert check_sdp(identity(2), uniform_margin()).verdict == INCOMPATIBLE
        assert check_sdp(depolarizing(0.5, 2), uniform_margin()).verdict == COMPATIBLE

    def test_entropic_only_refutes(self):
        """The entropic method never reports compatibility."""
        assert check_entropic(identity(2), uniform_margin()).verdict == INCOMPATIBLE
        verdict = check_entropic(depolarizing(0.5, 2), uniform_margin())
        assert verdict.verdict == INCONCLUSIVE
        assert not verdict.exact


class TestCrossCheck:
    """Test the combined report."""

    def test_identity_agrees(self):
        """All methods should refute the identity channel."""
        report = check_self_compatibility(identity(2), uniform_margin())
        assert report.status == "agree"
        assert report.self_compatible is False
        assert [v.method for v in report.verdicts] == ["closed-form", "sdp", "entropic"]

    def test_depolarizing_agrees(self):
        """Depolarizing(0.5) should be self-compatible."""
        report = check_self_compatibility(depolarizing(0.5, 2), uniform_margin())
        assert report.status == "agree"
        assert report.self_compatible is True

    def test_amplitude_damping(self):
        """Amplitude damping flips at γ = 1/2."""
        assert check_self_compatibility(amplitude_damping(0.3), uniform_margin()).self_compatible is False
        assert check_self_compatibility(amplitude_damping(0.7), uniform_margin()).self_compatible is True

    def test_single_method(self):
        """Only the requested methods should run."""
        report = check_self_compatibility(identity(2), uniform_margin(), methods=("entropic",))
        assert len(report.verdicts) == 1
        assert report.self_compatible is False

    def test_three_copies_skip_closed_form(self):
        """The closed form is left undecided for n = 3."""
        report = check_self_compatibility(depolarizing(0.9, 2), uniform_margin(), methods=("closed-form",), n=3)
        assert report.verdicts[0].verdict == UNDECIDED
        assert report.self_compatible is None

    def test_unknown_method(self):
        """Should reject unknown method names."""
        with pytest.raises(ValueError, match="Unknown methods"):
            check_self_compatibility(identity(2), uniform_margin(), methods=("magic",))


class TestReport:
    """Test report bookkeeping."""

    def test_disagreement_has_no_answer(self):
        """A disagreeing report should not claim a verdict."""
        report = CrossCheckReport(status="disagree")
        report.add(MethodVerdict("closed-form", COMPATIBLE, 0.1))
        report.add(MethodVerdict("sdp", INCOMPATIBLE, 0.2))
        assert report.self_compatible is None

    def test_to_json(self):
        """Should serialize all verdicts."""
        report = CrossCheckReport()
        report.add(MethodVerdict("entropic", INCONCLUSIVE, 0.3, exact=False))
        data = report.to_json()
        assert data["status"] == "agree"
        assert data["self_compatible"] is None
        assert data["methods"] == [{"method": "entropic", "verdict": "inconclusive", "value": 0.3, "exact": False}]

    def test_to_json_drops_nan(self):
        """A non-finite value should serialize as None."""
        report = CrossCheckReport()
        report.add(MethodVerdict("sdp", UNDECIDED, float("nan")))
        assert report.to_json()["methods"][0]["value"] is None
