"""Tests for entropic compatibility witnesses."""

import numpy as np
import pandas as pd
import pytest

from app.criteria.entropy import (
    REGION_COLUMNS,
    EntropicReport,
    channel_entropy,
    channel_entropy_from_spectrum,
    depol_channel_entropy,
    depol_pair_witness,
    depol_region_scan,
    equal_noise_flip,
    self_compat_entropic,
    wm_pair_witness,
    wm_triple_witness,
    write_region_csv,
)
from app.quantum.channels import depolarizing, identity
from app.quantum.choi import KrausChannel, canonical_purification
from app.quantum.qobj import DensityOperator, SystemLabel, maximally_mixed, weyl
from app.quantum.random import default_rng, random_channel, random_full_rank_density

A = SystemLabel("A", 2)


def uniform_margin(d: int = 2):
    return canonical_purification(maximally_mixed(SystemLabel("A", d)))


class TestChannelEntropy:
    """Test channel entropies."""

    def test_identity(self):
        """The identity has a pure Choi state."""
        assert channel_entropy(identity(2), uniform_margin()) == pytest.approx(0.0, abs=1e-10)

    def test_depolarizing_closed_form(self):
        """The closed form should match the Choi-state entropy."""
        for d, mu in [(2, 0.3), (3, 0.8)]:
            value = channel_entropy(depolarizing(mu, d), uniform_margin(d))
            assert value == pytest.approx(depol_channel_entropy(mu, d), abs=1e-9)

    def test_spectrum_path(self):
        """The Kraus-spectrum entropy should equal the Choi-state entropy."""
        rng = default_rng(9)
        phi = random_channel(2, 3, rng, n_kraus=3)
        margin = canonical_purification(random_full_rank_density(A, rng))
        assert channel_entropy_from_spectrum(phi, margin) == pytest.approx(channel_entropy(phi, margin), abs=1e-8)

    def test_weyl_conjugation_invariant(self):
        """Conjugating input or output by a Weyl operator should keep the entropy."""
        rng = default_rng(17)
        phi = random_channel(3, 3, rng, n_kraus=2)
        margin = uniform_margin(3)
        w = weyl(1, 2, 3)
        after = KrausChannel(phi.in_label, phi.out_label, tuple(w @ k for k in phi.kraus))
        before = KrausChannel(phi.in_label, phi.out_label, tuple(k @ w for k in phi.kraus))
        value = channel_entropy(phi, margin)
        assert channel_entropy(after, margin) == pytest.approx(value, abs=1e-9)
        assert channel_entropy(before, margin) == pytest.approx(value, abs=1e-9)


class TestWitnesses:
    """Test the weak-monotonicity witnesses."""

    def test_identity_pair(self):
        """Two identity channels should give exactly -2."""
        report = wm_pair_witness(identity(2), identity(2), uniform_margin())
        assert report.witness_value == pytest.approx(-2.0, abs=1e-10)
        assert report.verdict == "incompatible"
        assert report.refutes

    def test_pair_symmetric(self):
        """Swapping the two channels should not change the pair witness."""
        rng = default_rng(19)
        phi1, phi2 = random_channel(2, 2, rng, n_kraus=2), random_channel(2, 3, rng, n_kraus=3)
        margin = canonical_purification(random_full_rank_density(A, rng))
        forward = wm_pair_witness(phi1, phi2, margin).witness_value
        assert wm_pair_witness(phi2, phi1, margin).witness_value == pytest.approx(forward, abs=1e-10)

    def test_identity_triple(self):
        """Three identity channels should give exactly -4."""
        report = wm_triple_witness(identity(2), identity(2), identity(2), uniform_margin())
        assert report.witness_value == pytest.approx(-4.0, abs=1e-10)
        assert set(report.assignments) == {0, 1, 2}

    def test_triple_takes_minimum(self):
        """The reported value should be the smallest slot assignment."""
        report = wm_triple_witness(identity(2), depolarizing(0.9, 2), depolarizing(0.5, 2), uniform_margin())
        assert report.witness_value == pytest.approx(min(report.assignments.values()))

    def test_depolarizing_pair_closed_form(self):
        """The pair witness should match its depolarizing closed form."""
        report = wm_pair_witness(depolarizing(0.2, 2), depolarizing(0.6, 2), uniform_margin())
        assert report.witness_value == pytest.approx(depol_pair_witness(0.2, 0.6, 2), abs=1e-9)

    def test_report_recompute(self):
        """recompute() should reproduce the stored witness value."""
        report = wm_pair_witness(depolarizing(0.4, 2), identity(2), uniform_margin())
        assert report.recompute() == pytest.approx(report.witness_value)

    def test_verdict_band(self):
        """Values within 1e-9 of zero should be reported as boundary."""
        assert EntropicReport([0.0], [0.0], 0.0, 1e-12).verdict == "boundary"
        assert EntropicReport([0.0], [0.0], 0.0, 0.5).verdict == "pass"

    def test_mismatched_input(self):
        """Channels must act on the margin's system."""
        with pytest.raises(ValueError, match="input dimension"):
            wm_pair_witness(identity(3), identity(3), uniform_margin())

    def test_self_compat(self):
        """The identity should be refuted; depolarizing(0.5) should pass."""
        assert min(self_compat_entropic(identity(2), uniform_margin())) < 0
        assert min(self_compat_entropic(depolarizing(0.5, 2), uniform_margin())) >= 0

    def test_non_uniform_margin(self):
        """The identity pair stays refuted for a biased margin."""
        margin = canonical_purification(DensityOperator((A,), np.diag([0.8, 0.2])))
        assert wm_pair_witness(identity(2), identity(2), margin).refutes


class TestRegionScan:
    """Test the depolarizing region scan."""

    def test_qubit_grid(self):
        """d=2 on a 101 grid should flip between 0.33 and 0.34 without violations."""
        df = depol_region_scan(2, 101)
        assert len(df) == 101 * 101
        assert list(df.columns) == REGION_COLUMNS
        below, above = equal_noise_flip(df)
        assert below == pytest.approx(0.33)
        assert above == pytest.approx(0.34)
        assert not (df["exact"] & ~df["entropic"]).any()

    def test_d16_grid(self):
        """d=16 should flip between 0.47 and 0.48."""
        df = depol_region_scan(16, 101)
        below, above = equal_noise_flip(df)
        assert below == pytest.approx(0.47)
        assert above == pytest.approx(0.48)
        assert not (df["exact"] & ~df["entropic"]).any()

    def test_row_order(self):
        """Rows should be ordered by μ then ν regardless of workers."""
        df = depol_region_scan(2, 5, workers=3)
        assert df["mu"].tolist() == sorted(df["mu"].tolist())
        assert df["nu"].tolist()[:5] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_csv_is_deterministic(self, tmp_path):
        """Writing the same scan twice should give identical bytes."""
        first = write_region_csv(depol_region_scan(2, 11), tmp_path / "a.csv")
        second = write_region_csv(depol_region_scan(2, 11), tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()
        lines = first.read_text().splitlines()
        assert lines[0] == "mu,nu,exact,entropic"
        assert lines[1] == "0.000000,0.000000,0,0"
        assert len(pd.read_csv(first)) == 121

    def test_invalid_grid(self):
        """Should reject grids with fewer than two points."""
        with pytest.raises(ValueError, match="Grid"):
            depol_region_scan(2, 1)
