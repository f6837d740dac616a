"""Entropic necessary conditions for channel compatibility.

All entropies are in bits. A negative witness value certifies
incompatibility; a nonnegative one is inconclusive.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.config import DEFAULT_TOLERANCES, Tolerances
from app.criteria.analytic import depol_compatible
from app.quantum.channels import depolarizing_choi_spectrum
from app.quantum.choi import KrausChannel, PurifiedMargin, choi_state, orthogonal_kraus
from app.quantum.qobj import DensityOperator, spectrum_entropy, von_neumann_entropy

logger = logging.getLogger(__name__)

# witness values within this band of zero are reported as "boundary"
ENTROPIC_BAND = 1e-9
REGION_COLUMNS = ["mu", "nu", "exact", "entropic"]


@dataclass
class EntropicReport:
    """Entropies entering one witness and its value.

    ``weights`` are the coefficients of h_channels; the margins always enter
    with -1 and h_A with -``a_weight``.
    """

    h_channels: list[float]
    h_margins: list[float]
    h_A: float
    witness_value: float
    weights: list[float] = field(default_factory=list)
    a_weight: float = 0.0
    assignments: dict[int, float] = field(default_factory=dict)

    def recompute(self) -> float:
        weights = self.weights or [1.0] * len(self.h_channels)
        return float(
            sum(w * h for w, h in zip(weights, self.h_channels))
            - sum(self.h_margins)
            - self.a_weight * self.h_A
        )

    @property
    def verdict(self) -> str:
        if self.witness_value < -ENTROPIC_BAND:
            return "incompatible"
        if self.witness_value <= ENTROPIC_BAND:
            return "boundary"
        return "pass"

    @property
    def refutes(self) -> bool:
        return self.verdict == "incompatible"


def channel_entropy(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Von Neumann entropy of the Choi state of ``phi``."""
    return von_neumann_entropy(choi_state(phi, margin, tolerances).state, tolerances.eig_floor)


def channel_entropy_from_spectrum(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Shannon entropy of λ_i = tr[K_i ρ_A K_i†] over orthogonal Kraus operators."""
    spectrum = orthogonal_kraus(choi_state(phi, margin, tolerances), tolerances)
    return spectrum_entropy(spectrum.lambdas, tolerances.eig_floor)


def output_entropy(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """H(Φ(ρ_A^T)) with the transpose in the eigenbasis of ρ_A."""
    output = phi.apply(margin.transpose(margin.rho_A.matrix))
    return von_neumann_entropy(DensityOperator((phi.out_label,), output), tolerances.eig_floor)


def _common_input(channels: Sequence[KrausChannel], margin: PurifiedMargin) -> None:
    for phi in channels:
        if phi.d_in != margin.dim:
            raise ValueError(
                f"Channel input dimension {phi.d_in} does not match margin dimension {margin.dim}"
            )


def wm_pair_witness(
    phi1: KrausChannel,
    phi2: KrausChannel,
    margin: PurifiedMargin,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> EntropicReport:
    """H(Φ₁) + H(Φ₂) - H(ρ_B₁) - H(ρ_B₂), from weak monotonicity."""
    _common_input([phi1, phi2], margin)
    hs = [channel_entropy(phi, margin, tolerances) for phi in (phi1, phi2)]
    hb = [output_entropy(phi, margin, tolerances) for phi in (phi1, phi2)]
    h_a = von_neumann_entropy(margin.rho_A, tolerances.eig_floor)
    report = EntropicReport(hs, hb, h_a, 0.0, [1.0, 1.0], 0.0)
    report.witness_value = report.recompute()
    return report


def wm_triple_witness(
    phi1: KrausChannel,
    phi2: KrausChannel,
    phi3: KrausChannel,
    margin: PurifiedMargin,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> EntropicReport:
    """H(Φ₁) + H(Φ₂) + 2H(Φ₃) - H(ρ_B₁) - H(ρ_B₂) - 2H(ρ_A), minimised over which channel sits in slot 3.

    ``assignments`` maps the index of the slot-3 channel to its value.
    """
    channels = [phi1, phi2, phi3]
    _common_input(channels, margin)
    hs = [channel_entropy(phi, margin, tolerances) for phi in channels]
    hb = [output_entropy(phi, margin, tolerances) for phi in channels]
    h_a = von_neumann_entropy(margin.rho_A, tolerances.eig_floor)

    reports = {}
    for third in range(3):
        others = [k for k in range(3) if k != third]
        order = others + [third]
        report = EntropicReport(
            [hs[k] for k in order], [hb[k] for k in others], h_a, 0.0, [1.0, 1.0, 2.0], 2.0
        )
        report.witness_value = report.recompute()
        reports[third] = report
    best = min(reports, key=lambda k: reports[k].witness_value)
    chosen = reports[best]
    chosen.assignments = {k: r.witness_value for k, r in reports.items()}
    return chosen


def self_compat_entropic(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> tuple[float, float]:
    """(H(Φ) - H(ρ_B), 2H(Φ) - H(ρ_B) - H(ρ_A)); a negative entry refutes self-compatibility."""
    h = channel_entropy(phi, margin, tolerances)
    h_b = output_entropy(phi, margin, tolerances)
    h_a = von_neumann_entropy(margin.rho_A, tolerances.eig_floor)
    return h - h_b, 2 * h - h_b - h_a


# ============================================================
# Depolarizing closed forms and region scans
# ============================================================


def depol_channel_entropy(mu: float, d: int) -> float:
    """Entropy of a depolarizing channel for the margin I/d."""
    return spectrum_entropy(depolarizing_choi_spectrum(mu, d))


def depol_pair_witness(mu: float, nu: float, d: int) -> float:
    """Pair witness for two depolarizing channels with margin I/d; outputs are maximally mixed."""
    return depol_channel_entropy(mu, d) + depol_channel_entropy(nu, d) - 2 * np.log2(d)


def _scan_row(mu: float, grid: np.ndarray, d: int) -> list[tuple[float, float, bool, bool]]:
    h_mu = depol_channel_entropy(mu, d)
    rows = []
    for nu in grid:
        witness = h_mu + depol_channel_entropy(nu, d) - 2 * np.log2(d)
        rows.append((float(mu), float(nu), depol_compatible(mu, nu, d), bool(witness >= -ENTROPIC_BAND)))
    return rows


def depol_region_scan(d: int, grid: int, workers: Optional[int] = None) -> pd.DataFrame:
    """Exact and entropic verdicts on a uniform grid over [0, 1]², row-major in μ then ν."""
    if d < 2:
        raise ValueError(f"Dimension must be at least 2, got {d}")
    if grid < 2:
        raise ValueError(f"Grid needs at least 2 points per axis, got {grid}")
    axis = np.linspace(0.0, 1.0, grid)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = [row for chunk in pool.map(lambda mu: _scan_row(mu, axis, d), axis) for row in chunk]
    df = pd.DataFrame(rows, columns=REGION_COLUMNS)
    violations = int((df["exact"] & ~df["entropic"]).sum())
    if violations:
        logger.warning(f"{violations} grid points are exactly compatible but fail the entropic test")
    logger.info(f"Scanned {len(df)} points for d={d}")
    return df


def equal_noise_flip(df: pd.DataFrame) -> tuple[float, float]:
    """Last incompatible and first compatible μ on the diagonal μ = ν."""
    diagonal = df[np.isclose(df["mu"], df["nu"])].sort_values("mu")
    below = diagonal[~diagonal["exact"]]["mu"].max()
    above = diagonal[diagonal["exact"]]["mu"].min()
    return float(below), float(above)


def write_region_csv(df: pd.DataFrame, path: Path) -> Path:
    """Write a scan as CSV: 6-decimal μ/ν and 0/1 flags."""
    out = df[REGION_COLUMNS].astype({"exact": int, "entropic": int})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path
