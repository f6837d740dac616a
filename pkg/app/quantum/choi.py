"""Channel-state duality through canonical purifications.

A full-rank margin ρ_A = Σ t_n |n><n| gives |Ω> = Σ √t_n |n>⊗|n>. Channels
map to Choi states (id ⊗ Φ)(|Ω><Ω|) and back via the inverse formula

    Φ(ϱ) = tr_A[ρ_AB (ρ_A^{-1/2} ϱ^{T_A} ρ_A^{-1/2} ⊗ I_B)]

with the transpose taken in the eigenbasis of ρ_A.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.config import DEFAULT_TOLERANCES, Tolerances
from app.errors import (
    DimensionError,
    InconsistentMarginError,
    NumericalError,
    RankDeficientError,
)
from app.quantum.qobj import DensityOperator, SystemLabel, ptrace_matrix

logger = logging.getLogger(__name__)

# eigenvalues closer than this are treated as one degenerate eigenspace
CLUSTER_TOL = 1e-10
# projected basis vectors shorter than this are skipped during Gram-Schmidt
GRAM_SCHMIDT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PurifiedMargin:
    """A full-rank margin with its canonical purification."""

    rho_A: DensityOperator
    eigenvalues: np.ndarray  # descending
    basis: np.ndarray  # columns |n>
    omega: np.ndarray

    @property
    def label(self) -> SystemLabel:
        return self.rho_A.factors[0]

    @property
    def dim(self) -> int:
        return self.rho_A.dim

    def transpose(self, x: np.ndarray) -> np.ndarray:
        """Transpose in the stored eigenbasis: U (U† X U)^T U†."""
        u = self.basis
        return u @ (u.conj().T @ x @ u).T @ u.conj().T

    def inverse_sqrt(self) -> np.ndarray:
        u = self.basis
        return u @ np.diag(1.0 / np.sqrt(self.eigenvalues)) @ u.conj().T

    def condition(self) -> float:
        return float(self.eigenvalues[0] / self.eigenvalues[-1])


def _phase_fix(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > GRAM_SCHMIDT_TOL:
            return v * (abs(x) / x)
    return v


def canonical_eigenbasis(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic eigen-decomposition of a Hermitian matrix.

    Eigenvalues descending. Inside a degenerate eigenspace the basis is the
    Gram-Schmidt orthonormalisation of the projected computational basis
    vectors, taken in index order. Each vector's first non-negligible
    coordinate is real positive.
    """
    evals, evecs = np.linalg.eigh(matrix)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    d = len(evals)
    values: list[float] = []
    vectors: list[np.ndarray] = []
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and evals[stop - 1] - evals[stop] <= CLUSTER_TOL:
            stop += 1
        block = evecs[:, start:stop]
        size = stop - start
        if size == 1:
            chosen = [block[:, 0]]
        else:
            projector = block @ block.conj().T
            chosen = []
            for j in range(d):
                v = projector[:, j].copy()
                for c in chosen:
                    v = v - (c.conj() @ v) * c
                norm = np.linalg.norm(v)
                if norm > GRAM_SCHMIDT_TOL:
                    chosen.append(v / norm)
                if len(chosen) == size:
                    break
        mean = float(np.mean(evals[start:stop]))
        for v in chosen:
            vectors.append(_phase_fix(v))
            values.append(mean if size > 1 else float(evals[start]))
        start = stop
    return np.array(values), np.column_stack(vectors)


def canonical_purification(
    rho_A: DensityOperator, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> PurifiedMargin:
    """Build |Ω> = Σ √t_n |n>⊗|n> for a full-rank single-system state."""
    if len(rho_A.factors) != 1:
        raise DimensionError(f"Margin must live on one system, got {list(rho_A.names)}")
    values, basis = canonical_eigenbasis(rho_A.matrix)
    if values[-1] <= tolerances.rank:
        raise RankDeficientError(
            f"Margin on {rho_A.factors[0].name} is rank-deficient "
            f"(smallest eigenvalue {values[-1]:.3e} <= {tolerances.rank:g}); "
            "restrict the system to its support with restrict_support first"
        )
    d = rho_A.dim
    omega = np.zeros(d * d, dtype=complex)
    for t, v in zip(values, basis.T):
        omega += np.sqrt(t) * np.kron(v, v)
    return PurifiedMargin(rho_A=rho_A, eigenvalues=values, basis=basis, omega=omega)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Quantum channel given by Kraus operators (d_out x d_in)."""

    in_label: SystemLabel
    out_label: SystemLabel
    kraus: tuple[np.ndarray, ...]
    tol: float = 1e-9

    def __post_init__(self):
        kraus = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not kraus:
            raise ValueError("A channel needs at least one Kraus operator")
        shape = (self.out_label.dim, self.in_label.dim)
        for i, k in enumerate(kraus):
            if k.shape != shape:
                raise DimensionError(f"Kraus operator {i} has shape {k.shape}, expected {shape}")
        deviation = self.tp_deviation(kraus)
        if deviation > self.tol:
            raise ValueError(f"Channel is not trace preserving (deviation {deviation:.3e})")
        object.__setattr__(self, "kraus", kraus)

    @staticmethod
    def tp_deviation(kraus: Sequence[np.ndarray]) -> float:
        total = sum(k.conj().T @ k for k in kraus)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    @property
    def d_in(self) -> int:
        return self.in_label.dim

    @property
    def d_out(self) -> int:
        return self.out_label.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action on a d_in x d_in matrix."""
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def apply_state(self, rho: DensityOperator) -> DensityOperator:
        return DensityOperator((self.out_label,), self.apply(rho.matrix))

    def mix(self, other: "KrausChannel", alpha: float) -> "KrausChannel":
        """Convex combination α·self + (1-α)·other."""
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"Mixing weight must be in [0, 1], got {alpha}")
        if (self.d_in, self.d_out) != (other.d_in, other.d_out):
            raise DimensionError("Cannot mix channels of different shapes")
        kraus = [np.sqrt(alpha) * k for k in self.kraus]
        kraus += [np.sqrt(1 - alpha) * k for k in other.kraus]
        return KrausChannel(self.in_label, self.out_label, tuple(kraus), self.tol)

    def relabel(self, in_label: SystemLabel, out_label: SystemLabel) -> "KrausChannel":
        return KrausChannel(in_label, out_label, self.kraus, self.tol)


@dataclass(frozen=True, eq=False)
class ChoiState:
    """Choi state of a channel with respect to a canonical purification."""

    margin: PurifiedMargin
    state: DensityOperator
    margin_tol: float = DEFAULT_TOLERANCES.margin

    def __post_init__(self):
        if len(self.state.factors) != 2 or self.state.dims[0] != self.margin.dim:
            raise DimensionError(
                f"Choi state factors {list(self.state.names)} do not match margin "
                f"of dimension {self.margin.dim}"
            )
        reduced = ptrace_matrix(self.state.matrix, self.state.dims, [0])
        deviation = float(np.max(np.abs(reduced - self.margin.rho_A.matrix)))
        if deviation > self.margin_tol:
            raise InconsistentMarginError(
                f"Choi state A-margin differs from rho_A by {deviation:.3e} "
                f"(tolerance {self.margin_tol:g})"
            )

    @property
    def in_label(self) -> SystemLabel:
        return self.state.factors[0]

    @property
    def out_label(self) -> SystemLabel:
        return self.state.factors[1]


@dataclass(frozen=True, eq=False)
class KrausSpectrum:
    """ρ_A-orthogonal Kraus operators and the Choi spectrum they carry."""

    lambdas: np.ndarray
    kraus: tuple[np.ndarray, ...]

    def padded(self, length: int) -> np.ndarray:
        """Spectrum padded with zeros up to ``length`` entries."""
        out = np.zeros(max(length, len(self.lambdas)))
        out[: len(self.lambdas)] = self.lambdas
        return out


def choi_state(
    phi: KrausChannel,
    margin: PurifiedMargin,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ChoiState:
    """(id ⊗ Φ)(|Ω><Ω|)."""
    if phi.d_in != margin.dim:
        raise DimensionError(
            f"Channel input dimension {phi.d_in} does not match margin dimension {margin.dim}"
        )
    matrix = np.zeros((margin.dim * phi.d_out,) * 2, dtype=complex)
    lift = np.eye(margin.dim)
    for k in phi.kraus:
        w = np.kron(lift, k) @ margin.omega
        matrix += np.outer(w, w.conj())
    a_label = margin.label
    out_label = phi.out_label
    if out_label.name == a_label.name:
        out_label = SystemLabel(out_label.name + "'", out_label.dim)
    state = DensityOperator((a_label, out_label), matrix)
    return ChoiState(margin, state, tolerances.margin)


def apply_choi_inverse(state: ChoiState, rho: np.ndarray) -> np.ndarray:
    """Evaluate the inverse Choi formula on one input matrix."""
    margin = state.margin
    inv_sqrt = margin.inverse_sqrt()
    x = inv_sqrt @ margin.transpose(np.asarray(rho, dtype=complex)) @ inv_sqrt
    d_out = state.out_label.dim
    product = state.state.matrix @ np.kron(x, np.eye(d_out))
    return ptrace_matrix(product, state.state.dims, [1])


def orthogonal_kraus(
    state: ChoiState, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> KrausSpectrum:
    """ρ_A-orthogonal Kraus decomposition read off the Choi eigenvectors.

    Each eigenvector √λ_i v_i = (I ⊗ K_i)|Ω>; solving for K_i gives
    K_i = C^T diag(1/√t) U† with C = U† reshape(√λ_i v_i).
    """
    margin = state.margin
    d_a, d_b = state.state.dims
    evals, evecs = np.linalg.eigh(state.state.matrix)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    keep = evals > tolerances.eig_floor
    evals, evecs = evals[keep], evecs[:, keep]

    u = margin.basis
    scale = np.diag(1.0 / np.sqrt(margin.eigenvalues))
    kraus = []
    for lam, v in zip(evals, evecs.T):
        w = (np.sqrt(lam) * v).reshape(d_a, d_b)
        c = u.conj().T @ w
        kraus.append(c.T @ scale @ u.conj().T)

    rebuilt = np.zeros_like(state.state.matrix)
    lift = np.eye(d_a)
    for k in kraus:
        w = np.kron(lift, k) @ margin.omega
        rebuilt += np.outer(w, w.conj())
    deviation = float(np.max(np.abs(rebuilt - state.state.matrix)))
    if deviation > tolerances.margin:
        raise NumericalError(
            f"Kraus reconstruction deviates by {deviation:.3e}; "
            f"margin condition number is {margin.condition():.3e}"
        )
    return KrausSpectrum(lambdas=np.asarray(evals, dtype=float), kraus=tuple(kraus))


def choi_channel(
    state: ChoiState,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    spectrum: Optional[KrausSpectrum] = None,
) -> KrausChannel:
    """Channel whose Choi state (for the same margin) is ``state``."""
    spectrum = spectrum or orthogonal_kraus(state, tolerances)
    # errors in the margin are amplified by ρ_A^{-1/2} on both sides
    tol = max(tolerances.herm, tolerances.margin / float(state.margin.eigenvalues[-1]))
    return KrausChannel(state.in_label, state.out_label, spectrum.kraus, tol)
