"""Closed-form compatibility criteria.

Covers depolarizing pairs, Pauli channels / Bell-diagonal marginals and the
two-qubit symmetric extendibility criterion with its channel counterpart.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import cvxpy as cp
import numpy as np

from app.config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, Tolerances
from app.errors import DimensionError
from app.quantum.channels import bell_diagonal_state
from app.quantum.choi import KrausChannel, canonical_purification, choi_state, orthogonal_kraus
from app.quantum.qobj import DensityOperator, SystemLabel, maximally_mixed, ptrace_matrix
from app.sdp.marginal import MarginalScenario
from app.sdp.solver import solve

logger = logging.getLogger(__name__)

# verdicts closer than this to the boundary are flagged
BOUNDARY_BAND = 1e-7
# determinants below this in magnitude are treated as zero
DET_CLAMP = 1e-14
CLOSED_FORM_TOL = 1e-12


@dataclass(frozen=True)
class PauliProbVector:
    """Weights (p0, px, py, pz) of a Pauli channel or Bell-diagonal state."""

    p0: float
    px: float
    py: float
    pz: float

    def __post_init__(self):
        values = self.as_array()
        if np.any(values < -1e-12) or abs(values.sum() - 1.0) > 1e-12:
            raise ValueError(f"Not a probability vector: {values.tolist()}")

    @classmethod
    def of(cls, values: Sequence[float]) -> "PauliProbVector":
        if len(values) != 4:
            raise ValueError(f"Pauli probability vector needs 4 entries, got {len(values)}")
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.px, self.py, self.pz], dtype=float)

    def brackets(self) -> tuple[float, float, float]:
        """(<q>_1, <q>_2, <q>_3) entering the last row of M."""
        q0, qx, qy, qz = self.as_array()
        return (
            0.5 * (q0 - qx - qy + qz),
            0.5 * (q0 - qx + qy - qz),
            0.5 * (q0 + qx - qy - qz),
        )


@dataclass(frozen=True)
class PauliCompatCertificate:
    """Parameters (λ, μ, ν) with M_{p,q}(λ, μ, ν) ⪰ 0."""

    lambda_: float
    mu: float
    nu: float
    min_eig: float


@dataclass
class PauliVerdict:
    """Outcome of the Pauli-channel / Bell-diagonal criterion."""

    compatible: bool
    boundary: bool
    margin: float  # largest achievable min-eigenvalue of M
    certificate: Optional[PauliCompatCertificate] = None
    scenario: Optional[MarginalScenario] = None


def depol_margin(mu: float, nu: float, d: int) -> float:
    """μ + (2/d)√(μν) + ν - 1; nonnegative exactly on the compatible region."""
    if not (0.0 <= mu <= 1.0 and 0.0 <= nu <= 1.0):
        raise ValueError(f"Depolarizing parameters must lie in [0, 1], got ({mu}, {nu})")
    if d < 2:
        raise DimensionError(f"Dimension must be at least 2, got {d}")
    return mu + 2.0 / d * np.sqrt(mu * nu) + nu - 1.0


def depol_compatible(mu: float, nu: float, d: int) -> bool:
    """Compatibility of two (Weyl-conjugated) depolarizing channels."""
    return bool(depol_margin(mu, nu, d) >= -CLOSED_FORM_TOL)


def m_matrix(p: PauliProbVector, q: PauliProbVector, lam: float, mu: float, nu: float) -> np.ndarray:
    """The real symmetric 4x4 matrix M_{p,q}(λ, μ, ν)."""
    q1, q2, q3 = q.brackets()
    p0, px, py, pz = p.as_array()
    return np.array(
        [
            [p0, lam, mu, q1 - nu],
            [lam, px, nu, q2 - mu],
            [mu, nu, py, q3 - lam],
            [q1 - nu, q2 - mu, q3 - lam, pz],
        ]
    )


def pauli_compatible(
    p: PauliProbVector, q: PauliProbVector, config: SolverConfig = DEFAULT_SOLVER
) -> PauliVerdict:
    """Decide whether M_{p,q}(λ, μ, ν) ⪰ 0 for some λ, μ, ν in [-1, 1].

    Maximises s subject to M - sI ⪰ 0; the sign of the optimum decides.
    """
    lam, mu, nu, s = cp.Variable(), cp.Variable(), cp.Variable(), cp.Variable()
    q1, q2, q3 = q.brackets()
    p0, px, py, pz = p.as_array()
    m = cp.bmat(
        [
            [p0 - s, lam, mu, q1 - nu],
            [lam, px - s, nu, q2 - mu],
            [mu, nu, py - s, q3 - lam],
            [q1 - nu, q2 - mu, q3 - lam, pz - s],
        ]
    )
    constraints = [(m + m.T) / 2 >> 0]
    constraints += [cp.abs(v) <= 1 for v in (lam, mu, nu)]
    outcome = solve(cp.Problem(cp.Maximize(s), constraints), "pauli_compatible", config)

    best = outcome.value
    boundary = abs(best) <= BOUNDARY_BAND
    compatible = best >= -BOUNDARY_BAND
    params = [float(np.clip(v.value, -1.0, 1.0)) for v in (lam, mu, nu)]
    min_eig = float(np.linalg.eigvalsh(m_matrix(p, q, *params))[0])
    certificate = PauliCompatCertificate(*params, min_eig) if compatible else None
    logger.info(f"Pauli criterion: max min-eigenvalue {best:.3e}, compatible={compatible}")
    return PauliVerdict(compatible=compatible, boundary=boundary, margin=best, certificate=certificate)


def bell_diagonal_marginal(
    p: PauliProbVector, q: PauliProbVector, config: SolverConfig = DEFAULT_SOLVER
) -> PauliVerdict:
    """Joint three-qubit state for Bell-diagonal marginals ϱ_p on AB_1 and ϱ_q on AB_2.

    Same decision as the Pauli-channel criterion; the verdict also carries the
    explicit marginal scenario for cross-checks.
    """
    verdict = pauli_compatible(p, q, config)
    a, b1, b2 = SystemLabel("A", 2), SystemLabel("B1", 2), SystemLabel("B2", 2)
    verdict.scenario = MarginalScenario(
        a,
        (b1, b2),
        (bell_diagonal_state(p.as_array(), (a, b1)), bell_diagonal_state(q.as_array(), (a, b2))),
    )
    return verdict


def _sym_ext_sides(rho: DensityOperator) -> tuple[float, float]:
    if rho.dims != (2, 2):
        raise DimensionError(f"Closed-form extendibility needs a two-qubit state, got dims {rho.dims}")
    reduced = ptrace_matrix(rho.matrix, rho.dims, [1])
    lhs = float(np.real(np.trace(reduced @ reduced)))
    det = float(np.real(np.linalg.det(rho.matrix)))
    det = 0.0 if abs(det) <= DET_CLAMP else max(det, 0.0)
    rhs = float(np.real(np.trace(rho.matrix @ rho.matrix))) - 4.0 * np.sqrt(det)
    return lhs, rhs


def qubit_sym_ext_margin(rho: DensityOperator) -> float:
    """tr[(tr_A ρ)²] - tr[ρ²] + 4√det ρ."""
    lhs, rhs = _sym_ext_sides(rho)
    return lhs - rhs


def qubit_sym_ext(rho: DensityOperator) -> bool:
    """Two-qubit symmetric extendibility (n = 2) in closed form."""
    return qubit_sym_ext_margin(rho) >= -CLOSED_FORM_TOL


def qubit_self_compatible_margin(
    phi: KrausChannel,
    rho_A: Optional[DensityOperator] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """tr[Φ(ρ_A)²] - Σλ_i² + 4 Π √λ_i over the Choi spectrum padded to four entries."""
    if (phi.d_in, phi.d_out) != (2, 2):
        raise DimensionError(f"Closed-form self-compatibility needs a qubit channel, got {phi.d_in}->{phi.d_out}")
    rho_A = rho_A or maximally_mixed(SystemLabel("A", 2))
    margin = canonical_purification(rho_A, tolerances)
    spectrum = orthogonal_kraus(choi_state(phi, margin, tolerances), tolerances)
    lambdas = np.clip(spectrum.padded(4), 0.0, None)
    output = phi.apply(rho_A.matrix)
    lhs = float(np.real(np.trace(output @ output)))
    rhs = float(np.sum(lambdas**2)) - 4.0 * float(np.prod(np.sqrt(lambdas)))
    return lhs - rhs


def qubit_self_compatible(
    phi: KrausChannel,
    rho_A: Optional[DensityOperator] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """Whether a qubit channel can be broadcast into two copies of itself."""
    return qubit_self_compatible_margin(phi, rho_A, tolerances) >= -CLOSED_FORM_TOL


def qubit_self_compatible_hs(phi: KrausChannel, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Self-compatibility from Hilbert-Schmidt norms of orthogonal Kraus operators.

    tr[Φ(I)²] >= Σ‖K_i‖⁴ - 4 Π‖K_i‖ over four operators, absent ones
    counting as zero norm.
    """
    margin = canonical_purification(maximally_mixed(SystemLabel("A", 2)), tolerances)
    spectrum = orthogonal_kraus(choi_state(phi, margin, tolerances), tolerances)
    norms = np.zeros(4)
    hs = [np.sqrt(np.real(np.trace(k.conj().T @ k))) for k in spectrum.kraus]
    norms[: min(len(hs), 4)] = hs[:4]
    output = phi.apply(np.eye(2))
    lhs = float(np.real(np.trace(output @ output)))
    rhs = float(np.sum(norms**4)) - 4.0 * float(np.prod(norms))
    return lhs - rhs >= -4 * CLOSED_FORM_TOL
