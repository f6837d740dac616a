"""Labeled quantum objects and dense linear-algebra kernels.

Operators carry an ordered tuple of SystemLabel factors; the matrix is the
dense representation in the Kronecker order of those factors.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from app.config import DEFAULT_TOLERANCES
from app.errors import DimensionError, RankDeficientError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemLabel:
    """A named tensor factor."""

    name: str
    dim: int

    def __post_init__(self):
        if not self.name:
            raise DimensionError("System label needs a non-empty name")
        if int(self.dim) < 1:
            raise DimensionError(f"System {self.name!r} has invalid dimension {self.dim}")


def _check_unique(factors: Sequence[SystemLabel]) -> None:
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise DimensionError(f"Duplicate system labels: {names}")


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix on labeled tensor factors."""

    factors: tuple[SystemLabel, ...]
    matrix: np.ndarray
    tol: float = DEFAULT_TOLERANCES.herm

    def __post_init__(self):
        factors = tuple(self.factors)
        _check_unique(factors)
        matrix = np.asarray(self.matrix, dtype=complex)
        dim = int(np.prod([f.dim for f in factors])) if factors else 1
        if matrix.shape != (dim, dim):
            raise DimensionError(
                f"Matrix shape {matrix.shape} does not match factors of total dimension {dim}"
            )
        deviation = float(np.max(np.abs(matrix - matrix.conj().T))) if dim else 0.0
        if deviation > self.tol:
            raise ValueError(f"Operator is not Hermitian (deviation {deviation:.3e} > {self.tol:g})")
        matrix = (matrix + matrix.conj().T) / 2
        matrix.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def index(self, system: Union[SystemLabel, str]) -> int:
        """Position of a factor, by label or name."""
        name = system.name if isinstance(system, SystemLabel) else system
        try:
            return self.names.index(name)
        except ValueError:
            raise DimensionError(f"Unknown system {name!r}; factors are {list(self.names)}")

    def expectation(self, other: Union["HermitianOperator", np.ndarray]) -> float:
        """Real part of tr[self · other]."""
        m = other.matrix if isinstance(other, HermitianOperator) else np.asarray(other)
        if m.shape != self.matrix.shape:
            raise DimensionError(f"Shape mismatch {m.shape} vs {self.matrix.shape}")
        return float(np.real(np.trace(self.matrix @ m)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True, eq=False)
class DensityOperator(HermitianOperator):
    """Positive unit-trace operator on labeled tensor factors."""

    psd_tol: float = DEFAULT_TOLERANCES.psd
    trace_tol: float = DEFAULT_TOLERANCES.trace

    def __post_init__(self):
        super().__post_init__()
        trace = float(np.real(np.trace(self.matrix)))
        if abs(trace - 1.0) > self.trace_tol:
            raise ValueError(f"Density operator has trace {trace:.12g} (tolerance {self.trace_tol:g})")
        lowest = self.min_eigenvalue()
        if lowest < -self.psd_tol:
            raise ValueError(
                f"Density operator has negative eigenvalue {lowest:.3e} (tolerance {self.psd_tol:g})"
            )

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]


Operator = Union[HermitianOperator, DensityOperator]


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive-operator-valued measure on a single system."""

    effects: tuple[HermitianOperator, ...]
    tol: float = DEFAULT_TOLERANCES.psd

    def __post_init__(self):
        effects = tuple(self.effects)
        if not effects:
            raise ValueError("A POVM needs at least one effect")
        system = effects[0].factors
        if len(system) != 1 or any(e.factors != system for e in effects):
            raise DimensionError("All POVM effects must act on the same single system")
        for i, effect in enumerate(effects):
            if effect.min_eigenvalue() < -self.tol:
                raise ValueError(f"POVM effect {i} is not positive semidefinite")
        total = sum(e.matrix for e in effects)
        deviation = float(np.max(np.abs(total - np.eye(total.shape[0]))))
        if deviation > self.tol:
            raise ValueError(f"POVM effects do not sum to identity (deviation {deviation:.3e})")
        object.__setattr__(self, "effects", effects)

    @property
    def system(self) -> SystemLabel:
        return self.effects[0].factors[0]

    def __len__(self) -> int:
        return len(self.effects)


# ============================================================
# numpy kernels
# ============================================================


def ptrace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a dense matrix, keeping factor positions ``keep`` in order."""
    dims = list(dims)
    keep = sorted(set(keep))
    n = len(dims)
    tensor = np.asarray(matrix).reshape(dims + dims)
    current = n
    for axis in sorted(set(range(n)) - set(keep), reverse=True):
        tensor = np.trace(tensor, axis1=axis, axis2=axis + current)
        current -= 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept, kept)


def permutation_matrix(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Real permutation P with P · (⊗_k X_{order[k]}) · P^T = ⊗_j X_j."""
    dims = list(dims)
    order = list(order)
    if sorted(order) != list(range(len(dims))):
        raise DimensionError(f"{order} is not a permutation of {len(dims)} factors")
    total = int(np.prod(dims))
    permuted = np.arange(total).reshape([dims[o] for o in order])
    std_flat = np.transpose(permuted, np.argsort(order)).reshape(-1)
    return np.eye(total)[std_flat]


def lift_matrix(local: np.ndarray, dims: Sequence[int], positions: Sequence[int]) -> np.ndarray:
    """Embed an operator on factors ``positions`` as local ⊗ identity on the rest."""
    positions = list(positions)
    rest = [j for j in range(len(dims)) if j not in positions]
    rest_dim = int(np.prod([dims[j] for j in rest])) if rest else 1
    perm = permutation_matrix(dims, rest + positions)
    return perm @ np.kron(np.eye(rest_dim), local) @ perm.T


def is_psd(op: Union[HermitianOperator, np.ndarray], tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    """True iff the smallest eigenvalue is at least -tol."""
    m = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op, dtype=complex)
    m = (m + m.conj().T) / 2
    return bool(np.linalg.eigvalsh(m)[0] >= -tol)


# ============================================================
# Operations
# ============================================================


def tensor(ops: Sequence[Operator]) -> Operator:
    """Kronecker product in the given factor order."""
    if not ops:
        raise ValueError("tensor needs at least one operator")
    factors: list[SystemLabel] = []
    matrix = np.ones((1, 1), dtype=complex)
    for op in ops:
        factors.extend(op.factors)
        matrix = np.kron(matrix, op.matrix)
    _check_unique(factors)
    if all(isinstance(op, DensityOperator) for op in ops):
        return DensityOperator(tuple(factors), matrix)
    return HermitianOperator(tuple(factors), matrix)


def partial_trace(op: Operator, keep: Iterable[Union[SystemLabel, str]]) -> Operator:
    """Trace out every factor not in ``keep``; kept factors stay in their original order."""
    positions = sorted({op.index(k) for k in keep})
    reduced = ptrace_matrix(op.matrix, op.dims, positions)
    factors = tuple(op.factors[p] for p in positions)
    if isinstance(op, DensityOperator):
        return DensityOperator(factors, reduced)
    return HermitianOperator(factors, reduced)


def permute(op: Operator, order: Sequence[Union[SystemLabel, str]]) -> Operator:
    """Reorder the tensor factors of an operator."""
    positions = [op.index(o) for o in order]
    if sorted(positions) != list(range(len(op.factors))):
        raise DimensionError(f"Order {list(order)} must name every factor exactly once")
    perm = permutation_matrix(op.dims, positions)
    matrix = perm.T @ op.matrix @ perm
    factors = tuple(op.factors[p] for p in positions)
    if isinstance(op, DensityOperator):
        return DensityOperator(factors, matrix)
    return HermitianOperator(factors, matrix)


def spectrum_entropy(values: Iterable[float], eig_floor: float = DEFAULT_TOLERANCES.eig_floor) -> float:
    """Shannon entropy in bits of a spectrum; entries at or below the floor count as zero."""
    values = np.asarray(list(values), dtype=float)
    values = values[values > eig_floor]
    return float(-np.sum(values * np.log2(values))) if values.size else 0.0


def von_neumann_entropy(rho: DensityOperator, eig_floor: float = DEFAULT_TOLERANCES.eig_floor) -> float:
    """Entropy in bits."""
    if not isinstance(rho, DensityOperator):
        raise ValueError("von_neumann_entropy expects a DensityOperator")
    return max(spectrum_entropy(np.linalg.eigvalsh(rho.matrix), eig_floor), 0.0)


def weyl(q: int, p: int, d: int) -> np.ndarray:
    """Weyl operator W(q,p)|j> = exp(iπ(q+2j)p/d)|j+q>."""
    if d < 2:
        raise DimensionError(f"Weyl operators need d >= 2, got {d}")
    w = np.zeros((d, d), dtype=complex)
    for j in range(d):
        w[(j + q) % d, j] = np.exp(1j * np.pi * (q + 2 * j) * p / d)
    return w


def maximally_entangled(d: int) -> np.ndarray:
    """Vector Σ_j |jj>/√d."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def maximally_mixed(label: SystemLabel) -> DensityOperator:
    return DensityOperator((label,), np.eye(label.dim) / label.dim)


def pure_state(factors: Sequence[SystemLabel], vector: np.ndarray) -> DensityOperator:
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    vector = vector / np.linalg.norm(vector)
    return DensityOperator(tuple(factors), np.outer(vector, vector.conj()))


def relabel(op: Operator, factors: Sequence[SystemLabel]) -> Operator:
    """Same matrix, new labels of matching dimensions."""
    factors = tuple(factors)
    if tuple(f.dim for f in factors) != op.dims:
        raise DimensionError(f"Cannot relabel dims {op.dims} as {[f.dim for f in factors]}")
    return type(op)(factors, op.matrix)


@dataclass(frozen=True, eq=False)
class SupportRestriction:
    """A state compressed onto the support of one factor's marginal."""

    state: DensityOperator
    isometry: np.ndarray  # d_full x d_support, columns span the support
    system: SystemLabel


def restrict_support(
    rho: DensityOperator,
    system: Union[SystemLabel, str],
    rank_tol: float = DEFAULT_TOLERANCES.rank,
) -> SupportRestriction:
    """Compress one factor of ``rho`` onto the support of its marginal.

    Since ρ is supported on supp(ρ_X) ⊗ rest, the compression is exact.
    """
    position = rho.index(system)
    marginal = ptrace_matrix(rho.matrix, rho.dims, [position])
    evals, evecs = np.linalg.eigh(marginal)
    support = evecs[:, evals > rank_tol][:, ::-1]
    if support.shape[1] == 0:
        raise RankDeficientError(f"Marginal on {rho.factors[position].name} has no support")
    label = SystemLabel(rho.factors[position].name, support.shape[1])
    blocks = [np.eye(d) for d in rho.dims]
    blocks[position] = support.conj().T
    compress = blocks[0]
    for b in blocks[1:]:
        compress = np.kron(compress, b)
    matrix = compress @ rho.matrix @ compress.conj().T
    matrix = matrix / np.real(np.trace(matrix))
    factors = list(rho.factors)
    factors[position] = label
    logger.debug(f"Restricted {label.name} from dim {rho.dims[position]} to {label.dim}")
    return SupportRestriction(DensityOperator(tuple(factors), matrix), support, label)
