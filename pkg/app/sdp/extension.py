"""cvxpy building blocks for extension programs.

Factors are addressed by position in ``dims``. Lifting and reordering use
constant permutation matrices so every product has a constant side.
"""

from typing import Sequence

import cvxpy as cp
import numpy as np

from app.errors import DimensionCapError
from app.quantum.qobj import permutation_matrix


def check_dimension(dims: Sequence[int], cap: int, what: str) -> int:
    total = int(np.prod(dims))
    if total > cap:
        raise DimensionCapError(
            f"{what} needs a {total}x{total} joint variable, above the cap of {cap}"
        )
    return total


def psd(expr) -> cp.Constraint:
    """Positive semidefinite constraint on the Hermitian part of ``expr``."""
    return (expr + expr.H) / 2 >> 0


def margin(expr, dims: Sequence[int], keep: Sequence[int]):
    """Partial trace of a cvxpy expression keeping positions ``keep`` in order."""
    dims = list(dims)
    for axis in sorted(set(range(len(dims))) - set(keep), reverse=True):
        expr = cp.partial_trace(expr, dims, axis=axis)
        dims.pop(axis)
    return expr


def lift(local, dims: Sequence[int], positions: Sequence[int]):
    """local ⊗ identity, with ``local`` acting on factors ``positions``."""
    positions = list(positions)
    rest = [j for j in range(len(dims)) if j not in positions]
    rest_dim = int(np.prod([dims[j] for j in rest])) if rest else 1
    perm = permutation_matrix(dims, rest + positions)
    return perm @ cp.kron(np.eye(rest_dim), local) @ perm.T


def copy_symmetry(expr, dims: Sequence[int], copies: Sequence[int]) -> list[cp.Constraint]:
    """Invariance under every permutation of the factor positions ``copies``.

    Adjacent transpositions generate the symmetric group.
    """
    copies = list(copies)
    constraints = []
    for a, b in zip(copies, copies[1:]):
        order = list(range(len(dims)))
        order[a], order[b] = order[b], order[a]
        swap = permutation_matrix(dims, order)
        constraints.append(expr == swap @ expr @ swap.T)
    return constraints


def value(expr) -> np.ndarray:
    """Numeric value of a solved expression as a Hermitian complex matrix."""
    m = np.asarray(expr.value, dtype=complex)
    return (m + m.conj().T) / 2
