"""Seeded random instances for tests and spot checks."""

import itertools
from typing import Optional, Sequence

import numpy as np
from scipy.stats import unitary_group

from app.quantum.choi import KrausChannel
from app.quantum.qobj import DensityOperator, SystemLabel, permutation_matrix, ptrace_matrix


def default_rng(seed: Optional[int] = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def _pair(d_a: int, d_b: int, factors: Optional[Sequence[SystemLabel]]) -> tuple[SystemLabel, ...]:
    return tuple(factors) if factors else (SystemLabel("A", d_a), SystemLabel("B", d_b))


def random_density_matrix(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank."""
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


def random_density(
    factors: Sequence[SystemLabel], rng: np.random.Generator, rank: Optional[int] = None
) -> DensityOperator:
    d = int(np.prod([f.dim for f in factors]))
    return DensityOperator(tuple(factors), random_density_matrix(d, rng, rank))


def random_full_rank_density(
    label: SystemLabel, rng: np.random.Generator, floor: float = 0.05
) -> DensityOperator:
    """Full-rank state mixed with a little white noise."""
    rho = random_density_matrix(label.dim, rng)
    rho = (1 - floor) * rho + floor * np.eye(label.dim) / label.dim
    return DensityOperator((label,), rho)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1), dtype=complex)


def random_channel(
    d_in: int,
    d_out: int,
    rng: np.random.Generator,
    n_kraus: int = 2,
    in_label: Optional[SystemLabel] = None,
    out_label: Optional[SystemLabel] = None,
) -> KrausChannel:
    """Channel from a Haar-random Stinespring isometry."""
    isometry = random_unitary(d_out * n_kraus, rng)[:, :d_in]
    kraus = tuple(isometry[i * d_out : (i + 1) * d_out, :] for i in range(n_kraus))
    return KrausChannel(in_label or SystemLabel("A", d_in), out_label or SystemLabel("B", d_out), kraus)


def random_probability(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def symmetrize_copies(matrix: np.ndarray, d_a: int, d_b: int, n: int) -> np.ndarray:
    """Average over all permutations of the n copies of B in A⊗B^n."""
    dims = [d_a] + [d_b] * n
    total = np.zeros_like(matrix)
    perms = list(itertools.permutations(range(1, n + 1)))
    for perm in perms:
        p = permutation_matrix(dims, [0] + list(perm))
        total += p @ matrix @ p.T
    return total / len(perms)


def random_extendible_state(
    d_a: int,
    d_b: int,
    n: int,
    rng: np.random.Generator,
    factors: Optional[Sequence[SystemLabel]] = None,
    rank: Optional[int] = None,
) -> DensityOperator:
    """AB_1 margin of a random B-permutation-symmetric state on A⊗B^n."""
    joint = random_density_matrix(d_a * d_b**n, rng, rank)
    joint = symmetrize_copies(joint, d_a, d_b, n)
    margin = ptrace_matrix(joint, [d_a] + [d_b] * n, [0, 1])
    return DensityOperator(_pair(d_a, d_b, factors), margin)


def random_separable_state(
    d_a: int,
    d_b: int,
    rng: np.random.Generator,
    terms: int = 4,
    factors: Optional[Sequence[SystemLabel]] = None,
) -> DensityOperator:
    """Random convex mixture of product pure states."""
    weights = random_probability(terms, rng)
    matrix = np.zeros((d_a * d_b,) * 2, dtype=complex)
    for w in weights:
        a = random_density_matrix(d_a, rng, rank=1)
        b = random_density_matrix(d_b, rng, rank=1)
        matrix += w * np.kron(a, b)
    return DensityOperator(_pair(d_a, d_b, factors), matrix)
