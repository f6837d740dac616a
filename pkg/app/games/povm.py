"""Informationally complete local measurements."""

import numpy as np

from app.errors import NumericalError
from app.quantum.qobj import HermitianOperator, Povm, SystemLabel, weyl


def fiducial(d: int) -> np.ndarray:
    """Fixed fiducial vector ψ_j ∝ (j+1)·exp(0.7i(j+1)²)."""
    j = np.arange(1, d + 1)
    psi = j * np.exp(0.7j * j**2)
    return psi / np.linalg.norm(psi)


def ic_povm(label: SystemLabel) -> Povm:
    """Weyl-covariant POVM E_qp = W(q,p)|ψ><ψ|W(q,p)† / d with d² rank-one effects.

    Raises:
        NumericalError: if the effects do not span the operator space
    """
    d = label.dim
    if d == 1:
        return Povm((HermitianOperator((label,), np.ones((1, 1))),))
    psi = fiducial(d)
    effects = []
    for q in range(d):
        for p in range(d):
            v = weyl(q, p, d) @ psi
            effects.append(np.outer(v, v.conj()) / d)
    span = np.linalg.matrix_rank(np.array([e.reshape(-1) for e in effects]), tol=1e-10)
    if span != d * d:
        raise NumericalError(f"Weyl orbit of the fiducial spans only {span} of {d * d} dimensions")
    return Povm(tuple(HermitianOperator((label,), e) for e in effects))
