"""Named channel families and the Bell basis."""

import logging
from typing import Optional, Sequence

import numpy as np

from app.quantum.choi import KrausChannel
from app.quantum.qobj import DensityOperator, Povm, SystemLabel, maximally_entangled, weyl

logger = logging.getLogger(__name__)

PAULIS = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_ORDER = ("0", "x", "y", "z")


def _labels(d_in: int, d_out: int, in_label: Optional[SystemLabel], out_label: Optional[SystemLabel]):
    return in_label or SystemLabel("A", d_in), out_label or SystemLabel("B", d_out)


def identity(d: int, in_label: Optional[SystemLabel] = None, out_label: Optional[SystemLabel] = None) -> KrausChannel:
    a, b = _labels(d, d, in_label, out_label)
    return KrausChannel(a, b, (np.eye(d, dtype=complex),))


def unitary_channel(
    u: np.ndarray, in_label: Optional[SystemLabel] = None, out_label: Optional[SystemLabel] = None
) -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    a, b = _labels(u.shape[1], u.shape[0], in_label, out_label)
    return KrausChannel(a, b, (u,))


def depolarizing(
    mu: float,
    d: int,
    q: int = 0,
    p: int = 0,
    in_label: Optional[SystemLabel] = None,
    out_label: Optional[SystemLabel] = None,
) -> KrausChannel:
    """ϱ ↦ (1-μ) W(q,p) ϱ W(q,p)† + μ tr[ϱ] I/d.

    The completely depolarizing part is the uniform Weyl twirl, so the
    Kraus set {W(a,b)} is Hilbert-Schmidt orthogonal.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"Depolarizing parameter must be in [0, 1], got {mu}")
    q, p = q % d, p % d
    kraus = []
    for a in range(d):
        for b in range(d):
            weight = mu / d**2 + ((1.0 - mu) if (a, b) == (q, p) else 0.0)
            if weight > 0:
                kraus.append(np.sqrt(weight) * weyl(a, b, d))
    lab_a, lab_b = _labels(d, d, in_label, out_label)
    return KrausChannel(lab_a, lab_b, tuple(kraus))


def depolarizing_choi_spectrum(mu: float, d: int) -> np.ndarray:
    """Choi spectrum of a depolarizing channel for the margin I/d (descending)."""
    spectrum = np.full(d * d, mu / d**2)
    spectrum[0] = 1.0 - mu + mu / d**2
    return spectrum


def pauli_channel(
    p: Sequence[float], in_label: Optional[SystemLabel] = None, out_label: Optional[SystemLabel] = None
) -> KrausChannel:
    """ϱ ↦ Σ_r p_r σ_r ϱ σ_r for r in (0, x, y, z)."""
    probs = np.asarray(p, dtype=float)
    if probs.shape != (4,) or np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-12:
        raise ValueError(f"Pauli channel needs a probability 4-vector, got {list(p)}")
    kraus = tuple(
        np.sqrt(max(pr, 0.0)) * PAULIS[r] for pr, r in zip(probs, PAULI_ORDER) if pr > 0
    )
    a, b = _labels(2, 2, in_label, out_label)
    return KrausChannel(a, b, kraus)


def amplitude_damping(
    gamma: float, in_label: Optional[SystemLabel] = None, out_label: Optional[SystemLabel] = None
) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"Damping parameter must be in [0, 1], got {gamma}")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    a, b = _labels(2, 2, in_label, out_label)
    return KrausChannel(a, b, (k0, k1))


def measure_prepare(
    d: int,
    states: Optional[Sequence[np.ndarray]] = None,
    in_label: Optional[SystemLabel] = None,
    out_label: Optional[SystemLabel] = None,
) -> KrausChannel:
    """Measure in the computational basis, prepare states[j] on outcome j.

    Defaults to re-preparing |j>, the completely dephasing channel.
    """
    states = states if states is not None else [np.eye(d)[:, [j]] @ np.eye(d)[[j], :] for j in range(d)]
    if len(states) != d:
        raise ValueError(f"Need {d} prepared states, got {len(states)}")
    kraus = []
    for j, sigma in enumerate(states):
        sigma = np.asarray(sigma, dtype=complex)
        evals, evecs = np.linalg.eigh(sigma)
        for lam, v in zip(evals, evecs.T):
            if lam > 1e-14:
                kraus.append(np.sqrt(lam) * np.outer(v, np.eye(d)[j]))
    d_out = np.asarray(states[0]).shape[0]
    a, b = _labels(d, d_out, in_label, out_label)
    return KrausChannel(a, b, tuple(kraus))


def measurement_channel(
    povm: Povm, in_label: Optional[SystemLabel] = None, out_label: Optional[SystemLabel] = None
) -> KrausChannel:
    """Quantum-to-classical channel ϱ ↦ Σ_a tr[M_a ϱ] |a><a|.

    Each effect M_a = Σ_i λ_i |v_i><v_i| contributes Kraus operators √λ_i |a><v_i|.
    """
    d = povm.system.dim
    outcomes = len(povm)
    kraus = []
    for a, effect in enumerate(povm.effects):
        evals, evecs = np.linalg.eigh(effect.matrix)
        for lam, v in zip(evals, evecs.T):
            if lam > 1e-14:
                kraus.append(np.sqrt(lam) * np.outer(np.eye(outcomes)[a], v.conj()))
    a_label, b_label = _labels(d, outcomes, in_label or povm.system, out_label)
    return KrausChannel(a_label, b_label, tuple(kraus))


def bell_vector(r: str) -> np.ndarray:
    """|Ω_r> = (I ⊗ σ_r)|Ω_0>."""
    return np.kron(np.eye(2), PAULIS[r]) @ maximally_entangled(2)


def bell_diagonal_state(
    p: Sequence[float], factors: Optional[Sequence[SystemLabel]] = None
) -> DensityOperator:
    """Σ_r p_r |Ω_r><Ω_r|."""
    matrix = sum(pr * np.outer(bell_vector(r), bell_vector(r).conj()) for pr, r in zip(p, PAULI_ORDER))
    factors = tuple(factors) if factors else (SystemLabel("A", 2), SystemLabel("B", 2))
    return DensityOperator(factors, matrix)


def isotropic_state(mu: float, d: int, factors: Optional[Sequence[SystemLabel]] = None) -> DensityOperator:
    """(1-μ)|Ω_0><Ω_0| + μ I/d²."""
    omega = maximally_entangled(d)
    matrix = (1 - mu) * np.outer(omega, omega.conj()) + mu * np.eye(d * d) / d**2
    factors = tuple(factors) if factors else (SystemLabel("A", d), SystemLabel("B", d))
    return DensityOperator(factors, matrix)


def named_channel(name: str, **params) -> KrausChannel:
    """Build a channel from its shorthand name."""
    builders = {
        "identity": lambda: identity(int(params["d"])),
        "depolarizing": lambda: depolarizing(
            float(params["mu"]), int(params["d"]), int(params.get("q", 0)), int(params.get("p", 0))
        ),
        "pauli": lambda: pauli_channel(params["p"]),
        "amplitude_damping": lambda: amplitude_damping(float(params["gamma"])),
        "measure_prepare": lambda: measure_prepare(int(params["d"])),
    }
    if name not in builders:
        raise ValueError(f"Unknown channel name {name!r}; choose from {sorted(builders)}")
    try:
        return builders[name]()
    except KeyError as e:
        raise ValueError(f"Channel {name!r} is missing parameter {e.args[0]!r}")
