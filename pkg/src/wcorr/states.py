"""State families, random ensembles and local Kraus channels."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bases import OrthonormalBasis, computational_basis
from .qcore import (
    DensityMatrix,
    DimensionError,
    Operator,
    PureState,
    embed,
    validate_density,
)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _probs(p, name="probabilities") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be nonnegative and sum to one")
    return np.clip(p, 0.0, None)


def ket(label: str) -> np.ndarray:
    """Single-qubit ket from a label: 0, 1, +, -, +i, -i."""
    s = 1 / np.sqrt(2)
    table = {
        "0": [1, 0],
        "1": [0, 1],
        "+": [s, s],
        "-": [s, -s],
        "+i": [s, 1j * s],
        "-i": [s, -1j * s],
    }
    try:
        return np.array(table[label], dtype=complex)
    except KeyError:
        raise ValueError(f"unknown ket label {label!r}") from None


def bell_plus() -> PureState:
    return PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))


def ghz(n: int = 3) -> PureState:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return PureState(v, (2,) * n)


def product_pure(*kets) -> PureState:
    v = np.ones(1, dtype=complex)
    for k in kets:
        v = np.kron(v, k)
    return PureState(v / np.linalg.norm(v), tuple(len(k) for k in kets))


def werner(p: float) -> DensityMatrix:
    """Two-qubit Werner state mixing the Bell projector with white noise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("Werner parameter must lie in [0, 1]")
    bell = bell_plus().projector().matrix
    rho = validate_density(Operator((1 - p) / 4 * np.eye(4) + p * bell, (2, 2)))
    rho.meta["separable"] = bool(p < 1 / 3)
    return rho


def classical_quantum(probs, basis_a: OrthonormalBasis, states_b: Sequence[DensityMatrix]) -> DensityMatrix:
    p = _probs(probs)
    if len(p) > basis_a.dim or len(p) != len(states_b):
        raise DimensionError("probabilities, basis kets and conditional states must match")
    db = {s.dim for s in states_b}
    if len(db) != 1:
        raise DimensionError("conditional states must share one dimension")
    db = db.pop()
    da = basis_a.dim
    out = np.zeros((da * db, da * db), dtype=complex)
    for pk, k, s in zip(p, basis_a.kets, states_b):
        out += pk * np.kron(np.outer(k, k.conj()), s.matrix)
    return validate_density(Operator(out, (da, db)))


def classical_classical(joint_probs, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis) -> DensityMatrix:
    p = np.asarray(joint_probs, dtype=float)
    if p.shape != (basis_a.dim, basis_b.dim):
        raise DimensionError(f"joint probabilities must have shape {(basis_a.dim, basis_b.dim)}")
    p = _probs(p, "joint probabilities")
    out = np.zeros((p.size, p.size), dtype=complex)
    for k, a in enumerate(basis_a.kets):
        for l, b in enumerate(basis_b.kets):
            v = np.kron(a, b)
            out += p[k, l] * np.outer(v, v.conj())
    return validate_density(Operator(out, (basis_a.dim, basis_b.dim)))


def random_pure(dims: Sequence[int], seed=None) -> PureState:
    rng = _rng(seed)
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v), tuple(dims))


def random_density(dims: Sequence[int], rank: int | None = None, seed=None) -> DensityMatrix:
    """Induced-measure density matrix: trace out a ``rank``-dimensional ancilla."""
    rng = _rng(seed)
    d = int(np.prod(dims))
    rank = d if rank is None else int(rank)
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return validate_density(Operator(rho / np.trace(rho).real, tuple(dims)))


def haar_unitary(d: int, seed=None) -> Operator:
    rng = _rng(seed)
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return Operator(q * ph, (d,))


def apply_local_unitaries(rho: DensityMatrix, unitaries: Sequence) -> DensityMatrix:
    u = np.ones((1, 1), dtype=complex)
    for x in unitaries:
        u = np.kron(u, x.matrix if isinstance(x, Operator) else np.asarray(x))
    if u.shape[0] != rho.dim:
        raise DimensionError("local unitaries do not match the state dimensions")
    return validate_density(Operator(u @ rho.matrix @ u.conj().T, rho.dims))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]
    acting_party: int

    def __post_init__(self):
        ops = tuple(np.array(k.matrix if isinstance(k, Operator) else k, dtype=complex) for k in self.kraus_ops)
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise DimensionError("Kraus operators must share one square shape")
        defect = np.max(np.abs(sum(k.conj().T @ k for k in ops) - np.eye(d)))
        if defect > 1e-10:
            raise ValueError(f"channel is not trace preserving (defect {defect:.2e})")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]


def _weyl(d: int, a: int, b: int) -> np.ndarray:
    shift = np.roll(np.eye(d), a, axis=0)
    clock = np.diag(np.exp(2j * np.pi * b * np.arange(d) / d))
    return shift @ clock


def depolarizing(p: float, party: int = 1, d: int = 2) -> KrausChannel:
    """``rho -> (1 - p) rho + p I/d``."""
    if not 0 <= p <= 1:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    ops = [np.sqrt(1 - p + p / d**2) * np.eye(d)]
    ops += [np.sqrt(p / d**2) * _weyl(d, a, b) for a in range(d) for b in range(d) if (a, b) != (0, 0)]
    return KrausChannel(tuple(ops), party)


def amplitude_damping(gamma: float, party: int = 1) -> KrausChannel:
    if not 0 <= gamma <= 1:
        raise ValueError("damping rate must lie in [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausChannel((k0, k1), party)


def phase_damping(lam: float, party: int = 1) -> KrausChannel:
    if not 0 <= lam <= 1:
        raise ValueError("dephasing rate must lie in [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - lam)]])
    k1 = np.array([[0, 0], [0, np.sqrt(lam)]])
    return KrausChannel((k0, k1), party)


def apply_channel(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    if not 0 <= ch.acting_party < len(rho.dims) or rho.dims[ch.acting_party] != ch.dim:
        raise DimensionError(f"channel of dimension {ch.dim} cannot act on party {ch.acting_party} of {rho.dims}")
    out = np.zeros_like(rho.matrix)
    for k in ch.kraus_ops:
        kk = embed(k, ch.acting_party, rho.dims)
        out += kk @ rho.matrix @ kk.conj().T
    if abs(np.trace(out).real - 1) > 1e-10:
        raise ValueError("channel output lost trace")
    return validate_density(Operator(out, rho.dims))


def mix(probs, states: Sequence[DensityMatrix]) -> DensityMatrix:
    p = _probs(probs)
    out = sum(pk * s.matrix for pk, s in zip(p, states))
    return validate_density(Operator(out, states[0].dims))


def qubit_states_cq(probs, basis_a: OrthonormalBasis | None = None, kets_b=("0", "+")) -> DensityMatrix:
    """CQ state with pure conditional qubit states given by ket labels."""
    basis_a = basis_a or computational_basis(2)
    states_b = [validate_density(Operator(np.outer(ket(l), ket(l).conj()), (2,))) for l in kets_b]
    return classical_quantum(probs, basis_a, states_b)
