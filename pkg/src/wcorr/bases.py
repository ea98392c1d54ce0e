"""Local orthonormal bases and their real parameterizations.

Qubit bases use the two-angle form

    |+> = cos(a/2)|0> + sin(a/2) e^{ib}|1>
    |-> = sin(a/2)|0> - cos(a/2) e^{ib}|1>

with ``0 <= a <= pi`` and ``0 <= b < 2 pi``. Qudits (d >= 3) use ``exp(iH)``
for a Hermitian ``H`` given by d*d real coefficients: the d diagonal
entries, then the real parts and then the imaginary parts of the upper
off-diagonal entries in row-major order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .qcore import DimensionError, OrthonormalBasis, gram_defect

__all__ = [
    "OrthonormalBasis",
    "ProductBasis",
    "BasisParams",
    "qubit_basis",
    "measurement_basis_qubit",
    "basis_from_params",
    "params_from_basis",
    "n_params",
    "hermitian_from_params",
    "wrap_qubit_angles",
    "is_mutually_unbiased",
    "product_basis",
    "computational_basis",
    "fourier_basis",
]


def n_params(d: int) -> int:
    if d == 1:
        return 0
    return 2 if d == 2 else d * d


@dataclass(frozen=True, eq=False)
class BasisParams:
    values: np.ndarray
    dim: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != n_params(self.dim):
            raise DimensionError(f"dimension {self.dim} needs {n_params(self.dim)} parameters, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def tolist(self) -> list[float]:
        return [float(x) for x in self.values]


@dataclass(frozen=True, eq=False)
class ProductBasis:
    """Tensor product of local bases, joint kets indexed lexicographically."""

    locals: tuple[OrthonormalBasis, ...]

    def __post_init__(self):
        object.__setattr__(self, "locals", tuple(self.locals))
        if not self.locals:
            raise ValueError("a product basis needs at least one local basis")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.dim for b in self.locals)

    @property
    def vectors(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for b in self.locals:
            out = np.kron(out, b.vectors)
        return out

    @property
    def kets(self) -> list[np.ndarray]:
        v = self.vectors
        return [v[:, k] for k in range(v.shape[1])]


def _qubit_vectors(a: float, b: float) -> np.ndarray:
    c, s, e = np.cos(a / 2), np.sin(a / 2), np.exp(1j * b)
    return np.array([[c, s], [s * e, -c * e]], dtype=complex)


def qubit_basis(alpha: float, beta: float) -> OrthonormalBasis:
    """Two-angle qubit basis; any real angles are accepted."""
    return OrthonormalBasis(_qubit_vectors(alpha, beta))


def measurement_basis_qubit(theta: float, eta: float) -> OrthonormalBasis:
    return OrthonormalBasis(_qubit_vectors(theta, eta))


def wrap_qubit_angles(alpha: float, beta: float) -> tuple[float, float]:
    """Map any angle pair to ``[0, pi] x [0, 2 pi)`` with the same projectors.

    ``alpha -> 2 pi - alpha`` together with ``beta -> beta + pi`` only changes
    the sign of each ket, which is how values past pi fold back.
    """
    a = float(np.mod(alpha, 2 * np.pi))
    b = float(beta)
    if a > np.pi:
        a = 2 * np.pi - a
        b += np.pi
    return a, float(np.mod(b, 2 * np.pi))


def hermitian_from_params(values: np.ndarray, d: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = values[:d]
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    h[iu] = values[d : d + m] + 1j * values[d + m : d + 2 * m]
    h[(iu[1], iu[0])] = np.conj(h[iu])
    return h


def _params_from_hermitian(h: np.ndarray) -> np.ndarray:
    d = h.shape[0]
    iu = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(h)), h[iu].real, h[iu].imag])


def basis_from_params(p: BasisParams) -> OrthonormalBasis:
    d = p.dim
    if d == 1:
        return OrthonormalBasis(np.ones((1, 1)))
    if d == 2:
        return qubit_basis(p.values[0], p.values[1])
    w, v = np.linalg.eigh(hermitian_from_params(p.values, d))
    return OrthonormalBasis((v * np.exp(1j * w)) @ v.conj().T)


def params_from_basis(basis: OrthonormalBasis) -> BasisParams:
    """Parameters whose basis has the same rank-one projectors as ``basis``.

    For qubits this is exact up to ket phases. For d >= 3 the kets are
    reproduced exactly through the principal matrix logarithm.
    """
    u = basis.vectors
    d = u.shape[0]
    if d == 1:
        return BasisParams(np.zeros(0), 1)
    if d == 2:
        v0, v1 = u[:, 0]
        theta = 2.0 * np.arctan2(abs(v1), abs(v0))
        eta = np.angle(v1) - np.angle(v0) if abs(v1) > 0 and abs(v0) > 0 else 0.0
        theta, eta = wrap_qubit_angles(theta, eta)
        return BasisParams([theta, eta], 2)
    t, z = linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t))
    h = (z * phases) @ z.conj().T
    return BasisParams(_params_from_hermitian(0.5 * (h + h.conj().T)), d)


def computational_basis(d: int) -> OrthonormalBasis:
    return OrthonormalBasis(np.eye(d))


def fourier_basis(d: int) -> OrthonormalBasis:
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return OrthonormalBasis(np.exp(2j * np.pi * j * k / d) / np.sqrt(d))


def is_mutually_unbiased(a: OrthonormalBasis, b: OrthonormalBasis, tol: float = 1e-9) -> bool:
    if a.dim != b.dim:
        raise DimensionError(f"bases have dimensions {a.dim} and {b.dim}")
    overlaps = np.abs(a.vectors.conj().T @ b.vectors)
    return bool(np.all(np.abs(overlaps - 1.0 / np.sqrt(a.dim)) <= tol))


def product_basis(locals: Sequence[OrthonormalBasis]) -> ProductBasis:
    pb = ProductBasis(tuple(locals))
    if gram_defect(pb.vectors) > 1e-10:
        raise ValueError("joint kets are not orthonormal")
    return pb
