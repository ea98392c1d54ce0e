"""Dense complex linear algebra on tensor-product Hilbert spaces.

Subsystem ordering follows the tensor-construction order: index 0 is the
leftmost factor ("A"). Matrices are stored row-major as complex128 arrays
and marked read-only once wrapped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when operator shapes or subsystem indices are inconsistent."""


class InvalidStateError(ValueError):
    """A matrix failed one of the density-matrix invariants."""

    invariant = "state"

    def __init__(self, defect: float, tol: float):
        self.defect = float(defect)
        self.tol = float(tol)
        super().__init__(f"{self.invariant}: defect {self.defect:.3e} exceeds tolerance {self.tol:.1e}")


class NonHermitian(InvalidStateError):
    invariant = "hermiticity"


class TraceNotOne(InvalidStateError):
    invariant = "unit trace"


class NotPositive(InvalidStateError):
    invariant = "positivity"


def _frozen(a, dtype=complex) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix tagged with its subsystem dimensions."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = _frozen(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"invalid subsystem dimensions {dims}")
        if int(np.prod(dims)) != m.shape[0]:
            raise DimensionError(f"dims {dims} do not factor side length {m.shape[0]}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DensityMatrix(Operator):
    """An :class:`Operator` that passed :func:`validate_density`.

    Build instances through :func:`validate_density`; the defect fields record
    what the check measured on the input matrix.
    """

    hermiticity_defect: float = 0.0
    trace_defect: float = 0.0
    min_eigenvalue: float = 0.0
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        v = _frozen(np.ravel(self.amplitudes))
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != v.size:
            raise DimensionError(f"dims {dims} do not match {v.size} amplitudes")
        defect = abs(np.linalg.norm(v) - 1.0)
        if defect > 1e-12:
            raise TraceNotOne(defect, 1e-12)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> Operator:
        return Operator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def density(self) -> DensityMatrix:
        return validate_density(self.projector())


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Ordered orthonormal kets, stored as the columns of a unitary matrix."""

    vectors: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vectors)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError(f"basis matrix must be square, got {v.shape}")
        defect = gram_defect(v)
        if defect > 1e-10:
            raise ValueError(f"kets are not orthonormal (Gram defect {defect:.2e})")
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def kets(self) -> list[np.ndarray]:
        return [self.vectors[:, k] for k in range(self.dim)]

    def projectors(self) -> np.ndarray:
        """Stack of rank-one projectors ``|k><k|``, shape ``(d, d, d)``."""
        v = self.vectors
        return np.einsum("ik,jk->kij", v, v.conj())


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: OrthonormalBasis


def gram_defect(vectors: np.ndarray) -> float:
    v = np.asarray(vectors)
    return float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))


def as_matrix(m) -> np.ndarray:
    return m.matrix if isinstance(m, Operator) else np.asarray(m, dtype=complex)


def tensor(a: Operator, b: Operator) -> Operator:
    return Operator(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def tensor_all(ops: Iterable[Operator]) -> Operator:
    ops = list(ops)
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def identity(dims: Sequence[int]) -> Operator:
    return Operator(np.eye(int(np.prod(dims))), tuple(dims))


def partial_trace(m: Operator, keep: Iterable[int]) -> Operator:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original relative order.
    """
    keep = sorted(set(int(k) for k in keep))
    n = m.n_parties
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"subsystem index out of range for dims {m.dims}")
    dims = m.dims
    t = m.matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace pairs from the highest index down so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        remaining = n - count
        t = np.trace(t, axis1=i, axis2=i + remaining)
    d = int(np.prod([dims[k] for k in keep]))
    return Operator(t.reshape(d, d), tuple(dims[k] for k in keep))


def embed(local: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    """Place a single-party matrix at ``party`` with identities elsewhere."""
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, local if i == party else np.eye(d))
    return out


def commutator(a: Operator, b: Operator) -> Operator:
    if a.dims != b.dims:
        raise DimensionError(f"dimension mismatch {a.dims} vs {b.dims}")
    x, y = a.matrix, b.matrix
    return Operator(x @ y - y @ x, a.dims)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def hermitian_eig(m: Operator) -> Spectrum:
    """Eigen-decomposition of a Hermitian operator, eigenvalues descending."""
    defect = hermiticity_defect(m.matrix)
    if defect > DEFAULT_TOL:
        raise NonHermitian(defect, DEFAULT_TOL)
    h = 0.5 * (m.matrix + m.matrix.conj().T)
    w, v = np.linalg.eigh(h)
    order = np.argsort(w, kind="stable")[::-1]
    return Spectrum(_frozen(w[order], float), OrthonormalBasis(v[:, order]))


def validate_density(m, tol: float = DEFAULT_TOL, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Check hermiticity, unit trace and positivity, clamping tiny negatives.

    Eigenvalues in ``[-tol, 0)`` are set to zero and the trace renormalized.
    """
    if not isinstance(m, Operator):
        arr = np.asarray(m, dtype=complex)
        m = Operator(arr, tuple(dims) if dims is not None else (arr.shape[0],))
    mat = m.matrix
    herm = hermiticity_defect(mat)
    if herm > tol:
        raise NonHermitian(herm, tol)
    h = 0.5 * (mat + mat.conj().T)
    tr_defect = abs(np.trace(h).real - 1.0)
    if tr_defect > tol:
        raise TraceNotOne(tr_defect, tol)
    w, v = np.linalg.eigh(h)
    lam_min = float(w[0])
    if lam_min < -tol:
        raise NotPositive(-lam_min, tol)
    if lam_min < 0:
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        h = (v * w) @ v.conj().T
        h = 0.5 * (h + h.conj().T)
    return DensityMatrix(h, m.dims, hermiticity_defect=herm, trace_defect=tr_defect, min_eigenvalue=lam_min)


def density_from(m, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Coerce a PureState, Operator or array into a validated DensityMatrix."""
    if isinstance(m, DensityMatrix):
        return m
    if isinstance(m, PureState):
        return m.density()
    return validate_density(m, dims=dims)
