"""Complex weak values and a von Neumann pointer readout simulation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qcore import DensityMatrix, DimensionError, NonHermitian, Operator, PureState, hermiticity_defect

POSTSELECTION_FLOOR = 1e-12
POINTER_POSTSELECTION_FLOOR = 1e-9
GRID_DEFECT_LIMIT = 1e-6
CALIBRATION_COUPLINGS = (0.08, 0.04, 0.02, 0.01)


class VanishingPostselection(ValueError):
    """The postselection probability is too small for a weak value to exist."""


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class WeakValue:
    re: float
    im: float
    postselection_probability: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def _ket(phi) -> np.ndarray:
    return phi.amplitudes if isinstance(phi, PureState) else np.asarray(phi, dtype=complex).ravel()


def _mat(m) -> np.ndarray:
    return m.matrix if isinstance(m, Operator) else np.asarray(m, dtype=complex)


def _check_dims(*mats):
    sizes = {m.shape[0] for m in mats}
    if len(sizes) != 1:
        raise DimensionError(f"incompatible dimensions {sorted(sizes)}")


def weak_value(o: Operator, rho: DensityMatrix, phi: PureState) -> WeakValue:
    om, r, v = _mat(o), _mat(rho), _ket(phi)
    _check_dims(om, r, np.empty((v.size, v.size)))
    rv = r @ v
    prob = float(np.vdot(v, rv).real)
    if prob <= POSTSELECTION_FLOOR:
        raise VanishingPostselection(f"postselection probability {prob:.3e}")
    w = np.vdot(v, om @ rv) / prob
    return WeakValue(float(w.real), float(w.imag), prob)


def noncomm_summand(pi_local: Operator, rho: DensityMatrix, phi: PureState) -> float:
    """``|Im <phi| P rho |phi>|``, the weak value times its postselection probability.

    Evaluated in product form so it stays defined at zero probability.
    """
    p, r, v = _mat(pi_local), _mat(rho), _ket(phi)
    _check_dims(p, r, np.empty((v.size, v.size)))
    return float(abs(np.vdot(v, p @ (r @ v)).imag))


@dataclass(frozen=True)
class PointerConfig:
    sigma: float = 1.0
    grid_halfwidth: float = 10.0
    grid_points: int = 1024
    coupling_g: float = 0.02

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.grid_points < 256:
            raise ValueError("grid_points must be at least 256")
        if self.grid_halfwidth < 8:
            raise ValueError("grid_halfwidth must be at least 8 (in units of sigma)")


def _grid(cfg: PointerConfig):
    n = cfg.grid_points
    half = cfg.grid_halfwidth * cfg.sigma
    q = np.linspace(-half, half, n, endpoint=False)
    dq = q[1] - q[0]
    p = 2 * np.pi * np.fft.fftfreq(n, dq)
    psi0 = (2 * np.pi * cfg.sigma**2) ** -0.25 * np.exp(-(q**2) / (4 * cfg.sigma**2))
    return q, dq, p, psi0


def pointer_readout(o: Operator, rho: DensityMatrix, phi: PureState, cfg: PointerConfig | None = None,
                    g: float | None = None) -> tuple[float, float]:
    """Mean pointer position and momentum shifts after postselection on ``phi``.

    The pointer starts in a real Gaussian with position spread ``sigma`` and is
    coupled through ``exp(-i g O x p)``. Each eigenspace of ``O`` translates
    the pointer by ``g`` times its eigenvalue; translations and the momentum
    observable are applied on a periodic grid through the DFT, so the result
    is exact up to grid truncation.
    """
    cfg = cfg or PointerConfig()
    g = cfg.coupling_g if g is None else g
    om, r, v = _mat(o), _mat(rho), _ket(phi)
    _check_dims(om, r, np.empty((v.size, v.size)))
    herm = hermiticity_defect(om)
    if herm > 1e-9:
        raise NonHermitian(herm, 1e-9)
    prob = float(np.vdot(v, r @ v).real)
    if prob <= POINTER_POSTSELECTION_FLOOR:
        raise VanishingPostselection(f"postselection probability {prob:.3e}")

    evals, evecs = np.linalg.eigh(0.5 * (om + om.conj().T))
    q, dq, p, psi0 = _grid(cfg)
    n = q.size
    # pointer amplitude weights <phi|j><j|rho|k><k|phi>
    c = evecs.conj().T @ v
    m = np.conj(c)[:, None] * (evecs.conj().T @ r @ evecs) * c[None, :]
    psi0_k = np.fft.fft(psi0)
    kets_k = psi0_k[None, :] * np.exp(-1j * g * np.outer(evals, p))
    kets_q = np.fft.ifft(kets_k, axis=1)

    edge = max(1, n // 20)
    tail_q = np.sum(np.abs(kets_q[:, :edge]) ** 2 + np.abs(kets_q[:, -edge:]) ** 2, axis=1) * dq
    nyq = np.argsort(np.abs(p))[-2 * edge:]
    tail_p = np.sum(np.abs(kets_k[:, nyq]) ** 2, axis=1) / np.sum(np.abs(kets_k) ** 2, axis=1)
    defect = float(max(tail_q.max(), tail_p.max()))
    if defect > GRID_DEFECT_LIMIT:
        raise GridTooCoarse(f"pointer leaks {defect:.2e} of its weight to the grid edges")

    # <psi_k| A |psi_j> for A in {1, q, p}
    gram = (kets_q.conj() @ kets_q.T) * dq
    gq = (kets_q.conj() * q) @ kets_q.T * dq
    gp = (kets_k.conj() * p) @ kets_k.T * (dq / n)
    norm = np.sum(m * gram.T).real
    mean_q = np.sum(m * gq.T).real / norm
    mean_p = np.sum(m * gp.T).real / norm
    return float(mean_q), float(mean_p)


def extrapolate_to_zero(hs, values) -> float:
    """Polynomial (Neville) extrapolation of ``values(h)`` to ``h = 0``."""
    hs = np.asarray(hs, dtype=float)
    t = np.array(values, dtype=float)
    n = len(hs)
    for k in range(1, n):
        for i in range(n - k):
            t[i] = (hs[i] * t[i + 1] - hs[i + k] * t[i]) / (hs[i] - hs[i + k])
    return float(t[0])


def weak_limit(o, rho, phi, cfg: PointerConfig | None = None, couplings=CALIBRATION_COUPLINGS) -> tuple[float, float]:
    """Extrapolated ``(delta_q / g, delta_p / g)`` as ``g -> 0``."""
    cfg = cfg or PointerConfig()
    rq, rp = [], []
    for g in couplings:
        dq_, dp_ = pointer_readout(o, rho, phi, cfg, g=g)
        rq.append(dq_ / g)
        rp.append(dp_ / g)
    return extrapolate_to_zero(couplings, rq), extrapolate_to_zero(couplings, rp)


def _reference_triple():
    o = np.diag([1.0, 0.0]).astype(complex)
    plus = np.full(2, 1 / np.sqrt(2), dtype=complex)
    rho = np.outer(plus, plus)
    phi = np.array([1, 1j]) / np.sqrt(2)
    return o, rho, phi


@lru_cache(maxsize=16)
def pointer_constants(cfg: PointerConfig | None = None) -> tuple[float, float]:
    """Calibrate ``(c_q, c_p)`` on the reference triple with weak value (1+i)/2.

    Reference: ``O = |0><0|``, preselection ``|+>``, postselection
    ``(|0> + i|1>)/sqrt(2)``.
    """
    cfg = cfg or PointerConfig()
    o, rho, phi = _reference_triple()
    wv = weak_value(o, rho, phi)
    rq, rp = weak_limit(o, rho, phi, cfg)
    return rq / wv.re, rp / wv.im


def infer_weak_value(delta_q: float, delta_p: float, g: float, cfg: PointerConfig | None = None) -> complex:
    c_q, c_p = pointer_constants(cfg or PointerConfig())
    return complex(delta_q / (g * c_q), delta_p / (g * c_p))
