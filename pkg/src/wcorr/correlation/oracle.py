"""Independent two-qubit references for the nested optimizer.

Both routes work with the Pauli expansion ``T[mu, nu] = Tr[(s_mu x s_nu) rho]``
and Bloch vectors, never with the ket parameterization used by the engine.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numba import njit
from scipy.optimize import minimize

from ..qcore import DimensionError, Operator

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _two_qubit(rho) -> np.ndarray:
    dims = tuple(rho.dims) if isinstance(rho, Operator) else None
    if dims != (2, 2):
        raise DimensionError(f"oracle needs a two-qubit state, got dims {dims}")
    m = rho.matrix
    return 0.5 * (m + m.conj().T)


def pauli_table(rho) -> np.ndarray:
    """Real 4x4 table ``Tr[(s_mu x s_nu) rho]``."""
    m = _two_qubit(rho)
    return np.einsum("aij,bkl,jlik->ab", PAULI, PAULI, m.reshape(2, 2, 2, 2)).real


def _bloch_grid(n: int) -> np.ndarray:
    alpha = np.linspace(0.0, np.pi, n)
    beta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    a, b = np.meshgrid(alpha, beta, indexing="ij")
    return np.stack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)], axis=-1).reshape(-1, 3)


def _projectors(bloch: np.ndarray) -> np.ndarray:
    """``(I +/- n.s)/2`` for each Bloch vector: shape (g, 2, 2, 2)."""
    ns = np.einsum("gk,kij->gij", bloch, PAULI[1:])
    eye = np.eye(2)
    return 0.5 * np.stack([eye + ns, eye - ns], axis=1)


def _coeffs(x: np.ndarray) -> np.ndarray:
    """Pauli coefficients ``Tr(s_mu X)/2`` along the last two axes."""
    return 0.5 * np.einsum("mji,...ij->...m", PAULI, x)


def _party_table(grid: np.ndarray, measured: bool) -> np.ndarray:
    """Coefficients of ``|phi><phi| P`` for every grid basis, flattened per outer point.

    Returns shape ``(outer, inner * kets * outcomes, 4)`` where ``outer`` is
    1 for an unmeasured party.
    """
    proj = _projectors(grid)
    g = grid.shape[0]
    if measured:
        # [inner g, outer g, ket s, outcome t]
        prod = np.einsum("gsij,htjk->ghstik", proj, proj)
        c = _coeffs(prod).transpose(1, 0, 2, 3, 4)
        return c.reshape(g, g * 4, 4)
    return _coeffs(proj).reshape(1, g * 2, 4)


@njit(cache=True)
def _grid_minmax(la, rb):
    """Exact grid min over outer points of the max over inner points.

    ``la[i, g, k, :]`` and ``rb[j, h, l, :]`` are Pauli coefficient vectors
    (A side already contracted with the Pauli table) for outer points
    ``i, j``, inner grid points ``g, h`` and (ket, outcome) labels ``k, l``.
    Two prunes keep the result exact: an outer point stops as soon as its
    running max reaches the best min so far, and inner A points are visited
    by decreasing upper bound and dropped once the bound falls below the
    running max.
    """
    na, ga, ka, _ = la.shape
    nb, gb, kb, _ = rb.shape
    best = np.inf
    ub = np.empty(ga)
    mr = np.empty(kb)
    mi = np.empty(kb)
    for i in range(na):
        for j in range(nb):
            for l in range(kb):
                mr[l] = 0.0
                mi[l] = 0.0
                for h in range(gb):
                    sr = 0.0
                    si = 0.0
                    for m in range(4):
                        sr += rb[j, h, l, m].real ** 2
                        si += rb[j, h, l, m].imag ** 2
                    mr[l] = max(mr[l], np.sqrt(sr))
                    mi[l] = max(mi[l], np.sqrt(si))
            for g in range(ga):
                acc = 0.0
                for k in range(ka):
                    sr = 0.0
                    si = 0.0
                    for m in range(4):
                        sr += la[i, g, k, m].real ** 2
                        si += la[i, g, k, m].imag ** 2
                    for l in range(kb):
                        acc += np.sqrt(sr) * mi[l] + np.sqrt(si) * mr[l]
                ub[g] = acc
            order = np.argsort(-ub)
            run = 0.0
            pruned = False
            for q in range(ga):
                g = order[q]
                if ub[g] <= run:
                    break
                for h in range(gb):
                    v = 0.0
                    for k in range(ka):
                        for l in range(kb):
                            z = 0.0
                            for m in range(4):
                                x = la[i, g, k, m]
                                y = rb[j, h, l, m]
                                z += x.real * y.imag + x.imag * y.real
                            v += abs(z)
                    if v > run:
                        run = v
                        if run >= best:
                            pruned = True
                            break
                if pruned:
                    break
            if not pruned and run < best:
                best = run
    return best


def brute_force_oracle(rho, measured_parties: Sequence[int], grid_n: int = 30) -> float:
    """Exact min over grid measurements of the max over grid postselections.

    Every local basis ranges over ``grid_n`` polar angles in ``[0, pi]`` and
    ``grid_n`` azimuths in ``[0, 2 pi)``.
    """
    t = pauli_table(rho)
    measured = sorted(set(int(p) for p in measured_parties))
    if not measured or any(p not in (0, 1) for p in measured):
        raise ValueError(f"measured parties must be a nonempty subset of (0, 1), got {measured_parties}")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    grid = _bloch_grid(grid_n)
    g = grid.shape[0]
    ca = _party_table(grid, 0 in measured)
    cb = _party_table(grid, 1 in measured)
    la = (ca @ t).reshape(ca.shape[0], g, -1, 4)
    rb = cb.reshape(cb.shape[0], g, -1, 4)
    return float(_grid_minmax(np.ascontiguousarray(la), np.ascontiguousarray(rb)))


def _inner_bloch(m: np.ndarray, u: np.ndarray, w: np.ndarray) -> float:
    perp = np.eye(3) - np.outer(m, m)
    return max(float(np.linalg.norm(perp @ u)), float(np.linalg.svd(w.T @ perp, compute_uv=False)[0]))


def one_sided_bloch_value(rho, measured_party: int = 0, grid_n: int = 60) -> float:
    """One-sided two-qubit value through the Bloch-vector form of the inner maximum.

    With ``u`` the Bloch vector of the measured qubit, ``W`` the correlation
    block of the Pauli table and ``m`` the measurement axis, summing the
    eight terms in closed form gives ``max(|P u|, ||W^T P||)`` for ``P`` the
    projector orthogonal to ``m``. Only the minimization over ``m`` remains;
    it is done on a sphere grid followed by simplex polishing.
    """
    t = pauli_table(rho)
    if measured_party == 1:
        t = t.T
    elif measured_party != 0:
        raise ValueError("measured_party must be 0 or 1")
    u, w = t[1:, 0], t[1:, 1:]

    def f(ang):
        a, b = ang
        return _inner_bloch(np.array([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)]), u, w)

    alpha = np.linspace(0.0, np.pi, grid_n)
    beta = np.linspace(0.0, 2 * np.pi, 2 * grid_n, endpoint=False)
    vals = np.array([[f((a, b)) for b in beta] for a in alpha])
    flat = np.argsort(vals, axis=None)[:4]
    best = float(vals.min())
    for k in flat:
        i, j = np.unravel_index(k, vals.shape)
        res = minimize(f, [alpha[i], beta[j]], method="Nelder-Mead",
                       options=dict(xatol=1e-12, fatol=1e-14, maxiter=4000))
        best = min(best, float(res.fun))
    return best
