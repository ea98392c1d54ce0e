"""Compiled inner loop: postselection objective and multi-start simplex search.

Parameter vectors are laid out party by party (2 angles per qubit, d*d
generator coefficients per qudit). ``xs`` holds ``m`` matrices ``P_a rho``
for all measurement outcomes but the last; the last outcome contributes
``-sum`` of the others because the imaginary parts over a complete
measurement sum to ``Im <phi|rho|phi> = 0``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Standard Nelder-Mead coefficients (reflection, expansion, contraction, shrink).
_RHO, _CHI, _PSI, _SIGMA = 1.0, 2.0, 0.5, 0.5


@njit(cache=True)
def _local_unitary(x, off, d, u):
    """Write the local basis (columns are kets) encoded at ``x[off:]`` into ``u``."""
    if d == 1:
        u[0, 0] = 1.0
    elif d == 2:
        c = np.cos(0.5 * x[off])
        s = np.sin(0.5 * x[off])
        e = np.exp(1j * x[off + 1])
        u[0, 0] = c
        u[0, 1] = s
        u[1, 0] = s * e
        u[1, 1] = -c * e
    else:
        h = np.zeros((d, d), dtype=np.complex128)
        k = off
        for i in range(d):
            h[i, i] = x[k]
            k += 1
        for i in range(d):
            for j in range(i + 1, d):
                h[i, j] = x[k]
                k += 1
        for i in range(d):
            for j in range(i + 1, d):
                h[i, j] += 1j * x[k]
                h[j, i] = np.conj(h[i, j])
                k += 1
        _expi(h, u)


@njit(cache=True)
def _matmul(a, b, out, d):
    for i in range(d):
        for j in range(d):
            acc = 0j
            for k in range(d):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc


@njit(cache=True)
def _expi(h, out):
    """``exp(i h)`` by scaling and squaring a degree-16 Taylor polynomial."""
    d = h.shape[0]
    norm = 0.0
    for j in range(d):
        col = 0.0
        for i in range(d):
            col += abs(h[i, j])
        norm = max(norm, col)
    sq = 0
    while norm > 0.5:
        norm *= 0.5
        sq += 1
    scale = 1j / (2.0**sq)
    a = np.empty((d, d), dtype=np.complex128)
    term = np.zeros((d, d), dtype=np.complex128)
    nxt = np.empty((d, d), dtype=np.complex128)
    acc = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        term[i, i] = 1.0
        acc[i, i] = 1.0
        for j in range(d):
            a[i, j] = h[i, j] * scale
    for k in range(1, 17):
        _matmul(term, a, nxt, d)
        for i in range(d):
            for j in range(d):
                term[i, j] = nxt[i, j] / k
                acc[i, j] += term[i, j]
    for _ in range(sq):
        _matmul(acc, acc, nxt, d)
        acc[:, :] = nxt
    out[:d, :d] = acc


@njit(cache=True)
def _workspace(dims):
    dmax = 1
    n = 1
    for d in dims:
        dmax = max(dmax, d)
        n *= d
    us = np.zeros((dims.size, dmax, dmax), dtype=np.complex128)
    phi = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    return us, phi, tmp


@njit(cache=True)
def _fill_basis(x, dims, offs, us, phi, tmp):
    """Joint product basis in lexicographic order: ``phi[:, k]`` is ket ``k``."""
    np_ = dims.size
    for p in range(np_):
        _local_unitary(x, offs[p], dims[p], us[p])
    phi[0, 0] = 1.0
    size = 1
    for p in range(np_):
        d = dims[p]
        for r in range(size):
            for c in range(size):
                tmp[r, c] = phi[r, c]
        for r in range(size):
            for c in range(size):
                v = tmp[r, c]
                for i in range(d):
                    for j in range(d):
                        phi[r * d + i, c * d + j] = v * us[p, i, j]
        size *= d


@njit(cache=True)
def joint_basis(x, dims, offs):
    """Kronecker product of the local bases encoded in ``x``."""
    us, phi, tmp = _workspace(dims)
    _fill_basis(x, dims, offs, us, phi, tmp)
    return phi


@njit(cache=True)
def _objective_ws(x, xs, dims, offs, us, phi, tmp):
    _fill_basis(x, dims, offs, us, phi, tmp)
    n = phi.shape[0]
    m = xs.shape[0]
    total = 0.0
    for k in range(n):
        rest = 0.0
        for a in range(m):
            acc = 0j
            for i in range(n):
                t = 0j
                for j in range(n):
                    t += xs[a, i, j] * phi[j, k]
                acc += np.conj(phi[i, k]) * t
            y = acc.imag
            total += abs(y)
            rest += y
        total += abs(rest)
    return total


@njit(cache=True)
def objective(x, xs, dims, offs):
    """Sum over outcomes and joint postselection kets of ``|Im <phi|P_a rho|phi>|``."""
    us, phi, tmp = _workspace(dims)
    return _objective_ws(x, xs, dims, offs, us, phi, tmp)


@njit(cache=True)
def _sort(sim, fsim):
    order = np.argsort(fsim, kind="mergesort")
    return sim[order].copy(), fsim[order].copy()


@njit(cache=True)
def _insert_last(sim, fsim):
    """Move the last vertex to its sorted position (stable)."""
    n = fsim.size - 1
    f = fsim[n]
    i = n
    while i > 0 and fsim[i - 1] > f:
        i -= 1
    if i == n:
        return
    row = sim[n].copy()
    for k in range(n, i, -1):
        sim[k] = sim[k - 1]
        fsim[k] = fsim[k - 1]
    sim[i] = row
    fsim[i] = f


@njit(cache=True)
def _run_simplex(sim, fsim, tol, maxiter, xs, dims, offs, us, phi, tmp):
    """Minimize ``-objective`` in place from the given simplex.

    Returns ``(iterations, evaluations)``. Stops once both the simplex
    diameter (max-norm about the best vertex) and the spread of function
    values fall below ``tol``.
    """
    npar = sim.shape[1]
    nfev = 0
    it = 0
    s, f = _sort(sim, fsim)
    sim[:] = s
    fsim[:] = f
    xbar = np.empty(npar)
    xr = np.empty(npar)
    xe = np.empty(npar)
    while it < maxiter:
        size = 0.0
        spread = 0.0
        for i in range(1, npar + 1):
            spread = max(spread, abs(fsim[i] - fsim[0]))
            for j in range(npar):
                size = max(size, abs(sim[i, j] - sim[0, j]))
        if size <= tol and spread <= tol:
            break
        it += 1
        for j in range(npar):
            acc = 0.0
            for i in range(npar):
                acc += sim[i, j]
            xbar[j] = acc / npar
        for j in range(npar):
            xr[j] = (1 + _RHO) * xbar[j] - _RHO * sim[npar, j]
        fr = -_objective_ws(xr, xs, dims, offs, us, phi, tmp)
        nfev += 1
        shrink = False
        if fr < fsim[0]:
            for j in range(npar):
                xe[j] = (1 + _RHO * _CHI) * xbar[j] - _RHO * _CHI * sim[npar, j]
            fe = -_objective_ws(xe, xs, dims, offs, us, phi, tmp)
            nfev += 1
            if fe < fr:
                sim[npar] = xe
                fsim[npar] = fe
            else:
                sim[npar] = xr
                fsim[npar] = fr
        elif fr < fsim[npar - 1]:
            sim[npar] = xr
            fsim[npar] = fr
        elif fr < fsim[npar]:
            for j in range(npar):
                xe[j] = (1 + _PSI * _RHO) * xbar[j] - _PSI * _RHO * sim[npar, j]
            fc = -_objective_ws(xe, xs, dims, offs, us, phi, tmp)
            nfev += 1
            if fc <= fr:
                sim[npar] = xe
                fsim[npar] = fc
            else:
                shrink = True
        else:
            for j in range(npar):
                xe[j] = (1 - _PSI) * xbar[j] + _PSI * sim[npar, j]
            fcc = -_objective_ws(xe, xs, dims, offs, us, phi, tmp)
            nfev += 1
            if fcc < fsim[npar]:
                sim[npar] = xe
                fsim[npar] = fcc
            else:
                shrink = True
        if shrink:
            for i in range(1, npar + 1):
                sim[i] = sim[0] + _SIGMA * (sim[i] - sim[0])
                fsim[i] = -_objective_ws(sim[i], xs, dims, offs, us, phi, tmp)
                nfev += 1
            s, f = _sort(sim, fsim)
            sim[:] = s
            fsim[:] = f
        else:
            _insert_last(sim, fsim)
    return it, nfev


@njit(cache=True)
def inner_max(xs, dims, offs, starts, step, tol, coarse_tol, n_polish, maxiter):
    """Multi-start maximization of :func:`objective` for one measurement.

    Every start is first run down to ``coarse_tol``; the ``n_polish`` best
    simplices are then continued down to ``tol``.
    Returns ``(best value, best parameters, evaluations)``.
    """
    nstart, npar = starts.shape
    us, phi, tmp = _workspace(dims)
    sims = np.empty((nstart, npar + 1, npar))
    fs = np.empty((nstart, npar + 1))
    used = np.zeros(nstart, dtype=np.int64)
    nfev = 0
    for r in range(nstart):
        for i in range(npar + 1):
            sims[r, i] = starts[r]
            if i > 0:
                sims[r, i, i - 1] += step
            fs[r, i] = -_objective_ws(sims[r, i], xs, dims, offs, us, phi, tmp)
            nfev += 1
        it, ne = _run_simplex(sims[r], fs[r], max(coarse_tol, tol), maxiter, xs, dims, offs, us, phi, tmp)
        used[r] = it
        nfev += ne
    if coarse_tol > tol:
        order = np.argsort(fs[:, 0], kind="mergesort")
        for q in range(min(n_polish, nstart)):
            r = order[q]
            it, ne = _run_simplex(sims[r], fs[r], tol, max(maxiter - used[r], 0), xs, dims, offs, us, phi, tmp)
            nfev += ne
    best = 0
    for r in range(1, nstart):
        if fs[r, 0] < fs[best, 0]:
            best = r
    return -fs[best, 0], sims[best, 0].copy(), nfev


@njit(cache=True)
def grid_profile(xs, dims, offs, points):
    """Objective at each row of ``points`` (used by tests and diagnostics)."""
    out = np.empty(points.shape[0])
    us, phi, tmp = _workspace(dims)
    for i in range(points.shape[0]):
        out[i] = _objective_ws(points[i], xs, dims, offs, us, phi, tmp)
    return out
