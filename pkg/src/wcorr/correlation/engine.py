"""Nested optimization: max over postselection bases, then min over measurements.

The inner maximization runs in the compiled kernel; the outer minimization
uses scipy's Nelder-Mead. Both are multi-start and use a two-stage schedule.
Every start is first run to a coarse tolerance, then the best few are
continued to ``tol``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from ..bases import (
    BasisParams,
    OrthonormalBasis,
    ProductBasis,
    basis_from_params,
    computational_basis,
    fourier_basis,
    n_params,
    params_from_basis,
    wrap_qubit_angles,
)
from ..qcore import DensityMatrix, DimensionError, Operator, hermitian_eig, partial_trace
from . import _kernels
from .objective import measured_projectors

POOL_SIZE = 16


@dataclass(frozen=True)
class OptimizerConfig:
    """Restart counts, tolerance and seed for the nested search.

    ``step`` is the initial simplex edge in radians. ``coarse_tol``,
    ``inner_polish`` and ``outer_polish`` control the two-stage schedule.
    """

    inner_restarts: int = 32
    outer_restarts: int = 16
    tol: float = 1e-6
    max_iterations: int = 2000
    seed: int = 0
    step: float = 0.8
    coarse_tol: float = 1e-3
    inner_polish: int = 4
    outer_polish: int = 3

    def __post_init__(self):
        for name in ("inner_restarts", "outer_restarts", "max_iterations", "inner_polish", "outer_polish"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.tol > 0 or not self.coarse_tol > 0 or not self.step > 0:
            raise ValueError("tol, coarse_tol and step must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be an unsigned integer")


@dataclass(frozen=True, eq=False)
class CorrelationResult:
    value: float
    measurement_params: tuple[BasisParams, ...]
    postselection_params: tuple[BasisParams, ...]
    restart_spread: float
    evaluations: int
    measured: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.value < 0 or self.restart_spread < 0:
            raise ValueError("value and restart_spread must be nonnegative")

    def measurement_bases(self) -> list[OrthonormalBasis]:
        return [basis_from_params(p) for p in self.measurement_params]

    def postselection_basis(self) -> ProductBasis:
        return ProductBasis(tuple(basis_from_params(p) for p in self.postselection_params))

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "measured": list(self.measured),
            "measurement_params": [p.tolist() for p in self.measurement_params],
            "postselection_params": [p.tolist() for p in self.postselection_params],
            "restart_spread": float(self.restart_spread),
            "evaluations": int(self.evaluations),
        }

    def __eq__(self, other):
        if not isinstance(other, CorrelationResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# ---------------------------------------------------------------- parameters


def _offsets(dims: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([n_params(d) for d in dims])[:-1]]).astype(np.int64)


def _split(x: np.ndarray, dims: Sequence[int]) -> list[BasisParams]:
    out, k = [], 0
    for d in dims:
        n = n_params(d)
        v = x[k : k + n]
        if d == 2:
            v = wrap_qubit_angles(*v)
        out.append(BasisParams(v, d))
        k += n
    return out


def _special(d: int, basis: OrthonormalBasis) -> np.ndarray:
    return params_from_basis(basis).values.copy()


def _y_basis() -> OrthonormalBasis:
    return OrthonormalBasis(np.array([[1, 1], [1j, -1j]]) / np.sqrt(2))


def _lowdisc(dims: Sequence[int], n: int, seed: np.random.SeedSequence) -> np.ndarray:
    """Scrambled Sobol points mapped onto each party's parameter ranges."""
    lo, hi = [], []
    for d in dims:
        if d == 2:
            lo += [0.0, 0.0]
            hi += [np.pi, 2 * np.pi]
        elif d > 2:
            lo += [-np.pi] * (d * d)
            hi += [np.pi] * (d * d)
    if n <= 0 or not lo:
        return np.zeros((max(n, 0), len(lo)))
    sob = qmc.Sobol(len(lo), scramble=True, seed=np.random.default_rng(seed))
    pts = sob.random_base2(int(np.ceil(np.log2(n))))[:n]
    return qmc.scale(pts, lo, hi)


def _starts(specials: list[np.ndarray], dims, n: int, seed) -> np.ndarray:
    rows = specials[:n]
    extra = _lowdisc(dims, n - len(rows), seed)
    out = np.vstack([np.asarray(rows).reshape(len(rows), -1), extra]) if rows else extra
    return np.ascontiguousarray(out, dtype=float)


# ---------------------------------------------------------------- problem


class _Problem:
    """A state with a fixed set of measured parties, ready for repeated solves."""

    def __init__(self, rho, measured: Sequence[int], cfg: OptimizerConfig):
        m = rho.matrix if isinstance(rho, Operator) else np.asarray(rho, dtype=complex)
        self.rho = 0.5 * (m + m.conj().T)
        self.dims = tuple(int(d) for d in rho.dims)
        self.measured = tuple(int(i) for i in measured)
        if not self.measured:
            raise ValueError("at least one party must be measured")
        if len(set(self.measured)) != len(self.measured):
            raise ValueError(f"repeated party in {self.measured}")
        for i in self.measured:
            if not 0 <= i < len(self.dims):
                raise DimensionError(f"party {i} out of range for dims {self.dims}")
        self.cfg = cfg
        self.kdims = np.array(self.dims, dtype=np.int64)
        self.koffs = _offsets(self.dims)
        self.mdims = tuple(self.dims[i] for i in self.measured)
        inner_seed, outer_seed = np.random.SeedSequence(cfg.seed).spawn(2)
        self.inner_starts = self._inner_starts(inner_seed)
        self.outer_seed = outer_seed
        self.evaluations = 0
        self._cache: dict[bytes, tuple[float, np.ndarray]] = {}
        self._pool: list[np.ndarray] = []

    def _inner_starts(self, seed) -> np.ndarray:
        specials = []
        for make in (computational_basis, fourier_basis, lambda d: _y_basis() if d == 2 else None):
            row = []
            for d in self.dims:
                b = make(d)
                if b is None:
                    row = None
                    break
                row.append(_special(d, b))
            if row is not None:
                specials.append(np.concatenate(row) if row else np.zeros(0))
        return _starts(specials, self.dims, self.cfg.inner_restarts, seed)

    def outer_specials(self) -> list[np.ndarray]:
        """Marginal eigenbases, a conditioned variant, computational and Fourier bases."""
        per_party = []
        rng = np.random.default_rng(12345)
        for i in self.measured:
            d = self.dims[i]
            marg = partial_trace(Operator(self.rho, self.dims), [i]).matrix
            others = [j for j in range(len(self.dims)) if j != i]
            # conditioning on a generic observable of the other parties splits
            # degenerate marginal spectra (e.g. CQ states with equal weights)
            d_rest = int(np.prod([self.dims[j] for j in others])) if others else 1
            g = rng.normal(size=(d_rest, d_rest)) + 1j * rng.normal(size=(d_rest, d_rest))
            h = np.kron(np.eye(d), (g + g.conj().T) / 2) if others else np.eye(d)
            perm = [i] + others
            rho_p = _permute(self.rho, self.dims, perm)
            cond = partial_trace(Operator(h @ rho_p, (d, d_rest)), [0]).matrix
            cond = 0.5 * (cond + cond.conj().T)
            cands = [
                _eigbasis(marg),
                _eigbasis(marg + 0.5 * cond / max(np.abs(cond).max(), 1e-300)),
                computational_basis(d),
                fourier_basis(d),
            ]
            per_party.append([_special(d, b) for b in cands])
        return [np.concatenate([p[k] for p in per_party]) for k in range(4)]

    def xs_for(self, meas_bases: Sequence[OrthonormalBasis]) -> np.ndarray:
        proj = measured_projectors(meas_bases, self.measured, self.dims)
        return np.ascontiguousarray((proj @ self.rho)[:-1])

    def inner(self, xs: np.ndarray, starts: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        cfg = self.cfg
        st = self.inner_starts if starts is None else starts
        if st.shape[1] == 0:
            val = float(_kernels.objective(np.zeros(0), xs, self.kdims, self.koffs))
            self.evaluations += 1
            return val, np.zeros(0)
        val, x, nfev = _kernels.inner_max(
            xs, self.kdims, self.koffs, st, cfg.step, cfg.tol, cfg.coarse_tol,
            cfg.inner_polish, cfg.max_iterations,
        )
        self.evaluations += int(nfev)
        return float(val), x

    def _remember(self, x: np.ndarray):
        """Keep distinct inner maximizers; they seed later inner searches.

        Near a minimax solution several postselection branches compete and
        the winning branch can have a tiny basin, so maximizers found at
        neighbouring measurements are the most reliable starts.
        """
        if x.size == 0:
            return
        for q in self._pool:
            if np.max(np.abs(q - x)) < 1e-3:
                return
        self._pool.append(x.copy())
        if len(self._pool) > POOL_SIZE:
            self._pool.pop(0)

    def _augmented_starts(self) -> np.ndarray:
        if not self._pool:
            return self.inner_starts
        return np.ascontiguousarray(np.vstack([self.inner_starts] + self._pool))

    def _inner_at(self, y: np.ndarray) -> tuple[float, np.ndarray]:
        bases = [basis_from_params(p) for p in _split(np.asarray(y, dtype=float), self.mdims)]
        val, x = self.inner(self.xs_for(bases), self._augmented_starts())
        self._remember(x)
        return val, x

    def outer_value(self, y: np.ndarray) -> float:
        key = np.asarray(y, dtype=float).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self._inner_at(y)
            self._cache[key] = hit
        return hit[0]

    def solve(self) -> CorrelationResult:
        cfg = self.cfg
        nm = sum(n_params(d) for d in self.mdims)
        if nm == 0:
            val = self.outer_value(np.zeros(0))
            return self._result(np.zeros(0), val, 0.0)
        starts = _starts(self.outer_specials(), self.mdims, cfg.outer_restarts, self.outer_seed)

        def run(simplex, xtol):
            return minimize(
                self.outer_value, simplex[0], method="Nelder-Mead",
                options=dict(initial_simplex=simplex, xatol=xtol, fatol=xtol, maxiter=cfg.max_iterations),
            )

        runs = []
        for y0 in starts:
            simplex = np.vstack([y0, y0 + cfg.step * np.eye(nm)])
            runs.append(run(simplex, max(cfg.coarse_tol, cfg.tol)))
        order = sorted(range(len(runs)), key=lambda r: runs[r].fun)
        if cfg.coarse_tol > cfg.tol:
            for r in order[: cfg.outer_polish]:
                runs[r] = run(runs[r].final_simplex[0], cfg.tol)
        # re-check the leading candidates against every maximizer seen so far,
        # so that a missed postselection branch cannot pass as a minimum
        vals = np.array([r.fun for r in runs])
        for r in order[: cfg.outer_polish]:
            y = runs[r].x
            val, x = self._inner_at(y)
            if val > self._cache[y.tobytes()][0]:
                self._cache[y.tobytes()] = (val, x)
            vals[r] = self._cache[y.tobytes()][0]
        best = int(np.argmin(vals))
        return self._result(runs[best].x, float(vals[best]), float(vals.max() - vals.min()))

    def _result(self, y, val, spread) -> CorrelationResult:
        _, post = self._cache[np.asarray(y, dtype=float).tobytes()]
        return CorrelationResult(
            value=max(float(val), 0.0),
            measurement_params=tuple(_split(np.asarray(y, dtype=float), self.mdims)),
            postselection_params=tuple(_split(post, self.dims)),
            restart_spread=spread,
            evaluations=self.evaluations,
            measured=self.measured,
        )


def _permute(m: np.ndarray, dims, perm) -> np.ndarray:
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    t = t.transpose(list(perm) + [n + p for p in perm])
    d = m.shape[0]
    return t.reshape(d, d)


def _eigbasis(m: np.ndarray) -> OrthonormalBasis:
    h = 0.5 * (m + m.conj().T)
    spec = hermitian_eig(Operator(h, (h.shape[0],)))
    return spec.eigenvectors


# ---------------------------------------------------------------- public API


def _density(rho) -> DensityMatrix:
    if hasattr(rho, "density"):
        return rho.density()
    return rho


def max_over_postselection(rho, meas: Sequence[OrthonormalBasis], measured: Sequence[int],
                           cfg: OptimizerConfig | None = None) -> tuple[float, tuple[BasisParams, ...]]:
    """Largest objective over product postselection bases for a fixed measurement."""
    rho = _density(rho)
    prob = _Problem(rho, measured, cfg or OptimizerConfig())
    if len(meas) != len(prob.measured):
        raise DimensionError("need one measurement basis per measured party")
    val, x = prob.inner(prob.xs_for(meas))
    return val, tuple(_split(x, prob.dims))


def c_multipartite(rho, measured_parties, cfg: OptimizerConfig | None = None) -> CorrelationResult:
    """Minimum over product measurements on ``measured_parties`` of the postselection maximum."""
    rho = _density(rho)
    measured = sorted(measured_parties)
    return _Problem(rho, measured, cfg or OptimizerConfig()).solve()


def c_one_sided(rho, measured_party: int = 0, cfg: OptimizerConfig | None = None) -> CorrelationResult:
    rho = _density(rho)
    if len(rho.dims) < 2:
        raise DimensionError("a one-sided value needs at least two parties")
    return c_multipartite(rho, [measured_party], cfg)


def c_two_sided(rho, measured_parties: Sequence[int] = (0, 1), cfg: OptimizerConfig | None = None) -> CorrelationResult:
    rho = _density(rho)
    if len(rho.dims) < 2:
        raise DimensionError("a two-sided value needs at least two parties")
    if len(set(measured_parties)) != 2:
        raise ValueError("exactly two distinct parties must be measured")
    return c_multipartite(rho, measured_parties, cfg)
