"""Upper bounds and witnesses for the postselection quantifiers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from ..bases import basis_from_params, computational_basis, fourier_basis, n_params
from ..qcore import (
    DensityMatrix,
    DimensionError,
    Operator,
    OrthonormalBasis,
    PureState,
    hermitian_eig,
    partial_trace,
)
from .engine import OptimizerConfig, _split, _special, _starts, c_multipartite

L1_PATTERNS = ("displayed", "full")


def tsallis2(probs) -> float:
    """Tsallis entropy of index two, ``1 - sum p^2``."""
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    return float(1.0 - np.sum(p**2))


def _as_density(rho) -> DensityMatrix:
    return rho.density() if isinstance(rho, PureState) else rho


def _marginal(rho, parties: Sequence[int]) -> np.ndarray:
    return partial_trace(Operator(rho.matrix, rho.dims), parties).matrix


def _eigvecs(m: np.ndarray) -> OrthonormalBasis:
    return hermitian_eig(Operator(0.5 * (m + m.conj().T), (m.shape[0],))).eigenvectors


def _local_bases(y: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    u = np.ones((1, 1), dtype=complex)
    for p in _split(y, dims):
        u = np.kron(u, basis_from_params(p).vectors)
    return u


def _minimize_over_bases(fun: Callable[[np.ndarray], float], dims: Sequence[int],
                         specials: list[np.ndarray], cfg: OptimizerConfig) -> float:
    """Multi-start simplex minimization over product-basis parameters."""
    nparam = sum(n_params(d) for d in dims)
    if nparam == 0:
        return float(fun(np.zeros(0)))
    seed = np.random.SeedSequence(cfg.seed).spawn(3)[2]
    starts = _starts(specials, dims, cfg.outer_restarts, seed)
    best = np.inf
    for y0 in starts:
        simplex = np.vstack([y0, y0 + cfg.step * np.eye(nparam)])
        res = minimize(fun, y0, method="Nelder-Mead",
                       options=dict(initial_simplex=simplex, xatol=cfg.tol, fatol=cfg.tol,
                                    maxiter=cfg.max_iterations * nparam))
        best = min(best, float(res.fun))
    return best


def _party_specials(rho, parties: Sequence[int]) -> list[np.ndarray]:
    per = []
    for i in parties:
        d = rho.dims[i]
        eig = _eigvecs(_marginal(rho, [i]))
        per.append([_special(d, eig), _special(d, computational_basis(d)),
                    _special(d, fourier_basis(d))])
    return [np.concatenate([p[k] for p in per]) for k in range(3)]


def _outcome_probs(rho, parties: Sequence[int], y: np.ndarray) -> np.ndarray:
    marg = _marginal(rho, parties)
    u = _local_bases(y, [rho.dims[i] for i in parties])
    return np.einsum("ik,ij,jk->k", u.conj(), marg, u).real


def local_uncertainty_bound(rho, measured_parties, cfg: OptimizerConfig | None = None) -> float:
    """Min over product measurements of ``sum_a sqrt(p_a - p_a^2)``."""
    rho = _as_density(rho)
    cfg = cfg or OptimizerConfig()
    parties = sorted({measured_parties} if isinstance(measured_parties, (int, np.integer)) else set(measured_parties))
    dims = [rho.dims[i] for i in parties]

    def fun(y):
        p = np.clip(_outcome_probs(rho, parties, y), 0.0, 1.0)
        return float(np.sum(np.sqrt(p - p**2)))

    return _minimize_over_bases(fun, dims, _party_specials(rho, parties), cfg)


def min_basis_tsallis(rho, measured_parties, cfg: OptimizerConfig | None = None) -> float:
    """Smallest Tsallis-2 entropy of the outcome distribution over product measurements.

    A single measured party reaches the spectrum value in its marginal
    eigenbasis, which is returned directly. Several measured parties are
    restricted to product bases and go through the optimizer.
    """
    rho = _as_density(rho)
    cfg = cfg or OptimizerConfig()
    parties = sorted({measured_parties} if isinstance(measured_parties, (int, np.integer)) else set(measured_parties))
    if len(parties) == 1:
        lam = np.clip(hermitian_eig(Operator(_marginal(rho, parties), (rho.dims[parties[0]],))).eigenvalues, 0, None)
        return tsallis2(lam / lam.sum())
    dims = [rho.dims[i] for i in parties]

    def fun(y):
        p = np.clip(_outcome_probs(rho, parties, y), 0.0, None)
        return float(1.0 - np.sum(p**2))

    return _minimize_over_bases(fun, dims, _party_specials(rho, parties), cfg)


def spectrum_tsallis(rho, parties) -> float:
    parties = [parties] if isinstance(parties, (int, np.integer)) else sorted(parties)
    marg = _marginal(rho, parties)
    lam = np.clip(np.linalg.eigvalsh(0.5 * (marg + marg.conj().T)), 0, None)
    return tsallis2(lam / lam.sum())


def linear_entropy_witness(psi, party: int = 0) -> float:
    """``sqrt(d) * sqrt(1 - Tr rho_A^2)`` for a pure bipartite state; ``d`` is the party's dimension."""
    if isinstance(psi, PureState):
        rho = psi.density()
    else:
        rho = psi
        purity = float(np.trace(rho.matrix @ rho.matrix).real)
        if abs(purity - 1.0) > 1e-9:
            raise ValueError(f"state is not pure (purity {purity:.12f})")
    if len(rho.dims) != 2:
        raise DimensionError("witness needs a bipartite state")
    if party not in (0, 1):
        raise DimensionError(f"party {party} out of range")
    marg = _marginal(rho, [party])
    purity_a = float(np.trace(marg @ marg).real)
    return float(np.sqrt(rho.dims[party]) * np.sqrt(max(1.0 - purity_a, 0.0)))


def l1_mask(da: int, db: int, pattern: str = "displayed") -> np.ndarray:
    """Boolean mask over ``(a, b, a', b')`` selecting the summed coherences."""
    if pattern not in L1_PATTERNS:
        raise ValueError(f"pattern must be one of {L1_PATTERNS}")
    a, b, a2, b2 = np.meshgrid(np.arange(da), np.arange(db), np.arange(da), np.arange(db), indexing="ij")
    if pattern == "displayed":
        return (a != a2) & (b != b2)
    return (a != a2) | (b != b2)


def l1_in_basis(rho, basis_a: np.ndarray, basis_b: np.ndarray, pattern: str = "displayed") -> float:
    da, db = rho.dims
    u = np.kron(basis_a, basis_b)
    r = (u.conj().T @ rho.matrix @ u).reshape(da, db, da, db)
    return float(np.abs(r)[l1_mask(da, db, pattern)].sum())


def l1_quantumness(rho, cfg: OptimizerConfig | None = None, pattern: str = "displayed") -> float:
    """Min over product bases of the summed off-diagonal magnitudes.

    ``pattern="displayed"`` sums entries with ``a != a'`` and ``b != b'``;
    ``pattern="full"`` sums every entry with ``(a, b) != (a', b')``.
    """
    rho = _as_density(rho)
    if len(rho.dims) != 2:
        raise DimensionError("l1 quantumness needs a bipartite state")
    cfg = cfg or OptimizerConfig()
    mask = l1_mask(*rho.dims, pattern)
    da, db = rho.dims

    def fun(y):
        u = _local_bases(y, rho.dims)
        r = (u.conj().T @ rho.matrix @ u).reshape(da, db, da, db)
        return float(np.abs(r)[mask].sum())

    return _minimize_over_bases(fun, rho.dims, _party_specials(rho, [0, 1]), cfg)


@dataclass(frozen=True)
class BoundsReport:
    w_value: float
    uncertainty_bound: float
    tsallis_bound: float
    l1_bound: float | None = None
    witness_pure: float | None = None
    measured: tuple[int, ...] = ()
    tol: float = 1e-6
    spectrum_bound: float | None = None
    ceiling: float | None = None
    extras: dict = field(default_factory=dict)

    def ordering_flags(self) -> dict[str, bool]:
        """Each bound checked against the quantity below it, with ``10 * tol`` slack."""
        slack = 10 * self.tol
        flags = {
            "w_le_uncertainty": self.w_value <= self.uncertainty_bound + slack,
            "uncertainty_le_tsallis": self.uncertainty_bound <= self.tsallis_bound + slack,
        }
        if self.spectrum_bound is not None:
            flags["tsallis_le_spectrum"] = self.tsallis_bound <= self.spectrum_bound + slack
        if self.ceiling is not None:
            flags["tsallis_le_ceiling"] = self.tsallis_bound <= self.ceiling + slack
        if self.l1_bound is not None:
            flags["w_le_l1"] = self.w_value <= self.l1_bound + slack
        if self.witness_pure is not None:
            flags["w_le_witness"] = self.w_value <= self.witness_pure + slack
        return flags

    def to_dict(self) -> dict:
        out = {
            "w_value": self.w_value,
            "uncertainty_bound": self.uncertainty_bound,
            "tsallis_bound": self.tsallis_bound,
            "l1_bound": self.l1_bound,
            "witness_pure": self.witness_pure,
            "measured": list(self.measured),
        }
        if self.spectrum_bound is not None:
            out["spectrum_bound"] = self.spectrum_bound
        if self.ceiling is not None:
            out["ceiling"] = self.ceiling
        out["ordering"] = self.ordering_flags()
        return out


def _is_pure(rho) -> bool:
    return abs(float(np.trace(rho.matrix @ rho.matrix).real) - 1.0) <= 1e-9


def bounds_report(rho, measured_parties=(0,), cfg: OptimizerConfig | None = None,
                  l1_pattern: str = "displayed") -> BoundsReport:
    """Quantifier value next to every applicable upper bound."""
    pure_input = isinstance(rho, PureState)
    rho = _as_density(rho)
    cfg = cfg or OptimizerConfig()
    parties = tuple(sorted({measured_parties} if isinstance(measured_parties, (int, np.integer)) else set(measured_parties)))
    d = int(np.prod([rho.dims[i] for i in parties]))
    w = c_multipartite(rho, parties, cfg).value
    unc = local_uncertainty_bound(rho, parties, cfg)
    ts = np.sqrt(d) * np.sqrt(max(min_basis_tsallis(rho, parties, cfg), 0.0))
    spec = np.sqrt(d) * np.sqrt(max(spectrum_tsallis(rho, parties), 0.0))
    two = len(parties) == 2 and len(rho.dims) == 2
    l1 = l1_quantumness(rho, cfg, l1_pattern) if two else None
    wit = None
    if len(parties) == 1 and len(rho.dims) == 2 and (pure_input or _is_pure(rho)):
        wit = linear_entropy_witness(rho, parties[0])
    return BoundsReport(
        w_value=float(w),
        uncertainty_bound=float(unc),
        tsallis_bound=float(ts),
        l1_bound=None if l1 is None else float(l1),
        witness_pure=wit,
        measured=parties,
        tol=cfg.tol,
        spectrum_bound=float(spec) if len(parties) == 1 else None,
        ceiling=float(np.sqrt(d - 1)) if len(parties) == 1 else None,
    )
