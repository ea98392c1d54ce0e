"""Postselection objective, evaluated directly from kets and projectors."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..bases import OrthonormalBasis, ProductBasis
from ..qcore import DensityMatrix, DimensionError


def measured_projectors(meas: Sequence[OrthonormalBasis], measured: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Joint measurement projectors on the full space, identity on unmeasured parties.

    Outcomes are ordered lexicographically over the measured parties.
    Returns an array of shape ``(n_outcomes, D, D)``.
    """
    measured = list(measured)
    if len(meas) != len(measured):
        raise DimensionError("need one measurement basis per measured party")
    local = {}
    for party, basis in zip(measured, meas):
        if basis.dim != dims[party]:
            raise DimensionError(f"basis of dimension {basis.dim} for party {party} of dimension {dims[party]}")
        local[party] = basis.projectors()
    outcomes = np.ones((1, 1, 1), dtype=complex)
    for i, d in enumerate(dims):
        factor = local.get(i, np.eye(d)[None])
        outcomes = np.einsum("aij,bkl->abikjl", outcomes, factor)
        na, nb = outcomes.shape[0], outcomes.shape[1]
        side = outcomes.shape[2] * outcomes.shape[3]
        outcomes = outcomes.reshape(na * nb, side, side)
    return outcomes


def _check(rho: DensityMatrix, post: ProductBasis):
    if post.dims != tuple(rho.dims):
        raise DimensionError(f"postselection dims {post.dims} do not match state dims {rho.dims}")


def summand_table(rho: DensityMatrix, meas, post: ProductBasis, measured) -> np.ndarray:
    """Signed ``Im <phi|P_a rho|phi>`` indexed by (outcome, joint postselection ket)."""
    _check(rho, post)
    proj = measured_projectors(meas, measured, rho.dims)
    phi = post.vectors
    vals = np.einsum("ik,aij,jk->ak", phi.conj(), proj @ rho.matrix, phi)
    return vals.imag


def objective_inner(rho: DensityMatrix, meas: Sequence[OrthonormalBasis], post: ProductBasis,
                    measured: Sequence[int]) -> float:
    return float(np.abs(summand_table(rho, meas, post, measured)).sum())


def estimation_error_profile(rho: DensityMatrix, meas: OrthonormalBasis, post: ProductBasis,
                             measured_party: int = 0) -> np.ndarray:
    """Mean absolute estimation error for each outcome of ``meas``.

    Entry ``k`` sums ``|Im <phi|(P_k x I) rho|phi>|`` over the postselection
    kets; the entries add up to :func:`objective_inner`.
    """
    return np.abs(summand_table(rho, [meas], post, [measured_party])).sum(axis=1)


def closed_form_two_qubit_objective(theta_a, eta_a, alpha_a, beta_a, alpha_b, beta_b):
    """Objective for the Bell state ``(|00> + |11>)/sqrt(2)`` with qubit angles.

    Each of the eight (outcome, postselection) terms equals one eighth of the
    returned magnitude. Broadcasts over array inputs.
    """
    sa, ca = np.sin(alpha_a), np.cos(alpha_a)
    sb, cb = np.sin(alpha_b), np.cos(alpha_b)
    return np.abs(
        sa * sb * np.sin(beta_a + beta_b) * np.cos(theta_a)
        - ca * sb * np.sin(beta_b + eta_a) * np.sin(theta_a)
        - sa * cb * np.sin(beta_a - eta_a) * np.sin(theta_a)
    )
