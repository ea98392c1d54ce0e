import numpy as np
import pytest

from conftest import FAST
from wcorr.bases import computational_basis, qubit_basis
from wcorr.correlation.bounds import (
    bounds_report,
    l1_in_basis,
    l1_mask,
    l1_quantumness,
    linear_entropy_witness,
    local_uncertainty_bound,
    min_basis_tsallis,
    spectrum_tsallis,
    tsallis2,
)
from wcorr.qcore import DimensionError, Operator, partial_trace
from wcorr.states import (
    bell_plus,
    classical_classical,
    haar_unitary,
    ket,
    product_pure,
    qubit_states_cq,
    random_density,
    random_pure,
)
from wcorr.qcore import PureState


class TestTsallis:
    def test_values(self):
        assert tsallis2([1, 0]) == 0
        assert tsallis2([0.5, 0.5]) == 0.5

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2], []])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            tsallis2(bad)

    @pytest.mark.parametrize("seed", range(3))
    def test_eigenbasis_minimizes(self, seed):
        rho = random_density((2, 2), seed=seed)
        marg = partial_trace(rho, [0]).matrix
        spec = spectrum_tsallis(rho, 0)
        rng = np.random.default_rng(seed)
        vals = []
        for _ in range(200):
            u = haar_unitary(2, seed=rng).matrix
            vals.append(tsallis2(np.einsum("ik,ij,jk->k", u.conj(), marg, u).real))
        assert min(vals) >= spec - 1e-12
        assert min_basis_tsallis(rho, [0], FAST) == pytest.approx(spec, abs=1e-6)


class TestWitness:
    def test_product(self):
        assert linear_entropy_witness(product_pure(ket("+"), ket("0"))) == pytest.approx(0, abs=1e-7)

    def test_bell(self):
        assert linear_entropy_witness(bell_plus()) == pytest.approx(1.0)

    @pytest.mark.parametrize("t", [0.2, 0.5, 1.1])
    def test_concurrence(self, t):
        lp, lm = np.cos(t), np.sin(t)
        u, v = haar_unitary(2, seed=1).matrix, haar_unitary(2, seed=2).matrix
        psi = PureState(np.kron(u, v) @ np.array([lp, 0, 0, lm]), (2, 2))
        assert linear_entropy_witness(psi) == pytest.approx(2 * abs(lp * lm), abs=1e-12)

    def test_mixed_rejected(self):
        with pytest.raises(ValueError):
            linear_entropy_witness(random_density((2, 2), seed=0))

    def test_tripartite_rejected(self):
        with pytest.raises(DimensionError):
            linear_entropy_witness(random_pure((2, 2, 2), seed=0))


class TestUncertainty:
    def test_product_pure(self):
        psi = product_pure(np.array([np.cos(0.4), np.sin(0.4)]), ket("+"))
        assert local_uncertainty_bound(psi, [0], FAST) <= 1e-6

    def test_bell(self):
        assert local_uncertainty_bound(bell_plus(), [0], FAST) == pytest.approx(1.0, abs=1e-9)


class TestL1:
    def test_mask_counts(self):
        assert l1_mask(2, 2, "displayed").sum() == 4
        assert l1_mask(2, 2, "full").sum() == 12
        with pytest.raises(ValueError):
            l1_mask(2, 2, "other")

    def test_cc_defining_basis(self):
        rho = classical_classical([[0.4, 0.1], [0.2, 0.3]], qubit_basis(0.3, 1.0), qubit_basis(2.0, 0.1))
        ba, bb = qubit_basis(0.3, 1.0).vectors, qubit_basis(2.0, 0.1).vectors
        assert l1_in_basis(rho, ba, bb, "full") <= 1e-15
        assert l1_quantumness(rho, FAST, "full") <= 1e-6

    def test_bell_computational(self):
        eye = np.eye(2)
        assert l1_in_basis(bell_plus().density(), eye, eye) == pytest.approx(1.0)

    def test_displayed_pattern_blind_to_cq_coherence(self):
        # only a != a' and b != b' entries are summed, so coherence confined to B is invisible
        rho = qubit_states_cq([0.5, 0.5])
        assert l1_in_basis(rho, np.eye(2), np.eye(2), "displayed") == 0
        assert l1_quantumness(rho, FAST, "full") > 0.1

    def test_needs_two_parties(self):
        with pytest.raises(DimensionError):
            l1_quantumness(random_density((2, 2, 2), seed=0))


class TestReport:
    def test_bell(self):
        rep = bounds_report(bell_plus(), (0,), FAST)
        assert rep.witness_pure == pytest.approx(1.0)
        assert rep.w_value == pytest.approx(1.0, abs=5e-3)
        assert all(rep.ordering_flags().values())

    def test_random_mixed(self):
        rep = bounds_report(random_density((2, 2), seed=5), (0,), FAST)
        assert rep.witness_pure is None and rep.l1_bound is None
        flags = rep.ordering_flags()
        assert set(flags) >= {"w_le_uncertainty", "uncertainty_le_tsallis", "tsallis_le_spectrum", "tsallis_le_ceiling"}
        assert all(flags.values())
        d = rep.to_dict()
        assert d["ordering"] == flags and d["measured"] == [0]
