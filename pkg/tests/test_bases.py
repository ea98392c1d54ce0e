import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from wcorr.bases import (
    BasisParams,
    OrthonormalBasis,
    basis_from_params,
    computational_basis,
    fourier_basis,
    is_mutually_unbiased,
    measurement_basis_qubit,
    n_params,
    params_from_basis,
    product_basis,
    qubit_basis,
    wrap_qubit_angles,
)
from wcorr.qcore import DimensionError, gram_defect
from wcorr.states import haar_unitary

S = 1 / np.sqrt(2)


def projectors(b):
    return b.projectors()


def taylor_expi(h, terms=60):
    """exp(iH) by scaling and squaring a long Taylor series."""
    k = max(0, int(np.ceil(np.log2(max(np.abs(h).sum(axis=0).max(), 1e-300)))) + 2)
    a = 1j * h / 2**k
    out = np.eye(h.shape[0], dtype=complex)
    term = out.copy()
    for n in range(1, terms):
        term = term @ a / n
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


class TestQubitBasis:
    def test_pole(self):
        v = qubit_basis(0, 0).vectors
        assert np.allclose(v[:, 0], [1, 0])
        assert np.allclose(v[:, 1], [0, -1])

    def test_equator(self):
        v = qubit_basis(np.pi / 2, 0).vectors
        assert np.allclose(v[:, 0], [S, S])
        assert np.allclose(v[:, 1], [S, -S])

    def test_y_basis(self):
        y = qubit_basis(np.pi / 2, np.pi / 2)
        assert np.allclose(y.vectors[:, 0], [S, 1j * S])
        assert np.allclose(y.vectors[:, 1], [S, -1j * S])
        assert is_mutually_unbiased(y, qubit_basis(0, 0))
        assert is_mutually_unbiased(y, qubit_basis(np.pi / 2, 0))

    def test_measurement_basis(self):
        assert np.allclose(np.abs(measurement_basis_qubit(0, 0).vectors), np.eye(2))
        assert np.allclose(np.abs(measurement_basis_qubit(np.pi, 0).vectors), [[0, 1], [1, 0]])

    @pytest.mark.parametrize("theta,eta", [(0.3, 1.1), (2.0, 4.0), (1.57, 0.0)])
    def test_projector_expansion(self, theta, eta):
        # |mu+><mu+| = (I + n.sigma)/2 with n the Bloch vector of (theta, eta)
        n = [np.sin(theta) * np.cos(eta), np.sin(theta) * np.sin(eta), np.cos(theta)]
        sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
        plus = 0.5 * (np.eye(2) + sum(c * s for c, s in zip(n, sig)))
        p = projectors(measurement_basis_qubit(theta, eta))
        assert np.allclose(p[0], plus, atol=1e-14)
        assert np.allclose(p[1], np.eye(2) - plus, atol=1e-14)

    def test_periodic_projectors(self):
        a, b = 0.7, 2.3
        assert np.allclose(projectors(qubit_basis(a, b)), projectors(qubit_basis(a, b + 2 * np.pi)))
        a2, b2 = wrap_qubit_angles(2 * np.pi - a, b + np.pi)
        assert np.allclose(projectors(qubit_basis(a, b)), projectors(qubit_basis(a2, b2)))

    def test_wrap_ranges(self):
        for a, b in [(-1.0, -3.0), (7.0, 20.0), (4.0, 0.0)]:
            a2, b2 = wrap_qubit_angles(a, b)
            assert 0 <= a2 <= np.pi and 0 <= b2 < 2 * np.pi
            assert np.allclose(projectors(qubit_basis(a, b)), projectors(qubit_basis(a2, b2)))


class TestGeneralBasis:
    def test_zero_params(self):
        assert np.allclose(basis_from_params(BasisParams(np.zeros(9), 3)).vectors, np.eye(3))

    def test_length_check(self):
        with pytest.raises(DimensionError):
            BasisParams(np.zeros(4), 3)
        assert n_params(2) == 2 and n_params(4) == 16

    def test_givens(self):
        p = np.zeros(9)
        p[3] = np.pi / 2  # real part of H[0, 1]
        u = basis_from_params(BasisParams(p, 3)).vectors
        h = np.zeros((3, 3))
        h[0, 1] = h[1, 0] = np.pi / 2
        assert np.allclose(u, taylor_expi(h), atol=1e-13)
        # exp(i pi/2 X) = i X on the first two levels
        assert np.allclose(u[:2, :2], [[0, 1j], [1j, 0]], atol=1e-13)
        assert np.isclose(u[2, 2], 1)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 4), st.integers(0, 2**31))
    def test_taylor_oracle(self, d, seed):
        p = np.random.default_rng(seed).uniform(-3, 3, d * d)
        u = basis_from_params(BasisParams(p, d)).vectors
        from wcorr.bases import hermitian_from_params

        assert gram_defect(u) <= 1e-10
        assert np.allclose(u, taylor_expi(hermitian_from_params(p, d)), atol=1e-11)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_params_round_trip(self, d):
        b = OrthonormalBasis(haar_unitary(d, seed=d).matrix)
        back = basis_from_params(params_from_basis(b))
        assert np.allclose(projectors(back), projectors(b), atol=1e-10)


class TestUnbiased:
    def test_self(self):
        assert not is_mutually_unbiased(computational_basis(2), computational_basis(2))

    def test_hadamard(self):
        assert is_mutually_unbiased(computational_basis(2), qubit_basis(np.pi / 2, 0))

    def test_tilted(self):
        assert not is_mutually_unbiased(computational_basis(2), qubit_basis(np.pi / 3, 0))

    def test_fourier(self):
        assert is_mutually_unbiased(computational_basis(5), fourier_basis(5))

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            is_mutually_unbiased(computational_basis(2), computational_basis(3))


class TestProductBasis:
    def test_computational(self):
        pb = product_basis([computational_basis(2), computational_basis(2)])
        assert np.array_equal(pb.vectors, np.eye(4))
        assert pb.dims == (2, 2)

    def test_completeness_and_gram(self):
        locs = [OrthonormalBasis(haar_unitary(d, seed=10 + d).matrix) for d in (2, 3, 2)]
        pb = product_basis(locs)
        kets = pb.kets
        assert len(kets) == 12
        assert np.allclose(sum(np.outer(k, k.conj()) for k in kets), np.eye(12))
        assert gram_defect(pb.vectors) <= 1e-10
        # lexicographic order: ket (i, j, k) sits at i*6 + j*2 + k
        assert np.allclose(kets[1 * 6 + 2 * 2 + 1], np.kron(np.kron(locs[0].kets[1], locs[1].kets[2]), locs[2].kets[1]))


def test_surjective_qubit_parameterization():
    """Every Haar-random qubit basis is reached by some angle pair."""
    for seed in range(100):
        target = projectors(OrthonormalBasis(haar_unitary(2, seed=seed).matrix))

        def dist(x):
            return np.abs(projectors(qubit_basis(*x)) - target).max()

        guess = params_from_basis(OrthonormalBasis(haar_unitary(2, seed=seed).matrix)).values
        start = guess + 0.05
        res = minimize(dist, start, method="Nelder-Mead", options=dict(xatol=1e-10, fatol=1e-12))
        assert res.fun <= 1e-6
