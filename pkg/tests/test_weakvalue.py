import numpy as np
import pytest

from wcorr.bases import qubit_basis
from wcorr.qcore import DimensionError, NonHermitian, Operator, PureState, commutator
from wcorr.states import ket, random_density, random_pure
from wcorr.weakvalue import (
    GridTooCoarse,
    PointerConfig,
    VanishingPostselection,
    extrapolate_to_zero,
    infer_weak_value,
    noncomm_summand,
    pointer_constants,
    pointer_readout,
    weak_limit,
    weak_value,
)

P0 = Operator(np.diag([1.0, 0.0]), (2,))
SZ = Operator(np.diag([1.0, -1.0]), (2,))


def pure_rho(v):
    return Operator(np.outer(v, np.conj(v)), (len(v),))


def reference():
    return P0, pure_rho(ket("+")), PureState(ket("+i"), (2,))


class TestWeakValue:
    def test_reference_value(self):
        wv = weak_value(*reference())
        assert wv.value == pytest.approx(0.5 + 0.5j, abs=1e-14)
        assert wv.postselection_probability == pytest.approx(0.5)

    def test_eigenstate(self):
        wv = weak_value(SZ, pure_rho(ket("0")), PureState(ket("+"), (2,)))
        assert wv.value == pytest.approx(1.0)

    def test_orthogonal_postselection(self):
        with pytest.raises(VanishingPostselection):
            weak_value(P0, pure_rho(ket("0")), PureState(ket("1"), (2,)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            weak_value(P0, random_density((2, 2), seed=0), PureState(ket("0"), (2,)))

    def test_commutator_form(self):
        rng = np.random.default_rng(3)
        for i in range(50):
            rho = random_density((2, 2), seed=rng)
            phi = random_pure((2, 2), seed=rng)
            u = qubit_basis(*rng.uniform(0, np.pi, 2)).projectors()[0]
            pi_a = Operator(np.kron(u, np.eye(2)), (2, 2))
            lhs = noncomm_summand(pi_a, rho, phi)
            c = commutator(pi_a, rho).matrix
            rhs = abs(np.vdot(phi.amplitudes, c @ phi.amplitudes) / 2j)
            assert abs(lhs - rhs) <= 1e-12
            wv = weak_value(pi_a, rho, phi)
            assert abs(abs(wv.im) * wv.postselection_probability - lhs) <= 1e-12

    def test_summand_at_zero_probability(self):
        assert noncomm_summand(P0, pure_rho(ket("0")), PureState(ket("1"), (2,))) == 0.0

    def test_linear_in_observable(self):
        rho, phi = random_density((3,), seed=1), random_pure((3,), seed=2)
        rng = np.random.default_rng(4)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        wa = weak_value(Operator(a, (3,)), rho, phi).value
        wb = weak_value(Operator(b, (3,)), rho, phi).value
        wab = weak_value(Operator(2 * a - 0.5j * b, (3,)), rho, phi).value
        assert abs(wab - (2 * wa - 0.5j * wb)) <= 1e-12

    def test_global_phase(self):
        rho, phi = random_density((2,), seed=5), random_pure((2,), seed=6)
        w1 = weak_value(P0, rho, phi).value
        w2 = weak_value(P0, rho, PureState(np.exp(0.7j) * phi.amplitudes, (2,))).value
        assert abs(w1 - w2) <= 1e-14

    def test_completeness(self):
        rho, phi = random_density((3,), seed=7), random_pure((3,), seed=8)
        total = sum(weak_value(Operator(np.diag(np.eye(3)[k]), (3,)), rho, phi).value for k in range(3))
        assert abs(total - 1) <= 1e-12


class TestPointer:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            PointerConfig(sigma=0)
        with pytest.raises(ValueError):
            PointerConfig(grid_points=64)

    def test_non_hermitian_observable(self):
        o = Operator(np.array([[0, 1], [0, 0]]), (2,))
        with pytest.raises(NonHermitian):
            pointer_readout(o, pure_rho(ket("+")), PureState(ket("0"), (2,)))

    def test_vanishing_postselection(self):
        with pytest.raises(VanishingPostselection):
            pointer_readout(P0, pure_rho(ket("0")), PureState(ket("1"), (2,)))

    def test_grid_too_coarse(self):
        with pytest.raises(GridTooCoarse):
            pointer_readout(P0, *reference()[1:], g=9.0)

    def test_leading_order(self):
        o, rho, phi = reference()
        g = 0.01
        dq, dp = pointer_readout(o, rho, phi, g=g)
        # Gaussian pointer with sigma = 1: dq ~ g Re W, dp ~ g Im W / (2 sigma^2)
        assert dq == pytest.approx(g * 0.5, rel=1e-3)
        assert dp == pytest.approx(g * 0.25, rel=1e-3)

    def test_odd_in_coupling(self):
        o, rho, phi = reference()
        for g in (0.04, 0.02, 0.01):
            plus = np.array(pointer_readout(o, rho, phi, g=g))
            minus = np.array(pointer_readout(o, rho, phi, g=-g))
            assert np.all(np.abs(plus + minus) <= 5 * g**2)

    def test_calibration(self):
        cq, cp = pointer_constants()
        assert cq == pytest.approx(1.0, rel=1e-6)
        assert cp == pytest.approx(0.5, rel=1e-6)

    def test_inference(self):
        o, rho, phi = reference()
        g = 0.01
        w = infer_weak_value(*pointer_readout(o, rho, phi, g=g), g)
        assert abs(w.imag - 0.5) <= 0.025
        assert abs(w.real - 0.5) <= 0.025


def test_extrapolate_polynomial():
    hs = [0.4, 0.2, 0.1]
    assert extrapolate_to_zero(hs, [3 + 2 * h - h**2 for h in hs]) == pytest.approx(3.0, abs=1e-12)


def test_weak_limit_matches_exact():
    rho, phi = pure_rho(ket("+")), PureState(np.array([np.cos(0.4), np.exp(1.1j) * np.sin(0.4)]), (2,))
    w = weak_value(P0, rho, phi)
    rq, rp = weak_limit(P0, rho, phi)
    cq, cp = pointer_constants()
    assert rq / cq == pytest.approx(w.re, abs=1e-6)
    assert rp / cp == pytest.approx(w.im, abs=1e-6)
