import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsys.errors import AlgebraicLoop, NonSquare, SingularD, SingularT
from qsys.polyrat import RatMat, rat_equal, s
from qsys.statespace import (StateSpace, _multiset_close, cascade,
                             feedback_lft, from_ratfun, from_ratmat, inverse,
                             is_controllable, is_observable,
                             minimal_realization, negate, parallel, poles,
                             similarity, ss_tilde, transfer_function,
                             transmission_zeros)
from tests.conftest import rand_stable_ss


def su2_realization(g):
    a = 2 * abs(g) ** 2
    return StateSpace([[-a]], [[-2 * np.conj(g)]], [[2 * g]], [[1]])


class TestTransferFunction:
    def test_cavity_form(self):
        tf = transfer_function(su2_realization(1.0))
        assert rat_equal(tf[0, 0], (s - 2) / (s + 2), 1e-12)

    def test_pure_gain(self):
        tf = transfer_function(StateSpace.pure_gain(np.eye(2)))
        assert rat_equal(tf, RatMat.eye(2), 1e-14)

    def test_against_dense_solve(self, rng):
        ss = rand_stable_ss(rng, n=3, p=2, m=2)
        tf = transfer_function(ss)
        for z in np.linspace(0.5, 5, 10):
            zc = z + 0.9j
            assert np.linalg.norm(tf(zc) - ss.eval(zc)) < 1e-9


class TestConnections:
    def test_cascade_tf(self, rng):
        s1, s2 = rand_stable_ss(rng), rand_stable_ss(rng)
        assert rat_equal(transfer_function(cascade(s1, s2)),
                         transfer_function(s1) @ transfer_function(s2), 1e-9)

    def test_parallel_tf(self, rng):
        s1, s2 = rand_stable_ss(rng), rand_stable_ss(rng)
        assert rat_equal(transfer_function(parallel(s1, s2)),
                         transfer_function(s1) + transfer_function(s2), 1e-9)

    def test_parallel_with_negation_is_zero(self, rng):
        s1 = rand_stable_ss(rng)
        tf = transfer_function(parallel(s1, negate(s1)))
        assert rat_equal(tf, RatMat.from_const(np.zeros((2, 2))), 1e-9)

    def test_inverse_tf(self, rng):
        s1 = rand_stable_ss(rng)
        assert rat_equal(transfer_function(inverse(s1)),
                         transfer_function(s1).inv(), 1e-8)

    def test_inverse_needs_invertible_d(self):
        ss = StateSpace([[-1]], [[1]], [[1]], [[0]])
        with pytest.raises(SingularD):
            inverse(ss)

    def test_tilde_tf(self, rng):
        s1 = rand_stable_ss(rng)
        assert rat_equal(transfer_function(ss_tilde(s1)),
                         transfer_function(s1).tilde(), 1e-9)

    def test_feedback_lft(self, rng):
        s1, s2 = rand_stable_ss(rng), rand_stable_ss(rng)
        t1, t2 = transfer_function(s1), transfer_function(s2)
        target = (RatMat.eye(2) - t1 @ t2).inv() @ t1
        assert rat_equal(transfer_function(feedback_lft(s1, s2)), target, 1e-8)

    def test_algebraic_loop_detected(self):
        g = StateSpace.pure_gain(np.eye(2))
        with pytest.raises(AlgebraicLoop):
            feedback_lft(g, g)

    def test_cascade_of_su2_systems(self):
        # two coupled loops sharing one line equal the product of the
        # individual systems
        g0, gl = 0.8, 1.3
        joint = StateSpace([[-2 * g0 ** 2, 0], [-4 * g0 * gl, -2 * gl ** 2]],
                           [[-2 * g0], [-2 * gl]], [[2 * g0, 2 * gl]], [[1]])
        prod = cascade(su2_realization(gl), su2_realization(g0))
        assert rat_equal(transfer_function(joint), transfer_function(prod), 1e-9)

    def test_inverse_of_su2_is_antidamped(self):
        g = 0.9
        tf = transfer_function(inverse(su2_realization(g)))
        assert rat_equal(tf[0, 0], (s + 2 * g ** 2) / (s - 2 * g ** 2), 1e-9)


class TestControllability:
    def test_su2_is_minimal(self):
        ss = su2_realization(0.5 + 1j)
        assert is_controllable(ss) and is_observable(ss)

    def test_qnd_system_is_neither(self):
        g = 0.7
        ss = StateSpace(np.zeros((2, 2)), [[0, 0], [0, g]],
                        [[-g, 0], [0, 0]], np.eye(2))
        assert not is_controllable(ss)
        assert not is_observable(ss)

    def test_unobservable_mode(self):
        alpha, beta = 0.6, 1.4
        ss = StateSpace([[-2, 0], [0, alpha]], [[-2], [beta]], [[2, 0]], [[1]])
        assert is_controllable(ss)
        assert not is_observable(ss)
        ss2 = StateSpace([[-1, 0], [0, alpha]], [[1], [0]], [[1, 0]], [[1]])
        assert not is_controllable(ss2)
        assert not is_observable(ss2)


class TestMinimalRealization:
    def test_two_state_reduces_to_one(self):
        alpha, beta = 0.6, 1.4
        ss = StateSpace([[-2, 0], [0, alpha]], [[-2], [beta]], [[2, 0]], [[1]])
        mr = minimal_realization(ss)
        assert mr.n == 1
        assert rat_equal(transfer_function(mr)[0, 0], (s - 2) / (s + 2), 1e-8)

    def test_already_minimal_unchanged(self, rng):
        ss = rand_stable_ss(rng)
        assert minimal_realization(ss).n == ss.n

    def test_idempotent_dimension(self, rng):
        ss = parallel(rand_stable_ss(rng), rand_stable_ss(rng))
        m1 = minimal_realization(ss)
        assert minimal_realization(m1).n == m1.n

    def test_cascade_with_inverse_is_feedthrough(self, rng):
        s1 = rand_stable_ss(rng, n=2)
        loop = cascade(s1, inverse(s1))
        mr = minimal_realization(loop)
        assert mr.n == 0
        assert rat_equal(transfer_function(mr), RatMat.eye(2), 1e-8)


class TestPolesZeros:
    def test_su2_pole_zero(self):
        g = 1.2 + 0.4j
        ss = su2_realization(g)
        a = 2 * abs(g) ** 2
        assert _multiset_close(poles(ss), [-a], 1e-9)
        assert _multiset_close(transmission_zeros(ss), [a], 1e-9)

    def test_detuned_pair(self):
        g, om = 1.0, 3.0
        A = -2 * np.eye(2) - 1j * om * np.diag([1.0, -1.0])
        ss = StateSpace(A, -2 * np.eye(2), 2 * np.eye(2), np.eye(2))
        assert _multiset_close(poles(ss), [-2 - 3j, -2 + 3j], 1e-8)
        assert _multiset_close(transmission_zeros(ss), [2 + 3j, 2 - 3j], 1e-8)

    def test_feedthrough_has_no_finite_structure(self):
        ss = StateSpace.pure_gain(np.diag([1.0, 2.0]))
        assert poles(ss) == []
        assert transmission_zeros(ss) == []

    def test_zeros_need_square(self, rng):
        ss = rand_stable_ss(rng, p=2, m=1)
        with pytest.raises(NonSquare):
            transmission_zeros(ss)

    def test_poles_invariant_under_similarity(self, rng):
        ss = rand_stable_ss(rng)
        T = rng.normal(size=(3, 3)) + np.eye(3)
        assert _multiset_close(poles(ss), poles(similarity(ss, T)), 1e-7)


class TestSimilarity:
    def test_identity(self, rng):
        ss = rand_stable_ss(rng)
        out = similarity(ss, np.eye(3))
        assert np.allclose(out.A, ss.A) and np.allclose(out.C, ss.C)

    def test_printed_example(self):
        g = 1.0
        out = similarity(su2_realization(g), [[2 * g]])
        assert np.allclose(out.B, [[-4]])
        assert np.allclose(out.C, [[1]])

    def test_transfer_preserved(self, rng):
        ss = rand_stable_ss(rng)
        T = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        assert rat_equal(transfer_function(ss),
                         transfer_function(similarity(ss, T)), 1e-8)

    def test_singular_t_rejected(self, rng):
        ss = rand_stable_ss(rng)
        with pytest.raises(SingularT):
            similarity(ss, np.zeros((3, 3)))

    def test_two_minimal_realizations_same_dimension(self, rng):
        ss = rand_stable_ss(rng)
        T = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        other = similarity(ss, T)
        assert minimal_realization(ss).n == minimal_realization(other).n


class TestFromRatmat:
    def test_scalar_roundtrip(self):
        r = (s - 2) / (s + 2)
        ss = from_ratfun(r)
        assert rat_equal(transfer_function(ss)[0, 0], r, 1e-10)

    def test_matrix_roundtrip(self, rng):
        from tests.conftest import rand_ratmat
        m = rand_ratmat(rng, 2, 2)
        ss = from_ratmat(m)
        assert rat_equal(transfer_function(ss), m, 1e-8)

    def test_minimality(self):
        m = RatMat.diag([1 / (s + 1), 1 / (s + 1)])
        assert from_ratmat(m).n == 2
