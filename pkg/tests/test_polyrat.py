import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsys.errors import EvalAtPole, SingularRational, ZeroPolynomial
from qsys.polyrat import Poly, RatFun, RatMat, poly_roots, rat_equal, s, tilde


def aberth_roots(coeffs, iters=200):
    """Independent root oracle: Aberth-Ehrlich simultaneous iteration."""
    p = np.asarray(coeffs, dtype=complex)
    n = len(p) - 1
    dp = np.array([k * p[k] for k in range(1, n + 1)])
    radius = 1 + max(abs(p[:-1] / p[-1]))
    z = 0.7 * radius * np.exp(2j * np.pi * (np.arange(n) + 0.35) / n)
    for _ in range(iters):
        pz = np.polyval(p[::-1], z)
        dpz = np.polyval(dp[::-1], z)
        w = np.where(np.abs(dpz) > 1e-300, pz / dpz, 0.0)
        rep = np.zeros(n, dtype=complex)
        for i in range(n):
            rep[i] = np.sum(1.0 / (z[i] - np.delete(z, i)))
        step = w / (1 - w * rep)
        z = z - step
        if np.max(np.abs(step)) < 1e-15 * (1 + np.max(np.abs(z))):
            break
    return z


def match_multisets(a, b, tol):
    b = list(b)
    for x in a:
        j = min(range(len(b)), key=lambda k: abs(b[k] - x))
        if abs(b[j] - x) > tol * (1 + abs(x)):
            return False
        b.pop(j)
    return not b


class TestPolyRoots:
    def test_linear(self):
        assert poly_roots(Poly([2, 1])) == [-2]

    def test_pure_imaginary_pair(self):
        roots = sorted(poly_roots(Poly([4, 0, 1])), key=lambda z: z.imag)
        assert match_multisets(roots, [-2j, 2j], 1e-12)

    def test_degree_six_against_aberth(self):
        coeffs = [1.5 - 0.2j, -2.1, 0.7 + 0.9j, 3.0, -1.1j, 0.4, 1.0]
        got = poly_roots(Poly(coeffs))
        oracle = aberth_roots(coeffs)
        assert match_multisets(got, oracle, 1e-8)

    def test_residual_bound(self):
        p = Poly([3.0, -1.0, 2.5, 1.0, 0.3])
        top = max(abs(c) for c in p.coeffs)
        for r in p.roots():
            assert abs(p(r)) / (top * (1 + abs(r)) ** p.degree) <= 1e-8

    def test_zero_polynomial_raises(self):
        with pytest.raises(ZeroPolynomial):
            poly_roots(Poly())


@st.composite
def separated_roots(draw):
    n = draw(st.integers(min_value=1, max_value=12))
    pts = []
    for _ in range(n):
        x = draw(st.floats(-9, 9, allow_nan=False))
        y = draw(st.floats(-9, 9, allow_nan=False))
        pts.append(complex(x, y))
    # generic multisets only: keep roots separated so conditioning is sane
    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) < 0.3:
                pts[j] += 0.5 + 0.5j + 0.17 * (i + 1) + 0.11j * (j + 1)
    return pts


@given(separated_roots())
@settings(max_examples=40, deadline=None)
def test_roots_roundtrip(roots):
    p = Poly.from_roots(roots, lead=1.0)
    got = p.roots()
    assert match_multisets(got, roots, 1e-7)


class TestRatFunArithmetic:
    def test_add_same_pole(self):
        r = 1 / (s + 1) + 1 / (s + 1)
        assert r.num.coeffs == (2 + 0j,)
        assert r.den.coeffs == (1 + 0j, 1 + 0j)

    def test_scalar_reciprocal(self):
        m = RatMat([[(s + 1) / s]])
        assert rat_equal(m.inv()[0, 0], s / (s + 1), 1e-12)

    def test_cancellation(self):
        r = (1 / (s + 2)) * ((s + 2) / (s + 3))
        assert rat_equal(r, 1 / (s + 3), 1e-12)
        assert r.den.degree == 1

    def test_zero_is_zero_over_one(self):
        r = (s - s) / (s + 1)
        assert r.is_zero and r.den.coeffs == (1 + 0j,)

    def test_monic_denominator(self):
        r = RatFun(Poly([1.0]), Poly([2.0, 4.0]))
        assert abs(r.den.coeffs[-1] - 1) < 1e-15

    def test_invert_zero_raises(self):
        with pytest.raises(SingularRational):
            RatFun.const(0).inv()

    def test_singular_matrix_raises(self):
        m = RatMat([[1 / (s + 1), 1 / (s + 1)], [2 / (s + 1), 2 / (s + 1)]])
        with pytest.raises(SingularRational):
            m.inv()


finite = st.floats(-4, 4, allow_nan=False)


@st.composite
def ratfuns(draw):
    num = [complex(draw(finite), draw(finite)) for _ in range(draw(st.integers(1, 3)))]
    den_roots = [complex(draw(finite), draw(finite)) for _ in range(draw(st.integers(1, 3)))]
    den = Poly.from_roots(den_roots)
    return RatFun(Poly(num), den)


@given(ratfuns())
@settings(max_examples=60, deadline=None)
def test_mul_inverse_is_identity(r):
    if r.is_zero:
        return
    assert rat_equal(r * r.inv(), RatFun.const(1), 1e-10)


@given(ratfuns(), ratfuns())
@settings(max_examples=60, deadline=None)
def test_tilde_involution_and_antihomomorphism(a, b):
    assert tilde(tilde(a)) == a or rat_equal(tilde(tilde(a)), a, 1e-14)
    m = RatMat([[a, b], [b, a + b]])
    lhs = tilde(m @ m)
    rhs = tilde(m) @ tilde(m)
    assert rat_equal(lhs, rhs, 1e-9)


def test_tilde_exact_on_coefficients():
    r = (0.25 * s ** 2 + (1 + 2j)) / (s ** 3 + 2 * s + 5)
    assert tilde(tilde(r)) == r


def test_tilde_of_simple_lag():
    assert rat_equal(tilde(1 / (s + 2.0)), 1 / (-s + 2.0), 1e-14)


def test_tilde_constant_matrix_is_transpose(rng):
    D = rng.normal(size=(2, 3))
    m = RatMat.from_const(D)
    assert np.allclose(tilde(m)(0.0), D.T)


@given(ratfuns(), ratfuns())
@settings(max_examples=40, deadline=None)
def test_eval_homomorphism(a, b):
    z = 0.37 + 1.21j
    ma = RatMat([[a, b], [RatFun.const(1), a]])
    mb = RatMat([[b, a], [a * b, RatFun.const(0.5)]])
    try:
        lhs = (ma @ mb)(z)
        rhs = ma(z) @ mb(z)
    except EvalAtPole:
        return
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1 + np.linalg.norm(rhs))


class TestRatEqual:
    def test_reflexive(self):
        r = (s - 2) / (s + 2)
        assert rat_equal(r, r)

    def test_unreduced_vs_reduced(self):
        a = RatFun(Poly([-4, 0, 1]), Poly.from_roots([-2, -3]))
        assert rat_equal(a, (s - 2) / (s + 3))

    def test_perturbed_coefficient(self):
        assert not rat_equal((s - 2) / (s + 2), (s - 2.001) / (s + 2), 1e-9)


class TestEval:
    def test_point_values(self):
        r = (s - 2) / (s + 2)
        assert abs(r(0) + 1) < 1e-14
        assert abs(r(2)) < 1e-14

    def test_eval_at_pole_raises(self):
        with pytest.raises(EvalAtPole):
            (1 / (s + 2))(-2.0)

    def test_matrix_eval_matches_dense_solve(self, rng):
        from tests.conftest import rand_stable_ss
        ss = rand_stable_ss(rng, n=3, p=2, m=2)
        tf = ss.transfer_function()
        for z in (0.2 + 1.1j, -0.5 + 2j, 3.0):
            direct = ss.eval(z)
            assert np.linalg.norm(tf(z) - direct) <= 1e-9 * (1 + np.linalg.norm(direct))


def test_ratmat_block_and_diag():
    m = RatMat.block([[RatMat.eye(1), RatMat.from_const([[2.0]])],
                      [RatMat.from_const([[0.0]]), RatMat.eye(1)]])
    assert m.shape == (2, 2)
    d = RatMat.diag([1 / (s + 1), RatFun.const(3)])
    assert d[0, 1].is_zero and rat_equal(d[1, 1], RatFun.const(3))
