import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerkit import jets
from finslerkit.jets import JetDomainError


def partial(f, point, multi_index, order=4):
    v = jets.seed(np.asarray(point, float), order=order)
    return jets.extract(f(*[v[i] for i in range(len(point))]), multi_index)


class TestSeedAndExtract:
    def test_square(self):
        v = jets.seed([3.0], order=2)[0]
        f = v * v
        assert jets.extract(f, ()) == 9.0
        assert jets.extract(f, (0,)) == 6.0
        assert jets.extract(f, (0, 0)) == 2.0

    def test_sine_series(self):
        v = jets.seed([0.0], order=3)[0]
        f = jets.sin(v)
        got = [jets.extract(f, (0,) * k) for k in range(4)]
        assert got == pytest.approx([0.0, 1.0, 0.0, -1.0], abs=1e-15)

    def test_mixed_partial_polynomial(self):
        assert partial(lambda a, b: a * b * b, [2.0, 5.0], (0, 1, 1)) == pytest.approx(2.0, abs=1e-14)

    def test_degree_zero_is_value(self):
        v = jets.seed([0.7, -0.2], order=4)
        f = jets.exp(v[0]) * jets.cos(v[1])
        assert jets.extract(f, ()) == pytest.approx(math.exp(0.7) * math.cos(-0.2), rel=1e-15)

    def test_cube_second_derivative(self):
        assert partial(lambda v: v**3, [1.0], (0, 0)) == pytest.approx(6.0, abs=1e-14)

    def test_exp_mixed(self):
        assert partial(lambda a, b: jets.exp(a + b), [0.0, 0.0], (0, 1)) == pytest.approx(1.0, abs=1e-15)

    def test_factorial_convention(self):
        # coefficients are Taylor coefficients; extract multiplies by m!
        v = jets.seed([0.0], order=4)[0]
        f = v**4
        k = jets.basis(1, 4).index[(4,)]
        assert f.coeffs[k] == 1.0
        assert jets.extract(f, (0, 0, 0, 0)) == 24.0

    @pytest.mark.parametrize("order", [0, 5, -1])
    def test_order_out_of_range(self, order):
        with pytest.raises(ValueError):
            jets.seed([1.0], order=order)

    def test_active_indices_validated(self):
        with pytest.raises(ValueError):
            jets.seed([1.0, 2.0], active=[0, 0])
        with pytest.raises(ValueError):
            jets.seed([1.0, 2.0], active=[2])

    def test_inactive_coordinates_are_constants(self):
        v = jets.seed([1.0, 2.0, 3.0], active=[2], order=2)
        f = v[0] * v[2] ** 2
        assert jets.extract(f, (0,)) == pytest.approx(6.0)
        assert jets.extract(f, (0, 0)) == pytest.approx(2.0)

    def test_degree_overflow(self):
        v = jets.seed([1.0], order=2)[0]
        with pytest.raises(ValueError):
            jets.extract(v * v, (0, 0, 0))

    def test_derivative_tensor_matches_extract(self, rng):
        p = rng.standard_normal(3)
        v = jets.seed(p, order=3)
        f = jets.sin(v[0] * v[1]) + v[2] ** 3 * v[0]
        D3 = f.derivative_tensor(3)
        for idx in [(0, 1, 2), (2, 2, 0), (1, 1, 1), (0, 0, 1)]:
            assert D3[idx] == pytest.approx(jets.extract(f, idx), abs=1e-13)
        assert np.allclose(D3, np.transpose(D3, (2, 0, 1)))


# symbolic derivatives of a few composites, written out by hand
COMPOSITES = [
    (lambda a, b: a**2 * b**3, lambda a, b: {(0,): 2 * a * b**3, (0, 1): 6 * a * b**2, (1, 1, 1): 6 * a**2,
                                             (0, 0, 1, 1): 12 * b}),
    (lambda a, b: jets.sin(a) * jets.cos(b), lambda a, b: {(0,): math.cos(a) * math.cos(b),
                                                           (0, 1): -math.cos(a) * math.sin(b),
                                                           (0, 0, 0, 1): math.cos(a) * math.sin(b)}),
    (lambda a, b: jets.exp(a * b), lambda a, b: {(0,): b * math.exp(a * b),
                                                (0, 1): (1 + a * b) * math.exp(a * b),
                                                (0, 0): b * b * math.exp(a * b)}),
    (lambda a, b: jets.sqrt(a * a + b * b + 1.0), lambda a, b: {
        (0,): a / math.sqrt(a * a + b * b + 1),
        (0, 1): -a * b / (a * a + b * b + 1) ** 1.5}),
    (lambda a, b: jets.log(a * a + 2.0) / (b + 3.0), lambda a, b: {
        (0,): 2 * a / (a * a + 2) / (b + 3),
        (1, 1): 2 * math.log(a * a + 2) / (b + 3) ** 3}),
]


class TestAgainstSymbolic:
    @pytest.mark.parametrize("k", range(len(COMPOSITES)))
    def test_composites(self, k, rng):
        f, derivs = COMPOSITES[k]
        for a, b in rng.uniform(-1.5, 1.5, size=(4, 2)):
            v = jets.seed([a, b], order=4)
            out = f(v[0], v[1])
            for idx, expected in derivs(a, b).items():
                assert jets.extract(out, idx) == pytest.approx(expected, rel=1e-12, abs=1e-13)

    def test_reciprocal_and_power(self):
        v = jets.seed([2.0], order=4)[0]
        r = 1.0 / v
        assert [jets.extract(r, (0,) * k) for k in range(5)] == pytest.approx(
            [0.5, -0.25, 0.25, -0.375, 0.75], rel=1e-14
        )
        p = v**1.5
        assert jets.extract(p, (0, 0)) == pytest.approx(0.75 * 2**-0.5, rel=1e-13)

    def test_matrix_inverse(self, rng):
        M = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        v = jets.seed([0.3], order=3)[0]
        J = jets.constant(M, 1, 3, shape=(3, 3)) + v * jets.constant(np.eye(3), 1, 3, shape=(3, 3))
        Jinv = jets.inv(J)
        prod = jets.einsum("ij,jk->ik", J, Jinv)
        assert np.allclose(prod.coeffs[..., 0], np.eye(3), atol=1e-13)
        assert np.allclose(prod.coeffs[..., 1:], 0.0, atol=1e-12)
        # d/dv (M + v I)^-1 = -(M + v I)^-2
        A = np.linalg.inv(M + 0.3 * np.eye(3))
        assert np.allclose(jets.extract(Jinv, (0,)), -A @ A, atol=1e-12)


class TestDomainErrors:
    def test_sqrt_of_negative(self):
        with pytest.raises(JetDomainError):
            jets.sqrt(jets.seed([-1.0])[0])

    def test_log_of_zero(self):
        with pytest.raises(JetDomainError):
            jets.log(jets.seed([0.0])[0])

    def test_division_by_zero_leading(self):
        with pytest.raises((JetDomainError, ZeroDivisionError)):
            1.0 / jets.seed([0.0])[0]

    def test_plain_float_paths(self):
        assert jets.sqrt(4.0) == 2.0
        with pytest.raises(JetDomainError):
            jets.sqrt(-4.0)


finite = st.floats(-2.0, 2.0, allow_nan=False)


class TestAlgebraProperties:
    @settings(max_examples=40, deadline=None)
    @given(finite, finite, finite)
    def test_commutative_associative(self, a, b, c):
        v = jets.seed([a, b, c], order=4)
        x, y, z = jets.sin(v[0]) + v[1], v[1] * v[2] + 0.5, jets.exp(v[2] * 0.3)
        s1, s2 = (x + y) + z, x + (y + z)
        p1, p2 = (x * y) * z, x * (y * z)
        assert np.allclose(s1.coeffs, s2.coeffs, rtol=1e-14, atol=1e-14)
        assert np.allclose((x * y).coeffs, (y * x).coeffs, rtol=1e-14, atol=1e-14)
        scale = 1.0 + np.max(np.abs(p1.coeffs))
        assert np.max(np.abs(p1.coeffs - p2.coeffs)) <= 1e-14 * scale * 10

    @settings(max_examples=30, deadline=None)
    @given(finite, finite)
    def test_leibniz_rule(self, a, b):
        v = jets.seed([a, b], order=2)
        f, g = jets.sin(v[0] * v[1]), v[0] ** 2 + jets.cos(v[1])
        lhs = jets.extract(f * g, (0,))
        rhs = jets.extract(f, (0,)) * jets.value(g) + jets.value(f) * jets.extract(g, (0,))
        assert lhs == pytest.approx(rhs, abs=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 3.0))
    def test_chain_rule_sqrt_exp(self, a):
        v = jets.seed([a], order=4)[0]
        f = jets.sqrt(jets.exp(v))  # = exp(v / 2)
        for k in range(5):
            assert jets.extract(f, (0,) * k) == pytest.approx(0.5**k * math.exp(a / 2), rel=1e-12)


class TestBatching:
    def test_batched_seed_matches_loop(self, rng):
        pts = rng.standard_normal((5, 2))
        V = jets.seed(pts, order=3)
        F = jets.sin(V[..., 0]) * V[..., 1] ** 2
        for b in range(5):
            w = jets.seed(pts[b], order=3)
            f = jets.sin(w[0]) * w[1] ** 2
            assert np.allclose(F.coeffs[b], f.coeffs, atol=1e-15)

    def test_grad_stacks_diffs(self, rng):
        V = jets.seed(rng.standard_normal(3), order=3)
        f = V[0] * V[1] * V[2] + jets.cos(V[0])
        G = f.grad([0, 1, 2])
        for i in range(3):
            assert np.array_equal(G[..., i].coeffs, f.diff(i).coeffs)
        assert G.order == 2
