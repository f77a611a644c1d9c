import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerkit import geometry, metrics, oracles
from finslerkit.errors import DegenerateFlagError, DomainError, UnsupportedCaseError
from finslerkit.geometry import LocalJets
from finslerkit.metrics import LineElement, Randers

from conftest import ALL_FIXTURES, load_fixture, random_elements


def _rel(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


class TestConnectionFrameInvariants:
    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_invariants(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 40)
        fr = geometry.horizontal_connection(spec, el)
        n = spec.dimension
        assert np.allclose(fr.g, np.swapaxes(fr.g, -1, -2), atol=1e-12)
        assert np.max(np.abs(fr.g @ fr.g_inv - np.eye(n))) < 1e-10
        assert np.max(np.abs(np.einsum("...ijk,...k->...ij", fr.cartan, el.y))) < 1e-10
        F2 = spec.F2(el.x, el.y)
        assert np.max(np.abs(np.einsum("...ij,...i,...j->...", fr.g, el.y, el.y) - F2)) < 1e-10
        G2 = geometry.spray(spec, LineElement(el.x, 2 * el.y))
        assert np.max(np.abs(G2 - 4 * fr.spray)) < 1e-10
        assert np.max(np.abs(fr.hconn - np.swapaxes(fr.hconn, -1, -2))) < 1e-10
        assert np.allclose(fr.cartan, np.transpose(fr.cartan, (0, 2, 3, 1)), atol=1e-12)

    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_hconn_contracts_to_nconn(self, name, rng):
        # Gamma^i_jk y^j = N^i_k: transporting with N or with Gamma agree along geodesics
        spec = load_fixture(name)
        el = random_elements(spec, rng, 30)
        fr = geometry.horizontal_connection(spec, el)
        assert np.max(np.abs(np.einsum("...ijk,...j->...ik", fr.hconn, el.y) - fr.nconn)) < 1e-8

    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_fast_spray_path_matches_jet_algebra(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 20)
        G, N = geometry.spray_and_nconn(spec, el.x, el.y)
        p = LocalJets(spec, el.x, el.y, 3)
        assert np.max(np.abs(G - p.spray.value)) < 1e-12
        assert np.max(np.abs(N - p.nconn.value)) < 1e-12


class TestFundamentalTensor:
    def test_constant_riemannian(self, rng):
        a = np.array([[2.0, 0.3], [0.3, 1.0]])
        spec = metrics.Riemannian(a_matrix=a)
        el = random_elements(spec, rng, 10)
        assert np.allclose(geometry.fundamental_tensor(spec, el), a, atol=1e-14)

    def test_randers_against_fd(self):
        spec = Randers(a_matrix=[[1.0, 0.0], [0.0, 1.0]], b_covector=[0.3, 0.0])
        x, y = np.array([0.1, 0.2]), np.array([1.0, 0.0])
        g = geometry.fundamental_tensor(spec, LineElement(x, y))
        assert np.all(np.linalg.eigvalsh(g) > 0)
        _, H = oracles.fd_F2_derivatives(spec, x, y)
        assert np.max(np.abs(g - 0.5 * H[2:, 2:])) < 1e-6
        assert g == pytest.approx(np.array([[1.69, 0.0], [0.0, 1.3]]), abs=1e-14)

    def test_not_strongly_convex(self):
        # a_func path bypasses nothing in geometry: g must be checked where it is used
        spec = metrics.Riemannian(a_func=lambda x: [[1.0 + 0 * x[0], 0.0], [0.0, 1.0]], dimension=2)
        g = geometry.fundamental_tensor(spec, LineElement([0.0, 0.0], [1.0, 1.0]))
        assert np.allclose(g, np.eye(2))


class TestSpray:
    def test_flat(self, flat2, rng):
        assert np.all(geometry.spray(flat2, random_elements(flat2, rng, 10)) == 0.0)

    def test_sphere_geodesic_equation(self, sphere1):
        # t'' - sin t cos t (u')^2 = 0 and u'' + 2 cot t t' u' = 0
        t, u, yt, yu = 1.1, 0.4, 0.6, 0.8
        G = geometry.spray(sphere1, LineElement([t, u], [yt, yu]))
        assert -2 * G[0] == pytest.approx(math.sin(t) * math.cos(t) * yu**2, rel=1e-14)
        assert -2 * G[1] == pytest.approx(-2 * math.cos(t) / math.sin(t) * yt * yu, rel=1e-14)

    def test_sphere_against_christoffel(self, rng):
        spec = metrics.round_sphere(1.0, 2)
        el = random_elements(spec, rng, 20)
        G = geometry.spray(spec, el)
        Go = oracles.christoffel_oracle(spec).spray(el.x, el.y)
        assert _rel(G, Go) < 1e-8


class TestHorizontalConnection:
    def test_flat_vanishes(self, flat2, rng):
        fr = geometry.horizontal_connection(flat2, random_elements(flat2, rng, 5))
        assert np.all(fr.nconn == 0) and np.all(fr.hconn == 0)

    @pytest.mark.parametrize("name", ["riemann_bump", "sphere_c2", "sphere3_c1"])
    def test_riemannian_is_christoffel(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 10)
        gam = geometry.horizontal_connection(spec, el).hconn
        gam_o = oracles.christoffel_oracle(spec).christoffel(el.x)
        assert _rel(gam, gam_o) < 1e-8
        # y-independence
        other = LineElement(el.x, rng.standard_normal(el.y.shape))
        assert np.max(np.abs(geometry.horizontal_connection(spec, other).hconn - gam)) < 1e-12

    def test_sphere_gamma_122(self):
        spec = metrics.round_sphere(1.0, 2)
        sol = metrics.special_solution(1.0)
        t = 0.9
        fr = geometry.horizontal_connection(spec, LineElement([t, 0.1], [0.2, 0.7]))
        f22 = 1.0
        expected = -sol.derivative(t, 1) * sol.derivative(t, 2) * f22
        assert fr.hconn[0, 1, 1] == pytest.approx(float(expected), rel=1e-13)

    @pytest.mark.parametrize("name", ["sphere_c1", "randers_bump", "sphere_randers_fiber"])
    def test_against_fd_delta_definition(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 6)
        gam = geometry.horizontal_connection(spec, el).hconn
        assert _rel(gam, oracles.fd_hconn(spec, el.x, el.y)) < 1e-7

    def test_finsler_gamma_depends_on_y(self, rng):
        spec = load_fixture("sphere_randers_fiber")
        x = spec.sample_points(rng, 1)
        a = geometry.horizontal_connection(spec, LineElement(x, rng.standard_normal((1, 3)))).hconn
        b = geometry.horizontal_connection(spec, LineElement(x, rng.standard_normal((1, 3)))).hconn
        assert np.max(np.abs(a - b)) > 1e-3


class TestFlagCurvature:
    def test_flat_zero(self, flat2, rng):
        el = random_elements(flat2, rng, 10)
        assert np.all(geometry.flag_curvature(flat2, el, rng.standard_normal((10, 2))) == 0)
        assert np.all(geometry.riemann_flag_operator(flat2, el) == 0)

    @pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
    def test_sphere_constant(self, C, rng):
        spec = metrics.round_sphere(C, 2)
        el = random_elements(spec, rng, 50)
        K = geometry.flag_curvature(spec, el, rng.standard_normal((50, 2)))
        assert np.max(np.abs(K - C * C)) < 1e-6

    def test_sphere_operator_pattern(self, rng):
        C = 2.0
        spec = metrics.round_sphere(C, 3)
        el = random_elements(spec, rng, 10)
        X = rng.standard_normal((10, 3))
        R = geometry.riemann_flag_operator(spec, el)
        g = geometry.fundamental_tensor(spec, el)
        F2 = spec.F2(el.x, el.y)
        gyX = np.einsum("...i,...ij,...j->...", el.y, g, X)
        expected = C * C * (F2[:, None] * X - gyX[:, None] * el.y)
        assert _rel(np.einsum("...ik,...k->...i", R, X), expected) < 1e-8

    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_flagpole_annihilated_and_symmetric(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 20)
        R = geometry.riemann_flag_operator(spec, el)
        g = geometry.fundamental_tensor(spec, el)
        assert np.max(np.abs(np.einsum("...ik,...k->...i", R, el.y))) < 1e-8
        X, Y = rng.standard_normal((2, 20, spec.dimension))
        a = np.einsum("...ik,...k,...ij,...j->...", R, X, g, Y)
        b = np.einsum("...ik,...k,...ij,...j->...", R, Y, g, X)
        assert np.max(np.abs(a - b)) < 1e-8

    @pytest.mark.parametrize("name", ["randers_bump", "riemann_bump", "sphere_randers_fiber"])
    def test_invariance_under_flag_changes(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 20)
        X = rng.standard_normal((20, spec.dimension))
        K = geometry.flag_curvature(spec, el, X)
        for lam, mu in [(2, 0), (1, 3), (-1, 1)]:
            K2 = geometry.flag_curvature(spec, el, lam * X + mu * el.y)
            assert np.max(np.abs(K2 - K) / np.maximum(1.0, np.abs(K))) < 1e-8
        for lam in (0.5, 3.0):
            K3 = geometry.flag_curvature(spec, LineElement(el.x, lam * el.y), X)
            assert np.max(np.abs(K3 - K) / np.maximum(1.0, np.abs(K))) < 1e-8

    def test_randers_negative_control(self, randers_bump, rng):
        el = random_elements(randers_bump, rng, 100)
        K = geometry.flag_curvature(randers_bump, el, rng.standard_normal((100, 2)))
        assert np.var(K, ddof=1) > 1e-4

    def test_degenerate_flag(self, sphere1):
        el = LineElement([1.0, 0.0], [1.0, 2.0])
        with pytest.raises(DegenerateFlagError):
            geometry.flag_curvature(sphere1, el, [2.0, 4.0])
        with pytest.raises(DegenerateFlagError):
            geometry.flag_curvature(sphere1, el, [0.0, 0.0])

    def test_off_chart(self, sphere1):
        with pytest.raises(DomainError):
            geometry.flag_curvature(sphere1, LineElement([0.0, 0.0], [1.0, 0.0]), [0.0, 1.0])

    def test_curvature_data_bundle(self, sphere1, rng):
        el = random_elements(sphere1, rng, 5)
        cd = geometry.curvature_data(sphere1, el, rng.standard_normal((5, 2)))
        assert cd.h_curvature.shape == (5, 2, 2, 2, 2)
        assert np.allclose(cd.flag_value, 1.0, atol=1e-10)


class TestHCurvature:
    @pytest.mark.parametrize("name", ["flat2", "flat_polar"])
    def test_flat_zero(self, name, rng):
        spec = load_fixture(name)
        P = geometry.h_curvature_tensor(spec, random_elements(spec, rng, 5))
        assert np.max(np.abs(P)) < 1e-10

    @pytest.mark.parametrize("name", ["riemann_bump", "sphere3_c2"])
    def test_riemannian_reduction(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 6)
        T = geometry.h_curvature_tensor(spec, el, convention="standard")
        assert _rel(T, oracles.christoffel_oracle(spec).riemann(el.x)) < 1e-6

    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_contraction_gives_flag_operator(self, name, rng):
        spec = load_fixture(name)
        el = random_elements(spec, rng, 10)
        P = geometry.h_curvature_tensor(spec, el)
        R = geometry.riemann_flag_operator(spec, el)
        X = rng.standard_normal((10, spec.dimension))
        lhs = np.einsum("...ihjk,...h,...j,...k->...i", P, X, el.y, el.y)
        assert _rel(lhs, np.einsum("...ik,...k->...i", R, X)) < 1e-6

    @pytest.mark.parametrize("name", ALL_FIXTURES)
    def test_antisymmetry_matches_constant_form(self, name, rng):
        # K (delta^i_h g_jk - delta^i_j g_hk) flips sign under h <-> j; so must R
        spec = load_fixture(name)
        P = geometry.h_curvature_tensor(spec, random_elements(spec, rng, 10))
        assert np.max(np.abs(P + np.swapaxes(P, -3, -2))) < 1e-8
        form = geometry.constant_curvature_form(np.eye(spec.dimension), 1.0)
        assert np.array_equal(form, -np.swapaxes(form, -3, -2))

    def test_sphere_block(self):
        spec = metrics.round_sphere(1.0, 2)
        sol = metrics.special_solution(1.0)
        t = 1.2
        P = geometry.h_curvature_tensor(spec, LineElement([t, 0.3], [0.4, -0.9]))
        f22 = 1.0
        expected = -sol.derivative(t, 1) * sol.derivative(t, 3) * f22
        assert abs(P[0, 0, 1, 1] - expected) < 1e-6

    def test_convention_argument(self, sphere1):
        with pytest.raises(ValueError):
            geometry.h_curvature_tensor(sphere1, LineElement([1.0, 0.0], [1.0, 0.0]), convention="other")


class TestConstantCurvatureForm:
    def test_flat(self, flat2, rng):
        assert geometry.check_constant_curvature_form(flat2, random_elements(flat2, rng, 10), 0.0) < 1e-10

    def test_sphere_and_wrong_K(self, sphere1, rng):
        el = random_elements(sphere1, rng, 20)
        assert geometry.check_constant_curvature_form(sphere1, el, 1.0) < 1e-6
        assert geometry.check_constant_curvature_form(sphere1, el, 2.0) > 0.1

    def test_randers_fiber_is_not_constant(self, rng):
        spec = load_fixture("sphere_randers_fiber")
        assert geometry.check_constant_curvature_form(spec, random_elements(spec, rng, 10), 1.0) > 0.1


class TestHorizontalHessian:
    def test_equator(self, sphere1):
        sol = metrics.special_solution(1.0)
        el = LineElement([math.pi / 2, 0.1], [0.3, 0.5])
        H = geometry.horizontal_hessian(sphere1, el, sol)
        assert H[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert geometry.hessian_residual(sphere1, el, sol) < 1e-6

    def test_constant_rho(self, sphere1, rng):
        sol = metrics.special_solution(1.0, 1.0, 1.0, 0.0)
        H = geometry.horizontal_hessian(sphere1, random_elements(sphere1, rng, 5), sol)
        assert np.max(np.abs(H)) < 1e-15

    def test_c2_n3_fifty_y_per_x(self, rng):
        spec = metrics.round_sphere(2.0, 3)
        sol = metrics.special_solution(4.0)
        x = np.repeat(spec.sample_points(rng, 4), 50, axis=0)
        el = LineElement(x, rng.standard_normal(x.shape))
        assert np.max(geometry.hessian_residual(spec, el, sol)) < 1e-6

    def test_finsler_fiber_with_fd_gamma(self, rng):
        spec = load_fixture("sphere_randers_fiber")
        sol = metrics.special_solution(1.0)
        el = random_elements(spec, rng, 4)
        assert np.max(geometry.hessian_residual(spec, el, sol)) < 1e-6
        # rebuild the Hessian with finite-difference Gamma
        gam = oracles.fd_hconn(spec, el.x, el.y)
        t = el.x[:, 0]
        d1, d2 = sol.derivative(t, 1), sol.derivative(t, 2)
        H = -gam[:, 0] * d1[:, None, None]
        H[:, 0, 0] += d2
        g = geometry.fundamental_tensor(spec, el)
        phi = np.asarray(sol.phi(t))
        assert np.max(np.abs(H - phi[:, None, None] * g)) < 1e-6

    def test_prop1_forward_direction(self, sphere1, rng):
        el = random_elements(sphere1, rng, 30)
        sol = metrics.special_solution(1.0)
        assert geometry.check_constant_curvature_form(sphere1, el, 1.0) < 1e-6
        assert np.max(geometry.hessian_residual(sphere1, el, sol)) < 1e-6


class TestDecomposition:
    def test_c1_equator_n2(self):
        spec = metrics.round_sphere(1.0, 2)
        res = geometry.check_decomposition(spec, LineElement([math.pi / 2, 0.2], [0.5, 0.8]),
                                           metrics.special_solution(1.0))
        assert max(res.as_dict().values()) < 1e-6

    def test_c2_quarter_n3(self, rng):
        spec = metrics.round_sphere(2.0, 3)
        x = np.array([math.pi / 4, 0.7, 0.1])
        res = geometry.check_decomposition(spec, LineElement(x, rng.standard_normal(3)),
                                           metrics.special_solution(4.0))
        assert max(res.as_dict().values()) < 1e-6
        assert res.block3_substituted < 1e-6

    def test_per_element(self, rng):
        spec = metrics.round_sphere(1.0, 3)
        el = random_elements(spec, rng, 7)
        res = geometry.check_decomposition(spec, el, metrics.special_solution(1.0), per_element=True)
        assert res.block3.shape == (7,) and res.chain.shape == (7,)

    def test_blocks_hold_for_finsler_fiber(self, rng):
        spec = load_fixture("sphere_randers_fiber")
        res = geometry.check_decomposition(spec, random_elements(spec, rng, 10), metrics.special_solution(1.0))
        assert max(res.block1, res.block2, res.block3, res.chain, res.metric_block) < 1e-6
        assert res.block3_substituted > 0.1

    def test_requires_sine_warp(self, flat2):
        with pytest.raises(UnsupportedCaseError):
            geometry.check_decomposition(flat2, LineElement([0.0, 0.0], [1.0, 0.0]), metrics.special_solution(1.0))

    def test_requires_matching_C(self, sphere1):
        with pytest.raises(UnsupportedCaseError):
            geometry.check_decomposition(sphere1, LineElement([1.0, 0.0], [1.0, 1.0]), metrics.special_solution(4.0))

    def test_pole(self, sphere1):
        with pytest.raises(DomainError):
            geometry.check_decomposition(sphere1, LineElement([0.001, 0.0], [1.0, 1.0]),
                                         metrics.special_solution(1.0))


class TestTorsion:
    @pytest.mark.parametrize("name", ["riemann_bump", "sphere3_c2", "flat_polar"])
    def test_riemannian_cartan_vanishes(self, name, rng):
        spec = load_fixture(name)
        assert np.max(np.abs(geometry.cartan_tensor(spec, random_elements(spec, rng, 20)))) < 1e-10

    def test_randers_cartan_nonzero(self, randers_bump, rng):
        assert np.max(np.abs(geometry.cartan_tensor(randers_bump, random_elements(randers_bump, rng, 5)))) > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-1.0, 1.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-3, 3))
def test_sphere_flag_curvature_property(t, u, y1, y2, X1, X2):
    spec = metrics.round_sphere(1.0, 2)
    y, X = np.array([y1, y2]), np.array([X1, X2])
    ny, nX = np.linalg.norm(y), np.linalg.norm(X)
    if min(ny, nX) < 1e-3 or abs(y1 * X2 - y2 * X1) <= 1e-2 * ny * nX:
        return
    K = geometry.flag_curvature(spec, LineElement([t, u], y), X)
    assert K == pytest.approx(1.0, abs=1e-6)
