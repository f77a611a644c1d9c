"""Connection and curvature of a Finsler metric at a line element.

Everything is computed from one jet of ``F^2`` in the ``2n`` variables
``(x, y)``.  Each differentiation lowers the jet order by one, so

* order 2 gives g_ij and the spray G^i,
* order 3 adds N^i_j, the Cartan tensor and the horizontal connection,
* order 4 adds the Riemann curvature R^i_k and the h-curvature R^i_hjk.

Index conventions
-----------------
``horizontal_connection(...).hconn[i, j, k]`` is Gamma^i_jk.

The h-curvature is first assembled in the *standard* slot order
``T[i, h, j, k]`` (vector slot ``h``, antisymmetric in ``j, k``)::

    T^i_hjk = d_j Gamma^i_hk - d_k Gamma^i_hj + Gamma^i_mj Gamma^m_hk
              - Gamma^i_mk Gamma^m_hj + C^i_hm R^m_jk

with ``d_j = d/dx^j - N^m_j d/dy^m`` and ``R^m_jk = d_j N^m_k - d_k N^m_j``.
The constant-curvature form ``K (delta^i_h g_jk - delta^i_j g_hk)`` and the
adapted-coordinate block formulas are written in a different slot order,
``P[i, h, j, k] = T[i, k, h, j]`` (antisymmetric in ``h, j``).  With it the
round sphere gives ``P = +C^2 (...)`` and the flag curvature is positive, so
no extra global sign is needed.  :func:`h_curvature_tensor` returns ``P`` by
default (``convention="form"``) and ``T`` with ``convention="standard"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .errors import DegenerateFlagError, InvalidMetricError, UnsupportedCaseError
from .metrics import LineElement, MetricSpec, SpecialSolution, Warped, _check_element


def _trail(j: jets.Jet, perm):
    """Permute the trailing ``len(perm)`` tensor axes of a jet."""
    b = j.ndim - len(perm)
    return j.transpose(tuple(range(b)) + tuple(b + p for p in perm))


class LocalJets:
    """Lazily evaluated geometric jets at a batch of line elements.

    No chart checks happen here; public functions validate first.
    """

    def __init__(self, spec: MetricSpec, x, y, order: int):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = spec.dimension
        self.n = n
        self.order = order
        self.xv = tuple(range(n))
        self.yv = tuple(range(n, 2 * n))
        X = jets.seed(np.concatenate([x, y], axis=-1), order=order)
        self.Y = X[..., n:]
        self.F2 = spec.F2(X[..., :n], X[..., n:])

    def _need(self, order, what):
        if self.order < order:
            raise ValueError(f"{what} needs jet order {order}, pipeline built with {self.order}")

    @cached_property
    def g(self):
        self._need(2, "fundamental tensor")
        return 0.5 * self.F2.grad(self.yv).grad(self.yv)

    @cached_property
    def ginv(self):
        return jets.inv(self.g)

    @cached_property
    def spray(self):
        dx = self.F2.grad(self.xv)
        mixed = self.F2.grad(self.yv).grad(self.xv)  # [l, k] = d_xk d_yl F^2
        term = jets.einsum("lk,k->l", mixed, self.Y) - dx
        return 0.25 * jets.einsum("il,l->i", self.ginv, term)

    @cached_property
    def nconn(self):
        self._need(3, "nonlinear connection")
        return self.spray.grad(self.yv)  # [i, j] = dG^i/dy^j

    @cached_property
    def cartan(self):
        self._need(3, "Cartan tensor")
        return 0.5 * self.g.grad(self.yv)

    def delta(self, field: jets.Jet) -> jets.Jet:
        """Horizontal derivatives, appended as a trailing index ``j``."""
        dx = field.grad(self.xv)
        dy = field.grad(self.yv)
        k = field.ndim - (self.Y.ndim - 1)  # tensor rank of the field
        letters = "abcdef"[:k]
        return dx - jets.einsum(f"mj,{letters}m->{letters}j", self.nconn, dy)

    @cached_property
    def hconn(self):
        dg = self.delta(self.g)  # [l, k, j] = delta_j g_lk
        s = _trail(dg, (0, 2, 1)) + _trail(dg, (1, 0, 2)) - _trail(dg, (2, 0, 1))
        return 0.5 * jets.einsum("il,ljk->ijk", self.ginv, s)

    @cached_property
    def h_curvature_standard(self):
        self._need(4, "h-curvature")
        gam = self.hconn
        dgam = self.delta(gam)  # [i, h, k, j] = delta_j Gamma^i_hk
        dn = self.delta(self.nconn)  # [m, k, j] = delta_j N^m_k
        rjk = dn - _trail(dn, (0, 2, 1))  # [m, j, k] = delta_j N^m_k - delta_k N^m_j
        rjk = _trail(rjk, (0, 2, 1))
        cup = jets.einsum("il,lhm->ihm", self.ginv, self.cartan)
        t = (
            _trail(dgam, (0, 1, 3, 2))
            - dgam
            + jets.einsum("imj,mhk->ihjk", gam, gam)
            - jets.einsum("imk,mhj->ihjk", gam, gam)
            + jets.einsum("ihm,mjk->ihjk", cup, rjk)
        )
        return t.value

    @cached_property
    def riemann_flag(self):
        self._need(4, "Riemann curvature")
        G = self.spray
        gx = G.grad(self.xv)
        gxy = gx.grad(self.yv).value  # [i, j, k] = d_yk d_xj G^i
        gyy = self.nconn.grad(self.yv).value  # [i, j, k] = d_yk d_yj G^i
        N = self.nconn.value
        y = self.Y.value
        return (
            2.0 * gx.value
            - np.einsum("...j,...ijk->...ik", y, gxy)
            + 2.0 * np.einsum("...j,...ijk->...ik", G.value, gyy)
            - np.einsum("...ij,...jk->...ik", N, N)
        )


def _pipeline(spec, el: LineElement, order: int) -> LocalJets:
    _check_element(spec, el)
    return LocalJets(spec, el.x, el.y, order)


def _checked_g(g):
    if np.any(np.linalg.eigvalsh(g)[..., 0] <= 0):
        raise InvalidMetricError("fundamental tensor is not positive definite (metric not strongly convex)")
    return g


@dataclass(frozen=True, eq=False)
class ConnectionFrame:
    """First-order geometric data at a line element (arrays may be batched)."""

    g: np.ndarray
    g_inv: np.ndarray
    cartan: np.ndarray
    spray: np.ndarray
    nconn: np.ndarray
    hconn: np.ndarray


@dataclass(frozen=True, eq=False)
class CurvatureData:
    riemann_flag: np.ndarray
    h_curvature: np.ndarray
    flag_value: np.ndarray


def fundamental_tensor(spec: MetricSpec, el: LineElement) -> np.ndarray:
    """g_ij = (1/2) d^2 F^2 / dy^i dy^j."""
    return _checked_g(_pipeline(spec, el, 2).g.value)


def cartan_tensor(spec: MetricSpec, el: LineElement) -> np.ndarray:
    """C_ijk = (1/2) d g_ij / dy^k (not scaled by F)."""
    return _pipeline(spec, el, 3).cartan.value


def spray(spec: MetricSpec, el: LineElement) -> np.ndarray:
    """Geodesic coefficients G^i; geodesics solve x'' + 2 G(x, x') = 0."""
    p = _pipeline(spec, el, 2)
    _checked_g(p.g.value)
    return p.spray.value


def horizontal_connection(spec: MetricSpec, el: LineElement) -> ConnectionFrame:
    p = _pipeline(spec, el, 3)
    g = _checked_g(p.g.value)
    return ConnectionFrame(
        g=g,
        g_inv=p.ginv.value,
        cartan=p.cartan.value,
        spray=p.spray.value,
        nconn=p.nconn.value,
        hconn=p.hconn.value,
    )


def riemann_flag_operator(spec: MetricSpec, el: LineElement) -> np.ndarray:
    """R^i_k of the spray; ``R_y(X) = R^i_k X^k`` and ``R_y(y) = 0``."""
    p = _pipeline(spec, el, 4)
    _checked_g(p.g.value)
    return p.riemann_flag


def _flag_quotient(g, R, y, X):
    gyy = np.einsum("...i,...ij,...j->...", y, g, y)
    gXX = np.einsum("...i,...ij,...j->...", X, g, X)
    gXy = np.einsum("...i,...ij,...j->...", X, g, y)
    denom = gyy * gXX - gXy**2
    scale = np.sum(X * X, axis=-1) * np.sum(y * y, axis=-1)
    if np.any((denom < 1e-10 * scale) | (scale == 0)):
        raise DegenerateFlagError("transverse edge X is zero or parallel to the flagpole y")
    RX = np.einsum("...ik,...k->...i", R, X)
    return np.einsum("...i,...ij,...j->...", RX, g, X) / denom


def flag_curvature(spec: MetricSpec, el: LineElement, X) -> np.ndarray:
    """K(x, y, X) = g_y(R_y X, X) / (g_y(y,y) g_y(X,X) - g_y(X,y)^2)."""
    X = np.broadcast_to(np.asarray(X, dtype=float), el.x.shape)
    p = _pipeline(spec, el, 4)
    g = _checked_g(p.g.value)
    return _flag_quotient(g, p.riemann_flag, el.y, X)


def curvature_data(spec: MetricSpec, el: LineElement, X) -> CurvatureData:
    X = np.broadcast_to(np.asarray(X, dtype=float), el.x.shape)
    p = _pipeline(spec, el, 4)
    g = _checked_g(p.g.value)
    return CurvatureData(
        riemann_flag=p.riemann_flag,
        h_curvature=_to_form(p.h_curvature_standard),
        flag_value=_flag_quotient(g, p.riemann_flag, el.y, X),
    )


def _to_form(T):
    # P[i, h, j, k] = T[i, k, h, j]
    return np.einsum("...ikhj->...ihjk", T)


def h_curvature_tensor(spec: MetricSpec, el: LineElement, convention: str = "form") -> np.ndarray:
    """h-curvature of the Cartan connection, indexed ``[i, h, j, k]``.

    ``convention="form"`` is the slot order in which constant curvature
    reads ``K (delta^i_h g_jk - delta^i_j g_hk)``; ``"standard"`` is the
    order of the defining formula (see module docstring).
    """
    if convention not in ("form", "standard"):
        raise ValueError("convention must be 'form' or 'standard'")
    T = _pipeline(spec, el, 4).h_curvature_standard
    return _to_form(T) if convention == "form" else T


def constant_curvature_form(g: np.ndarray, K: float) -> np.ndarray:
    """K (delta^i_h g_jk - delta^i_j g_hk) as an ``[i, h, j, k]`` array."""
    n = g.shape[-1]
    eye = np.eye(n)
    return K * (np.einsum("ih,...jk->...ihjk", eye, g) - np.einsum("ij,...hk->...ihjk", eye, g))


def check_constant_curvature_form(spec: MetricSpec, el: LineElement, K: float) -> float:
    """max |R^i_hjk - K (delta^i_h g_jk - delta^i_j g_hk)| over all indices and the batch."""
    p = _pipeline(spec, el, 4)
    P = _to_form(p.h_curvature_standard)
    return float(np.max(np.abs(P - constant_curvature_form(p.g.value, K))))


def horizontal_hessian(spec: MetricSpec, el: LineElement, sol: SpecialSolution, rho=None) -> np.ndarray:
    """Hess_ij = d_i d_j rho - Gamma^k_ij(x, y) d_k rho.

    ``rho`` defaults to ``sol.rho(x^1)``; a callable on the list of
    coordinate components may be passed instead.
    """
    p = _pipeline(spec, el, 3)
    n = spec.dimension
    X = jets.seed(el.x, order=2)
    comps = [X[..., i] for i in range(n)]
    r = sol.rho(comps[0]) if rho is None else rho(comps)
    dr = r.grad(range(n))
    return dr.grad(range(n)).value - np.einsum("...kij,...k->...ij", p.hconn.value, dr.value)


def hessian_residual(spec: MetricSpec, el: LineElement, sol: SpecialSolution) -> np.ndarray:
    """|Hess rho - (-K rho + B) g| maximised over indices, per line element."""
    hess = horizontal_hessian(spec, el, sol)
    g = fundamental_tensor(spec, el)
    phi = np.asarray(jets.value(sol.phi(el.x[..., 0])))
    return np.max(np.abs(hess - phi[..., None, None] * g), axis=(-2, -1))


@dataclass(frozen=True)
class DecompositionResidual:
    """Max absolute residual of each adapted-coordinate curvature identity."""

    block1: float
    block2: float
    block3: float
    block3_substituted: float
    chain: float
    metric_block: float

    def as_dict(self):
        return {
            "Eq-2.21-block1": self.block1,
            "Eq-2.21-block2": self.block2,
            "Eq-2.21-block3": self.block3,
            "Prop-1-block3-substituted": self.block3_substituted,
            "Prop-1-chain": self.chain,
            "Eq-2": self.metric_block,
        }


def _amax(a, k):
    """Max |a| over the last ``k`` axes (keeps batch axes)."""
    return np.max(np.abs(a), axis=tuple(range(-k, 0))) if k else np.abs(a)


def check_decomposition(
    spec: Warped, el: LineElement, sol: SpecialSolution, per_element: bool = False
) -> DecompositionResidual:
    """Compare the numerical h-curvature with the three block formulas.

    Blocks (index 1 is t, Greek indices run over the fiber)::

        R^a_1c1 = -R^a_c11 = (rho'''/rho') delta^a_c
        R^1_1cb = -R^1_c1b = -rho' rho''' f_cb
        R^a_dcb = Rbar^a_dcb - rho''^2 (f_cb delta^a_d - f_db delta^a_c)

    with f the fiber's fundamental tensor and Rbar its h-curvature, both
    evaluated at the fiber part ``(u, yhat)`` of the line element.  With
    ``per_element`` the fields are arrays over the batch instead of maxima.
    """
    if not isinstance(spec, Warped) or spec.warp != "sine":
        raise UnsupportedCaseError("decomposition check needs a sine-warped metric")
    if sol.C is None or not np.isclose(sol.C, spec.C, rtol=1e-14):
        raise UnsupportedCaseError("special solution frequency does not match the metric's C")
    p = _pipeline(spec, el, 4)
    P = _to_form(p.h_curvature_standard)
    g = p.g.value
    n = spec.dimension
    t = el.x[..., 0]
    d1, d2, d3 = (sol.derivative(t, k)[..., None, None] for k in (1, 2, 3))

    fiber_el = LineElement(el.x[..., 1:], el.y[..., 1:])
    fb = LocalJets(spec.fiber, fiber_el.x, fiber_el.y, 4)
    f = fb.g.value
    Rbar = _to_form(fb.h_curvature_standard)
    eye = np.eye(n - 1)

    ratio = d3 / d1
    b1 = np.maximum(
        _amax(P[..., 1:, 0, 1:, 0] - ratio * eye, 2),
        _amax(P[..., 1:, 1:, 0, 0] + ratio * eye, 2),
    )
    b2 = np.maximum(
        _amax(P[..., 0, 0, 1:, 1:] + d1 * d3 * f, 2),
        _amax(P[..., 0, 1:, 0, 1:] - d1 * d3 * f, 2),
    )
    d2sq = (d2**2)[..., None, None]
    form_f = np.einsum("ad,...cb->...adcb", eye, f) - np.einsum("ac,...db->...adcb", eye, f)
    b3 = _amax(P[..., 1:, 1:, 1:, 1:] - (Rbar - d2sq * form_f), 4)
    gf = g[..., 1:, 1:]
    form_g = np.einsum("ad,...cb->...adcb", eye, gf) - np.einsum("ac,...db->...adcb", eye, gf)
    b3s = _amax(P[..., 1:, 1:, 1:, 1:] - sol.K * form_g, 4)
    chain = np.abs(-ratio[..., 0, 0] - sol.K)
    metric_block = np.maximum(
        np.maximum(_amax(gf - d1**2 * f, 2), np.abs(g[..., 0, 0] - 1.0)),
        _amax(g[..., 0:1, 1:], 2),
    )
    parts = (b1, b2, b3, b3s, chain, metric_block)
    if per_element:
        return DecompositionResidual(*parts)
    return DecompositionResidual(*(float(np.max(v)) for v in parts))


# -- fast unchecked paths used by the integrator ---------------------------------

def _F2_derivatives(spec: MetricSpec, x, y, order: int):
    """Value tensors of the partials of F^2 in (x, y), degrees 1..order."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = spec.dimension
    X = jets.seed(np.concatenate([x, y], axis=-1), order=order)
    F2 = spec.F2(X[..., :n], X[..., n:])
    return [F2.derivative_tensor(d) for d in range(1, order + 1)]


def spray_values(spec: MetricSpec, x, y) -> np.ndarray:
    """G^i at a batch of line elements, by plain linear algebra on F^2 partials.

    Used by the geodesic integrator, where jet-algebra overhead dominates.
    """
    return spray_and_nconn(spec, x, y, nconn=False)[0]


def spray_and_nconn(spec: MetricSpec, x, y, nconn: bool = True):
    """(G, N) values; N^i_j = dG^i/dy^j via the derivative of g^{-1}."""
    n = spec.dimension
    y = np.asarray(y, dtype=float)
    D = _F2_derivatives(spec, x, y, 3 if nconn else 2)
    D1, D2 = D[0], D[1]
    g = 0.5 * D2[..., n:, n:]
    M = D2[..., n:, :n]  # [l, k] = d_yl d_xk F^2
    r = np.einsum("...lk,...k->...l", M, y) - D1[..., :n]
    ginv = np.linalg.inv(g)
    G = 0.25 * np.einsum("...il,...l->...i", ginv, r)
    if not nconn:
        return G, None
    D3 = D[2]
    dg = 0.5 * D3[..., n:, n:, n:]  # [l, m, j] = d_yj g_lm
    # d_yj r_l = d_yj d_yl d_xk F^2 y^k + M_lj - d_yj d_xl F^2
    dr = (
        np.einsum("...ljk,...k->...lj", D3[..., n:, n:, :n], y)
        + M
        - np.swapaxes(D2[..., n:, :n], -1, -2)
    )
    inner = 0.25 * dr - np.einsum("...lmj,...m->...lj", dg, G)
    N = np.einsum("...il,...lj->...ij", ginv, inner)
    return G, N


def g_values(spec: MetricSpec, x, y) -> np.ndarray:
    n = spec.dimension
    return 0.5 * _F2_derivatives(spec, x, y, 2)[1][..., n:, n:]
