"""Independent numerical oracles.

Nothing here touches the jet pipeline except :func:`fd_hconn`, which
deliberately reuses jet values of g and N and only replaces the outer
derivatives by finite differences.

* Richardson-extrapolated central differences (step ``h``, two levels).
* Classical Christoffel symbols, Riemann tensor and sectional curvature of a
  Riemannian matrix field ``a(x)``, with derivatives of ``a`` taken by finite
  differences and the rest by the textbook formulas.
"""

import numpy as np

from . import geometry
from .metrics import MetricSpec

FD_STEP = 1e-3


def _unit(N, i):
    e = np.zeros(N)
    e[i] = 1.0
    return e


def richardson_gradient(f, z, h: float = FD_STEP) -> np.ndarray:
    """d f / d z_i for array-valued ``f``; result gets a trailing axis of size N.

    ``z`` has shape (..., N); ``f(z)`` must return shape (...,) + out.
    """
    z = np.asarray(z, dtype=float)
    N = z.shape[-1]

    def central(step):
        cols = [(f(z + step * _unit(N, i)) - f(z - step * _unit(N, i))) / (2 * step) for i in range(N)]
        return np.stack(cols, axis=-1)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def richardson_hessian(f, z, h: float = FD_STEP) -> np.ndarray:
    """Second derivatives d^2 f / dz_i dz_j, trailing axes (N, N)."""
    z = np.asarray(z, dtype=float)
    N = z.shape[-1]

    def central(step):
        rows = []
        for i in range(N):
            ei = step * _unit(N, i)
            row = []
            for j in range(N):
                ej = step * _unit(N, j)
                row.append(
                    (f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej) + f(z - ei - ej)) / (4 * step * step)
                )
            rows.append(np.stack(row, axis=-1))
        return np.stack(rows, axis=-2)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def fd_F2_derivatives(spec: MetricSpec, x, y, h: float = FD_STEP):
    """(gradient, Hessian) of F^2 in the 2n variables (x, y) by finite differences."""
    n = spec.dimension
    z = np.concatenate([np.asarray(x, float), np.asarray(y, float)], axis=-1)

    def F2(zz):
        return np.asarray(spec.F2(zz[..., :n], zz[..., n:]), dtype=float)

    return richardson_gradient(F2, z, h), richardson_hessian(F2, z, h)


class ChristoffelOracle:
    """Textbook Riemannian geometry of a matrix field ``a(x)``.

    ``a`` maps points of shape (..., n) to matrices (..., n, n).
    """

    def __init__(self, a, h: float = FD_STEP):
        self.a = a
        self.h = h

    def christoffel(self, x):
        """Gamma^i_jk = 1/2 a^il (d_j a_lk + d_k a_jl - d_l a_jk)."""
        x = np.asarray(x, dtype=float)
        ainv = np.linalg.inv(self.a(x))
        da = richardson_gradient(self.a, x, self.h)  # [l, k, j] = d_j a_lk
        s = np.einsum("...lkj->...ljk", da) + np.einsum("...jlk->...ljk", da) - np.einsum("...jkl->...ljk", da)
        return 0.5 * np.einsum("...il,...ljk->...ijk", ainv, s)

    def christoffel_derivative(self, x):
        """d_m Gamma^i_jk as [i, j, k, m]."""
        x = np.asarray(x, dtype=float)
        a = self.a(x)
        ainv = np.linalg.inv(a)
        da = richardson_gradient(self.a, x, self.h)  # [l, k, j]
        dda = richardson_hessian(self.a, x, self.h)  # [l, k, j, m]
        s = np.einsum("...lkj->...ljk", da) + np.einsum("...jlk->...ljk", da) - np.einsum("...jkl->...ljk", da)
        ds = (
            np.einsum("...lkjm->...ljkm", dda)
            + np.einsum("...jlkm->...ljkm", dda)
            - np.einsum("...jklm->...ljkm", dda)
        )
        dainv = -np.einsum("...ip,...pqm,...ql->...ilm", ainv, da, ainv)
        return 0.5 * (np.einsum("...ilm,...ljk->...ijkm", dainv, s) + np.einsum("...il,...ljkm->...ijkm", ainv, ds))

    def riemann(self, x):
        """R^i_hjk = d_j Gamma^i_kh - d_k Gamma^i_jh + Gamma^i_je Gamma^e_kh - Gamma^i_ke Gamma^e_jh."""
        gam = self.christoffel(x)
        dgam = self.christoffel_derivative(x)  # [i, a, b, m] = d_m Gamma^i_ab
        return (
            np.einsum("...ikhj->...ihjk", dgam)
            - np.einsum("...ijhk->...ihjk", dgam)
            + np.einsum("...ije,...ekh->...ihjk", gam, gam)
            - np.einsum("...ike,...ejh->...ihjk", gam, gam)
        )

    def sectional_curvature(self, x, y, X):
        """g(R(X, y) y, X) / (|X|^2 |y|^2 - g(X, y)^2)."""
        a = self.a(np.asarray(x, float))
        R = self.riemann(x)
        num = np.einsum("...il,...ihjk,...h,...j,...k,...l->...", a, R, y, X, y, X)
        gyy = np.einsum("...i,...ij,...j->...", y, a, y)
        gXX = np.einsum("...i,...ij,...j->...", X, a, X)
        gXy = np.einsum("...i,...ij,...j->...", X, a, y)
        return num / (gyy * gXX - gXy**2)

    def spray(self, x, y):
        """G^i = 1/2 Gamma^i_jk y^j y^k."""
        return 0.5 * np.einsum("...ijk,...j,...k->...i", self.christoffel(x), y, y)


def christoffel_oracle(spec: MetricSpec, h: float = FD_STEP) -> ChristoffelOracle:
    """Oracle for a Riemannian spec, driven by its numeric ``riemannian_matrix``."""
    return ChristoffelOracle(spec.riemannian_matrix, h)


def fd_hconn(spec: MetricSpec, x, y, h: float = FD_STEP) -> np.ndarray:
    """Gamma^i_jk rebuilt from the delta-derivative definition.

    g and N are jet values; their x- and y-derivatives are Richardson
    differences, so this checks the assembly of delta_j and Gamma.
    """
    n = spec.dimension
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def g_of(z):
        return geometry.g_values(spec, z[..., :n], z[..., n:])

    z = np.concatenate([x, y], axis=-1)
    dg = richardson_gradient(g_of, z, h)  # [l, k, v]
    dgx, dgy = dg[..., :n], dg[..., n:]
    _, N = geometry.spray_and_nconn(spec, x, y)
    delta = dgx - np.einsum("...mj,...lkm->...lkj", N, dgy)  # [l, k, j] = delta_j g_lk
    s = np.einsum("...lkj->...ljk", delta) + np.einsum("...jlk->...ljk", delta) - np.einsum("...jkl->...ljk", delta)
    ginv = np.linalg.inv(g_of(z))
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, s)


def _rel_maxnorm(a, b) -> float:
    """max |a - b| relative to the max-norm of the reference ``b`` (floored at 1)."""
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def jet_vs_richardson(spec: MetricSpec, x, y, h: float = FD_STEP) -> dict:
    """Relative deviation of jet first/second partials of F^2 from Richardson differences."""
    D1, D2 = geometry._F2_derivatives(spec, x, y, 2)
    fd1, fd2 = fd_F2_derivatives(spec, x, y, h)
    return {"gradient": _rel_maxnorm(D1, fd1), "hessian": _rel_maxnorm(D2, fd2)}


def riemannian_vs_christoffel(spec: MetricSpec, el, X, h: float = FD_STEP) -> dict:
    """Relative deviation of the Finsler pipeline from the classical oracle on a Riemannian spec."""
    orc = christoffel_oracle(spec, h)
    fr = geometry.horizontal_connection(spec, el)
    return {
        "spray": _rel_maxnorm(fr.spray, orc.spray(el.x, el.y)),
        "christoffel": _rel_maxnorm(fr.hconn, orc.christoffel(el.x)),
        "riemann": _rel_maxnorm(geometry.h_curvature_tensor(spec, el, convention="standard"), orc.riemann(el.x)),
        "flag_curvature": _rel_maxnorm(geometry.flag_curvature(spec, el, X), orc.sectional_curvature(el.x, el.y, X)),
    }
