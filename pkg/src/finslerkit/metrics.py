"""Finsler metric families and the one-variable special solution.

Three declarative families are supported:

* :class:`Riemannian` -- ``F = sqrt(a_ij(x) y^i y^j)``
* :class:`Randers`    -- ``F = sqrt(a_ij(x) y^i y^j) + b_i y^i``
* :class:`Warped`     -- ``F^2 = (y^1)^2 + w(t)^2 Fbar^2(u, yhat)`` in adapted
  coordinates ``(t, u^2, ..., u^n)``, with ``w(t) = sin(C t)`` (the sphere
  family) or ``w(t) = t`` (flat polar cones, used as a negative control).

Every family implements ``F2(x, y)`` on lists of coordinate components, which
may be floats, numpy arrays or :class:`~finslerkit.jets.Jet` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets
from .errors import DomainError, InvalidMetricError, TrivialSolutionError, UnsupportedCaseError

POLE_MARGIN = 0.05
MIN_Y_NORM = 1e-8
DEFAULT_BOX = (-1.0, 1.0)
_MARGIN_SLACK = 1e-9


def _components(v):
    if isinstance(v, jets.Jet):
        return [v[..., i] for i in range(v.shape[-1])]
    if isinstance(v, (list, tuple)):
        return list(v)
    v = np.asarray(v, dtype=float)
    return [v[..., i] for i in range(v.shape[-1])]


def _quadratic(a, y):
    """sum_ij a[i][j] y_i y_j with symmetric ``a`` (nested lists or array)."""
    n = len(y)
    total = 0.0
    for i in range(n):
        total = total + a[i][i] * (y[i] * y[i])
        for j in range(i + 1, n):
            total = total + 2.0 * a[i][j] * (y[i] * y[j])
    return total


@dataclass(frozen=True)
class Bump:
    """Gaussian bump ``amplitude * exp(-|x - center|^2 / width^2) * matrix``."""

    amplitude: float
    center: tuple
    width: float
    matrix: tuple

    def factor(self, x):
        r2 = 0.0
        for xi, ci in zip(x, self.center):
            d = xi - ci
            r2 = r2 + d * d
        return self.amplitude * jets.exp(r2 * (-1.0 / self.width**2))

    def to_dict(self):
        return {
            "amplitude": self.amplitude,
            "center": list(self.center),
            "width": self.width,
            "matrix": [list(r) for r in self.matrix],
        }


def _as_matrix(m):
    return tuple(tuple(float(v) for v in row) for row in m)


class MetricSpec:
    """Common interface of the metric families.

    Subclasses provide ``dimension``, ``chart_domain`` and ``F2``.
    """

    dimension: int
    chart_domain: Optional[tuple]

    def F2(self, x, y):  # pragma: no cover - abstract
        raise NotImplementedError

    # -- chart handling -----------------------------------------------------
    def check_point(self, x) -> None:
        """Raise :class:`DomainError` if any point of ``x`` (shape (..., n)) is off-chart."""
        if self.chart_domain is None:
            return
        x = np.asarray(x, dtype=float)
        for i, (lo, hi) in enumerate(self.chart_domain):
            xi = x[..., i]
            if np.any(xi < lo - _MARGIN_SLACK) or np.any(xi > hi + _MARGIN_SLACK):
                raise DomainError(f"coordinate {i + 1} outside chart interval [{lo}, {hi}]")

    def contains(self, x) -> np.ndarray:
        """Boolean mask (over leading axes) of points inside the chart."""
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool)
        if self.chart_domain is not None:
            for i, (lo, hi) in enumerate(self.chart_domain):
                ok &= (x[..., i] >= lo - _MARGIN_SLACK) & (x[..., i] <= hi + _MARGIN_SLACK)
        return ok

    def sampling_box(self):
        if self.chart_domain is not None:
            return [tuple(b) for b in self.chart_domain]
        return [DEFAULT_BOX] * self.dimension

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        box = np.array(self.sampling_box(), dtype=float)
        # shrink away from the box edge so derivative stencils stay inside
        lo = box[:, 0] + 0.05 * (box[:, 1] - box[:, 0])
        hi = box[:, 1] - 0.05 * (box[:, 1] - box[:, 0])
        return lo + (hi - lo) * rng.random((count, self.dimension))

    # -- optional structure ------------------------------------------------
    @property
    def is_riemannian(self) -> bool:
        return False

    def riemannian_matrix(self, x) -> np.ndarray:
        raise UnsupportedCaseError(f"{type(self).__name__} metric is not Riemannian")

    def expected_flag_curvature(self) -> Optional[float]:
        """Known constant flag curvature of the family, or None if not known."""
        return None

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    # value semantics through the serialized form; callable-defined specs compare by identity
    def _key(self):
        try:
            return repr(self.to_dict())
        except UnsupportedCaseError:
            return None

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented
        k = self._key()
        return k is not None and k == other._key()

    def __hash__(self):
        k = self._key()
        return hash(k) if k is not None else id(self)


def _domain_tuple(chart_domain, dimension):
    if chart_domain is None:
        return None
    dom = tuple((float(lo), float(hi)) for lo, hi in chart_domain)
    if len(dom) != dimension:
        raise ValueError(f"chart_domain has {len(dom)} intervals for dimension {dimension}")
    if any(lo >= hi for lo, hi in dom):
        raise ValueError("chart_domain intervals must satisfy lo < hi")
    return dom


class _QuadraticField:
    """Shared a_ij(x) machinery for Riemannian and Randers metrics."""

    def _init_field(self, a_matrix, a_bump, a_func, dimension):
        if a_func is None and a_matrix is None:
            raise ValueError("need a_matrix or a_func")
        if a_matrix is not None:
            a = _as_matrix(a_matrix)
            n = len(a)
            if any(len(r) != n for r in a):
                raise ValueError("a_matrix must be square")
            if not np.allclose(np.array(a), np.array(a).T):
                raise InvalidMetricError("a_matrix must be symmetric")
            object.__setattr__(self, "a_matrix", a)
        else:
            if dimension is None:
                raise ValueError("dimension is required with a_func")
            n = int(dimension)
        if a_bump is not None:
            if not isinstance(a_bump, Bump):
                a_bump = Bump(
                    float(a_bump["amplitude"]),
                    tuple(float(c) for c in a_bump["center"]),
                    float(a_bump["width"]),
                    _as_matrix(a_bump["matrix"]),
                )
            if len(a_bump.center) != n or len(a_bump.matrix) != n:
                raise ValueError("bump center/matrix do not match the dimension")
            object.__setattr__(self, "a_bump", a_bump)
        if dimension is not None and int(dimension) != n:
            raise ValueError(f"dimension {dimension} does not match a_matrix size {n}")
        object.__setattr__(self, "dimension", n)

    def a(self, x):
        """a_ij at ``x`` (list of components) as nested lists."""
        if self.a_func is not None:
            return self.a_func(x)
        n = self.dimension
        rows = [[self.a_matrix[i][j] for j in range(n)] for i in range(n)]
        if self.a_bump is not None:
            f = self.a_bump.factor(x)
            M = self.a_bump.matrix
            rows = [[rows[i][j] + f * M[i][j] for j in range(n)] for i in range(n)]
        return rows

    def a_numeric(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rows = self.a(_components(x))
        n = self.dimension
        out = np.empty(x.shape[:-1] + (n, n))
        for i in range(n):
            for j in range(n):
                out[..., i, j] = rows[i][j]
        return out

    @property
    def is_constant(self) -> bool:
        return self.a_func is None and self.a_bump is None

    def _validate_field(self):
        pts = _validation_points(self)
        a = self.a_numeric(pts)
        if not np.allclose(a, np.swapaxes(a, -1, -2), atol=1e-12):
            raise InvalidMetricError("a_ij(x) is not symmetric")
        if np.any(np.linalg.eigvalsh(a)[..., 0] <= 0):
            raise InvalidMetricError("a_ij(x) is not positive definite on the chart")
        return pts, a

    def _field_dict(self):
        d = {}
        if self.a_matrix is not None:
            d["a_matrix"] = [list(r) for r in self.a_matrix]
        if self.a_bump is not None:
            d["a_bump"] = self.a_bump.to_dict()
        if self.a_func is not None:
            raise UnsupportedCaseError("metrics defined by a Python callable cannot be serialized")
        return d


def _validation_points(spec: MetricSpec) -> np.ndarray:
    box = np.array(spec.sampling_box(), dtype=float)
    corners = np.array(np.meshgrid(*[[0.0, 0.5, 1.0]] * spec.dimension, indexing="ij"))
    frac = corners.reshape(spec.dimension, -1).T
    return box[:, 0] + frac * (box[:, 1] - box[:, 0])


@dataclass(frozen=True, eq=False)
class Riemannian(_QuadraticField, MetricSpec):
    """``F = sqrt(a_ij(x) y^i y^j)``.

    ``a_matrix`` is the constant part, ``a_bump`` an optional Gaussian
    perturbation.  ``a_func`` (Python API only) replaces both: it receives the
    list of coordinate components and returns nested ``n x n`` lists; it must
    use :mod:`finslerkit.jets` functions so that jets propagate.
    """

    a_matrix: Optional[tuple] = None
    a_bump: Optional[Bump] = None
    a_func: Optional[Callable] = None
    dimension: Optional[int] = None
    chart_domain: Optional[tuple] = None

    def __post_init__(self):
        self._init_field(self.a_matrix, self.a_bump, self.a_func, self.dimension)
        object.__setattr__(self, "chart_domain", _domain_tuple(self.chart_domain, self.dimension))
        self._validate_field()

    def F2(self, x, y):
        x, y = _components(x), _components(y)
        return _quadratic(self.a(x), y)

    @property
    def is_riemannian(self):
        return True

    def riemannian_matrix(self, x):
        return self.a_numeric(x)

    def expected_flag_curvature(self):
        return 0.0 if self.is_constant else None

    def to_dict(self):
        d = {"variant": "riemannian", "dimension": self.dimension}
        d.update(self._field_dict())
        d["chart_domain"] = None if self.chart_domain is None else [list(b) for b in self.chart_domain]
        return d


@dataclass(frozen=True, eq=False)
class Randers(_QuadraticField, MetricSpec):
    """``F = alpha + beta`` with ``alpha = sqrt(a_ij y^i y^j)``, ``beta = b_i y^i``.

    Strong convexity requires the alpha-norm of ``b`` to stay below 1; this is
    checked on a grid of chart points at construction.
    """

    a_matrix: Optional[tuple] = None
    b_covector: tuple = ()
    a_bump: Optional[Bump] = None
    a_func: Optional[Callable] = None
    dimension: Optional[int] = None
    chart_domain: Optional[tuple] = None

    def __post_init__(self):
        self._init_field(self.a_matrix, self.a_bump, self.a_func, self.dimension)
        b = tuple(float(v) for v in self.b_covector)
        if len(b) != self.dimension:
            raise ValueError(f"b_covector has length {len(b)}, expected {self.dimension}")
        object.__setattr__(self, "b_covector", b)
        object.__setattr__(self, "chart_domain", _domain_tuple(self.chart_domain, self.dimension))
        _, a = self._validate_field()
        bb = np.einsum("i,...ij,j->...", np.array(b), np.linalg.inv(a), np.array(b))
        if np.any(bb >= 1.0):
            raise InvalidMetricError(
                f"Randers covector has alpha-norm {math.sqrt(bb.max()):.4g} >= 1 on the chart"
            )

    def F2(self, x, y):
        x, y = _components(x), _components(y)
        alpha = jets.sqrt(_quadratic(self.a(x), y))
        beta = 0.0
        for bi, yi in zip(self.b_covector, y):
            beta = beta + bi * yi
        F = alpha + beta
        return F * F

    def expected_flag_curvature(self):
        # constant a and b: a Minkowski norm, flat
        return 0.0 if self.is_constant else None

    def to_dict(self):
        d = {"variant": "randers", "dimension": self.dimension}
        d.update(self._field_dict())
        d["b_covector"] = list(self.b_covector)
        d["chart_domain"] = None if self.chart_domain is None else [list(b) for b in self.chart_domain]
        return d


WARPS = ("sine", "linear")


def _rotate(a, b, k):
    """Coefficients of the k-th derivative of ``a cos(s) + b sin(s)`` (exact quarter turns)."""
    return ((a, b), (b, -a), (-a, -b), (-b, a))[k % 4]


@dataclass(frozen=True, eq=False)
class Warped(MetricSpec):
    """Warped product ``dt^2 + w(t)^2 dsbar^2`` in adapted coordinates.

    With ``warp="sine"``, ``w(t) = sin(C t)`` is rho'(t) for
    ``rho = -cos(C t)/C``; the chart is ``t`` in ``(0, pi/C)`` minus a band of
    ``pole_margin`` (measured in ``C t``) at each pole.  ``warp="linear"``
    gives ``w(t) = t`` (Euclidean polar coordinates when the fiber is a unit
    sphere); its chart is ``t >= pole_margin``.
    """

    C: float = 1.0
    fiber: MetricSpec = None
    warp: str = "sine"
    pole_margin: float = POLE_MARGIN
    t_domain: Optional[tuple] = None

    def __post_init__(self):
        if self.fiber is None:
            raise ValueError("Warped metric needs a fiber metric")
        if not self.C > 0:
            raise ValueError("warp constant C must be positive")
        if self.warp not in WARPS:
            raise ValueError(f"warp must be one of {WARPS}")
        if self.t_domain is not None:
            lo, hi = (float(v) for v in self.t_domain)
            object.__setattr__(self, "t_domain", (lo, hi))
        object.__setattr__(self, "C", float(self.C))

    @property
    def dimension(self):
        return self.fiber.dimension + 1

    @property
    def t_range(self):
        """Admissible closed interval of t (pole bands removed)."""
        m = self.pole_margin
        if self.warp == "sine":
            lo, hi = m / self.C, (math.pi - m) / self.C
        else:
            lo, hi = m, math.inf
        if self.t_domain is not None:
            lo, hi = max(lo, self.t_domain[0]), min(hi, self.t_domain[1])
        return lo, hi

    @property
    def chart_domain(self):
        lo, hi = self.t_range
        fib = self.fiber.chart_domain
        if fib is None:
            fib = ((-math.inf, math.inf),) * self.fiber.dimension
        return ((lo, hi),) + tuple(fib)

    def warp_factor(self, t):
        if self.warp == "sine":
            return jets.sin(t * self.C)
        return t

    def warp_derivative(self, t, k: int = 1):
        t = np.asarray(t, dtype=float)
        if self.warp == "linear":
            return np.ones_like(t) if k == 1 else np.zeros_like(t)
        ca, cb = _rotate(0.0, 1.0, k)
        return self.C**k * (ca * np.cos(self.C * t) + cb * np.sin(self.C * t))

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        t = x[..., 0]
        lo, hi = self.t_range
        if np.any(t < lo - _MARGIN_SLACK) or np.any(t > hi + _MARGIN_SLACK):
            raise DomainError(
                f"t outside [{lo:.6g}, {hi:.6g}]: within pole margin {self.pole_margin} or off-chart"
            )
        self.fiber.check_point(x[..., 1:])

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.t_range
        t = x[..., 0]
        ok = (t >= lo - _MARGIN_SLACK) & (t <= hi + _MARGIN_SLACK)
        return ok & self.fiber.contains(x[..., 1:])

    def sampling_box(self):
        lo, hi = self.t_range
        if not math.isfinite(hi):
            hi = lo + 2.0
        return [(lo, hi)] + list(self.fiber.sampling_box())

    def sample_points(self, rng, count):
        lo, hi = self.t_range
        if not math.isfinite(hi):
            hi = lo + 2.0
        t = lo + (hi - lo) * rng.random(count)
        u = self.fiber.sample_points(rng, count)
        return np.column_stack([t, u])

    def F2(self, x, y):
        x, y = _components(x), _components(y)
        w = self.warp_factor(x[0])
        return y[0] * y[0] + (w * w) * self.fiber.F2(x[1:], y[1:])

    @property
    def is_riemannian(self):
        return self.fiber.is_riemannian

    def riemannian_matrix(self, x):
        x = np.asarray(x, dtype=float)
        fa = self.fiber.riemannian_matrix(x[..., 1:])
        w = np.asarray(jets.value(self.warp_factor(x[..., 0])))
        n = self.dimension
        out = np.zeros(x.shape[:-1] + (n, n))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = (w**2)[..., None, None] * fa
        return out

    def is_round(self) -> bool:
        """True for the sphere family over a round fiber of curvature C^2."""
        if self.warp != "sine":
            return False
        if self.fiber.dimension == 1:
            return isinstance(self.fiber, Riemannian) and self.fiber.is_constant
        return (
            isinstance(self.fiber, Warped)
            and self.fiber.is_round()
            and math.isclose(self.fiber.C, self.C, rel_tol=1e-14)
        )

    def expected_flag_curvature(self):
        if self.is_round():
            return self.C**2
        if self.warp == "linear":
            f = self.fiber
            if f.dimension == 1 and isinstance(f, Riemannian) and f.is_constant:
                return 0.0
            if isinstance(f, Warped) and f.is_round() and math.isclose(f.C, 1.0):
                return 0.0
        return None

    def to_dict(self):
        d = {
            "variant": "warped",
            "dimension": self.dimension,
            "C": self.C,
            "warp": self.warp,
            "fiber": self.fiber.to_dict(),
        }
        if self.pole_margin != POLE_MARGIN:
            d["pole_margin"] = self.pole_margin
        if self.t_domain is not None:
            d["chart_domain"] = [list(self.t_domain)]
        return d


def round_sphere(C: float = 1.0, dimension: int = 2, angle_domain=None) -> Warped:
    """Round n-sphere of radius 1/C in iterated polar coordinates.

    The innermost fiber is the circle of radius 1/C, so every fiber is itself
    a round sphere of curvature C^2.
    """
    if dimension < 2:
        raise ValueError("sphere dimension must be >= 2")
    fiber: MetricSpec = Riemannian(a_matrix=[[1.0 / C**2]], chart_domain=angle_domain)
    for _ in range(dimension - 1):
        fiber = Warped(C=C, fiber=fiber)
    return fiber


def flat(dimension: int = 2, chart_domain=None) -> Riemannian:
    return Riemannian(a_matrix=np.eye(dimension).tolist(), chart_domain=chart_domain)


# -- line elements ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LineElement:
    """A point ``x`` with tangent vector ``y`` (both may carry batch axes)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape[-1:] != y.shape[-1:] or x.ndim == 0:
            raise ValueError(f"x and y must be n-vectors of equal length, got {x.shape}, {y.shape}")
        x, y = np.broadcast_arrays(x, y)
        if np.any(np.linalg.norm(y, axis=-1) < MIN_Y_NORM):
            raise DomainError("tangent vector y must be nonzero (|y| >= 1e-8)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dimension(self):
        return self.x.shape[-1]

    @property
    def batch_shape(self):
        return self.x.shape[:-1]


def _check_element(spec: MetricSpec, el: LineElement):
    if el.dimension != spec.dimension:
        raise ValueError(f"line element of dimension {el.dimension} for a {spec.dimension}-dimensional metric")
    spec.check_point(el.x)


def finsler_function(spec: MetricSpec, el):
    """F(x, y).  ``el`` is a :class:`LineElement` or an ``(x, y)`` pair of jet vectors."""
    if isinstance(el, LineElement):
        _check_element(spec, el)
        F2 = np.asarray(spec.F2(el.x, el.y))
        if np.any(F2 <= 0):
            raise InvalidMetricError("F^2 is not positive at the line element")
        return np.sqrt(F2)
    x, y = el
    F2 = spec.F2(x, y)
    if np.any(jets.value(F2) <= 0):
        raise InvalidMetricError("F^2 is not positive at the line element")
    return jets.sqrt(F2)


# -- the special solution -------------------------------------------------------

@dataclass(frozen=True)
class SpecialSolution:
    """Closed-form solution of ``rho'' = -K rho + B`` with ``rho(0), rho'(0)`` given.

    For K > 0: ``rho = B/K + A cos(w t) + b sin(w t)``, ``w = sqrt(K)``;
    ``A`` is the cosine amplitude.  ``sphere_normalized`` flags the normalization
    ``K = C^2 > 0, B = 0, rho(0) = -1/C, rho'(0) = 0``.
    """

    K: float
    B: float
    initial_value: float
    initial_slope: float

    @property
    def omega(self) -> float:
        return math.sqrt(abs(self.K))

    @property
    def C(self) -> Optional[float]:
        return math.sqrt(self.K) if self.K > 0 else None

    @property
    def A(self) -> float:
        if self.K == 0:
            return self.initial_value
        return self.initial_value - self.B / self.K

    @property
    def sine_amplitude(self) -> float:
        if self.K == 0:
            return self.initial_slope
        return self.initial_slope / self.omega

    @property
    def sphere_normalized(self) -> bool:
        return (
            self.K > 0
            and self.B == 0
            and self.initial_slope == 0
            and math.isclose(self.initial_value, -1.0 / math.sqrt(self.K), rel_tol=1e-14)
        )

    def rho(self, t):
        """rho(t); ``t`` may be a float, an array or a Jet."""
        K, B, a, b = self.K, self.B, self.A, self.sine_amplitude
        if K > 0:
            wt = t * self.omega
            return a * jets.cos(wt) + b * jets.sin(wt) + B / K
        if K == 0:
            return t * t * (0.5 * B) + t * b + a
        wt = t * self.omega
        ep, em = jets.exp(wt), jets.exp(-wt)
        return (ep + em) * (0.5 * a) + (ep - em) * (0.5 * b) + B / K

    def derivative(self, t, k: int = 1):
        """k-th derivative of rho (k >= 0), numeric."""
        t = np.asarray(t, dtype=float)
        K, B, a, b, w = self.K, self.B, self.A, self.sine_amplitude, self.omega
        if k == 0:
            return np.asarray(jets.value(self.rho(t)))
        if K > 0:
            ca, cb = _rotate(a, b, k)
            return w**k * (ca * np.cos(w * t) + cb * np.sin(w * t))
        if K == 0:
            return {1: B * t + b, 2: B + 0 * t}.get(k, 0 * t)
        ch, sh = np.cosh(w * t), np.sinh(w * t)
        if k % 2 == 0:
            return w**k * (a * ch + b * sh)
        return w**k * (a * sh + b * ch)

    def phi(self, t):
        """Right-hand side coefficient ``phi = -K rho + B``."""
        return self.rho(t) * (-self.K) + self.B

    def residual(self, t) -> np.ndarray:
        """Pointwise ``rho'' + K rho - B`` from the closed-form derivatives."""
        return self.derivative(t, 2) + self.K * self.derivative(t, 0) - self.B


def special_solution(K: float, B: float = 0.0, initial_value=None, initial_slope: float = 0.0) -> SpecialSolution:
    """Solve ``rho'' = -K rho + B``.

    With ``initial_value=None`` the normalization ``rho(0) = -1/sqrt(K)``,
    ``rho'(0) = 0`` is used, which needs ``K > 0`` and ``B = 0``.  Explicit
    initial data give the general closed form for any K; check
    ``sphere_normalized`` to see whether it is the sphere normalization.
    """
    K, B = float(K), float(B)
    if initial_value is None:
        if K <= 0:
            raise UnsupportedCaseError("the rho = -cos(Ct)/C normalization needs K = C^2 > 0")
        if B != 0:
            raise UnsupportedCaseError("the rho = -cos(Ct)/C normalization needs B = 0")
        initial_value, initial_slope = -1.0 / math.sqrt(K), 0.0
    return SpecialSolution(K, B, float(initial_value), float(initial_slope))


def critical_points(sol: SpecialSolution) -> list:
    """Zeros of rho' in one period ``[0, 2 pi / sqrt(K))``."""
    if sol.K <= 0:
        raise UnsupportedCaseError("critical points are defined here for K > 0 only")
    a, b, w = sol.A, sol.sine_amplitude, sol.omega
    if math.hypot(a, b) == 0:
        raise TrivialSolutionError("rho is constant; every point is critical")
    base = math.atan2(b, a) % math.pi
    if math.isclose(base, math.pi, abs_tol=1e-15):
        base = 0.0
    return [base / w, (base + math.pi) / w]


def gradient_rho(spec: MetricSpec, el: LineElement, sol: SpecialSolution) -> np.ndarray:
    """grad rho = g^{ij}(x, y) d rho / dx^j with rho a function of t = x^1."""
    from .geometry import fundamental_tensor

    _check_element(spec, el)
    X = jets.seed(el.x, order=1)
    r = sol.rho(X[..., 0])
    drho = np.stack([jets.extract(r, (j,)) for j in range(spec.dimension)], axis=-1)
    g = fundamental_tensor(spec, el)
    return np.einsum("...ij,...j->...i", np.linalg.inv(g), drho)
