"""Truncated multivariate Taylor jets for exact forward-mode derivatives.

A :class:`Jet` holds the Taylor coefficients of a function of ``nvars``
active variables, truncated at total degree ``order`` (at most 4).  The
coefficients live in a dense array whose last axis runs over the monomial
basis; every leading axis is a batch/tensor axis, so a single Jet can carry
a whole batch of line elements or an ``n x n`` matrix of scalar jets.

Factorial convention
--------------------
``coeffs`` store *Taylor* coefficients: the coefficient of the monomial
``v^m = v_1^m_1 ... v_k^m_k`` is ``d^|m| f / dv^m  /  m!`` with
``m! = m_1! ... m_k!``.  :func:`extract` multiplies back by ``m!``.

Basis ordering is by total degree first, so the basis of a lower order is a
prefix of the basis of a higher one.  Truncating a jet is therefore a slice.
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np

MAX_ORDER = 4


class JetDomainError(ValueError):
    """Raised when an elementary function is evaluated outside its domain."""


class _Basis:
    def __init__(self, nvars: int, order: int):
        monos = []
        for deg in range(order + 1):
            # reversed lexicographic order keeps (1,0,..) before (0,1,..)
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                m = [0] * nvars
                for v in combo:
                    m[v] += 1
                monos.append(tuple(m))
        self.nvars = nvars
        self.order = order
        self.monomials = np.array(monos, dtype=np.int64).reshape(len(monos), nvars)
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=float
        )

        pa, pb, target = [], [], []
        for i, mi in enumerate(monos):
            di = sum(mi)
            for j, mj in enumerate(monos):
                if di + sum(mj) > order:
                    continue
                pa.append(i)
                pb.append(j)
                target.append(self.index[tuple(a + b for a, b in zip(mi, mj))])
        perm = np.argsort(np.array(target), kind="stable")
        self.pair_a = np.array(pa)[perm]
        self.pair_b = np.array(pb)[perm]
        sorted_target = np.array(target)[perm]
        self.offsets = np.searchsorted(sorted_target, np.arange(self.size))

    @functools.lru_cache(maxsize=None)
    def diff_map(self, var: int):
        """Indices and multipliers turning this basis into d/dv on order-1."""
        lower = basis(self.nvars, self.order - 1)
        src = np.empty(lower.size, dtype=np.int64)
        mult = np.empty(lower.size)
        for k, m in enumerate(lower.monomials):
            up = list(m)
            up[var] += 1
            src[k] = self.index[tuple(up)]
            mult[k] = up[var]
        return src, mult

    @functools.lru_cache(maxsize=None)
    def grad_map(self, variables: tuple):
        """Stacked ``diff_map`` for several variables: shapes (len(vars), K_lower)."""
        maps = [self.diff_map(v) for v in variables]
        return np.stack([m[0] for m in maps]), np.stack([m[1] for m in maps])

    @functools.lru_cache(maxsize=None)
    def derivative_index(self, degree: int):
        """Gather table for the full derivative tensor of a given degree.

        Returns (index, factor) arrays of shape (nvars,) * degree such that
        ``coeffs[..., index] * factor`` is the symmetric tensor of partials.
        """
        shape = (self.nvars,) * degree
        idx = np.empty(shape, dtype=np.int64)
        fac = np.empty(shape)
        for combo in itertools.product(range(self.nvars), repeat=degree):
            m = [0] * self.nvars
            for v in combo:
                m[v] += 1
            k = self.index[tuple(m)]
            idx[combo] = k
            fac[combo] = self.factorial[k]
        return idx, fac


@functools.lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


def _leading_axis(axis: int) -> int:
    return axis - 1 if axis < 0 else axis


class Jet:
    """Batched truncated Taylor expansion.

    Arithmetic with plain floats or numpy arrays treats them as constants
    broadcast against the jet's leading shape.
    """

    __slots__ = ("coeffs", "nvars", "order")
    # make numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, coeffs, nvars: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != basis(nvars, order).size:
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1]}, "
                f"expected {basis(nvars, order).size} for nvars={nvars}, order={order}"
            )
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    # -- structure ---------------------------------------------------------
    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    @property
    def ndim(self):
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def _new(self, coeffs, order=None):
        out = object.__new__(Jet)
        out.coeffs = coeffs
        out.nvars = self.nvars
        out.order = self.order if order is None else order
        return out

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise truncation order {self.order} -> {order}")
        if order == self.order:
            return self
        return self._new(self.coeffs[..., : basis(self.nvars, order).size], order)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return self._new(self.coeffs[key + (slice(None),)])

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._new(self.coeffs.reshape(shape + (self.coeffs.shape[-1],)))

    def sum(self, axis=None):
        if axis is None:
            axes = tuple(range(self.ndim))
        elif isinstance(axis, tuple):
            axes = tuple(_leading_axis(a) for a in axis)
        else:
            axes = _leading_axis(axis)
        return self._new(self.coeffs.sum(axis=axes))

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return self._new(np.transpose(self.coeffs, tuple(axes) + (self.ndim,)))

    def moveaxis(self, source, destination):
        return self._new(
            np.moveaxis(self.coeffs, _leading_axis(source), _leading_axis(destination))
        )

    def diff(self, var: int) -> "Jet":
        """Derivative with respect to active variable ``var`` (order drops by one)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        if not 0 <= var < self.nvars:
            raise ValueError(f"variable index {var} outside 0..{self.nvars - 1}")
        src, mult = basis(self.nvars, self.order).diff_map(var)
        return self._new(self.coeffs[..., src] * mult, self.order - 1)

    def grad(self, variables) -> "Jet":
        """Stack ``diff(v)`` for ``v`` in ``variables`` along a new trailing axis."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        variables = tuple(int(v) for v in variables)
        if any(not 0 <= v < self.nvars for v in variables):
            raise ValueError(f"variable index outside 0..{self.nvars - 1}")
        src, mult = basis(self.nvars, self.order).grad_map(variables)
        return self._new(self.coeffs[..., src] * mult, self.order - 1)

    def derivative_tensor(self, degree: int) -> np.ndarray:
        """All partials of one degree as a symmetric array, trailing axes (nvars,)*degree."""
        if degree > self.order:
            raise ValueError(f"derivative of degree {degree} exceeds jet order {self.order}")
        idx, fac = basis(self.nvars, self.order).derivative_index(degree)
        return self.coeffs[..., idx] * fac

    def derivative(self, multi_index) -> np.ndarray:
        return extract(self, multi_index)

    # -- arithmetic --------------------------------------------------------
    def _const(self, other):
        return np.broadcast_to(np.asarray(other, dtype=float), np.broadcast_shapes(np.shape(other), self.shape))

    def __neg__(self):
        return self._new(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _align(self, other)
            return a._new(a.coeffs + b.coeffs)
        c = np.asarray(other, dtype=float)
        if c.shape == () or c.shape == self.shape:
            out = self.coeffs.copy()
        else:
            shape = np.broadcast_shapes(c.shape, self.shape)
            out = np.broadcast_to(self.coeffs, shape + self.coeffs.shape[-1:]).copy()
        out[..., 0] += c
        return self._new(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return _mul(self, other)
        c = np.asarray(other, dtype=float)
        return self._new(self.coeffs * c[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        c = np.asarray(other, dtype=float)
        if np.any(c == 0):
            raise ZeroDivisionError("division of a jet by zero")
        return self._new(self.coeffs / c[..., None])

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and exponent >= 0:
            result = self._new(np.zeros_like(self.coeffs)) + 1.0
            base = self
            e = int(exponent)
            while e:
                if e & 1:
                    result = result * base
                e >>= 1
                if e:
                    base = base * base
            return result
        p = float(exponent)
        x0 = self.value
        if np.any(x0 <= 0):
            raise JetDomainError("non-integer power of a jet requires a positive leading value")
        derivs = []
        coef = 1.0
        for m in range(self.order + 1):
            derivs.append(coef * x0 ** (p - m))
            coef *= p - m
        return _compose(self, derivs)


def _align(a: Jet, b: Jet):
    if a.nvars != b.nvars:
        raise ValueError(f"jets over different variable sets ({a.nvars} vs {b.nvars})")
    q = min(a.order, b.order)
    return a.truncate(q), b.truncate(q)


def _mul(a: Jet, b: Jet) -> Jet:
    a, b = _align(a, b)
    B = basis(a.nvars, a.order)
    prod = a.coeffs[..., B.pair_a] * b.coeffs[..., B.pair_b]
    return a._new(np.add.reduceat(prod, B.offsets, axis=-1))


def _compose(a: Jet, derivs) -> Jet:
    """f(a) from f^(m)(a0), m = 0..order, via the truncated Taylor series in a - a0."""
    h = a._new(a.coeffs.copy())
    h.coeffs[..., 0] = 0.0
    p = a.order
    out = a._new(np.zeros_like(a.coeffs)) + derivs[p] / math.factorial(p)
    for m in range(p - 1, -1, -1):
        out = out * h + derivs[m] / math.factorial(m)
    return out


def stack(items, axis: int = 0) -> Jet:
    """Stack jets (or constants, promoted) along a new leading axis."""
    ref = next((j for j in items if isinstance(j, Jet)), None)
    if ref is None:
        raise TypeError("stack needs at least one Jet")
    order = min(j.order for j in items if isinstance(j, Jet))
    promoted = []
    for j in items:
        if isinstance(j, Jet):
            promoted.append(j.truncate(order))
        else:
            promoted.append(constant(j, ref.nvars, order, ref.shape))
    shape = np.broadcast_shapes(*(p.shape for p in promoted))
    arrays = [np.broadcast_to(p.coeffs, shape + p.coeffs.shape[-1:]) for p in promoted]
    return Jet(np.stack(arrays, axis=_leading_axis(axis)), ref.nvars, order)


def constant(value, nvars: int, order: int, shape=()) -> Jet:
    value = np.asarray(value, dtype=float)
    shape = np.broadcast_shapes(value.shape, tuple(shape))
    coeffs = np.zeros(shape + (basis(nvars, order).size,))
    coeffs[..., 0] = value
    return Jet(coeffs, nvars, order)


def seed(point, active=None, order: int = MAX_ORDER) -> Jet:
    """Jet-valued coordinates at ``point``.

    ``point`` has shape ``(..., N)``; the result has the same shape.  Entry
    ``active[k]`` becomes active variable ``k`` (unit first-order
    coefficient); the other coordinates are constants.
    """
    if order not in range(1, MAX_ORDER + 1):
        raise ValueError(f"jet order must be in 1..{MAX_ORDER}, got {order}")
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    N = point.shape[-1]
    active = list(range(N)) if active is None else [int(i) for i in active]
    if len(set(active)) != len(active):
        raise ValueError("active indices must be distinct")
    if any(i < 0 or i >= N for i in active):
        raise ValueError(f"active index outside 0..{N - 1}")
    nv = len(active)
    B = basis(nv, order)
    coeffs = np.zeros(point.shape + (B.size,))
    coeffs[..., 0] = point
    for k, i in enumerate(active):
        coeffs[..., i, 1 + k] = 1.0
    return Jet(coeffs, nv, order)


def extract(jet: Jet, multi_index) -> np.ndarray:
    """Partial derivative selected by a multiset of active-variable indices.

    ``extract(f, ())`` is the value, ``extract(f, (0, 1, 1))`` is
    d^3 f / dv0 dv1^2.  Equals the stored coefficient times ``m!``.
    """
    multi_index = tuple(int(v) for v in multi_index)
    if len(multi_index) > jet.order:
        raise ValueError(
            f"derivative of degree {len(multi_index)} exceeds jet order {jet.order}"
        )
    m = [0] * jet.nvars
    for v in multi_index:
        if not 0 <= v < jet.nvars:
            raise ValueError(f"variable index {v} outside 0..{jet.nvars - 1}")
        m[v] += 1
    B = basis(jet.nvars, jet.order)
    k = B.index[tuple(m)]
    return jet.coeffs[..., k] * B.factorial[k]


def einsum(subscripts: str, a, b):
    """Two-operand contraction over the trailing (tensor) axes of jets/arrays.

    ``subscripts`` name only tensor axes, e.g. ``"il,ljk->ijk"``; any extra
    leading axes are batch axes and broadcast.
    """
    inputs, out = subscripts.replace(" ", "").split("->")
    sa, sb = inputs.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = _align(a, b)
        B = basis(a.nvars, a.order)
        prod = np.einsum(
            f"...{sa}z,...{sb}z->...{out}z",
            a.coeffs[..., B.pair_a],
            b.coeffs[..., B.pair_b],
        )
        return a._new(np.add.reduceat(prod, B.offsets, axis=-1))
    if isinstance(a, Jet):
        return a._new(np.einsum(f"...{sa}z,...{sb}->...{out}z", a.coeffs, np.asarray(b, float)))
    if isinstance(b, Jet):
        return b._new(np.einsum(f"...{sa},...{sb}z->...{out}z", np.asarray(a, float), b.coeffs))
    return np.einsum(f"...{sa},...{sb}->...{out}", a, b)


def inv(m: Jet) -> Jet:
    """Inverse of a jet-valued square matrix (trailing two axes).

    Neumann series around the value: with M = M0 + H and H nilpotent,
    M^-1 = sum_k (-M0^-1 H)^k M0^-1, exact through the truncation order.
    """
    m0 = m.value
    m0_inv = np.linalg.inv(m0)
    h = m._new(m.coeffs.copy())
    h.coeffs[..., 0] = 0.0
    step = -einsum("ij,jk->ik", m0_inv, h)
    term = constant(m0_inv, m.nvars, m.order)
    out = term
    for _ in range(m.order):
        term = einsum("ij,jk->ik", step, term)
        out = out + term
    return out


# -- elementary functions (work on floats/arrays too) -----------------------

def reciprocal(x):
    if not isinstance(x, Jet):
        return 1.0 / np.asarray(x, dtype=float)
    x0 = x.value
    if np.any(x0 == 0):
        raise JetDomainError("reciprocal of a jet with zero leading value")
    derivs = [(-1) ** m * math.factorial(m) / x0 ** (m + 1) for m in range(x.order + 1)]
    return _compose(x, derivs)


def sqrt(x):
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise JetDomainError("square root of a negative number")
        return np.sqrt(x)
    if np.any(x.value <= 0):
        raise JetDomainError("square root of a jet requires a positive leading value")
    return x ** 0.5


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return _compose(x, [e] * (x.order + 1))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    x0 = x.value
    if np.any(x0 <= 0):
        raise JetDomainError("logarithm of a jet requires a positive leading value")
    derivs = [np.log(x0)] + [
        (-1) ** (m - 1) * math.factorial(m - 1) / x0**m for m in range(1, x.order + 1)
    ]
    return _compose(x, derivs)


def _trig(x, first):
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [s, c, -s, -c] if first == "sin" else [c, -s, -c, s]
    return _compose(x, [cycle[m % 4] for m in range(x.order + 1)])


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    return _trig(x, "sin")


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    return _trig(x, "cos")


def value(x):
    """Leading value of a jet, or the argument itself."""
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
