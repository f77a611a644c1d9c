"""Geodesics, parallel transport and along-geodesic checks.

Geodesics solve ``x'' + 2 G(x, x') = 0`` with classical fixed-step RK4;
frame vectors are transported with ``V' + N(x, x') V = 0``.  Fixed steps keep
every series on a uniform grid so second differences can be taken directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry, jets
from .errors import DomainError, UnsupportedCaseError
from .metrics import LineElement, MetricSpec, SpecialSolution, Warped, _check_element

DEFAULT_POLE_OFFSET = 0.05

# central second-derivative weights (h^2 scaled), interior offsets -k..k
_STENCILS = {
    3: np.array([1.0, -2.0, 1.0]),
    5: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
}


@dataclass(eq=False)
class GeodesicTrace:
    """Uniformly sampled geodesic.

    ``x``, ``y`` have shape (S, n); ``frame`` (S, k, n) holds transported
    vectors or is None.  ``truncated`` is set when the curve left the chart
    before reaching the requested length.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    frame: Optional[np.ndarray]
    step: float
    metric: MetricSpec
    truncated: bool = False

    def __len__(self):
        return len(self.t)

    @property
    def samples(self):
        for k in range(len(self.t)):
            yield {
                "t": self.t[k],
                "x": self.x[k],
                "y": self.y[k],
                "frame": None if self.frame is None else list(self.frame[k]),
            }

    def speed(self) -> np.ndarray:
        return np.sqrt(self.metric.F2(self.x, self.y))


def _rhs(spec, x, y, V):
    if V is None:
        return y, -2.0 * geometry.spray_values(spec, x, y), None
    G, N = geometry.spray_and_nconn(spec, x, y)
    return y, -2.0 * G, -np.einsum("...ij,...kj->...ki", N, V)


def integrate_geodesics(
    spec: MetricSpec,
    x0,
    y0,
    length: float,
    step: float,
    frame=None,
    check_unit_speed: bool = True,
) -> list:
    """RK4 for a batch of geodesics; returns one :class:`GeodesicTrace` each.

    The grid is uniform with ``m = ceil(length / step)`` steps of
    ``length / m``.  Curves that leave the chart (pole bands included) stop at
    their last admissible sample and are flagged ``truncated``.
    """
    if not (length > 0 and step > 0):
        raise ValueError("length and step must be positive")
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    y = np.atleast_2d(np.asarray(y0, dtype=float)).copy()
    B, n = x.shape
    el = LineElement(x, y)
    _check_element(spec, el)
    if check_unit_speed:
        F = np.sqrt(spec.F2(x, y))
        if np.any(np.abs(F - 1.0) > 1e-9):
            raise ValueError(f"start vectors must have unit Finsler length, got F = {F}")
    V = None
    if frame is not None:
        V = np.asarray(frame, dtype=float)
        V = V.reshape(B, -1, n).copy()

    m = max(1, int(math.ceil(length / step - 1e-9)))
    h = length / m
    xs = np.empty((m + 1, B, n))
    ys = np.empty((m + 1, B, n))
    vs = None if V is None else np.empty((m + 1,) + V.shape)
    xs[0], ys[0] = x, y
    if V is not None:
        vs[0] = V
    last = np.full(B, m)
    alive = np.ones(B, dtype=bool)

    for s in range(1, m + 1):
        k1 = _rhs(spec, x, y, V)
        k2 = _rhs(spec, x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], None if V is None else V + 0.5 * h * k1[2])
        k3 = _rhs(spec, x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], None if V is None else V + 0.5 * h * k2[2])
        k4 = _rhs(spec, x + h * k3[0], y + h * k3[1], None if V is None else V + h * k3[2])
        xn = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        yn = y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if V is not None:
            Vn = V + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        inside = spec.contains(xn) & np.all(np.isfinite(xn), axis=-1)
        newly_out = alive & ~inside
        last[newly_out] = s - 1
        alive &= inside
        if not alive.any():
            break
        # frozen curves keep their last admissible state
        x = np.where(alive[:, None], xn, x)
        y = np.where(alive[:, None], yn, y)
        if V is not None:
            V = np.where(alive[:, None, None], Vn, V)
            vs[s] = V
        xs[s], ys[s] = x, y

    t = h * np.arange(m + 1)
    traces = []
    for b in range(B):
        e = last[b] + 1
        traces.append(
            GeodesicTrace(
                t=t[:e].copy(),
                x=xs[:e, b].copy(),
                y=ys[:e, b].copy(),
                frame=None if vs is None else vs[:e, b].copy(),
                step=h,
                metric=spec,
                truncated=bool(last[b] < m),
            )
        )
    return traces


def integrate_geodesic(spec: MetricSpec, start: LineElement, length: float, step: float, frame=None) -> GeodesicTrace:
    """Single unit-speed geodesic from ``start`` (``F(start) = 1`` required)."""
    if start.x.ndim != 1:
        raise ValueError("integrate_geodesic takes one start element; use integrate_geodesics for batches")
    fr = None if frame is None else np.asarray(frame, float)[None]
    return integrate_geodesics(spec, start.x, start.y, length, step, fr)[0]


def export_trace_csv(trace: GeodesicTrace, path) -> None:
    """Columns: t, x1..xn, y1..yn, then e{k}_{i} for frame vector k, component i."""
    n = trace.x.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    nf = 0 if trace.frame is None else trace.frame.shape[1]
    header += [f"e{k + 1}_{i + 1}" for k in range(nf) for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in range(len(trace.t)):
            row = [trace.t[s], *trace.x[s], *trace.y[s]]
            if nf:
                row += list(trace.frame[s].ravel())
            w.writerow([repr(float(v)) for v in row])


# -- uniform-grid second derivatives ------------------------------------------------

def second_difference(values, h: float, stencil: int = 5) -> np.ndarray:
    """Central second derivative at interior samples (boundary samples dropped)."""
    if stencil not in _STENCILS:
        raise ValueError("stencil must be 3 or 5")
    w = _STENCILS[stencil]
    values = np.asarray(values, dtype=float)
    if len(values) < len(w):
        raise ValueError(f"need at least {len(w)} samples for the {stencil}-point stencil")
    return np.convolve(values, w[::-1], mode="valid") / h**2


def _interior(arr, stencil):
    k = stencil // 2
    return arr[k : len(arr) - k]


def fit_frequency(values, h: float, stencil: int = 5) -> float:
    """Least-squares w from ``v'' = -w^2 v + c``; NaN when not oscillatory."""
    d2 = second_difference(values, h, stencil)
    v = _interior(np.asarray(values, float), stencil)
    A = np.column_stack([v, np.ones_like(v)])
    (slope, _), *_ = np.linalg.lstsq(A, d2, rcond=None)
    return math.sqrt(-slope) if slope < 0 else float("nan")


def fit_sinusoid(t, values, omega: float):
    """Least-squares ``A0 cos(w t) + B0 sin(w t)``; returns (A0, B0, max abs misfit)."""
    t = np.asarray(t, float)
    values = np.asarray(values, float)
    basis = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(basis @ coef - values)))


@dataclass(eq=False)
class RhoSeries:
    t: np.ndarray
    rho: np.ndarray
    residual: np.ndarray
    max_residual: float
    omega: float
    critical_points: list
    critical_spacing: float
    zero_crossings: list = field(default_factory=list)


def rho_along_geodesic(trace: GeodesicTrace, sol: SpecialSolution, stencil: int = 5) -> RhoSeries:
    """rho(x^1(t)) along the trace and the residual of ``rho'' + K rho - B``.

    The recovered frequency comes from a least-squares fit of the discrete
    second derivative against rho; critical points are the stationary
    points of the fitted sinusoid nearest the trace, spacing ``pi / w``.
    """
    if len(trace.t) < 3:
        raise ValueError("trace too short: need at least 3 samples")
    if len(trace.t) < len(_STENCILS.get(stencil, [])):
        stencil = 3
    rho = np.asarray(jets.value(sol.rho(trace.x[:, 0])), dtype=float)
    h = trace.step
    d2 = second_difference(rho, h, stencil)
    res = d2 + sol.K * _interior(rho, stencil) - sol.B
    omega = fit_frequency(rho, h, stencil) if len(rho) >= 2 * stencil else float("nan")

    level = sol.B / sol.K if sol.K != 0 else 0.0
    shifted = rho - level
    idx = np.nonzero(np.signbit(shifted[:-1]) != np.signbit(shifted[1:]))[0]
    crossings = [float(trace.t[i] - shifted[i] * h / (shifted[i + 1] - shifted[i])) for i in idx]

    crit, spacing = [], float("nan")
    if np.isfinite(omega):
        a0, b0, _ = fit_sinusoid(trace.t, shifted, omega)
        base = math.atan2(b0, a0) / omega
        period = math.pi / omega
        lo, hi = trace.t[0] - period, trace.t[-1] + period
        k0 = math.ceil((lo - base) / period)
        crit = [base + k * period for k in range(k0, k0 + 4) if lo <= base + k * period <= hi]
        spacing = period
    return RhoSeries(
        t=_interior(trace.t, stencil),
        rho=rho,
        residual=res,
        max_residual=float(np.max(np.abs(res))),
        omega=omega,
        critical_points=crit,
        critical_spacing=spacing,
        zero_crossings=crossings,
    )


@dataclass(eq=False)
class TorsionSeries:
    t: np.ndarray
    A: np.ndarray
    residual: np.ndarray
    max_residual: float
    K: float
    A0: float
    B0: float
    fit_residual: float


def torsion_ode_residual(t, A, K: float, h: Optional[float] = None, stencil: int = 5) -> TorsionSeries:
    """Residual of ``A'' + K A = 0`` on a uniform series, plus a sinusoid fit."""
    t = np.asarray(t, float)
    A = np.asarray(A, float)
    if len(t) < 3:
        raise ValueError("series too short: need at least 3 samples")
    if h is None:
        h = float(t[1] - t[0])
    if len(t) < 5:
        stencil = 3
    res = second_difference(A, h, stencil) + K * _interior(A, stencil)
    if K > 0:
        A0, B0, misfit = fit_sinusoid(t - t[0], A, math.sqrt(K))
    else:
        A0, B0, misfit = float(A[0]), float("nan"), float("nan")
    return TorsionSeries(
        t=_interior(t, stencil),
        A=A,
        residual=res,
        max_residual=float(np.max(np.abs(res))) if len(res) else 0.0,
        K=K,
        A0=A0,
        B0=B0,
        fit_residual=misfit,
    )


def cartan_torsion_series(spec: MetricSpec, trace: GeodesicTrace) -> np.ndarray:
    """A(X(t), Y(t), Z(t)) = F C_ijk X^i Y^j Z^k from the first three frame vectors."""
    p = geometry.LocalJets(spec, trace.x, trace.y, 3)
    F = np.sqrt(p.F2.value)
    C = p.cartan.value
    X, Y, Z = trace.frame[:, 0], trace.frame[:, 1], trace.frame[:, 2]
    return F * np.einsum("sijk,si,sj,sk->s", C, X, Y, Z)


def cartan_torsion_along_geodesic(
    spec: MetricSpec, trace: GeodesicTrace, X, Y, Z, K: Optional[float] = None, stencil: int = 5
) -> TorsionSeries:
    """Transported Cartan torsion along ``trace`` and the residual of ``A'' + K A``.

    If the trace does not already carry X, Y, Z as its first frame vectors
    it is re-integrated from its start with that frame.  ``K`` defaults to
    the metric's known constant flag curvature (0 when unknown).
    """
    start = np.array([X, Y, Z], dtype=float)
    if trace.frame is None or trace.frame.shape[1] < 3 or not np.allclose(trace.frame[0, :3], start):
        length = trace.t[-1] - trace.t[0]
        trace = integrate_geodesics(spec, trace.x[0], trace.y[0], length, trace.step, start[None])[0]
    if K is None:
        K = spec.expected_flag_curvature() or 0.0
    A = cartan_torsion_series(spec, trace)
    return torsion_ode_residual(trace.t, A, K, trace.step, stencil)


# -- focusing -----------------------------------------------------------------------

@dataclass(eq=False)
class FocusingReport:
    """Radial geodesics launched from the ``t = pole_offset`` level.

    ``spread`` is the largest pairwise Finsler length of the coordinate chord
    between simultaneous points, measured at the chord midpoint.
    """

    C: float
    pole_offset: float
    length: float
    t_end: np.ndarray
    target_t: float
    t_deviation: float
    endpoint_t_spread: float
    profile_s: np.ndarray
    profile_spread: np.ndarray
    spread_start: float
    spread_end: float
    focusing_length: float
    linear_slope: float
    linear_r2: float
    truncated: bool


def _pairwise_spread(spec: MetricSpec, pts: np.ndarray) -> np.ndarray:
    """pts (S, m, n) -> (S,) max over pairs of F(mid, b - a)."""
    m = pts.shape[1]
    ia, ib = np.triu_indices(m, 1)
    a, b = pts[:, ia], pts[:, ib]
    mid = 0.5 * (a + b)
    return np.sqrt(np.asarray(spec.F2(mid, b - a))).max(axis=1)


def antipodal_focusing(
    spec: Warped,
    pole_offset: float = DEFAULT_POLE_OFFSET,
    count: int = 8,
    step: float = 1e-3,
    length: Optional[float] = None,
    seed: int = 0,
) -> FocusingReport:
    """Launch ``count`` radial geodesics from ``t = pole_offset`` and follow their spread.

    On the sine family all curves arrive together at ``t = pi/C - pole_offset``
    and the spread returns to its starting value; the recovered focusing
    length (zero spacing of a sinusoid fitted to the spread profile) is
    ``pi/C``.  On a flat (linear-warp) metric the spread grows linearly.
    """
    if not isinstance(spec, Warped):
        raise UnsupportedCaseError("antipodal focusing needs a warped metric")
    if count < 2:
        raise ValueError("need at least two geodesics")
    lo, _ = spec.t_range
    if pole_offset < lo - 1e-12:
        raise DomainError(f"pole_offset {pole_offset} lies inside the pole margin (t >= {lo:.6g} required)")
    if length is None:
        if spec.warp != "sine":
            raise ValueError("length is required for non-sine warps")
        length = math.pi / spec.C - 2.0 * pole_offset
    n = spec.dimension
    u = spec.fiber.sample_points(np.random.default_rng(seed), count)
    x0 = np.column_stack([np.full(count, float(pole_offset)), u])
    y0 = np.zeros((count, n))
    y0[:, 0] = 1.0
    traces = integrate_geodesics(spec, x0, y0, length, step)
    truncated = any(tr.truncated for tr in traces)
    if truncated:
        raise DomainError("a focusing geodesic left the chart before reaching its length")
    xs = np.stack([tr.x for tr in traces], axis=1)  # (S, count, n)
    s = traces[0].t
    spread = _pairwise_spread(spec, xs)
    t_end = xs[-1, :, 0]
    target = pole_offset + length
    omega = fit_frequency(spread, traces[0].step) if len(spread) >= 10 else float("nan")
    slope, intercept = np.polyfit(s, spread, 1)
    fitted = slope * s + intercept
    ss_res = float(np.sum((spread - fitted) ** 2))
    ss_tot = float(np.sum((spread - spread.mean()) ** 2)) or 1.0
    return FocusingReport(
        C=spec.C,
        pole_offset=float(pole_offset),
        length=float(length),
        t_end=t_end,
        target_t=float(target),
        t_deviation=float(np.max(np.abs(t_end - target))),
        endpoint_t_spread=float(np.ptp(t_end)),
        profile_s=s,
        profile_spread=spread,
        spread_start=float(spread[0]),
        spread_end=float(spread[-1]),
        focusing_length=math.pi / omega if np.isfinite(omega) else float("inf"),
        linear_slope=float(slope),
        linear_r2=1.0 - ss_res / ss_tot,
        truncated=truncated,
    )
