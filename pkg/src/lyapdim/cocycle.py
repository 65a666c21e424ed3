"""Finite-dimensional cocycle laboratory.

Volume growth by QR re-orthonormalization, uniform Lyapunov exponents as
maxima of per-base growth rates, Kaplan-Yorke and Lyapunov dimensions,
Lyapunov metrics with their infinitesimal growth exponents, a Liouville
trace-formula checker, and the finite-base variational principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import tensor
from .errors import InputError

__all__ = [
    "MatrixCocycle",
    "ExponentReport",
    "VolumeGrowth",
    "MetricResult",
    "DimensionResult",
    "EvpResult",
    "volume_growth_qr",
    "uniform_exponents",
    "kaplan_yorke",
    "lyapunov_dimension",
    "lyapunov_metric",
    "liouville_check",
    "evp_finite_base",
]


@dataclass(frozen=True)
class MatrixCocycle:
    """A matrix cocycle over a finite collection of labeled base states.

    base_step advances a base state by one sampling step h; fiber(q, t) is the
    n x n propagator over elapsed time t (a multiple of h) starting at q, with
    fiber(q, 0) = I and the usual composition rule along the base orbit.
    """

    base_points: tuple
    base_step: Callable
    fiber: Callable
    dim: int
    h: float = 1.0

    def advance(self, q, k: int):
        for _ in range(k):
            q = self.base_step(q)
        return q


class VolumeGrowth(NamedTuple):
    log_omega: float
    per_step: np.ndarray
    collapsed: bool


@dataclass
class ExponentReport:
    m: int
    lambdas: np.ndarray
    horizon: float
    per_step_sums: list = field(default_factory=list)


class MetricResult(NamedTuple):
    value: float
    alpha: float
    warned: bool


class DimensionResult(NamedTuple):
    value: float
    saturated: bool


class EvpResult(NamedTuple):
    rates: list
    max_rate: float


def _steps_of(T: float, dt: float) -> int:
    k = round(T / dt)
    if k < 1 or abs(k * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise InputError(f"dt={dt} does not divide T={T}")
    return k


def _substeps_of(dt: float, h: float) -> int:
    k = round(dt / h)
    if k < 1 or abs(k * h - dt) > 1e-9 * max(1.0, abs(dt)):
        raise InputError(f"dt={dt} is not a multiple of the base step h={h}")
    return k


def _seed_frame(coc: MatrixCocycle, q, m: int, dt: float, steps: int) -> np.ndarray:
    """Initial m-frame: right singular vectors of a short leading product.

    Aligning the frame with the dominant singular subspace makes the
    accumulated QR volume match log omega_m of the full product instead of
    lagging it by the fixed misalignment of an arbitrary start frame.
    """
    probe = min(steps, 64)
    P = np.eye(coc.dim)
    for _ in range(probe):
        P = coc.fiber(q, dt) @ P
        q = coc.advance(q, _substeps_of(dt, coc.h))
        nrm = np.linalg.norm(P)
        if nrm > 1e100 or (0.0 < nrm < 1e-100):
            P = P / nrm
    _, _, Vh = np.linalg.svd(P)
    return Vh[:m].conj().T


def volume_growth_qr(coc: MatrixCocycle, q, m: int, T: float, dt: float) -> VolumeGrowth:
    """log omega_m(fiber(q, T)) accumulated by QR re-orthonormalization.

    per_step holds the log-volume increment of each dt step; a collapsing
    frame (vanishing R diagonal) yields -inf with the collapsed flag.
    """
    if not 1 <= m <= coc.dim:
        raise InputError(f"need 1 <= m <= {coc.dim}, got {m}")
    steps = _steps_of(T, dt)
    sub = _substeps_of(dt, coc.h)
    Q = _seed_frame(coc, q, m, dt, steps)
    per_step = np.zeros(steps)
    collapsed = False
    for i in range(steps):
        Z = coc.fiber(q, dt) @ Q
        q = coc.advance(q, sub)
        Q, R = np.linalg.qr(Z)
        d = np.abs(np.diag(R))
        if np.any(d == 0.0) or not np.all(np.isfinite(d)):
            per_step[i:] = -math.inf
            collapsed = True
            break
        per_step[i] = float(np.sum(np.log(d)))
    total = float(per_step.sum())
    return VolumeGrowth(total, per_step, collapsed)


def uniform_exponents(
    coc: MatrixCocycle, m_max: int, T: float, dt: float | None = None
) -> ExponentReport:
    """Uniform exponents from differenced maxima of m-volume growth.

    The sum of the first m exponents is the max over base points of the
    m-volume growth rate; individual exponents come out by differencing, so
    they need not be ordered.
    """
    if not 1 <= m_max <= coc.dim:
        raise InputError(f"need 1 <= m_max <= {coc.dim}, got {m_max}")
    dt = coc.h if dt is None else dt
    sums = np.zeros(m_max + 1)
    argmax_steps: list = []
    for m in range(1, m_max + 1):
        best = -math.inf
        best_steps = None
        for q in coc.base_points:
            g = volume_growth_qr(coc, q, m, T, dt)
            if g.log_omega > best:
                best, best_steps = g.log_omega, g.per_step
        sums[m] = best
        argmax_steps.append(best_steps)
    lambdas = np.diff(sums) / T
    return ExponentReport(m_max, lambdas, T, argmax_steps)


def kaplan_yorke(lambdas: Sequence[float], n: int) -> float:
    """Kaplan-Yorke formula on exponents given for m = 1..n.

    Largest m with nonnegative partial sum, plus the interpolated fraction;
    0 when the top exponent is negative, n when even the full sum stays
    nonnegative (the fractional part vanishes since nothing lies below).
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.size < n or n < 1:
        raise InputError(f"need exponents for m = 1..{n}, got {lam.size}")
    lam = lam[:n]
    if lam[0] < 0.0:
        return 0.0
    cums = np.cumsum(lam)
    if cums[-1] >= 0.0:
        return float(n)
    m = int(np.where(cums >= 0.0)[0][-1]) + 1  # 1-based
    return m + float(cums[m - 1]) / abs(float(lam[m]))


def lyapunov_dimension(
    coc: MatrixCocycle, T: float, tol: float = 1e-6, dt: float | None = None
) -> DimensionResult:
    """inf of the orders d where the sup-over-base d-volume growth is negative.

    log omega_d interpolates linearly between integer orders, so the sup rate
    has a single down-crossing located by bisection; a cocycle that never
    contracts volumes saturates at the ambient dimension.
    """
    dt = coc.h if dt is None else dt
    n = coc.dim
    table = np.zeros((len(coc.base_points), n + 1))
    for i, q in enumerate(coc.base_points):
        for m in range(1, n + 1):
            table[i, m] = volume_growth_qr(coc, q, m, T, dt).log_omega

    def rate(d: float) -> float:
        m = int(math.floor(d))
        g = d - m
        if m >= n:
            vals = table[:, n]
        else:
            vals = (1.0 - g) * table[:, m] + g * table[:, m + 1]
        return float(vals.max()) / T

    if rate(float(n)) >= 0.0:
        return DimensionResult(float(n), True)
    lo, hi = 0.0, float(n)
    lam1 = rate(1.0)
    if lam1 < 0.0 and rate(min(tol, 1.0)) < 0.0:
        return DimensionResult(0.0, False)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rate(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return DimensionResult(hi, False)


def lyapunov_metric(
    coc: MatrixCocycle,
    nu: float,
    T: float,
    p: float,
    q,
    xi: np.ndarray,
    dt: float | None = None,
) -> MetricResult:
    """Adapted-norm value n_q(xi) = (int_0^T ||e^{-nu t} Xi^t xi||^p dt)^{1/p}
    and the infinitesimal growth exponent it certifies.

    alpha = nu + (||e^{-nu T} Xi^T xi||^p - ||xi||^p) / (p n_q^p); when the
    observed growth of xi over [0, T] reaches nu the result carries a warning
    flag (nu was not actually above the top exponent).
    """
    if p < 1:
        raise InputError(f"need p >= 1, got {p}")
    xi = np.asarray(xi, dtype=float)
    nx = float(np.linalg.norm(xi))
    if nx == 0.0:
        raise InputError("xi = 0 gives a degenerate metric value")
    dt = coc.h if dt is None else dt
    steps = _steps_of(T, dt)
    sub = _substeps_of(dt, coc.h)
    norms = np.zeros(steps + 1)
    norms[0] = nx
    v = xi.copy()
    for i in range(steps):
        v = coc.fiber(q, dt) @ v
        q = coc.advance(q, sub)
        norms[i + 1] = np.linalg.norm(v)
    t_grid = dt * np.arange(steps + 1)
    integrand = (np.exp(-nu * t_grid) * norms) ** p
    integral = _composite_quadrature(integrand, dt)
    n_q = integral ** (1.0 / p)
    alpha = nu + (integrand[-1] - integrand[0]) / (p * integral)
    warned = (math.log(norms[-1]) - math.log(norms[0])) / T >= nu
    return MetricResult(n_q, alpha, warned)


def _composite_quadrature(y: np.ndarray, dt: float) -> float:
    """Simpson on an even number of intervals; odd counts get a trapezoid
    panel appended."""
    k = y.size - 1
    if k == 0:
        raise InputError("need at least one quadrature interval")
    total = 0.0
    if k % 2 == 1:
        total += 0.5 * dt * (y[-2] + y[-1])
        y = y[:-1]
        k -= 1
    if k >= 2:
        total += dt / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum())
    return total


def liouville_check(A_path: Callable, frame: np.ndarray, T: float, dt: float) -> float:
    """Max relative gap between the evolved Gram volume of a frame and the
    exponential of the integrated projected trace.

    The frame (columns) moves under v' = A(t) v; alongside, z' = tr(Q^T A Q)
    with Q an orthonormal basis of the current frame, integrated by the same
    RK4 stages.  Returns max over step ends of |vol/vol0 - e^z| / e^z.
    """
    V = np.asarray(frame, dtype=float)
    if V.ndim != 2:
        raise InputError("frame must be an (n, m) array of column vectors")
    sv = np.linalg.svd(V, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise InputError("frame is degenerate at t = 0")
    steps = _steps_of(T, dt)
    m = V.shape[1]
    vol0 = math.sqrt(abs(tensor.wedge_gram(V.T, V.T)))

    def rhs(t, V, _z):
        A = A_path(t)
        Q, _ = np.linalg.qr(V)
        return A @ V, float(np.trace(Q.T @ A @ Q))

    z = 0.0
    worst = 0.0
    t = 0.0
    for _ in range(steps):
        k1V, k1z = rhs(t, V, z)
        k2V, k2z = rhs(t + 0.5 * dt, V + 0.5 * dt * k1V, z + 0.5 * dt * k1z)
        k3V, k3z = rhs(t + 0.5 * dt, V + 0.5 * dt * k2V, z + 0.5 * dt * k2z)
        k4V, k4z = rhs(t + dt, V + dt * k3V, z + dt * k3z)
        V = V + dt / 6.0 * (k1V + 2.0 * k2V + 2.0 * k3V + k4V)
        z = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        t += dt
        vol = math.sqrt(abs(tensor.wedge_gram(V.T, V.T)))
        worst = max(worst, abs(vol / vol0 - math.exp(z)) / math.exp(z))
    return worst


def evp_finite_base(coc: MatrixCocycle, m: int, rel_tol: float = 1e-7) -> EvpResult:
    """Per-equilibrium m-volume growth rates and their maximum.

    Every base point must be fixed under base_step; rates are accepted once
    two doubled horizons agree to rel_tol (immediately true for exact
    equilibrium generators)."""
    for q in coc.base_points:
        if not _same_state(coc.base_step(q), q):
            raise InputError(f"base point {q!r} is not an equilibrium")
    rates = []
    for q in coc.base_points:
        k = 16
        prev = None
        while True:
            T = k * coc.h
            r = volume_growth_qr(coc, q, m, T, coc.h).log_omega / T
            if prev is not None and abs(r - prev) <= rel_tol * (1.0 + abs(r)):
                break
            if k >= 2**12:
                break
            prev = r
            k *= 2
        rates.append((q, r))
    return EvpResult(rates, max(r for _, r in rates))


def _same_state(a, b) -> bool:
    try:
        return bool(a == b)
    except Exception:
        return np.array_equal(np.asarray(a), np.asarray(b))