"""Delay-differential-equation ground truth.

Method-of-steps RK4 integration with cubic-Hermite dense output (the step
size divides the delay, so derivative breakpoints always sit on grid nodes
and every lookup interval is one-sided), model definitions, invariant-ball
checks, linearized monodromy matrices on a uniform history grid, and
numerical Lyapunov spectra via windowed QR accumulation.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import cocycle
from .errors import InputError, NumericalFailure

__all__ = [
    "DelayModel",
    "HistorySegment",
    "Trajectory",
    "BallReport",
    "SpectrumReport",
    "mackey_glass",
    "mackey_glass_equilibria",
    "suarez_schopf",
    "suarez_schopf_equilibria",
    "linear_scalar",
    "jacobian_consistency",
    "integrate",
    "invariant_ball_check",
    "linearized_monodromy",
    "numerical_lyapunov_spectrum",
    "write_trajectory_csv",
    "write_monodromy",
    "read_monodromy",
]


@dataclass
class DelayModel:
    """Single-delay system x'(t) = rhs(t, x(t), x(t - tau)).

    jac(t, x, xd) returns the pair of Jacobians (d rhs/d x, d rhs/d xd);
    period marks time-periodic forcing.  rhs and jac must accept batched
    states of shape (..., n).
    """

    n: int
    tau: float
    rhs: Callable
    jac: Callable
    period: float | None = None
    name: str = ""


class BallReport(NamedTuple):
    passed: bool
    max_norm: float
    witness_sample: int | None
    witness_time: float | None


class SpectrumReport(NamedTuple):
    lambdas: np.ndarray
    lambdas_half: np.ndarray
    horizon: float
    windows: int
    ky: float | None


def mackey_glass(beta: float, gamma: float, k: float, tau: float) -> DelayModel:
    """x' = -gamma x + beta xd / (1 + |xd|^k)."""

    def F(y):
        return y / (1.0 + np.abs(y) ** k)

    def Fp(y):
        yk = np.abs(y) ** k
        return (1.0 + (1.0 - k) * yk) / (1.0 + yk) ** 2

    def rhs(t, x, xd):
        return -gamma * x + beta * F(xd)

    def jac(t, x, xd):
        one = np.ones_like(np.asarray(x, dtype=float))
        return -gamma * one[..., None], (beta * Fp(xd))[..., None]

    return DelayModel(1, tau, rhs, jac, None, "mackey-glass")


def mackey_glass_equilibria(beta: float, gamma: float, k: float) -> tuple[float, ...]:
    """0 always; the symmetric pair +-(beta/gamma - 1)^{1/k} when beta > gamma."""
    if beta <= gamma:
        return (0.0,)
    xbar = (beta / gamma - 1.0) ** (1.0 / k)
    return (0.0, xbar, -xbar)


def suarez_schopf(alpha: float, tau: float, forcing: float = 0.0, gamma: float = 1.0) -> DelayModel:
    """x' = gamma x - alpha xd - x^3 + forcing * sin t."""

    def rhs(t, x, xd):
        return gamma * x - alpha * xd - x**3 + forcing * np.sin(t)

    def jac(t, x, xd):
        x = np.asarray(x, dtype=float)
        return (gamma - 3.0 * x**2)[..., None], np.full_like(x, -alpha)[..., None]

    return DelayModel(
        1, tau, rhs, jac, 2.0 * math.pi if forcing else None, "suarez-schopf"
    )


def suarez_schopf_equilibria(alpha: float, gamma: float = 1.0) -> tuple[float, ...]:
    """Solutions of gamma x - alpha x - x^3 = 0: zero, plus +-sqrt(gamma - alpha)
    when gamma > alpha."""
    if gamma <= alpha:
        return (0.0,)
    xbar = math.sqrt(gamma - alpha)
    return (0.0, xbar, -xbar)


def linear_scalar(a: float, b: float, tau: float) -> DelayModel:
    """x' = a x + b xd; characteristic roots p = a + b e^{-tau p}."""

    def rhs(t, x, xd):
        return a * x + b * xd

    def jac(t, x, xd):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, a)[..., None], np.full_like(x, b)[..., None]

    return DelayModel(1, tau, rhs, jac, None, "linear-scalar")


def jacobian_consistency(model: DelayModel, samples: int = 20, seed: int = 0) -> float:
    """Max relative gap between provided Jacobians and central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    eps = 1e-6
    for _ in range(samples):
        t = float(rng.uniform(0.0, 10.0))
        x = rng.uniform(-1.5, 1.5, model.n)
        xd = rng.uniform(-1.5, 1.5, model.n)
        J0, Jd = model.jac(t, x, xd)
        J0 = np.asarray(J0, dtype=float).reshape(model.n, model.n)
        Jd = np.asarray(Jd, dtype=float).reshape(model.n, model.n)
        for j in range(model.n):
            e = np.zeros(model.n)
            e[j] = eps
            col0 = (model.rhs(t, x + e, xd) - model.rhs(t, x - e, xd)) / (2 * eps)
            cold = (model.rhs(t, x, xd + e) - model.rhs(t, x, xd - e)) / (2 * eps)
            scale = max(1.0, float(np.abs(J0).max()), float(np.abs(Jd).max()))
            worst = max(
                worst,
                float(np.abs(col0 - J0[:, j]).max()) / scale,
                float(np.abs(cold - Jd[:, j]).max()) / scale,
            )
    return worst


def _hermite(u, v0, d0, v1, d1, h):
    """Cubic Hermite on one interval; u in [0,1], h the interval length."""
    u2, u3 = u * u, u * u * u
    return (
        (2 * u3 - 3 * u2 + 1) * v0
        + (u3 - 2 * u2 + u) * h * d0
        + (-2 * u3 + 3 * u2) * v1
        + (u3 - u2) * h * d1
    )


def _hermite_deriv(u, v0, d0, v1, d1, h):
    u2 = u * u
    return (
        (6 * u2 - 6 * u) * v0 / h
        + (3 * u2 - 4 * u + 1) * d0
        + (-6 * u2 + 6 * u) * v1 / h
        + (3 * u2 - 2 * u) * d1
    )


@dataclass
class HistorySegment:
    """Uniform-grid history on [-tau, 0] with nodal values and derivatives."""

    tau: float
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.derivs = np.atleast_2d(np.asarray(self.derivs, dtype=float))
        if self.values.shape != self.derivs.shape or self.values.shape[0] < 2:
            raise InputError("values and derivs must share shape (M+1, n), M >= 1")

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def intervals(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def from_function(cls, fn, tau: float, n: int = 1, M: int = 256, dfn=None):
        theta = np.linspace(-tau, 0.0, M + 1)
        vals = np.array([np.atleast_1d(fn(t)) for t in theta], dtype=float)
        if dfn is not None:
            ders = np.array([np.atleast_1d(dfn(t)) for t in theta], dtype=float)
        else:
            eps = 1e-6 * tau
            ders = np.empty_like(vals)
            for i, t in enumerate(theta):
                lo, hi = max(t - eps, -tau), min(t + eps, 0.0)
                ders[i] = (np.atleast_1d(fn(hi)) - np.atleast_1d(fn(lo))) / (hi - lo)
        return cls(tau, vals.reshape(M + 1, n), ders.reshape(M + 1, n))

    @classmethod
    def constant(cls, x, tau: float, M: int = 64):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = np.tile(x, (M + 1, 1))
        return cls(tau, vals, np.zeros_like(vals))

    def eval(self, theta: float) -> np.ndarray:
        h = self.tau / self.intervals
        g = (theta + self.tau) / h
        i = min(max(int(math.floor(g)), 0), self.intervals - 1)
        u = g - i
        return _hermite(u, self.values[i], self.derivs[i], self.values[i + 1], self.derivs[i + 1], h)

    def eval_deriv(self, theta: float) -> np.ndarray:
        h = self.tau / self.intervals
        g = (theta + self.tau) / h
        i = min(max(int(math.floor(g)), 0), self.intervals - 1)
        u = g - i
        return _hermite_deriv(u, self.values[i], self.derivs[i], self.values[i + 1], self.derivs[i + 1], h)

    def resampled(self, M: int) -> "HistorySegment":
        if M == self.intervals:
            return self
        theta = np.linspace(-self.tau, 0.0, M + 1)
        vals = np.array([self.eval(t) for t in theta])
        ders = np.array([self.eval_deriv(t) for t in theta])
        return HistorySegment(self.tau, vals, ders)


@dataclass
class Trajectory:
    """Dense RK4 output on nodes -tau, -tau+dt, ..., T.

    derivs[i] is the right-side derivative at node i; the left-side
    derivative at t = 0 (the history end) is kept separately so history-side
    interpolation stays fourth order across the breakpoint.
    """

    model: DelayModel
    dt: float
    values: np.ndarray
    derivs: np.ndarray
    hist_end_deriv: np.ndarray
    step_halving_error: float | None = None

    @property
    def t_start(self) -> float:
        return -self.model.tau

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * (self.values.shape[0] - 1)

    @property
    def _m_hist(self) -> int:
        return round(self.model.tau / self.dt)

    def _interval_data(self, i: int):
        d0 = self.derivs[i]
        d1 = self.hist_end_deriv if i + 1 == self._m_hist else self.derivs[i + 1]
        return self.values[i], d0, self.values[i + 1], d1

    def value(self, t: float) -> np.ndarray:
        g = (t - self.t_start) / self.dt
        i = min(max(int(math.floor(g + 1e-12)), 0), self.values.shape[0] - 2)
        u = g - i
        v0, d0, v1, d1 = self._interval_data(i)
        return _hermite(u, v0, d0, v1, d1, self.dt)

    def segment_at(self, t: float) -> HistorySegment:
        """History segment ending at node time t (t - t_start on the grid)."""
        g = (t - self.t_start) / self.dt
        i = round(g)
        if abs(g - i) > 1e-9 or i < self._m_hist or i >= self.values.shape[0]:
            raise InputError(f"t={t} is not a stored node with a full history behind it")
        m = self._m_hist
        vals = self.values[i - m : i + 1].copy()
        ders = self.derivs[i - m : i + 1].copy()
        return HistorySegment(self.model.tau, vals, ders)


def _check_dt(tau: float, dt: float) -> int:
    m = round(tau / dt)
    if m < 10 or abs(m * dt - tau) > 1e-9 * tau:
        raise InputError(f"dt must divide tau with tau/dt >= 10, got tau={tau}, dt={dt}")
    return m


def _integrate_batch(model: DelayModel, vals0, ders0, steps: int, dt: float):
    """Core stepping loop on batched node arrays of shape (K, B, n)."""
    m = vals0.shape[0] - 1
    B, n = vals0.shape[1], vals0.shape[2]
    K = m + steps + 1
    vals = np.empty((K, B, n))
    ders = np.empty((K, B, n))
    vals[: m + 1] = vals0
    ders[: m + 1] = ders0
    hist_end = ders0[m].copy()

    def mid(idx):
        d1 = hist_end if idx + 1 == m else ders[idx + 1]
        return 0.5 * (vals[idx] + vals[idx + 1]) + 0.125 * dt * (ders[idx] - d1)

    for i in range(steps):
        node = m + i
        t = i * dt
        v = vals[node]
        k1 = model.rhs(t, v, vals[node - m])
        ders[node] = k1
        xmid = mid(node - m)
        k2 = model.rhs(t + 0.5 * dt, v + 0.5 * dt * k1, xmid)
        k3 = model.rhs(t + 0.5 * dt, v + 0.5 * dt * k2, xmid)
        k4 = model.rhs(t + dt, v + dt * k3, vals[node - m + 1])
        vals[node + 1] = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(vals[node + 1])):
            raise NumericalFailure(f"nonfinite state at t = {t + dt:.6g}")
    ders[K - 1] = model.rhs(steps * dt, vals[K - 1], vals[K - 1 - m])
    return vals, ders, hist_end


def integrate(
    model: DelayModel,
    h0: HistorySegment,
    T: float,
    dt: float,
    error_estimate: bool = False,
) -> Trajectory:
    """Method-of-steps RK4 from the history h0 over [0, T].

    dt must divide tau (>= 10 substeps); delayed stage lookups then either
    hit stored nodes or the midpoint of one completed interval, where the
    cubic Hermite interpolant keeps the full fourth order.  Breakpoints at
    multiples of tau coincide with nodes, so no step straddles one.
    """
    m = _check_dt(model.tau, dt)
    steps = round(T / dt)
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise InputError(f"dt={dt} does not divide T={T}")
    h = h0.resampled(m)
    vals0 = h.values[:, None, :]
    ders0 = h.derivs[:, None, :]
    vals, ders, hist_end = _integrate_batch(model, vals0, ders0, steps, dt)
    traj = Trajectory(model, dt, vals[:, 0, :], ders[:, 0, :], hist_end[0])
    if error_estimate:
        fine = integrate(model, h0, T, dt / 2.0, error_estimate=False)
        diff = np.abs(traj.values[m:] - fine.values[2 * m :: 2, :]).max()
        traj.step_halving_error = float(diff)
    return traj


def invariant_ball_check(
    model: DelayModel,
    R: float,
    sample_count: int,
    T: float,
    dt: float | None = None,
    seed: int = 0,
    histories: Sequence[HistorySegment] | None = None,
) -> BallReport:
    """Integrate random histories with sup norm below R and check the ball
    stays positively invariant (tolerance factor 1 + 1e-6).

    Histories default to random three-harmonic trigonometric polynomials
    scaled to sup norms in (0.3 R, 0.999 R); explicit histories override.
    """
    if not R > 0:
        raise InputError("R must be positive")
    dt = model.tau / 64.0 if dt is None else dt
    m = _check_dt(model.tau, dt)
    steps = round(T / dt)
    rng = np.random.default_rng(seed)
    if histories is None:
        B = sample_count
        theta = np.linspace(-model.tau, 0.0, m + 1)
        fine = np.linspace(-model.tau, 0.0, 8 * m + 1)
        vals0 = np.empty((m + 1, B, model.n))
        ders0 = np.empty((m + 1, B, model.n))
        for s in range(B):
            coef = rng.normal(size=(model.n, 4, 2))
            target = R * rng.uniform(0.3, 0.999)
            v = _trig_eval(coef, theta, model.tau)
            vf = _trig_eval(coef, fine, model.tau)
            d = _trig_eval(coef, theta, model.tau, deriv=True)
            sup = np.abs(vf).max()
            scale = target / sup if sup > 0 else 0.0
            vals0[:, s, :] = scale * v
            ders0[:, s, :] = scale * d
    else:
        B = len(histories)
        segs = [h.resampled(m) for h in histories]
        vals0 = np.stack([h.values for h in segs], axis=1)
        ders0 = np.stack([h.derivs for h in segs], axis=1)

    try:
        vals, _, _ = _integrate_batch(model, vals0, ders0, steps, dt)
    except NumericalFailure as exc:
        return BallReport(False, math.inf, None, _blowup_time(exc))
    norms = np.abs(vals).max(axis=2)  # sup norm per (node, sample)
    max_norm = float(norms.max())
    if max_norm <= R * (1.0 + 1e-6):
        return BallReport(True, max_norm, None, None)
    node, samp = np.unravel_index(int(np.argmax(norms > R * (1.0 + 1e-6))), norms.shape)
    return BallReport(False, max_norm, int(samp), float(node * dt - model.tau))


def _blowup_time(exc: NumericalFailure) -> float | None:
    msg = str(exc)
    try:
        return float(msg.rsplit("=", 1)[1])
    except (IndexError, ValueError):
        return None


def _trig_eval(coef, theta, tau, deriv=False):
    """Three-harmonic trig polynomial with constant term; coef (n, 4, 2)."""
    out = np.zeros((theta.size, coef.shape[0]))
    for c in range(coef.shape[0]):
        out[:, c] = 0.0 if deriv else coef[c, 0, 0]
        for k in range(1, 4):
            w = k * math.pi / tau
            a, b = coef[c, k, 0], coef[c, k, 1]
            if deriv:
                out[:, c] += -a * w * np.sin(w * theta) + b * w * np.cos(w * theta)
            else:
                out[:, c] += a * np.cos(w * theta) + b * np.sin(w * theta)
    return out


def _lagrange_weights(offsets: np.ndarray, x: float) -> np.ndarray:
    w = np.ones(offsets.size)
    for i, xi in enumerate(offsets):
        for xj in offsets:
            if xj != xi:
                w[i] *= (x - xj) / (xi - xj)
    return w


def linearized_monodromy(
    model: DelayModel, traj: Trajectory, t0: float, N: int = 64, span: int = 1
) -> np.ndarray:
    """Matrix of the linearized history-to-history map over [t0, t0 + span*tau].

    Coordinates: n components at each of N+1 uniform history nodes, node 0 at
    theta = -tau, node N at theta = 0.  Columns are responses to basis
    histories, integrated by RK4 with quartic-accurate midpoint lookups from
    the stored node ladder.
    """
    tau = model.tau
    if t0 < traj.t_start + tau - 1e-9 or t0 + span * tau > traj.t_end + 1e-9:
        raise InputError("trajectory does not cover the requested window")
    n, B = model.n, model.n * (N + 1)
    h = tau / N
    total = span * N
    W = np.zeros((total + N + 1, n, B))
    for i in range(N + 1):
        for c in range(n):
            W[i, c, i * n + c] = 1.0

    stencil_mid = {}

    def lookup_mid(idx):
        # value at grid coordinate idx + 1/2 from a 4-point stencil; the
        # stencil stays inside one delay segment so it never interpolates
        # across the solution kinks propagating from the history junction
        base = (idx // N) * N
        lo = min(max(idx - 1, base), base + N - 3)
        if idx not in stencil_mid:
            offs = np.arange(lo, lo + 4, dtype=float)
            stencil_mid[idx] = (lo, _lagrange_weights(offs, idx + 0.5))
        lo, wts = stencil_mid[idx]
        return np.tensordot(wts, W[lo : lo + 4], axes=(0, 0))

    def jacs(s):
        x = traj.value(s)
        xd = traj.value(s - tau)
        J0, Jd = model.jac(s, x, xd)
        return (
            np.asarray(J0, dtype=float).reshape(n, n),
            np.asarray(Jd, dtype=float).reshape(n, n),
        )

    for i in range(total):
        s = t0 + i * h
        V = W[N + i]
        A1, B1 = jacs(s)
        A2, B2 = jacs(s + 0.5 * h)
        A4, B4 = jacs(s + h)
        d1 = W[i]
        dm = lookup_mid(i)
        d4 = W[i + 1]
        k1 = A1 @ V + B1 @ d1
        k2 = A2 @ (V + 0.5 * h * k1) + B2 @ dm
        k3 = A2 @ (V + 0.5 * h * k2) + B2 @ dm
        k4 = A4 @ (V + h * k3) + B4 @ d4
        W[N + i + 1] = V + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    out = np.empty((B, B))
    for i in range(N + 1):
        out[i * n : (i + 1) * n, :] = W[total + i]
    return out


def numerical_lyapunov_spectrum(
    model: DelayModel,
    burn_in: float,
    horizon: float,
    m: int,
    N: int = 64,
    dt: float | None = None,
    seed: int = 0,
    h0: HistorySegment | None = None,
) -> SpectrumReport:
    """Exponents of the linearized flow along an attractor trajectory.

    Integrates the model past burn_in, builds the tau-window monodromy
    sequence on an (N+1)-node history grid, and feeds it as a matrix cocycle
    to the QR volume-growth accumulator; exponents are differenced partial
    sums over the full horizon, with last-half values as the convergence
    diagnostic.  ky is the Kaplan-Yorke value when the partial sums cross
    zero within the m computed exponents, else None.
    """
    tau = model.tau
    dt = tau / 128.0 if dt is None else dt
    windows = max(4, round(horizon / tau))
    warmup = 2
    if m > model.n * (N + 1):
        raise InputError("m exceeds the discretized dimension")
    rng = np.random.default_rng(seed)
    if h0 is None:
        coef = rng.normal(size=(model.n, 4, 2))
        theta = np.linspace(-tau, 0.0, 129)
        vals = 0.1 + 0.05 * _trig_eval(coef, theta, tau)
        ders = 0.05 * _trig_eval(coef, theta, tau, deriv=True)
        h0 = HistorySegment(tau, vals, ders)
    burn_windows = max(1, round(burn_in / tau))
    T_total = (burn_windows + warmup + windows + 1) * tau
    traj = integrate(model, h0, T_total, dt)

    cache: dict = {}

    def fiber(idx, t):
        k = round(t / tau)
        P = np.eye(model.n * (N + 1))
        for j in range(k):
            w = idx + j
            if w not in cache:
                cache[w] = linearized_monodromy(model, traj, (burn_windows + w) * tau, N)
            P = cache[w] @ P
        return P

    coc = cocycle.MatrixCocycle(
        base_points=(0,),
        base_step=lambda q: q + 1,
        fiber=fiber,
        dim=model.n * (N + 1),
        h=tau,
    )
    # warmup windows align the frame before accumulation starts
    q0 = warmup
    sums = np.zeros(m + 1)
    sums_half = np.zeros(m + 1)
    half_start = windows // 2
    for order in range(1, m + 1):
        g = cocycle.volume_growth_qr(coc, q0, order, windows * tau, tau)
        sums[order] = g.log_omega
        sums_half[order] = g.per_step[half_start:].sum()
    lam = np.diff(sums) / (windows * tau)
    lam_half = np.diff(sums_half) / ((windows - half_start) * tau)
    cums = np.cumsum(lam)
    ky = None
    if lam[0] < 0:
        ky = 0.0
    elif np.any(cums < 0):
        j = int(np.where(cums < 0)[0][0])
        ky = j + float(cums[j - 1]) / abs(float(lam[j])) if j > 0 else 0.0
    return SpectrumReport(lam, lam_half, windows * tau, windows, ky)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    m = traj._m_hist
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"x_{i+1}" for i in range(traj.values.shape[1])) + "\n")
        for i in range(m, traj.values.shape[0]):
            t = traj.t_start + i * traj.dt
            row = ",".join(repr(float(v)) for v in traj.values[i])
            fh.write(f"{t!r},{row}\n")


_MAGIC = b"LYPD"


def write_monodromy(path, matrix: np.ndarray, n: int, N: int) -> None:
    M = np.ascontiguousarray(matrix, dtype="<f8")
    if M.shape != (n * (N + 1), n * (N + 1)):
        raise InputError(f"matrix shape {M.shape} does not match n={n}, N={N}")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", n, N))
        fh.write(M.tobytes())


def read_monodromy(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise InputError(f"bad magic {magic!r}")
        n, N = struct.unpack("<II", fh.read(8))
        size = n * (N + 1)
        data = np.frombuffer(fh.read(size * size * 8), dtype="<f8")
        if data.size != size * size:
            raise InputError("truncated monodromy dump")
        return data.reshape(size, size).copy(), int(n), int(N)
