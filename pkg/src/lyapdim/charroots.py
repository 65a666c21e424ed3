"""Characteristic roots of scalar linear delay equations p = a + b e^{-tau p}.

Roots are located by eigenvalues of a Chebyshev collocation discretization of
the shift generator on [-tau, 0] (augmented with asymptotic chain seeds for
deep spectra), polished by Newton, deduplicated, and certified on demand by an
argument-principle contour count.  On top of the root sets: Kaplan-Yorke local
dimensions, unstable-direction counts, and least-squares slope fits of either
quantity against the delay.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from ._spectral import differentiation_matrix
from .errors import InputError, NeedsMoreRootsError, NumericalFailure

__all__ = [
    "CharProblem",
    "RootSet",
    "SlopeFit",
    "char_roots",
    "local_dimension",
    "unstable_count",
    "halfplane_count",
    "asymptotic_slope",
]


@dataclass(frozen=True)
class CharProblem:
    a: float
    b: float
    tau: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.tau)):
            raise InputError("parameters must be finite")
        if not self.tau > 0:
            raise InputError(f"tau must be positive, got {self.tau}")

    def h(self, p):
        """Characteristic residual a + b e^{-tau p} - p."""
        return self.a + self.b * np.exp(-self.tau * p) - p

    def hprime(self, p):
        return -self.b * self.tau * np.exp(-self.tau * p) - 1.0

    def hsecond(self, p):
        return self.b * self.tau**2 * np.exp(-self.tau * p)


@dataclass
class RootSet:
    """Roots sorted by nonincreasing real part (ties: nonincreasing imaginary
    part).  Double roots appear as repeated entries with multiplicity 2."""

    roots: np.ndarray
    count_requested: int
    residuals: np.ndarray
    multiplicities: np.ndarray
    partial: bool = False
    warnings: tuple = ()

    def __len__(self):
        return self.roots.size

    def real_parts(self) -> np.ndarray:
        return self.roots.real


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    low_confidence: bool
    taus: np.ndarray
    values: np.ndarray
    half_decade_slopes: tuple[float, float] = (math.nan, math.nan)

    @property
    def half_decade_spread(self) -> float:
        return abs(self.half_decade_slopes[0] - self.half_decade_slopes[1])


def _sort_key(roots: np.ndarray) -> np.ndarray:
    return np.lexsort((-roots.imag, -roots.real))


def _spectral_seeds(prob: CharProblem, size: int) -> np.ndarray:
    """Eigenvalues of the collocated generator: d/dtheta with the boundary
    row enforcing phi'(0) = a phi(0) + b phi(-tau)."""
    D = differentiation_matrix(size) * (2.0 / prob.tau)
    A = D.copy()
    A[-1, :] = 0.0
    A[-1, -1] = prob.a
    A[-1, 0] = prob.b
    return np.linalg.eigvals(A)


def _chain_seeds(prob: CharProblem, count: int) -> np.ndarray:
    """Asymptotic seeds: the root chain has imaginary parts spaced 2 pi/tau
    with real part (1/tau) log(|b| / sqrt(a^2 + v^2))."""
    if prob.b == 0.0 or count < 1:
        return np.empty(0, dtype=complex)
    j = np.arange(1, count + 1, dtype=float)
    v = (2.0 * j - 1.0) * math.pi / prob.tau
    re = np.log(abs(prob.b) / np.hypot(prob.a, v)) / prob.tau
    return re + 1j * v


def _newton_polish(prob: CharProblem, seeds: np.ndarray, max_iter: int = 60):
    p = np.asarray(seeds, dtype=complex).copy()
    for _ in range(max_iter):
        # points this deep in the left half-plane overflow e^{-tau p} and
        # cannot belong to the dominant strip anyway
        escaped = (-prob.tau * p.real) > 80.0
        if escaped.any():
            p = p[~escaped]
        h = prob.h(p)
        done = np.abs(h) <= 1e-13 * (1.0 + np.abs(p))
        if done.all():
            break
        dh = prob.hprime(p)
        bad = np.abs(dh) < 1e-30
        dh = np.where(bad, 1.0, dh)
        step = np.where(done | bad, 0.0, h / dh)
        # damp huge steps so seeds stay in their own basin
        mag = np.abs(step)
        step = step / np.where(mag > 1.0, mag, 1.0)
        p = p - step
    p = p[(-prob.tau * p.real) <= 80.0]
    res = np.abs(prob.h(p))
    ok = res <= 1e-12 * (1.0 + np.abs(p))
    return p[ok], int(np.sum(~ok))


def _polish_inplace(prob: CharProblem, p: np.ndarray, iters: int = 6) -> np.ndarray:
    """Extra Newton sweeps that never drop points.  Real inputs stay exactly
    real and conjugate pairs stay conjugate, so the canonicalized structure
    survives; converged points (including double roots) are left alone."""
    for _ in range(iters):
        h = prob.h(p)
        need = np.abs(h) > 1e-14 * (1.0 + np.abs(p))
        if not need.any():
            break
        dh = prob.hprime(p)
        safe = np.abs(dh) > 1e-8
        step = np.where(need & safe, h / np.where(safe, dh, 1.0), 0.0)
        p = p - step
    return p


def _dedup(points: np.ndarray, tol: float) -> np.ndarray:
    if points.size == 0:
        return points
    order = _sort_key(points)
    pts = points[order]
    out = [pts[0]]
    for z in pts[1:]:
        if all(abs(z - w) > tol for w in out[-40:]):
            out.append(z)
    return np.array(out)


def char_roots(prob: CharProblem, count: int) -> RootSet:
    """The count roots with largest real parts.

    b = 0 collapses to the single root p = a.  Fewer certified roots than
    requested sets the partial flag; Newton failures are dropped and counted
    in warnings.
    """
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    if prob.b == 0.0:
        roots = np.array([complex(prob.a)])
        return RootSet(
            roots,
            count,
            np.abs(prob.h(roots)),
            np.ones(1, dtype=int),
            partial=count > 1,
        )
    size = max(4 * count, 64)
    seeds = np.concatenate(
        [_spectral_seeds(prob, size), _chain_seeds(prob, 2 * count)]
    )
    polished, dropped = _newton_polish(prob, seeds)
    warnings = ()
    if dropped:
        warnings = (f"{dropped} seeds failed to converge and were dropped",)
    uniq = _dedup(polished, 1e-8)

    # conjugate closure: keep the upper half-plane representative, emit pairs
    upper = uniq[uniq.imag > 1e-10 * (1.0 + np.abs(uniq))]
    real = uniq[np.abs(uniq.imag) <= 1e-10 * (1.0 + np.abs(uniq))].real.astype(complex)
    full = [real]
    if upper.size:
        full += [upper, upper.conj()]
    allr = _polish_inplace(prob, np.concatenate(full))

    # double roots: Newton stalls at distance ~sqrt(eps) from them, so snap
    # small-|h'| candidates onto the critical point and confirm h there; the
    # 1e-5 cluster of stalled copies collapses into the doubled entry
    mult = np.ones(allr.size, dtype=int)
    h1_scale = 1.0 + prob.tau * abs(prob.b)
    cand = np.where(np.abs(prob.hprime(allr)) < 1e-4 * h1_scale)[0]
    drop = np.zeros(allr.size, dtype=bool)
    for i in cand:
        if drop[i]:
            continue
        z = allr[i]
        for _ in range(60):
            d2 = prob.hsecond(z)
            if abs(d2) < 1e-30:
                break
            znew = z - prob.hprime(z) / d2
            stop = abs(znew - z) <= 1e-15 * (1.0 + abs(znew))
            z = znew
            if stop:
                break
        if abs(z.imag) <= 1e-10 * (1.0 + abs(z)):
            z = complex(z.real)
        if abs(prob.hprime(z)) > 1e-9 * h1_scale or abs(prob.h(z)) > 1e-10 * (
            1.0 + abs(z)
        ):
            continue
        near = np.abs(allr - z) < 1e-5
        near[i] = False
        drop |= near
        allr[i] = z
        mult[i] = 2
    allr, mult = allr[~drop], mult[~drop]
    allr = np.repeat(allr, mult)
    mult = np.repeat(mult, mult)

    order = _sort_key(allr)
    allr, mult = allr[order], mult[order]
    roots = allr[:count]
    mult = mult[:count]
    return RootSet(
        roots,
        count,
        np.abs(prob.h(roots)),
        mult,
        partial=roots.size < count,
        warnings=warnings,
    )


def local_dimension(rs: RootSet) -> float:
    """Kaplan-Yorke value of the real parts: j + S_j/|Re p_{j+1}| at the last
    nonnegative partial sum S_j."""
    re = rs.real_parts()
    if re.size == 0:
        raise NeedsMoreRootsError("empty root set")
    if re[0] < 0.0:
        return 0.0
    cums = np.cumsum(re)
    neg = np.where(cums < 0.0)[0]
    if neg.size == 0:
        raise NeedsMoreRootsError(
            f"partial sums still nonnegative after {re.size} roots; request more"
        )
    j = int(neg[0])  # S_{j} (1-based j) >= 0, S_{j+1} < 0
    return j + cums[j - 1] / abs(re[j]) if j > 0 else 0.0


def unstable_count(rs: RootSet) -> int:
    """Number of roots with strictly positive real part."""
    re = rs.real_parts()
    if re.size == 0 or re.min() > 0.0:
        raise NeedsMoreRootsError(
            "every returned root is unstable; the count is not certified"
        )
    return int(np.sum(re > 0.0))


def _rect_winding(prob: CharProblem, re_lo, re_hi, im_lo, im_hi) -> int:
    """Zeros of the characteristic function inside a rectangle, by tracking
    the phase of h along the boundary with adaptive refinement."""
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
        complex(re_lo, im_lo),
    ]
    total = 0.0
    for z0, z1 in zip(corners[:-1], corners[1:]):
        t = np.linspace(0.0, 1.0, 64)
        for _ in range(40):
            pts = z0 + t * (z1 - z0)
            vals = prob.h(pts)
            if np.any(np.abs(vals) < 1e-12):
                raise NumericalFailure("characteristic root on the contour")
            dphi = np.angle(vals[1:] / vals[:-1])
            if np.all(np.abs(dphi) < 1.5):
                total += dphi.sum()
                break
            bad = np.abs(dphi) >= 1.5
            mids = 0.5 * (t[:-1][bad] + t[1:][bad])
            t = np.sort(np.concatenate([t, mids]))
            if t.size > 300000:
                raise NumericalFailure("contour refinement did not settle")
        else:
            raise NumericalFailure("contour refinement did not settle")
    w = total / (2.0 * math.pi)
    n = int(round(w))
    if abs(w - n) > 1e-6:
        raise NumericalFailure(f"winding number {w} is not an integer")
    return n


def halfplane_count(prob: CharProblem, c: float) -> int:
    """Exact number of characteristic roots with Re p > c (multiplicity
    counted), via the argument principle on an enclosing rectangle."""
    if prob.b == 0.0:
        return int(prob.a > c)
    # any root with Re p >= c obeys |p - a| <= |b| e^{-tau c}
    reach = abs(prob.b) * math.exp(-prob.tau * c)
    re_hi = prob.a + reach + 1.0
    im_hi = reach + 1.0
    shift = 0.0
    for _ in range(8):
        try:
            return _rect_winding(prob, c + shift, re_hi, -im_hi, im_hi)
        except NumericalFailure:
            shift += 3e-7  # nudge off a root sitting on the boundary
    raise NumericalFailure("could not certify the half-plane count")


def _crossing_frequency(prob: CharProblem) -> float:
    """Frequency V where the running sum of chain real parts turns negative;
    used only to size initial root requests."""
    a, b, tau = prob.a, abs(prob.b), prob.tau
    if b == 0.0:
        return 0.1

    def chain_re(v):
        return np.log(b / np.hypot(a, v)) / tau

    # sum of real roots, located by sign changes on a bounded scan; the
    # lower margin shrinks with tau so e^{-tau p} stays in range
    lo = min(a - b, -(math.log(max(b * tau, 1.0)) + 5.0) / tau, 0.0) - 1.0 / max(tau, 1.0)
    hi = a + b + 1.0
    ps = np.linspace(lo, hi, 512)
    g = prob.h(ps).real
    disc = 0.0
    for i in np.where(np.sign(g[:-1]) != np.sign(g[1:]))[0]:
        x0, x1 = ps[i], ps[i + 1]
        for _ in range(60):
            xm = 0.5 * (x0 + x1)
            if np.sign(prob.h(xm).real) == np.sign(prob.h(x0).real):
                x0 = xm
            else:
                x1 = xm
        disc += max(0.5 * (x0 + x1), 0.0)

    def S(V):
        # pair density tau/(2 pi) per unit frequency, two roots per pair
        vs = np.linspace(1e-6 * V, V, 400)
        return disc + (tau / math.pi) * trapezoid(chain_re(vs), vs)

    V = 0.5
    while S(V) > 0.0 and V < 1e3:
        V *= 1.4
    return V


def asymptotic_slope(
    prob_family: Callable[[float], CharProblem],
    quantity: str,
    taus: Sequence[float],
) -> SlopeFit:
    """Least-squares slope (with intercept) of a per-tau spectral quantity.

    quantity is "local_dimension" or "unstable_count".  Requires >= 8 grid
    points spanning at least a decade; R^2 below 0.99 raises the
    low-confidence flag.  Also reports slopes over the two uppermost
    half-decades as a stability diagnostic.
    """
    taus = np.asarray(sorted(float(t) for t in taus))
    if taus.size < 8:
        raise InputError(f"need at least 8 grid points, got {taus.size}")
    if taus[-1] < 10.0 * taus[0]:
        raise InputError("grid must span at least one decade")
    evaluators = {"local_dimension": local_dimension, "unstable_count": unstable_count}
    if quantity not in evaluators:
        raise InputError(f"unknown quantity {quantity!r}")
    fn = evaluators[quantity]

    vals = np.empty(taus.size)
    for i, tau in enumerate(taus):
        prob = prob_family(tau)
        vals[i] = _evaluate_with_growth(prob, fn)

    slope, intercept, r2 = _fit_line(taus, vals)
    halves = []
    for hi, lo in ((taus[-1], taus[-1] / math.sqrt(10.0)), (taus[-1] / math.sqrt(10.0), taus[-1] / 10.0)):
        mask = (taus >= lo - 1e-9) & (taus <= hi + 1e-9)
        if mask.sum() >= 2:
            halves.append(_fit_line(taus[mask], vals[mask])[0])
        else:
            halves.append(math.nan)
    return SlopeFit(
        slope,
        intercept,
        r2,
        low_confidence=r2 < 0.99,
        taus=taus,
        values=vals,
        half_decade_slopes=(halves[0], halves[1]),
    )


@functools.lru_cache(maxsize=256)
def _cached_roots(a: float, b: float, tau: float, count: int) -> RootSet:
    return char_roots(CharProblem(a, b, tau), count)


def _evaluate_with_growth(prob: CharProblem, fn) -> float:
    base = _crossing_frequency(prob) * prob.tau / math.pi
    count = max(16, int(1.3 * base) + 16)
    count = 64 * (count // 64 + 1)  # bucket so both quantities share the cache
    for _ in range(7):
        rs = _cached_roots(prob.a, prob.b, prob.tau, count)
        try:
            return float(fn(rs))
        except NeedsMoreRootsError:
            count = 64 * (int(count * 1.6) // 64 + 1)
    raise NeedsMoreRootsError(
        f"quantity still undetermined with {count} roots at tau={prob.tau}"
    )


def _fit_line(x: np.ndarray, y: np.ndarray):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - A @ np.array([slope, intercept])) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
