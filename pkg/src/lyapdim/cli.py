"""Command-line front end.

Subcommands: bound (analytic dimension bounds), roots (characteristic root
tables), simulate (trajectory CSV), lyap (numerical spectra), verify
(invariant suites), sweep (parameter grids with a worker pool).  Exit codes:
0 success, 1 numerical failure, 2 configuration error.  All output is
deterministic for a fixed config and seed; CSV carries the schema header
"# lyapdim v1".
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bounds, charroots, cocycle, dde, delayop, tensor
from .errors import InputError, NeedsMoreRootsError, NumericalFailure

CSV_HEADER = "# lyapdim v1"


# ---------------------------------------------------------------- config


def _read_config(path: str) -> dict:
    cfg = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                cfg[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from None
    return cfg


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _merge(args: argparse.Namespace, keys: dict) -> dict:
    """Resolve each key as flag value > config file value > default."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, default in keys.items():
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = _coerce(cfg[key])
        out[key] = default if val is None else val
    return out


def _require(opts: dict, *names: str):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise InputError(f"missing required parameter(s): {flags}")


# ---------------------------------------------------------------- output


class _Writer:
    def __init__(self, path: str | None, fmt: str):
        if fmt not in ("csv", "json"):
            raise InputError(f"unknown format {fmt!r}")
        self.path = path
        self.fmt = fmt
        self.comments: list[str] = []
        self.columns: list[str] = []
        self.rows: list[list] = []

    def comment(self, text: str):
        self.comments.append(text)

    def table(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]

    @staticmethod
    def _fmt(v):
        if isinstance(v, float):
            return repr(v)
        return str(v)

    def flush(self):
        if self.fmt == "csv":
            lines = [CSV_HEADER]
            lines += [f"# {c}" for c in self.comments]
            if self.columns:
                lines.append(",".join(self.columns))
            lines += [",".join(self._fmt(v) for v in row) for row in self.rows]
            text = "\n".join(lines) + "\n"
        else:
            payload = {
                "schema": "lyapdim v1",
                "comments": self.comments,
                "columns": self.columns,
                "rows": self.rows,
            }
            text = json.dumps(payload, sort_keys=True) + "\n"
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------- bound


_CLASSICAL_MG = {"beta": 0.2, "gamma": 0.1, "k": 10.0}
_CLASSICAL_SS = {"alpha": 0.75, "gamma": 1.0, "tau": 1.596}


def cmd_bound(args) -> int:
    opts = _merge(
        args,
        dict(
            model=None,
            beta=None,
            gamma=None,
            k=None,
            alpha=None,
            a=None,
            b=None,
            tau=None,
            scaled=False,
            lambda_mode="rough",
        ),
    )
    _require(opts, "model", "tau")
    model = opts["model"]
    tau = float(opts["tau"])
    w = _Writer(args.output, args.format)
    if model == "mackey_glass":
        _require(opts, "beta", "gamma", "k")
        beta, gamma, k = float(opts["beta"]), float(opts["gamma"]), float(opts["k"])
        if opts["scaled"]:
            res = bounds.mackey_glass_scaled_bound(beta, gamma, k, tau, opts["lambda_mode"])
        else:
            res = bounds.mackey_glass_bound(beta, gamma, k, tau, opts["lambda_mode"])
        if (
            opts["lambda_mode"] == "rough"
            and all(math.isclose(v, _CLASSICAL_MG[p]) for p, v in
                    (("beta", beta), ("gamma", gamma), ("k", k)))
        ):
            w.comment("reference: coefficient 0.9957, bound <= 0.9958*tau + 1")
    elif model == "suarez_schopf":
        _require(opts, "alpha", "gamma")
        alpha, gamma = float(opts["alpha"]), float(opts["gamma"])
        if opts["scaled"]:
            res = bounds.suarez_schopf_scaled_bound(alpha, gamma, tau)
        else:
            res = bounds.suarez_schopf_bound(alpha, gamma, tau)
        if all(
            math.isclose(v, _CLASSICAL_SS[p])
            for p, v in (("alpha", alpha), ("gamma", gamma), ("tau", tau))
        ):
            w.comment("reference: bound 6.675 unscaled, 5.603 rescaled")
    elif model == "custom":
        _require(opts, "a", "b")
        prob = bounds.BoundProblem(tau, float(opts["a"]), float(opts["b"]))
        res = bounds.scalar_bound(prob)
    else:
        raise InputError(f"unknown model {model!r}")
    coeff = (res.d_star - 1.0) / tau if res.d_star > 0 else 0.0
    w.table(
        ["model", "tau", "d_star", "p_star", "kappa_opt", "scale_opt", "lambda_mode", "slope_per_tau", "provenance"],
        [[
            model,
            tau,
            float(res.d_star),
            float(res.p_star),
            float(res.kappa_opt),
            float(res.scale_opt) if res.scale_opt is not None else "",
            opts["lambda_mode"] if model == "mackey_glass" else "",
            float(coeff),
            res.provenance,
        ]],
    )
    w.flush()
    return 0


# ---------------------------------------------------------------- roots


def _equilibrium_problem(opts) -> charroots.CharProblem:
    model = opts["model"]
    tau = float(opts["tau"])
    eq = opts["equilibrium"]
    if model == "mackey_glass":
        _require(opts, "beta", "gamma", "k")
        beta, gamma, k = float(opts["beta"]), float(opts["gamma"]), float(opts["k"])
        if eq in ("plus", "minus"):
            if beta <= gamma:
                raise InputError("symmetric equilibria require beta > gamma")
            xbar = (beta / gamma - 1.0) ** (1.0 / k)
            yk = xbar**k
            fprime = (1.0 + (1.0 - k) * yk) / (1.0 + yk) ** 2
            return charroots.CharProblem(-gamma, beta * fprime, tau)
        if eq == "zero":
            return charroots.CharProblem(-gamma, beta, tau)
        raise InputError(f"unknown equilibrium {eq!r}")
    if model == "suarez_schopf":
        _require(opts, "alpha", "gamma")
        alpha, gamma = float(opts["alpha"]), float(opts["gamma"])
        if eq in ("plus", "minus"):
            if gamma <= alpha:
                raise InputError("symmetric equilibria require gamma > alpha")
            return charroots.CharProblem(3.0 * alpha - 2.0 * gamma, -alpha, tau)
        if eq == "zero":
            return charroots.CharProblem(gamma, -alpha, tau)
        raise InputError(f"unknown equilibrium {eq!r}")
    raise InputError(f"unknown model {model!r}")


def cmd_roots(args) -> int:
    opts = _merge(
        args,
        dict(
            model=None,
            beta=None,
            gamma=None,
            k=None,
            alpha=None,
            a=None,
            b=None,
            tau=None,
            equilibrium="plus",
            count=None,
        ),
    )
    _require(opts, "tau")
    if opts["model"]:
        prob = _equilibrium_problem(opts)
    else:
        _require(opts, "a", "b")
        prob = charroots.CharProblem(float(opts["a"]), float(opts["b"]), float(opts["tau"]))
    w = _Writer(args.output, args.format)
    count = opts["count"]
    if count is not None:
        rs = charroots.char_roots(prob, int(count))
    else:
        rs = _roots_with_closure(prob)
    w.comment(f"a {prob.a!r} b {prob.b!r} tau {prob.tau!r}")
    try:
        nu = charroots.unstable_count(rs)
        w.comment(f"N_u {nu}")
    except NeedsMoreRootsError:
        w.comment("N_u undetermined")
    try:
        dim = float(charroots.local_dimension(rs))
        w.comment(f"local_dimension {dim!r}")
        w.comment(f"N_L {int(math.floor(dim))}")
    except NeedsMoreRootsError:
        w.comment("local_dimension undetermined")
    if rs.partial:
        w.comment("partial: fewer certified roots than requested")
    w.table(
        ["index", "re", "im", "residual"],
        [
            [i, float(p.real), float(p.imag), float(r)]
            for i, (p, r) in enumerate(zip(rs.roots, rs.residuals))
        ],
    )
    w.flush()
    return 0


def _roots_with_closure(prob: charroots.CharProblem) -> charroots.RootSet:
    """Enough roots that both the unstable count and the local dimension are
    certified."""
    count = 64
    for _ in range(7):
        rs = charroots.char_roots(prob, count)
        try:
            charroots.unstable_count(rs)
            charroots.local_dimension(rs)
            return rs
        except NeedsMoreRootsError:
            count *= 2
    return rs


# ---------------------------------------------------------------- simulate


def _build_model(opts) -> dde.DelayModel:
    model = opts["model"]
    tau = float(opts["tau"])
    if model == "mackey_glass":
        _require(opts, "beta", "gamma", "k")
        return dde.mackey_glass(float(opts["beta"]), float(opts["gamma"]), float(opts["k"]), tau)
    if model == "suarez_schopf":
        _require(opts, "alpha")
        gamma = float(opts["gamma"]) if opts["gamma"] is not None else 1.0
        forcing = float(opts["forcing"]) if opts.get("forcing") is not None else 0.0
        return dde.suarez_schopf(float(opts["alpha"]), tau, forcing, gamma)
    if model == "linear":
        _require(opts, "a", "b")
        return dde.linear_scalar(float(opts["a"]), float(opts["b"]), tau)
    raise InputError(f"unknown model {model!r}")


def _build_history(spec: str, model: dde.DelayModel, seed: int) -> dde.HistorySegment:
    if spec.startswith("const:"):
        return dde.HistorySegment.constant(float(spec.split(":", 1)[1]), model.tau)
    if spec == "random":
        rng = np.random.default_rng(seed)
        coef = rng.normal(size=(model.n, 4, 2))
        theta = np.linspace(-model.tau, 0.0, 129)
        vals = dde._trig_eval(coef, theta, model.tau)
        ders = dde._trig_eval(coef, theta, model.tau, deriv=True)
        return dde.HistorySegment(model.tau, 0.3 * vals, 0.3 * ders)
    raise InputError(f"unknown history spec {spec!r} (use const:VALUE or random)")


def cmd_simulate(args) -> int:
    opts = _merge(
        args,
        dict(
            model=None,
            beta=None,
            gamma=None,
            k=None,
            alpha=None,
            forcing=None,
            a=None,
            b=None,
            tau=None,
            T=None,
            dt=None,
            history="const:0.5",
        ),
    )
    _require(opts, "model", "tau", "T")
    model = _build_model(opts)
    dt = float(opts["dt"]) if opts["dt"] is not None else model.tau / 128.0
    h0 = _build_history(str(opts["history"]), model, args.seed)
    traj = dde.integrate(model, h0, float(opts["T"]), dt)
    w = _Writer(args.output, args.format)
    m = round(model.tau / dt)
    w.table(
        ["t"] + [f"x_{i+1}" for i in range(model.n)],
        [
            [float(-model.tau + i * dt)] + [float(v) for v in traj.values[i]]
            for i in range(m, traj.values.shape[0])
        ],
    )
    w.flush()
    return 0


# ---------------------------------------------------------------- lyap


def cmd_lyap(args) -> int:
    opts = _merge(
        args,
        dict(
            model=None,
            beta=None,
            gamma=None,
            k=None,
            alpha=None,
            forcing=None,
            a=None,
            b=None,
            tau=None,
            m=6,
            N=64,
            burn_in=None,
            horizon=None,
            dt=None,
        ),
    )
    _require(opts, "model", "tau")
    model = _build_model(opts)
    tau = model.tau
    burn_in = float(opts["burn_in"]) if opts["burn_in"] is not None else 50.0 * tau
    horizon = float(opts["horizon"]) if opts["horizon"] is not None else 100.0 * tau
    rep = dde.numerical_lyapunov_spectrum(
        model,
        burn_in,
        horizon,
        int(opts["m"]),
        N=int(opts["N"]),
        dt=float(opts["dt"]) if opts["dt"] is not None else None,
        seed=args.seed,
    )
    w = _Writer(args.output, args.format)
    w.comment(f"windows {rep.windows} horizon {float(rep.horizon)!r}")
    w.comment(f"lambda1_positive {bool(rep.lambdas[0] > 0)}")
    w.comment(f"ky {float(rep.ky)!r}" if rep.ky is not None else "ky undetermined")
    w.table(
        ["j", "lambda", "lambda_last_half"],
        [
            [j + 1, float(rep.lambdas[j]), float(rep.lambdas_half[j])]
            for j in range(rep.lambdas.size)
        ],
    )
    w.flush()
    return 0


# ---------------------------------------------------------------- verify


def _suite_tensor(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, n + 1))
        L = rng.normal(size=(n, n))
        sv = tensor.singular_values(L)
        lhs = np.linalg.norm(tensor.compound_multiplicative(L, m), 2)
        worst = max(worst, abs(lhs - np.prod(sv[:m])) / max(1.0, np.prod(sv[:m])))
    checks.append(("compound-norm identity", worst <= 1e-9, f"max rel err {worst:.2e}"))
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, n))
        d = float(rng.uniform(0.0, n))
        lhs = tensor.omega_d(B @ A, d)
        rhs = tensor.omega_d(A, d) * tensor.omega_d(B, d)
        worst = max(worst, lhs - rhs * (1.0 + 1e-12))
    checks.append(("submultiplicativity", worst <= 0.0, f"max excess {worst:.2e}"))
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        L = rng.normal(size=(n, n))
        d = float(rng.uniform(0.0, n - 1))
        mfl, g = int(math.floor(d)), d - math.floor(d)
        lhs = tensor.omega_d(L, d)
        rhs = tensor.omega_d(L, mfl) ** (1.0 - g) * tensor.omega_d(L, mfl + 1) ** g
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1e-300))
    checks.append(("interpolation identity", worst <= 1e-12, f"max rel err {worst:.2e}"))
    ok = True
    for _ in range(50):
        n = int(rng.integers(2, 7))
        A = rng.normal(size=(n, n))
        beta = tensor.trace_numbers(A, n)
        ok = ok and bool(np.all(np.diff(beta) <= 1e-12))
        m = int(rng.integers(1, n + 1))
        S = 0.5 * (A + A.T)
        top = np.linalg.eigvalsh(tensor.compound_additive(S, m)).max()
        ok = ok and abs(top - beta[:m].sum()) <= 1e-9 * max(1.0, abs(top))
    checks.append(("trace numbers vs additive compound", ok, ""))
    return checks


def _suite_bounds(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    mono_ok = True
    prev_c, prev_p = None, None
    for c in np.sort(rng.uniform(-1.0, 50.0, 200)):
        p = bounds.lambert_root(float(c))
        worst = max(worst, abs(p * math.exp(p + 1.0) - c))
        if prev_c is not None and c > prev_c:
            mono_ok = mono_ok and p > prev_p - 1e-15
        prev_c, prev_p = c, p
    checks.append(("root residuals <= 1e-12", worst <= 1e-12, f"max {worst:.2e}"))
    checks.append(("root monotonicity", mono_ok, ""))
    ok = True
    for _ in range(25):
        b = float(rng.uniform(0.05, 3.0))
        a = float(rng.uniform(-b, 3.0))
        tau = float(rng.uniform(0.2, 30.0))
        res = bounds.scalar_bound(bounds.BoundProblem(tau, a, b))
        if res.kappa_opt > 0:
            def d_of(kap):
                return (a + b * math.exp(kap * tau)) / kap + 1.0
            ok = ok and d_of(res.kappa_opt + 1e-4) >= res.d_star - 1e-12
            ok = ok and d_of(res.kappa_opt - 1e-4) >= res.d_star - 1e-12
            ok = ok and abs(d_of(res.kappa_opt) - res.d_star) <= 1e-9 * res.d_star
    checks.append(("local-minimum certificate", ok, ""))
    ok = True
    for _ in range(25):
        b = float(rng.uniform(0.05, 3.0))
        a = float(rng.uniform(-b + 1e-6, 3.0))
        tau = float(rng.uniform(0.2, 30.0))
        res = bounds.scalar_bound(bounds.BoundProblem(tau, a, b))
        kap = res.kappa_opt
        lam1 = a + b * math.exp(kap * tau)
        sigma = lambda mm: 0.5 * lam1 - 0.5 * kap * (mm - 1.0)
        root = 1.0 + lam1 / kap
        ok = ok and abs(sigma(root)) <= 1e-9
        ok = ok and abs(root - res.d_star) <= 1e-9 * max(1.0, res.d_star)
    checks.append(("trace-sum curve root equals d*", ok, ""))
    return checks


def _suite_charroots(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    ok_res, ok_conj = True, True
    for _ in range(5):
        prob = charroots.CharProblem(
            float(rng.uniform(-1.0, 1.0)), float(rng.uniform(-1.5, 1.5)), float(rng.uniform(1.0, 15.0))
        )
        if prob.b == 0.0:
            continue
        rs = charroots.char_roots(prob, 24)
        ok_res = ok_res and bool(
            np.all(rs.residuals <= 1e-10 * (1.0 + np.abs(rs.roots)))
        )
        # truncation at count may orphan one pair member in the last Re tier
        tier = rs.roots.real.min() + 1e-9
        nonreal = rs.roots[np.abs(rs.roots.imag) > 1e-10]
        for z in nonreal[nonreal.real > tier]:
            ok_conj = ok_conj and np.min(np.abs(nonreal - z.conjugate())) <= 1e-8
    checks.append(("root residuals", ok_res, ""))
    checks.append(("conjugate symmetry", ok_conj, ""))
    ok = True
    for _ in range(3):
        prob = charroots.CharProblem(
            float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-1.0, 1.0)), float(rng.uniform(2.0, 12.0))
        )
        c = float(rng.uniform(-0.05, 0.05))
        rs = charroots.char_roots(prob, 48)
        direct = int(np.sum(rs.roots.real > c))
        ok = ok and direct == charroots.halfplane_count(prob, c)
    checks.append(("argument-principle counts", ok, ""))
    prob = charroots.CharProblem(-0.1, -0.4, 22.0)
    r1 = charroots.char_roots(prob, 16).roots.real
    r2 = charroots.char_roots(prob, 32).roots.real[:16]
    checks.append(
        ("doubling stability", bool(np.max(np.abs(r1 - r2)) <= 1e-9), "")
    )
    return checks


def _suite_cocycle(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    from scipy.linalg import expm

    ok = True
    for _ in range(10):
        n = int(rng.integers(2, 5))
        A = rng.normal(size=(n, n))
        coc = cocycle.MatrixCocycle((0,), lambda q: q, lambda q, t: expm(A * t), n, 1.0)
        m = int(rng.integers(1, n + 1))
        # horizon short enough that the direct SVD oracle stays in range
        g = cocycle.volume_growth_qr(coc, 0, m, 5.0, 1.0)
        direct = math.fsum(math.log(s) for s in np.linalg.svd(expm(A * 5.0), compute_uv=False)[:m])
        ok = ok and abs(g.log_omega - direct) <= 1e-6
        # full-dimension long horizon against determinant multiplicativity
        g_n = cocycle.volume_growth_qr(coc, 0, n, 20.0, 1.0)
        ok = ok and abs(g_n.log_omega - 20.0 * np.linalg.slogdet(expm(A))[1]) <= 1e-8
    checks.append(("QR matches product SVD", ok, ""))
    rates = [np.diag([1.0, -1.0, -1.0]), np.diag([0.5, 0.0, -1.0]), np.diag([0.2, 0.2, 0.2])]
    coc = cocycle.MatrixCocycle(
        (0, 1, 2), lambda q: q, lambda q, t: np.diag(np.exp(np.diag(rates[q]) * t)), 3, 1.0
    )
    rep = cocycle.uniform_exponents(coc, 3, 32.0)
    ok = np.allclose(rep.lambdas, [1.0, -0.5, 0.1], atol=1e-12)
    checks.append(("three-equilibria exponents", bool(ok), ""))
    checks.append(
        ("saturated dimension", cocycle.kaplan_yorke(rep.lambdas, 3) == 3.0, "")
    )
    ok = True
    for _ in range(5):
        n = 3
        A = rng.normal(size=(n, n)) - 1.5 * np.eye(n)
        coc = cocycle.MatrixCocycle((0,), lambda q: q, lambda q, t: expm(A * t), n, 0.5)
        ky = cocycle.kaplan_yorke(cocycle.uniform_exponents(coc, n, 40.0).lambdas, n)
        ld = cocycle.lyapunov_dimension(coc, 40.0, 1e-9).value
        ok = ok and (ky - 1.0 < ld + 1e-6) and (ld <= ky + 1e-6)
    checks.append(("dimension sandwich", ok, ""))
    return checks


def _suite_delayop(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    kappa, tau = 0.7, 1.3
    profile = delayop.WeightProfile((kappa,), (-tau, 0.0))
    grid = delayop.TailGrid.for_profile(profile, 32)
    one = delayop.DiscretizedElement.from_functions(grid, [0.0], lambda th: np.ones_like(th))
    got = delayop.weighted_inner(one, one, profile)
    want = (1.0 - math.exp(-kappa * tau)) / kappa
    checks.append(("weighted inner closed form", abs(got - want) <= 1e-10, f"err {abs(got-want):.2e}"))

    spec = delayop.DelayOperatorSpec(1, tau, [[-0.3]], [[0.8]])
    v = delayop.DiscretizedElement.from_functions(
        grid, [math.cos(0.0)], lambda th: np.cos(1.1 * th)
    )
    y = rng.normal(size=1)
    shift = float(rng.normal())

    def gfun(th):
        return np.cos(0.9 * th) + 0.3 * np.sin(2.0 * th) + shift

    cJ = 0.8 * y[0] - gfun(-tau)
    w = delayop.DiscretizedElement.from_functions(
        grid, y, lambda th: (gfun(th) + cJ) / np.exp(kappa * th)
    )
    lhs = delayop.weighted_inner(delayop.apply_L(spec, v), w, profile)
    rhs = delayop.weighted_inner(v, delayop.apply_L_star(spec, profile, w), profile)
    checks.append(("adjoint identity (smooth)", abs(lhs - rhs) <= 1e-8, f"defect {abs(lhs-rhs):.2e}"))

    # intersection elements: tail(0) = head and rho(-tau) tail(-tau) = L_tau^T head
    def cross(x):
        target = 0.8 * x * math.exp(kappa * tau)
        slope = (math.cos(1.1 * tau) - target / x) / tau if x else 0.0
        return lambda th: x * (np.cos(1.1 * th) + slope * th)

    v2 = delayop.DiscretizedElement.from_functions(grid, [1.0], cross(1.0))
    w2 = delayop.DiscretizedElement.from_functions(grid, [0.37], cross(0.37))
    sv = delayop.symmetrize_S(spec, profile, v2)
    lhs2 = 2.0 * delayop.weighted_inner(sv, w2, profile)
    rhs2 = delayop.weighted_inner(
        delayop.apply_L(spec, v2), w2, profile
    ) + delayop.weighted_inner(delayop.apply_L_star(spec, profile, v2), w2, profile)
    checks.append(("symmetrization identity", abs(lhs2 - rhs2) <= 1e-8, f"defect {abs(lhs2-rhs2):.2e}"))

    beta, gamma, k = 0.2, 0.1, 10.0
    fp = (2.0 - k) / 4.0
    spec_mg = delayop.DelayOperatorSpec(1, tau, [[-gamma]], [[beta * fp]])
    _, ev = delayop.symmetrized_matrix(spec_mg, profile)
    lam_want = 1.0 - 2.0 * gamma + beta**2 * math.exp(kappa * tau) * fp**2
    checks.append(("scalar head eigenvalue", abs(ev[0] - lam_want) <= 1e-10, ""))
    return checks


def _suite_dde(seed: int):
    checks = []
    model = dde.linear_scalar(-1.0, 0.0, 1.0)
    traj = dde.integrate(model, dde.HistorySegment.constant(1.0, 1.0), 3.0, 1e-2)
    err = abs(traj.value(3.0)[0] - math.exp(-3.0))
    checks.append(("pure decay", err <= 1e-8, f"err {err:.2e}"))
    lin = dde.linear_scalar(0.0, -1.0, 1.0)
    traj = dde.integrate(lin, dde.HistorySegment.constant(1.0, 1.0), 2.0, 1.0 / 64.0)
    e1 = abs(traj.value(0.5)[0] - 0.5)
    e2 = abs(traj.value(1.5)[0] - (1.0 - 1.5 + 0.25 / 2.0))
    checks.append(("method-of-steps closed form", max(e1, e2) <= 1e-10, ""))
    mg = dde.mackey_glass(0.2, 0.1, 10.0, 2.0)
    xbar = dde.mackey_glass_equilibria(0.2, 0.1, 10.0)[1]
    traj = dde.integrate(mg, dde.HistorySegment.constant(xbar, 2.0), 10.0, 2.0 / 32.0)
    drift = np.abs(traj.values - xbar).max()
    checks.append(("equilibrium fixed point", drift <= 1e-12, f"drift {drift:.2e}"))
    traj = dde.integrate(lin, dde.HistorySegment.constant(1.0, 1.0), 5.0, 1.0 / 32.0)
    M2 = dde.linearized_monodromy(lin, traj, 1.0, 24, span=2)
    Ma = dde.linearized_monodromy(lin, traj, 1.0, 24)
    Mb = dde.linearized_monodromy(lin, traj, 2.0, 24)
    rel = np.linalg.norm(M2 - Mb @ Ma) / np.linalg.norm(M2)
    checks.append(("monodromy composition", rel <= 1e-6, f"rel {rel:.2e}"))
    return checks


_SUITES = {
    "tensor": _suite_tensor,
    "bounds": _suite_bounds,
    "charroots": _suite_charroots,
    "cocycle": _suite_cocycle,
    "delayop": _suite_delayop,
    "dde": _suite_dde,
}


def cmd_verify(args) -> int:
    opts = _merge(args, dict(suite="all"))
    names = list(_SUITES) if opts["suite"] == "all" else [opts["suite"]]
    bad = [n for n in names if n not in _SUITES]
    if bad:
        raise InputError(f"unknown suite(s) {bad}; choose from {sorted(_SUITES)} or all")
    failures = 0
    lines = []
    for name in names:
        for check, ok, detail in _SUITES[name](args.seed):
            status = "PASS" if ok else "FAIL"
            failures += 0 if ok else 1
            suffix = f"  ({detail})" if detail else ""
            lines.append(f"{status}  {name}: {check}{suffix}")
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if failures else 0


# ---------------------------------------------------------------- sweep


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 4:
        raise InputError("range must be start:stop:points:lin|log")
    start, stop, pts, spacing = float(parts[0]), float(parts[1]), int(parts[2]), parts[3]
    if pts < 2 or stop <= start:
        raise InputError("range needs stop > start and points >= 2")
    if spacing == "log":
        if start <= 0:
            raise InputError("log spacing needs start > 0")
        return np.logspace(math.log10(start), math.log10(stop), pts)
    if spacing == "lin":
        return np.linspace(start, stop, pts)
    raise InputError(f"unknown spacing {spacing!r}")


def _sweep_cell(payload):
    kind, opts, tau, seed = payload
    opts = dict(opts, tau=tau)
    if kind == "bound":
        model = opts["model"]
        if model == "mackey_glass":
            res = bounds.mackey_glass_bound(
                float(opts["beta"]), float(opts["gamma"]), float(opts["k"]), tau,
                opts.get("lambda_mode") or "rough",
            )
        elif model == "suarez_schopf":
            res = bounds.suarez_schopf_bound(float(opts["alpha"]), float(opts["gamma"] or 1.0), tau)
        else:
            res = bounds.scalar_bound(bounds.BoundProblem(tau, float(opts["a"]), float(opts["b"])))
        return [tau, float(res.d_star)]
    if kind in ("local_dim", "unstable"):
        prob = _equilibrium_problem(opts)
        fn = charroots.local_dimension if kind == "local_dim" else charroots.unstable_count
        return [tau, float(charroots._evaluate_with_growth(prob, fn))]
    if kind == "lyap":
        model = _build_model(opts)
        rep = dde.numerical_lyapunov_spectrum(
            model, 50.0 * tau, 80.0 * tau, int(opts.get("m") or 6), seed=seed
        )
        return [tau, float(rep.lambdas[0]), float(rep.ky) if rep.ky is not None else ""]
    raise InputError(f"unknown sweep quantity {kind!r}")


def cmd_sweep(args) -> int:
    opts = _merge(
        args,
        dict(
            model=None,
            beta=None,
            gamma=None,
            k=None,
            alpha=None,
            a=None,
            b=None,
            equilibrium="plus",
            quantity="bound",
            tau_range=None,
            lambda_mode=None,
            m=None,
        ),
    )
    _require(opts, "model", "tau_range")
    taus = _parse_range(str(opts["tau_range"]))
    kind = opts["quantity"]
    if kind not in ("bound", "local_dim", "unstable", "lyap"):
        raise InputError(f"unknown quantity {kind!r}")
    payloads = [(kind, {k: v for k, v in opts.items() if k != "tau_range"}, float(t), args.seed)
                for t in taus]
    jobs = args.jobs or int(os.environ.get("LYAPDIM_JOBS", "1"))
    if jobs > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(jobs) as pool:
            rows = pool.map(_sweep_cell, payloads)
    else:
        rows = [_sweep_cell(p) for p in payloads]
    w = _Writer(args.output, args.format)
    cols = {"bound": ["tau", "d_star"], "local_dim": ["tau", "local_dim"],
            "unstable": ["tau", "n_unstable"], "lyap": ["tau", "lambda_1", "ky"]}[kind]
    if kind in ("local_dim", "unstable"):
        x = np.array([r[0] for r in rows])
        y = np.array([r[1] for r in rows])
        A = np.vstack([x, np.ones_like(x)]).T
        slope, intercept = np.linalg.lstsq(A, y, rcond=None)[0]
        w.comment(f"slope {float(slope)!r} intercept {float(intercept)!r}")
    w.table(cols, rows)
    w.flush()
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lyapdim",
        description="Upper bounds and numerical ground truth for Lyapunov "
        "dimensions of delay systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--output", help="output path (default stdout)")
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=None)

    model_flags = dict(
        model=str, beta=float, gamma=float, k=float, alpha=float, forcing=float,
        a=float, b=float, tau=float,
    )

    p = sub.add_parser("bound", help="analytic dimension bound")
    common(p)
    for name, typ in model_flags.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--scaled", action="store_const", const=True, default=None)
    p.add_argument("--lambda-mode", dest="lambda_mode", choices=("rough", "tight"))

    p = sub.add_parser("roots", help="characteristic root table")
    common(p)
    for name, typ in model_flags.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--equilibrium", choices=("plus", "minus", "zero"))
    p.add_argument("--count", type=int)

    p = sub.add_parser("simulate", help="integrate a model, emit trajectory CSV")
    common(p)
    for name, typ in model_flags.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--history")

    p = sub.add_parser("lyap", help="numerical Lyapunov spectrum")
    common(p)
    for name, typ in model_flags.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--m", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("verify", help="run module invariant suites")
    common(p)
    p.add_argument("--suite")

    p = sub.add_parser("sweep", help="quantity over a tau grid")
    common(p)
    for name, typ in model_flags.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--equilibrium", choices=("plus", "minus", "zero"))
    p.add_argument("--quantity")
    p.add_argument("--tau-range", dest="tau_range")
    p.add_argument("--lambda-mode", dest="lambda_mode", choices=("rough", "tight"))
    p.add_argument("--m", type=int)

    return ap


_DISPATCH = {
    "bound": cmd_bound,
    "roots": cmd_roots,
    "simulate": cmd_simulate,
    "lyap": cmd_lyap,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _DISPATCH[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, NeedsMoreRootsError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
