"""Numerical verification of the stability conditions and gain-bound estimation.

Eigenvalue conditions report ``margin`` as the largest eigenvalue that has to
be negative (so ``pass == margin < -tol``). Sampled reaching conditions report
the worst ``s s'`` found.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .controllers import control_gain
from .numerics import (DEFAULT_TOL, DimensionError, NotHurwitz, _square, lambda_max, lambda_min,
                       lyapunov_expr, solve_lyapunov, sym)
from .plant import LinearModel, ModelBank
from .surfaces import SlidingSurfaceSpec

DEFAULT_S_FLOOR = 0.01


@dataclass
class StabilityReport:
    condition: str
    passed: bool
    margin: float
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed and self.witness is not None:
            raise ValueError("a passing report carries no witness")
        if not self.passed and self.witness is None:
            self.witness = {}

    def to_text(self, prefix: str = "") -> str:
        """``key = value`` lines, same family as the scenario format."""
        p = f"{prefix}." if prefix else ""
        lines = [f"{p}condition = {self.condition}",
                 f"{p}pass = {'true' if self.passed else 'false'}",
                 f"{p}margin = {_fmt(self.margin)}"]
        for k, v in sorted(self.details.items()):
            lines.append(f"{p}details.{k} = {_fmt(v)}")
        if self.witness is not None:
            for k, v in sorted(self.witness.items()):
                lines.append(f"{p}witness.{k} = {_fmt(v)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.ndarray):
        return ", ".join(repr(float(x)) for x in v.reshape(-1))
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class GainBound:
    k_min: float
    region_radius: float
    sample_count: int
    note: str = ""
    seed: int = 0
    s_floor: float = DEFAULT_S_FLOOR
    sampled_sup: float = float("nan")
    witness: tuple[float, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.k_min):
            raise ValueError("k_min must be finite")
        if not self.region_radius > 0:
            raise ValueError("region radius must be > 0")


@dataclass(frozen=True)
class Infeasible:
    """No common ``P`` was found (not a proof of infeasibility)."""

    best_margin: float
    best_p: np.ndarray | None = None
    reason: str = ""

    def __bool__(self):
        return False


def _matrices(bank) -> list[np.ndarray]:
    if isinstance(bank, (ModelBank, LinearModel)):
        bank = [bank] if isinstance(bank, LinearModel) else list(bank)
    out = [m.a if isinstance(m, LinearModel) else _square(m) for m in bank]
    if not out:
        raise ValueError("need at least one matrix")
    n = out[0].shape[0]
    if any(m.shape != (n, n) for m in out):
        raise DimensionError("all matrices must share dimensions")
    return out


def _lyapunov_report(condition: str, members: list[tuple[object, np.ndarray]], p, tol: float,
                     details: dict | None = None) -> StabilityReport:
    """Common-P test over ``members`` given as ``(label, matrix)`` pairs."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    p = _square(p)
    n = members[0][1].shape[0]
    if p.shape != (n, n):
        raise DimensionError(f"P is {p.shape[0]}x{p.shape[1]}, members are {n}x{n}")
    if not np.allclose(p, p.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(p).max()))):
        raise ValueError("P must be symmetric")
    p = sym(p)
    p_min = lambda_min(p)
    worst, worst_label, worst_m = -math.inf, None, None
    for label, m in members:
        lam = lambda_max(lyapunov_expr(m, p))
        if lam > worst:
            worst, worst_label, worst_m = lam, label, m
    p_ok = p_min > tol
    margin = worst if p_ok else max(worst, -p_min)
    passed = margin < -tol
    det = {"tol": tol, "p_lambda_min": p_min}
    det.update(details or {})
    witness = None
    if not passed:
        if not p_ok:
            witness = {"kind": "p-not-positive-definite", "p_lambda_min": p_min, "lambda_max": worst}
        else:
            witness = {"kind": "lyapunov", "member": worst_label, "matrix": worst_m,
                       "lambda_max": worst}
    return StabilityReport(condition, passed, float(margin), witness, det)


def check_free_regime(bank, p, tol: float = DEFAULT_TOL) -> StabilityReport:
    """``P > 0`` and ``A_i^T P + P A_i < 0`` for every member."""
    mats = _matrices(bank)
    return _lyapunov_report("free-regime", list(enumerate(mats)), p, tol)


def check_state_feedback(bank, gains, p, tol: float = DEFAULT_TOL) -> StabilityReport:
    """Diagonal ``G_ii`` and symmetrised cross ``(G_ij + G_ji)/2`` conditions, ``G_ij = A_i - B_i k_j``."""
    models = list(bank) if not isinstance(bank, LinearModel) else [bank]
    gains = [np.asarray(k, dtype=float).reshape(-1) for k in gains]
    if len(gains) != len(models):
        raise DimensionError(f"{len(gains)} gains for {len(models)} models")
    n = models[0].n
    if any(k.shape != (n,) for k in gains):
        raise DimensionError(f"gain rows must have {n} entries")
    g = [[m.a - np.outer(m.b, k) for k in gains] for m in models]
    members = [(i, g[i][i]) for i in range(len(models))]
    for i in range(len(models)):
        for j in range(i + 1, len(models)):
            members.append(((i, j), 0.5 * (g[i][j] + g[j][i])))
    return _lyapunov_report("state-feedback", members, p, tol)


def reduced_dynamics(model: LinearModel, spec: SlidingSurfaceSpec) -> np.ndarray:
    """Order-(n-1) sliding dynamics of ``X_{n-1}`` on ``s = 0``.

    The equivalent control removes the input from the first ``n-1`` equations,
    then ``x_n = -L X_{n-1}`` is substituted. When the first ``n-1`` entries of
    ``b`` vanish this is plain substitution, ``A11 - A12 L``.
    """
    if model.n != spec.n:
        raise DimensionError(f"model has {model.n} states, surface expects {spec.n}")
    n = model.n
    row = spec.row
    lvec = spec.reduction_gain()
    b_top = model.b[: n - 1]
    if np.any(b_top != 0.0):
        cb = control_gain(model, spec)
        a_eq = model.a - np.outer(model.b, row @ model.a) / cb
    else:
        a_eq = model.a
    return a_eq[: n - 1, : n - 1] - np.outer(a_eq[: n - 1, n - 1], lvec)


def check_reduced_surface(bank, l_per_model, p_reduced=None, tol: float = DEFAULT_TOL) -> StabilityReport:
    """Common ``P_{n-1}`` for the reduced sliding dynamics of every submodel.

    ``l_per_model`` is one surface (shared) or one per model; raw vectors are
    read as reduced-kind coefficients. ``p_reduced=None`` searches for ``P``.
    """
    models = [bank] if isinstance(bank, LinearModel) else list(bank)
    specs = _as_specs(l_per_model, len(models))
    mats = [reduced_dynamics(m, s) for m, s in zip(models, specs)]
    details = {"reduction": "equivalent-control" if any(np.any(m.b[:-1] != 0) for m in models)
               else "substitution"}
    if p_reduced is None:
        found = find_common_p(mats, tol)
        if isinstance(found, Infeasible):
            return StabilityReport("reduced-surface", False, found.best_margin,
                                   {"kind": "no-common-p", "reason": found.reason}, details)
        p_reduced = found
    return _lyapunov_report("reduced-surface", list(enumerate(mats)), p_reduced, tol, details)


def _as_specs(l_per_model, n_models: int) -> list[SlidingSurfaceSpec]:
    if isinstance(l_per_model, SlidingSurfaceSpec):
        return [l_per_model] * n_models
    items = list(l_per_model)
    if items and not isinstance(items[0], (SlidingSurfaceSpec, list, tuple, np.ndarray)):
        items = [items]
    specs = [it if isinstance(it, SlidingSurfaceSpec) else SlidingSurfaceSpec.reduced(it) for it in items]
    if len(specs) == 1:
        specs = specs * n_models
    if len(specs) != n_models:
        raise DimensionError(f"{len(specs)} surfaces for {n_models} models")
    return specs


# --- gain bound -----------------------------------------------------------------

def sample_region(row, radius: float, samples: int, seed: int, s_floor: float = DEFAULT_S_FLOOR) -> np.ndarray:
    """States with ``|x| <= radius`` and ``|row x| >= s_floor``.

    ``|s|`` is log-uniform on ``[s_floor, |row| radius]`` with a random sign;
    the component orthogonal to ``row`` has a uniform direction and a radius
    uniform in volume within the remaining ball.
    """
    row = np.asarray(row, dtype=float).reshape(-1)
    n = row.shape[0]
    nc = float(np.linalg.norm(row))
    s_max = nc * radius
    if not 0 < s_floor < s_max:
        raise ValueError("need 0 < s_floor < |row| * radius")
    rng = np.random.default_rng(seed)
    s = np.exp(rng.uniform(math.log(s_floor), math.log(s_max), samples))
    s *= np.where(rng.random(samples) < 0.5, -1.0, 1.0)
    chat = row / nc
    g = rng.standard_normal((samples, n))
    g -= np.outer(g @ chat, chat)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rest = np.sqrt(np.maximum(radius**2 - (s / nc) ** 2, 0.0))
    if n > 1:
        rest = rest * rng.random(samples) ** (1.0 / (n - 1))
    else:
        rest = np.zeros(samples)
    return np.outer(s / nc, chat) + g * rest[:, None]


def _ratio(xs, ca, row, cb_abs, m_bound):
    s = xs @ row
    num = np.sign(s) * (xs @ ca) + m_bound * float(np.linalg.norm(row)) * np.linalg.norm(xs, axis=-1)
    return num / (cb_abs * np.abs(s))


def reaching_products(model: LinearModel, spec: SlidingSurfaceSpec, m_bound: float, k: float, xs) -> np.ndarray:
    """``s s'`` under ``u = -sign(CB) k s`` and the worst admissible disturbance."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    row = spec.row
    cb = control_gain(model, spec)
    s = xs @ row
    u = -math.copysign(1.0, cb) * k * s
    s_dot = xs @ (model.a.T @ row) + cb * u + np.sign(s) * m_bound * np.linalg.norm(row) * np.linalg.norm(xs, axis=1)
    return s * s_dot


def gain_bound_closed_form(model: LinearModel, spec: SlidingSurfaceSpec, m_bound: float,
                           radius: float, s_floor: float = DEFAULT_S_FLOOR) -> float:
    """Exact supremum of the gain ratio over the region (analytic oracle).

    The ratio is scale-invariant in ``x``, so the sup sits at ``|s| = s_floor``,
    ``|x| = radius`` with the orthogonal part aligned to ``(CA)_perp``.
    """
    row = spec.row
    cb = abs(control_gain(model, spec))
    nc = float(np.linalg.norm(row))
    ca = model.a.T @ row
    alpha = float(ca @ row) / nc
    perp = float(np.linalg.norm(ca - alpha * row / nc))
    beta = s_floor / radius
    return alpha / (nc * cb) + (perp * math.sqrt(max(1.0 - (beta / nc) ** 2, 0.0)) + m_bound * nc) / (cb * beta)


def _polish(x0, ca, row, cb_abs, m_bound, radius, s_floor):
    """Local ascent of the ratio from ``x0`` over unit directions.

    The ratio is scale-invariant, so ``x = sign R (t c_hat + sqrt(1-t^2) Q y/|y|)``
    with ``t >= s_floor / (R |c|)`` covers the region boundary where the sup lives.
    """
    nc = float(np.linalg.norm(row))
    chat = row / nc
    q = np.linalg.svd(np.eye(row.shape[0]) - np.outer(chat, chat))[0][:, : row.shape[0] - 1]
    sign = math.copysign(1.0, float(x0 @ row))
    xh = sign * x0 / np.linalg.norm(x0)
    t_lo = s_floor / (radius * nc)

    def point(z):
        t, y = z[0], z[1:]
        ny = np.linalg.norm(y)
        w = q @ (y / ny) if ny > 0 else np.zeros_like(row)
        return sign * radius * (t * chat + math.sqrt(max(1.0 - t * t, 0.0)) * w)

    scale = abs(float(_ratio(x0, ca, row, cb_abs, m_bound))) or 1.0
    z0 = np.concatenate([[min(max(float(xh @ chat), t_lo), 1.0)], q.T @ xh])
    res = minimize(lambda z: -float(_ratio(point(z), ca, row, cb_abs, m_bound)) / scale, z0,
                   method="L-BFGS-B", bounds=[(t_lo, 1.0)] + [(None, None)] * (row.shape[0] - 1),
                   options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-12})
    x = point(res.x)
    if x @ x > radius**2 * (1 + 1e-9) or sign * (x @ row) < s_floor * (1 - 1e-9):
        return None
    return x


def estimate_gain_bound(model: LinearModel, spec: SlidingSurfaceSpec, m_bound: float, radius: float = 2.0,
                        samples: int = 5000, seed: int = 0, s_floor: float = DEFAULT_S_FLOOR,
                        polish: int = 5) -> GainBound:
    """Sampled sup of ``[sgn(s) CAx + M |C| |x|] / (|CB| |s|)`` over the region.

    The best ``polish`` samples are refined by a bounded local ascent. Before returning, every
    evaluated state is checked to satisfy ``s s' < 0`` just above ``k_min``.
    """
    if not m_bound >= 0:
        raise ValueError("m_bound must be >= 0")
    if not radius > 0 or samples < 1:
        raise ValueError("need radius > 0 and samples >= 1")
    row = spec.row
    cb_abs = abs(control_gain(model, spec))
    ca = model.a.T @ row
    xs = sample_region(row, radius, samples, seed, s_floor)
    r = _ratio(xs, ca, row, cb_abs, m_bound)
    sampled_sup = float(r.max())
    pts = [xs]
    for idx in np.argsort(r)[::-1][:polish]:
        x = _polish(xs[idx], ca, row, cb_abs, m_bound, radius, s_floor)
        if x is not None:
            pts.append(x[None, :])
    allx = np.vstack(pts)
    ratios = _ratio(allx, ca, row, cb_abs, m_bound)
    best = int(np.argmax(ratios))
    k_min = max(float(ratios[best]), 0.0)
    k_test = k_min * (1 + 1e-9) + 1e-12
    if np.any(reaching_products(model, spec, m_bound, k_test, allx) >= 0):
        raise ArithmeticError("gain bound failed its self-consistency check")
    note = (f"sup over |x| <= {radius!r}, |s| >= {s_floor!r}; {samples} stratified samples "
            f"(seed {seed}) + {len(pts) - 1} local refinements")
    return GainBound(k_min, float(radius), int(samples), note, int(seed), float(s_floor), sampled_sup,
                     tuple(float(v) for v in allx[best]))


def check_gain(model: LinearModel, spec: SlidingSurfaceSpec, m_bound: float, k: float,
               radius: float = 2.0, samples: int = 5000, seed: int = 0,
               s_floor: float = DEFAULT_S_FLOOR) -> StabilityReport:
    """Relay gain ``k`` against the sampled bound and the sampled reaching products."""
    gb = estimate_gain_bound(model, spec, m_bound, radius, samples, seed, s_floor)
    xs = sample_region(spec.row, radius, samples, seed + 1, s_floor)
    prod = reaching_products(model, spec, m_bound, k, xs)
    worst = int(np.argmax(prod))
    passed = bool(k > gb.k_min and prod[worst] < 0)
    details = {"k": k, "k_min": gb.k_min, "radius": radius, "samples": samples, "seed": seed,
               "s_floor": s_floor}
    witness = None if passed else {"x": xs[worst], "s_sdot": float(prod[worst])}
    return StabilityReport("gain-bound", passed, float(prod[worst]), witness, details)


def check_multi_gain(bank, surfaces, mu, m_bound: float, k, radius: float = 2.0, samples: int = 5000,
                     seed: int = 0, s_floor: float = DEFAULT_S_FLOOR) -> StabilityReport:
    """Aggregate gain ``K > sum mu_i k_min_i`` plus sampled ``S S' < 0``.

    ``k`` is the aggregate gain ``K`` or a list of per-submodel gains (then
    ``K = sum mu_i k_i``). Samples are drawn around ``C_agg = sum mu_i T_i``
    with validities frozen at ``mu``.
    """
    models = [bank] if isinstance(bank, LinearModel) else list(bank)
    specs = _as_specs(surfaces, len(models))
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != len(models):
        raise DimensionError(f"{mu.shape[0]} mu weights for {len(models)} models")
    if np.any(mu <= 0):
        raise ValueError("mu_i must be > 0")
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    big_k = float(k_arr[0]) if k_arr.size == 1 else float(mu @ k_arr)
    bounds = [estimate_gain_bound(m, s, m_bound, radius, samples, seed, s_floor).k_min
              for m, s in zip(models, specs)]
    bound = float(mu @ np.asarray(bounds))
    rows = np.array([s.row for s in specs])
    c_agg = mu @ rows
    xs = sample_region(c_agg, radius, samples, seed + 1, s_floor)
    big_s = xs @ c_agg
    u = -big_k * big_s
    s_dot = np.zeros_like(big_s)
    for mi, m, r in zip(mu, models, rows):
        s_dot += mi * (xs @ (m.a.T @ r) + float(r @ m.b) * u)
    s_dot += np.sign(big_s) * m_bound * np.linalg.norm(c_agg) * np.linalg.norm(xs, axis=1)
    prod = big_s * s_dot
    worst = int(np.argmax(prod))
    passed = bool(big_k > bound and prod[worst] < 0)
    details = {"K": big_k, "bound": bound, "k_min_i": bounds, "mu": mu, "radius": radius,
               "samples": samples, "seed": seed, "s_floor": s_floor}
    witness = None
    if not passed:
        witness = {"x": xs[worst], "S_Sdot": float(prod[worst]), "gain_below_bound": big_k <= bound}
    return StabilityReport("multi-gain", passed, float(prod[worst]), witness, details)


# --- common P search -----------------------------------------------------------

def _lyap_margin(mats, p):
    lams = [lambda_max(lyapunov_expr(m, p)) for m in mats]
    i = int(np.argmax(lams))
    return lams[i], i


SMOOTHING_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


def find_common_p(matrices, tol: float = DEFAULT_TOL, max_iter: int = 3000):
    """Heuristic search for ``P > 0`` with ``A_i^T P + P A_i < 0`` for all members.

    Starts from the Lyapunov solution of the mean matrix. If that fails, it
    minimises a log-sum-exp smoothing of every member's spectrum (and of
    ``-lambda_min(P)``) over ``P = L L^T / tr``, tightening the smoothing
    until the worst eigenvalue is below ``-tol``. Returns ``P`` or
    :class:`Infeasible` ("not found", never a proof).
    """
    mats = _matrices(matrices)
    n = mats[0].shape[0]
    for i, m in enumerate(mats):
        re = float(np.max(np.linalg.eigvals(m).real))
        if re >= 0:
            return Infeasible(re, None, f"member {i} is not Hurwitz (max Re eig {re!r})")
    try:
        p0 = solve_lyapunov(sum(mats) / len(mats), np.eye(n))
    except NotHurwitz:
        p0 = np.eye(n)
    p0 = p0 * (n / np.trace(p0))

    def ok(p):
        margin, _ = _lyap_margin(mats, p)
        return margin < -tol and lambda_min(p) > tol, margin

    passed, margin = ok(p0)
    if passed:
        return p0
    tril = np.tril_indices(n)

    def p_of(theta):
        low = np.zeros((n, n))
        low[tril] = theta
        p = low @ low.T
        return p * (n / np.trace(p))

    def spectrum(p):
        return np.concatenate([np.linalg.eigvalsh(sym(lyapunov_expr(m, p))) for m in mats]
                              + [-np.linalg.eigvalsh(p)[:1]])

    def smooth_max(theta, tau):
        z = spectrum(p_of(theta))
        top = z.max()
        return top + tau * math.log(float(np.sum(np.exp((z - top) / tau))))

    theta = np.linalg.cholesky(p0)[tril]
    best_p, best = p0, margin
    for tau in SMOOTHING_SCHEDULE:
        theta = minimize(smooth_max, theta, args=(tau,), method="L-BFGS-B",
                         options={"maxiter": max_iter}).x
        p = sym(p_of(theta))
        passed, margin = ok(p)
        if margin < best:
            best, best_p = margin, p
        if passed:
            return p
    return Infeasible(float(best), best_p, "no common P found by the smoothed search")
