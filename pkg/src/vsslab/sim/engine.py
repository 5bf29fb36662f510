"""Scenario compilation and the closed-loop simulation driver."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..controllers import SurfaceDegenerate, control_gain
from ..plant import (DisturbanceSpec, LinearModel, ModelBank, auv_nominal, build_model_bank,
                     disturbance_factor)
from ..smmm import SmmmConfig
from ..stability import estimate_gain_bound
from ..surfaces import SecondOrderParams, SlidingSurfaceSpec, place_surface
from . import _kernel_py
from .scenario import Scenario

try:
    if os.environ.get("VSSLAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernel requested")
    from . import _kernel as _kernel_c
    BACKEND = "cython"
except ImportError:
    _kernel_c = None
    BACKEND = "python"

STATE_COLUMNS = ("omega", "q", "theta", "z")
AUTO_GAIN_RADIUS = 2.0
AUTO_GAIN_SAMPLES = 5000


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int, t: float):
        self.step = step
        self.t = t
        super().__init__(f"simulation diverged at step {step} (t={t!r})")


@dataclass
class Program:
    """Flat numeric description of one closed loop, consumed by the kernels."""

    a: np.ndarray
    b: np.ndarray
    xref: np.ndarray
    cout: np.ndarray
    x0: np.ndarray
    T: np.ndarray
    TA: np.ndarray
    tb: np.ndarray
    kk: np.ndarray
    H: np.ndarray
    G: np.ndarray
    dfac: np.ndarray
    m_ctrl: float
    m_dist: float
    eps: float
    alpha: float
    k2: float
    dt: float
    order: int
    multi: bool
    use_bank: bool
    reinforced: bool
    filt: float
    nsteps: int


@dataclass
class SimTrace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray | None
    s_i: np.ndarray | None
    phi: np.ndarray | None
    kind: str
    scenario_hash: str = ""
    seed: int = 0

    def __len__(self):
        return self.t.shape[0]

    def columns(self) -> dict[str, np.ndarray]:
        """Signals in CSV column order."""
        cols = {"t": self.t}
        for j, name in enumerate(STATE_COLUMNS):
            cols[name] = self.x[:, j]
        cols["u"] = self.u
        cols["s"] = self.s
        if self.v is not None:
            for i in range(self.v.shape[1]):
                cols[f"v{i + 1}"] = self.v[:, i]
        if self.s_i is not None:
            for i in range(self.s_i.shape[1]):
                cols[f"s{i + 1}"] = self.s_i[:, i]
        return cols


def disturbance_spec(sc: Scenario) -> DisturbanceSpec:
    direction = sc.disturbance_direction
    if direction == "matched":
        direction = None
    elif direction == "velocity":
        direction = (1.0, 1.0, 0.0, 0.0)
    return DisturbanceSpec(sc.disturbance_m_bound, sc.disturbance_kind, sc.disturbance_frequency,
                           sc.seed, direction)


def shared_surface(sc: Scenario, model: LinearModel) -> SlidingSurfaceSpec:
    if sc.surface_c:
        return SlidingSurfaceSpec.full_row(sc.surface_c)
    if sc.surface_l:
        return SlidingSurfaceSpec.reduced(sc.surface_l)
    return place_surface(model, sc.surface_poles)


def scenario_bank(sc: Scenario) -> ModelBank:
    nominal = auv_nominal()
    if not sc.is_multimodel:
        return ModelBank((nominal,))
    return build_model_bank(nominal, sc.bank_n, sc.bank_delta)


def scenario_surfaces(sc: Scenario, bank: ModelBank) -> tuple[SlidingSurfaceSpec, ...]:
    """One shared surface, or one per submodel for the multi-surface controller."""
    if sc.controller_kind == "smmm-multi" and sc.surface_per_model and not (sc.surface_c or sc.surface_l):
        return tuple(place_surface(m, sc.surface_poles) for m in bank)
    return (shared_surface(sc, auv_nominal()),)


def resolve_gains(sc: Scenario, bank: ModelBank, surfaces) -> tuple[float, ...]:
    n = len(bank)
    if sc.smmm_k == "auto":
        out = []
        for i, m in enumerate(bank):
            spec = surfaces[i] if len(surfaces) > 1 else surfaces[0]
            gb = estimate_gain_bound(m, spec, sc.controller_m_bound, AUTO_GAIN_RADIUS, AUTO_GAIN_SAMPLES, sc.seed)
            out.append(2.0 * gb.k_min)
        return tuple(out)
    k = tuple(sc.smmm_k)
    return k * n if len(k) == 1 else k


def smmm_config(sc: Scenario) -> tuple[ModelBank, SmmmConfig]:
    bank = scenario_bank(sc)
    surfaces = scenario_surfaces(sc, bank)
    order = 2 if sc.controller_kind == "smmm2" else 1
    cfg = SmmmConfig(resolve_gains(sc, bank, surfaces), surfaces, sc.smmm_mu or (), sc.smmm_epsilon,
                     sc.controller_m_bound, order, SecondOrderParams(sc.smc2_alpha), sc.smc2_k2)
    return bank, cfg


def _rk4_transition(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """``(Phi, Gamma)`` with one RK4 step of ``x' = a x + b u`` equal to ``Phi x + Gamma u``."""
    n = a.shape[0]
    eye = np.eye(n)
    ad = a * dt
    ad2 = ad @ ad
    ad3 = ad2 @ ad
    phi = eye + ad + ad2 / 2.0 + ad3 / 6.0 + ad3 @ ad / 24.0
    gam = (eye + ad / 2.0 + ad2 / 6.0 + ad3 / 24.0) @ b * dt
    return phi, gam


def disturbance_table(sc: Scenario, model: LinearModel) -> np.ndarray:
    """Unit disturbance factors at the three distinct RK4 stage times of every step."""
    n = model.n
    steps = sc.steps
    d = disturbance_spec(sc)
    out = np.zeros((steps + 1, 3, n))
    if d.kind == "off" or d.m_bound == 0.0:
        return out
    dt = sc.dt
    for k in range(steps + 1):
        t = k * dt
        if d.kind == "sinusoidal":
            for st, tt in enumerate((t, t + 0.5 * dt, t + dt)):
                out[k, st] = disturbance_factor(d, tt, k, model, n)
        else:
            out[k, :] = disturbance_factor(d, t, k, model, n)
    return out


def compile_program(sc: Scenario) -> tuple[Program, dict]:
    nominal = auv_nominal()
    kind = sc.controller_kind
    try:
        if kind in ("smc1", "smc2"):
            models = [nominal]
            surfaces = (shared_surface(sc, nominal),)
            gains = (0.0,)
            eps = sc.smc1_epsilon
        else:
            bank, cfg = smmm_config(sc)
            models = list(bank)
            surfaces = cfg.surfaces
            gains = cfg.gains
            eps = cfg.epsilon
        rows, ta, tb = [], [], []
        for i, m in enumerate(models):
            spec = surfaces[i] if len(surfaces) > 1 else surfaces[0]
            tb.append(control_gain(m, spec, f"submodel {i}" if len(models) > 1 else ""))
            rows.append(spec.row)
            ta.append(spec.row @ m.a)
    except SurfaceDegenerate as exc:
        raise SurfaceDegenerate(f"controller {kind}: {exc}") from None
    npart = len(models)
    h = np.zeros((npart, nominal.n))
    g = np.zeros(npart)
    use_bank = kind in ("smmm1", "smmm2", "smmm-multi")
    if use_bank:
        for i, m in enumerate(models):
            phi, gam = _rk4_transition(m.a, m.b, sc.dt)
            h[i] = m.c_out @ phi
            g[i] = float(m.c_out @ gam)
    xref = np.array([0.0, 0.0, 0.0, sc.z_ref])
    d = disturbance_spec(sc)
    prog = Program(
        a=np.ascontiguousarray(nominal.a), b=np.ascontiguousarray(nominal.b), xref=xref,
        cout=np.ascontiguousarray(nominal.c_out), x0=np.array(sc.x0, dtype=float),
        T=np.ascontiguousarray(rows, dtype=float), TA=np.ascontiguousarray(ta, dtype=float),
        tb=np.array(tb), kk=np.array(gains, dtype=float), H=h, G=g,
        dfac=disturbance_table(sc, nominal),
        m_ctrl=float(sc.controller_m_bound), m_dist=0.0 if d.kind == "off" else float(d.m_bound),
        eps=float(eps), alpha=float(sc.smc2_alpha), k2=float(sc.smc2_k2), dt=float(sc.dt),
        order=2 if kind in ("smc2", "smmm2") else 1, multi=kind == "smmm-multi", use_bank=use_bank,
        reinforced=sc.validity_mode == "reinforced",
        filt=1.0 if sc.validity_filter == 0.0 else sc.dt / (sc.validity_filter + sc.dt),
        nsteps=sc.steps,
    )
    meta = {"models": models, "surfaces": surfaces, "gains": gains}
    return prog, meta


def run_program(prog: Program, backend: str | None = None):
    backend = backend or BACKEND
    steps = prog.nsteps + 1
    n = prog.a.shape[0]
    npart = prog.T.shape[0]
    X = np.zeros((steps, n))
    U = np.zeros(steps)
    SV = np.zeros(steps)
    SI = np.zeros((steps, npart))
    V = np.zeros((steps, npart))
    PHI = np.zeros((steps, n))
    if backend == "cython":
        if _kernel_c is None:
            raise RuntimeError("compiled kernel is not available")
        div = _kernel_c.run_kernel(prog, X, U, SV, SI, V, PHI)
    elif backend == "python":
        div = _kernel_py.run_kernel(prog, X, U, SV, SI, V, PHI)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return int(div), X, U, SV, SI, V, PHI


def run_simulation(sc: Scenario, backend: str | None = None) -> SimTrace:
    """Closed loop of the scenario's controller against the disturbed plant.

    Raises :class:`SimulationDiverged` naming the step at which the state
    left the finite range.
    """
    prog, _ = compile_program(sc)
    div, X, U, SV, SI, V, PHI = run_program(prog, backend)
    if div >= 0:
        raise SimulationDiverged(div, div * sc.dt)
    t = np.arange(prog.nsteps + 1) * sc.dt
    multimodel = sc.is_multimodel
    trace = SimTrace(
        t=t, x=X, u=U, s=SV, v=V if multimodel else None,
        s_i=SI if sc.controller_kind == "smmm-multi" else None, phi=PHI,
        kind=sc.controller_kind, scenario_hash=sc.hash(), seed=sc.seed,
    )
    if not all(np.all(np.isfinite(a)) for a in (X, U, SV, SI, V, PHI)):
        raise SimulationDiverged(int(np.argmax(~np.isfinite(U))), math.nan)
    return trace
