"""Single-model sliding-mode laws: relay term, reaching law, first and second order."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import DimensionError
from .plant import LinearModel
from .surfaces import SecondOrderParams, SlidingSurfaceSpec


class SurfaceDegenerate(ValueError):
    """``C B = 0``: the surface has no control authority."""


def sgn(v: float) -> float:
    """Sign with ``sgn(0) = 0``."""
    v = float(v)
    return float((v > 0.0) - (v < 0.0))


@dataclass(frozen=True)
class Smc1Params:
    k: float = 0.5
    epsilon: float = 0.5
    m_bound: float = 0.1

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.m_bound >= 0:
            raise ValueError("m_bound must be >= 0")


@dataclass(frozen=True)
class Smc2State:
    """Integrator state of the derivative-channel law.

    ``u_prev`` is the control applied on the previous step; it enters the
    nominal ``s'`` used to form ``sigma``.
    """

    params: SecondOrderParams = SecondOrderParams()
    k2: float = 5.0
    u_accum: float = 0.0
    u_prev: float = 0.0

    def __post_init__(self):
        if not self.k2 > 0:
            raise ValueError("k2 must be > 0")
        if not (np.isfinite(self.u_accum) and np.isfinite(self.u_prev)):
            raise ValueError("controller state must be finite")


def control_gain(model: LinearModel, spec: SlidingSurfaceSpec, label: str = "") -> float:
    """``C_eff B``, raising :class:`SurfaceDegenerate` when it vanishes."""
    if model.n != spec.n:
        raise DimensionError(f"model has {model.n} states, surface expects {spec.n}")
    row = spec.row
    cb = float(row @ model.b)
    if abs(cb) <= 1e-12 * float(np.linalg.norm(row)) * float(np.linalg.norm(model.b)):
        where = f" ({label})" if label else ""
        raise SurfaceDegenerate(f"surface row {row.tolist()} has C.B = 0{where}")
    return cb


def switching_control(k: float, s: float) -> float:
    """``-k |s| sign(s) = -k s``."""
    if not k > 0:
        raise ValueError("k must be > 0")
    return -k * s


def reaching_control(model: LinearModel, spec: SlidingSurfaceSpec, p: Smc1Params, x) -> float:
    """``u = -(CB)^-1 (CA + M C) x - sign(CB) eps sgn(s)`` with ``M = m_bound I``.

    At ``s = 0`` the switching term vanishes and only ``-(CB)^-1 CA x`` remains.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    cb = control_gain(model, spec)
    row = spec.row
    s = float(row @ x)
    cax = float(row @ (model.a @ x))
    return -(cax + p.m_bound * s) / cb - sgn(cb) * p.epsilon * sgn(s)


def smc1_step(model: LinearModel, spec: SlidingSurfaceSpec, p: Smc1Params, x) -> float:
    return reaching_control(model, spec, p, x)


def equivalent_control(model: LinearModel, spec: SlidingSurfaceSpec, x) -> float:
    """Nominal ``u`` with ``s' = 0``: ``-(CB)^-1 CA x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    cb = control_gain(model, spec)
    return -float(spec.row @ (model.a @ x)) / cb


def smc2_step(model: LinearModel, spec: SlidingSurfaceSpec, st: Smc2State, p: Smc1Params,
              x, dt: float) -> tuple[float, Smc2State]:
    """Second-order law: the relay acts on ``u'`` through ``sigma = s' + alpha s``.

    ``p`` is accepted for interface symmetry; only ``st`` carries gains here.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x = np.asarray(x, dtype=float).reshape(-1)
    cb = control_gain(model, spec)
    row = spec.row
    ax = model.a @ x
    s = float(row @ x)
    cax = float(row @ ax)
    sigma = cax + cb * st.u_prev + st.params.alpha * s
    acc = st.u_accum - st.k2 * sgn(sigma) * dt
    u = -cax / cb + acc
    return u, replace(st, u_accum=acc, u_prev=u)
