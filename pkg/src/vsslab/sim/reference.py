"""Slow reference loop built from the public step functions.

Independent of the kernels: it integrates with :func:`numerics.rk4_step`,
predicts submodel outputs by integrating each submodel, and calls the
controller step functions directly. Used to cross-check the kernels.
"""
from __future__ import annotations

import numpy as np

from ..controllers import Smc1Params, Smc2State, smc1_step, smc2_step, switching_control
from ..multimodel import ResidueFilter, residues, validity_update
from ..numerics import rk4_step
from ..plant import auv_nominal, disturbance_eval, model_output
from ..smmm import smmm_multi_step, smmm_single_step
from ..surfaces import SecondOrderParams, surface_eval
from .engine import SimTrace, disturbance_spec, shared_surface, smmm_config
from .scenario import Scenario


def run_reference(sc: Scenario, relay_gain: float = 0.0) -> SimTrace:
    """Simulate ``sc``; ``relay_gain`` adds ``-k s`` to the single-model laws."""
    nominal = auv_nominal()
    kind = sc.controller_kind
    xref = np.array([0.0, 0.0, 0.0, sc.z_ref])
    d = disturbance_spec(sc)
    dt = sc.dt
    if kind in ("smc1", "smc2"):
        spec = shared_surface(sc, nominal)
        p = Smc1Params(relay_gain if relay_gain > 0 else 1.0, sc.smc1_epsilon, sc.controller_m_bound)
        st = Smc2State(SecondOrderParams(sc.smc2_alpha), sc.smc2_k2)
        bank = cfg = None
    else:
        bank, cfg = smmm_config(sc)
        states = cfg.initial_states()
        filt = ResidueFilter(sc.validity_filter, dt)
    x = np.array(sc.x0, dtype=float)
    preds = None
    rows = {"x": [], "u": [], "s": [], "v": [], "si": []}
    for k in range(sc.steps + 1):
        t = k * dt
        xe = x - xref
        if bank is None:
            s = surface_eval(spec, xe)
            if kind == "smc1":
                u = smc1_step(nominal, spec, p, xe)
            else:
                u, st = smc2_step(nominal, spec, st, p, xe, dt)
            if relay_gain > 0:
                u = u + switching_control(relay_gain, s)
            v = si = None
        else:
            r = np.zeros(len(bank)) if preds is None else residues(model_output(nominal, x), preds)
            v = validity_update(filt(r), sc.validity_mode) if len(bank) > 1 else np.ones(1)
            if kind == "smmm-multi":
                u, s = smmm_multi_step(bank, cfg, v, xe)
                si = [surface_eval(cfg.surface(i), xe) for i in range(cfg.n)]
            elif cfg.order == 1:
                u = smmm_single_step(bank, cfg, v, xe)
                s, si = surface_eval(cfg.surfaces[0], xe), None
            else:
                u, states = smmm_single_step(bank, cfg, v, xe, states, dt)
                s, si = surface_eval(cfg.surfaces[0], xe), None
        rows["x"].append(x.copy())
        rows["u"].append(u)
        rows["s"].append(s)
        rows["v"].append(v)
        rows["si"].append(si)
        if k == sc.steps:
            break
        if bank is not None:
            preds = np.array([model_output(m, rk4_step(lambda tt, xx, m=m: m.a @ xx + m.b * u, t, x, dt))
                              for m in bank])

        def f(tt, xx, u=u, k=k):
            return nominal.a @ xx + nominal.b * u + disturbance_eval(d, xx - xref, tt, k, nominal)

        x = rk4_step(f, t, x, dt)
    t = np.arange(sc.steps + 1) * dt
    multi = kind == "smmm-multi"
    return SimTrace(t=t, x=np.array(rows["x"]), u=np.array(rows["u"]), s=np.array(rows["s"]),
                    v=np.array(rows["v"]) if bank is not None else None,
                    s_i=np.array(rows["si"]) if multi else None, phi=None, kind=kind,
                    scenario_hash=sc.hash(), seed=sc.seed)
