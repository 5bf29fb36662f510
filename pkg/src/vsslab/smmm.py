"""Sliding-mode multimodel controllers: single shared surface and one surface per submodel."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .controllers import Smc1Params, Smc2State, control_gain, sgn, smc2_step
from .multimodel import check_validities, fuse_controls
from .numerics import DimensionError
from .plant import ModelBank
from .surfaces import SecondOrderParams, SlidingSurfaceSpec


@dataclass(frozen=True)
class SmmmConfig:
    """Gains and surfaces for a bank of ``N`` submodels.

    ``surfaces`` holds one spec (shared surface) or ``N`` specs (``T_i``).
    ``mu`` are offline weights used only for gain sizing.
    """

    gains: tuple[float, ...]
    surfaces: tuple[SlidingSurfaceSpec, ...]
    mu: tuple[float, ...] = ()
    epsilon: float = 0.005
    m_bound: float = 0.1
    order: int = 1
    second_order: SecondOrderParams = field(default_factory=SecondOrderParams)
    k2: float = 5.0

    def __post_init__(self):
        gains = tuple(float(k) for k in self.gains)
        n = len(gains)
        if n == 0:
            raise ValueError("need at least one gain")
        if not all(k > 0 for k in gains):
            raise ValueError("all gains k_i must be > 0")
        surfaces = self.surfaces
        if isinstance(surfaces, SlidingSurfaceSpec):
            surfaces = (surfaces,)
        surfaces = tuple(surfaces)
        if len(surfaces) not in (1, n):
            raise DimensionError(f"{len(surfaces)} surfaces for {n} submodels")
        mu = tuple(float(m) for m in self.mu) if self.mu else tuple(1.0 / n for _ in range(n))
        if len(mu) != n:
            raise DimensionError(f"{len(mu)} mu weights for {n} submodels")
        if n > 1 and not all(0.0 < m < 1.0 for m in mu):
            raise ValueError("mu_i must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.m_bound >= 0:
            raise ValueError("m_bound must be >= 0")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not self.k2 > 0:
            raise ValueError("k2 must be > 0")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "surfaces", surfaces)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return len(self.gains)

    @property
    def multi_surface(self) -> bool:
        return len(self.surfaces) > 1

    def surface(self, i: int) -> SlidingSurfaceSpec:
        return self.surfaces[i] if self.multi_surface else self.surfaces[0]

    def smc1_params(self, i: int) -> Smc1Params:
        return Smc1Params(self.gains[i], self.epsilon, self.m_bound)

    def initial_states(self) -> list[Smc2State]:
        return [Smc2State(self.second_order, self.k2) for _ in range(self.n)]


def _check(bank: ModelBank, cfg: SmmmConfig, v) -> np.ndarray:
    if len(bank) != cfg.n:
        raise DimensionError(f"bank has {len(bank)} models, config has {cfg.n} gains")
    v = check_validities(v)
    if v.shape[0] != cfg.n:
        raise DimensionError(f"{v.shape[0]} validities for {cfg.n} submodels")
    return v


def partial_reaching(model, spec, p: Smc1Params, x, switch_on: float, i: int = 0) -> float:
    """``-(TB)^-1 (TA x + M s) - sign(TB) eps sgn(switch_on) - k s``."""
    cb = control_gain(model, spec, f"submodel {i}")
    row = spec.row
    s = float(row @ x)
    cax = float(row @ (model.a @ x))
    return -(cax + p.m_bound * s) / cb - sgn(cb) * p.epsilon * sgn(switch_on) - p.k * s


def smmm_single_step(bank: ModelBank, cfg: SmmmConfig, v, x, states=None, dt: float | None = None):
    """Fused control for a shared surface.

    Order 1 returns ``u_g``. Order 2 needs per-submodel ``states`` and ``dt``
    and returns ``(u_g, new_states)``; each partial integrates its own
    ``u'`` relay and every state then remembers the fused ``u_g``.
    """
    v = _check(bank, cfg, v)
    x = np.asarray(x, dtype=float).reshape(-1)
    spec = cfg.surfaces[0]
    if cfg.multi_surface:
        raise ValueError("smmm_single_step needs a single shared surface")
    s = float(spec.row @ x)
    if cfg.order == 1:
        parts = [partial_reaching(m, spec, cfg.smc1_params(i), x, s, i) for i, m in enumerate(bank)]
        return fuse_controls(v, parts)
    if states is None or dt is None:
        raise ValueError("order 2 needs states and dt")
    if len(states) != cfg.n:
        raise DimensionError(f"{len(states)} controller states for {cfg.n} submodels")
    parts = []
    new_states = []
    for i, (m, st) in enumerate(zip(bank, states)):
        control_gain(m, spec, f"submodel {i}")
        ui, st2 = smc2_step(m, spec, st, cfg.smc1_params(i), x, dt)
        parts.append(ui - cfg.gains[i] * s)
        new_states.append(st2)
    u = fuse_controls(v, parts)
    return u, [replace(st, u_prev=u) for st in new_states]


def smmm_multi_step(bank: ModelBank, cfg: SmmmConfig, v, x) -> tuple[float, float]:
    """Multi-surface law; the ``eps`` relay switches on ``S``, the ``k_i`` term on ``s_i``."""
    v = _check(bank, cfg, v)
    x = np.asarray(x, dtype=float).reshape(-1)
    s_i = [float(cfg.surface(i).row @ x) for i in range(cfg.n)]
    big_s = float(sum(vi * si for vi, si in zip(v, s_i)))
    parts = [partial_reaching(m, cfg.surface(i), cfg.smc1_params(i), x, big_s, i)
             for i, m in enumerate(bank)]
    return fuse_controls(v, parts), big_s
