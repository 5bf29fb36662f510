"""AUV immersion model, bounded state-proportional disturbance, model banks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, as_matrix

STATE_NAMES = ("omega", "q", "theta", "z")
DEPTH_ENVELOPE = (0.7, 1.3)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``x' = a x + b u``, ``y = c_out x`` (single input, single output)."""

    a: np.ndarray
    b: np.ndarray
    c_out: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c_out, dtype=float).reshape(-1)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"a must be square, got {a.shape}")
        if b.shape != (n,) or c.shape != (n,):
            raise DimensionError(f"b and c_out must have {n} entries")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("model entries must be finite")
        for name, arr in (("a", a), ("b", b), ("c_out", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)
                and np.array_equal(self.c_out, other.c_out))

    __hash__ = None


def auv_nominal() -> LinearModel:
    """Linearised immersion dynamics, state ``[omega, q, theta, z]``, output z."""
    a = [[0.47, 0.3, 0.0, 0.0],
         [-0.69, 0.79, 0.36, 0.0],
         [0.0, 1.0, 0.0, 0.0],
         [1.0, 0.0, 1.0, 0.0]]
    b = [0.05, 0.14, 0.0, 0.0]
    return LinearModel(a, b, [0.0, 0.0, 0.0, 1.0])


DISTURBANCE_KINDS = ("off", "sinusoidal", "seeded-random")


@dataclass(frozen=True)
class DisturbanceSpec:
    """State-proportional disturbance with ``|phi| <= m_bound * |x|``.

    ``direction`` is used by the sinusoidal kind and is normalised on use;
    ``None`` means the input direction ``b / |b|`` of the model it acts on.
    """

    m_bound: float = 0.1
    kind: str = "sinusoidal"
    frequency: float = 1.0
    seed: int = 0
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}; expected one of {DISTURBANCE_KINDS}")
        if not self.m_bound >= 0 or not math.isfinite(self.m_bound):
            raise ValueError("m_bound must be finite and >= 0")


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError("disturbance direction must be nonzero")
    return v / nrm


def disturbance_direction(d: DisturbanceSpec, model: LinearModel | None = None, n: int = 4) -> np.ndarray:
    if d.direction is not None:
        e = _unit(d.direction)
        if e.shape[0] != n:
            raise DimensionError(f"disturbance direction has {e.shape[0]} entries, state has {n}")
        return e
    if model is None:
        model = auv_nominal()
    return _unit(model.b)


def random_unit_ball(seed: int, step: int, n: int) -> np.ndarray:
    """Deterministic point in the closed unit ball for a given (seed, step)."""
    rng = np.random.default_rng([int(seed), int(step)])
    g = rng.standard_normal(n)
    g /= np.linalg.norm(g)
    return g * rng.random() ** (1.0 / n)


def disturbance_factor(d: DisturbanceSpec, t: float, step: int = 0,
                       model: LinearModel | None = None, n: int = 4) -> np.ndarray:
    """Vector ``phi / (m_bound |x|)``; its norm never exceeds one."""
    if d.kind == "off" or d.m_bound == 0.0:
        return np.zeros(n)
    if d.kind == "sinusoidal":
        return math.sin(d.frequency * t) * disturbance_direction(d, model, n)
    return random_unit_ball(d.seed, step, n)


def disturbance_eval(d: DisturbanceSpec, x, t: float, step: int = 0,
                     model: LinearModel | None = None) -> np.ndarray:
    """Disturbance realisation for state ``x`` (error coordinates) at time ``t``.

    For ``seeded-random`` the vector is a pure function of ``(seed, step)``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if d.kind == "off":
        return np.zeros_like(x)
    return d.m_bound * float(np.linalg.norm(x)) * disturbance_factor(d, t, step, model, x.shape[0])


def plant_derivative(model: LinearModel, x, u: float, d: DisturbanceSpec | None = None,
                     t: float = 0.0, step: int = 0) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.n:
        raise DimensionError(f"state has {x.shape[0]} entries, model has {model.n}")
    dx = model.a @ x + model.b * float(u)
    if d is not None and d.kind != "off":
        dx = dx + disturbance_eval(d, x, t, step, model)
    return dx


def model_output(model: LinearModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.n:
        raise DimensionError(f"state has {x.shape[0]} entries, model has {model.n}")
    return float(model.c_out @ x)


@dataclass(frozen=True)
class ModelBank:
    models: tuple[LinearModel, ...]
    spread: float = 0.0
    factors: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.models) < 1:
            raise ValueError("a model bank needs at least one model")
        n = self.models[0].n
        if any(m.n != n for m in self.models):
            raise DimensionError("all models in a bank must share dimensions")
        if not 0.0 <= self.spread < 1.0:
            raise ValueError("spread must lie in [0, 1)")

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i):
        return self.models[i]


def bank_factors(n: int, delta: float) -> list[float]:
    if n == 1:
        return [1.0]
    return [1.0 + delta * (2 * i - (n - 1)) / (n - 1) for i in range(n)]


def build_model_bank(nominal: LinearModel, n: int, delta: float) -> ModelBank:
    """Scale every nonzero entry of ``a`` and ``b`` by evenly spaced factors.

    Factors run from ``1 - delta`` to ``1 + delta`` in ascending order, so for
    odd ``n`` the middle model is the nominal one. Structural zeros survive.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    factors = bank_factors(n, delta)
    models = []
    for f in factors:
        if f == 1.0:
            models.append(nominal)
        else:
            models.append(LinearModel(nominal.a * f, nominal.b * f, nominal.c_out))
    return ModelBank(tuple(models), float(delta) if n > 1 else 0.0, tuple(factors))
