"""Sliding functions: linear and reduced-order surfaces, sigma, aggregates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multimodel import check_validities
from .numerics import DimensionError
from .plant import LinearModel

FULL_ROW = "full-row"
REDUCED = "reduced"


@dataclass(frozen=True, eq=False)
class SlidingSurfaceSpec:
    """``s = c x`` (full-row) or ``s = x_n + l . X_{n-1}`` (reduced, all l > 0)."""

    kind: str
    coeffs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)) or v.size == 0:
            raise ValueError("surface coefficients must be finite and nonempty")
        if self.kind == FULL_ROW:
            if not np.any(v != 0.0):
                raise ValueError("full-row surface needs a nonzero row")
        elif self.kind == REDUCED:
            if not np.all(v > 0.0):
                raise ValueError(f"reduced surface needs all coefficients > 0, got {v.tolist()}")
        else:
            raise ValueError(f"unknown surface kind {self.kind!r}")
        v.setflags(write=False)
        object.__setattr__(self, "coeffs", v)

    @classmethod
    def full_row(cls, c) -> "SlidingSurfaceSpec":
        return cls(FULL_ROW, c)

    @classmethod
    def reduced(cls, l) -> "SlidingSurfaceSpec":
        return cls(REDUCED, l)

    @property
    def row(self) -> np.ndarray:
        """Effective row ``C_eff`` with ``s = C_eff x``."""
        if self.kind == FULL_ROW:
            return self.coeffs
        return np.append(self.coeffs, 1.0)

    @property
    def n(self) -> int:
        return self.row.shape[0]

    def reduction_gain(self) -> np.ndarray:
        """``L`` such that ``s = 0`` reads ``x_n = -L X_{n-1}``."""
        r = self.row
        if r[-1] == 0.0:
            raise ValueError("surface does not involve the last state; no reduced form")
        return r[:-1] / r[-1]

    def __eq__(self, other):
        if not isinstance(other, SlidingSurfaceSpec):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __repr__(self):
        return f"SlidingSurfaceSpec({self.kind!r}, {self.coeffs.tolist()})"


@dataclass(frozen=True)
class SecondOrderParams:
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")


def _check_dim(spec: SlidingSurfaceSpec, x: np.ndarray):
    if x.shape[0] != spec.n:
        raise DimensionError(f"state has {x.shape[0]} entries, surface expects {spec.n}")


def surface_eval(spec: SlidingSurfaceSpec, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dim(spec, x)
    return float(spec.row @ x)


def surface_rate(spec: SlidingSurfaceSpec, model: LinearModel, x, u: float) -> float:
    """Nominal ``s'`` (the disturbance is not visible to the controller)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dim(spec, x)
    if model.n != spec.n:
        raise DimensionError(f"model has {model.n} states, surface expects {spec.n}")
    return float(spec.row @ (model.a @ x + model.b * float(u)))


def sigma_eval(p: SecondOrderParams, s: float, s_dot: float) -> float:
    return s_dot + p.alpha * s


def aggregate_surface(surfaces, v, x) -> float:
    """``S = sum_i v_i s_i``."""
    surfaces = list(surfaces)
    v = check_validities(v)
    if len(surfaces) != v.shape[0]:
        raise DimensionError(f"{len(surfaces)} surfaces but {v.shape[0]} validities")
    return float(sum(vi * surface_eval(sp, x) for vi, sp in zip(v, surfaces)))


def numerator_basis(model: LinearModel) -> np.ndarray:
    """Matrix ``W`` whose columns give ``C adj(sI - A) B`` coefficients.

    ``(W^T c)[k]`` is the coefficient of ``s^(n-1-k)`` in ``c adj(sI-A) b``
    (Faddeev-LeVerrier recursion).
    """
    a = model.a
    n = model.n
    m = np.eye(n)
    cols = []
    for k in range(1, n + 1):
        cols.append(m @ model.b)
        am = a @ m
        ck = -np.trace(am) / k
        m = am + ck * np.eye(n)
    return np.column_stack(cols)


def place_surface(model: LinearModel, poles) -> SlidingSurfaceSpec:
    """Surface whose sliding dynamics have eigenvalues ``-poles``.

    The sliding dynamics of ``s = c x`` are governed by the zeros of
    ``c (sI - A)^-1 b``; the row is solved so that those zeros sit at
    ``-poles``. Normalised to ``|c_n| = 1`` and oriented so ``c b > 0``.
    """
    poles = np.asarray(poles, dtype=float).reshape(-1)
    n = model.n
    if poles.shape[0] != n - 1:
        raise ValueError(f"need {n - 1} sliding poles, got {poles.shape[0]}")
    if not np.all(poles > 0):
        raise ValueError("sliding poles must be > 0 (eigenvalues at -poles)")
    target = np.poly(-poles).real
    w = numerator_basis(model)
    if np.linalg.cond(w) > 1e12:
        raise ValueError("model is not controllable from its input; cannot place the surface")
    c = np.linalg.solve(w.T, target)
    if c[-1] != 0.0:
        c = c / abs(c[-1])
    if c @ model.b < 0:
        c = -c
    if np.all(c[:-1] > 0) and c[-1] == 1.0:
        return SlidingSurfaceSpec.reduced(c[:-1])
    return SlidingSurfaceSpec.full_row(c)


DEFAULT_SLIDING_POLES = (0.8, 1.0, 1.2)


def default_surface(model: LinearModel | None = None) -> SlidingSurfaceSpec:
    from .plant import auv_nominal

    return place_surface(model if model is not None else auv_nominal(), DEFAULT_SLIDING_POLES)
