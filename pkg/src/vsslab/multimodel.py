"""Residue-based validities, reinforcement and convex fusion of partial controls."""
from __future__ import annotations

import math

import numpy as np

from .numerics import DimensionError

SUM_TOL = 1e-12
VALIDITY_MODES = ("raw", "reinforced")


class InvalidValidities(ValueError):
    """Weights violate ``v_i in [0, 1]`` and ``sum v_i = 1``."""


def check_validities(v, tol: float = SUM_TOL) -> np.ndarray:
    """Return ``v`` as an array after checking the convex-sum property."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0:
        raise InvalidValidities("empty validity vector")
    if not np.all(np.isfinite(v)):
        raise InvalidValidities("validities must be finite")
    if np.any(v < -tol) or np.any(v > 1.0 + tol):
        raise InvalidValidities(f"validities must lie in [0, 1], got {v.tolist()}")
    total = math.fsum(v.tolist())
    if abs(total - 1.0) > max(tol, 4 * v.size * np.finfo(float).eps):
        raise InvalidValidities(f"validities must sum to 1, got {total!r}")
    return v


def residues(y: float, y_models) -> np.ndarray:
    y_models = np.asarray(y_models, dtype=float).reshape(-1)
    if y_models.size == 0:
        raise ValueError("need at least one model output")
    return np.abs(float(y) - y_models)


def validities(r) -> np.ndarray:
    """``v_i = (1 - r_i / sum r) / (N - 1)``; uniform when every residue is zero."""
    r = np.asarray(r, dtype=float).reshape(-1)
    n = r.size
    if n == 0:
        raise ValueError("need at least one residue")
    if np.any(r < 0):
        raise ValueError("residues must be nonnegative")
    if n == 1:
        return np.ones(1)
    total = float(np.sum(r))
    if total == 0.0:
        return np.full(n, 1.0 / n)
    return (1.0 - r / total) / (n - 1)


def reinforce(v) -> np.ndarray:
    """``v_i * prod_{j != i} (1 - v_j)``, renormalised (uniform if all vanish)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    n = v.size
    out = np.empty(n)
    for i in range(n):
        p = v[i]
        for j in range(n):
            if j != i:
                p *= 1.0 - v[j]
        out[i] = p
    total = float(np.sum(out))
    if total <= 0.0:
        return np.full(n, 1.0 / n)
    return out / total


def fuse_controls(v, u_partials) -> float:
    v = check_validities(v)
    u = np.asarray(u_partials, dtype=float).reshape(-1)
    if u.shape != v.shape:
        raise DimensionError(f"{v.size} validities but {u.size} partial controls")
    return float(v @ u)


class ResidueFilter:
    """First-order low-pass ``r_f <- r_f + a (r - r_f)`` applied to residues.

    ``a = dt / (tau + dt)``; ``tau = 0`` passes residues through unchanged.
    """

    def __init__(self, tau: float, dt: float):
        if tau < 0 or not dt > 0:
            raise ValueError("need tau >= 0 and dt > 0")
        self.gain = dt / (tau + dt)
        self.state: np.ndarray | None = None

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.state is None or self.gain == 1.0:
            self.state = r.copy()
        else:
            self.state = self.state + self.gain * (r - self.state)
        return self.state


def validity_update(r, mode: str = "reinforced") -> np.ndarray:
    if mode not in VALIDITY_MODES:
        raise ValueError(f"unknown validity mode {mode!r}; expected one of {VALIDITY_MODES}")
    v = validities(r)
    return reinforce(v) if mode == "reinforced" else v
