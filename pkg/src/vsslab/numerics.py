"""Small dense linear-algebra kernel used by the stability checks and simulator.

Matrices are plain ``numpy`` float arrays. Sizes are tiny (n <= 8) so the
algorithms favour clarity: cyclic Jacobi for symmetric spectra and a
Kronecker-vectorised solve for the continuous Lyapunov equation.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

DEFAULT_TOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are inconsistent."""


class NotHurwitz(ValueError):
    """The Lyapunov equation has no positive-definite solution for this matrix."""


class NumericOverflow(ArithmeticError):
    """A non-finite value appeared during integration."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"non-finite derivative at t={t!r}")


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float, ndmin=2)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    return a


def sym(m) -> np.ndarray:
    a = _square(m)
    return 0.5 * (a + a.T)


def jacobi_eigh(m, *, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the symmetric part of ``m`` by cyclic Jacobi rotations.

    Returns ``(w, v)`` with ``w`` ascending and the columns of ``v`` the
    matching orthonormal eigenvectors.
    """
    a = sym(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff  # small-angle limit, avoids overflow in theta
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J applied to rows/cols p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eigenvalues(m) -> list[float]:
    """Ascending eigenvalues of ``(m + m^T) / 2``."""
    w, _ = jacobi_eigh(m)
    return [float(x) for x in w]


def lambda_max(m) -> float:
    return sym_eigenvalues(m)[-1]


def lambda_min(m) -> float:
    return sym_eigenvalues(m)[0]


def is_negative_definite(m, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return lambda_max(m) < -tol


def is_positive_definite(m, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return lambda_min(m) > tol


def lyapunov_expr(a, p) -> np.ndarray:
    """``a^T p + p a``."""
    a = _square(a)
    p = _square(p)
    if a.shape != p.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {p.shape}")
    return a.T @ p + p @ a


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``a^T P + P a = -q`` for symmetric positive-definite ``P``.

    Raises :class:`NotHurwitz` when the vectorised system is singular or the
    solution is not positive definite.
    """
    a = _square(a)
    q = _square(q)
    n = a.shape[0]
    if q.shape != (n, n):
        raise DimensionError(f"q must be {n}x{n}, got {q.shape[0]}x{q.shape[1]}")
    eye = np.eye(n)
    # row-major vec: vec(a^T P) = (a^T kron I) vec(P), vec(P a) = (I kron a^T) vec(P)
    kron = np.kron(a.T, eye) + np.kron(eye, a.T)
    if np.linalg.cond(kron) > 1e12:
        raise NotHurwitz("Lyapunov operator is singular (eigenvalues of a sum to zero)")
    p = np.linalg.solve(kron, -q.reshape(-1)).reshape(n, n)
    p = 0.5 * (p + p.T)
    if not is_positive_definite(p, 0.0):
        raise NotHurwitz("Lyapunov solution is not positive definite; a is not Hurwitz")
    return p


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, x, dt: float) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step of ``x' = f(t, x)``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x = np.asarray(x, dtype=float)
    h2 = 0.5 * dt
    k1 = np.asarray(f(t, x), dtype=float)
    k2 = np.asarray(f(t + h2, x + h2 * k1), dtype=float)
    k3 = np.asarray(f(t + h2, x + h2 * k2), dtype=float)
    k4 = np.asarray(f(t + dt, x + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericOverflow(t)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericOverflow(t)
    return out
