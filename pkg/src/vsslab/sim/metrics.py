"""Scalar summaries of a simulated trace."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

METRIC_FIELDS = ("settling_time", "overshoot", "control_sup", "control_effort",
                 "chattering_index", "switching_count")


@dataclass(frozen=True)
class Metrics:
    settling_time: float
    overshoot: float
    control_sup: float
    control_effort: float
    chattering_index: float
    switching_count: int

    def as_dict(self) -> dict:
        return asdict(self)


def settling_time(t, z, z_ref: float, band: float = 0.05) -> float:
    """Time of the first sample after the last one outside the band (``inf`` if never settled)."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    half = band * max(abs(z_ref), 1.0)
    outside = np.nonzero(np.abs(z - z_ref) > half)[0]
    if outside.size == 0:
        return 0.0
    last = int(outside[-1])
    if last == z.shape[0] - 1:
        return math.inf
    return float(t[last + 1])


def overshoot(z, z_ref: float) -> float:
    """Excursion past ``z_ref`` on the far side from the initial depth."""
    z = np.asarray(z, dtype=float)
    if z[0] < z_ref:
        return max(0.0, float(z.max()) - z_ref)
    if z[0] > z_ref:
        return max(0.0, z_ref - float(z.min()))
    return float(np.abs(z - z_ref).max())


def switching_count(u) -> int:
    """Sign changes of ``u[k+1] - u[k]``, ignoring zero increments."""
    du = np.diff(np.asarray(u, dtype=float))
    sg = np.sign(du[du != 0.0])
    return int(np.count_nonzero(sg[1:] != sg[:-1]))


def compute_metrics(trace, z_ref: float, band: float = 0.05) -> Metrics:
    if len(trace) == 0:
        raise ValueError("empty trace")
    if not band > 0:
        raise ValueError("band must be > 0")
    u = np.asarray(trace.u, dtype=float)
    t = np.asarray(trace.t, dtype=float)
    z = np.asarray(trace.x, dtype=float)[:, 3]
    dt = float(t[1] - t[0]) if t.shape[0] > 1 else 0.0
    return Metrics(
        settling_time=settling_time(t, z, z_ref, band),
        overshoot=overshoot(z, z_ref),
        control_sup=float(np.abs(u).max()),
        control_effort=float(np.sum(u[:-1] ** 2) * dt),
        chattering_index=float(np.abs(np.diff(u)).sum()),
        switching_count=switching_count(u),
    )
