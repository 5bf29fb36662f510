"""Scenario documents: flat ``key = value`` lines with dotted section prefixes.

Grammar::

    document := line*
    line     := blank | comment | key '=' value
    comment  := '#' ...
    key      := section '.' name        (e.g. ``bank.n``)
    value    := scalar | scalar (',' scalar)*

Unspecified keys take the defaults listed in :data:`KEYS`. Sweep ranges are
``sweep.<key> = v1, v2, ...``. :func:`dump_scenario` writes every key, so the
dump re-parses to an identical :class:`Scenario`.
"""
from __future__ import annotations

import difflib
import hashlib
import math
from dataclasses import dataclass, field, fields, replace

CONTROLLER_KINDS = ("smc1", "smc2", "smmm1", "smmm2", "smmm-multi")
MULTIMODEL_KINDS = ("smmm1", "smmm2", "smmm-multi")
ALIASES = {"controller": "controller.kind"}


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


def _floats(n=None):
    def parse(text):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        vals = tuple(float(p) for p in parts)
        if n is not None and len(vals) != n:
            raise ValueError(f"expected {n} values, got {len(vals)}")
        return vals
    return parse


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _gains(text):
    t = text.strip()
    if t == "auto":
        return "auto"
    return _floats()(t)


def _direction(text):
    t = text.strip()
    if t in ("matched", "velocity"):
        return t
    return _floats()(t)


def _optional_floats(text):
    t = text.strip()
    return () if t in ("", "none") else _floats()(t)


def _scenario_field(key, default, parse):
    return field(default=default, metadata={"key": key, "parse": parse})


@dataclass(frozen=True)
class Scenario:
    controller_kind: str = _scenario_field("controller.kind", "smc1", str)
    controller_m_bound: float = _scenario_field("controller.m_bound", 0.1, float)
    smc1_epsilon: float = _scenario_field("smc1.epsilon", 0.5, float)
    smc2_alpha: float = _scenario_field("smc2.alpha", 1.0, float)
    smc2_k2: float = _scenario_field("smc2.k2", 5.0, float)
    smmm_k: tuple | str = _scenario_field("smmm.k", (0.5,), _gains)
    smmm_epsilon: float = _scenario_field("smmm.epsilon", 0.005, float)
    smmm_mu: tuple = _scenario_field("smmm.mu", (), _optional_floats)
    surface_poles: tuple = _scenario_field("surface.poles", (0.8, 1.0, 1.2), _floats())
    surface_c: tuple = _scenario_field("surface.c", (), _optional_floats)
    surface_l: tuple = _scenario_field("surface.l", (), _optional_floats)
    surface_per_model: bool = _scenario_field("surface.per_model", True, _bool)
    bank_n: int = _scenario_field("bank.n", 3, int)
    bank_delta: float = _scenario_field("bank.delta", 0.2, float)
    disturbance_kind: str = _scenario_field("disturbance.kind", "sinusoidal", str)
    disturbance_m_bound: float = _scenario_field("disturbance.m_bound", 0.1, float)
    disturbance_frequency: float = _scenario_field("disturbance.frequency", 1.0, float)
    disturbance_direction: tuple | str = _scenario_field("disturbance.direction", "matched", _direction)
    validity_mode: str = _scenario_field("validity.mode", "reinforced", str)
    validity_filter: float = _scenario_field("validity.filter", 0.0, float)
    z_ref: float = _scenario_field("sim.z_ref", 1.0, float)
    x0: tuple = _scenario_field("sim.x0", (0.0, 0.0, 0.0, 0.7), _floats(4))
    duration: float = _scenario_field("sim.duration", 30.0, float)
    dt: float = _scenario_field("sim.dt", 0.001, float)
    seed: int = _scenario_field("sim.seed", 0, int)
    envelope: tuple = _scenario_field("sim.envelope", (0.7, 1.3), _floats(2))
    band: float = _scenario_field("sim.band", 0.05, float)
    sweep: tuple = field(default=(), metadata={"key": None})

    def __post_init__(self):
        validate(self)

    @property
    def steps(self) -> int:
        return step_count(self.duration, self.dt)

    @property
    def is_multimodel(self) -> bool:
        return self.controller_kind in MULTIMODEL_KINDS

    def with_values(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def hash(self) -> str:
        return hashlib.sha256(dump_scenario(self).encode()).hexdigest()


KEYS = {f.metadata["key"]: f for f in fields(Scenario) if f.metadata.get("key")}


def step_count(duration: float, dt: float) -> int:
    """``floor(duration / dt)``, tolerant to representation error in the ratio."""
    q = duration / dt
    r = round(q)
    return int(r) if abs(q - r) <= 1e-9 * max(1.0, abs(q)) else int(math.floor(q))


def validate(sc: Scenario) -> None:
    def need(cond, msg):
        if not cond:
            raise ScenarioError(msg)

    need(sc.controller_kind in CONTROLLER_KINDS,
         f"controller.kind must be one of {', '.join(CONTROLLER_KINDS)}; got {sc.controller_kind!r}")
    for name in ("controller_m_bound", "disturbance_m_bound", "bank_delta", "validity_filter"):
        v = getattr(sc, name)
        need(math.isfinite(v) and v >= 0, f"{KEYS_BY_ATTR[name]} must be finite and >= 0")
    for name in ("smc1_epsilon", "smc2_alpha", "smc2_k2", "smmm_epsilon", "band"):
        v = getattr(sc, name)
        need(math.isfinite(v) and v > 0, f"{KEYS_BY_ATTR[name]} must be > 0")
    need(math.isfinite(sc.dt) and sc.dt > 0, "sim.dt must be > 0")
    need(math.isfinite(sc.duration) and sc.duration >= sc.dt, "sim.duration must be >= sim.dt")
    lo, hi = sc.envelope
    need(lo < hi, "sim.envelope must be an increasing pair")
    need(lo <= sc.z_ref <= hi, f"sim.z_ref = {sc.z_ref!r} lies outside the envelope [{lo!r}, {hi!r}]")
    need(all(math.isfinite(v) for v in sc.x0), "sim.x0 must be finite")
    need(sc.bank_n >= 1, "bank.n must be >= 1")
    need(sc.bank_delta < 1.0, "bank.delta must be < 1")
    need(sc.disturbance_kind in ("off", "sinusoidal", "seeded-random"),
         "disturbance.kind must be off, sinusoidal or seeded-random")
    need(math.isfinite(sc.disturbance_frequency), "disturbance.frequency must be finite")
    if not isinstance(sc.disturbance_direction, str):
        need(len(sc.disturbance_direction) == 4 and any(v != 0 for v in sc.disturbance_direction),
             "disturbance.direction must be matched, velocity or 4 values, not all zero")
    need(sc.validity_mode in ("raw", "reinforced"), "validity.mode must be raw or reinforced")
    if sc.smmm_k != "auto":
        need(len(sc.smmm_k) in (1, sc.bank_n), "smmm.k needs 1 or bank.n values (or auto)")
        need(all(k > 0 for k in sc.smmm_k), "smmm.k values must be > 0")
    if sc.smmm_mu:
        need(len(sc.smmm_mu) == sc.bank_n, "smmm.mu needs bank.n values")
        need(all(0 < m < 1 for m in sc.smmm_mu) or sc.bank_n == 1, "smmm.mu values must lie in (0, 1)")
    need(len(sc.surface_poles) == 3 and all(p > 0 for p in sc.surface_poles),
         "surface.poles needs 3 positive values")
    need(not (sc.surface_c and sc.surface_l), "set at most one of surface.c and surface.l")
    if sc.surface_c:
        need(len(sc.surface_c) == 4 and any(v != 0 for v in sc.surface_c), "surface.c needs 4 values, not all zero")
    if sc.surface_l:
        need(len(sc.surface_l) == 3 and all(v > 0 for v in sc.surface_l), "surface.l needs 3 positive values")
    need(sc.seed >= 0, "sim.seed must be >= 0")
    for key, _ in sc.sweep:
        need(key in KEYS, f"sweep over unknown key {key!r}")


KEYS_BY_ATTR = {f.name: k for k, f in KEYS.items()}


def _suggest(key: str) -> str:
    match = difflib.get_close_matches(key, list(KEYS) + list(ALIASES), n=1, cutoff=0.5)
    if not match:
        match = difflib.get_close_matches(key, [k.split(".")[0] for k in KEYS], n=1, cutoff=0.5)
    return f"; did you mean {match[0]!r}?" if match else ""


def parse_value(key: str, text: str):
    f = KEYS[key]
    return f.metadata["parse"](text)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    values = {}
    sweep = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ScenarioError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key.startswith("sweep."):
            target = ALIASES.get(key[6:], key[6:])
            if target not in KEYS:
                raise ScenarioError(f"{where}: unknown sweep key {target!r}{_suggest(target)}")
            items = [v.strip() for v in value.split(";" if ";" in value else ",") if v.strip()]
            if not items:
                raise ScenarioError(f"{where}: sweep.{target} has no values")
            for item in items:
                _parse_at(where, target, item)
            sweep.append((target, tuple(items)))
            continue
        if key not in KEYS:
            raise ScenarioError(f"{where}: unknown key {key!r}{_suggest(key)}")
        if KEYS[key].name in values:
            raise ScenarioError(f"{where}: duplicate key {key!r}")
        values[KEYS[key].name] = _parse_at(where, key, value)
    try:
        return Scenario(**values, sweep=tuple(sweep))
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def _parse_at(where, key, value):
    try:
        return parse_value(key, value)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}: bad value for {key}: {exc}") from None


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v) if v else "none"
    return str(v)


def dump_scenario(sc: Scenario) -> str:
    """Resolved document listing every key (defaults included)."""
    lines = [f"{k} = {_format(getattr(sc, f.name))}" for k, f in KEYS.items()]
    for key, items in sc.sweep:
        sep = "; " if key in ("sim.x0", "sim.envelope", "surface.poles", "surface.c", "surface.l",
                              "smmm.k", "smmm.mu", "disturbance.direction") else ", "
        lines.append(f"sweep.{key} = {sep.join(items)}")
    return "\n".join(lines) + "\n"


def expand_sweep(sc: Scenario) -> list[tuple[dict, Scenario]]:
    """Cartesian product of the sweep ranges, in document order."""
    import itertools

    base = replace(sc, sweep=())
    if not sc.sweep:
        return [({}, base)]
    keys = [k for k, _ in sc.sweep]
    out = []
    for combo in itertools.product(*(items for _, items in sc.sweep)):
        kw = {KEYS[k].name: parse_value(k, v) for k, v in zip(keys, combo)}
        out.append((dict(zip(keys, combo)), replace(base, **kw)))
    return out
