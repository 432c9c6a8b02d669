"""Scenario files: TOML with ``[system]``, ``[channel]``, ``[channel.placement]``,
``[hyper]`` and ``[run]`` tables.

Only ``[system]`` is mandatory and all of its keys are required. Every other
key falls back to the desk-scale defaults below. Unknown keys are rejected so
that typos do not silently fall back to defaults. Errors name the offending
field and, when it can be located, the line.
"""

import dataclasses
import re
from dataclasses import dataclass, field

import tomli
import tomli_w

from .channel import ThzLinkParams, calibrate_alpha
from .ddpg import INIT_METHODS, Hyper
from .errors import RejectedInputError, ScenarioError
from .system import SystemConfig

SCHEMES = ("no_ris_zf", "single_hop_alt", "single_hop_drl", "multi_hop_drl")
DESK_HYPER = {"episodes": 20, "steps_per_episode": 500}
FULL_HYPER = {"episodes": 5000, "steps_per_episode": 20_000}

SYSTEM_KEYS = ("M", "K", "I", "N", "P_t", "noise_power", "frequency", "bandwidth")
CHANNEL_KEYS = {"K_H": "k_h", "K_g": "k_g", "K_w": "k_w",
                "alpha_molec": "alpha_molec", "reflection_amplitude": "reflection_amplitude"}


@dataclass(frozen=True)
class Placement:
    """Deterministic node layout.

    The BS sits at the origin on the edge of a circular region of diameter
    ``circle_diameter_m``. Users lie in a disc of radius
    ``min(user_radius_m, distance / 4)`` centered ``distance_m`` away along
    +x, drawn once from ``placement_seed``. RIS ``i`` of ``I`` sits at
    fraction ``i / (I + 1)`` of that segment, ``ris_lateral_m`` off axis.
    """

    circle_diameter_m: float = 100.0
    placement_seed: int = 0
    distance_m: float = 10.0
    user_radius_m: float = 1.0
    ris_lateral_m: float = 0.5

    def __post_init__(self):
        if not self.circle_diameter_m > 0:
            raise RejectedInputError("circle_diameter_m must be positive")
        if not 0 < self.distance_m <= self.circle_diameter_m:
            raise RejectedInputError("distance_m must lie in (0, circle_diameter_m]")
        if not self.user_radius_m >= 0:
            raise RejectedInputError("user_radius_m must be nonnegative")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    init_method: str = "method2"
    output_dir: str = "out"
    label: str = "scenario"
    n_mc: int = 50
    distances: tuple = (1.0, 5.0, 10.0, 15.0, 20.0)
    schemes: tuple = SCHEMES
    learning_rates: tuple = (1e-2, 1e-3, 1e-4, 1e-5)

    def __post_init__(self):
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "learning_rates", tuple(float(r) for r in self.learning_rates))
        if self.init_method not in INIT_METHODS:
            raise RejectedInputError(f"init_method must be one of {INIT_METHODS}")
        if self.n_mc < 1:
            raise RejectedInputError("n_mc must be positive")
        if any(d <= 0 for d in self.distances) or list(self.distances) != sorted(set(self.distances)):
            raise RejectedInputError("distances must be positive and strictly ascending")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise RejectedInputError(f"unknown schemes {unknown}; choose from {SCHEMES}")
        if any(r <= 0 for r in self.learning_rates):
            raise RejectedInputError("learning_rates must be positive")


@dataclass(frozen=True)
class Scenario:
    system: SystemConfig
    link: ThzLinkParams = field(default_factory=ThzLinkParams)
    placement: Placement = field(default_factory=Placement)
    hyper: Hyper = field(default_factory=lambda: Hyper(**DESK_HYPER))
    run: RunConfig = field(default_factory=RunConfig)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_hyper(self, **changes):
        return self.replace(hyper=dataclasses.replace(self.hyper, **changes))

    def with_run(self, **changes):
        return self.replace(run=dataclasses.replace(self.run, **changes))


def desk_scenario(**system):
    """Desk-scale default: M=4, K=2, I=2, N_i=16, Z=20, T=500."""
    base = {"M": 4, "K": 2, "I": 2, "N": (16, 16)}
    base.update(system)
    return Scenario(system=SystemConfig(**base))


# parsing --------------------------------------------------------------------

def _locate(text, table, key=None):
    """1-based line of ``key`` inside ``[table]`` (or of the header itself)."""
    current = ""
    header_line = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[\s*([A-Za-z0-9_.\s]+?)\s*\]\s*(#.*)?$", line)
        if m:
            current = re.sub(r"\s+", "", m.group(1))
            if current == table:
                header_line = i
            continue
        if key is not None and current == table and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return i
    return header_line


def _err(text, table, key, message):
    return ScenarioError(message, field=f"{table}.{key}" if key else table, line=_locate(text, table, key))


def _check_type(text, table, key, value, kind):
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "float": isinstance(value, (int, float)) and not isinstance(value, bool),
        "bool": isinstance(value, bool),
        "str": isinstance(value, str),
        "int_list": isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value),
        "float_list": isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                      for v in value),
        "str_list": isinstance(value, list) and all(isinstance(v, str) for v in value),
    }[kind]
    if not ok:
        raise _err(text, table, key, f"expected {kind.replace('_', ' ')}, got {value!r}")
    if kind == "float":
        return float(value)
    if kind.endswith("_list"):
        return tuple(float(v) for v in value) if kind == "float_list" else tuple(value)
    return value


def _kind_of(default):
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, float):
        return "float"
    if isinstance(default, str):
        return "str"
    if isinstance(default, tuple):
        if all(isinstance(v, str) for v in default):
            return "str_list"
        return "int_list" if all(isinstance(v, int) for v in default) else "float_list"
    raise TypeError(default)


def _build(text, table, cls, values, given=(), names=None):
    """Construct ``cls(**values)``; on failure blame the key named earliest in
    the message, preferring keys present in the file. ``names`` maps
    attribute names back to file keys."""
    names = names or {}
    try:
        return cls(**values)
    except (RejectedInputError, TypeError, ValueError) as exc:
        msg = str(exc)
        hits = []
        for attr in values:
            m = re.search(rf"\b{re.escape(attr)}\b", msg)
            if m:
                key = names.get(attr, attr)
                hits.append((key not in given, m.start(), key))
        key = min(hits)[2] if hits else None
        raise _err(text, table, key, msg) from exc


def _reject_unknown(text, table, data, allowed):
    for key in data:
        if key not in allowed:
            raise _err(text, table, key, f"unknown key {key!r}")


def parse_scenario(text):
    """Parse scenario TOML text into a :class:`Scenario`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ScenarioError(f"malformed TOML: {exc}", line=line) from exc
    _reject_unknown(text, "", doc, ("system", "channel", "hyper", "run"))
    if "system" not in doc:
        raise ScenarioError("missing [system] table (needs " + ", ".join(SYSTEM_KEYS) + ")", field="system")

    sys_doc = doc["system"]
    _reject_unknown(text, "system", sys_doc, SYSTEM_KEYS)
    sys_vals = {}
    for key in SYSTEM_KEYS:
        if key not in sys_doc:
            raise _err(text, "system", None, f"missing required field {key!r} in [system]")
        kind = {"M": "int", "K": "int", "I": "int", "N": "int_list"}.get(key, "float")
        sys_vals[key] = _check_type(text, "system", key, sys_doc[key], kind)
    system = _build(text, "system", SystemConfig, sys_vals, given=sys_doc)

    ch_doc = dict(doc.get("channel", {}))
    pl_doc = ch_doc.pop("placement", {})
    _reject_unknown(text, "channel", ch_doc, CHANNEL_KEYS)
    link_vals = {"frequency": system.frequency}
    for key, value in ch_doc.items():
        link_vals[CHANNEL_KEYS[key]] = _check_type(text, "channel", key, value, "float")
    if "alpha_molec" not in link_vals:
        link_vals["alpha_molec"] = calibrate_alpha(system.frequency)
    link = _build(text, "channel", ThzLinkParams, link_vals, given=ch_doc,
                  names={attr: key for key, attr in CHANNEL_KEYS.items()})

    placement = _parse_block(text, "channel.placement", pl_doc, Placement, {})
    hyper = _parse_block(text, "hyper", doc.get("hyper", {}), Hyper, DESK_HYPER)
    run = _parse_block(text, "run", doc.get("run", {}), RunConfig, {})
    return Scenario(system=system, link=link, placement=placement, hyper=hyper, run=run)


def _parse_block(text, table, data, cls, overrides):
    defaults = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
                for f in dataclasses.fields(cls)}
    defaults.update(overrides)
    _reject_unknown(text, table, data, defaults)
    values = dict(defaults)
    for key, value in data.items():
        values[key] = _check_type(text, table, key, value, _kind_of(defaults[key]))
    return _build(text, table, cls, values, given=data)


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc.message}", field=exc.field, line=exc.line) from exc


def scenario_to_dict(sc):
    s = sc.system
    system = {"M": s.M, "K": s.K, "I": s.I, "N": list(s.N), "P_t": s.P_t,
              "noise_power": s.noise_power, "frequency": s.frequency, "bandwidth": s.bandwidth}
    channel = {key: getattr(sc.link, attr) for key, attr in CHANNEL_KEYS.items()}
    channel["placement"] = dataclasses.asdict(sc.placement)

    def plain(obj):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(obj).items()}

    return {"system": system, "channel": channel, "hyper": plain(sc.hyper), "run": plain(sc.run)}


def dump_scenario(sc):
    """Serialize to TOML text; ``parse_scenario(dump_scenario(sc)) == sc``."""
    return tomli_w.dumps(scenario_to_dict(sc))
