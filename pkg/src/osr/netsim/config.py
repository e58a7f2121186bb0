"""Simulation configuration, presets and validation."""
import json
from dataclasses import asdict, dataclass, fields, replace

from osr.node import HEADER_LEN

TARGET_MODES = ("any", "collected")
TOPOLOGY_KINDS = ("linear", "uniform", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    # topology
    topology: str = "linear"
    nodes: int = 74
    topology_seed: int = 1
    topology_file: str = None
    radio_range: float = 20.0
    area_side: float = None
    # radio / MAC
    p_max: float = 0.9
    loss_exponent: float = 2.0
    ack_scale: float = 1.0
    max_retx: int = 3
    bcast_repeats: int = 1
    airtime_ticks: int = 4
    mtu: int = 112
    # OSR
    max_bflt_len: int = 16
    k: int = 3
    ttl_init: int = 4
    child_capacity: int = 20
    dup_capacity: int = 16
    # collection
    etx_alpha: float = 0.25
    load_balance: bool = False
    up_payload: int = 60
    # traffic, ticks are milliseconds
    seed: int = 1
    cycle_ticks: int = 600_000
    warmup_cycles: int = 2
    downward: int = 100
    interval_ticks: int = 10_000
    down_payload: int = 20
    target_mode: str = "any"
    log_events: bool = True

    def validate(self):
        if self.topology not in TOPOLOGY_KINDS:
            raise ConfigError(f"unknown topology kind {self.topology!r}")
        if self.topology == "file" and not self.topology_file:
            raise ConfigError("topology 'file' needs topology_file")
        if self.target_mode not in TARGET_MODES:
            raise ConfigError(f"target_mode must be one of {TARGET_MODES}")
        positive = (
            "nodes", "radio_range", "max_bflt_len", "ttl_init", "child_capacity",
            "dup_capacity", "bcast_repeats", "cycle_ticks", "interval_ticks", "airtime_ticks", "mtu",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.k != 3:
            raise ConfigError("only k=3 is supported")
        if self.max_retx < 0 or self.downward < 0 or self.warmup_cycles < 0:
            raise ConfigError("max_retx, downward and warmup_cycles must be non-negative")
        if not 0.0 <= self.p_max <= 1.0 or not 0.0 <= self.ack_scale <= 1.0:
            raise ConfigError("p_max and ack_scale must lie in [0, 1]")
        if not 0.0 < self.etx_alpha <= 1.0:
            raise ConfigError("etx_alpha must lie in (0, 1]")
        if self.max_bflt_len > 0xFF:
            raise ConfigError("max_bflt_len must fit the one-byte length field")
        if HEADER_LEN + self.max_bflt_len + self.down_payload > self.mtu:
            raise ConfigError(
                f"header {HEADER_LEN} + filter {self.max_bflt_len} + payload {self.down_payload} exceeds MTU {self.mtu}"
            )
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data, base=None):
        base = base or cls()
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        coerced = {}
        for key, value in data.items():
            coerced[key] = coerce(key, value)
        return replace(base, **coerced)

    @classmethod
    def from_json_file(cls, path, base=None):
        with open(path) as fp:
            try:
                data = json.load(fp)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data, base)


_TYPES = {
    "topology": str, "topology_file": str, "target_mode": str,
    "radio_range": float, "area_side": float, "p_max": float, "loss_exponent": float,
    "ack_scale": float, "etx_alpha": float,
    "load_balance": bool, "log_events": bool,
}


def coerce(key, value):
    """Convert a flag or JSON value to the type of config field ``key``."""
    if key not in {f.name for f in fields(SimConfig)}:
        raise ConfigError(f"unknown config key {key!r}")
    if value is None:
        return None
    kind = _TYPES.get(key, int)
    try:
        if kind is bool and isinstance(value, str):
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


# Low-power-listening style MAC shared by all presets: a unicast keeps retrying
# and a broadcast is repeated across the wake-up window.
LPL_MAC = dict(max_retx=7, bcast_repeats=5)

PRESETS = {
    # 74-node chain with twigs, 68 hops deep; one command every 10 s
    "linear74": SimConfig(
        topology="linear", nodes=74, radio_range=20.0, max_bflt_len=40, mtu=112,
        downward=1320, interval_ticks=10_000, warmup_cycles=2, **LPL_MAC,
    ),
    # uniform square, sink at a corner; one command per minute from the third cycle
    "grid225": SimConfig(
        topology="uniform", nodes=225, radio_range=15.0, max_bflt_len=16, mtu=72,
        downward=600, interval_ticks=60_000, warmup_cycles=2, load_balance=True, **LPL_MAC,
    ),
    "grid400": SimConfig(
        topology="uniform", nodes=400, radio_range=15.0, max_bflt_len=20, mtu=72,
        downward=600, interval_ticks=60_000, warmup_cycles=2, load_balance=True, **LPL_MAC,
    ),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
