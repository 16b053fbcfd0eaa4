"""Scenario files: flat `key = value` text with explicit unit suffixes.

One key per line, `#` starts a comment, unknown keys are an error.  Times
accept ns/us/ms/s, rates bps/kbps/mbps/gbps, sizes B/KB/MB; bare numbers are
taken in the field's base unit (ns, bit/s, bytes).
"""

from dataclasses import dataclass, replace

from .engine import NS_PER_SEC

AQM_POLICIES = ("drop-tail", "red-drop", "ramp-mark")
SENDER_MODES = ("baseline", "submss")
CC_VARIANTS = ("reno-like", "dctcp-like")


class ConfigError(ValueError):
    """Invalid scenario configuration; names the offending field."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


_TIME_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": NS_PER_SEC}
_RATE_UNITS = {"bps": 1, "kbps": 1_000, "mbps": 1_000_000, "gbps": 1_000_000_000}
_SIZE_UNITS = {"b": 1, "kb": 1_000, "mb": 1_000_000}


def _parse_with_units(field_name: str, raw: str, units: dict[str, int]) -> int:
    text = raw.strip().lower()
    for suffix in sorted(units, key=len, reverse=True):
        if text.endswith(suffix):
            number = text[: -len(suffix)].strip()
            try:
                value = float(number)
            except ValueError:
                raise ConfigError(field_name, f"cannot parse number in {raw!r}") from None
            return round(value * units[suffix])
    try:
        return round(float(text))
    except ValueError:
        raise ConfigError(field_name, f"cannot parse {raw!r}") from None


def parse_time(field_name: str, raw: str) -> int:
    return _parse_with_units(field_name, raw, _TIME_UNITS)


def parse_rate(field_name: str, raw: str) -> int:
    return _parse_with_units(field_name, raw, _RATE_UNITS)


def parse_size(field_name: str, raw: str) -> int:
    return _parse_with_units(field_name, raw, _SIZE_UNITS)


def parse_bool(field_name: str, raw: str) -> bool:
    text = raw.strip().lower()
    if text in ("on", "true", "yes", "1"):
        return True
    if text in ("off", "false", "no", "0"):
        return False
    raise ConfigError(field_name, f"expected on/off, got {raw!r}")


def parse_int(field_name: str, raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigError(field_name, f"expected an integer, got {raw!r}") from None


def parse_float(field_name: str, raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise ConfigError(field_name, f"expected a number, got {raw!r}") from None


def parse_choice(choices):
    def parser(field_name: str, raw: str) -> str:
        text = raw.strip()
        if text not in choices:
            raise ConfigError(field_name, f"expected one of {', '.join(choices)}, got {raw!r}")
        return text

    return parser


@dataclass
class ScenarioConfig:
    """Everything needed to run one experiment."""

    capacity: int  # bits per second
    n_flows: int
    frame_size: int  # header-inclusive bytes on the wire
    smss: int  # payload bytes per segment
    base_rtt: int  # two-way propagation, ns
    aqm_policy: str
    aqm_target: int  # queue-delay target, ns
    buffer_limit: int  # bytes
    sender_mode: str
    duration: int  # ns
    aqm_ceiling: int = 0  # ns; 0 means the 2x-target default
    cc_variant: str = "reno-like"
    ecn: bool = True
    delayed_acks: bool = True
    warmup: int = -1  # ns; negative means the duration/4 default
    seed: int = 1
    w_min_fraction: float = 1.0 / 64.0

    def __post_init__(self):
        if self.aqm_ceiling == 0:
            self.aqm_ceiling = 2 * self.aqm_target
        if self.warmup < 0:
            self.warmup = self.duration // 4
        self.validate()

    def validate(self) -> None:
        for name in ("capacity", "n_flows", "frame_size", "smss", "duration"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        if self.base_rtt <= 0:
            raise ConfigError("base_rtt", "must be positive")
        if self.smss >= self.frame_size:
            raise ConfigError("smss", f"must be below frame_size ({self.frame_size})")
        if self.aqm_policy not in AQM_POLICIES:
            raise ConfigError("aqm_policy", f"expected one of {', '.join(AQM_POLICIES)}")
        if self.sender_mode not in SENDER_MODES:
            raise ConfigError("sender_mode", f"expected one of {', '.join(SENDER_MODES)}")
        if self.cc_variant not in CC_VARIANTS:
            raise ConfigError("cc_variant", f"expected one of {', '.join(CC_VARIANTS)}")
        if self.aqm_target <= 0:
            raise ConfigError("aqm_target", "must be positive")
        if self.aqm_policy != "drop-tail" and self.aqm_ceiling <= self.aqm_target:
            raise ConfigError("aqm_ceiling", "must exceed aqm_target")
        target_bytes = self.aqm_target * self.capacity // (8 * NS_PER_SEC)
        if self.buffer_limit <= target_bytes:
            raise ConfigError(
                "buffer_limit",
                f"must strictly exceed the byte equivalent of aqm_target ({target_bytes} B)",
            )
        if not 0 <= self.warmup < self.duration:
            raise ConfigError("warmup", "must satisfy 0 <= warmup < duration")
        if not 0 < self.w_min_fraction <= 1:
            raise ConfigError("w_min_fraction", "must be in (0, 1]")

    @property
    def frame_overhead(self) -> int:
        return self.frame_size - self.smss

    @property
    def w_min_bytes(self) -> int:
        return max(1, round(self.smss * self.w_min_fraction))


_FIELD_PARSERS = {
    "capacity": parse_rate,
    "n_flows": parse_int,
    "frame_size": parse_size,
    "smss": parse_size,
    "base_rtt": parse_time,
    "aqm_policy": parse_choice(AQM_POLICIES),
    "aqm_target": parse_time,
    "aqm_ceiling": parse_time,
    "buffer_limit": parse_size,
    "sender_mode": parse_choice(SENDER_MODES),
    "cc_variant": parse_choice(CC_VARIANTS),
    "ecn": parse_bool,
    "delayed_acks": parse_bool,
    "duration": parse_time,
    "warmup": parse_time,
    "seed": parse_int,
    "w_min_fraction": parse_float,
}

_REQUIRED = (
    "capacity",
    "n_flows",
    "frame_size",
    "smss",
    "base_rtt",
    "aqm_policy",
    "aqm_target",
    "buffer_limit",
    "sender_mode",
    "duration",
)


def parse_scenario_text(text: str) -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", f"expected `key = value`, got {line.strip()!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_PARSERS:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "duplicate key")
        values[key] = _FIELD_PARSERS[key](key, raw.strip())
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(key, "required key missing")
    return ScenarioConfig(**values)


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_scenario_text(handle.read())


def parse_field_value(field_name: str, raw: str):
    """Parse one value the way the scenario file would; used by sweeps."""
    if field_name not in _FIELD_PARSERS:
        raise ConfigError(field_name, "unknown key")
    return _FIELD_PARSERS[field_name](field_name, raw)


def with_value(cfg: ScenarioConfig, field_name: str, value) -> ScenarioConfig:
    return replace(cfg, **{field_name: value})
