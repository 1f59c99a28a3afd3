"""Configuration objects, unit handling and the line-oriented config format.

All dB/dBm quantities are converted once, at load time, to linear
milliwatt-referenced values (x dBm -> 10^(x/10) mW, x dB -> 10^(x/10)
ratio).  Everything downstream works in one unit system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class ConfigError(Exception):
    """Base class for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    """Malformed config file line."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    """A config value violates an invariant, or a required key is missing."""


def db_to_linear(x_db: float) -> float:
    """dB (or dBm) to a linear ratio (or mW)."""
    return 10.0 ** (x_db / 10.0)


def parse_quantity(text: str) -> float:
    """Parse a scalar with an optional power-unit suffix.

    Accepted forms: ``16 dBm``, ``-30 dB``, ``5 mW`` or a bare number
    (already linear).  dBm and dB both map through 10^(x/10); the caller
    decides whether the result is mW or a ratio.
    """
    s = text.strip()
    for suffix in ("dBm", "dbm", "dB", "db", "mW", "mw"):
        if s.endswith(suffix):
            head = s[: -len(suffix)].strip()
            try:
                value = float(head)
            except ValueError as exc:
                raise ParseError(f"bad numeric value {head!r}") from exc
            if suffix.lower() in ("dbm", "db"):
                return db_to_linear(value)
            return value
    try:
        return float(s)
    except ValueError as exc:
        raise ParseError(f"bad numeric value {s!r}") from exc


def parse_hidden_dims(text: str) -> tuple[int, ...]:
    """Parse a hidden-layer shape like ``256x128`` into (256, 128)."""
    try:
        dims = tuple(int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise ParseError(f"bad hidden-layer shape {text!r}") from exc
    if not dims or any(d <= 0 for d in dims):
        raise ParseError(f"hidden-layer dims must be positive: {text!r}")
    return dims


PILOT_MODES = ("random-unit", "orthonormal-reuse")
MMSE_INDEX_MODES = ("as-printed", "per-n")


@dataclass(frozen=True)
class NetworkConfig:
    """Physical and dimensional parameters of the cell-free network.

    All powers are linear, milliwatt-referenced.  ``delta_l`` is the
    per-symbol pilot power treated as a dimensionless scale (its dBm
    value converted through 10^(x/10)).
    """

    M: int = 10                 # access points
    K: int = 6                  # user equipments
    radius: float = 20.0        # deployment disk radius, m
    d_min: float = 1.0          # distance clamp (path-loss reference), m
    varsigma0: float = 1e-3     # path loss at the reference distance, linear
    tau_l: int = 6              # pilot length, symbols
    delta_l: float = 100.0      # per-symbol pilot power scale (20 dBm)
    p_u: float = 39.810717055349734       # uplink data power, mW (16 dBm)
    P_u_max: float = 251.18864315095797   # per-UE power cap, mW (24 dBm)
    sigma2: float = 1e-8        # noise power, mW (-80 dBm)
    P_AP: float = 100.0         # AP hardware power, mW (20 dBm)
    P_UE: float = 100.0         # UE hardware power, mW (20 dBm)
    P_s: float = 1.2589254117941673       # SIC receiver sensitivity, mW (1 dBm)
    P_max: float = 158489.3192461114      # total transmit-power cap, mW (52 dBm)
    pilot_mode: str = "random-unit"
    mmse_index_mode: str = "as-printed"
    seed: int = 1

    def validate(self) -> None:
        if self.M < 1:
            raise ValidationError("M must be >= 1")
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.tau_l < 1:
            raise ValidationError("tau_l must be >= 1")
        if not (self.radius > self.d_min > 0.0):
            raise ValidationError("need radius > d_min > 0")
        for name in ("varsigma0", "delta_l", "sigma2", "P_AP", "P_UE",
                     "P_s", "P_max", "P_u_max"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be strictly positive")
        if not (0.0 <= self.p_u <= self.P_u_max):
            raise ValidationError("need 0 <= p_u <= P_u_max")
        if self.pilot_mode not in PILOT_MODES:
            raise ValidationError(f"pilot_mode must be one of {PILOT_MODES}")
        if self.mmse_index_mode not in MMSE_INDEX_MODES:
            raise ValidationError(
                f"mmse_index_mode must be one of {MMSE_INDEX_MODES}")


@dataclass(frozen=True)
class Hyperparameters:
    """Training hyperparameters of the DDPG agent."""

    zeta: float = 0.7           # discount factor
    lr_u: float = 0.01          # policy-network learning rate
    lr_Q: float = 0.02          # value-network learning rate
    tau: float = 0.006          # Polyak averaging factor
    N: int = 32                 # mini-batch size
    episodes: int = 1000
    steps_per_episode: int = 200
    noise_sigma0: float = 0.1   # initial exploration noise std
    noise_decay: float = 0.995  # multiplicative decay per episode
    hidden_dims: tuple[int, ...] = (256, 128)
    buffer_capacity: int = 100_000
    buffer_reset_per_episode: bool = False
    update_cadence: str = "per-step"   # per-step | per-episode
    penalty_scale: float = 0.1  # reward penalty per violated constraint,
                                # relative to the running mean |reward|
    seed: int = 1

    def validate(self) -> None:
        if not (0.0 <= self.zeta <= 1.0):
            raise ValidationError("zeta must lie in [0, 1]")
        if not (0.0 < self.tau <= 1.0):
            raise ValidationError("tau must lie in (0, 1]")
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if self.episodes < 1 or self.steps_per_episode < 1:
            raise ValidationError("episodes and steps_per_episode must be >= 1")
        if self.noise_sigma0 < 0.0:
            raise ValidationError("noise_sigma0 must be >= 0")
        if not (0.0 < self.noise_decay <= 1.0):
            raise ValidationError("noise_decay must lie in (0, 1]")
        if not all(d >= 1 for d in self.hidden_dims):
            raise ValidationError("hidden_dims must be positive")
        if self.buffer_capacity < self.N:
            raise ValidationError("buffer_capacity must be >= N")
        if self.update_cadence not in ("per-step", "per-episode"):
            raise ValidationError("update_cadence must be per-step or per-episode")


EXPERIMENTS = ("convergence", "sweep-power", "sweep-discount",
               "sweep-hidden", "baselines", "flops")

# Paper-scale sweep axes; power values are dBm labels, converted at use.
DEFAULT_SWEEP_POWER_DBM = (4.0, 8.0, 12.0, 16.0, 20.0, 24.0)
DEFAULT_SWEEP_DISCOUNT = (1e-10, 0.1, 0.7, 0.8, 0.9, 1.0 - 1e-10)
DEFAULT_SWEEP_HIDDEN = ((256, 128), (512, 256))


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: network + hyperparameters + orchestration knobs."""

    network: NetworkConfig = field(default_factory=NetworkConfig)
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    experiment: str = "convergence"
    sweep_power_dbm: tuple[float, ...] = DEFAULT_SWEEP_POWER_DBM
    sweep_discount: tuple[float, ...] = DEFAULT_SWEEP_DISCOUNT
    sweep_hidden: tuple[tuple[int, ...], ...] = DEFAULT_SWEEP_HIDDEN
    out_dir: str = "runs/out"
    replicates: int = 5

    def validate(self) -> None:
        self.network.validate()
        self.hyper.validate()
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"experiment must be one of {EXPERIMENTS}")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.experiment == "sweep-power" and not self.sweep_power_dbm:
            raise ValidationError("sweep_power values must be nonempty")
        if self.experiment == "sweep-discount" and not self.sweep_discount:
            raise ValidationError("sweep_discount values must be nonempty")
        if self.experiment == "sweep-hidden" and not self.sweep_hidden:
            raise ValidationError("sweep_hidden values must be nonempty")


# Keys that must appear in a config file; everything else has defaults.
REQUIRED_KEYS = (
    "M", "K", "radius", "tau_l", "delta_l", "p_u", "sigma2",
    "P_AP", "P_UE", "P_s", "P_max",
    "zeta", "lr_u", "lr_Q", "tau", "N", "episodes", "steps_per_episode",
)

# Power-like keys routed through parse_quantity.
_QUANTITY_KEYS = {
    "varsigma0", "delta_l", "p_u", "P_u_max", "sigma2",
    "P_AP", "P_UE", "P_s", "P_max",
}
_INT_KEYS = {"M", "K", "tau_l", "seed", "N", "episodes", "steps_per_episode",
             "buffer_capacity", "replicates"}
_FLOAT_KEYS = {"radius", "d_min", "zeta", "lr_u", "lr_Q", "tau",
               "noise_sigma0", "noise_decay", "penalty_scale"}
_STR_KEYS = {"pilot_mode", "mmse_index_mode", "experiment", "out",
             "update_cadence"}
_BOOL_KEYS = {"buffer_reset_per_episode"}
_LIST_KEYS = {"sweep_power", "sweep_discount", "sweep_hidden"}
_KEY_ALIASES = {"steps": "steps_per_episode", "out_dir": "out"}

_KNOWN_KEYS = (_QUANTITY_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS
               | _BOOL_KEYS | _LIST_KEYS | {"hidden"})

_NETWORK_FIELDS = {
    "M", "K", "radius", "d_min", "varsigma0", "tau_l", "delta_l", "p_u",
    "P_u_max", "sigma2", "P_AP", "P_UE", "P_s", "P_max", "pilot_mode",
    "mmse_index_mode", "seed",
}
_HYPER_FIELDS = {
    "zeta", "lr_u", "lr_Q", "tau", "N", "episodes", "steps_per_episode",
    "noise_sigma0", "noise_decay", "buffer_capacity",
    "buffer_reset_per_episode", "update_cadence", "penalty_scale",
}


def _split_list(text: str) -> list[str]:
    return [tok for tok in text.replace(",", " ").split() if tok]


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines (# comments) into a raw typed dict."""
    raw: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", line_no)
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        if key not in _KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", line_no)
        if not value:
            raise ParseError(f"empty value for key {key!r}", line_no)
        try:
            if key in _QUANTITY_KEYS:
                raw[key] = parse_quantity(value)
            elif key in _INT_KEYS:
                raw[key] = int(value)
            elif key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _BOOL_KEYS:
                low = value.lower()
                if low not in ("true", "false"):
                    raise ParseError(f"expected true/false for {key!r}")
                raw[key] = low == "true"
            elif key == "hidden":
                raw["hidden_dims"] = parse_hidden_dims(value)
            elif key == "sweep_power":
                raw[key] = tuple(float(tok) for tok in _split_list(value))
            elif key == "sweep_discount":
                raw[key] = tuple(float(tok) for tok in _split_list(value))
            elif key == "sweep_hidden":
                raw[key] = tuple(parse_hidden_dims(tok)
                                 for tok in _split_list(value))
            else:
                raw[key] = value
        except ParseError as exc:
            if exc.line_no is None:
                raise ParseError(str(exc), line_no) from None
            raise
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", line_no) from None
    return raw


def spec_from_raw(raw: dict) -> ExperimentSpec:
    missing = [key for key in REQUIRED_KEYS if key not in raw]
    if missing:
        raise ValidationError(f"missing required key {missing[0]!r}")
    net_kwargs = {k: v for k, v in raw.items() if k in _NETWORK_FIELDS}
    hyper_kwargs = {k: v for k, v in raw.items() if k in _HYPER_FIELDS}
    if "hidden_dims" in raw:
        hyper_kwargs["hidden_dims"] = raw["hidden_dims"]
    if "seed" in raw:
        hyper_kwargs["seed"] = raw["seed"]
    spec_kwargs = {}
    if "experiment" in raw:
        spec_kwargs["experiment"] = raw["experiment"]
    if "out" in raw:
        spec_kwargs["out_dir"] = raw["out"]
    if "replicates" in raw:
        spec_kwargs["replicates"] = raw["replicates"]
    if "sweep_power" in raw:
        spec_kwargs["sweep_power_dbm"] = raw["sweep_power"]
    if "sweep_discount" in raw:
        spec_kwargs["sweep_discount"] = raw["sweep_discount"]
    if "sweep_hidden" in raw:
        spec_kwargs["sweep_hidden"] = raw["sweep_hidden"]
    spec = ExperimentSpec(network=NetworkConfig(**net_kwargs),
                          hyper=Hyperparameters(**hyper_kwargs),
                          **spec_kwargs)
    spec.validate()
    return spec


def load_config(path: str) -> ExperimentSpec:
    """Load and validate an experiment spec from a config file."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return spec_from_raw(parse_config_text(text))


def with_seed(spec: ExperimentSpec, seed: int) -> ExperimentSpec:
    return replace(spec,
                   network=replace(spec.network, seed=seed),
                   hyper=replace(spec.hyper, seed=seed))


def resolved_config_text(spec: ExperimentSpec) -> str:
    """Stable key=value dump of every resolved (linear-unit) value."""
    lines = ["# resolved configuration (all powers linear, mW-referenced)"]
    for section, obj in (("network", spec.network), ("hyper", spec.hyper)):
        lines.append(f"[{section}]")
        for name in sorted(vars(obj)):
            lines.append(f"{name} = {getattr(obj, name)!r}")
    lines.append("[experiment]")
    lines.append(f"experiment = {spec.experiment!r}")
    lines.append(f"sweep_power_dbm = {spec.sweep_power_dbm!r}")
    lines.append(f"sweep_discount = {spec.sweep_discount!r}")
    lines.append(f"sweep_hidden = {spec.sweep_hidden!r}")
    lines.append(f"out_dir = {spec.out_dir!r}")
    lines.append(f"replicates = {spec.replicates!r}")
    return "\n".join(lines) + "\n"


def dbm_to_mw(x_dbm: float) -> float:
    return db_to_linear(x_dbm)


def mw_to_dbm(x_mw: float) -> float:
    return 10.0 * math.log10(x_mw)
