"""Simulation configuration: kernel, weight exponents, run parameters and the
flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


class Mode(str, enum.Enum):
    PURE_KINETIC = "pure_kinetic"
    FROZEN_FLUID = "frozen_fluid"
    FULL_COUPLING = "full_coupling"


class KernelFamily(str, enum.Enum):
    RATIONAL_DECAY = "rational_decay"
    CONSTANT = "constant"


# integer codes handed to the compiled pair loops
KERNEL_CODES = {KernelFamily.RATIONAL_DECAY: 0, KernelFamily.CONSTANT: 1}

_SCAN_R_MAX = 50.0
_SCAN_POINTS = 200_001


@dataclass(frozen=True)
class KernelSpec:
    """Communication weight phi(r).

    ``rational_decay`` is phi(r) = 1 / (1 + r^2); ``constant`` is phi(r) = c with
    c in (0, 1]. Both are checked at construction by a dense scan to satisfy
    phi <= 1 and |phi'| <= 1, positivity and monotonicity.
    """

    family: KernelFamily = KernelFamily.RATIONAL_DECAY
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is KernelFamily.CONSTANT and not (0.0 < self.c <= 1.0):
            raise ConfigError(f"kernel.c: constant kernel needs 0 < c <= 1, got {self.c}")
        r = np.linspace(0.0, _SCAN_R_MAX, _SCAN_POINTS)
        phi = self(r)
        dphi = self.derivative(r)
        if np.any(phi <= 0.0):
            raise ConfigError("kernel: phi must be positive")
        if np.any(np.diff(phi) > 0.0):
            raise ConfigError("kernel: phi must be nonincreasing")
        if phi.max() > 1.0 or np.abs(dphi).max() > 1.0:
            raise ConfigError("kernel: requires max(|phi|, |phi'|) <= 1")

    @property
    def code(self) -> int:
        return KERNEL_CODES[self.family]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.family is KernelFamily.CONSTANT:
            return np.full_like(r, self.c)
        return 1.0 / (1.0 + r * r)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.family is KernelFamily.CONSTANT:
            return np.zeros_like(r)
        return -2.0 * r / (1.0 + r * r) ** 2

    def inverse(self, eps: float) -> float:
        """Smallest r with phi(r) <= eps (inf if phi never drops that low)."""
        if self.family is KernelFamily.CONSTANT:
            return 0.0 if self.c <= eps else math.inf
        if eps >= 1.0:
            return 0.0
        return math.sqrt(1.0 / eps - 1.0)


@dataclass(frozen=True)
class WeightSpec:
    """Exponents of the phase-space weight
    omega(x, v) = (1 + |v|^2)^(2 alpha + 1) * (1 + |x|^2 + |v|^2)^(3 gamma)."""

    alpha: float = 1.5
    gamma: float = 1.5

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ConfigError(f"weights.alpha: must satisfy alpha > 1, got {self.alpha}")
        if not self.gamma > 1.0:
            raise ConfigError(f"weights.gamma: must satisfy gamma > 1, got {self.gamma}")

    def omega(self, x2, v2):
        """Weight evaluated from squared norms |x|^2 and |v|^2."""
        return (1.0 + v2) ** (2.0 * self.alpha + 1.0) * (1.0 + x2 + v2) ** (3.0 * self.gamma)

    def lam(self, v2):
        return (1.0 + v2) ** self.alpha


@dataclass(frozen=True)
class SimConfig:
    box_length: float
    grid_n: int
    particle_count: int
    dt: float
    t_end: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    picard_tol: float = 1e-10
    picard_max_iter: int = 25
    output_every: int = 1
    rng_seed: int = 0
    mode: Mode = Mode.FULL_COUPLING
    init_particles: str = "uniform_ball:r0=1.0"
    init_fluid: str = "zero"
    weights: WeightSpec = field(default_factory=WeightSpec)
    q: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "mode", _parse_mode(self.mode))
        for key, ok, rule in self._constraints():
            if not ok:
                raise ConfigError(f"{key}: must satisfy {rule}, got {getattr(self, _FIELD_OF.get(key, key))!r}")
        self.n_steps  # validates t_end / dt commensurability

    def _constraints(self):
        return [
            ("box_length", self.box_length > 0, "box_length > 0"),
            ("grid_n", self.grid_n >= 4 and self.grid_n % 2 == 0, "grid_n >= 4 and even"),
            ("n_particles", self.particle_count >= 1, "n_particles >= 1"),
            ("dt", self.dt > 0, "dt > 0"),
            ("t_end", self.t_end >= 0, "t_end >= 0"),
            ("picard_tol", self.picard_tol > 0, "picard_tol > 0"),
            ("picard_max_iter", self.picard_max_iter >= 1, "picard_max_iter >= 1"),
            ("output_every", self.output_every >= 1, "output_every >= 1"),
            ("q", 3.0 < self.q <= 6.0, "3 < q <= 6"),
        ]

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConfigError(f"t_end: must be an integer multiple of dt, got t_end={self.t_end}, dt={self.dt}")
        return n

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Flat key -> value mapping using config-file key names."""
        return {
            "box_length": self.box_length,
            "grid_n": self.grid_n,
            "n_particles": self.particle_count,
            "dt": self.dt,
            "t_end": self.t_end,
            "kernel.family": self.kernel.family.value,
            "kernel.c": self.kernel.c,
            "picard_tol": self.picard_tol,
            "picard_max_iter": self.picard_max_iter,
            "output_every": self.output_every,
            "seed": self.rng_seed,
            "mode": self.mode.value,
            "init.particles": self.init_particles,
            "init.fluid": self.init_fluid,
            "weights.alpha": self.weights.alpha,
            "weights.gamma": self.weights.gamma,
            "q": self.q,
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                       for k, v in self.to_dict().items())

    @classmethod
    def from_dict(cls, values: dict) -> "SimConfig":
        return _build(values, {k: 0 for k in values})


_FIELD_OF = {"n_particles": "particle_count"}


def _parse_mode(value) -> Mode:
    if isinstance(value, Mode):
        return value
    flags = [s.strip() for s in str(value).replace("+", ",").split(",") if s.strip()]
    if len(flags) != 1:
        raise ConfigError(f"mode: exactly one mode flag must be active, got {value!r}")
    try:
        return Mode(flags[0])
    except ValueError:
        raise ConfigError(f"mode: unknown mode {flags[0]!r}; expected one of "
                          f"{', '.join(m.value for m in Mode)}") from None


# key -> (converter, required)
CONFIG_KEYS = {
    "box_length": (float, True),
    "grid_n": (int, True),
    "n_particles": (int, True),
    "dt": (float, True),
    "t_end": (float, True),
    "kernel.family": (str, False),
    "kernel.c": (float, False),
    "picard_tol": (float, False),
    "picard_max_iter": (int, False),
    "output_every": (int, False),
    "seed": (int, False),
    "mode": (str, False),
    "init.particles": (str, False),
    "init.fluid": (str, False),
    "weights.alpha": (float, False),
    "weights.gamma": (float, False),
    "q": (float, False),
}


def _where(lines: dict, key: str) -> str:
    n = lines.get(key)
    return f" (line {n})" if n else ""


def _build(raw: dict, lines: dict) -> SimConfig:
    values = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{key}: unknown config key{_where(lines, key)}")
        conv, _ = CONFIG_KEYS[key]
        try:
            if conv is int and isinstance(value, str):
                f = float(value)
                if not f.is_integer():
                    raise ValueError
                value = int(f)
            values[key] = conv(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {value!r} as {conv.__name__}{_where(lines, key)}") from None
    missing = [k for k, (_, req) in CONFIG_KEYS.items() if req and k not in values]
    if missing:
        raise ConfigError(f"{missing[0]}: missing required key")

    def guarded(keys, fn):
        try:
            return fn()
        except ConfigError as exc:
            msg = str(exc)
            key = next((k for k in keys if msg.startswith(k)), keys[0])
            raise ConfigError(msg + _where(lines, key)) from None

    kernel = guarded(["kernel.c", "kernel.family", "kernel"], lambda: KernelSpec(
        family=values.get("kernel.family", KernelFamily.RATIONAL_DECAY.value),
        c=values.get("kernel.c", 1.0)))
    weights = guarded(["weights.alpha", "weights.gamma"], lambda: WeightSpec(
        alpha=values.get("weights.alpha", 1.5), gamma=values.get("weights.gamma", 1.5)))
    kwargs = dict(
        box_length=values["box_length"],
        grid_n=values["grid_n"],
        particle_count=values["n_particles"],
        dt=values["dt"],
        t_end=values["t_end"],
        kernel=kernel,
        weights=weights,
    )
    for key, name in [("picard_tol", "picard_tol"), ("picard_max_iter", "picard_max_iter"),
                      ("output_every", "output_every"), ("seed", "rng_seed"), ("mode", "mode"),
                      ("init.particles", "init_particles"), ("init.fluid", "init_fluid"), ("q", "q")]:
        if key in values:
            kwargs[name] = values[key]
    return guarded(list(CONFIG_KEYS), lambda: SimConfig(**kwargs))


def parse_config_text(text: str) -> SimConfig:
    raw, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"{key}: duplicate key on lines {lines[key]} and {lineno}")
        raw[key], lines[key] = value.strip("'\""), lineno
    return _build(raw, lines)


def parse_config(path) -> SimConfig:
    """Read and fully validate a flat ``key = value`` config file.

    Unknown keys, missing required keys, duplicates and constraint violations
    raise :class:`ConfigError` naming the key and its line.
    """
    return parse_config_text(Path(path).read_text())
