"""Simulation state containers and their initializers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import SimConfig
from .grid import Grid, get_grid


class DescriptorError(ValueError):
    """Unusable initial-data descriptor."""


def wrap(positions: np.ndarray, box_length: float) -> np.ndarray:
    """Map positions into [0, L)^3."""
    out = np.mod(positions, box_length)
    # np.mod can return exactly L for tiny negative inputs
    out[out >= box_length] = 0.0
    return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """Weighted particle approximation of the phase-space density f(t, x, v).

    ``weights`` is a read-only array fixed at construction; every stepping
    operation hands the same array object to the ensemble it returns.
    """

    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray
    box_length: float
    r0: float = 0.0

    def __post_init__(self):
        n = len(self.weights)
        if self.positions.shape != (n, 3) or self.velocities.shape != (n, 3):
            raise ValueError("positions/velocities must have shape (N, 3) matching weights")
        if n == 0:
            raise ValueError("ensemble must be nonempty")
        if self.weights.flags.writeable:
            object.__setattr__(self, "weights", _readonly(self.weights))
        if np.any(self.weights < 0.0):
            raise ValueError("particle weights must be nonnegative")
        object.__setattr__(self, "positions", wrap(np.asarray(self.positions, dtype=np.float64), self.box_length))
        object.__setattr__(self, "velocities", np.ascontiguousarray(self.velocities, dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def momentum(self) -> np.ndarray:
        return self.weights @ self.velocities

    def evolve(self, positions, velocities) -> "ParticleEnsemble":
        """New ensemble with updated phase-space coordinates and the same weights."""
        return replace(self, positions=positions, velocities=velocities)


@dataclass(frozen=True, eq=False)
class FluidState:
    """Periodic velocity field held on the grid and as rfft coefficients.

    ``pressure_gradient_grid`` and ``forcing_grid`` are byproducts of the last
    Stokes step (zeros for an initial field).
    """

    grid: Grid
    velocity_spectral: np.ndarray
    velocity_grid: np.ndarray
    pressure_gradient_grid: np.ndarray = field(default=None)
    forcing_grid: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.pressure_gradient_grid is None:
            object.__setattr__(self, "pressure_gradient_grid", np.zeros_like(self.velocity_grid))
        if self.forcing_grid is None:
            object.__setattr__(self, "forcing_grid", np.zeros_like(self.velocity_grid))

    @classmethod
    def from_spectral(cls, grid: Grid, spectral: np.ndarray, **byproducts) -> "FluidState":
        return cls(grid, spectral, grid.ifft(spectral), **byproducts)

    @classmethod
    def from_grid(cls, grid: Grid, velocity: np.ndarray) -> "FluidState":
        velocity = np.asarray(velocity)
        if np.iscomplexobj(velocity):
            raise DescriptorError("fluid velocity must be a real field")
        velocity = np.ascontiguousarray(velocity, dtype=np.float64)
        if velocity.shape != (3,) + grid.shape:
            raise ValueError(f"velocity grid must have shape {(3,) + grid.shape}")
        return cls(grid, grid.fft(velocity), velocity)

    @classmethod
    def zeros(cls, grid: Grid) -> "FluidState":
        return cls.from_grid(grid, np.zeros((3,) + grid.shape))

    @property
    def energy(self) -> float:
        return 0.5 * float(np.sum(self.velocity_grid ** 2)) * self.grid.cell_volume

    @property
    def momentum(self) -> np.ndarray:
        return self.grid.integrate(self.velocity_grid)

    @property
    def max_speed(self) -> float:
        return float(np.sqrt(np.max(np.sum(self.velocity_grid ** 2, axis=0))))


# ---------------------------------------------------------------------------
# initial-data descriptors: "name" or "name:key=value,key=value"

_UNBOUNDED = {"gaussian", "maxwellian", "normal"}


def parse_descriptor(text: str) -> tuple[str, dict]:
    name, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DescriptorError(f"descriptor parameter {item!r} is not key=value")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            try:
                complex(value.strip().replace(" ", ""))
            except ValueError:
                raise DescriptorError(f"descriptor parameter {key}={value!r} is not numeric") from None
            raise DescriptorError(f"descriptor parameter {key}={value!r}: field must be real") from None
    return name.strip(), params


def _take(params: dict, allowed: dict, name: str) -> dict:
    unknown = set(params) - set(allowed)
    if unknown:
        raise DescriptorError(f"{name}: unknown parameter(s) {sorted(unknown)}")
    return {**allowed, **params}


def _sample_bump(rng, n: int) -> np.ndarray:
    """Unit-ball samples with density proportional to (1 - |v|^2)^2, by rejection
    from the uniform ball (acceptance about 0.23)."""
    out, k = [], 0
    while k < n:
        m = 5 * (n - k) + 16
        d = rng.standard_normal((m, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = rng.random(m) ** (1.0 / 3.0)
        keep = rng.random(m) < (1.0 - r * r) ** 2
        out.append(d[keep] * r[keep, None])
        k += int(keep.sum())
    return np.concatenate(out)[:n] if out else np.zeros((0, 3))


def init_ensemble(config: SimConfig, descriptor: str | None = None, rng=None) -> ParticleEnsemble:
    """Sample the initial particle ensemble.

    Presets: ``uniform_ball`` (velocities uniform in the ball of radius ``r0``),
    ``smooth_ball`` (density proportional to (1 - |v|^2 / r0^2)^2 in that ball),
    ``two_cluster`` (first half moving at +``speed`` along x, the rest at
    -``speed``), ``at_rest`` and ``consensus`` (common velocity ``vx, vy, vz``).
    Positions are uniform in a centered cube of edge ``spread * L``. Weights are
    equal, summing to ``mass``. Velocity laws with unbounded support are rejected.
    """
    name, params = parse_descriptor(descriptor or config.init_particles)
    if name in _UNBOUNDED:
        raise DescriptorError(f"{name}: velocity support must be compact (bounded by some R0)")
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    n, L = config.particle_count, config.box_length
    common = {"mass": 1.0, "spread": 1.0}

    if name == "uniform_ball":
        p = _take(params, {**common, "r0": 1.0}, name)
        if not np.isfinite(p["r0"]) or p["r0"] < 0:
            raise DescriptorError("uniform_ball: r0 must be finite and >= 0")
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        vel = d * (p["r0"] * rng.random(n) ** (1.0 / 3.0))[:, None]
    elif name == "smooth_ball":
        p = _take(params, {**common, "r0": 1.0}, name)
        if not np.isfinite(p["r0"]) or p["r0"] < 0:
            raise DescriptorError("smooth_ball: r0 must be finite and >= 0")
        vel = p["r0"] * _sample_bump(rng, n)
    elif name == "two_cluster":
        p = _take(params, {**common, "speed": 1.0}, name)
        vel = np.zeros((n, 3))
        half = (n + 1) // 2
        vel[:half, 0] = p["speed"]
        vel[half:, 0] = -p["speed"]
    elif name == "at_rest":
        p = _take(params, common, name)
        vel = np.zeros((n, 3))
    elif name == "consensus":
        p = _take(params, {**common, "vx": 0.0, "vy": 0.0, "vz": 0.0}, name)
        vel = np.tile([p["vx"], p["vy"], p["vz"]], (n, 1)).astype(float)
    else:
        raise DescriptorError(f"unknown particle preset {name!r}")

    if not (0.0 < p["spread"] <= 1.0):
        raise DescriptorError("spread must lie in (0, 1]")
    if p["mass"] < 0:
        raise DescriptorError("mass must be nonnegative")
    edge = p["spread"] * L
    pos = 0.5 * (L - edge) + edge * rng.random((n, 3))
    weights = np.full(n, p["mass"] / n)
    r0 = float(np.max(np.linalg.norm(vel, axis=1)))
    return ParticleEnsemble(pos, vel, weights, L, r0=r0)


def init_fluid(config: SimConfig, descriptor: str | None = None) -> FluidState:
    """Build the initial velocity field and project it onto divergence-free fields.

    Presets: ``zero``, ``uniform`` (constant ``ux, uy, uz``), ``mode``
    (``a sin(2 pi k.x / L)`` with integer ``kx, ky, kz`` and amplitude
    ``ax, ay, az``) and ``taylor_green`` (amplitude ``amp``).
    """
    from .stokes import project_field

    grid = get_grid(config.box_length, config.grid_n)
    name, params = parse_descriptor(descriptor or config.init_fluid)
    x, y, z = grid.nodes()
    s = 2.0 * np.pi / config.box_length
    u = np.zeros((3,) + grid.shape)
    if name == "zero":
        _take(params, {}, name)
    elif name == "uniform":
        p = _take(params, {"ux": 0.0, "uy": 0.0, "uz": 0.0}, name)
        u[0], u[1], u[2] = p["ux"], p["uy"], p["uz"]
    elif name == "mode":
        p = _take(params, {"kx": 1.0, "ky": 0.0, "kz": 0.0, "ax": 0.0, "ay": 1.0, "az": 0.0}, name)
        k = np.array([p["kx"], p["ky"], p["kz"]])
        if not np.all(k == np.round(k)):
            raise DescriptorError("mode: wavenumbers must be integers (field must be periodic)")
        if np.any(np.abs(k) >= config.grid_n // 2):
            raise DescriptorError("mode: wavenumber not resolved below the Nyquist mode")
        phase = np.sin(s * (k[0] * x + k[1] * y + k[2] * z))
        for c, a in enumerate((p["ax"], p["ay"], p["az"])):
            u[c] = a * phase
    elif name == "taylor_green":
        p = _take(params, {"amp": 1.0}, name)
        u[0] = p["amp"] * np.sin(s * x) * np.cos(s * y) * np.cos(s * z)
        u[1] = -p["amp"] * np.cos(s * x) * np.sin(s * y) * np.cos(s * z)
    else:
        raise DescriptorError(f"unknown fluid preset {name!r}")
    fluid = FluidState.from_grid(grid, u)
    return FluidState.from_spectral(grid, project_field(grid, fluid.velocity_spectral))
