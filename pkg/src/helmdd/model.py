"""Velocity models c(x) and nodal wavenumber fields k = 2*pi*f / c.

Slowness 1/c, not velocity, is the interpolated quantity, and the nodal
values make k piecewise linear and continuous on the mesh. The y
coordinate is depth (positive downward from the surface at y = 0).
"""

from dataclasses import dataclass

import numpy as np


class VelocityModel:
    """Base for the three model kinds: homogeneous, layered, gridded."""

    kind = "abstract"

    @property
    def c_min(self) -> float:
        raise NotImplementedError

    @property
    def c_max(self) -> float:
        raise NotImplementedError

    def sample_slowness(self, x) -> np.ndarray:
        """Slowness 1/c (s/m) at points x of shape (..., 2), clamped to the
        model extent."""
        raise NotImplementedError


@dataclass(frozen=True)
class HomogeneousModel(VelocityModel):
    c: float
    kind = "homogeneous"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("velocity must be positive")

    @property
    def c_min(self):
        return self.c

    @property
    def c_max(self):
        return self.c

    def sample_slowness(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], 1.0 / self.c)


class LayeredModel(VelocityModel):
    """Horizontal layers: `tops` are ascending depth breakpoints (m) starting
    at 0, `velocities` the per-layer speeds (m/s)."""

    kind = "layered"

    def __init__(self, tops, velocities):
        self.tops = np.asarray(tops, dtype=float)
        self.velocities = np.asarray(velocities, dtype=float)
        if len(self.tops) != len(self.velocities):
            raise ValueError("one velocity per layer required")
        if self.tops[0] != 0.0 or np.any(np.diff(self.tops) <= 0):
            raise ValueError("layer tops must start at 0 and increase")
        if np.any(self.velocities <= 0):
            raise ValueError("velocities must be positive")

    @property
    def c_min(self):
        return float(self.velocities.min())

    @property
    def c_max(self):
        return float(self.velocities.max())

    def sample_slowness(self, x):
        x = np.asarray(x, dtype=float)
        depth = x[..., 1]
        idx = np.clip(np.searchsorted(self.tops, depth, side="right") - 1, 0, None)
        return 1.0 / self.velocities[idx]


class GriddedModel(VelocityModel):
    """Regular-grid samples; bilinear interpolation of slowness.

    values[iy, ix] is the velocity (m/s) at (x = ix * spacing,
    depth = iy * spacing). Queries outside the grid clamp to the edge.
    """

    kind = "gridded"

    def __init__(self, spacing: float, values: np.ndarray):
        if spacing <= 0:
            raise ValueError("grid spacing must be positive")
        self.spacing = float(spacing)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2D array")
        if np.any(self.values <= 0):
            raise ValueError("velocities must be positive")

    @property
    def nx_g(self):
        return self.values.shape[1]

    @property
    def ny_g(self):
        return self.values.shape[0]

    @property
    def c_min(self):
        return float(self.values.min())

    @property
    def c_max(self):
        return float(self.values.max())

    def sample_slowness(self, x):
        x = np.asarray(x, dtype=float)
        s = 1.0 / self.values
        gx = np.clip(x[..., 0] / self.spacing, 0.0, self.nx_g - 1)
        gy = np.clip(x[..., 1] / self.spacing, 0.0, self.ny_g - 1)
        ix = np.clip(gx.astype(int), 0, self.nx_g - 2) if self.nx_g > 1 else np.zeros_like(gx, int)
        iy = np.clip(gy.astype(int), 0, self.ny_g - 2) if self.ny_g > 1 else np.zeros_like(gy, int)
        tx = gx - ix
        ty = gy - iy
        ix1 = np.minimum(ix + 1, self.nx_g - 1)
        iy1 = np.minimum(iy + 1, self.ny_g - 1)
        return ((1 - tx) * (1 - ty) * s[iy, ix]
                + tx * (1 - ty) * s[iy, ix1]
                + (1 - tx) * ty * s[iy1, ix]
                + tx * ty * s[iy1, ix1])


def sample_slowness(model: VelocityModel, x) -> np.ndarray:
    """Module-level convenience wrapper around model.sample_slowness."""
    return model.sample_slowness(x)


@dataclass(frozen=True, eq=False)
class WavenumberField:
    """Nodal slowness and wavenumber k = 2*pi*f * slowness at mesh vertices;
    k is interpolated linearly inside elements."""

    slowness: np.ndarray
    f: float
    k: np.ndarray


def build_wavenumber(model: VelocityModel, mesh, f: float) -> WavenumberField:
    """Project 1/c onto mesh vertices at frequency f (Hz)."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    s = np.asarray(model.sample_slowness(mesh.vertices), dtype=float)
    return WavenumberField(s, float(f), 2.0 * np.pi * float(f) * s)


def mini_subduction_model(Lx: float = 10200.0, Ly: float = 2800.0,
                          spacing: float = 100.0) -> GriddedModel:
    """Synthetic two-layer-plus-wedge gridded model, velocities 1500-8500 m/s.

    A water layer whose base deepens to the right sits on a basement whose
    speed grows with depth; a faster dipping wedge cuts through the basement.
    The 1500/8500 contrast matches the range that makes heterogeneous
    convergence interesting.
    """
    nx = int(round(Lx / spacing)) + 1
    ny = int(round(Ly / spacing)) + 1
    x = np.arange(nx) * spacing
    y = np.arange(ny) * spacing
    X, Y = np.meshgrid(x, y, indexing="xy")

    water_base = 0.15 * Ly + 0.20 * Ly * (X / Lx)
    below = np.clip((Y - water_base) / (Ly - water_base), 0.0, 1.0)
    c = 3000.0 + 5500.0 * below**1.5

    # dipping high-velocity wedge entering at mid-depth on the left
    wedge_center = 0.45 * Ly + 0.35 * Ly * (X / Lx)
    in_wedge = np.abs(Y - wedge_center) < 0.08 * Ly
    c = np.where(in_wedge & (Y > water_base), np.maximum(c, 6500.0), c)

    c = np.where(Y < water_base, 1500.0, c)
    return GriddedModel(spacing, np.clip(c, 1500.0, 8500.0))


def write_gridded_model(model: GriddedModel, path) -> None:
    """Plain-text gridded model: header (nx, ny, spacing) then row-major
    velocity samples in m/s."""
    with open(path, "w") as fh:
        fh.write(f"{model.nx_g} {model.ny_g} {model.spacing!r}\n")
        for row in model.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_gridded_model(path) -> GriddedModel:
    with open(path) as fh:
        nx, ny, spacing = fh.readline().split()
        values = np.loadtxt(fh, dtype=float, ndmin=2)
    if values.shape != (int(ny), int(nx)):
        raise ValueError(f"expected {ny} x {nx} samples in {path}")
    return GriddedModel(float(spacing), values)
