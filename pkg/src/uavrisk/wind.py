"""Environmental wind: gridded constant fields plus Dryden turbulence.

The constant component comes from precomputed vector-field grids, each
tagged with the inlet condition it was computed for. A sampled inlet
picks the nearest grid by angle and scales it linearly by speed. On top
of that, gust velocities come from the low-altitude Dryden model:
Gaussian noise shaped by per-axis forming filters (first order along
the body x axis, second order along y and z), discretized with the
bilinear transform at the simulation timestep.

Turbulence intensities and length scales follow the low-altitude
parameterization

    L_w = h                      sigma_w = 0.1 * W20
    L_u = L_v = h / (0.177 + 0.000823 h)^1.2
    sigma_u = sigma_v = sigma_w / (0.177 + 0.000823 h)^0.4

with h the altitude above ground in meters and W20 the mean wind speed
near the surface (the sampled inlet speed is used as its surrogate,
and also as the advection speed of the frozen turbulence field).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, LoadError
from .flight import fnum

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class InletDistribution:
    """Gaussian inlet condition: angle (deg) and speed (m/s)."""

    mean_angle: float
    mean_speed: float
    std_angle: float
    std_speed: float

    def __post_init__(self):
        if self.std_angle < 0.0 or self.std_speed < 0.0:
            raise InputError("inlet std deviations must be non-negative")
        if self.mean_speed < 0.0:
            raise InputError("inlet mean_speed must be non-negative")


@dataclass(frozen=True)
class InletSample:
    angle: float   # deg
    speed: float   # m/s, >= 0


@dataclass(frozen=True)
class WindGrid:
    """Uniform 3D grid of wind vectors for one reference inlet condition."""

    origin: tuple[float, float, float]
    cell_size: float
    dims: tuple[int, int, int]
    vectors: np.ndarray            # (nx, ny, nz, 3) m/s
    reference_angle: float         # deg
    reference_speed: float         # m/s, > 0

    def __post_init__(self):
        if self.cell_size <= 0.0:
            raise InputError("cell_size must be positive")
        if any(n < 2 for n in self.dims):
            raise InputError("grid needs at least 2 nodes per axis")
        if self.reference_speed <= 0.0:
            raise InputError("reference_speed must be positive")
        v = np.asarray(self.vectors, dtype=float)
        if v.shape != (*self.dims, 3):
            raise InputError(f"vectors shape {v.shape}, expected {(*self.dims, 3)}")
        if not np.all(np.isfinite(v)):
            raise InputError("wind vectors must be finite")
        object.__setattr__(self, "vectors", v)

    def interpolate(self, position) -> np.ndarray:
        """Trilinear interpolation; out-of-grid positions clamp to the edge."""
        nx, ny, nz = self.dims
        u = [(position[a] - self.origin[a]) / self.cell_size for a in range(3)]
        u = [min(max(c, 0.0), n - 1.0) for c, n in zip(u, (nx, ny, nz))]
        i0 = [min(int(c), n - 2) for c, n in zip(u, (nx, ny, nz))]
        f = [c - i for c, i in zip(u, i0)]
        i, j, k = i0
        fx, fy, fz = f
        v = self.vectors
        c00 = v[i, j, k] * (1 - fx) + v[i + 1, j, k] * fx
        c10 = v[i, j + 1, k] * (1 - fx) + v[i + 1, j + 1, k] * fx
        c01 = v[i, j, k + 1] * (1 - fx) + v[i + 1, j, k + 1] * fx
        c11 = v[i, j + 1, k + 1] * (1 - fx) + v[i + 1, j + 1, k + 1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        return c0 * (1 - fz) + c1 * fz

    def is_uniform(self) -> bool:
        flat = self.vectors.reshape(-1, 3)
        return bool(np.all(flat == flat[0]))


@dataclass(frozen=True)
class WindFieldSet:
    """Grid library keyed by reference inlet angle, plus the inlet law."""

    grids: tuple[WindGrid, ...]
    inlet: InletDistribution

    def __post_init__(self):
        if len(self.grids) == 0:
            raise InputError("at least one wind grid required")
        angles = [g.reference_angle for g in self.grids]
        if len(set(angles)) != len(angles):
            raise InputError("grid reference angles must be distinct")

    def nearest_grid(self, angle_deg: float) -> WindGrid:
        """Nearest reference angle by circular distance; ties pick the
        smaller reference angle."""
        def dist(g: WindGrid) -> float:
            d = abs((angle_deg - g.reference_angle) % 360.0)
            return min(d, 360.0 - d)
        return min(self.grids, key=lambda g: (dist(g), g.reference_angle))


def sample_inlet(inlet: InletDistribution, rng: np.random.Generator) -> InletSample:
    """Draw one inlet condition; speed is truncated at zero by resampling
    (after 100 failed tries the speed clamps to 0)."""
    angle = inlet.mean_angle + inlet.std_angle * rng.standard_normal()
    speed = inlet.mean_speed + inlet.std_speed * rng.standard_normal()
    tries = 0
    while speed < 0.0 and tries < 100:
        speed = inlet.mean_speed + inlet.std_speed * rng.standard_normal()
        tries += 1
    return InletSample(angle=float(angle), speed=float(max(speed, 0.0)))


def lookup_wind(field_set: WindFieldSet, sampled: InletSample,
                position) -> np.ndarray:
    """Constant wind at a position under the sampled inlet condition."""
    grid = field_set.nearest_grid(sampled.angle)
    scale = sampled.speed / grid.reference_speed
    return grid.interpolate(position) * scale


def make_wind_closure(field_set: WindFieldSet, sampled: InletSample):
    """Per-run closure position -> (wx, wy, wz), tuned for tight loops."""
    grid = field_set.nearest_grid(sampled.angle)
    scale = sampled.speed / grid.reference_speed
    if grid.is_uniform():
        w = tuple(grid.vectors.reshape(-1, 3)[0] * scale)
        return lambda position: w

    nx, ny, nz = grid.dims
    ox, oy, oz = grid.origin
    inv = 1.0 / grid.cell_size
    flat = (grid.vectors * scale).reshape(-1).tolist()
    sj = 3 * nz
    si = 3 * nz * ny

    def closure(position):
        x = (position[0] - ox) * inv
        y = (position[1] - oy) * inv
        z = (position[2] - oz) * inv
        x = 0.0 if x < 0.0 else (nx - 1.0 if x > nx - 1.0 else x)
        y = 0.0 if y < 0.0 else (ny - 1.0 if y > ny - 1.0 else y)
        z = 0.0 if z < 0.0 else (nz - 1.0 if z > nz - 1.0 else z)
        i = int(x)
        j = int(y)
        k = int(z)
        if i > nx - 2:
            i = nx - 2
        if j > ny - 2:
            j = ny - 2
        if k > nz - 2:
            k = nz - 2
        fx = x - i
        fy = y - j
        fz = z - k
        gx = 1.0 - fx
        gy = 1.0 - fy
        gz = 1.0 - fz
        base = i * si + j * sj + 3 * k
        w000 = gx * gy * gz
        w100 = fx * gy * gz
        w010 = gx * fy * gz
        w110 = fx * fy * gz
        w001 = gx * gy * fz
        w101 = fx * gy * fz
        w011 = gx * fy * fz
        w111 = fx * fy * fz
        b100 = base + si
        b010 = base + sj
        b110 = base + si + sj
        b001 = base + 3
        b101 = base + si + 3
        b011 = base + sj + 3
        b111 = base + si + sj + 3
        return (
            w000 * flat[base] + w100 * flat[b100] + w010 * flat[b010]
            + w110 * flat[b110] + w001 * flat[b001] + w101 * flat[b101]
            + w011 * flat[b011] + w111 * flat[b111],
            w000 * flat[base + 1] + w100 * flat[b100 + 1] + w010 * flat[b010 + 1]
            + w110 * flat[b110 + 1] + w001 * flat[b001 + 1] + w101 * flat[b101 + 1]
            + w011 * flat[b011 + 1] + w111 * flat[b111 + 1],
            w000 * flat[base + 2] + w100 * flat[b100 + 2] + w010 * flat[b010 + 2]
            + w110 * flat[b110 + 2] + w001 * flat[b001 + 2] + w101 * flat[b101 + 2]
            + w011 * flat[b011 + 2] + w111 * flat[b111 + 2],
        )

    return closure


# ---------------------------------------------------------------------------
# Dryden turbulence
# ---------------------------------------------------------------------------

def dryden_sigmas(altitude: float, w20: float) -> tuple[float, float, float]:
    """Analytic turbulence intensities (sigma_u, sigma_v, sigma_w)."""
    sigma_w = 0.1 * w20
    k = (0.177 + 0.000823 * altitude) ** 0.4
    sigma_u = sigma_w / k
    return sigma_u, sigma_u, sigma_w


def dryden_length_scales(altitude: float) -> tuple[float, float, float]:
    """Length scales (L_u, L_v, L_w) in meters."""
    lw = altitude
    lu = altitude / (0.177 + 0.000823 * altitude) ** 1.2
    return lu, lu, lw


class DrydenState:
    """Per-run forming-filter state for body-axis gust velocities.

    Axis u uses a first-order filter, axes v and w second-order ones,
    all discretized by the bilinear transform at `timestep` and driven
    by unit Gaussian noise. With zero mean wind every intensity is zero
    and the output stays identically (0, 0, 0).
    """

    __slots__ = ("altitude", "mean_wind_speed_6m", "timestep", "_quiet",
                 "_cu", "_cv", "_cw", "_mu", "_mv", "_mw")

    def __init__(self, altitude: float, mean_wind_speed_6m: float,
                 timestep: float):
        if altitude <= 0.0:
            raise InputError("altitude must be positive")
        if mean_wind_speed_6m < 0.0:
            raise InputError("mean wind speed must be non-negative")
        if timestep <= 0.0:
            raise InputError("timestep must be positive")
        self.altitude = float(altitude)
        self.mean_wind_speed_6m = float(mean_wind_speed_6m)
        self.timestep = float(timestep)
        self._quiet = mean_wind_speed_6m == 0.0
        # filter memory: u -> (u_prev, y_prev); v/w -> (u1, u2, y1, y2)
        self._mu = [0.0, 0.0]
        self._mv = [0.0, 0.0, 0.0, 0.0]
        self._mw = [0.0, 0.0, 0.0, 0.0]
        if self._quiet:
            self._cu = self._cv = self._cw = None
            return
        dt = self.timestep
        advection = self.mean_wind_speed_6m   # frozen-field advection speed
        sigma_u, sigma_v, sigma_w = dryden_sigmas(altitude, mean_wind_speed_6m)
        lu, lv, lw = dryden_length_scales(altitude)
        self._cu = self._first_order_coeffs(sigma_u, lu / advection, dt)
        self._cv = self._second_order_coeffs(sigma_v, lv / advection, dt)
        self._cw = self._second_order_coeffs(sigma_w, lw / advection, dt)

    @staticmethod
    def _first_order_coeffs(sigma, tc, dt):
        # H(s) = sigma*sqrt(2*tc)/(1 + tc*s), input scaled by 1/sqrt(dt)
        k = sigma * math.sqrt(2.0 * tc) / math.sqrt(dt)
        p = 2.0 * tc / dt
        return (k / (1.0 + p), (1.0 - p) / (1.0 + p))

    @staticmethod
    def _second_order_coeffs(sigma, tc, dt):
        # H(s) = sigma*sqrt(tc)*(1 + sqrt(3)*tc*s)/(1 + tc*s)^2
        k = sigma * math.sqrt(tc) / math.sqrt(dt)
        p = 2.0 * tc / dt
        q = 2.0 * math.sqrt(3.0) * tc / dt
        d0 = (1.0 + p) ** 2
        return (k * (1.0 + q) / d0, 2.0 * k / d0, k * (1.0 - q) / d0,
                2.0 * (1.0 - p * p) / d0, (1.0 - p) ** 2 / d0)

    def _advance(self, e0: float, e1: float, e2: float):
        b0, a1 = self._cu
        mu = self._mu
        yu = b0 * (e0 + mu[0]) - a1 * mu[1]
        mu[0] = e0
        mu[1] = yu

        out = [yu, 0.0, 0.0]
        for idx, (coeffs, mem, e) in enumerate(
                ((self._cv, self._mv, e1), (self._cw, self._mw, e2)), start=1):
            b0, b1, b2, a1, a2 = coeffs
            y = b0 * e + b1 * mem[0] + b2 * mem[1] - a1 * mem[2] - a2 * mem[3]
            mem[1] = mem[0]
            mem[0] = e
            mem[3] = mem[2]
            mem[2] = y
            out[idx] = y
        return out[0], out[1], out[2]

    def step(self, rng: np.random.Generator) -> tuple[float, float, float]:
        """Advance one timestep; returns body-axis gusts (m/s)."""
        if self._quiet:
            return (0.0, 0.0, 0.0)
        e = rng.standard_normal(3)
        return self._advance(float(e[0]), float(e[1]), float(e[2]))

    def run(self, noise: np.ndarray) -> np.ndarray:
        """Advance len(noise) steps from a pre-drawn (n, 3) noise matrix."""
        noise = np.asarray(noise, dtype=float)
        if noise.ndim != 2 or noise.shape[1] != 3:
            raise InputError("noise must be (n, 3)")
        if self._quiet:
            return np.zeros((noise.shape[0], 3))
        # same recursions as _advance with the state hoisted into locals
        b0u, a1u = self._cu
        bv0, bv1, bv2, av1, av2 = self._cv
        bw0, bw1, bw2, aw1, aw2 = self._cw
        u_p, yu_p = self._mu
        v_u1, v_u2, v_y1, v_y2 = self._mv
        w_u1, w_u2, w_y1, w_y2 = self._mw
        out = []
        append = out.append
        for e0, e1, e2 in noise.tolist():
            yu = b0u * (e0 + u_p) - a1u * yu_p
            u_p = e0
            yu_p = yu
            yv = bv0 * e1 + bv1 * v_u1 + bv2 * v_u2 - av1 * v_y1 - av2 * v_y2
            v_u2 = v_u1
            v_u1 = e1
            v_y2 = v_y1
            v_y1 = yv
            yw = bw0 * e2 + bw1 * w_u1 + bw2 * w_u2 - aw1 * w_y1 - aw2 * w_y2
            w_u2 = w_u1
            w_u1 = e2
            w_y2 = w_y1
            w_y1 = yw
            append((yu, yv, yw))
        self._mu[0] = u_p
        self._mu[1] = yu_p
        self._mv[:] = (v_u1, v_u2, v_y1, v_y2)
        self._mw[:] = (w_u1, w_u2, w_y1, w_y2)
        return np.array(out)


def dryden_step(state: DrydenState,
                rng: np.random.Generator) -> tuple[float, float, float]:
    """One body-axis turbulence sample; deterministic given the rng state."""
    return state.step(rng)


# ---------------------------------------------------------------------------
# Grid file I/O: `# origin=<x,y,z> cell=<c> dims=<nx,ny,nz> ref_angle_deg=<a>
# ref_speed=<s>` then `i,j,k,u,v,w` rows in row-major order.
# ---------------------------------------------------------------------------

GRID_CSV_HEADER = "i,j,k,u,v,w"


def write_wind_grid(grid: WindGrid, path) -> None:
    nx, ny, nz = grid.dims
    head = ("# origin={},{},{} cell={} dims={},{},{} ref_angle_deg={} "
            "ref_speed={}").format(*(fnum(c) for c in grid.origin),
                                   fnum(grid.cell_size), nx, ny, nz,
                                   fnum(grid.reference_angle),
                                   fnum(grid.reference_speed))
    lines = [head, GRID_CSV_HEADER]
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                u, v, w = grid.vectors[i, j, k]
                lines.append(f"{i},{j},{k},{fnum(u)},{fnum(v)},{fnum(w)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_wind_grid(path) -> WindGrid:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise LoadError(f"{path}: missing '# origin=... cell=... dims=...' header")
    meta = {}
    for tok in lines[0].lstrip("#").split():
        if "=" not in tok:
            raise LoadError(f"{path}: malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        meta[k] = v
    try:
        origin = tuple(float(x) for x in meta["origin"].split(","))
        cell = float(meta["cell"])
        dims = tuple(int(x) for x in meta["dims"].split(","))
        ref_angle = float(meta["ref_angle_deg"])
        ref_speed = float(meta["ref_speed"])
    except (KeyError, ValueError) as e:
        raise LoadError(f"{path}: bad header ({e})") from e
    if len(origin) != 3 or len(dims) != 3:
        raise LoadError(f"{path}: origin and dims must have 3 components")
    body = lines[1:]
    if body and body[0].replace(" ", "") == GRID_CSV_HEADER:
        body = body[1:]
    n_expected = dims[0] * dims[1] * dims[2]
    if len(body) != n_expected:
        raise LoadError(f"{path}: {len(body)} vector rows, expected {n_expected}")
    vectors = np.empty((*dims, 3))
    for row_idx, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != 6:
            raise LoadError(f"{path}: row {row_idx}: expected 6 columns")
        i, j, k = int(parts[0]), int(parts[1]), int(parts[2])
        flat = (i * dims[1] + j) * dims[2] + k
        if flat != row_idx:
            raise LoadError(f"{path}: row {row_idx}: indices out of row-major order")
        vectors[i, j, k] = [float(parts[3]), float(parts[4]), float(parts[5])]
    try:
        return WindGrid(origin=origin, cell_size=cell, dims=dims,
                        vectors=vectors, reference_angle=ref_angle,
                        reference_speed=ref_speed)
    except InputError as e:
        raise LoadError(f"{path}: {e}") from e
