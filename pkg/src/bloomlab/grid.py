"""Uniform midpoint grids, axis-parallel cubes, and quadrature.

Functions are sampled at cell midpoints of a uniform grid over a box in
dimension 1 or 2.  Midpoint sampling keeps power weights |x|^a (-1 < a < 1)
away from their singularity: on a box symmetric about 0 with even N no
sample point ever equals 0.  All integrals are volume-weighted midpoint
Riemann sums; partially covered cells contribute proportionally to the
covered volume fraction, which keeps integration additive over dyadic
children of grid-aligned cubes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridError",
    "CubeOutsideDomain",
    "Cube",
    "Grid",
    "GridFunction",
    "QuadratureReport",
    "integrate",
    "average",
    "pv_integral",
]


class GridError(ValueError):
    pass


class CubeOutsideDomain(GridError):
    pass


@dataclass(frozen=True)
class Cube:
    """Axis-parallel half-open cube [corner, corner + side)^dim."""

    corner: tuple[float, ...]
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise GridError(f"cube side must be positive, got {self.side}")

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(c + 0.5 * self.side for c in self.corner)

    def dilate(self, lam: float) -> "Cube":
        """The cube with the same center and side scaled by lam."""
        c = self.center
        s = self.side * lam
        return Cube(tuple(ci - 0.5 * s for ci in c), s)

    def contains_point(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return all(
            self.corner[a] <= x[a] < self.corner[a] + self.side
            for a in range(self.dim)
        )

    def contains_cube(self, other: "Cube", tol: float = 1e-12) -> bool:
        eps = tol * max(1.0, self.side)
        return all(
            other.corner[a] >= self.corner[a] - eps
            and other.corner[a] + other.side <= self.corner[a] + self.side + eps
            for a in range(self.dim)
        )


@dataclass(eq=True)
class Grid:
    """Geometry of a uniform midpoint grid: N^dim cells over a box."""

    dim: int
    corner: tuple[float, ...]
    side: float
    n: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError("only dimensions 1 and 2 are supported")
        if len(self.corner) != self.dim:
            raise GridError("corner length must match dim")
        if self.n < 1:
            raise GridError("resolution must be at least 1")
        if not self.side > 0:
            raise GridError("box side must be positive")

    @property
    def h(self) -> float:
        return self.side / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    def box(self) -> Cube:
        return Cube(self.corner, self.side)

    def axis_midpoints(self, axis: int) -> np.ndarray:
        key = ("mid", axis)
        if key not in self._cache:
            h = self.h
            self._cache[key] = self.corner[axis] + (np.arange(self.n) + 0.5) * h
        return self._cache[key]

    def points_flat(self) -> np.ndarray:
        """All sample points as an (N^dim, dim) array, row-major order."""
        if "pts" not in self._cache:
            if self.dim == 1:
                pts = self.axis_midpoints(0)[:, None]
            else:
                x = self.axis_midpoints(0)
                y = self.axis_midpoints(1)
                xx, yy = np.meshgrid(x, y, indexing="ij")
                pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
            self._cache["pts"] = pts
        return self._cache["pts"]

    def locate_sample(self, x) -> tuple[int, ...]:
        """Index of the sample point at x; error if x is not a sample point."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise GridError(f"point has wrong dimension for grid: {x}")
        h = self.h
        idx = []
        for a in range(self.dim):
            i = int(round((x[a] - self.corner[a]) / h - 0.5))
            if i < 0 or i >= self.n:
                raise GridError(f"point {tuple(x)} outside grid")
            if abs(self.corner[a] + (i + 0.5) * h - x[a]) > 1e-9 * h:
                raise GridError(f"point {tuple(x)} is not a sample point")
            idx.append(i)
        return tuple(idx)

    def flat_index(self, idx: tuple[int, ...]) -> int:
        if self.dim == 1:
            return idx[0]
        return idx[0] * self.n + idx[1]

    def aligned_slices(self, cube: Cube) -> tuple[slice, ...] | None:
        """Slices of grid cells exactly tiling cube, or None if not aligned
        or not fully inside the box."""
        h = self.h
        out = []
        for a in range(self.dim):
            t0 = (cube.corner[a] - self.corner[a]) / h
            t1 = t0 + cube.side / h
            i0, i1 = round(t0), round(t1)
            tol = 1e-9 * max(1.0, abs(t0), abs(t1))
            if abs(t0 - i0) > tol or abs(t1 - i1) > tol:
                return None
            if i0 < 0 or i1 > self.n or i0 >= i1:
                return None
            out.append(slice(int(i0), int(i1)))
        return tuple(out)

    def coverage_fractions(self, cube: Cube) -> list[np.ndarray]:
        """Per-axis arrays of the fraction of each cell covered by cube."""
        h = self.h
        fracs = []
        for a in range(self.dim):
            lo = cube.corner[a]
            hi = cube.corner[a] + cube.side
            edges = self.corner[a] + np.arange(self.n + 1) * h
            left = np.maximum(edges[:-1], lo)
            right = np.minimum(edges[1:], hi)
            fracs.append(np.clip((right - left) / h, 0.0, 1.0))
        return fracs

    def cells_in_cube(self, cube: Cube) -> tuple[np.ndarray, np.ndarray]:
        """Flat indices and covered volumes of all cells meeting cube."""
        fr = self.coverage_fractions(cube)
        if self.dim == 1:
            mask = fr[0] > 0
            idx = np.nonzero(mask)[0]
            vols = fr[0][idx] * self.cell_volume
        else:
            w = np.outer(fr[0], fr[1])
            idx = np.nonzero(w.ravel() > 0)[0]
            vols = w.ravel()[idx] * self.cell_volume
        return idx, vols

    def aligned_cell_indices(self, cube: Cube) -> np.ndarray:
        """Flat indices of the cells tiling a grid-aligned cube."""
        sl = self.aligned_slices(cube)
        if sl is None:
            raise GridError(f"cube {cube} is not grid-aligned")
        if self.dim == 1:
            return np.arange(sl[0].start, sl[0].stop)
        rows = np.arange(sl[0].start, sl[0].stop)
        cols = np.arange(sl[1].start, sl[1].stop)
        return (rows[:, None] * self.n + cols[None, :]).ravel()


@dataclass
class GridFunction:
    """Real function sampled at the cell midpoints of a Grid."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != self.grid.shape:
            raise GridError(
                f"samples shape {self.samples.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise GridError("all samples must be finite")

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        if grid.dim == 1:
            vals = np.asarray(fn(grid.axis_midpoints(0)), dtype=float)
            vals = np.broadcast_to(vals, grid.shape).copy()
        else:
            x = grid.axis_midpoints(0)
            y = grid.axis_midpoints(1)
            xx, yy = np.meshgrid(x, y, indexing="ij")
            vals = np.asarray(fn(xx, yy), dtype=float)
            vals = np.broadcast_to(vals, grid.shape).copy()
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    @property
    def flat(self) -> np.ndarray:
        return self.samples.ravel()

    def compatible(self, other: "GridFunction") -> bool:
        g, o = self.grid, other.grid
        return (g.dim, g.corner, g.side, g.n) == (o.dim, o.corner, o.side, o.n)

    def _check(self, other):
        if not self.compatible(other):
            raise GridError("grid functions are not arithmetic-compatible")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.samples + other.samples)
        return GridFunction(self.grid, self.samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.samples - other.samples)
        return GridFunction(self.grid, self.samples - other)

    def __rsub__(self, other):
        return GridFunction(self.grid, other - self.samples)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.samples * other.samples)
        return GridFunction(self.grid, self.samples * other)

    __rmul__ = __mul__

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.samples))

    def __neg__(self):
        return GridFunction(self.grid, -self.samples)

    def power(self, e: float) -> "GridFunction":
        return GridFunction(self.grid, self.samples ** e)

    def save(self, path) -> None:
        """Text format: header `dim N corner... side`, then samples row-major."""
        with open(path, "w") as fh:
            corner = " ".join(repr(c) for c in self.grid.corner)
            fh.write(f"{self.grid.dim} {self.grid.n} {corner} {repr(self.grid.side)}\n")
            for v in self.flat:
                fh.write(repr(float(v)) + "\n")

    @classmethod
    def load(cls, path) -> "GridFunction":
        with open(path) as fh:
            head = fh.readline().split()
            dim = int(head[0])
            n = int(head[1])
            corner = tuple(float(t) for t in head[2 : 2 + dim])
            side = float(head[2 + dim])
            vals = np.array([float(t) for t in fh.read().split()], dtype=float)
        grid = Grid(dim, corner, side, n)
        if vals.size != grid.size:
            raise GridError(f"expected {grid.size} samples, found {vals.size}")
        return cls(grid, vals.reshape(grid.shape))


@dataclass
class QuadratureReport:
    value: float
    cells_used: int
    cells_excluded: int


def integrate(f: GridFunction, cube: Cube) -> float:
    """Volume-weighted midpoint sum of f over cube intersected with f's box."""
    grid = f.grid
    if cube.dim != grid.dim:
        raise GridError("cube dimension does not match grid")
    sl = grid.aligned_slices(cube)
    if sl is not None:
        return float(f.samples[sl].sum()) * grid.cell_volume
    fr = grid.coverage_fractions(cube)
    covered = math.prod(float(fx.sum()) for fx in fr)
    if covered <= 0.0:
        raise CubeOutsideDomain("cube outside domain")
    if grid.dim == 1:
        return float(np.dot(fr[0], f.samples)) * grid.cell_volume
    return float(fr[0] @ f.samples @ fr[1]) * grid.cell_volume


def average(f: GridFunction, cube: Cube) -> float:
    """integrate(f, cube) / |cube|."""
    return integrate(f, cube) / cube.volume


def pv_integral(kernel, f: GridFunction, x) -> QuadratureReport:
    """Truncated principal-value sum  sum_{|x-y| >= trunc} K(x,y) f(y) vol.

    `kernel` must expose `truncation_cells` and
    `values_for_offsets(offsets, dists)` returning K(x, x - offsets)...
    i.e. pointwise kernel values for the given x - y offsets.
    x must be a sample point of f's grid.
    """
    grid = f.grid
    idx = grid.locate_sample(x)
    xpt = np.array([grid.axis_midpoints(a)[idx[a]] for a in range(grid.dim)])
    trunc = kernel.truncation_cells * grid.h
    if trunc < grid.h * math.sqrt(grid.dim) * (1.0 - 1e-12):
        raise GridError("kernel truncation radius below one cell diameter")
    offsets = xpt[None, :] - grid.points_flat()
    dists = np.sqrt((offsets ** 2).sum(axis=1)) if grid.dim == 2 else np.abs(offsets[:, 0])
    mask = dists >= trunc * (1.0 - 1e-12)
    used = int(mask.sum())
    vals = kernel.values_for_offsets(offsets[mask], dists[mask])
    if np.any(np.isnan(vals)):
        raise GridError("kernel evaluation produced NaN")
    value = float(np.dot(vals, f.flat[mask])) * grid.cell_volume
    return QuadratureReport(value=value, cells_used=used, cells_excluded=grid.size - used)
