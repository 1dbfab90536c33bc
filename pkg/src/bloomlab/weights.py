"""Weights, A_p constants over cube dictionaries, A_infinity diagnostics,
weighted BMO norms, and Bloom setups nu = (mu/lambda)^(1/p), eta = nu^(1/m).

Suprema over "all cubes" are approximated by a CubeDictionary: the dyadic
cubes of a tree plus origin-anchored (0,h)-type and origin-centered
(-h,h)-type cubes over a geometric ladder.  For power weights the
extremizers concentrate at the singularity, hence the origin families.
All reported constants are dictionary-restricted lower bounds of the true
suprema; the dictionary gap is reported, not bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import tree_for_grid
from .grid import Cube, Grid, GridError, GridFunction, average, integrate

__all__ = [
    "Weight",
    "CubeDictionary",
    "BloomSetup",
    "build_cube_dictionary",
    "ap_constant",
    "bmo_eta_norm",
    "doubling_constant",
    "level_set_gamma",
    "reverse_jensen",
    "density_beta",
]


@dataclass
class Weight:
    """Strictly positive grid function, optionally tagged with the symbolic
    family it was sampled from (used only for closed-form cross-checks)."""

    fn: GridFunction
    tag: tuple | None = None

    def __post_init__(self):
        if np.any(self.fn.samples <= 0):
            raise GridError("weight samples must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.fn.grid

    @property
    def samples(self) -> np.ndarray:
        return self.fn.samples

    def power(self, e: float) -> "Weight":
        tag = ("power", self.tag[1] * e) if self.tag and self.tag[0] == "power" else None
        return Weight(self.fn.power(e), tag)

    @classmethod
    def const(cls, grid: Grid, c: float = 1.0) -> "Weight":
        return cls(GridFunction.constant(grid, c), ("const", c))

    @classmethod
    def power_weight(cls, grid: Grid, a: float) -> "Weight":
        """w(x) = |x|^a; midpoint sampling keeps |x| > 0 on sane boxes."""
        if grid.dim == 1:
            fn = GridFunction.from_callable(grid, lambda x: np.abs(x) ** a)
        else:
            fn = GridFunction.from_callable(grid, lambda x, y: (x * x + y * y) ** (a / 2.0))
        return cls(fn, ("power", a))

    @classmethod
    def twolevel(cls, grid: Grid, h: float) -> "Weight":
        """w = 1 + indicator of the corner block [corner, corner+h)^dim."""
        c = grid.corner
        if grid.dim == 1:
            fn = GridFunction.from_callable(grid, lambda x: 1.0 + ((x >= c[0]) & (x < c[0] + h)))
        else:
            fn = GridFunction.from_callable(
                grid,
                lambda x, y: 1.0 + ((x >= c[0]) & (x < c[0] + h) & (y >= c[1]) & (y < c[1] + h)),
            )
        return cls(fn, ("twolevel", h))

    @classmethod
    def from_spec(cls, grid: Grid, spec: str) -> "Weight":
        """Parse `power:a`, `const:c`, `twolevel:h`, or a file path."""
        if spec.startswith("power:"):
            return cls.power_weight(grid, float(spec.split(":", 1)[1]))
        if spec.startswith("const:"):
            return cls.const(grid, float(spec.split(":", 1)[1]))
        if spec.startswith("twolevel:"):
            return cls.twolevel(grid, float(spec.split(":", 1)[1]))
        return cls(GridFunction.load(spec))


@dataclass
class CubeDictionary:
    """Finite cube family standing in for `sup over all cubes`."""

    cubes: list[Cube] = field(default_factory=list)

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)


def build_cube_dictionary(
    grid: Grid,
    tree_depth: int | None = None,
    ladder_ratio: float = 2 ** 0.5,
    min_cells: int = 4,
    anchored: bool = True,
    centered: bool = True,
) -> CubeDictionary:
    cubes: list[Cube] = []
    tree = tree_for_grid(grid, max_depth=tree_depth)
    cubes.extend(tree.all_cubes())
    box = grid.box()

    def origin_ok():
        return all(
            grid.corner[a] <= 0.0 <= grid.corner[a] + grid.side for a in range(grid.dim)
        )

    if (anchored or centered) and origin_ok():
        h = grid.side
        hmin = min_cells * grid.h
        while h >= hmin:
            if anchored:
                q = Cube((0.0,) * grid.dim, h)
                if box.contains_cube(q):
                    cubes.append(q)
            if centered:
                q = Cube((-h,) * grid.dim, 2 * h)
                if box.contains_cube(q):
                    cubes.append(q)
            h /= ladder_ratio
    return CubeDictionary(cubes)


def ap_constant(w: Weight, p: float, dictionary: CubeDictionary) -> float:
    """Dictionary sup of avg(w,Q) * avg(w^{-1/(p-1)},Q)^{p-1}."""
    if not p > 1:
        raise GridError("A_p requires p > 1")
    sigma = w.fn.power(-1.0 / (p - 1.0))
    best = 0.0
    for q in dictionary:
        val = average(w.fn, q) * average(sigma, q) ** (p - 1.0)
        if val > best:
            best = val
    return best


def bmo_eta_norm(b: GridFunction, eta: Weight, dictionary: CubeDictionary) -> float:
    """Dictionary sup of (1/eta(Q)) * int_Q |b - b_Q|."""
    best = 0.0
    for q in dictionary:
        bq = average(b, q)
        osc = integrate(abs(b - bq), q)
        denom = integrate(eta.fn, q)
        val = osc / denom
        if val > best:
            best = val
    return best


def doubling_constant(w: Weight, factor: float, dictionary: CubeDictionary) -> float:
    """Max of w(factor*Q)/w(Q) over dictionary cubes whose dilation stays
    inside the domain box."""
    if not factor > 1:
        raise GridError("doubling factor must exceed 1")
    box = w.grid.box()
    best = None
    for q in dictionary:
        big = q.dilate(factor)
        if not box.contains_cube(big):
            continue
        val = integrate(w.fn, big) / integrate(w.fn, q)
        if best is None or val > best:
            best = val
    if best is None:
        raise GridError("no dictionary cube survives dilation clipping")
    return best


def _cube_values_vols(w: Weight, q: Cube) -> tuple[np.ndarray, np.ndarray]:
    grid = w.grid
    sl = grid.aligned_slices(q)
    if sl is not None:
        vals = w.samples[sl].ravel()
        return vals, np.full(vals.shape, grid.cell_volume)
    idx, vols = grid.cells_in_cube(q)
    return w.fn.flat[idx], vols


def level_set_gamma(w: Weight, dictionary: CubeDictionary) -> float:
    """Largest gamma (over sample-value thresholds) such that for every
    dictionary cube a strict majority of Q satisfies w >= gamma * w_Q."""
    best = None
    for q in dictionary:
        vals, vols = _cube_values_vols(w, q)
        total = vols.sum()
        wq = float(np.dot(vals, vols)) / total
        order = np.argsort(vals)[::-1]
        sv, svol = vals[order], vols[order]
        # measure of {w >= t} for t running over the sorted unique values
        uniq, start = np.unique(-sv, return_index=True)
        cum = np.cumsum(svol)
        gamma_q = None
        for u, s in zip(-uniq, start):
            # last index with value == u
            end = np.searchsorted(-sv, -u, side="right") - 1
            meas = cum[end]
            if meas > 0.5 * total * (1.0 + 1e-12):
                gamma_q = u / wq
                break
        if gamma_q is None:
            gamma_q = sv[-1] / wq
        if best is None or gamma_q < best:
            best = gamma_q
    if best is None:
        raise GridError("empty dictionary")
    return best


def reverse_jensen(w: Weight, delta: float, dictionary: CubeDictionary) -> float:
    """Dictionary sup of avg(w,Q) / avg(w^delta,Q)^(1/delta).

    The level-set property bounds this by 2^(1/delta)/gamma; callers check
    that against level_set_gamma.
    """
    if not 0 < delta < 1:
        raise GridError("delta must lie in (0,1)")
    wd = w.fn.power(delta)
    best = 0.0
    for q in dictionary:
        val = average(w.fn, q) / average(wd, q) ** (1.0 / delta)
        if val > best:
            best = val
    return best


def density_beta(
    w: Weight, alpha: float, q: Cube, trials: int = 0, rng: np.random.Generator | None = None
) -> float:
    """Empirical beta: min over sampled cell subsets E of Q with
    |E| >= alpha|Q| of w(E)/w(Q).  The adversarial subset takes cells of
    smallest w; optional random subsets can only confirm it."""
    if not 0 < alpha <= 1:
        raise GridError("alpha must lie in (0,1]")
    vals, vols = _cube_values_vols(w, q)
    total_w = float(np.dot(vals, vols))
    target = alpha * q.volume

    def subset_ratio(order: np.ndarray) -> float:
        cum = np.cumsum(vols[order])
        k = int(np.searchsorted(cum, target * (1.0 - 1e-12))) + 1
        k = min(k, len(order))
        chosen = order[:k]
        return float(np.dot(vals[chosen], vols[chosen])) / total_w

    best = subset_ratio(np.argsort(vals, kind="stable"))
    if trials > 0:
        rng = rng or np.random.default_rng(0)
        for _ in range(trials):
            best = min(best, subset_ratio(rng.permutation(len(vals))))
    return best


@dataclass
class BloomSetup:
    """Two A_p weights with the mediating weight nu = (mu/lam)^(1/p) and
    its m-th root eta = nu^(1/m)."""

    mu: Weight
    lam: Weight
    p: float
    m: int
    nu: Weight = field(init=False)
    eta: Weight = field(init=False)

    def __post_init__(self):
        if not self.p > 1:
            raise GridError("p must exceed 1")
        if self.m < 1:
            raise GridError("m must be a positive integer")
        ratio = self.mu.samples / self.lam.samples
        self.nu = Weight(GridFunction(self.mu.grid, ratio ** (1.0 / self.p)))
        self.eta = self.nu.power(1.0 / self.m)
        err = np.max(
            np.abs(self.eta.samples ** self.m - self.nu.samples)
            / np.maximum(np.abs(self.nu.samples), 1e-300)
        )
        if err > 1e-12:
            raise GridError(f"eta^m deviates from nu by relative {err:.3g}")
