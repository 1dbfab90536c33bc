"""Dyadic trees, shifted lattices, and sparse families with explicit carve-outs.

Measurable sets are represented as unions of grid cells, so measures,
inclusion, and pairwise disjointness are checked cell-exactly.  Cube
geometry inside a tree is always recomputed from (depth, index) with the
same arithmetic, which makes parent/child corners bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Cube, Grid, GridError

__all__ = [
    "DyadicTree",
    "SparseFamily",
    "SparseMember",
    "SparseCheck",
    "CarveError",
    "children",
    "verify_sparse",
    "carve_greedy",
    "shifted_lattices",
    "save_sparse_family",
    "load_sparse_family",
]


def children(cube: Cube) -> list[Cube]:
    """The 2^dim congruent half-side subcubes partitioning cube."""
    half = cube.side / 2.0
    out = []
    if cube.dim == 1:
        offsets = [(0,), (1,)]
    else:
        offsets = [(0, 0), (0, 1), (1, 0), (1, 1)]
    for off in offsets:
        corner = tuple(cube.corner[a] + off[a] * half for a in range(cube.dim))
        out.append(Cube(corner, half))
    return out


@dataclass
class DyadicTree:
    """All dyadic descendants of a root cube down to max_depth."""

    root: Cube
    max_depth: int

    def __post_init__(self):
        if self.max_depth < 0:
            raise GridError("max_depth must be nonnegative")

    @property
    def dim(self) -> int:
        return self.root.dim

    def cube(self, depth: int, index: tuple[int, ...]) -> Cube:
        if depth < 0 or depth > self.max_depth:
            raise GridError(f"depth {depth} outside tree")
        k = 1 << depth
        side = self.root.side / k
        corner = tuple(
            self.root.corner[a] + self.root.side * (index[a] / k)
            for a in range(self.dim)
        )
        return Cube(corner, side)

    def parent(self, depth: int, index: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
        if depth == 0:
            raise GridError("root has no parent")
        return depth - 1, tuple(i // 2 for i in index)

    def child_indices(self, depth: int, index: tuple[int, ...]):
        if depth >= self.max_depth:
            return []
        if self.dim == 1:
            return [(depth + 1, (2 * index[0],)), (depth + 1, (2 * index[0] + 1,))]
        out = []
        for dx in (0, 1):
            for dy in (0, 1):
                out.append((depth + 1, (2 * index[0] + dx, 2 * index[1] + dy)))
        return out

    def all_addresses(self, max_depth: int | None = None):
        """(depth, index) of every cube down to max_depth, shallow first."""
        d_top = self.max_depth if max_depth is None else min(max_depth, self.max_depth)
        for d in range(d_top + 1):
            k = 1 << d
            if self.dim == 1:
                for i in range(k):
                    yield d, (i,)
            else:
                for i in range(k):
                    for j in range(k):
                        yield d, (i, j)

    def all_cubes(self, max_depth: int | None = None) -> list[Cube]:
        return [self.cube(d, ix) for d, ix in self.all_addresses(max_depth)]


def tree_for_grid(grid: Grid, root: Cube | None = None, max_depth: int | None = None) -> DyadicTree:
    """Dyadic tree whose leaves are single grid cells (cubes below grid
    resolution are forbidden)."""
    root = root or grid.box()
    cells_per_side = root.side / grid.h
    depth_cap = 0
    while depth_cap < 60:
        per = cells_per_side / (1 << (depth_cap + 1))
        if per < 1.0 - 1e-9 or abs(per - round(per)) > 1e-9:
            break
        depth_cap += 1
    depth = depth_cap if max_depth is None else min(max_depth, depth_cap)
    return DyadicTree(root, depth)


def shifted_lattices(grid: Grid, max_depth: int | None = None) -> list[DyadicTree]:
    """The full-box tree plus 3^dim shifted square copies of a 3/4-side
    root jointly covering the box.

    The shifts are an eighth of the side per axis, so any small interior
    cube has a containing dyadic cube with margin in at least one lattice;
    the full-box tree guarantees a global covering cube.
    """
    shifts = [0.0, 0.125, 0.25]
    trees = [tree_for_grid(grid, max_depth=max_depth)]
    if grid.dim == 1:
        combos = [(s,) for s in shifts]
    else:
        combos = [(s, t) for s in shifts for t in shifts]
    for combo in combos:
        corner = tuple(
            grid.corner[a] + combo[a] * grid.side for a in range(grid.dim)
        )
        root = Cube(corner, grid.side * 0.75)
        trees.append(tree_for_grid(grid, root=root, max_depth=max_depth))
    return trees


@dataclass
class SparseMember:
    cube: Cube
    carve_cells: np.ndarray  # flat grid cell indices of E_Q


@dataclass
class SparseFamily:
    """Cubes with pairwise disjoint carve-out sets E_Q, |E_Q| >= alpha |Q|."""

    grid: Grid
    alpha: float
    members: list[SparseMember] = field(default_factory=list)

    @property
    def cubes(self) -> list[Cube]:
        return [m.cube for m in self.members]

    def carve_fraction(self, member: SparseMember) -> float:
        return len(member.carve_cells) * self.grid.cell_volume / member.cube.volume


@dataclass
class SparseCheck:
    ok: bool
    message: str = ""


def verify_sparse(fam: SparseFamily) -> SparseCheck:
    """Cell-exact check of E_Q subset Q, |E_Q| >= alpha|Q|, pairwise disjoint."""
    grid = fam.grid
    seen = np.zeros(grid.size, dtype=bool)
    for k, m in enumerate(fam.members):
        try:
            inside = grid.aligned_cell_indices(m.cube)
        except GridError:
            return SparseCheck(False, f"cube #{k} {m.cube} not grid-aligned")
        inside_set = np.zeros(grid.size, dtype=bool)
        inside_set[inside] = True
        if not np.all(inside_set[m.carve_cells]):
            return SparseCheck(False, f"carve-out of cube #{k} {m.cube} escapes the cube")
        vol = len(m.carve_cells) * grid.cell_volume
        if vol < fam.alpha * m.cube.volume * (1.0 - 1e-12):
            return SparseCheck(
                False,
                f"cube #{k} {m.cube}: |E_Q|={vol:.6g} < alpha|Q|={fam.alpha * m.cube.volume:.6g}",
            )
        if np.any(seen[m.carve_cells]):
            return SparseCheck(False, f"carve-out of cube #{k} {m.cube} overlaps an earlier one")
        seen[m.carve_cells] = True
    return SparseCheck(True, "ok")


class CarveError(GridError):
    pass


def carve_greedy(grid: Grid, cubes: list[Cube], alpha: float) -> SparseFamily:
    """Assign carve-outs greedily, deepest cube first: each cube keeps the
    cells of Q not yet claimed.  Raises CarveError naming the first cube
    that cannot retain an alpha fraction."""
    order = sorted(range(len(cubes)), key=lambda k: (cubes[k].side, cubes[k].corner))
    claimed = np.zeros(grid.size, dtype=bool)
    carved: dict[int, np.ndarray] = {}
    for k in order:
        q = cubes[k]
        inside = grid.aligned_cell_indices(q)
        free = inside[~claimed[inside]]
        if len(free) * grid.cell_volume < alpha * q.volume * (1.0 - 1e-12):
            raise CarveError(f"cannot carve alpha={alpha} fraction for cube {q}")
        claimed[free] = True
        carved[k] = free
    members = [SparseMember(cubes[k], carved[k]) for k in range(len(cubes))]
    return SparseFamily(grid=grid, alpha=alpha, members=members)


def save_sparse_family(fam: SparseFamily, path) -> None:
    """One header line with the grid, then one line per cube:
    `corner... side alpha  i1 i2 ...` with the cell indices of E_Q."""
    g = fam.grid
    with open(path, "w") as fh:
        corner = " ".join(repr(c) for c in g.corner)
        fh.write(f"{g.dim} {g.n} {corner} {repr(g.side)}\n")
        for m in fam.members:
            cc = " ".join(repr(c) for c in m.cube.corner)
            cells = " ".join(str(int(i)) for i in m.carve_cells)
            fh.write(f"{cc} {repr(m.cube.side)} {repr(fam.alpha)} {cells}\n")


def load_sparse_family(path) -> SparseFamily:
    with open(path) as fh:
        head = fh.readline().split()
        dim = int(head[0])
        n = int(head[1])
        corner = tuple(float(t) for t in head[2 : 2 + dim])
        side = float(head[2 + dim])
        grid = Grid(dim, corner, side, n)
        members = []
        alpha = 0.0
        for line in fh:
            tok = line.split()
            if not tok:
                continue
            cc = tuple(float(t) for t in tok[:dim])
            cside = float(tok[dim])
            alpha = float(tok[dim + 1])
            cells = np.array([int(t) for t in tok[dim + 2 :]], dtype=int)
            members.append(SparseMember(Cube(cc, cside), cells))
    return SparseFamily(grid=grid, alpha=alpha, members=members)
