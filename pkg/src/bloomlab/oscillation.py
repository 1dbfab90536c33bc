"""Local mean oscillations, medians, and sparse oscillation decompositions.

The local mean oscillation at level lam is computed exactly on the grid:
the infimum over recentering constants equals half the length of the
shortest value-interval capturing at least a (1-lam) fraction of the cube,
found by a two-pointer sweep over sorted cell values.  (The minimizing
constant is the midpoint of that interval and need not be a sample value.)

The decomposition uses a stopping-time recursion: the stopping children of
Q are the maximal dyadic P strictly inside Q whose median jumps by more
than twice the local oscillation of Q.  Carve-outs are Q minus its
stopping children.  Pointwise bounds are asserted on every grid cell
except an exceptional set whose measure is tracked against the
lam * |node| per-node allowance; the defect is always reported, never
silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicTree, SparseFamily, SparseMember, carve_greedy, tree_for_grid
from .grid import Cube, Grid, GridError, GridFunction, average, integrate

__all__ = [
    "OscillationQuery",
    "DecompositionResult",
    "AugmentResult",
    "rearrangement_value",
    "local_mean_osc",
    "median_value",
    "median_on_cube",
    "john_stromberg_upper",
    "sparse_decompose",
    "augment_family",
    "check_augmented_bound",
]


class OscillationError(GridError):
    pass


def _cube_values_vols(f: GridFunction, q: Cube) -> tuple[np.ndarray, np.ndarray]:
    grid = f.grid
    sl = grid.aligned_slices(q)
    if sl is not None:
        vals = f.samples[sl].ravel()
        return vals, np.full(vals.shape, grid.cell_volume)
    idx, vols = grid.cells_in_cube(q)
    if idx.size == 0:
        raise GridError("cube outside domain")
    return f.flat[idx], vols


def rearrangement_value(g: GridFunction, q: Cube, t: float) -> float:
    """inf{s >= 0 : |{x in Q : |g(x)| > s}| <= t}, exact by sorting."""
    if not 0 < t < q.volume:
        raise GridError(f"rearrangement level t={t} outside (0, |Q|)")
    vals, vols = _cube_values_vols(g, q)
    a = np.abs(vals)
    eps = 1e-12 * q.volume
    # measure of {|g| > s} drops only at sample values, so the infimum is
    # attained at 0 or at a sample value
    if float(vols[a > 0].sum()) <= t + eps:
        return 0.0
    for s in np.unique(a):  # ascending
        if float(vols[a > s].sum()) <= t + eps:
            return float(s)
    return float(np.max(a))


@dataclass
class OscillationQuery:
    f: GridFunction
    q: Cube
    lam: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise GridError("lambda must lie in (0,1)")
        if self.lam * self.q.volume < self.f.grid.cell_volume * (1 - 1e-12):
            raise OscillationError("lambda*|Q| below one cell volume: degenerate level")


def _shortest_window(vals: np.ndarray, vols: np.ndarray, needed: float) -> tuple[float, float]:
    """Half-length and midpoint of the shortest value interval of volume >=
    needed.  Ties between equally short windows break toward the window
    whose midpoint is closest to the median value, so symmetric data yields
    the symmetric recentering constant."""
    order = np.argsort(vals, kind="stable")
    v = vals[order]
    w = vols[order]
    prefix = np.concatenate([[0.0], np.cumsum(w)])
    total = prefix[-1]
    eps = 1e-12 * max(total, 1.0)
    if needed > total + eps:
        raise GridError("oscillation level requires more volume than the cube holds")
    anchor = float(v[(len(v) - 1) // 2])
    scale = max(1.0, float(v[-1] - v[0]))
    best = np.inf
    best_c = float(v[0])
    j = 0
    n = len(v)
    for i in range(n):
        if j < i:
            j = i
        while j < n and prefix[j + 1] - prefix[i] < needed - eps:
            j += 1
        if j >= n:
            break
        width = v[j] - v[i]
        c = 0.5 * (v[i] + v[j])
        if width < best - 1e-12 * scale or (
            width <= best + 1e-12 * scale and abs(c - anchor) < abs(best_c - anchor)
        ):
            best = width
            best_c = c
    return 0.5 * best, best_c


def local_mean_osc(query: OscillationQuery) -> tuple[float, float]:
    """Exact discrete inf over c of ((f-c)chi_Q)^*(lam|Q|); returns the
    oscillation and a minimizing c."""
    return _osc_on_cube(query.f, query.q, query.lam)


def _osc_on_cube(f: GridFunction, q: Cube, lam: float) -> tuple[float, float]:
    vals, vols = _cube_values_vols(f, q)
    needed = (1.0 - lam) * q.volume
    return _shortest_window(vals, vols, needed)


def median_value(f: GridFunction, cells: np.ndarray) -> float:
    """Smallest sample value m with max(|{f>m}|, |{f<m}|) <= |E|/2."""
    cells = np.asarray(cells, dtype=int)
    if cells.size == 0:
        raise GridError("median over empty cell set")
    vals = f.flat[cells]
    k = (len(vals) - 1) // 2
    return float(np.partition(vals, k)[k])


def median_on_cube(f: GridFunction, q: Cube) -> float:
    sl = f.grid.aligned_slices(q)
    if sl is None:
        raise GridError("median_on_cube requires a grid-aligned cube")
    vals = f.samples[sl].ravel()
    k = (len(vals) - 1) // 2
    return float(np.partition(vals, k)[k])


def john_stromberg_upper(f: GridFunction, eta, dictionary, lam: float) -> float:
    """sup over the dictionary of osc_lam(f;Q) |Q| / eta(Q); Chebyshev makes
    this at most (1/lam) * ||f||_{BMO_eta} on the same dictionary, which is
    asserted."""
    if not 0 < lam < 1:
        raise GridError("lambda must lie in (0,1)")
    sup = 0.0
    bmo = 0.0
    for q in dictionary:
        osc, _ = _osc_on_cube(f, q, lam)
        etaq = integrate(eta.fn, q)
        sup = max(sup, osc * q.volume / etaq)
        bq = average(f, q)
        bmo = max(bmo, integrate(abs(f - bq), q) / etaq)
    bound = bmo / lam
    if sup > bound + 1e-9 * max(1.0, bound):
        raise OscillationError(
            f"Chebyshev bound violated: sup={sup:.6g} > bound={bound:.6g}"
        )
    return sup


# ---------------------------------------------------------------------------
# sparse decomposition
# ---------------------------------------------------------------------------


@dataclass
class DecompositionNode:
    depth: int
    index: tuple[int, ...]
    cube: Cube
    median: float
    osc: float
    carve_cells: np.ndarray
    carve_fraction: float


@dataclass
class DecompositionResult:
    family: SparseFamily
    nodes: list[DecompositionNode]
    coefficients: dict
    root_median: float
    max_defect: float
    exceptional_measure: float
    exceptional_allowance: float
    escalations: list
    lam: float

    @property
    def ok(self) -> bool:
        return self.exceptional_measure <= self.exceptional_allowance + 1e-12

    def packing_ratio(self) -> float:
        """max over member cubes R of sum_{P subset R} |P| / |R|."""
        best = 0.0
        for m in self.family.members:
            tot = sum(
                p.cube.volume
                for p in self.family.members
                if m.cube.contains_cube(p.cube)
            )
            best = max(best, tot / m.cube.volume)
        return best

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("corner,side,coefficient,carve_fraction\n")
            for nd in self.nodes:
                corner = ";".join(repr(c) for c in nd.cube.corner)
                fh.write(f"{corner},{repr(nd.cube.side)},{repr(nd.osc)},{repr(nd.carve_fraction)}\n")


def _window_cells(grid: Grid, cube: Cube) -> np.ndarray:
    return grid.aligned_cell_indices(cube)


def sparse_decompose(
    f: GridFunction,
    root: Cube | None = None,
    lam: float | None = None,
    defect_tol: float = 1e-12,
) -> DecompositionResult:
    """Stopping-time oscillation decomposition of f on a grid-aligned root.

    Produces a 1/2-sparse family S (cubes with positive local oscillation)
    with carve-outs E_Q = Q minus stopping children, and measures the
    defect of |f - m_f(root)| <= 2 sum_{P in S} osc_lam(f;P) chi_P.
    """
    grid = f.grid
    root = root or grid.box()
    lam = lam if lam is not None else 1.0 / 2 ** (grid.dim + 2)
    tree = tree_for_grid(grid, root=root)
    if grid.aligned_slices(root) is None:
        raise GridError("decomposition root must be grid-aligned")

    median_cache: dict = {}
    scale = max(1.0, float(np.max(np.abs(f.samples))))

    def node_values(addr):
        cube = tree.cube(*addr)
        sl = grid.aligned_slices(cube)
        return f.samples[sl].ravel()

    def node_median(addr):
        if addr not in median_cache:
            vals = node_values(addr)
            k = (len(vals) - 1) // 2
            median_cache[addr] = float(np.partition(vals, k)[k])
        return median_cache[addr]

    def stopping_children(addr, med, tau):
        """Maximal strict descendants of addr whose median jumps past tau."""
        found = []
        stack = list(tree.child_indices(*addr))
        while stack:
            a = stack.pop()
            if abs(node_median(a) - med) > tau + 1e-15 * scale:
                found.append(a)
            else:
                stack.extend(tree.child_indices(*a))
        return found

    nodes: list[DecompositionNode] = []
    escalations: list = []
    total_node_volume = 0.0

    def build(addr):
        nonlocal total_node_volume
        cube = tree.cube(*addr)
        med = node_median(addr)
        osc, _ = _osc_on_cube(f, cube, lam)
        tau = 2.0 * osc
        ch = stopping_children(addr, med, tau)
        child_vol = sum(tree.cube(*a).volume for a in ch)
        frac = 1.0 - child_vol / cube.volume
        if frac < 0.5:
            tau *= 2.0
            ch = stopping_children(addr, med, tau)
            child_vol = sum(tree.cube(*a).volume for a in ch)
            frac = 1.0 - child_vol / cube.volume
            escalations.append((cube, 2.0 * osc, tau, frac))
        cells = _window_cells(grid, cube)
        if ch:
            mask = np.zeros(grid.size, dtype=bool)
            mask[cells] = True
            for a in ch:
                mask[_window_cells(grid, tree.cube(*a))] = False
            carve = np.nonzero(mask)[0]
        else:
            carve = cells
        nodes.append(
            DecompositionNode(addr[0], addr[1], cube, med, osc, carve, frac)
        )
        total_node_volume += cube.volume
        for a in ch:
            build(a)

    build((0, (0,) * grid.dim))

    members = [
        SparseMember(nd.cube, nd.carve_cells) for nd in nodes if nd.osc > 0.0
    ]
    family = SparseFamily(grid=grid, alpha=0.5, members=members)
    coefficients = {(nd.depth, nd.index): nd.osc for nd in nodes}

    root_sl = grid.aligned_slices(root)
    coverage = np.zeros(grid.shape, dtype=float)
    for nd in nodes:
        if nd.osc > 0.0:
            coverage[grid.aligned_slices(nd.cube)] += 2.0 * nd.osc
    root_med = nodes[0].median
    defect = np.abs(f.samples[root_sl] - root_med) - coverage[root_sl]
    tol = defect_tol * scale
    exceptional = float((defect > tol).sum()) * grid.cell_volume
    allowance = lam * total_node_volume
    return DecompositionResult(
        family=family,
        nodes=nodes,
        coefficients=coefficients,
        root_median=root_med,
        max_defect=float(defect.max()) if defect.size else 0.0,
        exceptional_measure=exceptional,
        exceptional_allowance=allowance,
        escalations=escalations,
        lam=lam,
    )


@dataclass
class AugmentResult:
    family: SparseFamily
    alpha_achieved: float
    added: int


def augment_family(s: SparseFamily, f: GridFunction) -> AugmentResult:
    """Extend s to a family containing it by unioning the oscillation
    decompositions rooted at each member, then re-carve greedily.  The
    achieved sparseness constant is reported (it may fall below 1/2)."""
    grid = s.grid
    keys = {(m.cube.corner, m.cube.side) for m in s.members}
    cubes = [m.cube for m in s.members]
    for m in s.members:
        res = sparse_decompose(f, root=m.cube)
        for nd in res.nodes:
            if nd.osc <= 0.0 and (nd.depth, nd.index) != (0, (0,) * grid.dim):
                continue
            key = (nd.cube.corner, nd.cube.side)
            if key not in keys:
                keys.add(key)
                cubes.append(nd.cube)
    fam = carve_greedy(grid, cubes, alpha=0.0)
    fractions = [fam.carve_fraction(m) for m in fam.members] or [1.0]
    alpha = min(fractions)
    fam.alpha = alpha
    return AugmentResult(family=fam, alpha_achieved=alpha, added=len(cubes) - len(s.members))


def check_augmented_bound(
    fam: SparseFamily, f: GridFunction, defect_tol: float = 1e-12
) -> list[dict]:
    """Per-cube check of |f - f_Q| <= 2^(dim+2) sum_{P in fam, P subset Q}
    avg(|f - f_P|, P) chi_P on the grid, with the exceptional-set convention."""
    grid = f.grid
    lam = 1.0 / 2 ** (grid.dim + 2)
    scale = max(1.0, float(np.max(np.abs(f.samples))))
    rows = []
    for m in fam.members:
        q = m.cube
        sl = grid.aligned_slices(q)
        rhs = np.zeros(grid.shape, dtype=float)
        inner_volume = 0.0
        for p in fam.members:
            if q.contains_cube(p.cube):
                coeff = average(abs(f - average(f, p.cube)), p.cube)
                rhs[grid.aligned_slices(p.cube)] += 2 ** (grid.dim + 2) * coeff
                inner_volume += p.cube.volume
        fq = average(f, q)
        defect = np.abs(f.samples[sl] - fq) - rhs[sl]
        tol = defect_tol * scale
        exceptional = float((defect > tol).sum()) * grid.cell_volume
        rows.append(
            {
                "cube": q,
                "max_defect": float(defect.max()),
                "exceptional_measure": exceptional,
                "allowance": lam * inner_volume,
                "ok": exceptional <= lam * inner_volume + 1e-12,
            }
        )
    return rows
