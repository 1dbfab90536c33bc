import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bloomlab.dyadic import (
    CarveError,
    SparseFamily,
    SparseMember,
    carve_greedy,
    children,
    load_sparse_family,
    save_sparse_family,
    shifted_lattices,
    tree_for_grid,
    verify_sparse,
)
from bloomlab.grid import Cube, Grid


def test_children_unit_interval():
    kids = children(Cube((0.0,), 1.0))
    assert [(c.corner, c.side) for c in kids] == [((0.0,), 0.5), ((0.5,), 0.5)]


def test_children_unit_square():
    kids = children(Cube((0.0, 0.0), 1.0))
    assert len(kids) == 4
    assert all(c.side == 0.5 for c in kids)
    assert {c.corner for c in kids} == {(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)}


def test_children_side_three():
    kids = children(Cube((1.0,), 3.0))
    assert [(c.corner, c.side) for c in kids] == [((1.0,), 1.5), ((2.5,), 1.5)]


def test_children_partition_parent():
    q = Cube((0.3, -0.7), 0.8)
    kids = children(q)
    assert sum(c.volume for c in kids) == pytest.approx(q.volume, rel=1e-15)


def test_parent_child_round_trip_bit_exact():
    tree = tree_for_grid(Grid(1, (-1.0,), 2.0, 256))
    for depth in range(1, tree.max_depth + 1):
        for _, (d, ix) in zip(range(10), tree.all_addresses(depth)):
            if d == 0:
                continue
            pd, pix = tree.parent(d, ix)
            parent = tree.cube(pd, pix)
            child = tree.cube(d, ix)
            lo = tree.child_indices(pd, pix)
            assert (d, ix) in lo
            # child corners recomputed from the parent agree bitwise
            assert any(tree.cube(*a).corner == child.corner for a in lo)
            assert parent.contains_cube(child)


def test_verify_sparse_empty_ok():
    g = Grid(1, (0.0,), 1.0, 64)
    assert verify_sparse(SparseFamily(grid=g, alpha=0.5)).ok


def test_verify_sparse_single_half_carve():
    g = Grid(1, (0.0,), 1.0, 64)
    fam = SparseFamily(
        grid=g, alpha=0.5,
        members=[SparseMember(Cube((0.0,), 1.0), np.arange(32))],
    )
    assert verify_sparse(fam).ok


def test_verify_sparse_detects_overlap():
    g = Grid(1, (0.0,), 1.0, 64)
    fam = SparseFamily(
        grid=g, alpha=0.5,
        members=[
            SparseMember(Cube((0.0,), 1.0), np.arange(0, 32)),
            SparseMember(Cube((0.0,), 0.5), np.arange(0, 16)),
        ],
    )
    report = verify_sparse(fam)
    assert not report.ok
    assert "overlap" in report.message


def test_verify_sparse_detects_small_carve():
    g = Grid(1, (0.0,), 1.0, 64)
    fam = SparseFamily(
        grid=g, alpha=0.5,
        members=[SparseMember(Cube((0.0,), 1.0), np.arange(4))],
    )
    assert not verify_sparse(fam).ok


def test_carve_greedy_nested_chain():
    g = Grid(1, (0.0,), 1.0, 256)
    cubes = [Cube((0.0,), 1.0), Cube((0.0,), 0.5), Cube((0.0,), 0.25)]
    fam = carve_greedy(g, cubes, 0.5)
    got = {m.cube.side: sorted(m.carve_cells) for m in fam.members}
    # deepest keeps [0,1/4), middle keeps [1/4,1/2), root keeps [1/2,1)
    assert got[0.25] == list(range(0, 64))
    assert got[0.5] == list(range(64, 128))
    assert got[1.0] == list(range(128, 256))
    assert verify_sparse(fam).ok


def test_carve_greedy_single_cube_high_alpha():
    g = Grid(1, (0.0,), 1.0, 64)
    fam = carve_greedy(g, [Cube((0.25,), 0.5)], 0.99)
    assert len(fam.members[0].carve_cells) == 32  # E_Q = Q


def test_carve_greedy_three_copies_fail():
    g = Grid(1, (0.0,), 1.0, 64)
    with pytest.raises(CarveError):
        carve_greedy(g, [Cube((0.0,), 0.5)] * 3, 0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_carleson_packing_random_families(seed):
    # disjoint carve-outs force sum_{Q in S, Q subset R} |Q| <= |R| / alpha
    g = Grid(1, (0.0,), 1.0, 256)
    tree = tree_for_grid(g, max_depth=5)
    rng = np.random.default_rng(seed)
    pool = list(tree.all_addresses(5))
    picks = rng.choice(len(pool), size=min(20, len(pool)), replace=False)
    cubes = [tree.cube(*pool[i]) for i in picks]
    try:
        fam = carve_greedy(g, cubes, 0.5)
    except CarveError:
        return
    assert verify_sparse(fam).ok
    for root in fam.cubes:
        inner = sum(c.volume for c in fam.cubes if root.contains_cube(c))
        assert inner <= root.volume / fam.alpha * (1.0 + 1e-12)


def test_sparse_family_round_trip(tmp_path):
    g = Grid(1, (-1.0,), 2.0, 128)
    cubes = [Cube((-1.0,), 2.0), Cube((0.0,), 0.5), Cube((-0.5,), 0.5)]
    fam = carve_greedy(g, cubes, 0.25)
    path = tmp_path / "fam.txt"
    save_sparse_family(fam, path)
    back = load_sparse_family(path)
    assert back.grid == fam.grid
    assert back.alpha == fam.alpha
    assert len(back.members) == len(fam.members)
    for a, b in zip(back.members, fam.members):
        assert a.cube == b.cube
        assert np.array_equal(a.carve_cells, b.carve_cells)
    assert verify_sparse(back).ok


def test_shifted_lattices_cover_and_align():
    g = Grid(2, (-8.0, -8.0), 16.0, 96)
    trees = shifted_lattices(g)
    assert len(trees) == 1 + 9
    box = g.box()
    covered = np.zeros(g.size, dtype=bool)
    for t in trees:
        assert box.contains_cube(t.root)
        covered[g.aligned_cell_indices(t.root)] = True
    assert covered.all()


def test_shifted_lattices_dim1_count():
    g = Grid(1, (0.0,), 1.0, 512)
    assert len(shifted_lattices(g)) == 1 + 3


def test_tree_forbids_subcell_depth():
    g = Grid(1, (0.0,), 1.0, 64)
    tree = tree_for_grid(g)
    assert tree.max_depth == 6  # leaves are single cells
