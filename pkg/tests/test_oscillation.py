import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bloomlab.dyadic import SparseFamily, SparseMember, verify_sparse
from bloomlab.grid import Cube, Grid, GridError, GridFunction
from bloomlab.oscillation import (
    OscillationQuery,
    augment_family,
    check_augmented_bound,
    john_stromberg_upper,
    local_mean_osc,
    median_value,
    rearrangement_value,
    sparse_decompose,
)
from bloomlab.weights import CubeDictionary, Weight, bmo_eta_norm, build_cube_dictionary


def unit_grid(n=1024):
    return Grid(1, (0.0,), 1.0, n)


def indicator_half(g):
    return GridFunction.from_callable(g, lambda x: (x < 0.5).astype(float))


# -- rearrangement ----------------------------------------------------------


def test_rearrangement_constant():
    g = unit_grid(64)
    f = GridFunction.constant(g, -2.5)
    assert rearrangement_value(f, Cube((0.0,), 1.0), 0.3) == pytest.approx(2.5)


def test_rearrangement_indicator_quarter():
    g = unit_grid()
    assert rearrangement_value(indicator_half(g), Cube((0.0,), 1.0), 0.25) == 1.0


def test_rearrangement_indicator_three_quarters():
    g = unit_grid()
    assert rearrangement_value(indicator_half(g), Cube((0.0,), 1.0), 0.75) == 0.0


def test_rearrangement_rejects_bad_level():
    g = unit_grid(64)
    f = GridFunction.constant(g, 1.0)
    with pytest.raises(GridError):
        rearrangement_value(f, Cube((0.0,), 1.0), 1.5)


# -- local mean oscillation --------------------------------------------------


def test_osc_constant_zero():
    g = unit_grid(128)
    f = GridFunction.constant(g, 7.0)
    v, c = local_mean_osc(OscillationQuery(f, Cube((0.0,), 1.0), 0.25))
    assert v == 0.0 and c == pytest.approx(7.0)


def test_osc_indicator_half():
    g = unit_grid()
    v, c = local_mean_osc(OscillationQuery(indicator_half(g), Cube((0.0,), 1.0), 1.0 / 8))
    assert v == pytest.approx(0.5, abs=1e-12)
    assert c == pytest.approx(0.5, abs=1e-12)


def test_osc_linear_function():
    # |{|x - 1/2| > s}| = 1 - 2s <= 1/4 iff s >= 3/8
    g = unit_grid()
    f = GridFunction.from_callable(g, lambda x: x)
    v, c = local_mean_osc(OscillationQuery(f, Cube((0.0,), 1.0), 0.25))
    assert v == pytest.approx(3.0 / 8.0, abs=1e-3)
    assert c == pytest.approx(0.5, abs=1e-3)


def test_osc_monotone_in_lambda():
    g = unit_grid()
    rng = np.random.default_rng(4)
    f = GridFunction(g, rng.normal(size=g.shape))
    q = Cube((0.0,), 1.0)
    vals = [local_mean_osc(OscillationQuery(f, q, lam))[0] for lam in (0.05, 0.1, 0.2, 0.4)]
    assert all(vals[i] >= vals[i + 1] - 1e-14 for i in range(len(vals) - 1))


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5, allow_nan=False), st.floats(0.1, 4, allow_nan=False))
def test_osc_shift_and_scale_exact(shift, scale):
    g = unit_grid(256)
    rng = np.random.default_rng(11)
    f = GridFunction(g, rng.normal(size=g.shape))
    q = Cube((0.25,), 0.5)
    base, _ = local_mean_osc(OscillationQuery(f, q, 1.0 / 8))
    shifted, _ = local_mean_osc(OscillationQuery(f + shift, q, 1.0 / 8))
    scaled, _ = local_mean_osc(OscillationQuery(f * scale, q, 1.0 / 8))
    assert shifted == pytest.approx(base, rel=1e-12, abs=1e-14)
    assert scaled == pytest.approx(scale * base, rel=1e-12, abs=1e-14)


def test_osc_query_rejects_subcell_level():
    g = unit_grid(16)
    f = GridFunction.constant(g, 1.0)
    with pytest.raises(GridError):
        OscillationQuery(f, Cube((0.0,), 0.125), 0.01)


# -- medians -----------------------------------------------------------------


def test_median_constant():
    g = unit_grid(64)
    f = GridFunction.constant(g, 3.0)
    assert median_value(f, np.arange(g.size)) == 3.0


def test_median_linear():
    g = unit_grid()
    f = GridFunction.from_callable(g, lambda x: x)
    assert median_value(f, np.arange(g.size)) == pytest.approx(0.5, abs=g.h)


def test_median_indicator_smallest_choice():
    g = unit_grid()
    assert median_value(indicator_half(g), np.arange(g.size)) == 0.0


# -- John-Stromberg upper (Chebyshev) ----------------------------------------


def test_john_stromberg_constant():
    g = unit_grid(256)
    d = build_cube_dictionary(g, tree_depth=5)
    f = GridFunction.constant(g, 2.0)
    assert john_stromberg_upper(f, Weight.const(g), d, 1.0 / 8) == 0.0


def test_john_stromberg_indicator():
    g = unit_grid()
    d = CubeDictionary([Cube((0.0,), 1.0)])
    sup = john_stromberg_upper(indicator_half(g), Weight.const(g), d, 1.0 / 8)
    assert sup == pytest.approx(0.5, abs=1e-12)  # and 0.5 <= 8 * (1/2) internally


def test_john_stromberg_power_weight():
    g = unit_grid(2 ** 12)
    d = build_cube_dictionary(g, tree_depth=8)
    b = Weight.power_weight(g, 0.125)
    sup = john_stromberg_upper(b.fn, b, d, 1.0 / 8)
    assert sup <= 8.0 * 2.0  # Chebyshev against the <= 2 dictionary norm


# -- sparse decomposition -----------------------------------------------------


def test_decompose_constant_empty_family():
    g = unit_grid()
    res = sparse_decompose(GridFunction.constant(g, 1.7))
    assert res.family.members == []
    assert res.max_defect <= 0.0
    assert res.ok


def test_decompose_indicator():
    g = unit_grid()
    res = sparse_decompose(indicator_half(g))
    assert {m.cube for m in res.family.members} <= {Cube((0.0,), 1.0)}
    # |f - m_f(Q)| <= 1 <= 2 * omega-sum with omega_{1/8} = 1/2
    assert res.max_defect <= 0.0 + 1e-15
    assert res.root_median == 0.0
    assert res.coefficients[(0, (0,))] == pytest.approx(0.5)


def test_decompose_random_steps_property():
    g = unit_grid(1024)
    for seed in range(30):
        rng = np.random.default_rng(seed)
        blocks = int(2 ** rng.integers(3, 7))
        vals = rng.choice([-1.0, 1.0], size=blocks)
        f = GridFunction(g, np.repeat(vals, g.n // blocks))
        res = sparse_decompose(f)
        assert verify_sparse(res.family).ok
        assert res.exceptional_measure <= res.exceptional_allowance + 1e-12
        for m in res.family.members:
            assert res.family.carve_fraction(m) >= 0.5 or res.escalations


def test_decompose_packing_ratio():
    g = unit_grid(1024)
    rng = np.random.default_rng(77)
    f = GridFunction(g, np.repeat(rng.choice([-1.0, 1.0], size=64), g.n // 64))
    res = sparse_decompose(f)
    assert res.packing_ratio() <= 2.0 + 1e-12


def test_decompose_requires_aligned_root():
    g = unit_grid(64)
    f = GridFunction.constant(g, 1.0)
    with pytest.raises(GridError):
        sparse_decompose(f, root=Cube((0.1234,), 0.3))


def test_decompose_csv_dump(tmp_path):
    g = unit_grid(256)
    res = sparse_decompose(indicator_half(g))
    res.to_csv(tmp_path / "dec.csv")
    text = (tmp_path / "dec.csv").read_text()
    assert "coefficient" in text and len(text.splitlines()) >= 2


# -- augmentation -------------------------------------------------------------


def test_augment_empty():
    g = unit_grid(256)
    fam = SparseFamily(grid=g, alpha=0.5)
    res = augment_family(fam, GridFunction.constant(g, 1.0))
    assert res.family.members == []


def test_augment_constant_function():
    g = unit_grid(256)
    fam = SparseFamily(
        grid=g, alpha=0.5, members=[SparseMember(Cube((0.0,), 1.0), np.arange(g.size))]
    )
    res = augment_family(fam, GridFunction.constant(g, 2.0))
    assert {m.cube for m in res.family.members} == {Cube((0.0,), 1.0)}
    rows = check_augmented_bound(res.family, GridFunction.constant(g, 2.0))
    assert all(r["max_defect"] <= 1e-12 for r in rows)


def test_augment_indicator_bound():
    g = unit_grid()
    f = indicator_half(g)
    fam = SparseFamily(
        grid=g, alpha=0.5, members=[SparseMember(Cube((0.0,), 1.0), np.arange(g.size))]
    )
    res = augment_family(fam, f)
    assert any(m.cube == Cube((0.0,), 1.0) for m in res.family.members)
    rows = check_augmented_bound(res.family, f)
    # RHS for the root is 2^3 * avg|f - 1/2| = 4 >= |f - f_Q| = 1/2
    root_row = [r for r in rows if r["cube"] == Cube((0.0,), 1.0)][0]
    assert root_row["max_defect"] <= 0.5 - 4.0 + 1e-12
    assert all(r["ok"] for r in rows)


def test_augment_contains_original_and_reports_alpha():
    g = unit_grid(1024)
    rng = np.random.default_rng(5)
    f = GridFunction(g, np.repeat(rng.choice([-1.0, 1.0], size=32), g.n // 32))
    base = sparse_decompose(f).family
    if not base.members:
        return
    res = augment_family(base, f)
    base_cubes = {(m.cube.corner, m.cube.side) for m in base.members}
    aug_cubes = {(m.cube.corner, m.cube.side) for m in res.family.members}
    assert base_cubes <= aug_cubes
    assert 0.0 < res.alpha_achieved <= 1.0


# -- Lemma 2.1 direction -------------------------------------------------------


def test_bmo_controlled_by_oscillation_sup_stable():
    # for an A_2 power weight eta the dictionary BMO norm is bounded by a
    # constant times sup osc |Q|/eta(Q); the constant is grid-stable
    from bloomlab.grid import integrate
    from bloomlab.oscillation import _osc_on_cube

    consts = []
    for n in (2 ** 10, 2 ** 11):
        g = unit_grid(n)
        d = build_cube_dictionary(g, tree_depth=8)
        eta = Weight.power_weight(g, 0.5)
        cut = 0.3
        b = GridFunction.from_callable(g, lambda x: (x < cut).astype(float))
        bmo = bmo_eta_norm(b, eta, d)
        sup = max(
            _osc_on_cube(b, q, 1.0 / 8)[0] * q.volume / integrate(eta.fn, q) for q in d
        )
        consts.append(bmo / sup)
    assert consts[0] > 0
    assert 0.5 <= consts[0] / consts[1] <= 2.0
