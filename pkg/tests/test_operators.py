import math

import numpy as np
import pytest

from bloomlab.grid import Cube, Grid, GridFunction, integrate, pv_integral
from bloomlab.operators import (
    CommutatorSpec,
    KernelSpec,
    OperatorError,
    apply_T,
    apply_T_adjoint,
    commutator_binomial,
    commutator_kernel_form,
    commutator_recursive,
    dini_modulus,
)


def hilbert_grid():
    # h = 0.01, sample points at -2 + 0.01 k: contains x = 2 exactly
    return Grid(1, (-2.005,), 8.0, 800)


def chi_minus1_1(g):
    return GridFunction.from_callable(g, lambda x: ((x > -1) & (x < 1)).astype(float))


# -- Dini modulus -------------------------------------------------------------


def test_dini_constant_omega_zero():
    k = KernelSpec(2, omega_samples=np.full(512, 2.0))
    rep = dini_modulus(k)
    assert np.all(rep.omega_of_delta == 0.0)
    assert rep.integral == 0.0
    assert not rep.divergent


def test_dini_cosine_lipschitz():
    rep = dini_modulus(KernelSpec.from_spec("s1:cos"))
    assert np.all(rep.omega_of_delta <= rep.deltas + 1e-9)
    assert rep.integral <= 1.0 + 1e-3
    assert not rep.divergent


def test_dini_two_point_sphere():
    rep = dini_modulus(KernelSpec.hilbert())
    inside = rep.deltas < 2.0
    assert np.all(rep.omega_of_delta[inside] == 0.0)
    assert not rep.divergent


def test_dini_rough_arc_divergent():
    rep = dini_modulus(KernelSpec.from_spec("s1:signpatch:0:0.5"))
    assert rep.divergent


# -- apply_T ------------------------------------------------------------------


def test_apply_T_zero():
    g = hilbert_grid()
    out = apply_T(KernelSpec.hilbert(), GridFunction.constant(g, 0.0))
    assert np.all(out.samples == 0.0)


def test_apply_T_log3():
    g = hilbert_grid()
    out = apply_T(KernelSpec.hilbert(), chi_minus1_1(g))
    i = g.locate_sample((2.0,))
    assert out.samples[i[0]] == pytest.approx(math.log(3.0), abs=1e-2)


def test_apply_T_even_function_at_origin():
    g = Grid(1, (-1.0,), 2.0, 801)
    f = GridFunction.from_callable(g, lambda x: np.exp(-x * x))
    out = apply_T(KernelSpec.hilbert(), f)
    i = g.locate_sample((0.0,))
    assert abs(out.samples[i[0]]) <= 1e-12


def test_apply_T_matches_pv_integral_pointwise():
    g = Grid(1, (-1.0,), 2.0, 256)
    rng = np.random.default_rng(0)
    f = GridFunction(g, rng.normal(size=g.shape))
    k = KernelSpec.hilbert()
    out = apply_T(k, f)
    for i in (3, 77, 128, 200):
        want = pv_integral(k, f, g.points_flat()[i]).value
        assert out.samples[i] == pytest.approx(want, rel=1e-12, abs=1e-13)


def test_apply_T_matches_pv_integral_dim2():
    g = Grid(2, (-1.0, -1.0), 2.0, 24)
    rng = np.random.default_rng(1)
    f = GridFunction(g, rng.normal(size=g.shape))
    k = KernelSpec.from_spec("s1:cos")
    out = apply_T(k, f)
    for flat in (5, 100, 333):
        pt = g.points_flat()[flat]
        want = pv_integral(k, f, pt).value
        assert out.flat[flat] == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_apply_T_rejects_small_truncation():
    g = Grid(2, (-1.0, -1.0), 2.0, 16)
    k = KernelSpec(2, omega_samples=np.ones(64), truncation_cells=1.0)  # < sqrt(2)
    with pytest.raises(OperatorError):
        apply_T(k, GridFunction.constant(g, 1.0))


def test_adjoint_identity():
    g = Grid(1, (-1.0,), 2.0, 200)
    rng = np.random.default_rng(2)
    f = GridFunction(g, rng.normal(size=g.shape))
    h = GridFunction(g, rng.normal(size=g.shape))
    k = KernelSpec.hilbert()
    lhs = float(np.dot(apply_T(k, f).flat, h.flat))
    rhs = float(np.dot(f.flat, apply_T_adjoint(k, h).flat))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_adjoint_identity_dim2():
    g = Grid(2, (-1.0, -1.0), 2.0, 16)
    rng = np.random.default_rng(3)
    f = GridFunction(g, rng.normal(size=g.shape))
    h = GridFunction(g, rng.normal(size=g.shape))
    k = KernelSpec.from_spec("s1:signpatch:0.4:0.6")
    lhs = float(np.dot(apply_T(k, f).flat, h.flat))
    rhs = float(np.dot(f.flat, apply_T_adjoint(k, h).flat))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


# -- commutators ---------------------------------------------------------------


def test_commutator_constant_b_vanishes():
    g = hilbert_grid()
    b = GridFunction.constant(g, 3.0)
    out = commutator_recursive(CommutatorSpec(KernelSpec.hilbert(), b, 1), chi_minus1_1(g))
    assert np.max(np.abs(out.samples)) <= 1e-12


def test_commutator_order_zero_is_T():
    g = hilbert_grid()
    f = chi_minus1_1(g)
    b = GridFunction.from_callable(g, lambda x: x)
    out = commutator_recursive(CommutatorSpec(KernelSpec.hilbert(), b, 0), f)
    ref = apply_T(KernelSpec.hilbert(), f)
    assert np.array_equal(out.samples, ref.samples)


def test_commutator_linear_b_kernel_cancellation():
    # (b(x)-b(y)) / (x-y) = 1 for b = x: [b,H] chi_E(2) = |E| within quadrature
    g = hilbert_grid()
    f = chi_minus1_1(g)
    b = GridFunction.from_callable(g, lambda x: x)
    out = commutator_recursive(CommutatorSpec(KernelSpec.hilbert(), b, 1), f)
    i = g.locate_sample((2.0,))
    assert out.samples[i[0]] == pytest.approx(2.0, abs=2e-2)


def test_commutator_far_field_equals_discrete_measure():
    g = hilbert_grid()
    f = chi_minus1_1(g)
    b = GridFunction.from_callable(g, lambda x: x)
    out = commutator_recursive(CommutatorSpec(KernelSpec.hilbert(), b, 1), f)
    measure = integrate(f, Cube((-2.005,), 8.0))
    for x in (4.0, 5.0, -2.0):
        i = g.locate_sample((x,))
        assert out.samples[i[0]] == pytest.approx(measure, rel=1e-12)


def test_binomial_identity():
    g = Grid(1, (-1.0,), 2.0, 256)
    rng = np.random.default_rng(5)
    f = GridFunction(g, rng.normal(size=g.shape))
    b = GridFunction.from_callable(g, lambda x: 0.3 * x ** 2 - x + 0.1)
    for m in (1, 2, 3):
        spec = CommutatorSpec(KernelSpec.hilbert(), b, m)
        rec = commutator_recursive(spec, f)
        binom = commutator_binomial(spec, f)
        scale = np.max(np.abs(rec.samples)) or 1.0
        assert np.max(np.abs(rec.samples - binom.samples)) <= 1e-10 * scale


def test_kernel_form_constant_b_zero():
    g = hilbert_grid()
    b = GridFunction.constant(g, 4.0)
    val = commutator_kernel_form(CommutatorSpec(KernelSpec.hilbert(), b, 2), chi_minus1_1(g), (2.5,))
    assert val == pytest.approx(0.0, abs=1e-14)


def test_kernel_form_order_zero_is_pv():
    g = hilbert_grid()
    f = chi_minus1_1(g)
    b = GridFunction.constant(g, 0.0)
    val = commutator_kernel_form(CommutatorSpec(KernelSpec.hilbert(), b, 0), f, (2.5,))
    ref = pv_integral(KernelSpec.hilbert(), f, (2.5,)).value
    assert val == pytest.approx(ref, rel=1e-14)


def test_kernel_form_matches_recursive():
    g = Grid(1, (-2.0,), 4.0, 512)
    rng = np.random.default_rng(8)
    supp = np.zeros(g.shape)
    supp[100:200] = rng.normal(size=100)
    f = GridFunction(g, supp)
    b = GridFunction.from_callable(g, lambda x: 0.5 * x ** 2 + 0.2 * x)
    for m in (1, 2):
        spec = CommutatorSpec(KernelSpec.hilbert(), b, m)
        rec = commutator_recursive(spec, f)
        for i in (400, 450, 500):
            x = g.points_flat()[i]
            val = commutator_kernel_form(spec, f, x)
            assert val == pytest.approx(rec.samples[i], rel=1e-8)


def test_kernel_form_rejects_points_near_support():
    g = Grid(1, (-2.0,), 4.0, 512)
    supp = np.zeros(g.shape)
    supp[100:200] = 1.0
    f = GridFunction(g, supp)
    b = GridFunction.from_callable(g, lambda x: x)
    with pytest.raises(OperatorError):
        commutator_kernel_form(CommutatorSpec(KernelSpec.hilbert(), b, 1), f, g.points_flat()[200])


def test_antisymmetry_disjoint_supports():
    g = Grid(1, (-2.0,), 4.0, 512)
    rng = np.random.default_rng(9)
    fs = np.zeros(g.shape)
    gs = np.zeros(g.shape)
    fs[50:120] = rng.normal(size=70)
    gs[300:400] = rng.normal(size=100)
    f, h = GridFunction(g, fs), GridFunction(g, gs)
    k = KernelSpec.hilbert()
    lhs = float(np.dot(apply_T(k, f).flat, h.flat)) * g.cell_volume
    rhs = float(np.dot(f.flat, apply_T(k, h).flat)) * g.cell_volume
    scale = max(abs(lhs), abs(rhs), 1e-30)
    assert abs(lhs + rhs) <= 1e-8 * scale


def test_kernel_spec_strings_and_mean_zero():
    assert KernelSpec.from_spec("hilbert").mean_zero()
    assert KernelSpec.from_spec("s1:cos").mean_zero()
    assert not KernelSpec.from_spec("s1:signpatch:0:0.5").mean_zero()
    one_sided = KernelSpec.from_spec("dim1:1:0")
    assert one_sided.omega_pair == (1.0, 0.0)
    assert not one_sided.mean_zero()


def test_kernel_file_round_trip(tmp_path):
    vals = np.cos(np.arange(128) * 2 * math.pi / 128) + 0.5
    path = tmp_path / "omega.txt"
    np.savetxt(path, vals)
    k = KernelSpec.from_spec(f"s1:file:{path}")
    assert np.allclose(k.omega_samples, vals)
