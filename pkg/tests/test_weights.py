import numpy as np
import pytest

from bloomlab.grid import Cube, Grid, GridFunction
from bloomlab.weights import (
    BloomSetup,
    CubeDictionary,
    Weight,
    ap_constant,
    bmo_eta_norm,
    build_cube_dictionary,
    density_beta,
    doubling_constant,
    level_set_gamma,
    reverse_jensen,
)


@pytest.fixture(scope="module")
def unit_setup():
    g = Grid(1, (0.0,), 1.0, 2 ** 14)
    d = build_cube_dictionary(g, tree_depth=10)
    return g, d


@pytest.fixture(scope="module")
def sym_setup():
    g = Grid(1, (-1.0,), 2.0, 2 ** 13)
    d = build_cube_dictionary(g, tree_depth=9)
    return g, d


def test_ap_constant_one_for_constant(unit_setup):
    g, d = unit_setup
    assert ap_constant(Weight.const(g, 2.0), 2.0, d) == pytest.approx(1.0, abs=1e-9)
    assert ap_constant(Weight.const(g, 2.0), 3.0, d) == pytest.approx(1.0, abs=1e-9)


def test_ap_constant_sqrt_weight(unit_setup):
    # on (0,1): avg(x^{1/2}) avg(x^{-1/2}) = (2/3) * 2 = 4/3
    g, d = unit_setup
    val = ap_constant(Weight.power_weight(g, 0.5), 2.0, d)
    assert val >= 4.0 / 3.0 - 1e-2


def test_ap_constant_negative_power(unit_setup):
    # (4/3) * (4/5) = 16/15
    g, d = unit_setup
    val = ap_constant(Weight.power_weight(g, -0.25), 2.0, d)
    assert val >= 16.0 / 15.0 - 1e-2


def test_ap_strictly_above_one_for_nonconstant(unit_setup):
    g, d = unit_setup
    assert ap_constant(Weight.power_weight(g, 0.5), 2.0, d) > 1.0 + 1e-3


def test_ap_duality_p_two(unit_setup):
    # at p=2 the defining product is symmetric in w <-> 1/w
    g, d = unit_setup
    w = Weight.power_weight(g, 0.5)
    lhs = ap_constant(w, 2.0, d)
    rhs = ap_constant(w.power(-1.0), 2.0, d)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_ap_duality_general_exponent(unit_setup):
    # [w^{1-p'}]_{A_{p'}} = [w]_{A_p}^{p'-1}
    g, d = unit_setup
    w = Weight.power_weight(g, 0.4)
    p = 3.0
    pprime = p / (p - 1.0)
    sigma = w.power(1.0 - pprime)
    assert ap_constant(sigma, pprime, d) == pytest.approx(
        ap_constant(w, p, d) ** (pprime - 1.0), rel=1e-6
    )


def test_bmo_constant_function_zero(unit_setup):
    g, d = unit_setup
    b = GridFunction.constant(g, 4.2)
    assert bmo_eta_norm(b, Weight.const(g), d) == pytest.approx(0.0, abs=1e-12)


def test_bmo_self_weight_bounded_by_two(unit_setup):
    # for b = eta = |x|^{1/8} every cube ratio is at most 2
    g, d = unit_setup
    b = Weight.power_weight(g, 0.125)
    assert bmo_eta_norm(b.fn, b, d) <= 2.0 + 1e-2


def test_bmo_indicator_half(unit_setup):
    # max mean oscillation of an indicator is 2t(1-t) <= 1/2
    g, d = unit_setup
    b = GridFunction.from_callable(g, lambda x: (x < 0.5).astype(float))
    assert bmo_eta_norm(b, Weight.const(g), d) == pytest.approx(0.5, abs=1e-3)


def test_bmo_shift_and_scale_invariance(unit_setup):
    g, d = unit_setup
    rng = np.random.default_rng(0)
    b = GridFunction(g, rng.normal(size=g.shape))
    eta = Weight.const(g)
    base = bmo_eta_norm(b, eta, d)
    assert bmo_eta_norm(b + 17.0, eta, d) == pytest.approx(base, rel=1e-12)
    assert bmo_eta_norm(b * -3.0, eta, d) == pytest.approx(3.0 * base, rel=1e-12)


def test_doubling_lebesgue(sym_setup):
    g, d = sym_setup
    assert doubling_constant(Weight.const(g), 2.0, d) == pytest.approx(2.0, abs=1e-12)


def test_doubling_sqrt_weight(sym_setup):
    # w((-2h,2h))/w((-h,h)) = 2^{3/2} is the extremal ratio
    g, d = sym_setup
    val = doubling_constant(Weight.power_weight(g, 0.5), 2.0, d)
    assert val <= 2.0 ** 1.5 + 1e-2
    assert val >= 2.0 ** 1.5 - 1e-2


def test_doubling_dim2_factor_three():
    g = Grid(2, (-1.0, -1.0), 2.0, 64)
    d = build_cube_dictionary(g, tree_depth=4)
    assert doubling_constant(Weight.const(g), 3.0, d) == pytest.approx(9.0, rel=1e-9)


def test_level_set_gamma_constant(unit_setup):
    g, d = unit_setup
    assert level_set_gamma(Weight.const(g, 5.0), d) == pytest.approx(1.0, abs=1e-12)


def test_level_set_gamma_twolevel():
    # w = 1 + chi_{[0,1/2)}: w_Q = 3/2, strict-majority threshold 1, gamma = 2/3
    g = Grid(1, (0.0,), 1.0, 1024)
    w = Weight.twolevel(g, 0.5)
    d = CubeDictionary([Cube((0.0,), 1.0)])
    assert level_set_gamma(w, d) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_level_set_gamma_power_weight_monotone(sym_setup):
    g, d = sym_setup
    w = Weight.power_weight(g, 0.5)
    gamma = level_set_gamma(w, d)
    assert 0.0 < gamma < 1.0
    smaller = CubeDictionary(d.cubes[: len(d.cubes) // 2])
    assert level_set_gamma(w, smaller) >= gamma - 1e-12


def test_reverse_jensen_constant(unit_setup):
    g, d = unit_setup
    assert reverse_jensen(Weight.const(g), 0.5, d) == pytest.approx(1.0, abs=1e-12)
    assert reverse_jensen(Weight.const(g), 0.25, d) == pytest.approx(1.0, abs=1e-12)


def test_reverse_jensen_twolevel_hand_value():
    g = Grid(1, (0.0,), 1.0, 1024)
    w = Weight.twolevel(g, 0.5)
    d = CubeDictionary([Cube((0.0,), 1.0)])
    # (3/2) / ((1+sqrt(2))/2)^2 = 6/(3+2 sqrt 2)
    want = 6.0 / (3.0 + 2.0 * np.sqrt(2.0))
    assert reverse_jensen(w, 0.5, d) == pytest.approx(want, rel=1e-12)
    gamma = level_set_gamma(w, d)
    assert reverse_jensen(w, 0.5, d) <= 2.0 ** 2 / gamma + 1e-9


def test_reverse_jensen_bound_power_weight(sym_setup):
    g, d = sym_setup
    w = Weight.power_weight(g, 0.5)
    gamma = level_set_gamma(w, d)
    assert reverse_jensen(w, 0.5, d) <= 4.0 / gamma * (1.0 + 1e-9)


def test_density_beta_constant_half():
    g = Grid(1, (0.0,), 1.0, 256)
    assert density_beta(Weight.const(g), 0.5, Cube((0.0,), 1.0)) == pytest.approx(0.5, abs=1e-12)


def test_density_beta_twolevel():
    g = Grid(1, (0.0,), 1.0, 256)
    w = Weight.twolevel(g, 0.5)
    val = density_beta(w, 0.5, Cube((0.0,), 1.0), trials=20, rng=np.random.default_rng(0))
    assert val == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_density_beta_full_set():
    g = Grid(1, (0.0,), 1.0, 256)
    w = Weight.twolevel(g, 0.25)
    assert density_beta(w, 1.0, Cube((0.0,), 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_bloom_setup_equal_weights_reduce_to_unweighted(unit_setup):
    g, d = unit_setup
    mu = Weight.power_weight(g, 0.5)
    setup = BloomSetup(mu=mu, lam=mu, p=2.0, m=2)
    assert np.allclose(setup.nu.samples, 1.0)
    assert np.allclose(setup.eta.samples, 1.0)
    rng = np.random.default_rng(3)
    b = GridFunction(g, rng.normal(size=g.shape))
    assert bmo_eta_norm(b, setup.eta, d) == pytest.approx(
        bmo_eta_norm(b, Weight.const(g), d), rel=1e-12
    )


def test_bloom_setup_eta_power_invariant(unit_setup):
    g, _ = unit_setup
    mu = Weight.power_weight(g, 0.5)
    lam = Weight.const(g)
    setup = BloomSetup(mu=mu, lam=lam, p=2.0, m=3)
    assert np.max(np.abs(setup.eta.samples ** 3 - setup.nu.samples)) <= 1e-12 * np.max(setup.nu.samples)


def test_holder_product_of_ap_constants(unit_setup):
    # [lam^{1-i/m} mu^{i/m}]_{A_p} <= [lam]^{1-i/m} [mu]^{i/m} on a common dictionary
    g, d = unit_setup
    lam = Weight.power_weight(g, 0.3)
    mu = Weight.power_weight(g, 0.6)
    p, m = 2.0, 3
    ap_l = ap_constant(lam, p, d)
    ap_m = ap_constant(mu, p, d)
    for i in (1, 2):
        t = i / m
        mixed = Weight(GridFunction(g, lam.samples ** (1 - t) * mu.samples ** t))
        assert ap_constant(mixed, p, d) <= ap_l ** (1 - t) * ap_m ** t * (1.0 + 1e-9)


def test_weight_spec_strings(unit_setup):
    g, _ = unit_setup
    assert np.allclose(Weight.from_spec(g, "const:2.5").samples, 2.5)
    assert np.allclose(
        Weight.from_spec(g, "power:0.5").samples,
        np.abs(g.axis_midpoints(0)) ** 0.5,
    )
    tw = Weight.from_spec(g, "twolevel:0.25")
    assert tw.samples.max() == 2.0 and tw.samples.min() == 1.0


def test_weight_rejects_nonpositive():
    g = Grid(1, (0.0,), 1.0, 16)
    with pytest.raises(Exception):
        Weight(GridFunction.constant(g, 0.0))
