import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from einsteuler.errors import IndefiniteWeight, NonUniformGrid, TailNotConverged, ValidationError
from einsteuler.grid import GridSpec
from einsteuler.reduction import make_W
from einsteuler.wsobolev import (
    DyadicFamily,
    EnergyWeights,
    GridFunction,
    NormSpec,
    bessel_potential,
    check_cutoff_power,
    check_derivative,
    check_interpolation,
    check_l2_equivalence,
    check_monotonicity,
    check_uniform,
    energy_x_norm,
    energy_x_terms,
    function_family,
    gaussian,
    hs_box_sq,
    norm_hs_delta,
    norm_l2_delta,
    random_functions,
    y_norm,
)

from conftest import EOS, line_grid

FAM = DyadicFamily()


@pytest.mark.parametrize("kw", [dict(s=-0.5, delta=0), dict(s=7, delta=0), dict(s=1, delta=np.nan),
                                dict(s=1, delta=0, gamma_psi=0)])
def test_norm_spec_validation(kw):
    with pytest.raises(ValidationError):
        NormSpec(**kw)


# ---------------------------------------------------------------- dyadic cutoffs


@pytest.mark.parametrize("j", [1, 2, 5, 8])
def test_cutoff_support_and_plateau(j):
    r = np.linspace(0, 2.0 ** (j + 2), 200001)
    p = FAM.psi(j, r)
    assert np.all(p[(r >= 2.0 ** (j - 1)) & (r <= 2.0**j)] == 1)
    assert np.all(p[(r <= 2.0 ** (j - 2)) | (r >= 2.0 ** (j + 1))] == 0)


def test_cutoff_zero_plateau():
    r = np.linspace(0, 3, 3001)
    p = FAM.psi(0, r)
    assert np.all(p[r <= 1] == 1) and np.all(p[r >= 2] == 0)


def test_shell_partition_bounds():
    r = np.linspace(0, 2.0**FAM.j_max, 400001)
    total = FAM.psi_sum(r)
    assert total.min() >= 1 - 1e-12
    assert total.max() <= 4


def test_cutoff_derivatives_scale_dyadically():
    consts = []
    for j in range(1, 9):
        r = np.linspace(2.0 ** (j - 2), 2.0 ** (j + 1), 100001)
        d = np.abs(np.gradient(FAM.psi(j, r), r))
        consts.append(d.max() * 2.0**j)
    consts = np.array(consts)
    assert consts.max() / consts.min() < 1.01


# ---------------------------------------------------------------- Bessel potential


def test_bessel_identity_at_zero():
    u = np.random.default_rng(0).normal(size=(32, 2))
    assert np.array_equal(bessel_potential(u, 0.0, (1.0,)), u)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.7])
def test_bessel_fourier_mode(s):
    L = 4.0
    x = np.arange(64) * L / 64
    k = 2 * np.pi * 3 / L
    u = np.cos(k * x)
    assert np.allclose(bessel_potential(u, s, (L,)), (1 + k * k) ** (s / 2) * u, atol=1e-12)


def test_bessel_composition():
    u = np.random.default_rng(1).normal(size=(16, 16))
    a = bessel_potential(bessel_potential(u, 0.7, (2.0, 3.0)), 1.1, (2.0, 3.0))
    assert np.allclose(a, bessel_potential(u, 1.8, (2.0, 3.0)), atol=1e-10)


def test_bessel_two_is_one_minus_laplacian():
    errs = []
    for n in (32, 64, 128):
        grid = line_grid(n)
        x = grid.coords()[..., 0]
        u = np.exp(np.sin(x))
        lap = grid.diff(grid.diff(u, 0), 0)
        errs.append(np.max(np.abs(bessel_potential(u[:, 0, 0], 2.0, (2 * np.pi,)) - (u - lap)[:, 0, 0])))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 4) < 0.4)


def test_bessel_from_coords_and_nonuniform():
    x = np.arange(16) * 0.25
    u = np.sin(2 * np.pi * x / 4)
    assert np.allclose(bessel_potential(u, 1.0, coords=[x]), bessel_potential(u, 1.0, (4.0,)))
    with pytest.raises(NonUniformGrid):
        check_uniform([np.array([0.0, 0.1, 0.3])])


def test_box_norm_parseval():
    x = np.arange(128) * 2 * np.pi / 128
    u = 3 * np.sin(2 * x)
    assert hs_box_sq(u, 1.0, (2 * np.pi,)) == pytest.approx(9 * np.pi * 5, rel=1e-12)


# ---------------------------------------------------------------- weighted norms


def test_norms_of_zero():
    z = lambda x: np.zeros(x.shape[:-1])
    assert norm_hs_delta(z, NormSpec(2.0, 1.0), dim=1) == 0
    assert norm_l2_delta(z, 1.0, dim=1) == 0


@settings(max_examples=20)
@given(st.integers(0, 1000), st.floats(-3, 3), st.sampled_from([(0.0, 0.0), (1.5, 0.5), (2.0, -1.0)]))
def test_norm_is_a_seminorm(seed, lam, sd):
    a, b = random_functions(2, 1, seed)
    spec = NormSpec(*sd)
    na, nb = norm_hs_delta(a, spec, dim=1), norm_hs_delta(b, spec, dim=1)
    nab = norm_hs_delta(lambda x: a(x) + b(x), spec, dim=1)
    assert nab <= na + nb + 1e-10 * (na + nb)
    assert norm_hs_delta(lambda x: lam * a(x), spec, dim=1) == pytest.approx(abs(lam) * na, rel=1e-10, abs=1e-14)


def test_tail_monitor_raises_for_slow_decay():
    slow = lambda x: 1.0 / (1.0 + np.sum(x * x, axis=-1)) ** 0.3
    with pytest.raises(TailNotConverged):
        norm_hs_delta(slow, NormSpec(0.0, 0.0), DyadicFamily(j_max=4), dim=1)


def test_grid_function_roundtrip():
    grid = GridSpec((64, 1, 1), (8.0, 1, 1), boundary="frozen")
    x = grid.coords()[..., :1]
    vals = np.exp(-x[..., 0] ** 2)
    gf = GridFunction(vals, grid)
    assert np.allclose(gf(x[:, 0, 0]), vals[:, 0, 0], atol=1e-14)
    assert gf(np.array([[10.0]]))[0] == 0


def test_weighted_l2_unit_box():
    for pts, ext in (((40, 1, 1), (4.0, 1, 1)), ((40, 40, 1), (4.0, 4.0, 1))):
        grid = GridSpec(pts, ext, boundary="frozen")
        X = grid.coords()
        ind = np.all((X >= -0.5) & (X < 0.5), axis=-1).astype(float)
        assert norm_l2_delta(ind, 0.0, grid=grid) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_weighted_l2_gaussian_against_quad(dim):
    area = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}[dim]
    ref = area * quad(lambda r: (1 + r) ** 2 * r ** (dim - 1) * np.exp(-(r**2)), 0, np.inf, epsabs=1e-14)[0]
    # exp(-|x|^2 / 2) squared is exp(-r^2)
    val = norm_l2_delta(gaussian(1.0, dim=dim), 1.0) ** 2
    assert val == pytest.approx(ref, rel=1e-6)


def test_l2_equivalence_band_small_family():
    res = check_l2_equivalence(function_family("gaussians+bumps"), fam=FAM)
    assert res.passed
    assert 0.25 <= min(res.ratios) and max(res.ratios) <= 4


def test_monotonicity_random():
    res = check_monotonicity(random_functions(20, 1, seed=3), fam=FAM)
    assert res.passed and max(res.ratios) <= 1


def test_derivative_and_interpolation_bounds():
    funcs = function_family("gaussians+bumps")
    assert check_derivative(funcs, fam=FAM).passed
    assert check_interpolation(funcs, fam=FAM).passed


def test_cutoff_power_equivalence_baseline():
    res = check_cutoff_power(function_family("gaussians+bumps"), fam=FAM)
    # regression band measured on the default family: [0.770, 1.295]
    assert 0.76 < min(res.ratios) and max(res.ratios) < 1.31


def test_two_dimensional_norm_is_resolved():
    g = gaussian(1.0, dim=2)
    coarse = norm_hs_delta(g, NormSpec(1.0, 0.0), DyadicFamily(n_ref=128), dim=2)
    fine = norm_hs_delta(g, NormSpec(1.0, 0.0), DyadicFamily(n_ref=256), dim=2)
    assert fine == pytest.approx(coarse, rel=1e-3)
    assert fine > norm_l2_delta(g, 0.0, dim=2)


# ---------------------------------------------------------------- energy norms


def _periodic_state(n=32, seed=0):
    grid = line_grid(n)
    rng = np.random.default_rng(seed)
    x = grid.coords()[..., 0]
    U = np.zeros(grid.shape + (55,))
    for k in range(55):
        U[..., k] = 0.01 * rng.normal() * np.sin(x + rng.uniform(0, 6))
    return U, grid


def _frozen_state(n=64, seed=0):
    grid = GridSpec((n, 1, 1), (8.0, 1, 1), boundary="frozen")
    rng = np.random.default_rng(seed)
    x = grid.coords()[..., 0]
    U = 0.01 * rng.normal(size=55) * np.exp(-x * x)[..., None]
    return U, grid


@pytest.mark.parametrize("make", [_periodic_state, _frozen_state])
def test_energy_identity_weights_are_unweighted(make):
    U, grid = make()
    spec = NormSpec(2.0, 0.5)
    t = energy_x_terms(U, spec, EnergyWeights.identity(), grid, FAM)
    t2 = energy_x_terms(U, spec, EnergyWeights(np.broadcast_to(np.eye(3), grid.shape + (3, 3)),
                                               np.broadcast_to(np.eye(5), grid.shape + (5, 5))), grid, FAM)
    for k in t:
        assert t2[k] == pytest.approx(t[k], rel=1e-10)
    if grid.boundary == "periodic":
        assert t["v"] == pytest.approx(hs_box_sq(U[:, 0, 0, :10], 2.0, (2 * np.pi,)), rel=1e-12)


@pytest.mark.parametrize("make", [_periodic_state, _frozen_state])
def test_energy_doubled_weights(make):
    U, grid = make(seed=1)
    spec = NormSpec(2.0, 0.0)
    one = energy_x_norm(U, spec, EnergyWeights.identity(), grid, FAM)
    two = energy_x_norm(U, spec, EnergyWeights(2 * np.eye(3), 2 * np.eye(5)), grid, FAM)
    t = energy_x_terms(U, spec, EnergyWeights.identity(), grid, FAM)
    assert two**2 == pytest.approx(t["v"] + t["dtv"] + 2 * (t["dxv"] + t["W"]), rel=1e-10)
    assert one < two


@pytest.mark.parametrize("c0", [1.5, 4.0])
def test_energy_weight_equivalence(c0):
    U, grid = _periodic_state(seed=2)
    rng = np.random.default_rng(4)
    spec = NormSpec(1.0, 0.0)

    def rand_spd(n):
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        return q @ np.diag(np.exp(rng.uniform(-np.log(c0), np.log(c0), n))) @ q.T

    wts = EnergyWeights(rand_spd(3), rand_spd(5))
    lo, hi = wts.bounds()
    assert 1 / c0 <= lo and hi <= c0
    ratio = energy_x_norm(U, spec, wts, grid) / energy_x_norm(U, spec, EnergyWeights.identity(), grid)
    assert c0**-0.5 <= ratio <= c0**0.5


def test_indefinite_weight():
    with pytest.raises(IndefiniteWeight):
        EnergyWeights(np.diag([1.0, -1.0, 1.0]), np.eye(5))


def test_weights_from_flat_vacuum():
    grid = line_grid(8)
    U = np.zeros(grid.shape + (55,))
    U[..., 50:] = make_W(0.0, np.array([1.0, 0, 0, 0]), EOS)
    wts = EnergyWeights.from_state(U, EOS)
    assert np.array_equal(wts.a33[0, 0, 0], np.eye(3))
    assert np.allclose(wts.a44[0, 0, 0], np.eye(5), atol=1e-15)


def test_y_norm_matches_plain_l2():
    U, grid = _frozen_state(seed=5)
    plain = np.sqrt(np.sum(U**2) * grid.cell_volume())
    assert y_norm(U, 0.0, grid) == pytest.approx(plain, rel=1e-13)
    assert y_norm(U, 0.0, grid, EnergyWeights.identity()) == pytest.approx(plain, rel=1e-13)
    assert y_norm(U, 1.0, grid) > plain
