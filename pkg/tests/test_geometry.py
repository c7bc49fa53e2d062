import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from einsteuler.errors import SingularMetric
from einsteuler.geometry import (
    ETA,
    SpacetimeMetric,
    christoffel,
    invert_metric,
    lower_index,
    pack,
    raise_index,
    ricci_oracle,
    signature_ok,
    unpack,
)
from einsteuler.grid import GridSpec

from conftest import line_grid

packed = hnp.arrays(float, 10, elements=st.floats(-10, 10))
small_packed = hnp.arrays(float, 10, elements=st.floats(-0.2, 0.2))


@given(packed)
def test_pack_unpack_roundtrip(c):
    full = unpack(c)
    assert np.array_equal(full, np.swapaxes(full, -1, -2))
    assert np.array_equal(pack(full), c)


def test_invert_minkowski():
    assert np.array_equal(invert_metric(ETA), ETA)


def test_invert_diagonal():
    out = invert_metric(np.diag([-1.0, 4.0, 1.0, 1.0]))
    assert np.allclose(out, np.diag([-1.0, 0.25, 1.0, 1.0]), atol=0, rtol=1e-15)


@given(small_packed)
def test_invert_perturbed_product(c):
    g = ETA + 0.05 * unpack(c)
    inv = invert_metric(g)
    assert np.array_equal(inv, inv.T)
    assert np.max(np.abs(inv @ g - np.eye(4))) < 1e-12


def test_invert_singular_reports_point():
    g = np.broadcast_to(ETA, (5, 4, 4)).copy()
    g[3] = np.diag([-1.0, 0.0, 1.0, 1.0])
    with pytest.raises(SingularMetric) as exc:
        invert_metric(g)
    assert exc.value.point == (3,)


def test_spacetime_metric_container():
    grid = line_grid(8)
    m = SpacetimeMetric.minkowski(grid)
    assert m.comps.shape == grid.shape + (10,)
    assert np.array_equal(m.full()[0, 0, 0], ETA)
    with pytest.raises(ValueError):
        SpacetimeMetric(np.zeros((4, 9)))


def test_christoffel_of_constant_metric_vanishes():
    grid = line_grid(16)
    g = np.broadcast_to(pack(np.diag([-2.0, 3.0, 1.0, 0.5])), grid.shape + (10,))
    gam = christoffel(g, np.zeros_like(g), grid).gamma
    assert np.all(gam == 0)


def _diag_metric(grid):
    x = grid.coords()[..., 0]
    a = 1 + 0.1 * np.sin(x)
    g = np.zeros(grid.shape + (4, 4))
    g[..., 0, 0] = -1
    g[..., 1, 1] = a * a
    g[..., 2, 2] = g[..., 3, 3] = 1
    return g, 0.1 * np.cos(x) / a


@pytest.mark.parametrize("order", [2, 4])
def test_christoffel_diagonal_metric_converges(order):
    errs = []
    for n in (32, 64, 128):
        grid = line_grid(n, order=order)
        g, exact = _diag_metric(grid)
        gam = christoffel(g, np.zeros_like(g), grid).gamma
        errs.append(np.max(np.abs(gam[..., 1, 1, 1] - exact)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert errs[0] < 1e-2
    assert np.all(np.abs(rates - order) < 0.1 * order)


def test_christoffel_symmetric_exactly():
    grid = GridSpec((12, 12, 1), (1.0, 1.0, 1.0))
    rng = np.random.default_rng(4)
    g = pack(ETA) + 0.05 * rng.normal(size=grid.shape + (10,))
    gam = christoffel(g, 0.1 * rng.normal(size=grid.shape + (10,)), grid).gamma
    assert np.array_equal(gam, np.swapaxes(gam, -1, -2))


# ---------------------------------------------------------------- Ricci oracle

T, X = sp.symbols("t x")
_G = sp.Matrix(
    [
        [-(1 + sp.sin(X + T) / 10), sp.cos(X) / 20, 0, 0],
        [sp.cos(X) / 20, 1 + sp.sin(X) ** 2 / 10, 0, sp.sin(X - T) / 20],
        [0, 0, 1 + sp.cos(X - T) / 10, 0],
        [0, sp.sin(X - T) / 20, 0, 1],
    ]
)


def _sym_ricci(G):
    coords = (T, X, sp.Symbol("y"), sp.Symbol("z"))
    Ginv = G.inv()
    gam = [[[sum(Ginv[m, e] * (sp.diff(G[e, b], coords[c]) + sp.diff(G[e, c], coords[b])
                               - sp.diff(G[b, c], coords[e])) for e in range(4)) / 2
             for c in range(4)] for b in range(4)] for m in range(4)]
    R = sp.zeros(4, 4)
    for b in range(4):
        for c in range(4):
            R[b, c] = sum(sp.diff(gam[m][b][c], coords[m]) - sp.diff(gam[m][b][m], coords[c])
                          + sum(gam[m][m][l] * gam[l][b][c] - gam[m][c][l] * gam[l][b][m] for l in range(4))
                          for m in range(4))
    return R


@pytest.fixture(scope="module")
def ricci_exact():
    mats = [_G, sp.diff(_G, T), sp.diff(_G, T, 2), _sym_ricci(_G)]
    fns = [[[sp.lambdify((T, X), M[i, j], "numpy") for j in range(4)] for i in range(4)] for M in mats]

    def ev(fn, t, x):
        out = np.empty(x.shape + (4, 4))
        for i in range(4):
            for j in range(4):
                out[..., i, j] = fn[i][j](t, x)
        return out

    return lambda t, x: tuple(ev(fn, t, x) for fn in fns)


def test_ricci_minkowski_vanishes():
    grid = line_grid(16)
    g = np.broadcast_to(ETA, grid.shape + (4, 4))
    z = np.zeros_like(g)
    assert np.all(ricci_oracle(g, z, z, grid) == 0)


def test_ricci_weak_gauge_wave_is_second_order_in_amplitude():
    grid = line_grid(128)
    x = grid.coords()[..., 0]
    Tt = np.zeros((4, 4))
    Tt[0, 0], Tt[1, 1], Tt[2, 3], Tt[3, 2] = 1, -1, 0.5, 0.5
    out = []
    for A in (1e-3, 2e-3):
        ph = A * np.sin(x)
        g = ETA + ph[..., None, None] * Tt
        dt = -A * np.cos(x)[..., None, None] * Tt
        dtt = -ph[..., None, None] * Tt
        out.append(np.max(np.abs(ricci_oracle(g, dt, dtt, grid))))
    assert out[0] < 1e-5
    assert out[1] / out[0] == pytest.approx(4.0, rel=0.05)


def test_ricci_oracle_converges_to_symbolic(ricci_exact):
    errs = []
    for n in (32, 64, 128):
        grid = line_grid(n)
        x = grid.coords()[..., 0]
        g, dt, dtt, R = ricci_exact(0.3, x)
        errs.append(np.max(np.abs(ricci_oracle(g, dt, dtt, grid) - R)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 4) < 0.4)


# ---------------------------------------------------------------- index operations


def test_lower_index_examples():
    assert np.array_equal(lower_index(np.array([1.0, 0, 0, 0]), ETA), [-1, 0, 0, 0])
    assert np.array_equal(lower_index(np.array([2.0, 1, 0, 0]), ETA), [-2, 1, 0, 0])


@given(small_packed, hnp.arrays(float, 4, elements=st.floats(-5, 5)))
def test_raise_lower_roundtrip(c, u):
    g = ETA + unpack(c)
    back = raise_index(lower_index(u, g), g)
    assert np.max(np.abs(back - u)) <= 1e-12 * max(1.0, np.max(np.abs(u)))


def test_signature_check():
    rng = np.random.default_rng(5)
    g = ETA + 0.05 * unpack(rng.normal(size=(200, 10)))
    assert signature_ok(g, sample=50, rng=0)
    assert not signature_ok(np.eye(4))
    assert not signature_ok(np.diag([-1.0, -1.0, 1.0, 1.0]))
