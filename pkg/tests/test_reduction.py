import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from einsteuler.fluid import fluid_matrices, normalized_velocity
from einsteuler.geometry import ETA, pack, unpack
from einsteuler.grid import GridSpec
from einsteuler.reduction import (
    COMPONENT_NAMES,
    N_STATE,
    SystemState,
    _quadratic_full,
    assemble_A0,
    assemble_Aa,
    assemble_block_system,
    assemble_linear_rhs,
    assemble_rhs,
    constant_Ca,
    dx_slice,
    fluid_of,
    h_identity_oracle,
    make_W,
    metric_of,
    pack_state,
    quadratic_terms_H,
    rhs_unnormalized,
    solve_A0,
    source_f,
    time_derivative,
)

from conftest import EOS, admissible_states, line_grid, random_states

E0 = np.array([1.0, 0.0, 0.0, 0.0])


def test_layout():
    assert N_STATE == 55 and len(COMPONENT_NAMES) == 55
    assert COMPONENT_NAMES[dx_slice(1).start] == "dy_v00"
    rng = np.random.default_rng(0)
    U = random_states(3, rng)
    st_ = SystemState(U)
    assert st_.dxv.shape == (3, 3, 10)
    assert np.array_equal(st_.dxv[:, 2], U[:, 40:50])
    w, u = fluid_of(st_.W, EOS)
    assert np.allclose(make_W(w, u, EOS), st_.W)


# ---------------------------------------------------------------- principal blocks


def test_flat_empty_state_is_identity_and_zero():
    z10, z5 = np.zeros(10), np.zeros(5)
    assert np.array_equal(assemble_A0(z10, z5, EOS), np.eye(55))
    assert np.array_equal(assemble_Aa(z10, z5, EOS), np.zeros((3, 55, 55)))


def test_a33_example():
    v = pack(np.diag([-1.0, 2.0, 1.0, 1.0])) - pack(ETA)
    A0 = assemble_A0(v, make_W(0.0, E0, EOS), EOS)
    expect = np.diag(np.concatenate([np.full(10, 0.5), np.ones(20)]))
    assert np.allclose(A0[20:50, 20:50], expect, rtol=1e-15, atol=0)


def test_A0_definite_on_small_states():
    rng = np.random.default_rng(1)
    n = 1000
    v = rng.uniform(-0.1, 0.1, (n, 10))
    # |W| < 0.1 componentwise for the stored (scaled) unknown
    ub = rng.uniform(-0.03, 0.03, (n, 3))
    u = normalized_velocity(metric_of(v), ub)
    keep = np.all(np.abs(u - E0) < 0.1, axis=-1)
    w = rng.uniform(0, 0.1 / EOS.kappa0, n)
    A0 = assemble_A0(v[keep], make_W(w[keep], u[keep], EOS), EOS)
    assert keep.sum() > 900
    assert np.min(np.linalg.eigvalsh(A0)) > 0.5


def test_Ca_is_kronecker_pattern():
    C = constant_Ca()
    assert np.array_equal(C, np.swapaxes(C, -1, -2))
    for a in range(3):
        blk = C[a][10:20, 20:50].reshape(10, 3, 10)
        for b in range(3):
            assert np.array_equal(blk[:, b, :], np.eye(10) if a == b else np.zeros((10, 10)))
        assert np.count_nonzero(C[a]) == 20


def test_Aa_plus_Ca_at_flat_metric_is_c22():
    rng = np.random.default_rng(2)
    Aa = assemble_Aa(np.zeros(10), make_W(0.2, normalized_velocity(ETA, rng.uniform(-0.3, 0.3, 3)), EOS), EOS)
    assert np.all(Aa[:, :50, :50] == 0)


def test_principal_symmetry_random():
    rng = np.random.default_rng(3)
    U = random_states(1000, rng)
    v, W = U[:, :10], U[:, 50:]
    A0 = assemble_A0(v, W, EOS)
    M = assemble_Aa(v, W, EOS) + constant_Ca()
    assert np.array_equal(A0, np.swapaxes(A0, -1, -2))
    assert np.array_equal(M, np.swapaxes(M, -1, -2))


@given(admissible_states(), st.floats(-5, 5))
def test_principal_blocks_ignore_derivatives(U, scale):
    other = U.copy()
    other[10:50] = scale * np.roll(U[10:50], 7) + 0.1
    for f in (assemble_A0, assemble_Aa):
        assert np.array_equal(f(U[:10], U[50:], EOS), f(other[:10], other[50:], EOS))


# ---------------------------------------------------------------- quadratic terms H


def test_H_vanishes_for_constant_metric():
    assert np.all(quadratic_terms_H(ETA + 0.1, np.zeros((4, 4, 4))) == 0)


@given(admissible_states(), st.sampled_from([2.0, 3.0, 0.5]))
def test_H_is_quadratic(U, lam):
    g = metric_of(U[:10])
    dg = unpack(np.concatenate([U[None, 10:20], U[20:50].reshape(3, 10)]))
    H1 = quadratic_terms_H(g, dg)
    H2 = quadratic_terms_H(g, lam * dg)
    assert np.max(np.abs(H2 - lam**2 * H1)) <= 1e-12 * max(1.0, np.max(np.abs(H2)))


_C = sp.symbols("t x y z")


def _random_symbolic_metric(seed):
    rng = np.random.default_rng(seed)
    eta = [-1, 1, 1, 1]
    G = sp.zeros(4, 4)
    t, x, y, z = _C
    for i in range(4):
        for j in range(i, 4):
            c = [sp.Rational(int(k), 20) for k in rng.integers(-3, 4, size=4)]
            G[i, j] = G[j, i] = (eta[i] if i == j else 0) + c[0] * sp.sin(t + 2 * x) + c[1] * y * z \
                + c[2] * sp.cos(x - z) + c[3] * t**2
    return G


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_H_matches_symbolic_ricci_identity(seed):
    """Closed form against ``g^mn d_m d_n g + 2 R - d_a F_b - d_b F_a`` from exact derivatives."""
    G = _random_symbolic_metric(seed)
    pt = dict(zip(_C, (0.3, -0.2, 0.5, 0.1)))

    def ev(e):
        return float(sp.sympify(e).subs(pt))

    g = np.array([[ev(G[a, b]) for b in range(4)] for a in range(4)])
    dg = np.array([[[ev(sp.diff(G[a, b], _C[c])) for b in range(4)] for a in range(4)] for c in range(4)])
    ddg = np.array([[[[ev(sp.diff(G[a, b], _C[c], _C[d])) for b in range(4)] for a in range(4)]
                     for d in range(4)] for c in range(4)])
    gi = np.linalg.inv(g)
    low = 0.5 * (np.einsum("mln->lmn", dg) + np.einsum("nlm->lmn", dg) - dg)
    dlow = 0.5 * (np.einsum("cmln->clmn", ddg) + np.einsum("cnlm->clmn", ddg) - ddg)
    dgi = -np.einsum("ai,bj,cij->cab", gi, gi, dg)
    gam = np.einsum("me,ebc->mbc", gi, low)
    dgam = np.einsum("cme,ebd->cmbd", dgi, low) + np.einsum("me,cebd->cmbd", gi, dlow)
    R = (np.einsum("mmbc->bc", dgam) - np.einsum("cmbm->bc", dgam)
         + np.einsum("mml,lbc->bc", gam, gam) - np.einsum("mcl,lbm->bc", gam, gam))
    dF = np.einsum("cmn,bmn->cb", dgi, low) + np.einsum("mn,cbmn->cb", gi, dlow)
    oracle = np.einsum("mn,mnab->ab", gi, ddg) + 2 * R - dF - dF.T
    assert np.max(np.abs(oracle - _quadratic_full(gi, dg))) < 1e-12


def _analytic_fields(grid, kind):
    x = grid.coords()[..., 0]
    g = np.broadcast_to(ETA, grid.shape + (4, 4)).copy()
    dt = np.zeros_like(g)
    dtt = np.zeros_like(g)
    if kind == "wave":
        ph = 0.1 * np.sin(x - 0.4)
        g[..., 0, 0] += ph
        g[..., 2, 3] = g[..., 3, 2] = 0.5 * ph
        dt[..., 0, 0] = -0.1 * np.cos(x - 0.4)
        dt[..., 2, 3] = dt[..., 3, 2] = 0.5 * dt[..., 0, 0]
        dtt[..., 0, 0] = -ph
        dtt[..., 2, 3] = dtt[..., 3, 2] = -0.5 * ph
    elif kind == "shift":
        g[..., 0, 1] = g[..., 1, 0] = 0.1 * np.cos(x)
        g[..., 1, 1] = 1 + 0.2 * np.sin(x) ** 2
        dt[..., 2, 2] = 0.05 * np.sin(2 * x)
        dtt[..., 3, 3] = 0.05 * np.cos(x)
    else:
        g[..., 1, 1] = (1 + 0.1 * np.sin(x)) ** 2
        g[..., 0, 0] = -(1 + 0.1 * np.cos(x))
        dt[..., 0, 1] = dt[..., 1, 0] = 0.05 * np.cos(x)
    return g, dt, dtt


@pytest.mark.parametrize("kind", ["wave", "shift", "slice"])
def test_H_matches_finite_difference_oracle(kind):
    errs = []
    for n in (32, 64, 128):
        grid = line_grid(n)
        g, dt, dtt = _analytic_fields(grid, kind)
        dg = np.concatenate([dt[..., None, :, :], grid.gradient(g)], axis=-3)
        # closed form on exact first derivatives
        x = grid.coords()[..., 0]
        dg_exact = dg.copy()
        dg_exact[..., 1, :, :] = _exact_dx(kind, x)
        errs.append(np.max(np.abs(quadratic_terms_H(g, dg_exact) - h_identity_oracle(g, dt, dtt, grid))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 4) < 0.4)


def _exact_dx(kind, x):
    out = np.zeros(x.shape + (4, 4))
    if kind == "wave":
        d = 0.1 * np.cos(x - 0.4)
        out[..., 0, 0] = d
        out[..., 2, 3] = out[..., 3, 2] = 0.5 * d
    elif kind == "shift":
        out[..., 0, 1] = out[..., 1, 0] = -0.1 * np.sin(x)
        out[..., 1, 1] = 0.4 * np.sin(x) * np.cos(x)
    else:
        out[..., 1, 1] = 0.2 * (1 + 0.1 * np.sin(x)) * np.cos(x)
        out[..., 0, 0] = 0.1 * np.sin(x)
    return out


# ---------------------------------------------------------------- matter source


def test_source_vanishes_in_vacuum():
    rng = np.random.default_rng(4)
    U = random_states(50, rng)
    _, u = fluid_of(U[:, 50:], EOS)
    assert np.all(source_f(U[:, :10], make_W(np.zeros(50), u, EOS), EOS) == 0)


def test_source_hand_value():
    f = source_f(np.zeros(10), make_W(0.1, E0, EOS), EOS)
    assert f[0] == pytest.approx(8 * np.pi * 0.01 * 1.03, rel=1e-13)
    assert f[0] == pytest.approx(0.2588, abs=1e-4)


def test_source_continuous_at_vacuum_boundary():
    # f is O(w^2) as w -> 0+, so it meets the vacuum value 0 continuously
    w = 10.0 ** -np.arange(2, 9)
    f = source_f(np.zeros((len(w), 10)), make_W(w, np.broadcast_to(E0, (len(w), 4)), EOS), EOS)[:, 0]
    assert np.allclose(f / w**2, 8 * np.pi, rtol=1e-3)
    assert abs(f[-1]) < 1e-14


# ---------------------------------------------------------------- grid right-hand side


def _smooth_state(grid, seed=0, amp=0.05):
    """Smooth periodic state with all blocks populated."""
    rng = np.random.default_rng(seed)
    X = grid.coords()
    phase = X @ rng.uniform(0.5, 1.5, 3)
    U = np.zeros(grid.shape + (N_STATE,))
    modes = rng.normal(size=(2, N_STATE))
    U[:] = amp * (np.sin(phase)[..., None] * modes[0] + np.cos(2 * phase)[..., None] * modes[1])
    v = U[..., :10]
    w = 0.2 + 0.05 * np.sin(phase)
    u = normalized_velocity(metric_of(v), 0.1 * U[..., 51:54] / amp)
    return pack_state(v, U[..., 10:20], U[..., 20:50], w, u, EOS)


def _periodic_grid(n=16):
    return GridSpec((n, n, 1), (2 * np.pi, 2 * np.pi, 1.0))


def test_rhs_of_vacuum_is_zero():
    grid = line_grid(16)
    assert np.all(assemble_rhs(np.zeros(grid.shape + (55,)), EOS, grid) == 0)


def test_rhs_matches_block_system_pointwise():
    grid = _periodic_grid()
    U = _smooth_state(grid)
    rhs = assemble_rhs(U, EOS, grid)
    dU = np.stack([grid.diff(U, a) for a in range(3)], axis=-2)
    for p in [(0, 0, 0), (3, 7, 0), (11, 2, 0)]:
        sys_ = assemble_block_system(U[p], EOS)
        ref = sys_.rhs(U[p], dU[p])
        assert np.max(np.abs(ref - rhs[p])) < 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_rhs_unnormalized_equivalence():
    grid = _periodic_grid()
    U = _smooth_state(grid, seed=1)
    rhs, parts = assemble_rhs(U, EOS, grid, return_parts=True)
    raw = rhs_unnormalized(U, EOS, grid)
    scale = np.ones(grid.shape + (55,))
    scale[..., 10:50] = 1.0 / parts.lapse[..., None]
    assert np.max(np.abs(raw * scale - rhs)) < 1e-12


def test_pure_fluid_block_matches_fluid_matrices():
    grid = _periodic_grid()
    U = _smooth_state(grid, seed=2)
    U[..., :50] = 0.0
    rhs = assemble_rhs(U, EOS, grid)
    w, u = fluid_of(U[..., 50:], EOS)
    A = fluid_matrices(ETA, w, u, EOS).A
    Wp = np.concatenate([w[..., None], u], axis=-1)
    ref = -sum(np.einsum("...ij,...j->...i", A[..., a + 1, :, :], grid.diff(Wp, a)) for a in range(3))
    D = np.array([EOS.kappa0, 1, 1, 1, 1])
    assert np.max(np.abs(D * rhs[..., 50:] - ref)) < 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_linearized_wave_operator():
    grid = line_grid(256)
    x = grid.coords()[..., 0]
    T = pack(np.array([[1.0, 0, 0, 0], [0, -1, 0, 0], [0, 0, 0, 0.5], [0, 0, 0.5, 0]]))
    out = []
    for A in (1e-6, 2e-6):
        U = np.zeros(grid.shape + (55,))
        U[..., :10] = A * np.sin(x)[..., None] * T
        U[..., 20:30] = A * np.cos(x)[..., None] * T
        U[..., 50:55] = make_W(0.0, normalized_velocity(metric_of(U[..., :10]), np.zeros(grid.shape + (3,))), EOS)
        rhs = assemble_rhs(U, EOS, grid)
        out.append(np.max(np.abs(rhs[..., 10:20] - (-A * np.sin(x))[..., None] * T)))
    assert out[0] < 1e-11
    # the residual is dominated by O(A^2) terms and discretization error
    assert out[1] < 5 * out[0]


def test_linear_rhs_reduces_to_direct():
    grid = _periodic_grid()
    U = _smooth_state(grid, seed=3)
    assert np.max(np.abs(assemble_linear_rhs(U, U, EOS, grid) - assemble_rhs(U, EOS, grid))) < 1e-13


def test_linear_rhs_is_affine_in_unknown():
    grid = _periodic_grid()
    Uc = _smooth_state(grid, seed=4)
    a, b = _smooth_state(grid, seed=5), _smooth_state(grid, seed=6)
    f = lambda U: assemble_linear_rhs(U, Uc, EOS, grid)
    z = np.zeros_like(a)
    lhs = f(a + 2 * b) - f(z)
    rhs = (f(a) - f(z)) + 2 * (f(b) - f(z))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_solve_A0_inverts_blocks():
    grid = _periodic_grid(8)
    U = _smooth_state(grid, seed=7)
    rhs, parts = assemble_rhs(U, EOS, grid, return_parts=True)
    dU = solve_A0(rhs, parts)
    A0 = assemble_A0(U[..., :10], U[..., 50:], EOS)
    assert np.max(np.abs(np.einsum("...ij,...j->...i", A0, dU) - rhs)) < 1e-12
    assert np.array_equal(time_derivative(U, EOS, grid), dU)


def test_block_system_dump(tmp_path):
    sys_ = assemble_block_system(random_states(1, np.random.default_rng(8))[0], EOS)
    paths = sys_.dump_csv(tmp_path)
    assert len(paths) == 9
    assert np.array_equal(np.loadtxt(tmp_path / "A0.csv", delimiter=","), sys_.A0)
    assert sys_.B.shape == (55, 50) and sys_.F.shape == (55,)
