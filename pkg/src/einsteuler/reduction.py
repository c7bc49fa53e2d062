"""Coupled first-order Einstein-Euler system in harmonic gauge.

State layout (55 components per point)::

    0..9    v      = g - eta                  (packed symmetric)
    10..19  dtv    = h_{ab0} = d_t g_ab
    20..49  dxv    = h_{abc}, c = 1..3, a-major (10 components per direction)
    50..54  W      = (kappa0 w, u^al - e0^al)

The Makino entry is stored rescaled by ``kappa0 = kappa(w=0)`` so that the
coefficient matrix of the time derivative is exactly the identity at the flat,
empty, rest-frame state (see ``fluid.scaled_fluid_matrices``).

The system reads ``A0 d_t U = (A^a + C^a) d_a U + B (v, dtv, dxv) + F`` with
``A0`` and ``A^a`` depending only on ``(v, W)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IndefiniteA0, SingularLapse
from .fluid import EquationOfState, christoffel_term, scaled_fluid_matrices
from .geometry import (
    ETA,
    _as_full,
    _first_bad,
    christoffel_from_derivs,
    christoffel_lower,
    invert_metric,
    pack,
    unpack,
)
from .grid import GridSpec
from .io import write_matrix_csv

N_STATE = 55
I_V = slice(0, 10)
I_DT = slice(10, 20)
I_DX = slice(20, 50)
I_W = slice(50, 55)
LAPSE_THRESHOLD = 1e-10

COMPONENT_NAMES = (
    [f"v{a}{b}" for a, b in ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))]
)
COMPONENT_NAMES = (
    COMPONENT_NAMES
    + ["dt_" + n for n in COMPONENT_NAMES]
    + [f"d{c}_" + n for c in "xyz" for n in COMPONENT_NAMES]
    + ["w_scaled", "du0", "du1", "du2", "du3"]
)


def dx_slice(a: int) -> slice:
    """Slice of the ``d_a v`` block, ``a`` in 0..2 for x, y, z."""
    return slice(20 + 10 * a, 30 + 10 * a)


# ---------------------------------------------------------------- state helpers


@dataclass(frozen=True)
class SystemState:
    """Wrapper around a ``(..., 55)`` array with named views."""

    U: np.ndarray

    @classmethod
    def from_parts(cls, v, dtv, dxv, w, u, eos: EquationOfState) -> "SystemState":
        return cls(pack_state(v, dtv, dxv, w, u, eos))

    @property
    def v(self):
        return self.U[..., I_V]

    @property
    def dtv(self):
        return self.U[..., I_DT]

    @property
    def dxv(self):
        return self.U[..., I_DX].reshape(self.U.shape[:-1] + (3, 10))

    @property
    def W(self):
        return self.U[..., I_W]


def pack_state(v, dtv, dxv, w, u, eos: EquationOfState) -> np.ndarray:
    """Assemble ``U`` from packed metric parts, ``w`` and the four-velocity."""
    v = np.asarray(v, dtype=float)
    lead = v.shape[:-1]
    U = np.empty(lead + (N_STATE,))
    U[..., I_V] = v
    U[..., I_DT] = dtv
    U[..., I_DX] = np.asarray(dxv, dtype=float).reshape(lead + (30,))
    U[..., 50] = eos.kappa0 * np.asarray(w, dtype=float)
    U[..., 51:55] = np.asarray(u, dtype=float) - np.array([1.0, 0.0, 0.0, 0.0])
    return U


def make_W(w, u, eos: EquationOfState) -> np.ndarray:
    du = np.asarray(u, dtype=float) - np.array([1.0, 0, 0, 0])
    w = np.broadcast_to(np.asarray(w, dtype=float), du.shape[:-1])
    return np.concatenate([(eos.kappa0 * w)[..., None], du], axis=-1)


def metric_of(v) -> np.ndarray:
    return ETA + unpack(np.asarray(v, dtype=float))


def fluid_of(W, eos: EquationOfState):
    """``(w, u)`` from the ``W`` block."""
    W = np.asarray(W, dtype=float)
    return W[..., 0] / eos.kappa0, W[..., 1:5] + np.array([1.0, 0.0, 0.0, 0.0])


def derivs_of(U) -> np.ndarray:
    """``dg[..., c, a, b]`` from the evolved first derivatives."""
    U = np.asarray(U)
    lead = U.shape[:-1]
    packed = np.concatenate([U[..., None, I_DT], U[..., I_DX].reshape(lead + (3, 10))], axis=-2)
    return unpack(packed)


def lapse_factor(ginv) -> np.ndarray:
    """``-g^00``, checked against the singular-lapse threshold."""
    m = -ginv[..., 0, 0]
    bad = ~(m > LAPSE_THRESHOLD)
    if np.any(bad):
        point = _first_bad(bad)
        raise SingularLapse(point, float(-m[point]) if point else float(-m))
    return m


# ---------------------------------------------------------------- principal part


def _check_definite(A0, t=None):
    eig = np.linalg.eigvalsh(A0)
    bad = ~(eig[..., 0] > 0)
    if np.any(bad):
        point = _first_bad(bad)
        raise IndefiniteA0(point, float(eig[point + (0,)] if point else eig[0]), t)
    return eig


def assemble_A0(v, W, eos: EquationOfState, check: bool = True) -> np.ndarray:
    """Block-diagonal ``A0 = diag(I10, I10, a33, a44)``."""
    g = metric_of(v)
    ginv = invert_metric(g)
    lapse = lapse_factor(ginv)
    w, u = fluid_of(W, eos)
    lead = g.shape[:-2]
    A0 = np.zeros(lead + (N_STATE, N_STATE))
    idx = np.arange(20)
    A0[..., idx, idx] = 1.0
    gs = ginv[..., 1:, 1:] / lapse[..., None, None]
    A0[..., I_DX, I_DX] = np.einsum("...ab,ij->...aibj", gs, np.eye(10)).reshape(lead + (30, 30))
    A0[..., I_W, I_W] = scaled_fluid_matrices(g, w, u, eos, check=check)[..., 0, :, :]
    if check:
        _check_definite(A0)
    return A0


def constant_Ca() -> np.ndarray:
    """``C^a``: identity coupling between the ``dtv`` and ``d_a v`` blocks."""
    C = np.zeros((3, N_STATE, N_STATE))
    eye = np.eye(10)
    for a in range(3):
        C[a, I_DT, dx_slice(a)] = eye
        C[a, dx_slice(a), I_DT] = eye
    return C


def assemble_Aa(v, W, eos: EquationOfState, check: bool = True) -> np.ndarray:
    """``A^a = (a22^a - c22^a) (+) (-fluid A^a)``, shape ``(..., 3, 55, 55)``."""
    g = metric_of(v)
    ginv = invert_metric(g)
    lapse = lapse_factor(ginv)
    w, u = fluid_of(W, eos)
    lead = g.shape[:-2]
    Aa = np.zeros(lead + (3, N_STATE, N_STATE))
    eye = np.eye(10)
    gn = ginv / lapse[..., None, None]
    for a in range(3):
        blk = Aa[..., a, :, :]
        blk[..., I_DT, I_DT] = 2.0 * gn[..., a + 1, 0, None, None] * eye
        for b in range(3):
            coup = gn[..., a + 1, b + 1, None, None] * eye
            if a == b:
                coup = coup - eye
            blk[..., I_DT, dx_slice(b)] = coup
            blk[..., dx_slice(b), I_DT] = coup
    fl = scaled_fluid_matrices(g, w, u, eos, check=check)
    Aa[..., I_W, I_W] = -fl[..., 1:, :, :]
    return Aa


# ---------------------------------------------------------------- lower order


def _quadratic_full(ginv, dg) -> np.ndarray:
    """Harmonic-gauge quadratic remainder as a full ``(..., 4, 4)`` array.

    With ``Gamma_lmn`` the lowered Christoffel symbols and ``d_c g^ab`` the
    derivative of the inverse metric, ``2 sym(q)`` where

        q_mn = d_l g^lk Gamma_kmn - 1/2 d_n g^lk d_m g_lk
               - sym(d_m g^ab d_a g_nb - 1/2 d_m g^ab d_n g_ab)
               + Gamma^l_ls Gamma^s_mn - Gamma^l_ns Gamma^s_ml

    Contractions are written as batched matrix products.
    """
    lead = dg.shape[:-3]
    nl = len(lead)
    low = christoffel_lower(dg)
    L = low.reshape(lead + (4, 16))
    gam = (ginv @ L).reshape(lead + (4, 4, 4))
    dginv = -((ginv[..., None, :, :] @ dg) @ ginv[..., None, :, :])  # [c, a, b] = d_c g^ab
    A = dginv.reshape(lead + (4, 16))
    D = dg.reshape(lead + (4, 16))

    t1 = (np.einsum("...llk->...k", dginv)[..., None, :] @ L).reshape(lead + (4, 4))
    t2 = -0.5 * (D @ np.swapaxes(A, -1, -2))
    dg_anb = dg.transpose(*range(nl), nl, nl + 2, nl + 1).reshape(lead + (16, 4))  # [(a, b), n] = d_a g_nb
    x = A @ dg_anb - 0.5 * (A @ np.swapaxes(D, -1, -2))
    t3 = -0.5 * (x + np.swapaxes(x, -1, -2))
    t4 = (np.einsum("...lls->...s", gam)[..., None, :] @ gam.reshape(lead + (4, 16))).reshape(lead + (4, 4))
    g_nls = gam.transpose(*range(nl), nl + 1, nl, nl + 2).reshape(lead + (4, 16))  # [n, (l, s)] = Gamma^l_ns
    g_mls = gam.transpose(*range(nl), nl + 1, nl + 2, nl).reshape(lead + (4, 16))  # [m, (l, s)] = Gamma^s_ml
    t5 = -(g_mls @ np.swapaxes(g_nls, -1, -2))
    q = t1 + t2 + t3 + t4 + t5
    return q + np.swapaxes(q, -1, -2)  # 2 * symmetric part


def quadratic_terms_H(g, dg) -> np.ndarray:
    """Packed ``H_ab = g^mn d_m d_n g_ab + 2 R_ab`` when ``F^mu = 0``.

    Closed form in the first derivatives ``dg[..., c, a, b] = d_c g_ab``:
    quadratic in ``dg`` and rational in ``g``. For a general metric the same
    expression equals ``g^mn d_m d_n g_ab + 2 R_ab - d_a F_b - d_b F_a`` with
    ``F_b = g^mn Gamma_bmn``.
    """
    ginv = invert_metric(g)
    return pack(_quadratic_full(ginv, np.asarray(dg, dtype=float)))


def h_identity_oracle(g, dt_g, dtt_g, grid: GridSpec) -> np.ndarray:
    """Packed ``g^mn d_m d_n g + 2 R - d_(a F_b)`` by finite differences.

    Independent route to ``quadratic_terms_H`` through ``ricci_oracle``.
    """
    from .geometry import metric_derivatives, ricci_oracle, second_derivatives

    full = _as_full(g)
    ginv = invert_metric(full)
    ddg = second_derivatives(full, dt_g, dtt_g, grid)
    wave = np.einsum("...mn,...mnab->...ab", ginv, ddg)
    ric = ricci_oracle(full, dt_g, dtt_g, grid)
    dg = metric_derivatives(full, dt_g, grid)
    F = np.einsum("...mn,...bmn->...b", ginv, christoffel_lower(dg))
    # time derivative of F_b by the chain rule
    dt_full = _as_full(dt_g)
    d_dtg = np.concatenate([_as_full(dtt_g)[..., None, :, :], grid.gradient(dt_full)], axis=-3)
    dt_ginv = -np.einsum("...ai,...bj,...ij->...ab", ginv, ginv, dt_full)
    dtF = np.einsum("...mn,...bmn->...b", dt_ginv, christoffel_lower(dg)) + np.einsum(
        "...mn,...bmn->...b", ginv, christoffel_lower(d_dtg)
    )
    dF = np.concatenate([dtF[..., None, :], grid.gradient(F)], axis=-2)  # [..., c, b]
    sym = dF + np.swapaxes(dF, -1, -2)
    return pack(wave + 2.0 * ric - sym)


def polarization(H, h, x):
    """Symmetric bilinear form of a quadratic map: ``(H(h+x) - H(h-x)) / 4``."""
    return 0.25 * (H(h + x) - H(h - x))


def matter_source(g, w, u, eos: EquationOfState) -> np.ndarray:
    """Packed ``w^beta ((1 - K w^2) g + 2 (1 + K w^2) u_a u_b)``.

    Negative ``w`` (possible only through discretization error) is clipped to
    zero before the fractional power.
    """
    full = _as_full(g)
    w = np.asarray(w, dtype=float)
    eps = np.maximum(w, 0.0) ** eos.beta
    kw2 = eos.K * w * w
    u_low = np.einsum("...ab,...b->...a", full, u)
    S = (1.0 - kw2)[..., None, None] * full + 2.0 * (1.0 + kw2)[..., None, None] * np.einsum(
        "...a,...b->...ab", u_low, u_low
    )
    return pack(eps[..., None, None] * S)


def source_f(v, W, eos: EquationOfState) -> np.ndarray:
    """``f = 8 pi S / (-g^00)``, the gravitational source of the ``dtv`` row."""
    g = metric_of(v)
    lapse = lapse_factor(invert_metric(g))
    w, u = fluid_of(W, eos)
    return 8.0 * np.pi * matter_source(g, w, u, eos) / lapse[..., None]


# ---------------------------------------------------------------- block system


@dataclass(frozen=True)
class BlockSystem:
    A0: np.ndarray
    Aa: np.ndarray
    Ca: np.ndarray
    B: np.ndarray
    F: np.ndarray

    def rhs(self, U, dU) -> np.ndarray:
        """``(A^a + C^a) dU[a] + B U[:50] + F`` at one point."""
        out = np.einsum("aij,aj->i", self.Aa + self.Ca, dU)
        return out + self.B @ np.asarray(U)[:50] + self.F

    def dump_csv(self, outdir) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = [write_matrix_csv(outdir / "A0.csv", self.A0)]
        for a in range(3):
            paths.append(write_matrix_csv(outdir / f"A{a + 1}.csv", self.Aa[a]))
            paths.append(write_matrix_csv(outdir / f"C{a + 1}.csv", self.Ca[a]))
        paths.append(write_matrix_csv(outdir / "B.csv", self.B))
        paths.append(write_matrix_csv(outdir / "F.csv", self.F[:, None]))
        return paths


def _h_to_dg(h40) -> np.ndarray:
    return unpack(np.asarray(h40).reshape(h40.shape[:-1] + (4, 10)))


def assemble_block_system(U, eos: EquationOfState) -> BlockSystem:
    """All coefficient matrices at a single point.

    ``B`` is built column by column: the ``dtv`` rows from the polarization of
    the quadratic map ``H`` around the current ``h``, and the ``W`` rows from
    the Christoffel contraction, which is linear in ``h``.
    """
    U = np.asarray(U, dtype=float)
    v, W = U[I_V], U[I_W]
    g = metric_of(v)
    ginv = invert_metric(g)
    lapse = float(lapse_factor(ginv))
    w, u = fluid_of(W, eos)
    A0 = assemble_A0(v, W, eos)
    Aa = assemble_Aa(v, W, eos)
    fl = scaled_fluid_matrices(g, w, u, eos)

    h = U[10:50]
    basis = np.eye(40)

    def Hmap(x):
        return pack(_quadratic_full(ginv, _h_to_dg(x)))

    B = np.zeros((N_STATE, 50))
    B[I_V, 10:20] = np.eye(10)
    B[I_DT, 10:50] = -polarization(Hmap, h, basis).T / lapse
    gam_cols = christoffel_from_derivs(ginv, _h_to_dg(basis))
    B[I_W, 10:50] = -christoffel_term(fl, gam_cols, u).T

    F = np.zeros(N_STATE)
    F[I_DT] = 8.0 * np.pi * matter_source(g, w, u, eos) / lapse
    return BlockSystem(A0, Aa, constant_Ca(), B, F)


# ---------------------------------------------------------------- grid rhs


@dataclass
class RhsParts:
    """Intermediate fields reused by monitors and solvers."""

    g: np.ndarray
    ginv: np.ndarray
    lapse: np.ndarray
    w: np.ndarray
    u: np.ndarray
    fluid: np.ndarray  # scaled 5x5 blocks, (..., 4, 5, 5)


def _spatial_derivs(grid: GridSpec, f):
    return [grid.diff(f, a) if a in grid.active else None for a in range(3)]


def _principal(U, grid: GridSpec, ginv, lapse, fl):
    """Derivative terms of ``A0 d_t U`` for the unknown ``U`` with frozen coefficients.

    Returns the ``dtv`` accumulator (not yet divided by ``-g^00``) and the
    full output with the ``v``, ``dxv`` and ``W`` rows filled.
    """
    lead = U.shape[:-1]
    dtv = U[..., I_DT]
    dxv = U[..., I_DX].reshape(lead + (3, 10))
    d_dtv = _spatial_derivs(grid, dtv)
    d_W = _spatial_derivs(grid, U[..., I_W])

    out = np.empty_like(U)
    out[..., I_V] = dtv
    acc = np.zeros(lead + (10,))
    for a in grid.active:
        acc += 2.0 * ginv[..., 0, a + 1, None] * d_dtv[a]
        for b in range(3):
            acc += ginv[..., a + 1, b + 1, None] * grid.diff(dxv[..., b, :], a)

    dx_out = np.zeros(lead + (3, 10))
    for b in range(3):
        for a in grid.active:
            dx_out[..., b, :] += ginv[..., b + 1, a + 1, None] * d_dtv[a]
    out[..., I_DX] = (dx_out / lapse[..., None, None]).reshape(lead + (30,))

    wacc = np.zeros(lead + (5,))
    for a in grid.active:
        wacc -= np.einsum("...ij,...j->...i", fl[..., a + 1, :, :], d_W[a])
    out[..., I_W] = wacc
    return acc, out


def assemble_rhs(U, eos: EquationOfState, grid: GridSpec, return_parts: bool = False):
    """Right-hand side ``A0 d_t U`` on a grid, with finite-difference ``d_a``."""
    U = np.asarray(U, dtype=float)
    g = metric_of(U[..., I_V])
    ginv = invert_metric(g)
    lapse = lapse_factor(ginv)
    w, u = fluid_of(U[..., I_W], eos)
    fl = scaled_fluid_matrices(g, w, u, eos)
    dg = derivs_of(U)

    acc, out = _principal(U, grid, ginv, lapse, fl)
    acc += -pack(_quadratic_full(ginv, dg)) + 8.0 * np.pi * matter_source(g, w, u, eos)
    out[..., I_DT] = acc / lapse[..., None]
    out[..., I_W] -= christoffel_term(fl, christoffel_from_derivs(ginv, dg), u)

    if return_parts:
        return out, RhsParts(g, ginv, lapse, w, u, fl)
    return out


def assemble_linear_rhs(U, Uc, eos: EquationOfState, grid: GridSpec, return_parts: bool = False):
    """``A0 d_t U`` for the linear system with coefficients frozen at ``Uc``.

    ``A0``, ``A^a`` and ``F`` are evaluated at ``Uc``; ``B(Uc)`` acts on the
    metric part of ``U``: the quadratic terms enter through their polarization
    ``S(h_c, h)`` and the Christoffel symbols are built from ``h`` with the
    metric and velocity of ``Uc``. For ``U = Uc`` this reduces to
    ``assemble_rhs`` up to rounding.
    """
    U = np.asarray(U, dtype=float)
    Uc = np.asarray(Uc, dtype=float)
    g = metric_of(Uc[..., I_V])
    ginv = invert_metric(g)
    lapse = lapse_factor(ginv)
    w, u = fluid_of(Uc[..., I_W], eos)
    fl = scaled_fluid_matrices(g, w, u, eos)
    dg_c = derivs_of(Uc)
    dg = derivs_of(U)

    def Hmap(x):
        return pack(_quadratic_full(ginv, x))

    acc, out = _principal(U, grid, ginv, lapse, fl)
    acc += -polarization(Hmap, dg_c, dg) + 8.0 * np.pi * matter_source(g, w, u, eos)
    out[..., I_DT] = acc / lapse[..., None]
    out[..., I_W] -= christoffel_term(fl, christoffel_from_derivs(ginv, dg), u)

    if return_parts:
        return out, RhsParts(g, ginv, lapse, w, u, fl)
    return out


def solve_A0(rhs, parts: RhsParts, t=None) -> np.ndarray:
    """Apply ``A0^-1`` blockwise: identity blocks free, Cholesky solves elsewhere."""
    dU = np.array(rhs, copy=True)
    lead = rhs.shape[:-1]
    gs = parts.ginv[..., 1:, 1:] / parts.lapse[..., None, None]
    A44 = parts.fluid[..., 0, :, :]
    try:
        Lg = np.linalg.cholesky(gs)
        La = np.linalg.cholesky(A44)
    except np.linalg.LinAlgError:
        eig = np.minimum(np.linalg.eigvalsh(gs)[..., 0], np.linalg.eigvalsh(A44)[..., 0])
        bad = ~(eig > 0)
        point = _first_bad(bad)
        raise IndefiniteA0(point, float(eig[point]), t) from None
    dx = rhs[..., I_DX].reshape(lead + (3, 10))
    dU[..., I_DX] = _cho_solve(Lg, dx).reshape(lead + (30,))
    dU[..., I_W] = _cho_solve(La, rhs[..., I_W, None])[..., 0]
    return dU


def _cho_solve(L, b):
    y = np.linalg.solve(L, b)
    return np.linalg.solve(np.swapaxes(L, -1, -2), y)


def time_derivative(U, eos: EquationOfState, grid: GridSpec, t=None) -> np.ndarray:
    rhs, parts = assemble_rhs(U, eos, grid, return_parts=True)
    return solve_A0(rhs, parts, t)


def linear_time_derivative(U, Uc, eos: EquationOfState, grid: GridSpec, t=None) -> np.ndarray:
    rhs, parts = assemble_linear_rhs(U, Uc, eos, grid, return_parts=True)
    return solve_A0(rhs, parts, t)


def rhs_unnormalized(U, eos: EquationOfState, grid: GridSpec) -> np.ndarray:
    """Right-hand side before dividing the wave rows by ``-g^00``.

    Uses the full contraction ``g^mn d_m h_n`` over all pairs except ``(0, 0)``,
    with ``d_t h_a`` replaced by ``d_a h_0``, as an independent arrangement of
    the wave operator.
    """
    U = np.asarray(U, dtype=float)
    lead = U.shape[:-1]
    g = metric_of(U[..., I_V])
    ginv = invert_metric(g)
    w, u = fluid_of(U[..., I_W], eos)
    dg = derivs_of(U)
    hp = np.concatenate([U[..., None, I_DT], U[..., I_DX].reshape(lead + (3, 10))], axis=-2)

    def d(mu, nu):
        # d_mu h_nu with the first-order compatibility d_t h_a = d_a h_0
        if mu == 0 and nu == 0:
            raise ValueError("second time derivative is the unknown")
        if mu == 0:
            return grid.diff(hp[..., 0, :], nu - 1)
        return grid.diff(hp[..., nu, :], mu - 1)

    wave = np.zeros(lead + (10,))
    for mu in range(4):
        for nu in range(4):
            if mu == 0 and nu == 0:
                continue
            wave += ginv[..., mu, nu, None] * d(mu, nu)
    out = np.empty_like(U)
    out[..., I_V] = U[..., I_DT]
    out[..., I_DT] = wave - pack(_quadratic_full(ginv, dg)) + 8.0 * np.pi * matter_source(g, w, u, eos)
    dx = np.zeros(lead + (3, 10))
    for b in range(3):
        for c in range(3):
            dx[..., b, :] += ginv[..., b + 1, c + 1, None] * grid.diff(hp[..., 0, :], c)
    out[..., I_DX] = dx.reshape(lead + (30,))
    out[..., I_W] = assemble_rhs(U, eos, grid)[..., I_W]
    return out
