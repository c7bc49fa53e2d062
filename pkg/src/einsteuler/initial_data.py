"""Initial data on the slice ``t = 0``: gauge completion, constraints, matter.

Spatial symmetric tensors are stored as 6 packed components in the order
``11 12 13 22 23 33``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .cutoffs import bump, plateau
from .errors import NotPositiveDefinite
from .fluid import EquationOfState
from .geometry import _first_bad, christoffel_lower, pack
from .grid import GridSpec

SYM3_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM3_INDEX = np.zeros((3, 3), dtype=int)
for _k, (_a, _b) in enumerate(SYM3_PAIRS):
    SYM3_INDEX[_a, _b] = SYM3_INDEX[_b, _a] = _k
DELTA3_PACKED = np.array([1.0, 0, 0, 1.0, 0, 1.0])


def unpack3(comps):
    return np.asarray(comps, dtype=float)[..., SYM3_INDEX]


def pack3(full):
    rows = [a for a, _ in SYM3_PAIRS]
    cols = [b for _, b in SYM3_PAIRS]
    return np.asarray(full)[..., rows, cols]


@dataclass(frozen=True)
class GeometricData:
    """Induced metric ``h_ab`` and extrinsic curvature ``K_ab`` (packed, 6 each)."""

    h: np.ndarray
    K: np.ndarray

    def h_full(self):
        return unpack3(self.h)

    def K_full(self):
        return unpack3(self.K)

    def h_inverse(self):
        """Inverse of ``h``; raises ``NotPositiveDefinite`` where Cholesky fails."""
        full = self.h_full()
        eig = np.linalg.eigvalsh(full)
        bad = ~(eig[..., 0] > 0)
        if np.any(bad):
            raise NotPositiveDefinite(_first_bad(bad), "spatial metric")
        inv = np.linalg.inv(full)
        return 0.5 * (inv + np.swapaxes(inv, -1, -2))


@dataclass(frozen=True)
class MatterData:
    """Energy density ``z`` and momentum density ``j^a`` seen by the slice normal."""

    z: np.ndarray
    j: np.ndarray


def complete_gauge_data(geo: GeometricData, grid: GridSpec, printed_shift_formula: bool = False):
    """Packed ``(g, d_t g)`` on the slice from ``(h, K)`` via the harmonic condition.

    ``g_00 = -1``, ``g_0a = 0``, ``g_ab = h_ab`` and

        d_t g_ab = -2 K_ab
        d_t g_00 = 2 h^ab K_ab
        d_t g_0c = h^ab d_a h_bc - (1/2) h^ab d_c h_ab

    The last line is what the vanishing of ``F_c`` requires. The alternative
    ``(1/2) h^ab (d_a h_bc - d_c h_ab)`` is available through
    ``printed_shift_formula`` for comparison; it leaves an O(1) gauge residual
    whenever ``h`` is not constant.
    """
    hinv = geo.h_inverse()
    hf = geo.h_full()
    Kf = geo.K_full()
    lead = hf.shape[:-2]
    dh = grid.gradient(hf)  # [..., c, a, b] = d_c h_ab
    first = np.einsum("...ab,...abc->...c", hinv, dh)
    second = np.einsum("...ab,...cab->...c", hinv, dh)
    if printed_shift_formula:
        dt_g0c = 0.5 * (first - second)
    else:
        dt_g0c = first - 0.5 * second

    g = np.zeros(lead + (4, 4))
    g[..., 0, 0] = -1.0
    g[..., 1:, 1:] = hf
    dtg = np.zeros(lead + (4, 4))
    dtg[..., 0, 0] = 2.0 * np.einsum("...ab,...ab->...", hinv, Kf)
    dtg[..., 0, 1:] = dt_g0c
    dtg[..., 1:, 0] = dt_g0c
    dtg[..., 1:, 1:] = -2.0 * Kf
    return pack(g), pack(dtg)


def _spatial_christoffel(hinv, dh):
    low = christoffel_lower(dh)
    up = np.einsum("...me,...ebc->...mbc", hinv, low)
    return 0.5 * (up + np.swapaxes(up, -1, -2))


def ricci_scalar3(geo: GeometricData, grid: GridSpec):
    """Scalar curvature of ``h`` from differenced Christoffel symbols."""
    hinv = geo.h_inverse()
    dh = grid.gradient(geo.h_full())
    gam = _spatial_christoffel(hinv, dh)
    dgam = grid.gradient(gam)  # [..., c, m, b, d] = d_c Gamma^m_bd
    ric = (
        np.einsum("...mmbd->...bd", dgam)
        - np.einsum("...dmbm->...bd", dgam)
        + np.einsum("...mml,...lbd->...bd", gam, gam)
        - np.einsum("...mdl,...lbm->...bd", gam, gam)
    )
    return np.einsum("...bd,...bd->...", hinv, ric)


def constraint_residuals(geo: GeometricData, matter: MatterData, grid: GridSpec):
    """Hamiltonian and momentum constraint residuals.

    ``R(h) - K_ab K^ab + (tr K)^2 - 16 pi z`` and
    ``D_b K^ab - D^a tr K + 8 pi j^a``.
    """
    hinv = geo.h_inverse()
    Kf = geo.K_full()
    K_up = np.einsum("...ac,...bd,...cd->...ab", hinv, hinv, Kf)
    trK = np.einsum("...ab,...ab->...", hinv, Kf)
    KK = np.einsum("...ab,...ab->...", Kf, K_up)
    ham = ricci_scalar3(geo, grid) - KK + trK**2 - 16.0 * np.pi * np.asarray(matter.z, dtype=float)

    gam = _spatial_christoffel(hinv, grid.gradient(geo.h_full()))
    dK = grid.gradient(K_up)  # [..., c, a, b]
    divK = (
        np.einsum("...bab->...a", dK)
        + np.einsum("...abc,...cb->...a", gam, K_up)
        + np.einsum("...bbc,...ac->...a", gam, K_up)
    )
    grad_tr = np.einsum("...ab,...b->...a", hinv, grid.gradient(trK))
    mom = divK - grad_tr + 8.0 * np.pi * np.asarray(matter.j, dtype=float)
    return ham, mom


def compatibility_map(w, u_bar, h, eos: EquationOfState, printed_energy_formula: bool = False):
    """Matter data ``(z, j)`` and slice ``u^0`` from the Makino variable and 3-velocity.

    With ``q = h_ab u^a u^b``, ``u^0 = sqrt(1 + q)``,
    ``j^a = w^beta (1 + K w^2) u^a sqrt(1 + q)`` and
    ``z = w^beta (1 + (1 + K w^2) q)``, the normal-normal projection of the
    stress tensor. ``printed_energy_formula`` selects
    ``w^beta (2 + K w^2) q`` instead, which vanishes for a comoving fluid.
    Returns ``(MatterData, u0)``.
    """
    w = np.asarray(w, dtype=float)
    ub = np.asarray(u_bar, dtype=float)
    hf = unpack3(h) if np.shape(h)[-1] == 6 else np.asarray(h, dtype=float)
    eps = w**eos.beta
    q = np.einsum("...ab,...a,...b->...", hf, ub, ub)
    u0 = np.sqrt(1.0 + q)
    enth = 1.0 + eos.K * w * w
    j = (eps * enth * u0)[..., None] * ub
    if printed_energy_formula:
        z = eps * (1.0 + enth) * q
    else:
        z = eps * (1.0 + enth * q)
    return MatterData(z, j), u0


def cutoff_chi(r, M: float):
    """Smooth cutoff: 1 on ``|x| <= M``, 0 on ``|x| >= M + 1``."""
    return plateau(r, M, M + 1.0)


def mollify(field, grid: GridSpec, width: float):
    """Convolve with a normalized compact bump kernel of radius ``width``."""
    active = grid.active
    if width <= 0 or not active:
        return np.array(field, dtype=float, copy=True)
    radii = [int(np.ceil(width / grid.spacing[a])) if a in active else 0 for a in range(3)]
    axes = [np.arange(-n, n + 1) * grid.spacing[a] for a, n in enumerate(radii)]
    mesh = np.meshgrid(*axes, indexing="ij")
    kern = bump(np.sqrt(sum(m * m for m in mesh)), width)
    total = kern.sum()
    if total == 0:
        return np.array(field, dtype=float, copy=True)
    kern = kern / total
    return fftconvolve(np.asarray(field, dtype=float), kern, mode="same")


def regularize_initial(w0, rho: float, M: float, grid: GridSpec, width: float | None = None):
    """``chi_M (w0 * phi + rho)``: smooth, positive inside ``|x| <= M``, zero beyond ``M + 1``.

    ``width`` is the mollifier radius, by default twice the grid spacing.
    """
    w0 = np.asarray(w0, dtype=float)
    if np.any(w0 < 0):
        raise ValueError("w0 must be nonnegative")
    if width is None:
        width = 2.0 * grid.h
    smooth = np.maximum(mollify(w0, grid, width), 0.0)
    return cutoff_chi(grid.radius(), M) * (smooth + rho)
