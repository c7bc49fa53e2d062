"""Lorentzian metric algebra on grids.

Symmetric tensors are stored as 10 packed components in the order
``00 01 02 03 11 12 13 22 23 33`` so that symmetry is structural. The helpers
``unpack``/``pack`` convert to and from full ``4x4`` arrays.

Derivative arrays use the layout ``dg[..., c, a, b] = d_c g_ab`` with ``c = 0``
the time derivative. Time derivatives are never differenced from history; they
are always passed in as fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMetric
from .grid import GridSpec

SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
SYM_INDEX = np.zeros((4, 4), dtype=int)
for _k, (_a, _b) in enumerate(SYM_PAIRS):
    SYM_INDEX[_a, _b] = SYM_INDEX[_b, _a] = _k

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])
ETA_PACKED = np.array([-1.0, 0, 0, 0, 1.0, 0, 0, 1.0, 0, 1.0])

DET_THRESHOLD = 1e-14


def unpack(comps: np.ndarray) -> np.ndarray:
    """Packed ``(..., 10)`` to full symmetric ``(..., 4, 4)``."""
    return comps[..., SYM_INDEX]


def pack(full: np.ndarray) -> np.ndarray:
    """Upper triangle of ``(..., 4, 4)`` to packed ``(..., 10)``."""
    rows = [a for a, _ in SYM_PAIRS]
    cols = [b for _, b in SYM_PAIRS]
    return full[..., rows, cols]


@dataclass(frozen=True)
class SpacetimeMetric:
    """Metric field ``g_ab`` as packed components on a grid."""

    comps: np.ndarray
    grid: GridSpec | None = None

    def __post_init__(self):
        if self.comps.shape[-1] != 10:
            raise ValueError("packed metric needs 10 components on the last axis")

    @classmethod
    def from_full(cls, g: np.ndarray, grid: GridSpec | None = None) -> "SpacetimeMetric":
        return cls(pack(np.asarray(g, dtype=float)), grid)

    @classmethod
    def minkowski(cls, grid: GridSpec) -> "SpacetimeMetric":
        return cls(np.broadcast_to(ETA_PACKED, grid.shape + (10,)).copy(), grid)

    def full(self) -> np.ndarray:
        return unpack(self.comps)


@dataclass(frozen=True)
class Christoffel:
    """``gamma[..., mu, b, c] = Gamma^mu_bc``, symmetric in the last two axes."""

    gamma: np.ndarray


def _as_full(g) -> np.ndarray:
    if isinstance(g, SpacetimeMetric):
        return g.full()
    g = np.asarray(g, dtype=float)
    if g.shape[-1] == 10:
        return unpack(g)
    return g


def _first_bad(mask: np.ndarray):
    idx = np.argwhere(mask)
    return tuple(int(i) for i in idx[0]) if len(idx) else ()


def invert_metric(g, threshold: float = DET_THRESHOLD) -> np.ndarray:
    """Pointwise inverse ``g^ab``, exactly symmetric.

    Raises ``SingularMetric`` at the first point with ``|det g| <= threshold``.
    """
    full = _as_full(g)
    det = np.linalg.det(full)
    bad = ~(np.abs(det) > threshold)
    if np.any(bad):
        point = _first_bad(bad)
        raise SingularMetric(point, float(det[point]) if point else float(det))
    inv = np.linalg.inv(full)
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def metric_derivatives(g, dt_g, grid: GridSpec) -> np.ndarray:
    """Assemble ``dg[..., c, a, b]``: supplied time derivative plus spatial differences."""
    full = _as_full(g)
    dt_full = _as_full(dt_g)
    spatial = grid.gradient(full)  # (..., 3, 4, 4)
    return np.concatenate([dt_full[..., None, :, :], spatial], axis=-3)


def christoffel_lower(dg: np.ndarray) -> np.ndarray:
    """``Gamma_{l m n} = (d_m g_ln + d_n g_lm - d_l g_mn) / 2`` in any dimension."""
    a = np.swapaxes(dg, -3, -2)  # a[..., l, m, n] = d_m g_ln
    first = a + np.swapaxes(a, -1, -2)
    return 0.5 * (first - dg)


def christoffel_from_derivs(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``Gamma^mu_bc`` from the inverse metric and first derivatives."""
    low = christoffel_lower(dg)
    up = np.einsum("...me,...ebc->...mbc", ginv, low)
    return 0.5 * (up + np.swapaxes(up, -1, -2))


def christoffel(g, dt_g, grid: GridSpec) -> Christoffel:
    """Christoffel symbols of a metric field with finite-difference spatial derivatives."""
    ginv = invert_metric(g)
    dg = metric_derivatives(g, dt_g, grid)
    return Christoffel(christoffel_from_derivs(ginv, dg))


def inverse_derivatives(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``d_c g^ab = -g^ai g^bj d_c g_ij``."""
    return -np.einsum("...ai,...bj,...cij->...cab", ginv, ginv, dg)


def harmonic_residual(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gauge source ``F^mu = g^bc Gamma^mu_bc``."""
    gam = christoffel_from_derivs(ginv, dg)
    return np.einsum("...bc,...mbc->...m", ginv, gam)


def harmonic_residual_lower(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``F_b = g^mn Gamma_bmn``."""
    return np.einsum("...mn,...bmn->...b", ginv, christoffel_lower(dg))


def second_derivatives(g, dt_g, dtt_g, grid: GridSpec) -> np.ndarray:
    """``ddg[..., c, d, a, b] = d_c d_d g_ab`` by finite differences.

    Mixed time-space entries difference the supplied ``dt_g``; the pure time
    entry is ``dtt_g``.
    """
    full = _as_full(g)
    dt_full = _as_full(dt_g)
    dtt_full = _as_full(dtt_g)
    shape = full.shape[:-2] + (4, 4, 4, 4)
    ddg = np.empty(shape)
    ddg[..., 0, 0, :, :] = dtt_full
    grad_t = grid.gradient(dt_full)
    grad = grid.gradient(full)
    for a in range(3):
        ddg[..., 0, a + 1, :, :] = grad_t[..., a, :, :]
        ddg[..., a + 1, 0, :, :] = grad_t[..., a, :, :]
        for b in range(3):
            ddg[..., a + 1, b + 1, :, :] = grid.diff(grad[..., b, :, :], a)
    return ddg


def ricci_oracle(g, dt_g, dtt_g, grid: GridSpec) -> np.ndarray:
    """Ricci tensor by contraction of differenced Christoffel symbols.

    Spatial derivatives of Gamma are taken by differencing the Gamma field
    itself; the time derivative follows from the chain rule on the supplied
    ``dt_g`` and ``dtt_g``. Only interior points are meaningful on frozen grids.
    """
    full = _as_full(g)
    ginv = invert_metric(full)
    dg = metric_derivatives(full, dt_g, grid)
    gam = christoffel_from_derivs(ginv, dg)

    dt_full = _as_full(dt_g)
    dtt_full = _as_full(dtt_g)
    # d_c (d_t g) for c = t, x, y, z
    d_dtg = np.concatenate([dtt_full[..., None, :, :], grid.gradient(dt_full)], axis=-3)
    dt_low = christoffel_lower(d_dtg)
    dt_ginv = -np.einsum("...ai,...bj,...ij->...ab", ginv, ginv, dt_full)
    dt_gam = np.einsum("...me,...ebc->...mbc", dt_ginv, christoffel_lower(dg)) + np.einsum(
        "...me,...ebc->...mbc", ginv, dt_low
    )
    dgam = np.concatenate([dt_gam[..., None, :, :, :], grid.gradient(gam)], axis=-4)

    ricci = (
        np.einsum("...mmbc->...bc", dgam)
        - np.einsum("...cmbm->...bc", dgam)
        + np.einsum("...mml,...lbc->...bc", gam, gam)
        - np.einsum("...mcl,...lbm->...bc", gam, gam)
    )
    return 0.5 * (ricci + np.swapaxes(ricci, -1, -2))


def lower_index(u: np.ndarray, g) -> np.ndarray:
    return np.einsum("...ab,...b->...a", _as_full(g), u)


def raise_index(xi: np.ndarray, g) -> np.ndarray:
    return np.einsum("...ab,...b->...a", invert_metric(g), xi)


def signature_ok(g, sample: int | None = None, rng=None) -> bool:
    """True when the sampled points have eigenvalue signs ``(-, +, +, +)``."""
    full = _as_full(g).reshape(-1, 4, 4)
    if sample is not None and sample < len(full):
        rng = np.random.default_rng(rng)
        full = full[rng.choice(len(full), size=sample, replace=False)]
    eig = np.linalg.eigvalsh(full)
    return bool(np.all(eig[:, 0] < 0) and np.all(eig[:, 1:] > 0))
