"""Perfect fluid with polytropic pressure in the Makino variable.

The Euler equations are written as a symmetric first-order system for
``W = (w, u^0, u^1, u^2, u^3)`` with coefficient matrices

    A^nu = [[kappa^2 u^nu,        sigma kappa P^nu_beta ],
            [sigma kappa P^nu_al, Gamma_{al beta} u^nu  ]]

where ``P = g + u u`` projects onto the rest space of ``u`` and
``Gamma = g + 2 u u`` reflects across it. ``kappa`` and ``sigma`` are smooth in
``w`` so the matrices stay bounded where the density vanishes.

Array conventions: ``g`` is ``(..., 4, 4)`` (or packed ``(..., 10)``), ``w`` is
``(...)`` and ``u`` is ``(..., 4)`` with the upper index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CausalityViolation,
    NegativeDensity,
    NegativeMakino,
    NonHyperbolic,
    NotNormalized,
    PastDirected,
)
from .geometry import _as_full, _first_bad, invert_metric

CAUSALITY_MARGIN = 1e-10
NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class EquationOfState:
    """Polytrope ``p = K eps^gamma``."""

    K: float
    gamma: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")

    @property
    def beta(self) -> float:
        """Exponent with ``eps = w**beta``."""
        return 2.0 / (self.gamma - 1.0)

    @property
    def kappa0(self) -> float:
        """``kappa`` at zero density."""
        return self.beta * np.sqrt(self.K * self.gamma)

    def pressure(self, eps):
        return self.K * np.asarray(eps, dtype=float) ** self.gamma


@dataclass(frozen=True)
class FluidState:
    """Makino variable and four-velocity on a grid."""

    w: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.w) < 0):
            raise NegativeMakino("Makino variable must be nonnegative")

    def validate(self, g, eos: EquationOfState, tol: float = NORMALIZATION_TOL) -> None:
        check_velocity(g, self.u, tol)
        check_causal(self.w, eos)


def makino_forward(eps, eos: EquationOfState):
    """``w = eps**((gamma-1)/2)``."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0):
        raise NegativeDensity("energy density must be nonnegative")
    return eps ** (0.5 * (eos.gamma - 1.0))


def makino_inverse(w, eos: EquationOfState):
    """``eps = w**(2/(gamma-1))``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise NegativeMakino("Makino variable must be nonnegative")
    return w ** eos.beta


def sound_speed(w, eos: EquationOfState):
    """``sigma = sqrt(gamma K) w``, the square root of ``dp/deps``."""
    return np.sqrt(eos.gamma * eos.K) * np.asarray(w, dtype=float)


def kappa_factor(w, eos: EquationOfState):
    w = np.asarray(w, dtype=float)
    return eos.kappa0 / (1.0 + eos.K * w * w)


def check_causal(w, eos: EquationOfState, margin: float = CAUSALITY_MARGIN) -> None:
    sig2 = sound_speed(w, eos) ** 2
    bad = sig2 > 1.0 - margin
    if np.any(bad):
        point = _first_bad(bad)
        raise CausalityViolation(point, float(sig2[point]) if point else float(sig2))


def normalization_drift(g, u):
    """``g(u, u) + 1`` pointwise."""
    return np.einsum("...ab,...a,...b->...", _as_full(g), u, u) + 1.0


def check_velocity(g, u, tol: float = NORMALIZATION_TOL) -> None:
    """Reject past-directed or unnormalized four-velocities."""
    u = np.asarray(u, dtype=float)
    past = u[..., 0] <= 0
    if np.any(past):
        raise PastDirected(_first_bad(past))
    drift = normalization_drift(g, u)
    bad = np.abs(drift) > tol
    if np.any(bad):
        point = _first_bad(bad)
        raise NotNormalized(point, float(drift[point]) if point else float(drift))


def normalized_velocity(g, spatial_u):
    """Future-directed ``u`` with given ``u^a`` and ``g(u,u) = -1``.

    Solves the quadratic for ``u^0``; requires ``g_00 < 0``.
    """
    full = _as_full(g)
    ua = np.asarray(spatial_u, dtype=float)
    a = full[..., 0, 0]
    b = 2.0 * np.einsum("...a,...a->...", full[..., 0, 1:], ua)
    c = np.einsum("...ab,...a,...b->...", full[..., 1:, 1:], ua, ua) + 1.0
    u0 = (-b - np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return np.concatenate([u0[..., None], ua], axis=-1)


def projection(g, u, check: bool = True):
    """Mixed rest-space projector ``P^nu_al = delta^nu_al + u^nu u_al``."""
    full = _as_full(g)
    if check:
        check_velocity(full, u)
    u_low = np.einsum("...ab,...b->...a", full, u)
    return np.eye(4) + np.einsum("...n,...a->...na", u, u_low)


def projection_lower(g, u):
    full = _as_full(g)
    u_low = np.einsum("...ab,...b->...a", full, u)
    return full + np.einsum("...a,...b->...ab", u_low, u_low)


def reflection(g, u, check: bool = True):
    """``Gamma_{al be} = g_{al be} + 2 u_al u_be``."""
    full = _as_full(g)
    if check:
        check_velocity(full, u)
    u_low = np.einsum("...ab,...b->...a", full, u)
    return full + 2.0 * np.einsum("...a,...b->...ab", u_low, u_low)


@dataclass(frozen=True)
class FluidBlockMatrices:
    """``A[..., nu, :, :]`` are the four 5x5 coefficient matrices."""

    A: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray

    def contract(self, xi):
        """``xi_nu A^nu``."""
        return np.einsum("...n,...nij->...ij", xi, self.A)


def _assemble(g_full, u, diag_coef, off_coef):
    """Shared builder: ``[[d u^nu, o P^nu_be], [o P^nu_al, Gamma u^nu]]``."""
    u_low = np.einsum("...ab,...b->...a", g_full, u)
    P = np.eye(4) + np.einsum("...n,...a->...na", u, u_low)
    refl = g_full + 2.0 * np.einsum("...a,...b->...ab", u_low, u_low)
    shape = u.shape[:-1] + (4, 5, 5)
    A = np.empty(shape)
    A[..., 0, 0] = diag_coef[..., None] * u
    off = off_coef[..., None, None] * P  # [..., nu, be]
    A[..., 0, 1:] = off
    A[..., 1:, 0] = off
    A[..., 1:, 1:] = refl[..., None, :, :] * u[..., :, None, None]
    return A


def fluid_matrices(g, w, u, eos: EquationOfState, check: bool = True) -> FluidBlockMatrices:
    """Symmetric coefficient matrices of the Euler system for ``(w, u)``."""
    full = _as_full(g)
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if check:
        check_causal(w, eos)
    kap = kappa_factor(w, eos)
    sig = sound_speed(w, eos)
    A = _assemble(full, u, kap * kap, sig * kap)
    return FluidBlockMatrices(A, kap, sig)


def scaled_fluid_matrices(g, w, u, eos: EquationOfState, check: bool = True) -> np.ndarray:
    """Coefficient matrices for the rescaled unknown ``(kappa0 w, u)``.

    The congruence ``D^-1 A D^-1`` with ``D = diag(kappa0, 1, 1, 1, 1)``
    keeps symmetry and turns the rest-frame Minkowski ``A^0`` at zero density
    into the identity.
    """
    full = _as_full(g)
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if check:
        check_causal(w, eos)
    ratio = 1.0 / (1.0 + eos.K * w * w)  # kappa / kappa0
    sig = sound_speed(w, eos)
    return _assemble(full, u, ratio * ratio, sig * ratio)


def characteristic_polynomial(g, w, u, eos: EquationOfState, xi):
    """Closed form of ``det(xi_nu A^nu)``.

    ``-kappa^2 det(g) (u.xi)^3 ((u.xi)^2 - sigma^2 P^{ab} xi_a xi_b)``
    """
    full = _as_full(g)
    ginv = invert_metric(full)
    kap = kappa_factor(w, eos)
    sig = sound_speed(w, eos)
    uxi = np.einsum("...a,...a->...", u, xi)
    Pup = ginv + np.einsum("...a,...b->...ab", u, u)
    pxx = np.einsum("...ab,...a,...b->...", Pup, xi, xi)
    return -kap**2 * np.linalg.det(full) * uxi**3 * (uxi**2 - sig**2 * pxx)


def check_timelike_covector(g, w, u, eos: EquationOfState, xi):
    """Whether ``xi_nu A^nu`` is definite; returns ``(ok, margin)``.

    The margin is the sound-cone form ``(u.xi)^2 - sigma^2 P^{ab} xi_a xi_b``.
    """
    ginv = invert_metric(g)
    sig = sound_speed(w, eos)
    uxi = np.einsum("...a,...a->...", u, xi)
    Pup = ginv + np.einsum("...a,...b->...ab", u, u)
    margin = uxi**2 - sig**2 * np.einsum("...ab,...a,...b->...", Pup, xi, xi)
    ok = (margin > 0) & (uxi != 0)
    return ok, margin


def generalized_speeds(A0, An):
    """Eigenvalues of ``An x = lam A0 x`` for symmetric ``An`` and SPD ``A0``.

    Reduces with the Cholesky factor ``A0 = L L^T`` to the symmetric matrix
    ``L^-1 An L^-T``.
    """
    try:
        L = np.linalg.cholesky(A0)
    except np.linalg.LinAlgError as exc:
        raise NonHyperbolic("A^0 is not positive definite") from exc
    Linv = np.linalg.inv(L)
    M = Linv @ An @ np.swapaxes(Linv, -1, -2)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return np.linalg.eigvalsh(M)


def fluid_characteristic_speeds(g, w, u, eos: EquationOfState, n):
    """Five characteristic speeds of the fluid block in spatial direction ``n``."""
    blocks = fluid_matrices(g, w, u, eos)
    n = np.asarray(n, dtype=float)
    An = np.einsum("...a,...aij->...ij", n, blocks.A[..., 1:, :, :])
    return generalized_speeds(blocks.A[..., 0, :, :], An)


def christoffel_term(A, gamma, u):
    """Lower-order part of ``A^nu nabla_nu W``: ``A^nu[:, 1:] Gamma^be_{nu la} u^la``.

    ``A`` holds the matrices ``(..., 4, 5, 5)``, ``gamma[..., be, nu, la]`` the
    Christoffel symbols.
    """
    gu = np.einsum("...bnl,...l->...nb", gamma, u)
    return np.einsum("...nib,...nb->...i", A[..., :, :, 1:], gu)
