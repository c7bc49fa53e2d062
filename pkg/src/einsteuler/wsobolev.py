"""Weighted fractional Sobolev norms built from dyadic shells.

For a field ``u`` on R^d the ``H_{s,delta}`` norm is

    ||u||^2 = sum_j 2^{(d/2 + delta) 2 j} || (psi_j^g u)(2^j .) ||^2_{H^s}

where ``psi_j`` are smooth radial cutoffs adapted to the annuli
``2^{j-1} <= |x| <= 2^j`` and ``g`` is the cutoff power. Every rescaled shell
lives in ``|x| <= 2``, so it is sampled on a fixed periodic reference box
``[-4, 4]^d`` and measured there with the Fourier multiplier
``(1 + |xi|^2)^{s/2}``.

Fields are callables ``u(x)`` taking points of shape ``(..., d)`` and returning
``(...)`` or ``(..., m)``. ``GridFunction`` wraps fields stored on a
``GridSpec``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .cutoffs import smooth_step
from .errors import IndefiniteWeight, NonUniformGrid, TailNotConverged, ValidationError
from .grid import GridSpec

DEFAULT_REF_POINTS = {1: 2048, 2: 256, 3: 64}


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class NormSpec:
    s: float
    delta: float
    gamma_psi: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.s) and np.isfinite(self.delta)):
            raise ValidationError("norm", "s and delta must be finite")
        if not 0 <= self.s <= 6:
            raise ValidationError("norm.s", "regularity must lie in [0, 6]")
        if self.gamma_psi is not None and not self.gamma_psi > 0:
            raise ValidationError("norm.gamma_psi", "cutoff power must be positive")


@dataclass(frozen=True)
class DyadicFamily:
    """Radial cutoffs ``psi_j`` and the reference box used for each shell.

    ``psi_0`` equals 1 on ``|x| <= 1`` and vanishes beyond 2; for ``j >= 1``
    ``psi_j`` equals 1 on ``2^{j-1} <= |x| <= 2^j`` with support in
    ``2^{j-2} <= |x| <= 2^{j+1}``.
    """

    j_max: int = 8
    gamma_psi: float = 1.0
    box: float = 4.0
    n_ref: int | None = None
    tail_tol: float = 1e-10

    def psi(self, j: int, r):
        r = np.asarray(r, dtype=float)
        if j == 0:
            return 1.0 - smooth_step(r - 1.0)
        lo = 2.0 ** (j - 2)
        hi = 2.0**j
        return smooth_step((r - lo) / lo) * (1.0 - smooth_step((r - hi) / hi))

    def psi_sum(self, r):
        return sum(self.psi(j, r) for j in range(self.j_max + 1))

    def points(self, dim: int) -> int:
        return self.n_ref or DEFAULT_REF_POINTS[dim]

    def ref_coords(self, dim: int) -> np.ndarray:
        n = self.points(dim)
        axis = -self.box + (2.0 * self.box / n) * np.arange(n)
        return np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)

    def ref_lengths(self, dim: int) -> tuple[float, ...]:
        return (2.0 * self.box,) * dim


# ---------------------------------------------------------------- fields


class GridFunction:
    """Callable view of a grid field on its active axes.

    Interpolation is cubic. Outside the box the field is zero, or wrapped for
    ``periodic=True``; ``fill="nearest"`` extends by the boundary value
    instead (used for coefficient matrices, which do not decay).
    """

    def __init__(self, values: np.ndarray, grid: GridSpec, periodic: bool | None = None, fill: str = "zero"):
        self.grid = grid
        self.axes = grid.active
        self.dim = len(self.axes)
        vals = np.asarray(values, dtype=float)
        squeezed = vals.reshape(tuple(grid.points[a] for a in self.axes) + vals.shape[3:])
        self.comp_shape = vals.shape[3:]
        self.values = squeezed.reshape(squeezed.shape[: self.dim] + (-1,))
        self.periodic = grid.boundary == "periodic" if periodic is None else periodic
        self.fill = fill

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        idx = []
        for k, a in enumerate(self.axes):
            h = self.grid.spacing[a]
            idx.append((x[..., k].ravel() + 0.5 * self.grid.extent[a]) / h)
        if self.periodic:
            mode = "grid-wrap"
        elif self.fill == "nearest":
            mode = "nearest"
        else:
            mode = "constant"
        out = np.empty((len(idx[0]), self.values.shape[-1]))
        for c in range(self.values.shape[-1]):
            out[:, c] = map_coordinates(self.values[..., c], idx, order=3, mode=mode, cval=0.0)
        out = out.reshape(lead + self.comp_shape)
        return out


def _dim_of(u, dim):
    if dim is not None:
        return dim
    d = getattr(u, "dim", None)
    if d is None:
        raise ValueError("dimension of the field is unknown; pass dim=")
    return d


# ---------------------------------------------------------------- Bessel potential


def check_uniform(coords: Sequence[np.ndarray], rtol: float = 1e-9) -> tuple[float, ...]:
    """Spacing per axis of tensor-product coordinates; raises ``NonUniformGrid``."""
    out = []
    for c in coords:
        d = np.diff(np.asarray(c, dtype=float))
        if len(d) == 0 or not np.allclose(d, d[0], rtol=rtol, atol=0) or d[0] <= 0:
            raise NonUniformGrid("Fourier multipliers need a uniform grid")
        out.append(float(d[0]))
    return tuple(out)


def _freq_sq(shape, lengths):
    ks = [2.0 * np.pi * np.fft.fftfreq(n, d=L / n) for n, L in zip(shape, lengths)]
    mesh = np.meshgrid(*ks, indexing="ij")
    return sum(k * k for k in mesh)


def bessel_potential(u, s: float, lengths=None, coords=None) -> np.ndarray:
    """Apply ``(1 + |xi|^2)^{s/2}`` on a periodic box.

    ``u`` has the spatial axes first; trailing axes are components. The box
    side lengths come from ``lengths`` or are derived from uniform ``coords``.
    """
    u = np.asarray(u, dtype=float)
    if coords is not None:
        sp = check_uniform(coords)
        lengths = tuple(h * len(c) for h, c in zip(sp, coords))
    dim = len(lengths)
    if s == 0:
        return u.copy()
    axes = tuple(range(dim))
    mult = (1.0 + _freq_sq(u.shape[:dim], lengths)) ** (0.5 * s)
    mult = mult.reshape(mult.shape + (1,) * (u.ndim - dim))
    return np.real(np.fft.ifftn(mult * np.fft.fftn(u, axes=axes), axes=axes))


def hs_box_sq(u, s: float, lengths) -> float:
    """``||u||^2_{H^s}`` on a periodic box, summed over components."""
    u = np.asarray(u, dtype=float)
    dim = len(lengths)
    axes = tuple(range(dim))
    npts = int(np.prod(u.shape[:dim]))
    vol = float(np.prod(lengths))
    spec = np.abs(np.fft.fftn(u, axes=axes)) ** 2
    mult = (1.0 + _freq_sq(u.shape[:dim], lengths)) ** s
    mult = mult.reshape(mult.shape + (1,) * (u.ndim - dim))
    return float(np.sum(mult * spec) * vol / npts**2)


def _weighted_box_sq(u, s, lengths, weight, split=None):
    """``<Lambda^s u, a Lambda^s u>_{L^2}`` with a pointwise matrix weight."""
    dim = len(lengths)
    lam = bessel_potential(u, s, lengths)
    cell = float(np.prod(lengths)) / int(np.prod(u.shape[:dim]))
    if weight is None:
        return float(np.sum(lam * lam) * cell)
    if split is not None:
        lam = lam.reshape(lam.shape[:dim] + split)
        return float(np.einsum("...bi,...bc,...ci->...", lam, weight, lam).sum() * cell)
    return float(np.einsum("...i,...ij,...j->...", lam, weight, lam).sum() * cell)


# ---------------------------------------------------------------- shell sums


@dataclass
class NormReport:
    value: float
    shells: np.ndarray
    tail_ratio: float
    meta: dict = field(default_factory=dict)


def _shell_sum(
    u,
    s: float,
    delta: float,
    fam: DyadicFamily,
    dim: int,
    gpow: float,
    weight=None,
    split=None,
    threads: int = 1,
    check_tail: bool = True,
) -> NormReport:
    x = fam.ref_coords(dim)
    lengths = fam.ref_lengths(dim)

    def term(j):
        y = (2.0**j) * x
        r = np.linalg.norm(y, axis=-1)
        cut = fam.psi(j, r) ** gpow
        if not np.any(cut):
            return 0.0
        vals = np.asarray(u(y), dtype=float)
        if vals.ndim == dim:
            vals = vals[..., None]
        vals = vals.reshape(vals.shape[:dim] + (-1,))
        shell = cut[..., None] * vals
        wmat = None if weight is None else weight(y)
        val = _weighted_box_sq(shell, s, lengths, wmat, split)
        return 2.0 ** ((0.5 * dim + delta) * 2 * j) * val

    js = range(fam.j_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(term, js))
    else:
        terms = [term(j) for j in js]
    terms = np.array(terms)
    total = float(np.sum(terms))  # fixed order, independent of thread count
    tail = float(terms[-1] / total) if total > 0 else 0.0
    if check_tail and tail > fam.tail_tol:
        raise TailNotConverged(fam.j_max, tail)
    return NormReport(float(np.sqrt(max(total, 0.0))), terms, tail)


def hs_delta_report(u, spec: NormSpec, fam: DyadicFamily | None = None, dim=None, threads: int = 1,
                    check_tail: bool = True) -> NormReport:
    fam = fam or DyadicFamily()
    gpow = spec.gamma_psi if spec.gamma_psi is not None else fam.gamma_psi
    return _shell_sum(u, spec.s, spec.delta, fam, _dim_of(u, dim), gpow, threads=threads, check_tail=check_tail)


def norm_hs_delta(u, spec: NormSpec, fam: DyadicFamily | None = None, dim=None, threads: int = 1,
                  check_tail: bool = True) -> float:
    """``||u||_{H_{s,delta}}`` truncated at ``fam.j_max`` with tail monitoring."""
    return hs_delta_report(u, spec, fam, dim, threads, check_tail).value


# ---------------------------------------------------------------- weighted L2


def _radial_nodes(r_max: float, panels: int, order: int):
    edges = np.concatenate([[0.0], np.geomspace(1e-3, r_max, panels)])
    xg, wg = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    r = 0.5 * (b - a) * xg + 0.5 * (b + a)
    w = 0.5 * (b - a) * wg
    return r.ravel(), w.ravel()


def _sphere_nodes(dim: int, n_ang: int):
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        th = 2 * np.pi * np.arange(n_ang) / n_ang
        return np.stack([np.cos(th), np.sin(th)], -1), np.full(n_ang, 2 * np.pi / n_ang)
    ct, wt = np.polynomial.legendre.leggauss(n_ang)
    ph = 2 * np.pi * np.arange(2 * n_ang) / (2 * n_ang)
    CT, PH = np.meshgrid(ct, ph, indexing="ij")
    st = np.sqrt(1 - CT**2)
    dirs = np.stack([st * np.cos(PH), st * np.sin(PH), CT], -1).reshape(-1, 3)
    w = (wt[:, None] * np.full(len(ph), 2 * np.pi / len(ph))[None, :]).ravel()
    return dirs, w


def norm_l2_delta(u, delta: float, dim=None, grid: GridSpec | None = None, r_max: float | None = None,
                  panels: int = 60, order: int = 16, n_ang: int = 48) -> float:
    """``(int (1 + |x|)^{2 delta} |u|^2 dx)^{1/2}``.

    Grid arrays (``grid`` given) use the trapezoid rule over the active axes.
    Callables use Gauss-Legendre panels in the radius times a product rule on
    the sphere, out to ``r_max`` (default ``2^{9}``).
    """
    if grid is not None:
        vals = np.asarray(u, dtype=float)
        r = np.linalg.norm(grid.coords(), axis=-1)
        wt = (1.0 + r) ** (2 * delta)
        sq = vals * vals
        sq = sq.reshape(grid.shape + (-1,)).sum(-1)
        return float(np.sqrt(np.sum(wt * sq) * grid.cell_volume()))
    d = _dim_of(u, dim)
    r, wr = _radial_nodes(r_max or 2.0**9, panels, order)
    dirs, wa = _sphere_nodes(d, n_ang)
    pts = r[:, None, None] * dirs[None, :, :]
    vals = np.asarray(u(pts), dtype=float)
    sq = vals * vals
    if sq.ndim > 2:
        sq = sq.reshape(sq.shape[:2] + (-1,)).sum(-1)
    weight = ((1.0 + r) ** (2 * delta) * r ** (d - 1) * wr)[:, None] * wa[None, :]
    return float(np.sqrt(np.sum(weight * sq)))


# ---------------------------------------------------------------- energy norms


@dataclass(frozen=True)
class EnergyWeights:
    """Pointwise blocks of ``A0`` used as energy weights.

    ``a33`` stores the 3x3 factor ``G`` with ``a33 = G (x) I_10``; ``a44`` is
    the 5x5 fluid block. Both are grid fields (or single matrices, broadcast).
    """

    a33: np.ndarray
    a44: np.ndarray

    def __post_init__(self):
        for name, m in (("a33", self.a33), ("a44", self.a44)):
            eig = np.linalg.eigvalsh(np.asarray(m, dtype=float))
            if not np.all(eig > 0):
                raise IndefiniteWeight(f"{name} weight is not positive definite")

    @classmethod
    def identity(cls) -> "EnergyWeights":
        return cls(np.eye(3), np.eye(5))

    @classmethod
    def from_state(cls, U, eos, check: bool = True) -> "EnergyWeights":
        from .fluid import scaled_fluid_matrices
        from .geometry import invert_metric
        from .reduction import fluid_of, lapse_factor, metric_of

        g = metric_of(U[..., :10])
        ginv = invert_metric(g)
        lapse = lapse_factor(ginv)
        w, u = fluid_of(U[..., 50:55], eos)
        a44 = scaled_fluid_matrices(g, w, u, eos, check=check)[..., 0, :, :]
        return cls(ginv[..., 1:, 1:] / lapse[..., None, None], a44)

    def bounds(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue over both blocks and all points."""
        e3 = np.linalg.eigvalsh(np.asarray(self.a33))
        e4 = np.linalg.eigvalsh(np.asarray(self.a44))
        return float(min(e3.min(), e4.min())), float(max(e3.max(), e4.max()))


def _weight_fn(mat, grid: GridSpec | None):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim == 2:
        return lambda y: mat
    gf = GridFunction(mat, grid, fill="nearest")
    return gf


def energy_x_terms(U, spec: NormSpec, weights: EnergyWeights, grid: GridSpec,
                   fam: DyadicFamily | None = None, threads: int = 1, check_tail: bool = False) -> dict:
    """Squared contributions of ``v``, ``dtv``, ``dxv`` and ``W`` to the energy.

    Periodic grids are measured on their own torus (plain ``H^s``, no dyadic
    weights). Other grids use the dyadic shells with ``psi_j^2`` windows and
    zero extension outside the box.
    """
    U = np.asarray(U, dtype=float)
    s, d = spec.s, spec.delta
    a33 = np.asarray(weights.a33, dtype=float)
    a44 = np.asarray(weights.a44, dtype=float)
    if grid.boundary == "periodic":
        dim = grid.dim
        lengths = tuple(grid.extent[a] for a in grid.active)
        shape = tuple(grid.points[a] for a in grid.active)

        def sq(block, order, w=None, split=None):
            vals = block.reshape(shape + block.shape[3:])
            wm = None
            if w is not None:
                wm = w if w.ndim == 2 else w.reshape(shape + w.shape[3:])
                if wm.ndim == 2:
                    wm = np.broadcast_to(wm, shape + wm.shape)
            return _weighted_box_sq(vals, order, lengths, wm, split)

        return {
            "v": sq(U[..., 0:10], s),
            "dtv": sq(U[..., 10:20], s),
            "dxv": sq(U[..., 20:50], s, a33, (3, 10)),
            "W": sq(U[..., 50:55], s + 1, a44),
        }

    fam = fam or DyadicFamily()
    dim = grid.dim

    def part(sl):
        return GridFunction(U[..., sl], grid, periodic=False)

    kw = dict(fam=fam, dim=dim, gpow=2.0, threads=threads, check_tail=check_tail)
    return {
        "v": _shell_sum(part(slice(0, 10)), s, d, **kw).value ** 2,
        "dtv": _shell_sum(part(slice(10, 20)), s, d + 1, **kw).value ** 2,
        "dxv": _shell_sum(part(slice(20, 50)), s, d + 1, weight=_weight_fn(a33, grid), split=(3, 10), **kw).value ** 2,
        "W": _shell_sum(part(slice(50, 55)), s + 1, d + 1, weight=_weight_fn(a44, grid), **kw).value ** 2,
    }


def energy_x_norm(U, spec: NormSpec, weights: EnergyWeights, grid: GridSpec,
                  fam: DyadicFamily | None = None, threads: int = 1) -> float:
    """``||U||_{X_{s,delta,A0}}``: the square root of the four weighted terms."""
    terms = energy_x_terms(U, spec, weights, grid, fam, threads)
    return float(np.sqrt(sum(terms.values())))


def y_norm(U, delta: float, grid: GridSpec, weights: EnergyWeights | None = None, mask=None) -> float:
    """``A0``-weighted ``L^2_delta`` norm of a state difference."""
    U = np.asarray(U, dtype=float)
    r = np.linalg.norm(grid.coords(), axis=-1)
    wt = (1.0 + r) ** (2 * delta)
    dens = np.sum(U[..., :20] ** 2, axis=-1)
    dx = U[..., 20:50].reshape(U.shape[:-1] + (3, 10))
    Wb = U[..., 50:55]
    if weights is None:
        dens = dens + np.sum(dx * dx, axis=(-2, -1)) + np.sum(Wb * Wb, axis=-1)
    else:
        dens = dens + np.einsum("...bi,...bc,...ci->...", dx, np.asarray(weights.a33), dx)
        dens = dens + np.einsum("...i,...ij,...j->...", Wb, np.asarray(weights.a44), Wb)
    if mask is not None:
        dens = np.where(mask, dens, 0.0)
    return float(np.sqrt(np.sum(wt * dens) * grid.cell_volume()))


# ---------------------------------------------------------------- test functions


@dataclass(frozen=True)
class ProbeFunction:
    """Scalar field with analytic gradient, used by the inequality checks."""

    name: str
    f: Callable
    grad: Callable
    dim: int

    def __call__(self, x):
        return self.f(x)


def gaussian(width: float, center=None, amp: float = 1.0, dim: int = 1) -> ProbeFunction:
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def f(x):
        y = np.asarray(x) - c
        return amp * np.exp(-0.5 * np.sum(y * y, axis=-1) / width**2)

    def grad(x):
        y = np.asarray(x) - c
        return -(y / width**2) * f(x)[..., None]

    return ProbeFunction(f"gauss(w={width:g})", f, grad, dim)


def smooth_bump(width: float, center=None, amp: float = 1.0, dim: int = 1) -> ProbeFunction:
    """``amp * exp(1 - 1/(1 - |x-c|^2/width^2))``, compact and equal to ``amp`` at ``c``."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def f(x):
        y = np.asarray(x) - c
        q = np.sum(y * y, axis=-1) / width**2
        out = np.zeros_like(q)
        inside = q < 1
        out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out

    def grad(x):
        y = np.asarray(x) - c
        q = np.sum(y * y, axis=-1) / width**2
        inside = q < 1
        fac = np.zeros_like(q)
        fac[inside] = -2.0 / (width**2 * (1.0 - q[inside]) ** 2)
        return (fac * f(x))[..., None] * y

    return ProbeFunction(f"bump(w={width:g})", f, grad, dim)


def function_family(name: str = "gaussians+bumps", dim: int = 1) -> list[ProbeFunction]:
    fams = {
        "gaussians": [gaussian(w, dim=dim) for w in (0.5, 1.0, 2.0)]
        + [gaussian(1.0, center=np.full(dim, 1.5), dim=dim)],
        "bumps": [smooth_bump(w, dim=dim) for w in (1.0, 2.0, 3.0)]
        + [smooth_bump(1.5, center=np.full(dim, -1.0), dim=dim)],
    }
    out = []
    for part in name.split("+"):
        if part not in fams:
            raise ValidationError("family", f"unknown test family {part!r}")
        out.extend(fams[part])
    return out


def random_functions(n: int, dim: int = 1, seed: int = 0) -> list[ProbeFunction]:
    """Sums of two Gaussians with random centers, widths and amplitudes."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        parts = [
            gaussian(rng.uniform(0.3, 2.0), rng.uniform(-2, 2, size=dim), rng.uniform(-1, 1), dim)
            for _ in range(2)
        ]

        def f(x, parts=parts):
            return parts[0].f(x) + parts[1].f(x)

        def grad(x, parts=parts):
            return parts[0].grad(x) + parts[1].grad(x)

        out.append(ProbeFunction(f"random{k}", f, grad, dim))
    return out


# ---------------------------------------------------------------- inequality suite


@dataclass
class InequalityResult:
    name: str
    ratios: list
    bound: float | None
    passed: bool
    note: str = ""

    @property
    def worst(self) -> float:
        return float(max(self.ratios)) if self.ratios else float("nan")

    def line(self) -> str:
        b = "baseline" if self.bound is None else f"<= {self.bound:g}"
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: worst ratio {self.worst:.6g} ({b}) {self.note}".rstrip()


def _component(tf: ProbeFunction, i: int):
    return lambda x: tf.grad(x)[..., i]


def check_derivative(funcs, s=2.0, delta=0.0, fam=None, slack=0.05) -> InequalityResult:
    """``||d_i u||_{H_{s-1,delta+1}} <= ||u||_{H_{s,delta}}``."""
    fam = fam or DyadicFamily()
    ratios = []
    for tf in funcs:
        base = norm_hs_delta(tf, NormSpec(s, delta), fam)
        for i in range(tf.dim):
            ratios.append(norm_hs_delta(_component(tf, i), NormSpec(s - 1, delta + 1), fam, dim=tf.dim) / base)
    return InequalityResult("derivative", ratios, 1 + slack, max(ratios) <= 1 + slack)


def check_interpolation(funcs, s=2.0, s_mid=1.0, delta=0.0, fam=None, slack=0.05) -> InequalityResult:
    """``||u||_{s',delta} <= ||u||_{s,delta}^{s'/s} ||u||_{0,delta}^{1-s'/s}``."""
    fam = fam or DyadicFamily()
    th = s_mid / s
    ratios = []
    for tf in funcs:
        mid = norm_hs_delta(tf, NormSpec(s_mid, delta), fam)
        hi = norm_hs_delta(tf, NormSpec(s, delta), fam)
        lo = norm_hs_delta(tf, NormSpec(0.0, delta), fam)
        ratios.append(mid / (hi**th * lo ** (1 - th)))
    return InequalityResult("interpolation", ratios, 1 + slack, max(ratios) <= 1 + slack)


def check_l2_equivalence(funcs, deltas=(-1.0, 0.0, 1.0), fam=None, band: float = 4.0) -> InequalityResult:
    """``H_{0,delta}`` against the weighted ``L^2`` quadrature, two-sided."""
    fam = fam or DyadicFamily()
    ratios = []
    for tf in funcs:
        for d in deltas:
            ratios.append(norm_hs_delta(tf, NormSpec(0.0, d), fam) / norm_l2_delta(tf, d))
    ok = min(ratios) >= 1 / band and max(ratios) <= band
    return InequalityResult("l2_equivalence", ratios, band, ok, f"min ratio {min(ratios):.6g}")


def check_monotonicity(funcs, pairs=None, fam=None, rtol: float = 1e-12) -> InequalityResult:
    """Count violations of ``||u||_{s1,d1} <= ||u||_{s2,d2}`` for ``s1<=s2, d1<=d2``."""
    fam = fam or DyadicFamily()
    pairs = pairs or [((0.0, 0.0), (1.0, 0.0)), ((1.0, -0.5), (1.0, 0.5)), ((0.5, 0.0), (2.5, 1.0))]
    ratios, violations = [], 0
    for tf in funcs:
        for (s1, d1), (s2, d2) in pairs:
            a = norm_hs_delta(tf, NormSpec(s1, d1), fam)
            b = norm_hs_delta(tf, NormSpec(s2, d2), fam)
            ratios.append(a / b)
            violations += a > b * (1 + rtol)
    return InequalityResult("monotonicity", ratios, 1.0, violations == 0, f"{violations} violations")


def check_algebra(funcs, s=2.0, delta=0.0, fam=None) -> InequalityResult:
    """``||u v||_{s,delta} / (||u||_{s,delta} ||v||_{s,delta})`` (baseline only)."""
    fam = fam or DyadicFamily()
    norms = [norm_hs_delta(tf, NormSpec(s, delta), fam) for tf in funcs]
    ratios = []
    for i, a in enumerate(funcs):
        for j, b in enumerate(funcs[i:], start=i):
            prod = norm_hs_delta(lambda x, a=a, b=b: a(x) * b(x), NormSpec(s, delta), fam, dim=a.dim)
            ratios.append(prod / (norms[i] * norms[j]))
    return InequalityResult("algebra", ratios, None, bool(np.all(np.isfinite(ratios))))


def check_embedding(funcs, s=2.0, delta=0.0, fam=None, n_samples: int = 4001) -> InequalityResult:
    """``sup (1+|x|)^{delta + d/2} |u| / ||u||_{s,delta}`` (baseline only)."""
    fam = fam or DyadicFamily()
    ratios = []
    for tf in funcs:
        d = tf.dim
        axis = np.linspace(-20, 20, n_samples if d == 1 else 201)
        pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1)
        sup = np.max((1 + np.linalg.norm(pts, axis=-1)) ** (delta + 0.5 * d) * np.abs(tf(pts)))
        ratios.append(sup / norm_hs_delta(tf, NormSpec(s, delta), fam))
    return InequalityResult("embedding", ratios, None, bool(np.all(np.isfinite(ratios))))


def check_moser(funcs, s=2.0, delta=0.0, fam=None) -> InequalityResult:
    """``||sin(u)||_{s,delta} / ((1 + ||u||_inf^N) ||u||_{s,delta})`` with ``N = ceil(s)``."""
    fam = fam or DyadicFamily()
    N = int(np.ceil(s))
    ratios = []
    for tf in funcs:
        for amp in (0.5, 2.0):
            u = lambda x, tf=tf, amp=amp: amp * tf(x)
            axis = np.linspace(-10, 10, 2001)
            sup = np.max(np.abs(u(axis.reshape((-1,) + (1,) * tf.dim) * np.ones(tf.dim))))
            num = norm_hs_delta(lambda x, u=u: np.sin(u(x)), NormSpec(s, delta), fam, dim=tf.dim)
            ratios.append(num / ((1 + sup**N) * norm_hs_delta(u, NormSpec(s, delta), fam, dim=tf.dim)))
    return InequalityResult("moser", ratios, None, bool(np.all(np.isfinite(ratios))))


def check_composite(funcs, s=1.0, delta=0.0, fam=None) -> InequalityResult:
    """``||v||_{s+1,delta} / (||v||_{s,delta} + sum_i ||d_i v||_{s,delta+1})`` (baseline only)."""
    fam = fam or DyadicFamily()
    ratios = []
    for tf in funcs:
        den = norm_hs_delta(tf, NormSpec(s, delta), fam)
        den += sum(norm_hs_delta(_component(tf, i), NormSpec(s, delta + 1), fam, dim=tf.dim) for i in range(tf.dim))
        ratios.append(norm_hs_delta(tf, NormSpec(s + 1, delta), fam) / den)
    return InequalityResult("composite", ratios, None, bool(np.all(np.isfinite(ratios))))


def check_cutoff_power(funcs, s=2.0, delta=0.0, fam=None) -> InequalityResult:
    """Ratio of the ``psi_j^2`` norm to the ``psi_j`` norm (baseline band)."""
    fam = fam or DyadicFamily()
    ratios = [
        norm_hs_delta(tf, NormSpec(s, delta, 2.0), fam) / norm_hs_delta(tf, NormSpec(s, delta, 1.0), fam)
        for tf in funcs
    ]
    return InequalityResult("cutoff_power", ratios, None, bool(np.all(np.isfinite(ratios))),
                            f"band [{min(ratios):.4g}, {max(ratios):.4g}]")


def kato_ponce_ratio(f, g, s: float, lengths) -> float:
    """``||L^s(fg) - f L^s g|| / (||grad f||_inf ||L^{s-1} g|| + ||L^s f|| ||g||_inf)`` on a torus."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    comm = bessel_potential(f * g, s, lengths) - f * bessel_potential(g, s, lengths)
    cell = float(np.prod(lengths)) / f.size
    lhs = np.sqrt(np.sum(comm**2) * cell)
    ks = [2 * np.pi * np.fft.fftfreq(n, d=L / n) for n, L in zip(f.shape, lengths)]
    mesh = np.meshgrid(*ks, indexing="ij")
    fh = np.fft.fftn(f)
    grad_sup = max(np.max(np.abs(np.real(np.fft.ifftn(1j * k * fh)))) for k in mesh)
    rhs = grad_sup * np.sqrt(hs_box_sq(g, s - 1, lengths)) + np.sqrt(hs_box_sq(f, s, lengths)) * np.max(np.abs(g))
    return float(lhs / rhs)


def check_kato_ponce(funcs, s=2.0, box: float = 8.0, n: int = 1024) -> InequalityResult:
    ratios = []
    axis = -box + (2 * box / n) * np.arange(n)
    for a in funcs:
        for b in funcs:
            if a.dim != 1:
                continue
            ratios.append(kato_ponce_ratio(a(axis[:, None]), b(axis[:, None]), s, (2 * box,)))
    return InequalityResult("kato_ponce", ratios, None, bool(np.all(np.isfinite(ratios))))


# ---------------------------------------------------------------- fractional power probe


def kinked_profile(c: float = 0.3, radius: float = 0.45):
    """Smooth ``(c^2 - |x|^2) e bump(|x|/radius)`` with simple zeros at ``|x| = c``.

    The support sits inside ``|x| < 1/2`` where ``psi_0 = 1`` and every other
    cutoff vanishes, so the dyadic norm reduces to the plain ``H^s`` norm and
    cutoff transitions do not mask the kink of ``|w|^beta``.
    """
    from .cutoffs import bump

    def w(x):
        r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        return (c * c - r2) * np.e * bump(np.sqrt(r2), radius)

    return w


@dataclass
class ProbeResult:
    beta: float
    widths: np.ndarray
    ratios: dict  # s -> array of ratios across widths
    s_low: float
    s_high: float
    band: tuple
    stable: bool
    blowup: bool
    band_tol: float

    def line(self) -> str:
        lo, hi = self.band
        mid = 0.5 * (lo + hi)
        top = float(np.max(self.ratios[self.s_high]))
        return (
            f"beta={self.beta:g}: s={self.s_low:g} band [{lo:.4g}, {hi:.4g}] "
            f"(spread {hi / lo - 1:.3%}), s={self.s_high:g} max ratio {top:.4g} = {top / mid:.3g}x midpoint"
        )


def fractional_power_probe(beta: float, widths=None, delta: float = 0.0, c: float = 0.3,
                           extent: float = 2.0, points: int = 2**16, fam: DyadicFamily | None = None,
                           band_tol: float = 0.1, blowup_factor: float = 10.0) -> ProbeResult:
    """Ratio ``||phi_eta * |w|^beta|| / ||w||`` along shrinking mollifier widths ``eta``.

    ``w`` is smooth with simple zeros, so ``|w|^beta`` is exactly as regular
    as ``|x - c|^beta`` near the zeros. For ``s`` below ``beta + 1/2`` the
    ratio settles as ``eta -> 0``; above it the mollified norms diverge.
    Runs in one dimension on a fine grid with a compact bump mollifier.
    """
    from .initial_data import mollify

    fam = fam or DyadicFamily(n_ref=2**18)
    widths = np.asarray(widths if widths is not None else [0.008, 0.004, 0.002, 0.001, 0.0005], dtype=float)
    grid = GridSpec((points, 1, 1), (extent, 1.0, 1.0), boundary="frozen")
    x = grid.coords()[..., :1]
    w = kinked_profile(c)
    raw = np.abs(w(x)) ** beta
    s_low, s_high = beta + 0.4, beta + 1.5
    ratios = {}
    for s in (s_low, s_high):
        den = norm_hs_delta(w, NormSpec(s, delta), fam, dim=1)
        vals = []
        for eta in widths:
            sm = GridFunction(mollify(raw, grid, eta), grid, periodic=False)
            vals.append(norm_hs_delta(sm, NormSpec(s, delta), fam, dim=1) / den)
        ratios[s] = np.array(vals)
    lo, hi = float(ratios[s_low].min()), float(ratios[s_low].max())
    mid = 0.5 * (lo + hi)
    stable = hi / lo - 1.0 <= band_tol
    blowup = float(ratios[s_high].max()) > blowup_factor * mid
    return ProbeResult(beta, widths, ratios, s_low, s_high, (lo, hi), stable, blowup, band_tol)


# ---------------------------------------------------------------- suite


@dataclass
class SuiteReport:
    results: list
    probe: ProbeResult | None = None

    @property
    def passed(self) -> bool:
        ok = all(r.passed for r in self.results)
        if self.probe is not None:
            ok = ok and self.probe.stable and self.probe.blowup
        return ok

    def lines(self) -> list[str]:
        out = [r.line() for r in self.results]
        if self.probe is not None:
            flag = "PASS" if self.probe.stable and self.probe.blowup else "FAIL"
            out.append(f"{flag} fractional_power: {self.probe.line()}")
        return out

    def csv_rows(self) -> list[list]:
        rows = [[r.name, r.worst, "" if r.bound is None else r.bound, r.passed] for r in self.results]
        if self.probe is not None:
            rows.append(["fractional_power", float(np.max(self.probe.ratios[self.probe.s_high])),
                         self.probe.band[1], self.probe.stable and self.probe.blowup])
        return rows


def check_inequality_suite(family: str = "gaussians+bumps", eos=None, dim: int = 1,
                           fam: DyadicFamily | None = None, probe: bool = True,
                           seed: int = 0, n_random: int = 100) -> SuiteReport:
    """Run every inequality check on a named family and collect ratios.

    Checks with a known constant (derivative, interpolation, monotonicity,
    weighted-L2 band) carry a bound; the rest report their worst ratio as a
    regression baseline. Monotonicity runs on ``n_random`` seeded random
    functions. ``eos`` fixes ``beta`` for the fractional-power probe.
    """
    fam = fam or DyadicFamily()
    funcs = function_family(family, dim)
    results = [
        check_derivative(funcs, fam=fam),
        check_interpolation(funcs, fam=fam),
        check_l2_equivalence(funcs, fam=fam),
        check_monotonicity(random_functions(n_random, dim, seed), fam=fam),
        check_algebra(funcs, fam=fam),
        check_embedding(funcs, fam=fam),
        check_moser(funcs, fam=fam),
        check_composite(funcs, fam=fam),
        check_cutoff_power(funcs, fam=fam),
    ]
    if dim == 1:
        results.append(check_kato_ponce(funcs))
    pr = None
    if probe:
        beta = 1.5 if eos is None else eos.beta
        pr = fractional_power_probe(beta)
    return SuiteReport(results, pr)
