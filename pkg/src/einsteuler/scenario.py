"""Scenario files: grammar, validation and initial-data recipes.

Scenarios are TOML documents. Comments start with ``#``; sections nest with
``[section]`` headers::

    name = "gauge-wave"            # free label
    seed = 0

    [grid]
    points = [128, 1, 1]           # one point suppresses an axis
    extent = [1.0, 1.0, 1.0]
    boundary = "periodic"          # or "frozen"
    order = 4                      # finite-difference order, 2 or 4

    [eos]
    K = 1.0
    gamma = 2.0
    allow_gamma = false            # accept gamma outside (1, 3]

    [initial]
    recipe = "gauge-wave"          # minkowski-vacuum | gauge-wave | flat-slicing | fluid-ball | sound-wave | file
    A = 0.1
    tensor = "gauge"               # gauge | plus | cross

    [norm]
    s = 2.0
    delta = 0.0

    [evolution]
    t_end = 1.0
    cfl = 0.25
    mode = "direct"

Every section except ``[initial]`` is optional. Recipe parameters and their
defaults are listed in ``RECIPES``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cutoffs import bump
from .errors import CausalityViolation, EinsteulerError, ParseError, ValidationError
from .evolve import EvolutionConfig, a0_min_eigenvalue
from .fluid import EquationOfState, check_causal, normalized_velocity, scaled_fluid_matrices
from .geometry import ETA, pack, unpack
from .grid import GridSpec
from .initial_data import DELTA3_PACKED, GeometricData, complete_gauge_data, cutoff_chi, regularize_initial
from .io import read_binary
from .reduction import N_STATE, make_W, pack_state
from .wsobolev import NormSpec

RECIPES = {
    "minkowski-vacuum": {},
    "gauge-wave": {"A": 0.1, "k": None, "tensor": "gauge"},
    "fluid-ball": {
        "profile": "bump",
        "amplitude": 0.1,
        "radius": 0.5,
        "rho": 0.0,
        "M": 0.5,
        "width": 0.0,
        "ubar": [0.0, 0.0, 0.0],
        "constraints": "none",
    },
    "sound-wave": {"w0": 0.01, "A": 1e-6, "k": None},
    "flat-slicing": {"A": 0.1, "k": None},
    "file": {"path": None},
}
TENSORS = ("gauge", "plus", "cross")
PROFILES = ("bump", "gaussian", "parabolic")
CONSTRAINT_MODES = ("none", "cmc")
SOBOLEV_WINDOW_LOW = 1.5


@dataclass(frozen=True)
class Recipe:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: GridSpec
    eos: EquationOfState
    recipe: Recipe
    norm: NormSpec
    evolution: EvolutionConfig
    seed: int = 0
    warnings: tuple = ()


# ---------------------------------------------------------------- parsing


def _line_of(text: str, key: str, section: str | None = None) -> int | None:
    """First line assigning ``key`` (inside ``[section]`` when given)."""
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        head = re.match(r"^\[([^\]]+)\]$", line)
        if head:
            current = head.group(1).strip()
            continue
        if re.match(rf"^{re.escape(key)}\s*=", line) and (section is None or current == section):
            return n
    return None


def sobolev_window(gamma: float) -> tuple[float, float]:
    """Open interval of regularities for which the local theory applies."""
    return SOBOLEV_WINDOW_LOW, 2.0 / (gamma - 1.0) + 0.5


def window_warning(s: float, gamma: float) -> str | None:
    lo, hi = sobolev_window(gamma)
    if lo < s < hi:
        return None
    return (
        f"s={s:g} is outside the well-posedness window ({lo:g}, {hi:g}) "
        f"of the local existence theorem for gamma={gamma:g}"
    )


def _section(doc: dict, name: str, text: str, allowed) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ValidationError(name, "must be a section", _line_of(text, name))
    for key in sec:
        if key not in allowed:
            raise ValidationError(f"{name}.{key}", "unknown key", _line_of(text, key, name))
    return sec


def parse_scenario(text: str, strict_window: bool = False) -> Scenario:
    """Parse and validate a scenario document.

    Raises ``ParseError`` for malformed text and ``ValidationError`` for the
    first invalid field (with its line number when it can be located).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"line (\d+)", msg)
        raise ParseError(int(m.group(1)) if m else None, msg) from None

    def wrap(fieldname, section, key, fn):
        try:
            return fn()
        except ValidationError as exc:
            line = _line_of(text, exc.field.split(".")[-1], section) or _line_of(text, key, section)
            raise ValidationError(exc.field, exc.constraint, line) from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(fieldname, str(exc), _line_of(text, key, section)) from None

    for key in doc:
        if key not in ("name", "seed", "grid", "eos", "initial", "norm", "evolution"):
            raise ValidationError(key, "unknown key", _line_of(text, key))

    g = _section(doc, "grid", text, ("points", "extent", "boundary", "order"))
    grid = wrap("grid", "grid", "points", lambda: GridSpec(
        tuple(g.get("points", (64, 1, 1))),
        tuple(g.get("extent", (1.0, 1.0, 1.0))),
        g.get("boundary", "periodic"),
        int(g.get("order", 4)),
    ))
    if grid.dim == 3 and np.prod(grid.points) > 64**3:
        raise ValidationError("grid.points", "3D grids are capped at 64^3", _line_of(text, "points", "grid"))

    e = _section(doc, "eos", text, ("K", "gamma", "allow_gamma"))
    gamma = float(e.get("gamma", 2.0))
    if not e.get("allow_gamma", False) and not 1.0 < gamma <= 3.0:
        raise ValidationError("eos.gamma", "must lie in (1, 3]; set allow_gamma to override",
                              _line_of(text, "gamma", "eos"))
    eos = wrap("eos", "eos", "gamma", lambda: EquationOfState(float(e.get("K", 1.0)), gamma))

    if "initial" not in doc:
        raise ValidationError("initial", "section is required")
    ini = dict(doc["initial"])
    kind = ini.pop("recipe", None)
    if kind not in RECIPES:
        raise ValidationError("initial.recipe", f"must be one of {tuple(RECIPES)}",
                              _line_of(text, "recipe", "initial"))
    params = dict(RECIPES[kind])
    for key, val in ini.items():
        if key not in params:
            raise ValidationError(f"initial.{key}", f"unknown parameter for {kind}", _line_of(text, key, "initial"))
        params[key] = val
    recipe = Recipe(kind, params)
    wrap("initial", "initial", "recipe", lambda: _validate_recipe(recipe, grid))

    n = _section(doc, "norm", text, ("s", "delta"))
    norm = wrap("norm", "norm", "s", lambda: NormSpec(float(n.get("s", 2.0)), float(n.get("delta", 0.0))))
    if norm.s <= 0:
        raise ValidationError("norm.s", "must be positive", _line_of(text, "s", "norm"))
    warnings = []
    msg = window_warning(norm.s, eos.gamma)
    if msg:
        if strict_window:
            raise ValidationError("norm.s", msg, _line_of(text, "s", "norm"))
        warnings.append(msg)

    ev = _section(doc, "evolution", text, tuple(f.name for f in fields(EvolutionConfig)))
    evo = wrap("evolution", "evolution", "t_end", lambda: EvolutionConfig(**{"t_end": 1.0, **ev}))

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ValidationError("seed", "must be an integer", _line_of(text, "seed"))
    return Scenario(str(doc.get("name", kind)), grid, eos, recipe, norm, evo, seed, tuple(warnings))


def load_scenario(path, strict_window: bool = False) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), strict_window)


def _wavenumber(k, grid: GridSpec) -> float:
    if grid.points[0] == 1:
        raise ValidationError("grid.points", "wave recipes propagate along x; the x axis must be active")
    L = grid.extent[0]
    k = 2.0 * np.pi / L if k is None else float(k)
    if grid.boundary == "periodic":
        n = k * L / (2.0 * np.pi)
        if abs(n - round(n)) > 1e-9 or round(n) == 0:
            raise ValidationError("initial.k", "must be a nonzero multiple of 2 pi / L on a periodic grid")
    return k


def _validate_recipe(recipe: Recipe, grid: GridSpec) -> None:
    p = recipe.params
    if recipe.kind == "gauge-wave":
        if p["tensor"] not in TENSORS:
            raise ValidationError("initial.tensor", f"must be one of {TENSORS}")
        if not abs(float(p["A"])) < 1:
            raise ValidationError("initial.A", "amplitude must satisfy |A| < 1")
        _wavenumber(p["k"], grid)
    elif recipe.kind == "fluid-ball":
        if p["profile"] not in PROFILES:
            raise ValidationError("initial.profile", f"must be one of {PROFILES}")
        if float(p["amplitude"]) < 0 or float(p["rho"]) < 0:
            raise ValidationError("initial.amplitude", "amplitude and rho must be nonnegative")
        if not float(p["radius"]) > 0 or float(p["M"]) < 0 or float(p["width"]) < 0:
            raise ValidationError("initial.radius", "radius must be positive, M and width nonnegative")
        if len(p["ubar"]) != 3:
            raise ValidationError("initial.ubar", "needs three components")
        if p["constraints"] not in CONSTRAINT_MODES:
            raise ValidationError("initial.constraints", f"must be one of {CONSTRAINT_MODES}")
        if p["constraints"] == "cmc":
            _check_cmc_setting(grid, float(p["width"]), p["ubar"])
    elif recipe.kind == "flat-slicing":
        if not abs(float(p["A"])) < 1:
            raise ValidationError("initial.A", "amplitude must satisfy |A| < 1")
        _wavenumber(p["k"], grid)
    elif recipe.kind == "sound-wave":
        if not float(p["w0"]) > 0:
            raise ValidationError("initial.w0", "background must be positive")
        _wavenumber(p["k"], grid)
    elif recipe.kind == "file":
        if not p["path"]:
            raise ValidationError("initial.path", "is required")


# ---------------------------------------------------------------- recipes


def gauge_wave_state(grid: GridSpec, eos: EquationOfState, A: float, k: float | None = None,
                     tensor: str = "gauge") -> np.ndarray:
    """Wave ``v = A sin(k (x - t)) T`` moving along ``+x``.

    ``tensor="gauge"`` is the exact harmonic gauge wave
    ``ds^2 = (1 - H)(-dt^2 + dx^2) + dy^2 + dz^2``; ``"plus"`` and ``"cross"``
    are transverse-traceless polarizations, solutions of the linearized system.
    """
    k = _wavenumber(k, grid)
    x = grid.coords()[..., 0]
    T = np.zeros((4, 4))
    if tensor == "gauge":
        T[0, 0], T[1, 1] = 1.0, -1.0
    elif tensor == "plus":
        T[2, 2], T[3, 3] = 1.0, -1.0
    elif tensor == "cross":
        T[2, 3] = T[3, 2] = 1.0
    else:
        raise ValidationError("initial.tensor", f"must be one of {TENSORS}")
    Tp = pack(T)
    prof = A * np.sin(k * x)
    slope = A * k * np.cos(k * x)
    v = prof[..., None] * Tp
    dtv = -slope[..., None] * Tp
    dxv = np.zeros(grid.shape + (3, 10))
    dxv[..., 0, :] = slope[..., None] * Tp
    g = ETA + (prof[..., None, None] * T)
    u = normalized_velocity(g, np.zeros(grid.shape + (3,)))
    return pack_state(v, dtv, dxv, np.zeros(grid.shape), u, eos)


def flat_slicing_state(grid: GridSpec, eos: EquationOfState, A: float = 0.1, k: float | None = None) -> np.ndarray:
    """Minkowski space on a slice with ``h_xx = (1 + A sin(k x))^2`` and ``K = 0``.

    The slice metric is a reparametrization of flat space, so the constraints
    hold exactly; gauge completion supplies a nonzero ``d_t g_0x`` and the
    evolution is pure harmonic-gauge dynamics of flat spacetime.
    """
    k = _wavenumber(k, grid)
    x = grid.coords()[..., 0]
    h = np.zeros(grid.shape + (6,))
    h[..., 0] = (1.0 + A * np.sin(k * x)) ** 2
    h[..., 3] = 1.0
    h[..., 5] = 1.0
    g, dtg = complete_gauge_data(GeometricData(h, np.zeros(grid.shape + (6,))), grid)
    v = g - pack(ETA)
    # exact spatial derivatives of the slice metric
    dxv = np.zeros(grid.shape + (3, 10))
    dxv[..., 0, 4] = 2.0 * (1.0 + A * np.sin(k * x)) * A * k * np.cos(k * x)
    u = normalized_velocity(ETA + unpack(v), np.zeros(grid.shape + (3,)))
    return pack_state(v, dtg, dxv, np.zeros(grid.shape), u, eos)


def _ball_profile(name: str, r):
    if name == "bump":
        return bump(r, 1.0) * np.e
    if name == "gaussian":
        return np.exp(-4.0 * r * r)
    return np.maximum(0.0, 1.0 - r * r) ** 2


def fluid_ball_state(grid: GridSpec, eos: EquationOfState, profile="bump", amplitude=0.1, radius=0.5,
                     rho=0.0, M=0.5, width=0.0, ubar=(0.0, 0.0, 0.0), constraints="none") -> np.ndarray:
    """Compact fluid ball completed in harmonic gauge.

    ``w0 = amplitude * profile(|x| / radius)`` is regularized to
    ``chi_M (w0 * phi + rho)`` (``width`` is the mollifier radius, 0 skips it).
    The velocity has constant spatial part ``ubar``.

    ``constraints="none"`` puts the fluid on flat, time-symmetric data, which
    violates the Hamiltonian constraint at order ``w^beta``. ``"cmc"`` solves
    the constraints instead (see ``cmc_slab_state``).
    """
    if constraints == "cmc":
        _check_cmc_setting(grid, width, ubar)
        wfun = lambda r: cutoff_chi(r, M) * (amplitude * _ball_profile(profile, r / radius) + rho)
        return cmc_slab_state(grid, eos, wfun)
    r = grid.radius()
    w0 = amplitude * _ball_profile(profile, r / radius)
    w = regularize_initial(w0, rho, M, grid, width=width)
    h = np.broadcast_to(DELTA3_PACKED, grid.shape + (6,))
    g, dtg = complete_gauge_data(GeometricData(h, np.zeros(grid.shape + (6,))), grid)
    v = g - pack(ETA)
    ub = np.broadcast_to(np.asarray(ubar, dtype=float), grid.shape + (3,))
    u = normalized_velocity(ETA + np.zeros(grid.shape + (4, 4)), ub)
    dxv = np.zeros(grid.shape + (3, 10))
    return pack_state(v, dtg, dxv, w, u, eos)


def _check_cmc_setting(grid: GridSpec, width: float, ubar) -> None:
    if grid.boundary != "periodic" or grid.active != (0,):
        raise ValidationError("initial.constraints", "cmc data need a periodic grid with only the x axis active")
    if width != 0:
        raise ValidationError("initial.width", "cmc data use the analytic profile; width must be 0")
    if any(float(c) != 0 for c in ubar):
        raise ValidationError("initial.ubar", "cmc data are for fluid at rest")


@dataclass(frozen=True)
class CmcSolution:
    """Conformal factor ``psi(|x|)`` and mean curvature ``k`` of a periodic slab."""

    k: float
    psi: object  # dense ODE solution, ``psi(r) -> (psi, psi')``
    half_period: float


def solve_cmc_slab(wfun, eos: EquationOfState, half_period: float, rtol=1e-13, atol=1e-15) -> CmcSolution:
    """Solve the Lichnerowicz equation for ``h = psi^4 delta``, ``K = (k/3) psi^4 delta``.

    With constant mean curvature the momentum constraint holds identically, and
    the Hamiltonian constraint for fluid at rest reduces to
    ``psi'' = (k^2 / 12 - 2 pi w^beta) psi^5``. Shooting from ``psi(0) = 1``,
    ``psi'(0) = 0``, the value of ``k^2`` is fixed by ``psi'(half_period) = 0``,
    so the even extension is smooth and periodic.
    """
    from scipy.integrate import solve_ivp
    from scipy.optimize import brentq

    def rhs(r, y, k2):
        src = float(wfun(np.array(r))) ** eos.beta
        return [y[1], (k2 / 12.0 - 2.0 * np.pi * src) * y[0] ** 5]

    def shoot(k2, dense=False):
        sol = solve_ivp(rhs, (0.0, half_period), [1.0, 0.0], method="DOP853", rtol=rtol, atol=atol,
                        dense_output=dense, args=(k2,))
        if dense:
            return sol
        return sol.y[1, -1] if sol.success else np.inf

    if shoot(0.0) >= 0:  # no matter
        k2 = 0.0
    else:
        hi = 1.0
        while shoot(hi) <= 0:
            hi *= 2.0
        k2 = brentq(shoot, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    sol = shoot(k2, dense=True)
    return CmcSolution(float(np.sqrt(k2)), sol.sol, half_period)


def cmc_slab_state(grid: GridSpec, eos: EquationOfState, wfun, sign: float = 1.0) -> np.ndarray:
    """Fluid at rest on constraint-satisfying, constant-mean-curvature data.

    ``wfun(r)`` is the Makino profile as a function of ``|x|``; it must vanish
    near ``x = +-L/2``. The slice metric and its ``x`` derivative are evaluated
    from the ODE solution, and the lapse, shift and their time derivatives come
    from harmonic gauge completion. ``sign`` flips the mean curvature.
    """
    L = grid.extent[0]
    cmc = solve_cmc_slab(wfun, eos, 0.5 * L)
    x = grid.coords()[..., 0]
    y = cmc.psi(np.abs(x).ravel()).reshape((2,) + x.shape)
    psi, dpsi = y[0], np.sign(x) * y[1]
    h = np.zeros(grid.shape + (6,))
    for c in (0, 3, 5):
        h[..., c] = psi**4
    geo = GeometricData(h, (sign * cmc.k / 3.0) * h)
    g, dtg = complete_gauge_data(geo, grid)
    v = g - pack(ETA)
    dxv = np.zeros(grid.shape + (3, 10))
    for c in (4, 7, 9):
        dxv[..., 0, c] = 4.0 * psi**3 * dpsi
    u = normalized_velocity(ETA + unpack(v), np.zeros(grid.shape + (3,)))
    return pack_state(v, dtg, dxv, wfun(np.abs(x)), u, eos)


def sound_eigenvector(w0: float, eos: EquationOfState) -> tuple[float, np.ndarray]:
    """Right-moving acoustic mode of the rest fluid on Minkowski (scaled variables).

    Returns ``(speed, vector)`` with ``A^1 r = speed A^0 r`` and ``r[0] = 1``.
    """
    from scipy.linalg import eigh

    A = scaled_fluid_matrices(ETA, np.float64(w0), np.array([1.0, 0, 0, 0]), eos)
    vals, vecs = eigh(A[1], A[0])
    k = int(np.argmax(vals))
    r = vecs[:, k] / vecs[0, k]
    return float(vals[k]), r


def sound_wave_state(grid: GridSpec, eos: EquationOfState, w0: float = 0.01, A: float = 1e-6,
                     k: float | None = None) -> np.ndarray:
    """Uniform rest fluid ``w0`` with a right-moving sound wave ``w = w0 + A sin(k x)``."""
    k = _wavenumber(k, grid)
    x = grid.coords()[..., 0]
    _, r = sound_eigenvector(w0, eos)
    W = make_W(np.full(grid.shape, w0), np.broadcast_to([1.0, 0, 0, 0], grid.shape + (4,)), eos)
    W = W + (eos.kappa0 * A * np.sin(k * x))[..., None] * r
    U = np.zeros(grid.shape + (N_STATE,))
    U[..., 50:55] = W
    return U


def build_state(scn: Scenario) -> np.ndarray:
    """Initial state of a scenario, checked for causality and a definite ``A0``."""
    try:
        U = _recipe_state(scn)
    except CausalityViolation as exc:
        raise ValidationError("initial", f"sound speed squared {exc.sigma2:.4g} >= 1 at {exc.point}") from None
    validate_state(U, scn.eos)
    return U


def _recipe_state(scn: Scenario) -> np.ndarray:
    p = scn.recipe.params
    kind = scn.recipe.kind
    grid, eos = scn.grid, scn.eos
    if kind == "minkowski-vacuum":
        U = np.zeros(grid.shape + (N_STATE,))
    elif kind == "gauge-wave":
        U = gauge_wave_state(grid, eos, float(p["A"]), p["k"], p["tensor"])
    elif kind == "fluid-ball":
        U = fluid_ball_state(grid, eos, p["profile"], float(p["amplitude"]), float(p["radius"]),
                             float(p["rho"]), float(p["M"]), float(p["width"]), p["ubar"],
                             p["constraints"])
    elif kind == "flat-slicing":
        U = flat_slicing_state(grid, eos, float(p["A"]), p["k"])
    elif kind == "sound-wave":
        U = sound_wave_state(grid, eos, float(p["w0"]), float(p["A"]), p["k"])
    elif kind == "file":
        U, _ = read_binary(p["path"])
        if U.shape != grid.shape + (N_STATE,):
            raise ValidationError("initial.path", f"state shape {U.shape} does not match the grid")
    else:
        raise ValidationError("initial.recipe", f"unknown recipe {kind}")
    return U


def validate_state(U, eos: EquationOfState) -> None:
    """Causality (``sigma^2 < 1``) and positivity of ``A0`` at ``t = 0``."""
    w = U[..., 50] / eos.kappa0
    try:
        check_causal(w, eos)
    except CausalityViolation as exc:
        raise ValidationError("initial", f"sound speed squared {exc.sigma2:.4g} >= 1 at {exc.point}") from None
    if np.any(w < 0):
        raise ValidationError("initial", "Makino variable must be nonnegative")
    try:
        a0_min_eigenvalue(U, eos)
    except EinsteulerError as exc:
        raise ValidationError("initial", f"A0 is not positive definite: {exc}") from None

