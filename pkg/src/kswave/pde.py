"""Method-of-lines simulation of the full chemotaxis PDE.

Finite volumes on a uniform grid: central differences for both diffusion
terms, first-order upwinding for the chemotactic flux (chi w u_x / u), and
explicit Euler in time under a combined diffusive/advective step bound.
Both ends are zero-flux.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FrontLeftDomain, LevelNotCrossed, NoOverlap, UnstableStep
from .exact import WaveProfile, exact_wave, limit_wave
from .model import ModelParams

U_FLOOR_REL = 1e-10
EPS_MIN = 1e-12
SAFETY = 0.4


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("need x_min < x_max")
        if self.n_cells < 16:
            raise ValueError("need at least 16 cells")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class Field1D:
    grid: Grid1D
    u: np.ndarray
    w: np.ndarray
    t: float = 0.0

    @property
    def x(self):
        return self.grid.centers

    @property
    def mass(self) -> float:
        """Total w in the domain."""
        return float(np.sum(self.w) * self.grid.dx)

    def as_profile(self) -> WaveProfile:
        return WaveProfile(self.x, self.u, self.w, construction="pde", coordinate="x", meta={"t": self.t})


def u_floor(params: ModelParams) -> float:
    return U_FLOOR_REL * params.u_r


def face_velocity(u, dx, params: ModelParams) -> np.ndarray:
    """Chemotactic velocity chi u_x / u at the interior faces."""
    u_face = np.maximum(0.5 * (u[1:] + u[:-1]), u_floor(params))
    return params.chi * (u[1:] - u[:-1]) / (dx * u_face)


def chemotaxis_flux(field: Field1D, params: ModelParams) -> np.ndarray:
    """Upwinded chemotactic flux a * w at the n - 1 interior faces."""
    a = face_velocity(field.u, field.grid.dx, params)
    w = field.w
    return np.where(a >= 0, a * w[:-1], a * w[1:])


def _laplacian(q, dx):
    # zero-flux ends via mirrored ghost cells
    lap = np.empty_like(q)
    lap[1:-1] = q[2:] - 2 * q[1:-1] + q[:-2]
    lap[0] = q[1] - q[0]
    lap[-1] = q[-2] - q[-1]
    return lap / dx**2


def stability_bound(field: Field1D, params: ModelParams, epsilon: float | None = None) -> float:
    """Largest dt allowed by the diffusive and advective limits (no safety factor)."""
    eps = params.eps if epsilon is None else epsilon
    dx = field.grid.dx
    diff = max(params.mu * eps, eps, EPS_MIN)
    bound = dx**2 / (2 * diff)
    a_max = np.max(np.abs(face_velocity(field.u, dx, params)), initial=0.0)
    if a_max > 0:
        bound = min(bound, dx / a_max)
    return bound


def stable_dt(field: Field1D, params: ModelParams, epsilon: float | None = None) -> float:
    return SAFETY * stability_bound(field, params, epsilon)


def step(field: Field1D, params: ModelParams, dt: float, epsilon: float | None = None, check: bool = True) -> Field1D:
    """One explicit Euler step. Raises UnstableStep past the stability bound."""
    eps = params.eps if epsilon is None else epsilon
    if check and dt > stability_bound(field, params, eps) * (1 + 1e-12):
        raise UnstableStep(f"dt={dt:g} exceeds the stability bound {stability_bound(field, params, eps):g}")
    dx = field.grid.dx
    u, w = field.u, field.w
    flux = np.zeros(w.size + 1)
    flux[1:-1] = chemotaxis_flux(field, params)
    du = params.mu * eps * _laplacian(u, dx) - params.K * w
    dw = eps * _laplacian(w, dx) - (flux[1:] - flux[:-1]) / dx
    u_new = np.maximum(u + dt * du, u_floor(params))
    w_new = np.maximum(w + dt * dw, 0.0)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(w_new))):
        raise UnstableStep(f"non-finite values after step at t={field.t:g}")
    return Field1D(field.grid, u_new, w_new, field.t + dt)


def initial_field(kind: str, grid: Grid1D, params: ModelParams, shift: float = 0.0, d_w: float | None = None) -> Field1D:
    """Initial data centred at x = shift.

    kind: "exact" (closed form with D_w = ``d_w`` or params.eps), "limit"
    (shock profile with the w jump ramped over three cells), "step"
    (smoothed step in u carrying the limit-profile mass) or "background".
    """
    x = grid.centers
    if kind == "exact":
        p = params.replace(mu=0.0, eps=params.eps if d_w is None else d_w)
        u, w = exact_wave(x - shift, p)
    elif kind == "limit":
        u, w = limit_wave(x - shift, params)
        w_jump = params.c**2 * params.u_r / (params.K * params.chi)
        ramp = np.clip((shift + 1.5 * grid.dx - x) / (3 * grid.dx), 0.0, 1.0)
        w = np.where(np.abs(x - shift) < 1.5 * grid.dx, w_jump * ramp, w)
    elif kind == "step":
        width = max(3 * grid.dx, 0.5)
        h = 0.5 * (1 + np.tanh((x - shift) / width))
        u = params.u_r * h
        mass = params.c * params.u_r / params.K
        w = np.exp(-(((x - shift) / width) ** 2))
        w *= mass / (np.sum(w) * grid.dx)
    elif kind == "background":
        u = np.full(grid.n_cells, params.u_r)
        w = np.zeros(grid.n_cells)
    else:
        raise ValueError(f"unknown initial condition {kind!r}")
    u = np.maximum(np.asarray(u, dtype=float), u_floor(params))
    return Field1D(grid, u, np.asarray(w, dtype=float), 0.0)


def simulate(
    initial: Field1D,
    params: ModelParams,
    t_end: float,
    output_every: float | None = None,
    epsilon: float | None = None,
) -> list[Field1D]:
    """Step ``initial`` to ``t_end``; returns snapshots including t = 0 and t_end."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    output_every = t_end if output_every is None else output_every
    n_out = int(round(t_end / output_every))
    marks = [min(k * output_every, t_end) for k in range(1, n_out + 1)]
    if marks[-1] < t_end:
        marks.append(t_end)
    field = initial
    snaps = [initial]
    t0 = initial.t
    for mark in marks:
        target = t0 + mark
        while field.t < target:
            dt = min(stable_dt(field, params, epsilon), target - field.t)
            field = step(field, params, dt, epsilon)
            if target - field.t < 1e-12 * max(1.0, abs(target)):
                field = replace(field, t=target)
        snaps.append(field)
    return snaps


def front_position(field: Field1D, level: float, params: ModelParams, margin: float = 0.05) -> float:
    """x where u first rises through level * u_r (linear interpolation)."""
    target = level * params.u_r
    u = field.u
    x = field.x
    idx = np.flatnonzero((u[:-1] < target) & (u[1:] >= target))
    if idx.size == 0:
        raise LevelNotCrossed(f"u never crosses {target:g} at t={field.t:g}")
    i = idx[0]
    xc = x[i] + (target - u[i]) * (x[i + 1] - x[i]) / (u[i + 1] - u[i])
    pad = margin * (field.grid.x_max - field.grid.x_min)
    if xc < field.grid.x_min + pad or xc > field.grid.x_max - pad:
        raise FrontLeftDomain(f"front at x={xc:g} is within {pad:g} of the boundary")
    return float(xc)


@dataclass(frozen=True)
class SpeedEstimate:
    speed: float
    uncertainty: float
    times: np.ndarray
    positions: np.ndarray


def measure_wave_speed(snapshots, level: float = 0.5, params: ModelParams | None = None, margin: float = 0.05) -> SpeedEstimate:
    """Least-squares slope of the tracked level position against time."""
    params = params or ModelParams()
    if len(snapshots) < 3:
        raise ValueError("need at least three snapshots")
    t = np.array([s.t for s in snapshots])
    x = np.array([front_position(s, level, params, margin) for s in snapshots])
    coef, cov = np.polyfit(t, x, 1, cov=True) if t.size > 3 else (np.polyfit(t, x, 1), None)
    if cov is None:
        resid = x - np.polyval(coef, t)
        sxx = np.sum((t - t.mean()) ** 2)
        err = np.sqrt(np.sum(resid**2) / max(t.size - 2, 1) / sxx)
    else:
        err = np.sqrt(cov[0, 0])
    return SpeedEstimate(float(coef[0]), float(err), t, x)


@dataclass(frozen=True)
class ProfileComparison:
    shift: float
    l2_u: float
    l2_w: float
    sup_u: float
    sup_w: float


def _golden(f, a, b, tol=1e-10, max_iter=200):
    g = (np.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def compare_profile(snapshot, reference: WaveProfile, shift_bounds=None, n_scan: int = 401) -> ProfileComparison:
    """Align ``reference`` to ``snapshot`` by the L2-optimal shift and report errors.

    The reference is evaluated at x - shift by linear interpolation and held
    constant beyond its ends (both fronts are flat there), so every shift is
    scored over the whole snapshot. Shifts that leave fewer than two
    snapshot points inside the reference range are not considered.
    """
    prof = snapshot.as_profile() if isinstance(snapshot, Field1D) else snapshot
    x, u, w = prof.z, prof.u, prof.w
    dx = np.gradient(x) if x.size > 1 else np.ones(1)
    zr = reference.z
    if shift_bounds is None:
        shift_bounds = (x[0] - zr[-1], x[-1] - zr[0])
    lo, hi = shift_bounds

    def errors(s):
        inside = np.count_nonzero((x - s >= zr[0]) & (x - s <= zr[-1]))
        if inside < 2:
            return None
        ur, wr = reference.trace(x - s)
        return u - ur, w - wr

    def cost(s):
        e = errors(s)
        if e is None:
            return np.inf
        eu, ew = e
        return float(np.sum((eu**2 + ew**2) * dx))

    scan = np.linspace(lo, hi, n_scan)
    costs = np.array([cost(s) for s in scan])
    if not np.any(np.isfinite(costs)):
        raise NoOverlap("profiles never overlap over the allowed shifts")
    k = int(np.argmin(costs))
    a, b = scan[max(k - 1, 0)], scan[min(k + 1, n_scan - 1)]
    best = _golden(cost, a, b) if b > a else scan[k]
    if cost(best) > costs[k]:
        best = scan[k]
    eu, ew = errors(best)
    return ProfileComparison(
        shift=float(best),
        l2_u=float(np.sqrt(np.sum(eu**2 * dx))),
        l2_w=float(np.sqrt(np.sum(ew**2 * dx))),
        sup_u=float(np.max(np.abs(eu))),
        sup_w=float(np.max(np.abs(ew))),
    )
