"""Waves for small eps > 0: slow manifolds, heteroclinic shooting, eps-sweeps.

For eps > 0 the repelling branch deforms into the ray ``S_r_eps`` which is
known in closed form and is exactly invariant under the slow flow, while the
attracting branch does not move at all. A wave is found by leaving
``S_r_eps`` along its unstable direction and integrating the fast system
until the orbit settles on ``S_a``.

The travelling-wave equations are homogeneous of degree one in
(u, v, w, u_tilde), so every orbit comes with a one-parameter family of
rescaled copies. Shots are normalized so that u_tilde equals c u_r at the
middle of the fast drop (w/u_tilde at half its S_r_eps value), which is
where the singular orbit jumps. With that normalization
the landing value of u is the perturbed end state u_r(eps).
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, DegenerateDenominator, FitIllConditioned, NegativeUTilde, NoLanding
from .exact import WaveProfile
from .model import ModelParams, PhasePoint, fast_rhs, slow_rhs_scaled
from .ode import Event, Trajectory, integrate
from .singular import S_A, S_R, branch_point, reduced_flow_on_Sr, unstable_direction

log = logging.getLogger(__name__)

S_A_EPS = "S_a_eps"
S_R_EPS = "S_r_eps"


def _eps(params, epsilon):
    return params.eps if epsilon is None else float(epsilon)


def _sr_eps_coefficients(params: ModelParams, eps: float):
    """(u, v, w) per unit u_tilde on S_r_eps."""
    chi, c, K, mu = params.chi, params.c, params.K, params.mu
    d1 = chi - eps
    d2 = chi - eps * (1.0 - mu)
    if d1 <= 0 or d2 <= 0:
        raise DegenerateDenominator(
            f"slow manifold needs chi - eps > 0 and chi - eps(1 - mu) > 0 (got {d1}, {d2})"
        )
    return d1 / (c * d2), 1.0 / d2, c / (K * d1)


def perturbed_point(branch: str, u_tilde: float, params: ModelParams, epsilon: float | None = None) -> PhasePoint:
    eps = _eps(params, epsilon)
    if u_tilde < 0:
        raise NegativeUTilde(f"u_tilde must be >= 0 (got {u_tilde})")
    if branch in (S_A_EPS, S_A):
        return branch_point(S_A, u_tilde, params)
    if branch in (S_R_EPS, S_R):
        a, b, d = _sr_eps_coefficients(params, eps)
        return PhasePoint(a * u_tilde, b * u_tilde, d * u_tilde, u_tilde)
    raise ValueError(f"unknown branch {branch!r}")


def invariance_residual(
    branch: str,
    u_tilde: float,
    params: ModelParams,
    epsilon: float | None = None,
    point=None,
) -> float:
    """Relative defect between the slow vector field and the manifold tangent.

    The manifold is a ray p(u_tilde) = u_tilde * q, so its tangent under the
    slow flow is q * u_tilde_z with u_tilde_z = K w. The comparison is done
    with the small factors (mu eps, eps) multiplied through, which keeps the
    check finite at mu = 0. ``point`` overrides the evaluated point (used for
    negative controls).
    """
    eps = _eps(params, epsilon)
    p = perturbed_point(branch, u_tilde, params, eps)
    if branch in (S_A_EPS, S_A):
        q = np.array([1.0 / params.c, 0.0, 0.0, 1.0])
    else:
        q = np.array([*_sr_eps_coefficients(params, eps), 1.0])
    x = np.array(p if point is None else point, dtype=float)
    u, v, w, ut = x
    field_ = slow_rhs_scaled(x, params)
    tangent = q * params.K * w
    lhs = tangent * np.array([params.mu * eps, params.mu * eps, eps, 1.0])
    scale = np.linalg.norm(
        [ut, params.c * u, params.c * v, params.K * w, params.c * w, params.chi * v * w / u]
    )
    return float(np.linalg.norm(lhs - field_) / scale)


@dataclass
class HeteroclinicResult:
    epsilon: float
    profile: WaveProfile
    u_end: float
    end_state_gap: float
    speed_offset: float
    scale: float
    trajectory: Trajectory
    meta: dict = field(default_factory=dict)


def shoot_heteroclinic(
    params: ModelParams,
    epsilon: float | None = None,
    u_tilde_start: float | None = None,
    delta: float = 1e-8,
    landing_tol: float = 1e-9,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    y_max: float = 1000.0,
    z_min: float = -10.0,
    n_slow: int = 400,
    max_steps: int = 10_000_000,
) -> HeteroclinicResult:
    """Shoot from S_r_eps along its unstable direction and land on S_a.

    ``delta`` is the displacement relative to the norm of the starting point;
    a negative value flips it onto the escaping side (raises BlowUp).
    ``u_tilde_start`` defaults to c u_r / 2 and only affects the unscaled
    trajectory: results are reported after rescaling to the jump
    normalization described in the module docstring.
    """
    eps = _eps(params, epsilon)
    if params.mu <= 0:
        raise ValueError("shooting integrates the mu > 0 fast system")
    if not eps < params.chi:
        raise DegenerateDenominator("need eps < chi")
    c, K, chi, u_r = params.c, params.K, params.chi, params.u_r
    ut0 = c * u_r / 2 if u_tilde_start is None else float(u_tilde_start)
    if ut0 <= 0:
        raise ValueError("u_tilde_start must be positive")
    run_params = params.replace(eps=eps)

    p0 = perturbed_point(S_R_EPS, ut0, params, eps)
    e3 = unstable_direction(p0, params)
    e = np.array([e3[0], e3[1], e3[2], 0.0])
    start = np.array(p0) + delta * np.linalg.norm(p0) * e

    size = ut0 / (c * u_r)  # unscaled size relative to the normalized orbit
    tol = landing_tol * size

    def rhs(_, x):
        return fast_rhs(x, run_params)

    # w / u_tilde is scale-free; on S_r_eps it equals the w-coefficient
    ratio = _sr_eps_coefficients(params, eps)[2]
    cap_ratio = 10 * c / (chi * K)

    events = [
        Event(lambda _, x: max(x[1], x[2]) - tol, "landing", True, -1),
        Event(lambda _, x: x[2] / x[3] - cap_ratio, "blowup", True, 1),
        Event(lambda _, x: x[2] / x[3] - 0.5 * ratio, "midpoint", False, -1),
    ]
    tr = integrate(rhs, start, (0.0, y_max), rtol=rtol, atol=atol, events=events, max_steps=max_steps)
    if tr.event_name == "blowup":
        raise BlowUp(f"w/u_tilde exceeded {cap_ratio:g}; the displacement points away from S_a")
    if tr.event_name != "landing":
        raise NoLanding(f"no landing on S_a within y = {y_max}")
    if np.any(tr.y[:, 0] <= 0) or np.any(tr.y[:, 2] < 0):
        raise NoLanding("trajectory left the physical region u > 0, w >= 0")

    if not tr.events["midpoint"]:
        raise NoLanding("trajectory landed without crossing the middle of the drop")
    y_jump, x_jump = tr.events["midpoint"][0]
    s = c * u_r / x_jump[3]
    states = s * tr.y
    u_end = float(states[-1, 0])
    gap = abs(u_end - u_r)

    if eps > 0:
        z_fast = eps * (tr.t - y_jump)
        z0 = z_fast[0]
        z_slow = np.linspace(min(z_min, z0 - 1.0), z0, n_slow, endpoint=False)
        ut_slow = states[0, 3] * np.exp(c * (z_slow - z0) / (chi - eps))
        a, b, d = _sr_eps_coefficients(params, eps)
        z = np.concatenate([z_slow, z_fast])
        cols = np.vstack([np.column_stack([a * ut_slow, b * ut_slow, d * ut_slow, ut_slow]), states])
        coordinate = "z"
    else:
        z, cols, coordinate = tr.t - y_jump, states, "y"
    profile = WaveProfile(
        z,
        cols[:, 0],
        cols[:, 2],
        construction="shooting",
        v=cols[:, 1],
        u_tilde=cols[:, 3],
        coordinate=coordinate,
        meta={"epsilon": eps, "y_jump": float(y_jump)},
    )
    log.debug("eps=%g landed at y=%.6g after %d steps, gap=%.6g", eps, tr.t_end, tr.n_steps, gap)
    return HeteroclinicResult(
        epsilon=eps,
        profile=profile,
        u_end=u_end,
        end_state_gap=gap,
        speed_offset=c * gap / u_r,
        scale=s,
        trajectory=tr,
        meta={"u_tilde_start": ut0, "delta": delta, "y_land": float(tr.t_end), "steps": tr.n_steps},
    )


def profile_distance(result: HeteroclinicResult, params: ModelParams, layer_halfwidth: float = 20.0) -> float:
    """Sup distance between a shot profile and the singular orbit.

    Both have their jump at z = 0. u is compared everywhere; w only outside
    the inner layer |z| < layer_halfwidth * eps, because the singular w has a
    jump there that no smooth profile can approach uniformly.
    """
    prof = result.profile
    if prof.coordinate != "z":
        raise ValueError("profile distance needs an eps > 0 shot")
    z = prof.z
    pt = reduced_flow_on_Sr(np.minimum(z, 0.0), params)
    left = z <= 0
    u_ref = np.where(left, pt.u, params.u_r)
    w_ref = np.where(left, pt.w, 0.0)
    outer = np.abs(z) >= layer_halfwidth * result.epsilon
    return float(max(np.max(np.abs(prof.u - u_ref)), np.max(np.abs(prof.w - w_ref)[outer])))


@dataclass
class ConvergenceTable:
    epsilons: np.ndarray
    gaps: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    results: list = field(default_factory=list, repr=False)

    def rows(self):
        return [
            {"epsilon": float(e), "end_state_gap": float(g), "profile_distance": float(d)}
            for e, g, d in zip(self.epsilons, self.gaps, self.distances)
        ]


def _shoot_one(args):
    params, eps, kw = args
    return shoot_heteroclinic(params, eps, **kw)


def convergence_study(
    params: ModelParams,
    epsilons,
    workers: int = 1,
    noise_floor: float = 1e-12,
    **shoot_kw,
) -> ConvergenceTable:
    """Shoot at each eps and fit log(gap) = slope * log(eps) + intercept."""
    eps = np.array(sorted({float(e) for e in epsilons}, reverse=True))
    if eps.size < 3:
        raise FitIllConditioned("need at least three distinct eps values")
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    if eps[0] / eps[-1] < 10:
        raise FitIllConditioned("eps values must span at least one decade")
    jobs = [(params, e, shoot_kw) for e in eps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_shoot_one, jobs))
    else:
        results = [_shoot_one(j) for j in jobs]
    gaps = np.array([r.end_state_gap for r in results])
    if np.any(gaps <= noise_floor) or not np.all(np.isfinite(gaps)):
        raise FitIllConditioned(f"end-state gaps reached the noise floor: {gaps}")
    dists = np.array([profile_distance(r, params) for r in results])
    slope, intercept = np.polyfit(np.log(eps), np.log(gaps), 1)
    return ConvergenceTable(eps, gaps, dists, float(slope), float(intercept), results)
