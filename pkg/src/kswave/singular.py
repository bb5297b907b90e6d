"""The eps = 0 skeleton: critical-manifold branches, fast fibres, reduced flow.

The layer problem has a line of equilibria ``S_a`` (no cells, w = 0) and a
ray ``S_r`` on which chemotaxis exactly balances advection. Both pass through
the origin. A singular wave runs up ``S_r`` on the slow scale and then drops
to ``S_a`` along a fast fibre at u_tilde = c u_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NegativeUTilde, NoLanding, NonPositiveBeta, OnIntersection
from .exact import WaveProfile
from .model import ModelParams, PhasePoint, layer_jacobian
from .ode import Event, Trajectory, integrate

S_A = "S_a"
S_R = "S_r"


def branch_point(branch: str, u_tilde: float, params: ModelParams) -> PhasePoint:
    if u_tilde < 0:
        raise NegativeUTilde(f"u_tilde must be >= 0 (got {u_tilde})")
    c, K, chi = params.c, params.K, params.chi
    if branch == S_A:
        return PhasePoint(u_tilde / c, 0.0, 0.0, u_tilde)
    if branch == S_R:
        return PhasePoint(u_tilde / c, u_tilde / chi, c * u_tilde / (chi * K), u_tilde)
    raise ValueError(f"unknown branch {branch!r}")


@dataclass(frozen=True)
class StabilityReport:
    branch: str
    eigenvalues: np.ndarray
    verdict: str  # "attracting" | "repelling" | "non-hyperbolic"


def classify_branch(branch: str, u_tilde: float, params: ModelParams) -> StabilityReport:
    if u_tilde == 0:
        raise OnIntersection("the branches intersect at the origin; no hyperbolic splitting there")
    if params.mu <= 0:
        raise ValueError("classification uses the mu > 0 layer Jacobian")
    eig = np.linalg.eigvals(layer_jacobian(branch_point(branch, u_tilde, params), params))
    eig = eig[np.lexsort((eig.imag, eig.real))]
    if np.all(eig.real < 0):
        verdict = "attracting"
    elif np.any(eig.real > 0):
        verdict = "repelling"
    else:
        verdict = "non-hyperbolic"
    return StabilityReport(branch, eig, verdict)


def jump_shift(params: ModelParams) -> float:
    """Integration constant z* that pins the fast jump to z = 0."""
    return params.chi * math.log(params.c * params.u_r) / params.c


def reduced_flow_on_Sr(z, params: ModelParams):
    """Point on S_r reached by the reduced flow u_tilde_z = c u_tilde / chi at ``z``.

    Returns a PhasePoint of floats for scalar z, of arrays otherwise.
    """
    c, K, chi = params.c, params.K, params.chi
    ut = np.exp(c * (np.asarray(z, dtype=float) + jump_shift(params)) / chi)
    pt = PhasePoint(ut / c, ut / chi, c * ut / (chi * K), ut)
    if ut.ndim == 0:
        return PhasePoint(*(float(x) for x in pt))
    return pt


def layer_rhs_mu0(w, u_tilde: float, params: ModelParams):
    """w_y of the mu = 0 layer problem, where u = u_tilde/c and v = K w/c."""
    c, K, chi = params.c, params.K, params.chi
    return -c * w + chi * K * w**2 / u_tilde


def fibre_mu0(y, u_tilde: float, params: ModelParams, beta: float | None = None) -> PhasePoint:
    """Closed-form mu = 0 fast fibre from S_r(u_tilde) (y -> -inf) to S_a (y -> +inf).

    ``beta`` defaults to chi K, which puts the midpoint of the drop at y = 0.
    """
    c, K, chi = params.c, params.K, params.chi
    if u_tilde < 0:
        raise NegativeUTilde(f"u_tilde must be >= 0 (got {u_tilde})")
    beta = chi * K if beta is None else beta
    if beta <= 0:
        raise NonPositiveBeta(f"beta must be > 0 (got {beta})")
    y = np.asarray(y, dtype=float)
    # chi K + beta e^{c y} without overflow for large y
    denom_log = np.logaddexp(math.log(chi * K), math.log(beta) + c * y)
    inv = np.exp(-denom_log)
    u = np.full_like(inv, u_tilde / c)
    pt = PhasePoint(u, K * u_tilde * inv, c * u_tilde * inv, np.full_like(inv, u_tilde))
    if inv.ndim == 0:
        return PhasePoint(*(float(x) for x in pt))
    return pt


def unstable_direction(point, params: ModelParams) -> np.ndarray:
    """Unit unstable eigenvector of the layer Jacobian at ``point``, with w-component < 0."""
    eigval, eigvec = np.linalg.eig(layer_jacobian(point, params))
    k = int(np.argmax(eigval.real))
    if eigval[k].real <= 0:
        raise ValueError("no unstable direction at this point")
    vec = np.real(eigvec[:, k])
    vec /= np.linalg.norm(vec)
    return -vec if vec[2] > 0 else vec


@dataclass
class Fibre:
    y: np.ndarray
    points: np.ndarray  # rows (u, v, w, u_tilde)
    trajectory: Trajectory | None = None

    @property
    def start(self):
        return PhasePoint(*self.points[0])

    @property
    def end(self):
        return PhasePoint(*self.points[-1])


def fibre_numeric(
    u_tilde: float,
    params: ModelParams,
    y_max: float = 200.0,
    delta: float = 1e-6,
    landing_tol: float = 1e-8,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    sign: int = 1,
) -> Fibre:
    """Integrate the (v, w) layer flow with u frozen at u_tilde/c.

    Starts at S_r(u_tilde) displaced by ``delta`` (relative to the size of
    the point) along the unstable eigenvector with decreasing w, and stops
    once both v and w are below ``landing_tol``. ``sign=-1`` flips the
    displacement; that trajectory escapes and raises NoLanding.
    """
    if u_tilde <= 0:
        raise OnIntersection("fast fibres need u_tilde > 0")
    if params.mu <= 0:
        raise ValueError("fibre_numeric needs mu > 0; use fibre_mu0")
    c, K, chi, mu = params.c, params.K, params.chi, params.mu
    p0 = branch_point(S_R, u_tilde, params)
    u = p0.u
    e = unstable_direction(p0, params)
    dist = delta * np.linalg.norm(p0) * sign
    start = np.array([p0.v + dist * e[1], p0.w + dist * e[2]])
    w_cap = 10 * p0.w

    def rhs(_, y):
        v, w = y
        return np.array([(-c * v + K * w) / mu, -c * w + chi * v * w / u])

    land = Event(lambda _, y: max(abs(y[0]), abs(y[1])) - landing_tol, "landing", True, -1)
    blow = Event(lambda _, y: y[1] - w_cap, "blowup", True, 1)
    tr = integrate(rhs, start, (0.0, y_max), rtol=rtol, atol=atol, events=[land, blow])
    if tr.event_name != "landing":
        raise NoLanding(
            f"fibre at u_tilde={u_tilde} did not land on S_a within y={y_max} "
            f"(stopped by {tr.event_name or 'span end'})"
        )
    n = tr.t.size
    pts = np.column_stack([np.full(n, u), tr.y[:, 0], tr.y[:, 1], np.full(n, u_tilde)])
    return Fibre(tr.t, pts, tr)


@dataclass
class SingularOrbit:
    slow_segment: WaveProfile
    jump_z: float
    fibre: Fibre
    rest_point: PhasePoint
    params: ModelParams

    def trace(self, z):
        """(u, w) of the singular orbit on the slow scale."""
        z = np.asarray(z, dtype=float)
        pt = reduced_flow_on_Sr(np.minimum(z, self.jump_z), self.params)
        left = z <= self.jump_z
        u = np.where(left, pt.u, self.rest_point.u)
        w = np.where(left, pt.w, self.rest_point.w)
        if u.ndim == 0:
            return float(u), float(w)
        return u, w


def assemble_singular_orbit(params: ModelParams, z_min: float = -10.0, n: int = 1001, **fibre_kw) -> SingularOrbit:
    if not z_min < 0:
        raise ValueError("z_min must be negative")
    ut_jump = params.c * params.u_r
    z = np.linspace(z_min, 0.0, n)
    pt = reduced_flow_on_Sr(z, params)
    slow = WaveProfile(z, pt.u, pt.w, construction="singular", v=pt.v, u_tilde=pt.u_tilde)
    if params.mu > 0:
        fibre = fibre_numeric(ut_jump, params, **fibre_kw)
    else:
        y = np.linspace(-20.0, 20.0, 801)
        fibre = Fibre(y, np.column_stack(fibre_mu0(y, ut_jump, params)))
    return SingularOrbit(slow, 0.0, fibre, branch_point(S_A, ut_jump, params), params)
