"""Model parameters and the right-hand sides of the travelling-wave systems.

The chemotaxis model is

    u_t = D_u u_xx - K w,
    w_t = D_w w_xx - (chi w u_x / u)_x,

with D_u = mu * eps and D_w = eps. In the comoving frame z = x - c t and after
introducing v = u_z and the flux variable ``u_tilde = mu eps u_z + c u`` the
travelling-wave problem becomes a four-dimensional slow system in z, or an
equivalent fast system in y = z / eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .errors import DiffusionExceedsChi, NonPositiveParameter, SingularState

#: Left end state of every wave; fixed by the z -> -inf limit of the closed form.
U_LEFT = 0.0

#: The conserved fluxes v_tilde and w_tilde vanish identically because every
#: flux decays at +-inf.
V_TILDE = 0.0
W_TILDE = 0.0

#: States with u at or below this are treated as the singular point u = 0.
U_SINGULAR = 1e-300


@dataclass(frozen=True)
class ModelParams:
    chi: float = 2.0
    K: float = 1.0
    c: float = 2.0
    u_r: float = 1.0
    A: float = 4.0
    mu: float = 1.0
    eps: float = 0.1

    @property
    def d_u(self) -> float:
        return self.mu * self.eps

    @property
    def d_w(self) -> float:
        return self.eps

    def replace(self, **changes) -> "ModelParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ModelParams(**values)


def validate(params: ModelParams, exact: bool = False) -> ModelParams:
    """Check parameter invariants and return ``params`` unchanged.

    With ``exact=True`` the closed-form constraint 0 < D_w < chi is enforced
    as well.
    """
    for name in ("chi", "K", "c", "u_r", "A"):
        value = getattr(params, name)
        if not (math.isfinite(value) and value > 0):
            raise NonPositiveParameter(name, value)
    for name in ("mu", "eps"):
        value = getattr(params, name)
        if not (math.isfinite(value) and value >= 0):
            raise NonPositiveParameter(name, value)
    if exact:
        if params.d_w >= params.chi:
            raise DiffusionExceedsChi(
                f"closed-form wave needs D_w < chi (D_w={params.d_w}, chi={params.chi})"
            )
        if params.d_w <= 0:
            raise NonPositiveParameter("eps", params.eps)
    return params


class PhasePoint(NamedTuple):
    u: float
    v: float
    w: float
    u_tilde: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _check_u(u):
    if u <= U_SINGULAR:
        raise SingularState(f"u = {u!r} is at the singular point u = 0")


def fast_rhs(state, params: ModelParams) -> PhasePoint:
    """Fast system in y = z / eps: returns (u_y, v_y, w_y, u_tilde_y)."""
    u, v, w, ut = state
    _check_u(u)
    c, K, chi, mu, eps = params.c, params.K, params.chi, params.mu, params.eps
    return PhasePoint(
        (ut - c * u) / mu,
        (-c * v + K * w) / mu,
        -c * w + chi * v * w / u,
        eps * K * w,
    )


def slow_rhs_scaled(state, params: ModelParams) -> np.ndarray:
    """Slow system in z with the small factors kept on the left.

    Returns ``(mu eps u_z, mu eps v_z, eps w_z, u_tilde_z)``, which stays
    finite for mu = 0 or eps = 0.
    """
    u, v, w, ut = state
    _check_u(u)
    c, K, chi = params.c, params.K, params.chi
    return np.array([ut - c * u, -c * v + K * w, -c * w + chi * v * w / u, K * w])


def full_slow_rhs_scaled(state, params: ModelParams, v_tilde=V_TILDE, w_tilde=W_TILDE):
    """Six-variable conservation form before the v_tilde, w_tilde reduction.

    ``state`` is (u, v, w, u_tilde); the two extra conserved fluxes are
    passed in and are constant along orbits.
    """
    u, v, w, ut = state
    _check_u(u)
    c, K, chi = params.c, params.K, params.chi
    return np.array(
        [
            ut - c * u,
            v_tilde - c * v + K * w,
            w_tilde - c * w + chi * v * w / u,
            K * w,
            0.0,
            0.0,
        ]
    )


def layer_jacobian(state, params: ModelParams) -> np.ndarray:
    """Jacobian of the layer problem over (u, v, w) with u_tilde frozen."""
    u, v, w, _ = state
    _check_u(u)
    c, K, chi, mu = params.c, params.K, params.chi, params.mu
    return np.array(
        [
            [-c / mu, 0.0, 0.0],
            [0.0, -c / mu, K / mu],
            [-chi * v * w / u**2, chi * w / u, -c + chi * v / u],
        ]
    )


def on_critical_manifold(state, params: ModelParams, tol: float = 0.0) -> bool:
    """Membership test for the layer equilibria set S."""
    u, v, w, ut = state
    c, K, chi = params.c, params.K, params.chi
    ok = abs(u - ut / c) <= tol * max(1.0, abs(u)) and abs(v - K * w / c) <= tol * max(1.0, abs(v))
    return ok and abs(w * (chi * v / u - c)) <= tol * max(1.0, abs(w))
