"""Closed-form travelling waves for D_u = 0 and their D_w -> 0 shock limit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DiffusionZero, SingularState
from .model import U_SINGULAR, ModelParams, validate

CONSTRUCTIONS = ("exact", "limit", "singular", "shooting", "pde")


@dataclass(frozen=True)
class ExactWaveConstants:
    sigma1: float
    sigma2: float
    exponent_u: float
    exponent_w: float


@dataclass
class WaveProfile:
    """Sampled front profile z -> (u, w), optionally with v and u_tilde.

    ``coordinate`` names the independent variable ("z" for the wave frame,
    "x" for a PDE snapshot, "y" for the fast scale).
    """

    z: np.ndarray
    u: np.ndarray
    w: np.ndarray
    construction: str = "exact"
    v: np.ndarray | None = None
    u_tilde: np.ndarray | None = None
    coordinate: str = "z"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if not (self.z.shape == self.u.shape == self.w.shape) or self.z.ndim != 1:
            raise ValueError("z, u, w must be 1-d arrays of equal length")
        if self.z.size > 1 and not np.all(np.diff(self.z) > 0):
            raise ValueError("profile coordinate must be strictly increasing")

    def __len__(self):
        return self.z.size

    def trace(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation of (u, w) at ``z``."""
        return np.interp(z, self.z, self.u), np.interp(z, self.z, self.w)


def wave_constants(params: ModelParams) -> ExactWaveConstants:
    validate(params, exact=True)
    chi, K, c, A, u_r, dw = params.chi, params.K, params.c, params.A, params.u_r, params.d_w
    return ExactWaveConstants(
        sigma1=A * K * (chi - dw) / c**2,
        sigma2=u_r ** ((dw - chi) / dw),
        exponent_u=dw / (dw - chi),
        exponent_w=chi / (dw - chi),
    )


def _check_exact(params):
    if params.d_w == 0:
        raise DiffusionZero("D_w = 0 has no smooth closed form; use limit_wave")
    return wave_constants(params)


def _log_bracket(z, params, k):
    # log(sigma2 + sigma1 exp(-c z / D_w)), evaluated without overflow
    return np.logaddexp(math.log(k.sigma2), math.log(k.sigma1) - params.c * z / params.d_w)


def exact_wave(z, params: ModelParams):
    """Closed-form (u, w) of the D_u = 0 wave with D_w = ``params.eps``.

    Works on scalars or arrays. The evaluation is done in log space so that
    very negative z does not overflow ``exp(-c z / D_w)``.
    """
    k = _check_exact(params)
    z = np.asarray(z, dtype=float)
    log_s = _log_bracket(z, params, k)
    u = np.exp(k.exponent_u * log_s)
    w = np.exp(math.log(params.A) - params.c * z / params.d_w + k.exponent_w * log_s)
    if u.ndim == 0:
        return float(u), float(w)
    return u, w


def exact_wave_derivatives(z, params: ModelParams):
    """Analytic (u, u', u'', w, w', w'') of the closed-form wave."""
    k = _check_exact(params)
    z = np.asarray(z, dtype=float)
    c, chi, dw = params.c, params.chi, params.d_w
    u, w = exact_wave(z, params)
    # q = sigma1 E / (sigma2 + sigma1 E), E = exp(-c z / D_w)
    q = expit(math.log(k.sigma1) - c * z / dw - math.log(k.sigma2))
    qq = q * (1.0 - q)
    lu1 = c * q / (chi - dw)
    lu2 = -(c**2) * qq / (dw * (chi - dw))
    lw1 = -(c / dw) * (1.0 + k.exponent_w * q)
    lw2 = (c / dw) ** 2 * k.exponent_w * qq
    return (
        u,
        u * lu1,
        u * (lu2 + lu1**2),
        w,
        w * lw1,
        w * (lw2 + lw1**2),
    )


def limit_wave(z, params: ModelParams):
    """Shock profile obtained as D_w -> 0; the z <= 0 branch owns z = 0."""
    z = np.asarray(z, dtype=float)
    c, chi, K, u_r = params.c, params.chi, params.K, params.u_r
    left = z <= 0
    growth = np.exp(np.where(left, c * z / chi, 0.0))
    u = np.where(left, u_r * growth, u_r)
    w = np.where(left, c**2 * u_r / (K * chi) * growth, 0.0)
    if u.ndim == 0:
        return float(u), float(w)
    return u, w


def twave_residual_from_derivatives(derivs, params: ModelParams):
    """Residuals of the two travelling-wave ODEs given (u, u', u'', w, w', w'')."""
    u, u1, u2, w, w1, w2 = (np.asarray(d, dtype=float) for d in derivs)
    if np.any(u <= U_SINGULAR):
        raise SingularState("travelling-wave residual needs u > 0")
    c, K, chi = params.c, params.K, params.chi
    r_u = params.d_u * u2 - K * w + c * u1
    g = u1 / u
    g1 = u2 / u - g**2
    r_w = params.d_w * w2 - chi * (w1 * g + w * g1) + c * w1
    return r_u, r_w


def fd_step(z):
    return np.maximum(1e-5, 1e-5 * np.abs(z))


def tw_ode_residual(
    profile: Callable,
    z,
    params: ModelParams,
    h=None,
    derivatives: Callable | None = None,
):
    """Residuals (r_u, r_w) of the travelling-wave ODEs at ``z``.

    ``profile`` maps z to (u, w). When ``derivatives`` is given it must map z
    to (u, u', u'', w, w', w'') and is used instead of central differences.
    """
    if derivatives is not None:
        return twave_residual_from_derivatives(derivatives(z), params)
    z = np.asarray(z, dtype=float)
    h = fd_step(z) if h is None else np.asarray(h, dtype=float)
    um, wm = (np.asarray(a, dtype=float) for a in profile(z - h))
    u0, w0 = (np.asarray(a, dtype=float) for a in profile(z))
    up, wp = (np.asarray(a, dtype=float) for a in profile(z + h))
    derivs = (
        u0,
        (up - um) / (2 * h),
        (up - 2 * u0 + um) / h**2,
        w0,
        (wp - wm) / (2 * h),
        (wp - 2 * w0 + wm) / h**2,
    )
    return twave_residual_from_derivatives(derivs, params)


def asymptotic_ratio(params: ModelParams) -> float:
    """Limit of w/u as z -> -inf: c^2 / (K (chi - D_w))."""
    if not 0 <= params.d_w < params.chi:
        raise ValueError("asymptotic ratio needs 0 <= D_w < chi")
    return params.c**2 / (params.K * (params.chi - params.d_w))


def sample_profile(construction: str, z_min: float, z_max: float, n: int, params: ModelParams) -> WaveProfile:
    if not z_min < z_max:
        raise ValueError("need z_min < z_max")
    if n < 2:
        raise ValueError("need at least two samples")
    z = np.linspace(z_min, z_max, n)
    if construction == "exact":
        u, w = exact_wave(z, params)
    elif construction == "limit":
        u, w = limit_wave(z, params)
    else:
        raise ValueError(f"sample_profile handles 'exact' or 'limit', not {construction!r}")
    return WaveProfile(z, u, w, construction=construction, meta={"d_w": params.d_w})
