"""Adaptive Dormand-Prince 5(4) integrator with dense output and events.

Small and self-contained so that shooting code can stop exactly on event
surfaces and report why it stopped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import EventNotBracketed, MaxStepsExceeded, StepSizeUnderflow

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# fourth-order continuous extension (Hairer, Norsett & Wanner)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

EVENT_TOL = 1e-10


@dataclass
class Event:
    """Scalar event g(t, y) = 0.

    direction: +1 only catches increasing crossings, -1 only decreasing,
    0 catches both. A terminal event stops the integration.
    """

    func: Callable[[float, np.ndarray], float]
    name: str = "event"
    terminal: bool = True
    direction: int = 0


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    termination: str  # "event" | "span_end" | "failure"
    event_name: str | None = None
    events: dict = field(default_factory=dict)  # name -> list of (t, y)
    n_steps: int = 0

    @property
    def t_end(self):
        return self.t[-1]

    @property
    def y_end(self):
        return self.y[-1]


class _Dense:
    def __init__(self, t0, y0, h, K):
        self.t0, self.y0, self.h = t0, y0, h
        self.Q = K.T @ _P

    def __call__(self, t):
        x = (t - self.t0) / self.h
        p = np.cumprod(np.full(4, x))
        return self.y0 + self.h * (self.Q @ p)


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _locate(event, dense, t_a, t_b, g_a, g_b):
    def g(t):
        return event.func(t, dense(t))

    if np.sign(g_a) == np.sign(g_b) and g_a != 0 and g_b != 0:
        raise EventNotBracketed(f"event {event.name!r} lost its bracket on the dense output")
    t_root = brentq(g, t_a, t_b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    y_root = dense(t_root)
    if abs(event.func(t_root, y_root)) > EVENT_TOL:
        raise EventNotBracketed(f"event {event.name!r} could not be localized to {EVENT_TOL}")
    return t_root, y_root


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    start,
    span: tuple[float, float],
    rtol: float = 1e-10,
    atol: float = 1e-12,
    events: Sequence[Event] = (),
    max_steps: int = 10_000_000,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``span`` (either direction).

    Samples are the accepted step points plus any located event points.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not (np.isfinite(t0) and np.isfinite(t1)) or t0 == t1:
        raise ValueError("span must be finite and non-empty")
    direction = 1.0 if t1 > t0 else -1.0
    y = np.array(start, dtype=float)

    def f(t, y):
        return np.asarray(rhs(t, y), dtype=float)

    fy = f(t0, y)
    h = first_step if first_step else _initial_step(f, t0, y, fy, direction, rtol, atol)
    h = min(abs(h), max_step, abs(t1 - t0))

    ts, ys = [t0], [y.copy()]
    found = {ev.name: [] for ev in events}
    g_prev = [ev.func(t0, y) for ev in events]
    t = t0
    K = np.empty((7, y.size))
    n = 0
    while direction * (t1 - t) > 0:
        if n >= max_steps:
            raise MaxStepsExceeded(f"more than {max_steps} steps before reaching t={t1}")
        min_h = 10 * np.spacing(abs(t))
        accepted = False
        while not accepted:
            if h < min_h:
                raise StepSizeUnderflow(f"step size fell below {min_h:g} at t={t:.17g}")
            hs = h * direction
            if direction * (t + hs - t1) > 0:
                hs = t1 - t
            K[0] = fy
            for i in range(1, 6):
                dy = K[:i].T @ np.asarray(_A[i]) * hs
                K[i] = f(t + _C[i] * hs, y + dy)
            y_new = y + hs * (K[:6].T @ _B)
            f_new = f(t + hs, y_new)
            K[6] = f_new
            err = hs * (K.T @ _E)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = np.sqrt(np.mean((err / scale) ** 2))
            if not np.isfinite(err_norm):
                h *= 0.2
                continue
            if err_norm <= 1.0:
                accepted = True
                factor = 10.0 if err_norm == 0 else min(10.0, 0.9 * err_norm**-0.2)
            else:
                factor = max(0.2, 0.9 * err_norm**-0.2)
            h = min(abs(hs) * factor, max_step)
        n += 1
        t_new = t + hs
        dense = _Dense(t, y, hs, K.copy())

        hits = []
        g_new = []
        for k, ev in enumerate(events):
            g1 = ev.func(t_new, y_new)
            g_new.append(g1)
            g0 = g_prev[k]
            up = g0 < 0 <= g1
            down = g0 > 0 >= g1
            if (up and ev.direction >= 0) or (down and ev.direction <= 0):
                te, ye = _locate(ev, dense, t, t_new, g0, g1)
                hits.append((direction * (te - t), te, ye, ev))
        hits.sort(key=lambda item: item[0])
        for _, te, ye, ev in hits:
            found[ev.name].append((te, ye))
            if direction * (te - ts[-1]) > 0:
                ts.append(te)
                ys.append(ye)
            if ev.terminal:
                return Trajectory(np.array(ts), np.array(ys), "event", ev.name, found, n)
        g_prev = g_new
        t, y, fy = t_new, y_new, f_new
        if direction * (t - ts[-1]) > 0:
            ts.append(t)
            ys.append(y.copy())
    return Trajectory(np.array(ts), np.array(ys), "span_end", None, found, n)
