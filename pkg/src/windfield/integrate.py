"""Adaptive Dormand-Prince 5(4) stepper with output landing and step hooks.

Small on purpose: the geodesic code needs three things scipy's ``solve_ivp``
does not give cleanly together, namely landing exactly on requested output
parameters, a per-step hook for constraint renormalization, and graceful
truncation when a trial stage leaves the chart.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional

import numpy as np

from .geometry import DomainError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


class Solution(NamedTuple):
    t: np.ndarray
    y: np.ndarray
    status: str  # "done" | "boundary" | "stopped" | "max_steps"
    nfev: int
    steps: int


def _stages(fun, t, y, h):
    k = np.empty((7, y.size))
    k[0] = fun(t, y)
    for s in range(1, 7):
        dy = np.zeros_like(y)
        for j, a in enumerate(_A[s]):
            if a:
                dy += a * k[j]
        k[s] = fun(t + _C[s] * h, y + h * dy)
    return k


def dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-10,
    max_step: float = np.inf,
    first_step: Optional[float] = None,
    t_eval=None,
    post_step: Optional[Callable[[int, float, np.ndarray], np.ndarray]] = None,
    inside: Optional[Callable[[np.ndarray], bool]] = None,
    stop: Optional[Callable[[float, np.ndarray], bool]] = None,
    max_steps: int = 200_000,
) -> Solution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` (``t_end > t0``).

    A stage evaluation raising ``DomainError`` or an accepted state failing
    ``inside`` shrinks the step; once the step falls below ``1e-12`` of the
    span the run ends with status ``"boundary"``. ``stop(t, y)`` ends the run
    after an accepted step with status ``"stopped"``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t_end) - t
    if span <= 0:
        raise ValueError("t_end must exceed t0")
    h_min = 1e-12 * max(span, 1.0)
    targets = None if t_eval is None else list(np.asarray(t_eval, dtype=float))
    ts, ys = [t], [y.copy()]
    if targets and abs(targets[0] - t) < 1e-15:
        targets.pop(0)
    nfev = 0

    if first_step is None:
        f0 = fun(t, y)
        nfev += 1
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    else:
        h = first_step
    h = min(h, max_step, span)

    steps = 0
    status = "done"
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if steps >= max_steps:
            status = "max_steps"
            break
        limit = t_end if not targets else min(targets[0], t_end)
        landing = t + h >= limit - 1e-14 * max(1.0, abs(limit))
        h_try = limit - t if landing else h
        try:
            k = _stages(fun, t, y, h_try)
            nfev += 6
        except DomainError:
            if h_try <= h_min:
                status = "boundary"
                break
            h = 0.25 * h_try
            continue
        y_new = y + h_try * (_B @ k)
        if not np.all(np.isfinite(y_new)) or (inside is not None and not inside(y_new)):
            if h_try <= h_min:
                status = "boundary"
                break
            h = 0.25 * h_try
            continue
        err_vec = h_try * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err > 1.0:
            h = h_try * max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                status = "boundary"
                break
            continue
        t = limit if landing else t + h_try
        y = y_new
        steps += 1
        if post_step is not None:
            y = np.asarray(post_step(steps, t, y), dtype=float)
        if targets is None:
            ts.append(t)
            ys.append(y.copy())
        elif landing and targets and abs(t - targets[0]) <= 1e-14 * max(1.0, abs(t)):
            ts.append(t)
            ys.append(y.copy())
            targets.pop(0)
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(max_step, h_try * factor if not landing else max(h, h_try * factor))
        if stop is not None and stop(t, y):
            status = "stopped"
            break
    if targets is not None and (not ts or ts[-1] != t):
        ts.append(t)
        ys.append(y.copy())
    return Solution(np.array(ts), np.array(ys), status, nfev, steps)
