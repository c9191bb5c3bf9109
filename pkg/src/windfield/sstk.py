"""The spacetime picture: ``R x M`` with the Lorentzian metric

    g = -Lambda dt^2 + omega (x) dt + dt (x) omega + g_R,   omega = -g_R(W, .)

whose future lightlike cones project onto the wind indicatrix. Lightlike
geodesics of this metric are regular in every wind regime, so they are the
integration route for all wind geodesics.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Optional

import numpy as np

from .curves import SampledCurve
from .geometry import DomainError
from .integrate import dopri5
from .wrs import TangentVec, WindData, speeds


class SpacetimeVec(NamedTuple):
    tau: float
    spatial: TangentVec


class Causal(enum.Enum):
    TIMELIKE = "Timelike"
    LIGHTLIKE = "Lightlike"
    SPACELIKE = "Spacelike"


class TimeOrientation(enum.Enum):
    FUTURE = "Future"
    PAST = "Past"
    NONE = "n/a"


class ContractError(ValueError):
    pass


def _blocks(wd: WindData, p):
    p = wd.space.check(p)
    g = wd.g(p)
    w = wd.W(p)
    return p, g, w, g @ w


def metric_at(wd: WindData, p) -> np.ndarray:
    """``[[-Lambda, omega^T], [omega, g_R]]`` in coordinates ``(t, x^1..x^n)``."""
    _, g, w, gw = _blocks(wd, p)
    n = wd.dim
    out = np.empty((n + 1, n + 1))
    out[0, 0] = w @ gw - 1.0
    out[0, 1:] = out[1:, 0] = -gw
    out[1:, 1:] = g
    return out


def metric_d1(wd: WindData, p) -> np.ndarray:
    """``D[a, b, c] = d_a g_bc``; the t-derivative row is zero."""
    p, g, w, gw = _blocks(wd, p)
    dg = wd.space.dg(p)
    jac = wd.wind.jacobian(p)
    n = wd.dim
    out = np.zeros((n + 1, n + 1, n + 1))
    d_gw = np.einsum("kij,j->ki", dg, w) + (g @ jac).T  # d_k (g W)_i
    out[1:, 0, 0] = np.einsum("i,kij,j->k", w, dg, w) + 2.0 * jac.T @ gw
    out[1:, 0, 1:] = -d_gw
    out[1:, 1:, 0] = -d_gw
    out[1:, 1:, 1:] = dg
    return out


def _quad(G, a, b=None):
    b = a if b is None else b
    return float(a @ G @ b)


def causal_character(wd: WindData, p, sv: SpacetimeVec, tol: float = 1e-9):
    """Causal type and time orientation of ``(tau, v)`` at ``p``.

    A causal vector is future-directed iff ``g(sv, K) < 0`` when ``Lambda > 0``
    and iff ``tau > 0`` (or ``tau == 0`` and ``g_R(W, v) > 0``) otherwise.
    """
    vec = np.concatenate([[float(sv.tau)], np.asarray(sv.spatial.components, dtype=float)])
    if not np.any(vec):
        raise ValueError("causal character of the zero vector is undefined")
    G = metric_at(wd, p)
    q = _quad(G, vec)
    scale = float(vec[0] ** 2 + vec[1:] @ G[1:, 1:] @ vec[1:])
    if q > tol * scale:
        return Causal.SPACELIKE, TimeOrientation.NONE
    kind = Causal.LIGHTLIKE if q >= -tol * scale else Causal.TIMELIKE
    lam = -G[0, 0]
    if lam > 0:
        future = float(G[0] @ vec) < 0
    else:
        beta = -float(G[0, 1:] @ vec[1:])
        future = vec[0] > 0 or (vec[0] == 0 and beta > 0)
    return kind, TimeOrientation.FUTURE if future else TimeOrientation.PAST


def null_lift(wd: WindData, v: TangentVec, tol: float = 1e-9) -> SpacetimeVec:
    """``(1, v)`` for ``v`` on either indicatrix piece."""
    f, fl = speeds(wd, v)
    if abs(f - 1.0) > tol and abs(fl - 1.0) > tol:
        raise DomainError(f"vector is not on the indicatrix (F={f}, F_l={fl})")
    return SpacetimeVec(1.0, v)


def geodesic_accel(wd: WindData, x, ydot) -> np.ndarray:
    """``Gamma(ydot, ydot)`` for the spacetime metric at spatial point ``x``.

    Assembled from the blocks of ``metric_d1`` contracted with ``ydot``; this
    is the integrators' inner loop, so no full derivative array is built.
    """
    x = np.asarray(x, dtype=float)
    g, dg = wd.g(x), wd.space.dg(x)
    w, jac = wd.W(x), wd.wind.jacobian(x)
    gw = g @ w
    dg_w = dg @ w  # [k, i]
    d_gw = dg_w + (g @ jac).T  # d_k (g W)_i
    c = dg_w @ w + 2.0 * jac.T @ gw  # d_k of the tt entry
    tau, xp = float(ydot[0]), np.asarray(ydot[1:], dtype=float)
    m0 = -(xp @ d_gw)  # sum_k x'^k d_k G_0i
    dg_x = dg @ xp
    quad = c * tau * tau - 2.0 * tau * (d_gw @ xp) + dg_x @ xp  # d_k G(ydot, ydot)
    a = np.empty(len(ydot))
    a[0] = (c @ xp) * tau + m0 @ xp
    n = len(xp)
    a[1:] = m0 * tau + (xp @ dg.reshape(n, n * n)).reshape(n, n) @ xp - 0.5 * quad
    G = np.empty((len(ydot), len(ydot)))
    G[0, 0] = w @ gw - 1.0
    G[0, 1:] = G[1:, 0] = -gw
    G[1:, 1:] = g
    return np.linalg.solve(G, a)


def _future_tau(G, v, tau_ref):
    """The future null completion ``tau`` of spatial ``v`` closest to ``tau_ref``."""
    lam = -G[0, 0]
    beta = -float(G[0, 1:] @ v)
    vv = float(v @ G[1:, 1:] @ v)
    h = max(lam * vv + beta * beta, 0.0)
    root = math.sqrt(h)
    cands = []
    if beta + root > 0:
        cands.append(vv / (beta + root))
    if lam < 0:
        cands.append((beta + root) / (-lam))
    if not cands:
        return tau_ref
    return min(cands, key=lambda c: abs(c - tau_ref))


def null_geodesic(
    wd: WindData,
    start,
    direction: SpacetimeVec,
    span: float,
    parameter: str = "affine",
    rtol: float = 1e-9,
    atol: float = 1e-10,
    max_step: float = np.inf,
    t_eval=None,
    renorm_every: int = 100,
    null_tol: float = 1e-7,
    stop=None,
) -> SampledCurve:
    """Integrate a future lightlike geodesic from ``start = (t0, p)``.

    ``parameter="affine"`` integrates the geodesic equation in an affine
    parameter over ``span``; ``parameter="time"`` integrates the same
    pregeodesic with the coordinate ``t`` as parameter over a t-span (the
    metric is t-independent, so this is exact). Every ``renorm_every`` steps
    the velocity is pushed back onto the null cone. Leaving the chart
    truncates the curve and sets ``meta["boundary"]``.

    Output points are ``(t, x)``, velocities ``(dt/ds, dx/ds)``.
    """
    t0 = float(start[0])
    p0 = wd.space.check(np.asarray(start[1], dtype=float))
    n = wd.dim
    tau0 = float(direction.tau)
    v0 = np.asarray(direction.spatial.components, dtype=float)
    G0 = metric_at(wd, p0)
    y0dot = np.concatenate([[tau0], v0])
    q0 = _quad(G0, y0dot)
    if abs(q0) > null_tol * float(y0dot @ y0dot):
        raise DomainError(f"initial direction is not lightlike (g = {q0:.3e})")
    if tau0 <= 0:
        raise DomainError("initial direction must be future-directed")

    def inside(y):
        return wd.space.contains(y[1 : n + 1]) if parameter == "affine" else wd.space.contains(y[:n])

    if parameter == "affine":

        def rhs(_, y):
            x = wd.space.check(y[1 : n + 1])
            ydot = y[n + 1 :]
            return np.concatenate([ydot, -geodesic_accel(wd, x, ydot)])

        def renorm(k, _, y):
            if renorm_every and k % renorm_every == 0:
                G = metric_at(wd, y[1 : n + 1])
                y = y.copy()
                y[n + 1] = _future_tau(G, y[n + 2 :], y[n + 1])
            return y

        y0 = np.concatenate([[t0], p0, y0dot])
        sol = dopri5(rhs, 0.0, y0, span, rtol, atol, max_step, t_eval=t_eval, post_step=renorm, inside=inside, stop=stop)
        params = sol.t
        points = sol.y[:, : n + 1]
        vels = sol.y[:, n + 1 :]
    elif parameter == "time":

        def rhs(_, y):
            x = wd.space.check(y[:n])
            xp = y[n : 2 * n]
            yp = np.concatenate([[1.0], xp])
            gam = geodesic_accel(wd, x, yp)
            return np.concatenate([xp, -gam[1:] + gam[0] * xp, [-y[-1] * gam[0]]])

        def renorm(k, _, y):
            if renorm_every and k % renorm_every == 0:
                G = metric_at(wd, y[:n])
                y = y.copy()
                y[n : 2 * n] /= _future_tau(G, y[n : 2 * n], 1.0)
            return y

        y0 = np.concatenate([p0, v0 / tau0, [tau0]])
        ev = None if t_eval is None else np.asarray(t_eval, dtype=float) - t0
        sol = dopri5(rhs, 0.0, y0, span, rtol, atol, max_step, t_eval=ev, post_step=renorm, inside=inside, stop=stop)
        params = sol.t + t0
        points = np.column_stack([params, sol.y[:, :n]])
        taus = sol.y[:, -1]
        vels = np.column_stack([taus, sol.y[:, n : 2 * n] * taus[:, None]])
    else:
        raise ValueError("parameter must be 'affine' or 'time'")

    energy, null = [], []
    for pt, vel in zip(points, vels):
        G = metric_at(wd, pt[1:])
        energy.append(float(G[0] @ vel))
        null.append(abs(_quad(G, vel)) / float(vel @ vel))
    energy = np.array(energy)
    meta = {
        "spacetime": True,
        "parameter": parameter,
        "status": sol.status,
        "boundary": sol.status == "boundary",
        "energy": energy,
        "energy_drift": float(np.max(np.abs(energy - energy[0]))),
        "null_drift": float(max(null)),
        "steps": sol.steps,
    }
    return SampledCurve(params, points, vels, meta)


def project(curve: SampledCurve) -> SampledCurve:
    """Reparametrize a spacetime curve by its t coordinate and drop t."""
    if not curve.meta.get("spacetime"):
        raise ContractError("project expects a spacetime curve")
    t = curve.points[:, 0]
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise ContractError("t is not strictly increasing along the curve")
    taus = curve.velocities[:, 0]
    meta = {k: v for k, v in curve.meta.items() if k != "spacetime"}
    return SampledCurve(t, curve.points[:, 1:], curve.velocities[:, 1:] / taus[:, None], meta)
