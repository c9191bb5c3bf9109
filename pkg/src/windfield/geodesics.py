"""Wind geodesics, flag curvature by geodesic deviation, and two-point navigation.

Every geodesic is integrated as the projection of a lightlike geodesic of the
spacetime metric (see ``sstk``). Projected curves are parametrized by the
time coordinate, which is F-length for curves on the convex indicatrix piece
and F_l-length on the concave piece.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .curves import SampledCurve
from .geometry import DomainError
from .integrate import dopri5
from .sstk import null_geodesic, null_lift, project
from .wrs import Admissible, Region, WindData, _region_of, admissible, g_unit, speeds, tangent, unit_directions

UNIT_TOL = 1e-8


class FlagEstimate(NamedTuple):
    kappa: float
    stderr: float
    samples: int


class NavigationResult(NamedTuple):
    time: float
    curve: Optional[SampledCurve]
    status: str  # "Optimal" | "Unreachable" | "MaxIter"
    meta: dict = {}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WINDFIELD_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- geodesic IVP


def _case_tag(wd: WindData, curve: SampledCurve, tol: float) -> tuple[Optional[int], list[str]]:
    regions, cone, f_ok, fl_ok = [], True, True, True
    for p, v in zip(curve.points, curve.velocities):
        g, w = wd.g(p), wd.W(p)
        lam = 1.0 - w @ g @ w
        regions.append(_region_of(lam).value)
        vv = v @ g @ v
        beta = w @ g @ v
        h = lam * vv + beta * beta
        if not (lam < 0 and abs(h) <= 1e-7 * vv):
            cone = False
        try:
            f, fl = speeds(wd, tangent(p, v))
        except DomainError:
            f, fl = math.nan, math.nan
        f_ok &= abs(f - 1.0) < tol
        fl_ok &= abs(fl - 1.0) < tol and lam < 0
    if cone:
        return 4, regions
    if f_ok:
        return 1, regions
    if fl_ok:
        return 2, regions
    return None, regions


def geodesic_ivp(
    wd: WindData,
    p,
    v,
    span: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = np.inf,
    t_eval=None,
    tag_tol: float = 1e-7,
) -> SampledCurve:
    """Wind geodesic from ``p`` with initial velocity ``v`` on the indicatrix.

    ``meta["case"]`` is 1 (F-geodesic), 2 (F_l-geodesic in the strong region),
    4 (rides the cone ``h = 0``) or None; ``meta["regions"]`` is the region at
    each sample.
    """
    p = wd.space.check(p)
    v = np.asarray(v, dtype=float)
    tv = tangent(p, v)
    kind = admissible(wd, tv)
    if kind not in (Admissible.INTERIOR, Admissible.CONE):
        raise DomainError(f"initial vector is not admissible ({kind.value})")
    lift = null_lift(wd, tv, tol=UNIT_TOL)
    st = null_geodesic(wd, (0.0, p), lift, span, parameter="time", rtol=rtol, atol=atol, max_step=max_step, t_eval=t_eval)
    if len(st) < 2:
        raise DomainError("geodesic leaves the chart immediately")
    curve = project(st)
    case, regions = _case_tag(wd, curve, tag_tol)
    curve.meta.update(case=case, regions=regions)
    return curve


# ---------------------------------------------------------------- boundary geodesics


def _h_parts(wd: WindData, x):
    g = wd.g(x)
    w = wd.W(x)
    dg = wd.space.dg(x)
    jac = wd.wind.jacobian(x)
    gw = g @ w
    d_gw = np.einsum("kij,j->ki", dg, w) + (g @ jac).T  # d_k (gW)_i
    lam = 1.0 - w @ gw
    d_lam = -(np.einsum("i,kij,j->k", w, dg, w) + 2.0 * jac.T @ gw)
    H = lam * g + np.outer(gw, gw)
    dH = (
        np.einsum("k,ij->kij", d_lam, g)
        + lam * dg
        + np.einsum("ki,j->kij", d_gw, gw)
        + np.einsum("i,kj->kij", gw, d_gw)
    )
    return g, dg, gw, d_gw, lam, H, dH


def boundary_geodesic(
    wd: WindData,
    p,
    cone_dir,
    span: float,
    c: float = 1.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval=None,
    cone_tol: float = 1e-8,
    edge_tol: float = 1e-8,
) -> SampledCurve:
    """Lightlike pregeodesic of ``h`` from ``p``, parametrized so that ``F = c``.

    On the cone ``F(v) = |v|^2 / g_R(W, v)``; the reparametrization term keeps
    this at ``c``. Each accepted step pushes the velocity back onto the cone.
    Reaching the critical set (``Lambda -> 0``) stops the curve with
    ``meta["boundary"] = True``.
    """
    p = wd.space.check(p)
    v0 = np.asarray(cone_dir, dtype=float)
    n = wd.dim
    g, dg, gw, d_gw, lam, H, dH = _h_parts(wd, p)
    if lam >= -edge_tol:
        raise DomainError("boundary geodesics start in the strong region")
    hv = v0 @ H @ v0
    if abs(hv) > cone_tol * (v0 @ g @ v0):
        raise DomainError(f"direction is not h-lightlike (h = {hv:.3e})")
    if gw @ v0 <= 0:
        raise DomainError("direction lies on the past cone")
    v0 = v0 * c / ((v0 @ g @ v0) / (gw @ v0))

    def rhs(_, y):
        x, vel = wd.space.check(y[:n]), y[n:]
        g, dg, gw, d_gw, lam, H, dH = _h_parts(wd, x)
        gam = np.linalg.solve(
            H, np.einsum("kij,k,j->i", dH, vel, vel) - 0.5 * np.einsum("ijk,j,k->i", dH, vel, vel)
        )
        vv, beta = vel @ g @ vel, gw @ vel
        q = vv / beta
        dq_x = np.einsum("i,kij,j->k", vel, dg, vel) / beta - vv * (d_gw @ vel) / beta**2
        dq_v = 2.0 * (g @ vel) / beta - vv * gw / beta**2
        phi = -(dq_x @ vel - dq_v @ gam) / q
        return np.concatenate([vel, -gam + phi * vel])

    def project_cone(_, __, y):
        x, vel = y[:n], y[n:].copy()
        g, _, gw, _, _, H, _ = _h_parts(wd, x)
        hv = H @ vel
        vel -= (vel @ hv) / (2.0 * (hv @ hv)) * hv
        vel *= c / ((vel @ g @ vel) / (gw @ vel))
        return np.concatenate([x, vel])

    def stop(_, y):
        return wd.Lambda(y[:n]) > -edge_tol

    sol = dopri5(rhs, 0.0, np.concatenate([p, v0]), span, rtol, atol, t_eval=t_eval, post_step=project_cone,
                 inside=lambda y: wd.space.contains(y[:n]), stop=stop)
    pts, vels = sol.y[:, :n], sol.y[:, n:]
    fvals = []
    for x, vel in zip(pts, vels):
        g, w = wd.g(x), wd.W(x)
        fvals.append((vel @ g @ vel) / (w @ g @ vel))
    meta = {
        "case": 4,
        "status": sol.status,
        "boundary": sol.status in ("boundary", "stopped"),
        "speed_drift": float(np.max(np.abs(np.array(fvals) - c))),
    }
    return SampledCurve(sol.t, pts, vels, meta)


# ---------------------------------------------------------------- exceptional points


def exceptional_test(wd: WindData, p, tol_lambda: float = 1e-8, tol: float = 1e-6) -> bool:
    """True iff ``Lambda(p) = 0`` and ``d Lambda`` vanishes on the g_R-orthogonal complement of ``W_p``."""
    p = wd.space.check(p)
    g, _, gw, _, lam, _, _ = _h_parts(wd, p)
    if abs(lam) >= tol_lambda:
        return False
    dg = wd.space.dg(p)
    w = wd.W(p)
    jac = wd.wind.jacobian(p)
    d_lam = -(np.einsum("i,kij,j->k", w, dg, w) + 2.0 * jac.T @ gw)
    grad = np.linalg.solve(g, d_lam)
    grad_perp = grad - (grad @ gw) / (w @ gw) * w
    return math.sqrt(max(grad_perp @ g @ grad_perp, 0.0)) < tol


# ---------------------------------------------------------------- flag curvature


def fundamental_tensor(wd: WindData, p, v, step: float = 1e-4) -> np.ndarray:
    """``g_v = Hess_v(F^2 / 2)`` by central differences (relative step)."""
    v = np.asarray(v, dtype=float)
    n = len(v)
    e = step * max(1.0, float(np.linalg.norm(v)))

    def energy(x):
        return 0.5 * speeds(wd, tangent(p, x))[0] ** 2

    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            di = np.zeros(n)
            dj = np.zeros(n)
            di[i] = e
            dj[j] = e
            val = (energy(v + di + dj) - energy(v + di - dj) - energy(v - di + dj) + energy(v - di - dj)) / (4 * e * e)
            out[i, j] = out[j, i] = val
    return out


def sn(kappa: float, s):
    s = np.asarray(s, dtype=float)
    if kappa > 1e-12:
        r = math.sqrt(kappa)
        return np.sin(r * s) / r
    if kappa < -1e-12:
        r = math.sqrt(-kappa)
        return np.sinh(r * s) / r
    return s.copy()


def _fit_kappa(s, y) -> tuple[float, float]:
    def resid(k):
        b = sn(k, s)
        a = (b @ y) / (b @ b)
        return float(np.sum((a * b - y) ** 2))

    best = minimize_scalar(resid, bounds=(-30.0, 30.0), method="bounded", options={"xatol": 1e-10})
    return float(best.x), float(best.fun)


def _unit(wd, p, v):
    return v / speeds(wd, tangent(p, v))[0]


def flag_curvature_deviation(
    wd: WindData,
    p,
    v,
    transverse,
    eps=(1e-4, 5e-5),
    window: float = 0.5,
    samples: int = 41,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> FlagEstimate:
    """Estimate the flag curvature of the flag (``v``, span{v, transverse}) at ``p``.

    Geodesics through ``p`` with unit initial velocities ``v +- eps*transverse``
    give the Jacobi field ``J`` by central differences. The ``g_gamma'``-norm of
    its normal part is fitted to ``A sn_kappa(s)`` over ``[0, window]``; the
    two ``eps`` levels are combined by Richardson extrapolation.
    """
    p = wd.space.check(p)
    v = np.asarray(v, dtype=float)
    w = np.asarray(transverse, dtype=float)
    f = speeds(wd, tangent(p, v))[0]
    if abs(f - 1.0) > 1e-8:
        raise ValueError("flagpole must have unit F speed")
    if np.linalg.matrix_rank(np.array([v, w]), tol=1e-12) < 2:
        raise ValueError("transverse vector is parallel to the flagpole")
    s = np.linspace(0.0, window, samples)
    opts = dict(rtol=rtol, atol=atol, t_eval=s)
    central = geodesic_ivp(wd, p, v, window, **opts)
    if len(central) != samples or central.params[-1] < window - 1e-12:
        raise DomainError("geodesic leaves the chart before the fit window ends")
    gts = [fundamental_tensor(wd, x, vel) for x, vel in zip(central.points[1:], central.velocities[1:])]

    def estimate(e):
        plus = geodesic_ivp(wd, p, _unit(wd, p, v + e * w), window, **opts)
        minus = geodesic_ivp(wd, p, _unit(wd, p, v - e * w), window, **opts)
        if len(plus) != samples or len(minus) != samples:
            raise DomainError("perturbed geodesic leaves the chart before the fit window ends")
        J = (plus.points - minus.points) / (2.0 * e)
        norms = [0.0]
        for k, gt in enumerate(gts, start=1):
            vel = central.velocities[k]
            jp = J[k] - (J[k] @ gt @ vel) / (vel @ gt @ vel) * vel
            norms.append(math.sqrt(max(jp @ gt @ jp, 0.0)))
        return _fit_kappa(s, np.array(norms))[0]

    k1, k2 = (estimate(e) for e in eps)
    ratio = (eps[0] / eps[1]) ** 2
    kappa = (ratio * k2 - k1) / (ratio - 1.0)
    return FlagEstimate(float(kappa), float(abs(k2 - k1) / (ratio - 1.0)), samples)


# ---------------------------------------------------------------- navigation


def _angles_to_dir(theta) -> np.ndarray:
    theta = np.atleast_1d(theta)
    if len(theta) == 1:
        return np.array([math.cos(theta[0]), math.sin(theta[0])])
    a, b = theta  # azimuth, polar
    return np.array([math.sin(b) * math.cos(a), math.sin(b) * math.sin(a), math.cos(b)])


def _dir_to_angles(e) -> np.ndarray:
    if len(e) == 2:
        return np.array([math.atan2(e[1], e[0])])
    return np.array([math.atan2(e[1], e[0]), math.acos(max(-1.0, min(1.0, e[2])))])


def navigate(
    wd: WindData,
    p,
    q,
    t_max: Optional[float] = None,
    k: Optional[int] = None,
    tol: float = 1e-10,
    max_iter: int = 40,
    candidates: int = 4,
    samples: int = 201,
) -> NavigationResult:
    """Least-time wind geodesic from ``p`` to ``q`` by shooting over the convex indicatrix piece.

    A coarse scan of ``k`` initial directions (64 in dimension 2, 512 in
    dimension 3) picks the closest approaches; Newton iteration on
    (direction angles, arrival time) refines them. When nothing converges, a
    reachable-set computation decides between ``Unreachable`` and ``MaxIter``.
    """
    p = wd.space.check(p)
    q = wd.space.check(q)
    n = wd.dim
    if n not in (2, 3):
        raise ValueError("navigate supports dimensions 2 and 3")
    if np.allclose(p, q):
        curve = SampledCurve([0.0], [p], [np.zeros(n)], {})
        return NavigationResult(0.0, curve, "Optimal", {})
    k = k or (64 if n == 2 else 512)
    g = wd.g(p)
    w = wd.W(p)
    d0 = math.sqrt((q - p) @ g @ (q - p))
    t_max = t_max or max(3.0 * d0, 1.0)

    def velocity(theta):
        u = g_unit(g, _angles_to_dir(theta))[0]
        return w + u

    def convex(theta):
        u = g_unit(g, _angles_to_dir(theta))[0]
        return 1.0 + w @ g @ u > 1e-9

    grid = np.linspace(0.0, t_max, 401)

    def scan(e):
        theta = _dir_to_angles(e)
        if not convex(theta):
            return math.inf, 0.0, theta
        try:
            c = geodesic_ivp(wd, p, velocity(theta), t_max, rtol=1e-7, atol=1e-9)
        except DomainError:
            return math.inf, 0.0, theta
        ts = grid[grid <= c.params[-1]]
        d = np.linalg.norm(c.at(ts) - q, axis=1)
        i = int(np.argmin(d[1:])) + 1
        return float(d[i]), float(ts[i]), theta

    coarse = sorted(_pmap(scan, list(unit_directions(n, k))), key=lambda r: r[0])

    def endpoint(theta, T, rtol=1e-12):
        c = geodesic_ivp(wd, p, velocity(theta), T, rtol=rtol, atol=0.1 * rtol, t_eval=[T])
        if c.params[-1] < T - 1e-12:
            raise DomainError("shooting geodesic left the chart")
        return c.points[-1], c.velocities[-1]

    def newton(theta, T):
        h = 1e-6
        for it in range(max_iter):
            x, vel = endpoint(theta, T)
            r = x - q
            if np.linalg.norm(r) < tol * max(1.0, d0):
                return theta, T, it
            cols = []
            for i in range(len(theta)):
                dt = np.zeros_like(theta)
                dt[i] = h
                xp, _ = endpoint(theta + dt, T, 1e-10)
                xm, _ = endpoint(theta - dt, T, 1e-10)
                cols.append((xp - xm) / (2 * h))
            cols.append(vel)
            step = np.linalg.solve(np.column_stack(cols), r)
            lam = 1.0
            while lam > 1e-3:
                th2, T2 = theta - lam * step[:-1], T - lam * step[-1]
                if T2 > 0 and convex(th2):
                    try:
                        x2, _ = endpoint(th2, T2)
                        if np.linalg.norm(x2 - q) < np.linalg.norm(r):
                            break
                    except DomainError:
                        pass
                lam *= 0.5
            else:
                return None
            theta, T = th2, T2
        return None

    # distinct basins only: neighbours of an already chosen scan direction are skipped
    spacing = 2.0 * math.pi / k if n == 2 else math.sqrt(4.0 * math.pi / k)
    picked = []
    for miss, T, theta in coarse:
        if len(picked) == candidates or not math.isfinite(miss):
            break
        e = _angles_to_dir(theta)
        if T > 0 and all(math.acos(min(1.0, e @ _angles_to_dir(t2))) > 2.5 * spacing for _, _, t2 in picked):
            picked.append((miss, T, theta))

    found = []
    iters = []
    for miss, T, theta in picked:
        try:
            res = newton(theta, T)
        except (DomainError, np.linalg.LinAlgError):
            res = None
        if res is not None:
            found.append(res)
            iters.append(res[2])
    if found:
        theta, T, _ = min(found, key=lambda r: r[1])
        ts = np.linspace(0.0, T, samples)
        curve = geodesic_ivp(wd, p, velocity(theta), T, t_eval=ts)
        meta = {"heading": (velocity(theta) - w).tolist(), "candidates": len(found), "iterations": iters}
        return NavigationResult(float(T), curve, "Optimal", meta)

    from .reachability import GridSpec, forward_ball

    lo = np.minimum(p, q) - 0.5 * d0 - 0.5
    hi = np.maximum(p, q) + 0.5 * d0 + 0.5
    if n == 2 and wd.space.contains(lo) and wd.space.contains(hi):
        spec = GridSpec.auto(wd, (tuple(lo), tuple(hi)), 64)
        field = forward_ball(wd, p, t_max, spec)
        if not field.reached_near(q, radius_cells=2):
            return NavigationResult(math.inf, None, "Unreachable", {"t_max": t_max})
    return NavigationResult(math.nan, None, "MaxIter", {"t_max": t_max, "best_miss": coarse[0][0]})
