"""Independent reference computations used only by the tests."""

import mpmath
import numpy as np
from scipy.integrate import solve_ivp


def _randers_parts(wd, x):
    """Randers data ``a``, ``b`` of the mild-wind metric and their x-derivatives."""
    g = wd.g(x)
    dg = wd.space.dg(x)
    w = wd.W(x)
    jac = wd.wind.jacobian(x)
    wl = g @ w
    dwl = np.einsum("kij,j->ki", dg, w) + (g @ jac).T  # dwl[k, i] = d_k (g W)_i
    lam = 1.0 - w @ wl
    dlam = -(np.einsum("i,kij,j->k", w, dg, w) + 2.0 * jac.T @ wl)
    num = lam * g + np.outer(wl, wl)
    dnum = np.einsum("k,ij->kij", dlam, g) + lam * dg + np.einsum("ki,j->kij", dwl, wl) + np.einsum("i,kj->kij", wl, dwl)
    a = num / lam**2
    da = dnum / lam**2 - 2.0 * np.einsum("k,ij->kij", dlam, num) / lam**3
    b = -wl / lam
    db = -dwl / lam + np.einsum("k,i->ki", dlam, wl) / lam**2
    return a, da, b, db


def randers_speed(wd, x, v) -> float:
    a, _, b, _ = _randers_parts(wd, x)
    return float(np.sqrt(v @ a @ v) + b @ v)


def randers_geodesic(wd, p, v, ts, rtol=1e-12, atol=1e-13) -> np.ndarray:
    """Euler-Lagrange geodesic of ``L = F^2 / 2`` with ``F = sqrt(a(v, v)) + b(v)``.

    Points at the parameters ``ts``; with ``F(v) = 1`` the parameter is F-length.
    """
    n = len(p)

    def rhs(_, y):
        x, u = y[:n], y[n:]
        a, da, b, db = _randers_parts(wd, x)
        au = a @ u
        alpha = np.sqrt(u @ au)
        F = alpha + b @ u
        m = au / alpha + b  # dF/dv
        L_vv = np.outer(m, m) + F * (a / alpha - np.outer(au, au) / alpha**3)
        dalpha = np.einsum("kij,i,j->k", da, u, u) / (2.0 * alpha)  # d_k alpha
        dF = dalpha + db @ u
        L_x = F * dF
        # d_k (L_v)_i contracted with u^k
        dau = np.einsum("kij,j,k->i", da, u, u)
        L_vx_u = m * (dF @ u) + F * (dau / alpha - au * (dalpha @ u) / alpha**2 + db.T @ u)
        acc = np.linalg.solve(L_vv, L_x - L_vx_u)
        return np.concatenate([u, acc])

    sol = solve_ivp(rhs, (ts[0], ts[-1]), np.concatenate([p, v]), method="DOP853", t_eval=ts, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:n].T


def conic_speed_mp(g, w, v, dps: int = 50):
    """``(F, F_l)`` of the conic metrics at high precision (strong region gives both)."""
    with mpmath.workdps(dps):
        G = mpmath.matrix(np.asarray(g, dtype=float).tolist())
        W = mpmath.matrix(np.asarray(w, dtype=float).tolist())
        V = mpmath.matrix(np.asarray(v, dtype=float).tolist())
        vv = (V.T * G * V)[0]
        beta = (W.T * G * V)[0]
        lam = 1 - (W.T * G * W)[0]
        root = mpmath.sqrt(lam * vv + beta**2)
        f = vv / (beta + root)
        fl = (beta + root) / (-lam) if lam < 0 else mpmath.inf
        return float(f), float(fl)
