"""Wind Riemannian structures built from Zermelo data ``(g_R, W)``.

The unit sphere of ``g_R`` displaced by the wind, ``Sigma = S_R + W``, is the
set of maximum ground velocities. From it come

* ``Lambda = 1 - |W|^2`` (mild ``> 0``, critical ``= 0``, strong ``< 0``),
* ``h(v, v) = Lambda |v|^2 + g_R(v, W)^2``,
* the conic metric ``F(v) = |v|^2 / (g_R(W, v) + sqrt(h(v, v)))``,
* the Lorentz-Finsler metric ``F_l(v) = |v|^2 / (g_R(W, v) - sqrt(h(v, v)))``.

``F_l`` is infinite wherever the wind is not strong, ``F = F_l`` on the cone
``h = 0`` and, at critical points, ``F(0) = F_l(0) = 1``. Infinity is
``math.inf``, never a large float.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .curves import SampledCurve
from .geometry import ChartedSpace, DomainError, VectorFieldDef

TOL_LAMBDA = 1e-10
TOL_CONE = 1e-9
_LD = np.longdouble


class Region(enum.Enum):
    MILD = "Mild"
    CRITICAL = "Critical"
    STRONG = "Strong"


class WindRegion(NamedTuple):
    region: Region
    Lambda: float


class Admissible(enum.Enum):
    INTERIOR = "InteriorA"
    CONE = "ConeBoundary"
    OUTSIDE = "Outside"
    ZERO_CRITICAL = "ZeroCritical"


class TangentVec(NamedTuple):
    base: np.ndarray
    components: np.ndarray


def tangent(p, v) -> TangentVec:
    return TangentVec(np.asarray(p, dtype=float), np.asarray(v, dtype=float))


@dataclass(frozen=True)
class WindData:
    """Zermelo data on one chart. ``meta`` carries catalog bookkeeping (name, params, chart kind)."""

    space: ChartedSpace
    wind: VectorFieldDef
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.space.dim

    def g(self, p) -> np.ndarray:
        return self.space.g(p)

    def W(self, p) -> np.ndarray:
        return self.wind(p)

    def Lambda(self, p) -> float:
        p = self.space.check(p)
        w = self.wind(p)
        return float(_LD(1) - _ldot(w, self.space.g(p), w))


def _ldot(a, g, b):
    return np.asarray(a, dtype=_LD) @ np.asarray(g, dtype=_LD) @ np.asarray(b, dtype=_LD)


class _Pointwise(NamedTuple):
    vv: _LD
    beta: _LD
    lam: _LD
    h: _LD


def _scalars(g, w, v) -> _Pointwise:
    vv = _ldot(v, g, v)
    beta = _ldot(w, g, v)
    lam = _LD(1) - _ldot(w, g, w)
    return _Pointwise(vv, beta, lam, lam * vv + beta * beta)


def _region_of(lam) -> Region:
    if lam > TOL_LAMBDA:
        return Region.MILD
    if lam < -TOL_LAMBDA:
        return Region.STRONG
    return Region.CRITICAL


def region_at(wd: WindData, p) -> WindRegion:
    lam = wd.Lambda(p)
    return WindRegion(_region_of(lam), lam)


def _check_same_base(v: TangentVec, w: TangentVec):
    if not np.array_equal(np.asarray(v.base, dtype=float), np.asarray(w.base, dtype=float)):
        raise ValueError("tangent vectors live at different base points")


def h_bilinear(wd: WindData, v: TangentVec, w: TangentVec) -> float:
    """Polarized ``h(v, w) = Lambda g_R(v, w) + g_R(v, W) g_R(w, W)``."""
    _check_same_base(v, w)
    p = wd.space.check(v.base)
    g, wind = wd.g(p), wd.W(p)
    lam = _LD(1) - _ldot(wind, g, wind)
    return float(lam * _ldot(v.components, g, w.components) + _ldot(v.components, g, wind) * _ldot(w.components, g, wind))


def _classify(s: _Pointwise, region: Region) -> tuple[Admissible, str]:
    vnorm = math.sqrt(max(float(s.vv), 0.0))
    if region is Region.MILD:
        if vnorm == 0.0:
            return Admissible.OUTSIDE, "zero vector is not admissible where the wind is mild"
        return Admissible.INTERIOR, ""
    if region is Region.CRITICAL:
        if vnorm <= 1e-300:
            return Admissible.ZERO_CRITICAL, ""
        if s.beta > 1e-12 * vnorm:
            return Admissible.INTERIOR, ""
        return Admissible.OUTSIDE, "g_R(W, v) > 0 fails at a critical point"
    if vnorm == 0.0:
        return Admissible.OUTSIDE, "zero vector is not admissible where the wind is strong"
    if s.beta <= 0:
        return Admissible.OUTSIDE, "g_R(W, v) > 0 fails where the wind is strong"
    band = TOL_CONE * s.vv
    if s.h > band:
        return Admissible.INTERIOR, ""
    if s.h >= -band:
        return Admissible.CONE, ""
    return Admissible.OUTSIDE, "h(v, v) >= 0 fails where the wind is strong"


def admissible(wd: WindData, v: TangentVec) -> Admissible:
    p = wd.space.check(v.base)
    s = _scalars(wd.g(p), wd.W(p), v.components)
    return _classify(s, _region_of(s.lam))[0]


def speeds_at(g, wind, v) -> tuple[float, float]:
    """``(F, F_l)`` from raw metric matrix, wind and vector at one point."""
    s = _scalars(g, wind, v)
    region = _region_of(s.lam)
    cls, why = _classify(s, region)
    if cls is Admissible.OUTSIDE:
        raise DomainError(f"inadmissible vector: {why}")
    if cls is Admissible.ZERO_CRITICAL:
        return 1.0, 1.0
    if cls is Admissible.CONE:
        f = float(s.vv / s.beta)
        return f, f
    if region is Region.CRITICAL:
        # Lambda is zero up to rounding here; use the exact Kropina form
        return float(s.vv / (2 * s.beta)), math.inf
    root = np.sqrt(s.h)
    if s.beta >= 0:
        f = s.vv / (s.beta + root)
    else:
        # beta < 0 only occurs in the mild region; avoid cancellation in beta + root
        f = (root - s.beta) / s.lam
    fl = math.inf if region is not Region.STRONG else float((s.beta + root) / (-s.lam))
    return float(f), fl


def speeds(wd: WindData, v: TangentVec) -> tuple[float, float]:
    """``(F(v), F_l(v))``; raises ``DomainError`` naming the failed condition for inadmissible ``v``."""
    p = wd.space.check(v.base)
    return speeds_at(wd.g(p), wd.W(p), v.components)


def randers_speed(wd: WindData, v: TangentVec) -> float:
    """Classical Randers form ``(sqrt(Lambda |v|^2 + g_R(v, W)^2) - g_R(W, v)) / Lambda`` (mild wind only)."""
    p = wd.space.check(v.base)
    g, w, x = wd.g(p), wd.W(p), np.asarray(v.components, dtype=float)
    lam = 1.0 - w @ g @ w
    if lam <= 0:
        raise DomainError("Randers form needs mild wind")
    beta = w @ g @ x
    return float((math.sqrt(lam * (x @ g @ x) + beta**2) - beta) / lam)


def kropina_speed(wd: WindData, v: TangentVec) -> float:
    """``|v|^2 / (2 g_R(W, v))``, the critical-wind limit of ``F``."""
    p = wd.space.check(v.base)
    g, w, x = wd.g(p), wd.W(p), np.asarray(v.components, dtype=float)
    return float((x @ g @ x) / (2.0 * (w @ g @ x)))


def unit_directions(dim: int, k: int) -> np.ndarray:
    """``k`` (roughly) evenly spread Euclidean unit vectors; two in dimension one."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        a = 2.0 * np.pi * np.arange(k) / k
        return np.column_stack([np.cos(a), np.sin(a)])
    if dim == 3:
        i = np.arange(k) + 0.5
        z = 1.0 - 2.0 * i / k
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + 5**0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    # fixed seed keeps higher-dimensional scans deterministic
    rng = np.random.default_rng(12345)
    x = rng.standard_normal((k, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def g_unit(g: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Map Euclidean unit vectors (rows of ``e``) to g-unit vectors."""
    chol = np.linalg.cholesky(g)
    return np.linalg.solve(chol.T, np.atleast_2d(e).T).T


class IndicatrixSample(NamedTuple):
    vec: TangentVec
    piece: str  # "convex" | "concave" | "cone" | "zero"


def _tag(a: float, region: Region) -> str:
    tol = 1e-12
    if region is Region.CRITICAL and abs(1.0 + a) <= tol:
        return "zero"
    if 1.0 + a > tol or region is Region.MILD:
        return "convex"
    if 1.0 + a < -tol:
        return "concave"
    return "cone"


def cone_units(g: np.ndarray, w: np.ndarray, count: int = 4) -> np.ndarray:
    """g-unit vectors ``u`` with ``g(W, u) = -1`` (so ``W + u`` lies on the h-cone); needs ``|W| > 1``."""
    ww = w @ g @ w
    if ww <= 1.0:
        return np.zeros((0, len(w)))
    dim = len(w)
    if dim == 1:
        return np.zeros((0, 1))
    base = -w / ww
    # g-orthonormal basis of the complement of W
    chol = np.linalg.cholesky(g)
    wt = chol.T @ w
    q, _ = np.linalg.qr(np.column_stack([wt, np.eye(dim)]))
    comp = np.linalg.solve(chol.T, q[:, 1:dim])
    radius = math.sqrt(1.0 - 1.0 / ww)
    if dim == 2:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = unit_directions(dim - 1, count)
    return np.array([base + radius * (comp @ d) for d in dirs])


def indicatrix(wd: WindData, p, k: int = 64) -> list[IndicatrixSample]:
    """Samples ``W_p + u`` of ``Sigma_p`` for ``k`` g-unit ``u``, tagged by piece.

    In the strong region the exact cone points of ``Sigma_p`` are appended.
    """
    if k < 4:
        raise ValueError("need at least 4 samples")
    p = wd.space.check(p)
    g, w = wd.g(p), wd.W(p)
    region = _region_of(1.0 - w @ g @ w)
    units = list(g_unit(g, unit_directions(wd.dim, k)))
    if region is Region.CRITICAL:
        units.append(-w)
    out = []
    for u in units:
        a = float(w @ g @ u)
        v = w + u
        piece = _tag(a, region)
        if piece == "zero":
            v = np.zeros_like(w)
        out.append(IndicatrixSample(tangent(p, v), piece))
    if region is Region.STRONG:
        for u in cone_units(g, w):
            out.append(IndicatrixSample(tangent(p, w + u), "cone"))
    return out


class WindCurveReport(NamedTuple):
    ok: bool
    lengths: tuple[float, float]
    worst_violation: float
    bad_index: Optional[int]


def wind_curve_check(wd: WindData, c: SampledCurve, tol: float = 1e-9) -> WindCurveReport:
    """Check ``F(c') <= 1 <= F_l(c')`` sample-wise and return trapezoid lengths."""
    fs, fls = [], []
    worst = 0.0
    bad = None
    for i, (p, v) in enumerate(zip(c.points, c.velocities)):
        try:
            f, fl = speeds(wd, tangent(p, v))
        except DomainError:
            if bad is None:
                bad = i
            fs.append(math.nan)
            fls.append(math.nan)
            continue
        fs.append(f)
        fls.append(fl)
        worst = max(worst, f - 1.0, 1.0 - fl)
    fs, fls = np.array(fs), np.array(fls)
    dt = np.diff(c.params)
    if bad is not None:
        return WindCurveReport(False, (math.nan, math.nan), math.inf, bad)
    lf = float(np.sum(0.5 * (fs[1:] + fs[:-1]) * dt))
    lfl = math.inf if np.any(np.isinf(fls)) else float(np.sum(0.5 * (fls[1:] + fls[:-1]) * dt))
    return WindCurveReport(worst <= tol, (lf, lfl), float(worst), None)


def reverse(wd: WindData) -> WindData:
    """Zermelo data of the reverse structure ``S_R - W``."""
    w = wd.wind
    jac = None if w.jacobian_at is None else (lambda p: -w.jacobian_at(p))
    label = w.label[1:] if w.label.startswith("-") else "-" + w.label
    rev = VectorFieldDef(lambda p: -w.value_at(p), jac, label)
    meta = dict(wd.meta)
    meta["reversed"] = not meta.get("reversed", False)
    return WindData(wd.space, rev, meta)


def isometry_check(
    wd1: WindData,
    wd2: WindData,
    phi: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    samples,
    tol: float = 1e-9,
) -> bool:
    """True iff ``phi`` pulls ``g_2`` back to ``g_1`` and pushes ``W_1`` to ``W_2``."""
    for p in samples:
        p = wd1.space.check(p)
        q = np.asarray(phi(p), dtype=float)
        if not wd2.space.contains(q):
            raise DomainError(f"sample {p.tolist()} maps outside the target chart")
        jac = np.asarray(jacobian(p), dtype=float)
        g1 = wd1.g(p)
        pulled = jac.T @ wd2.g(q) @ jac
        scale = max(1.0, float(np.linalg.norm(g1)))
        if np.linalg.norm(pulled - g1) > tol * scale:
            return False
        pushed = jac @ wd1.W(p)
        if np.linalg.norm(pushed - wd2.W(q)) > tol * max(1.0, float(np.linalg.norm(pushed))):
            return False
    return True
