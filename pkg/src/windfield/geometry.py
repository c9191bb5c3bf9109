"""Chart-based tensor calculus for Riemannian metrics.

Everything here works on a single coordinate chart. Metric components are
``dim x dim`` arrays, derivative arrays put the differentiation index first:
``dg[k, i, j] = d_k g_ij`` and ``ddg[k, l, i, j] = d_k d_l g_ij``.

Curvature convention: ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
nabla_[X,Y] Z`` with components ``R(d_k, d_l) d_j = R^i_jkl d_i`` and the
4-tensor ``R(X, Y, Z, W) = g(R(X, Y)Z, W)``. With this choice the sectional
curvature ``R(u, v, v, u) / (|u|^2 |v|^2 - g(u, v)^2)`` of a round sphere of
radius r is ``+1/r^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

FD_STEP1 = 1e-5
FD_STEP2 = 1e-4

Array = np.ndarray


class DomainError(ValueError):
    """A point (or vector) lies outside the region where an operation is defined."""


class DegeneratePlaneError(ValueError):
    pass


@dataclass(frozen=True)
class ChartedSpace:
    """A coordinate chart carrying the Riemannian metric ``g_R``.

    ``metric_d1`` / ``metric_d2`` are optional analytic derivatives; when
    missing, central differences are used (steps ``FD_STEP1`` and
    ``FD_STEP2``).
    """

    dim: int
    metric_at: Callable[[Array], Array]
    metric_d1: Optional[Callable[[Array], Array]] = None
    metric_d2: Optional[Callable[[Array], Array]] = None
    domain: Optional[Callable[[Array], bool]] = None
    label: str = ""

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        return True if self.domain is None else bool(self.domain(p))

    def check(self, p) -> Array:
        p = np.asarray(p, dtype=float)
        if not self.contains(p):
            raise DomainError(f"point {p.tolist()} is outside the domain of {self.label or 'chart'}")
        return p

    def g(self, p) -> Array:
        return np.asarray(self.metric_at(np.asarray(p, dtype=float)), dtype=float)

    def dg(self, p) -> Array:
        p = np.asarray(p, dtype=float)
        if self.metric_d1 is not None:
            return np.asarray(self.metric_d1(p), dtype=float)
        return central_diff(self.g, p, FD_STEP1)

    def ddg(self, p) -> Array:
        p = np.asarray(p, dtype=float)
        if self.metric_d2 is not None:
            return np.asarray(self.metric_d2(p), dtype=float)
        if self.metric_d1 is not None:
            return central_diff(self.dg, p, FD_STEP1)
        return second_diff(self.g, p, FD_STEP2)


@dataclass(frozen=True)
class VectorFieldDef:
    """A vector field on a chart; ``jacobian_at(p)[i, k] = d_k W^i``."""

    value_at: Callable[[Array], Array]
    jacobian_at: Optional[Callable[[Array], Array]] = None
    label: str = ""

    def __call__(self, p) -> Array:
        return np.asarray(self.value_at(np.asarray(p, dtype=float)), dtype=float)

    def jacobian(self, p) -> Array:
        p = np.asarray(p, dtype=float)
        if self.jacobian_at is not None:
            return np.asarray(self.jacobian_at(p), dtype=float)
        return np.moveaxis(central_diff(self, p, FD_STEP1), 0, -1)

    def scaled(self, c: float) -> "VectorFieldDef":
        jac = None if self.jacobian_at is None else (lambda p: c * self.jacobian_at(p))
        return VectorFieldDef(lambda p: c * self.value_at(p), jac, f"{c}*{self.label}")


@dataclass(frozen=True)
class PointFrame:
    point: Array
    basis: tuple = field(default_factory=tuple)


def make_frame(space: ChartedSpace, p, basis: Sequence) -> PointFrame:
    p = space.check(p)
    b = np.atleast_2d(np.asarray(basis, dtype=float))
    gram = b @ space.g(p) @ b.T
    if abs(np.linalg.det(gram)) < 1e-14:
        raise ValueError("frame vectors are linearly dependent")
    return PointFrame(p, tuple(b))


def central_diff(fn: Callable[[Array], Array], p: Array, step: float) -> Array:
    """Stack of central differences, derivative index first."""
    p = np.asarray(p, dtype=float)
    out = []
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = step
        out.append((np.asarray(fn(p + e)) - np.asarray(fn(p - e))) / (2.0 * step))
    return np.stack(out)


def second_diff(fn: Callable[[Array], Array], p: Array, step: float) -> Array:
    p = np.asarray(p, dtype=float)
    n = p.size
    f0 = np.asarray(fn(p))
    out = np.empty((n, n) + f0.shape)
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = step
        out[k, k] = (np.asarray(fn(p + ek)) - 2.0 * f0 + np.asarray(fn(p - ek))) / step**2
        for l in range(k + 1, n):
            el = np.zeros(n)
            el[l] = step
            v = (
                np.asarray(fn(p + ek + el))
                - np.asarray(fn(p + ek - el))
                - np.asarray(fn(p - ek + el))
                + np.asarray(fn(p - ek - el))
            ) / (4.0 * step**2)
            out[k, l] = out[l, k] = v
    return out


def christoffel_from(g: Array, dg: Array) -> Array:
    """Christoffel symbols ``G[k, i, j]`` of any nondegenerate metric."""
    ginv = np.linalg.inv(g)
    lower = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    gam = 0.5 * np.einsum("kl,lij->kij", ginv, lower)
    return 0.5 * (gam + np.swapaxes(gam, 1, 2))


def christoffel(space: ChartedSpace, p) -> Array:
    p = space.check(p)
    return christoffel_from(space.g(p), space.dg(p))


def riemann_from(g: Array, dg: Array, ddg: Array) -> Array:
    ginv = np.linalg.inv(g)
    lower = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    gam = 0.5 * np.einsum("kl,lij->kij", ginv, lower)
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dlower = np.einsum("milj->mlij", ddg) + np.einsum("mjli->mlij", ddg) - ddg
    dgam = 0.5 * (np.einsum("mkl,lij->mkij", dginv, lower) + np.einsum("kl,mlij->mkij", ginv, dlower))
    # dgam[m, i, l, j] = d_m G^i_lj
    riem = (
        np.einsum("kilj->ijkl", dgam)
        - np.einsum("likj->ijkl", dgam)
        + np.einsum("ikm,mlj->ijkl", gam, gam)
        - np.einsum("ilm,mkj->ijkl", gam, gam)
    )
    return riem


class Curvature:
    """Riemann tensor at one point plus the helpers built on it."""

    def __init__(self, g: Array, riemann: Array):
        self.g = g
        self.riemann = riemann  # R^i_jkl

    def tensor4(self, x, y, z, w) -> float:
        """``R(x, y, z, w) = g(R(x, y)z, w)``."""
        return float(np.einsum("ia,ijkl,j,k,l,a->", self.g, self.riemann, z, x, y, w))

    def sectional(self, u, v) -> float:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        guu, gvv, guv = u @ self.g @ u, v @ self.g @ v, u @ self.g @ v
        area = guu * gvv - guv**2
        if area <= 1e-14 * guu * gvv:
            raise DegeneratePlaneError("vectors do not span a plane")
        return self.tensor4(u, v, v, u) / area


def curvature(space: ChartedSpace, p) -> Curvature:
    p = space.check(p)
    g = space.g(p)
    return Curvature(g, riemann_from(g, space.dg(p), space.ddg(p)))


def covariant_derivative(space: ChartedSpace, z: VectorFieldDef, p, x) -> Array:
    """``nabla_X Z`` at ``p`` for the Levi-Civita connection of ``g_R``."""
    p = space.check(p)
    x = np.asarray(x, dtype=float)
    gam = christoffel_from(space.g(p), space.dg(p))
    return z.jacobian(p) @ x + np.einsum("kij,i,j->k", gam, x, z(p))


def lie_derivative_metric(space: ChartedSpace, w: VectorFieldDef, p) -> Array:
    """``(L_W g)_ij = W^k d_k g_ij + g_kj d_i W^k + g_ik d_j W^k``."""
    p = space.check(p)
    g = space.g(p)
    jac = w.jacobian(p)
    out = np.einsum("k,kij->ij", w(p), space.dg(p)) + jac.T @ g + g @ jac
    return 0.5 * (out + out.T)


class Homothety(NamedTuple):
    kind: str  # "Killing" | "Homothetic" | "Neither"
    mu: float
    residual: float


def homothety_classify(space: ChartedSpace, w: VectorFieldDef, samples, tol: float = 1e-6) -> Homothety:
    """Decide whether ``w`` is Killing, homothetic (``L_W g = 2 mu g``) or neither.

    Residuals are measured relative to ``|g|_F`` at each sample so the
    decision is independent of the chart's scale. ``mu`` is the weighted
    least-squares fit over all samples.
    """
    pts = [np.asarray(p, dtype=float) for p in samples]
    if len(pts) < 2:
        raise ValueError("homothety_classify needs at least two sample points")
    lies, gs = [], []
    for p in pts:
        lies.append(lie_derivative_metric(space, w, p))
        gs.append(space.g(p))
    norms = np.array([np.linalg.norm(g) for g in gs])
    killing_res = max(np.linalg.norm(L) / n for L, n in zip(lies, norms))
    if killing_res < tol:
        return Homothety("Killing", 0.0, float(killing_res))
    mu = sum(np.sum(L * g) / n**2 for L, g, n in zip(lies, gs, norms)) / (2.0 * len(pts))
    res = max(np.linalg.norm(L - 2.0 * mu * g) / n for L, g, n in zip(lies, gs, norms))
    if res < tol:
        return Homothety("Homothetic", float(mu), float(res))
    return Homothety("Neither", float(mu), float(res))


class CurvatureCheck(NamedTuple):
    constant: bool
    k0: float
    spread: float


def constant_curvature_check(
    space: ChartedSpace, samples, tol: float = 1e-5, planes: int = 3, rng=None
) -> CurvatureCheck:
    """Sample sectional curvatures on random planes; constant iff the spread is below ``tol``.

    A one-dimensional chart has no planes; it is reported as ``Constant(0)``.
    """
    if space.dim == 1:
        return CurvatureCheck(True, 0.0, 0.0)
    rng = np.random.default_rng(0) if rng is None else rng
    values = []
    for p in samples:
        curv = curvature(space, p)
        for _ in range(max(planes, 3)):
            u, v = rng.standard_normal((2, space.dim))
            values.append(curv.sectional(u, v))
    values = np.array(values)
    spread = float(values.max() - values.min())
    return CurvatureCheck(spread < tol, float(values.mean()), spread)


def killing_identity_residual(space: ChartedSpace, z: VectorFieldDef, p, x, y) -> float:
    """``g(nabla_X Z, nabla_Y Z) - R(X, Z, Z, Y)``; zero for Killing fields of constant norm."""
    p = space.check(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = space.g(p)
    dx = covariant_derivative(space, z, p, x)
    dy = covariant_derivative(space, z, p, y)
    zp = z(p)
    return float(dx @ g @ dy - curvature(space, p).tensor4(x, zp, zp, y))


def geodesic_defect(space: ChartedSpace, z: VectorFieldDef, p) -> float:
    """g_R-norm of ``nabla_Z Z`` at ``p``."""
    d = covariant_derivative(space, z, p, z(p))
    return float(np.sqrt(max(d @ space.g(p) @ d, 0.0)))


def parallel_defect(space: ChartedSpace, z: VectorFieldDef, samples) -> float:
    """Largest operator norm of ``X -> nabla_X Z`` over the samples (g_R-orthonormal frames)."""
    worst = 0.0
    for p in samples:
        p = space.check(p)
        g = space.g(p)
        chol = np.linalg.cholesky(g)
        frame = np.linalg.inv(chol.T)  # columns are g-orthonormal
        cols = np.column_stack([covariant_derivative(space, z, p, frame[:, i]) for i in range(space.dim)])
        worst = max(worst, float(np.linalg.norm(chol.T @ cols, 2)))
    return worst


def norm(space: ChartedSpace, p, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(v @ space.g(p) @ v))


def conformally_flat(
    dim: int,
    factor: Callable[[Array], float],
    grad: Callable[[Array], Array],
    hess: Callable[[Array], Array],
    domain=None,
    label: str = "",
) -> ChartedSpace:
    """Chart with ``g = factor(x) * identity`` and analytic derivatives."""
    eye = np.eye(dim)

    def d1(p):
        return np.einsum("k,ij->kij", grad(p), eye)

    def d2(p):
        return np.einsum("kl,ij->klij", hess(p), eye)

    return ChartedSpace(dim, lambda p: factor(p) * eye, d1, d2, domain, label)


def euclidean(dim: int, domain=None, label: str = "euclidean") -> ChartedSpace:
    eye = np.eye(dim)
    zeros3 = np.zeros((dim, dim, dim))
    zeros4 = np.zeros((dim, dim, dim, dim))
    return ChartedSpace(dim, lambda p: eye, lambda p: zeros3, lambda p: zeros4, domain, label)
