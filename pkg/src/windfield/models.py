"""Catalog of concrete Zermelo data used as fixtures and as the CLI's model vocabulary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import ChartedSpace, VectorFieldDef, conformally_flat, euclidean
from .wrs import WindData


# ---------------------------------------------------------------- helpers


def _const_field(c) -> VectorFieldDef:
    c = np.asarray(c, dtype=float)
    zero = np.zeros((len(c), len(c)))
    return VectorFieldDef(lambda p: c.copy(), lambda p: zero, f"const{c.tolist()}")


def _rotation(n: int, a: float = 1.0) -> np.ndarray:
    """Skew matrix rotating the first coordinate plane."""
    A = np.zeros((n, n))
    A[0, 1], A[1, 0] = -a, a
    return A


def _skew(A, n: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (n, n) or not np.allclose(A, -A.T):
        raise ValueError(f"A must be a skew-symmetric {n}x{n} matrix")
    return A


class StereoChart:
    """Stereographic chart of the round sphere ``S^n(r)`` from the north pole.

    ``X(u) = r (2u, |u|^2 - 1) / (1 + |u|^2)``, so ``u = 0`` is the south pole
    and the metric is ``4 r^2 / (1 + |u|^2)^2`` times the identity.
    """

    def __init__(self, n: int, r: float, radius: float = 10.0, hole: float = 0.0):
        self.n, self.r = n, float(r)
        self.radius, self.hole = radius, hole

    def embed(self, u):
        u = np.asarray(u, dtype=float)
        s = u @ u
        return self.r * np.concatenate([2.0 * u, [s - 1.0]]) / (1.0 + s)

    def chart(self, X):
        X = np.asarray(X, dtype=float)
        return X[:-1] / (self.r - X[-1])

    def push(self, X, V):
        """Push an ambient tangent vector ``V`` at ``X`` into the chart."""
        d = self.r - X[-1]
        return V[:-1] / d + X[:-1] * V[-1] / d**2

    def space(self, label: str) -> ChartedSpace:
        r2 = self.r**2
        n = self.n

        def factor(u):
            return 4.0 * r2 / (1.0 + u @ u) ** 2

        def grad(u):
            return -16.0 * r2 * u / (1.0 + u @ u) ** 3

        def hess(u):
            s = 1.0 + u @ u
            return -16.0 * r2 * np.eye(n) / s**3 + 96.0 * r2 * np.outer(u, u) / s**4

        lo, hi = self.hole, self.radius

        def domain(u):
            s = math.sqrt(u @ u)
            return (s > lo or lo == 0.0) and s < hi

        return conformally_flat(n, factor, grad, hess, domain, label)

    def ambient_field(self, fn: Callable[[np.ndarray], np.ndarray], label: str) -> VectorFieldDef:
        def value(u):
            X = self.embed(u)
            return self.push(X, fn(X))

        return VectorFieldDef(value, None, label)

    def linear_field(self, M: np.ndarray, label: str) -> VectorFieldDef:
        """Push-down of the ambient linear field ``X -> M X`` with an analytic Jacobian."""
        r, n = self.r, self.n

        def value(u):
            X = self.embed(u)
            return self.push(X, M @ X)

        eye = np.eye(n)

        def jacobian(u):
            s1 = 1.0 + u @ u
            X = self.embed(u)
            dX = np.empty((n + 1, n))  # dX[a, k] = d_k X^a
            dX[:n] = (2.0 * r / s1) * eye - (4.0 * r / s1**2) * np.outer(u, u)
            dX[n] = (4.0 * r / s1**2) * u
            V, dV = M @ X, M @ dX
            d = r - X[-1]
            # d_k of V[:n] / d + X[:n] V[-1] / d^2, using d_k d = -dX[n, k]
            out = dV[:n] / d + np.outer(V[:n] / d**2 + 2.0 * X[:n] * V[-1] / d**3, dX[n])
            out += (dX[:n] * V[-1] + np.outer(X[:n], dV[n])) / d**2
            return out

        return VectorFieldDef(value, jacobian, label)


# ---------------------------------------------------------------- constructors


def euclidean_parallel(n: int = 2, c=None) -> WindData:
    c = np.array([0.5] + [0.0] * (n - 1)) if c is None else np.asarray(c, dtype=float)
    if c.shape != (n,):
        raise ValueError("c must have n components")
    return WindData(euclidean(n), _const_field(c))


def hyperbolic(n: int = 2, k: float = -1.0, unit_field: bool = False) -> WindData:
    """Upper half-space ``x_n > 0`` with ``g = (-1/k) / x_n^2``; W = 0 or the unit field along x_n."""
    if k >= 0:
        raise ValueError("hyperbolic space needs k < 0")
    a = -1.0 / k
    e = np.zeros(n)
    e[-1] = 1.0
    space = conformally_flat(
        n,
        lambda p: a / p[-1] ** 2,
        lambda p: -2.0 * a / p[-1] ** 3 * e,
        lambda p: 6.0 * a / p[-1] ** 4 * np.outer(e, e),
        lambda p: p[-1] > 0,
        f"hyperbolic{n}",
    )
    if not unit_field:
        return WindData(space, _const_field(np.zeros(n)))
    s = 1.0 / math.sqrt(a)
    jac = s * np.outer(e, e)
    wind = VectorFieldDef(lambda p: s * p[-1] * e, lambda p: jac, "unit-vertical")
    return WindData(space, wind)


def sphere_killing(n: int = 2, r: float = 1.0, A=None) -> WindData:
    """Round ``S^n(r)`` in a stereographic chart; W is the rotation field ``A X`` pushed down."""
    A = _rotation(n + 1, 0.5) if A is None else _skew(A, n + 1)
    ch = StereoChart(n, r)
    wind = ch.linear_field(A, "rotation")
    wd = WindData(ch.space(f"sphere{n}"), wind)
    return wd


def recenter_sphere(n: int, r: float, A, u) -> tuple[WindData, Callable]:
    """Re-chart so that the point ``u`` sits at the chart origin.

    Applies the ambient rotation ``Q`` taking ``X(u)`` to the south pole; the
    returned wind data uses ``Q A Q^T`` and ``phi`` maps old chart points to new.
    """
    ch = StereoChart(n, r)
    X = ch.embed(u) / r
    target = np.zeros(n + 1)
    target[-1] = -1.0
    v = X - target
    if np.linalg.norm(v) < 1e-14:
        Q = np.eye(n + 1)
    else:
        v /= np.linalg.norm(v)
        Q = np.eye(n + 1) - 2.0 * np.outer(v, v)  # reflection swapping X and target
    A = _rotation(n + 1, 0.5) if A is None else _skew(A, n + 1)
    A2 = Q @ A @ Q.T
    wd = sphere_killing(n, r, A2)

    def phi(p):
        return ch.chart(Q @ ch.embed(p))

    return wd, phi


def odd_sphere_hopf(m: int = 1, r: float = 1.0, n: Optional[int] = None) -> WindData:
    """``S^{2m+1}(r)`` with the unit Hopf field ``(1/r) J X``."""
    if n is not None:
        if n % 2 == 0:
            raise ValueError(
                "a unit Killing field cannot exist on a positively curved manifold of even dimension"
            )
        m = (n - 1) // 2
    if m < 1:
        raise ValueError("m must be at least 1")
    dim = 2 * m + 1
    J = np.zeros((dim + 1, dim + 1))
    for i in range(0, dim + 1, 2):
        J[i, i + 1], J[i + 1, i] = -1.0, 1.0
    ch = StereoChart(dim, r)
    wind = ch.linear_field(J / r, "hopf")
    return WindData(ch.space(f"sphere{dim}"), wind)


def sphere_unit_field(r: float = 1.0) -> WindData:
    """Normalized rotation field on ``S^2(r)``; the chart avoids both of its zeros."""
    A = _rotation(3)
    ch = StereoChart(2, r, radius=10.0, hole=0.1)

    def fn(X):
        V = A @ X
        return V / math.sqrt(V @ V)

    return WindData(ch.space("sphere2-punctured"), ch.ambient_field(fn, "unit-rotation"))


def flat_homothetic(n: int = 2, mu: float = 1.0, A=None, punctured: bool = False) -> WindData:
    """Flat space with ``W = mu x + A x`` (``L_W g = 2 mu g``)."""
    A = np.zeros((n, n)) if A is None else _skew(A, n)
    M = mu * np.eye(n) + A
    domain = (lambda p: p @ p > 1e-6) if punctured else None
    wind = VectorFieldDef(lambda p: M @ p, lambda p: M, "homothetic")
    return WindData(euclidean(n, domain, "punctured-plane" if punctured else "euclidean"), wind)


def _bump(t: float) -> tuple[float, float]:
    """C-infinity step ``psi`` from 0 to 1 on [0, 1] and its derivative."""
    if t <= 0.0:
        return 0.0, 0.0
    if t >= 1.0:
        return 1.0, 0.0
    a = math.exp(-1.0 / t)
    b = math.exp(-1.0 / (1.0 - t))
    s = a + b
    return a / s, a * b * (1.0 / t**2 + 1.0 / (1.0 - t) ** 2) / s**2


def ex1_plateau(j: int) -> Optional[float]:
    """Prescribed value of f on ``I_j`` (only for ``j`` even)."""
    if j % 4 == 0:
        return 2.0 ** (-(j + 1)) - 1.0
    if j % 4 == 2:
        return 1.0 - 2.0 ** (-(j + 1))
    return None


def ex1_interval(j: int) -> tuple[float, float]:
    return 2.0 ** (-(j + 1)), 2.0 ** (-j)


def ex1_wind(x: float) -> tuple[float, float]:
    """``(f(x), f'(x))`` for the half-line example."""
    if x >= 0.5:
        return -0.5, 0.0
    j = int(math.floor(-math.log2(x)))
    lo, hi = ex1_interval(j)
    if x < lo:  # guard against rounding of log2
        j += 1
        lo, hi = ex1_interval(j)
    elif x > hi:
        j -= 1
        lo, hi = ex1_interval(j)
    val = ex1_plateau(j)
    if val is not None:
        return val, 0.0
    left, right = ex1_plateau(j + 1), ex1_plateau(j - 1)
    t = (x - lo) / (hi - lo)
    s, ds = _bump(t)
    return left + (right - left) * s, (right - left) * ds / (hi - lo)


def example_ex1() -> WindData:
    """Half-line ``x > 0``, ``g = dx^2``; incomplete ``g_R`` but a complete wind structure."""

    def value(p):
        return np.array([ex1_wind(float(p[0]))[0]])

    def jac(p):
        return np.array([[ex1_wind(float(p[0]))[1]]])

    return WindData(euclidean(1, lambda p: p[0] > 0, "half-line"), VectorFieldDef(value, jac, "ex1"))


_T3 = math.tanh(3.0)


def figure3_wind(x: float) -> tuple[float, float]:
    """``(f(x), f'(x))``: ``-sin(pi x / 6)`` on [-3, 3], tanh tails to 0 at |x| = 6."""
    ax = abs(x)
    if ax <= 3.0:
        return -math.sin(math.pi * x / 6.0), -math.pi / 6.0 * math.cos(math.pi * x / 6.0)
    if ax >= 6.0:
        return 0.0, 0.0
    sgn = 1.0 if x > 0 else -1.0
    th = math.tanh(2.0 * (4.5 - ax))
    f = -0.5 - 0.5 * th / _T3
    df = (1.0 - th * th) / _T3  # d/d|x|
    return sgn * f, df


def figure3() -> WindData:
    def value(p):
        return np.array([figure3_wind(float(p[0]))[0], 0.0])

    def jac(p):
        out = np.zeros((2, 2))
        out[0, 0] = figure3_wind(float(p[0]))[1]
        return out

    return WindData(euclidean(2), VectorFieldDef(value, jac, "figure3"))


def strong_constant(c=(2.0, 0.0)) -> WindData:
    return WindData(euclidean(2), _const_field(c))


def euclidean_shear(a: float = 1.0) -> WindData:
    jac = np.array([[0.0, a], [0.0, 0.0]])
    return WindData(euclidean(2), VectorFieldDef(lambda p: np.array([a * p[1], 0.0]), lambda p: jac, "shear"))


def flat_unit_twist() -> WindData:
    def value(p):
        return np.array([math.cos(p[1]), math.sin(p[1])])

    def jac(p):
        return np.array([[0.0, -math.sin(p[1])], [0.0, math.cos(p[1])]])

    return WindData(euclidean(2), VectorFieldDef(value, jac, "twist"))


def punctured_plane(hole=(1.0, 0.0), radius: float = 0.1) -> WindData:
    """Flat plane, no wind, with a small closed disc removed."""
    c = np.asarray(hole, dtype=float)

    def domain(p):
        d = p - c
        return d @ d > radius**2

    return WindData(euclidean(2, domain, "punctured-plane"), _const_field(np.zeros(2)))


# ---------------------------------------------------------------- catalog


@dataclass
class ModelSpec:
    key: str
    name: str
    params: dict
    model_space: Optional[str]  # "euclidean" | "sphere" | "hyperbolic" | None
    box: tuple  # sampling box, ((lo...), (hi...))
    expected: dict = field(default_factory=dict)
    notes: str = ""

    def build(self) -> WindData:
        return make_model(self.name, self.params)


_BUILDERS: dict[str, Callable[..., WindData]] = {
    "euclidean_parallel": euclidean_parallel,
    "hyperbolic": hyperbolic,
    "sphere_killing": sphere_killing,
    "odd_sphere_hopf": odd_sphere_hopf,
    "sphere_unit_field": sphere_unit_field,
    "flat_homothetic": flat_homothetic,
    "example_ex1": example_ex1,
    "figure3": figure3,
    "strong_constant": strong_constant,
    "euclidean_shear": euclidean_shear,
    "flat_unit_twist": flat_unit_twist,
    "punctured_plane": punctured_plane,
}

# which complete model space a builder's chart represents
_MODEL_SPACE = {
    "euclidean_parallel": "euclidean",
    "hyperbolic": "hyperbolic",
    "sphere_killing": "sphere",
    "odd_sphere_hopf": "sphere",
    "flat_homothetic": "euclidean",
    "strong_constant": "euclidean",
    "euclidean_shear": "euclidean",
    "flat_unit_twist": "euclidean",
    "figure3": "euclidean",
}


def make_model(name: str, params: Optional[dict] = None) -> WindData:
    """Build a catalog model by name; list-valued params are converted to arrays."""
    params = dict(params or {})
    if name not in _BUILDERS:
        raise KeyError(f"unknown model {name!r}; known: {sorted(_BUILDERS)}")
    kwargs = {k: (np.asarray(v, dtype=float) if isinstance(v, (list, tuple)) else v) for k, v in params.items()}
    try:
        wd = _BUILDERS[name](**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None
    space = _MODEL_SPACE.get(name)
    if name == "hyperbolic" and params.get("unit_field"):
        space = "hyperbolic"
    if name == "flat_homothetic" and params.get("punctured"):
        space = None
    meta = {"name": name, "params": params, "model_space": space}
    return WindData(wd.space, wd.wind, meta)


def _verdict(cfc, k0=None, mu=0.0, wind="Killing", glob=None, kropina=None):
    out = {"is_cfc": cfc, "wind_type": wind, "global_case": glob, "kropina_case": kropina}
    if k0 is not None:
        out.update(k0=k0, mu=mu, kappa=k0 - mu * mu / 4.0)
    return out


def list_models() -> list[ModelSpec]:
    sq = ((-2.0, -2.0), (2.0, 2.0))
    ball3 = ((-1.5,) * 3, (1.5,) * 3)
    return [
        ModelSpec("euclidean_parallel", "euclidean_parallel", {"c": [0.5, 0.0]}, "euclidean", sq,
                  _verdict(True, 0.0, glob="ModelKilling")),
        ModelSpec("euclidean_parallel_unit", "euclidean_parallel", {"c": [1.0, 0.0]}, "euclidean", sq,
                  _verdict(True, 0.0, glob="ModelKilling", kropina="FlatParallel")),
        ModelSpec("hyperbolic", "hyperbolic", {"n": 2, "k": -1.0}, "hyperbolic", ((-2.0, 0.2), (2.0, 3.0)),
                  _verdict(True, -1.0, glob="ModelKilling")),
        ModelSpec("sphere_killing", "sphere_killing", {"n": 2, "r": 1.0}, "sphere", sq,
                  _verdict(True, 1.0, glob="ModelKilling")),
        ModelSpec("odd_sphere_hopf", "odd_sphere_hopf", {"m": 1, "r": 1.0}, "sphere", ball3,
                  _verdict(True, 1.0, glob="ModelKilling", kropina="OddSphereHopf")),
        ModelSpec("odd_sphere_hopf_r2", "odd_sphere_hopf", {"m": 1, "r": 2.0}, "sphere", ball3,
                  _verdict(True, 0.25, glob="ModelKilling", kropina="OddSphereHopf")),
        ModelSpec("flat_homothetic", "flat_homothetic", {"n": 2, "mu": 1.0}, "euclidean", sq,
                  _verdict(True, 0.0, 1.0, "ProperlyHomothetic", "FlatProperHomothetic")),
        ModelSpec("example_ex1", "example_ex1", {}, None, ((1e-3,), (0.5,)),
                  _verdict(True, wind="Neither", glob="NotGlobalModel"),
                  "g_R incomplete, wind structure complete (probe)"),
        ModelSpec("figure3", "figure3", {}, "euclidean", ((-7.0, -2.0), (7.0, 2.0)), _verdict(False, wind="Neither")),
        ModelSpec("strong_constant", "strong_constant", {}, "euclidean", sq, _verdict(True, 0.0, glob="ModelKilling")),
        ModelSpec("euclidean_shear", "euclidean_shear", {}, "euclidean", sq, _verdict(False, wind="Neither")),
        ModelSpec("hyperbolic_unit_field", "hyperbolic", {"n": 2, "k": -1.0, "unit_field": True}, "hyperbolic",
                  ((-2.0, 0.2), (2.0, 3.0)), _verdict(False, wind="Neither", kropina="Obstructed(negative curvature)")),
        ModelSpec("sphere_unit_field", "sphere_unit_field", {"r": 1.0}, None, sq,
                  _verdict(False, wind="Neither", kropina="Obstructed(even-dimensional positive curvature)")),
        ModelSpec("flat_unit_twist", "flat_unit_twist", {}, "euclidean", sq,
                  _verdict(False, wind="Neither", kropina="Obstructed(flat non-parallel)")),
        ModelSpec("punctured_plane", "punctured_plane", {}, None, sq, _verdict(True, 0.0, glob="NotGlobalModel")),
    ]


def get_spec(key: str) -> ModelSpec:
    for spec in list_models():
        if spec.key == key:
            return spec
    raise KeyError(key)


def sample_points(wd: WindData, box, count: int, rng: np.random.Generator, max_tries: int = 100_000) -> np.ndarray:
    """Uniform rejection samples from ``box`` that lie in the chart domain."""
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not sample enough domain points")
        p = lo + (hi - lo) * rng.random(len(lo))
        if wd.space.contains(p):
            out.append(p)
    return np.array(out)
