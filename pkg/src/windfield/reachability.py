"""Reachable sets of wind curves on a grid.

The forward wind ball of radius ``r`` is the set of points reached at time
exactly ``r`` by curves whose velocity stays in ``W + closed unit g_R-ball``.
It is computed with a semi-Lagrangian level-set sweep:

    phi_{t+s}(y) = min over v in V_y of phi_t(y - s v),

started from the exact front of the frozen data at ``p0`` after a few
steps. Each sweep "hop" reuses one
base field for up to ``hop`` steps and is then rebased, which keeps the
interpolation smoothing per unit time small. Velocities are frozen at the
arrival node. In one dimension the reachable set is an interval whose
endpoints solve ``a' = W - 1/sqrt(g)``, ``b' = W + 1/sqrt(g)``; this case is
integrated directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.ndimage import binary_dilation, map_coordinates
from scipy.spatial import cKDTree

from .wrs import WindData, reverse, unit_directions

_BIG = 1e6


@dataclass(frozen=True)
class GridSpec:
    """Node-centred grid: ``resolution`` nodes per axis spanning ``box``."""

    box: tuple
    resolution: tuple
    dt: float

    def __post_init__(self):
        lo, hi = (tuple(float(x) for x in b) for b in self.box)
        res = self.resolution
        res = tuple(int(r) for r in (res if isinstance(res, (tuple, list)) else (res,) * len(lo)))
        if len(lo) != len(hi) or len(res) != len(lo):
            raise ValueError("box and resolution dimensions disagree")
        if any(h <= l for l, h in zip(lo, hi)) or any(r < 3 for r in res):
            raise ValueError("degenerate grid")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "box", (lo, hi))
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.box[0])

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.box[1])

    @property
    def cell(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.resolution) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, r) for l, h, r in zip(self.box[0], self.box[1], self.resolution)]

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape ``(*resolution, dim)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def index_of(self, x) -> tuple:
        i = np.rint((np.asarray(x, dtype=float) - self.lo) / self.cell).astype(int)
        return tuple(np.clip(i, 0, np.array(self.resolution) - 1))

    @classmethod
    def auto(cls, wd: WindData, box, resolution, cfl: float = 0.5) -> "GridSpec":
        """Grid with the largest ``dt`` allowed by the CFL bound ``cfl``."""
        probe = cls(box, resolution, 1.0)
        ext = max_extent(wd, probe)
        return cls(box, resolution, cfl * float(np.min(probe.cell)) / ext)


def _node_fields(wd: WindData, grid: GridSpec):
    pts = grid.nodes().reshape(-1, grid.dim)
    mask = np.array([wd.space.contains(p) for p in pts])
    W = np.zeros_like(pts)
    G = np.broadcast_to(np.eye(grid.dim), (len(pts), grid.dim, grid.dim)).copy()
    for i in np.flatnonzero(mask):
        W[i] = wd.W(pts[i])
        G[i] = wd.g(pts[i])
    return pts, mask, W, G


def _velocity_offsets(dim: int) -> np.ndarray:
    """Euclidean samples of the closed unit ball: boundary ring, half-radius shell, centre."""
    if dim == 1:
        return np.array([[-1.0], [-0.5], [0.0], [0.5], [1.0]])
    rim = unit_directions(dim, 32 if dim == 2 else 64)
    shell = 0.5 * unit_directions(dim, 16)
    if dim == 2:  # offset the shell so its directions interleave with the rim
        a = np.pi / 16
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        shell = shell @ rot.T
    return np.vstack([rim, shell, np.zeros((1, dim))])


def _velocities(W, G, offsets) -> np.ndarray:
    chol = np.linalg.cholesky(G)
    inv_t = np.linalg.inv(np.swapaxes(chol, -1, -2))
    return W[:, None, :] + np.einsum("mij,kj->mki", inv_t, offsets)


def max_extent(wd: WindData, grid: GridSpec) -> float:
    """Largest chart-coordinate speed ``|W + u|`` over grid nodes in the domain."""
    _, mask, W, G = _node_fields(wd, grid)
    if not mask.any():
        raise ValueError("grid box does not meet the domain")
    eig = np.linalg.eigvalsh(G[mask])[:, 0]
    return float(np.max(np.linalg.norm(W[mask], axis=1) + 1.0 / np.sqrt(eig)))


@dataclass
class ArrivalField:
    """Result of a reachable-set sweep.

    ``times`` holds first-hit times (``inf`` where never reached within the
    radius); ``phi`` is the level-set function at time exactly ``radius``.
    """

    grid: GridSpec
    times: np.ndarray
    center: np.ndarray
    radius: float
    phi: np.ndarray
    mask: np.ndarray
    backward: bool = False

    def closed_ball(self) -> np.ndarray:
        """Cells reached at time exactly ``radius`` (closed variant)."""
        return (self.phi <= 0.0) & self.mask

    def open_ball(self) -> np.ndarray:
        """Closed-variant cells that were already reached strictly before ``radius``."""
        return self.closed_ball() & (self.times < self.radius - 1e-12)

    def ever_reached(self) -> np.ndarray:
        return np.isfinite(self.times)

    def time_at(self, x) -> float:
        return float(self.times[self.grid.index_of(x)])

    def reached_near(self, x, radius_cells: int = 1) -> bool:
        idx = np.array(self.grid.index_of(x))
        sl = tuple(slice(max(i - radius_cells, 0), i + radius_cells + 1) for i in idx)
        return bool(self.ever_reached()[sl].any())

    def points(self, which: str = "closed") -> np.ndarray:
        sel = {"closed": self.closed_ball, "open": self.open_ball, "ever": self.ever_reached}[which]()
        return self.grid.nodes()[sel]

    def to_csv(self, path) -> None:
        names = ["x", "y", "z"][: self.grid.dim] if self.grid.dim <= 3 else [f"x{i}" for i in range(self.grid.dim)]
        nodes = self.grid.nodes().reshape(-1, self.grid.dim)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\r\n")
            out.writerow(names + ["time"])
            for x, t in zip(nodes, self.times.reshape(-1)):
                out.writerow([repr(float(c)) for c in x] + ["inf" if not math.isfinite(t) else repr(float(t))])


def _sweep_1d(wd: WindData, p0, r: float, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    def speed(x):
        x = np.array([x])
        if not wd.space.contains(x):
            return math.nan, math.nan
        w = float(wd.W(x)[0])
        s = 1.0 / math.sqrt(float(wd.g(x)[0, 0]))
        return w - s, w + s

    def rhs(_, y):
        return [speed(y[0])[0], speed(y[1])[1]]

    nsteps = max(1, int(math.ceil(r / grid.dt)))
    ts = np.linspace(0.0, r, nsteps + 1)
    x0 = float(p0[0])
    sol = solve_ivp(rhs, (0.0, r), [x0, x0], method="DOP853", t_eval=ts, rtol=1e-10, atol=1e-13,
                    max_step=float(grid.cell[0]))
    if not sol.success or np.any(~np.isfinite(sol.y)):
        raise ValueError("reachable interval left the domain")
    a, b = sol.y
    # the reachable set at time t is [a(t), b(t)]; first hit is the first t covering x
    axis = grid.axes()[0]
    times = np.full(axis.shape, np.inf)
    lo_env = np.minimum.accumulate(a)
    hi_env = np.maximum.accumulate(b)
    left = axis <= x0
    times[left] = np.interp(-axis[left], -lo_env, ts, left=np.inf, right=np.inf)
    times[~left] = np.interp(axis[~left], hi_env, ts, left=np.inf, right=np.inf)
    times[(axis < lo_env[-1]) | (axis > hi_env[-1])] = np.inf
    phi = np.maximum(a[-1] - axis, axis - b[-1])
    return times, phi


def _sweep(wd: WindData, p0, r: float, grid: GridSpec, hop: int):
    """Level-set sweep; returns (first-hit times, phi at time r, domain mask) on the grid."""
    pts, mask, W, G = _node_fields(wd, grid)
    shape = grid.resolution
    V = _velocities(W, G, _velocity_offsets(grid.dim))
    ext = float(np.max(np.linalg.norm(V[mask], axis=-1)))
    if grid.dt > 0.5 * float(np.min(grid.cell)) / ext * (1 + 1e-9):
        raise ValueError(f"CFL violation: dt={grid.dt:.4g} exceeds 0.5*cell/extent={0.5 * np.min(grid.cell) / ext:.4g}")
    nsteps = max(1, int(math.ceil(r / grid.dt - 1e-9)))
    dt = r / nsteps
    lo, cell = grid.lo, grid.cell
    hmin = float(np.min(cell))
    # values are clipped to [-B, B]; clipping commutes with the min-update, so only
    # nodes whose upstream neighbourhood meets the band |phi| < B can change
    reach = hop * dt * ext
    B = reach + 2.0 * hmin
    rad = int(math.ceil(reach / hmin)) + 1
    footprint = np.ones((3,) * grid.dim, dtype=bool)

    idx0 = (pts - lo) / cell
    dV = dt * V / cell

    # frozen-coefficient exact front for the first few steps: interpolating the
    # apex of a cone loses O(cell) per step while the front is only cells wide
    g0, w0 = wd.g(p0), wd.W(p0)
    d = pts - p0
    times = np.full(shape, np.inf)

    def exact(t):
        z = d - t * w0
        return np.sqrt(np.einsum("mi,ij,mj->m", z, g0, z)) - t

    s0 = min(nsteps, int(math.ceil(8.0 * hmin * math.sqrt(np.linalg.eigvalsh(g0)[-1]) / dt)))
    while s0 > 1 and np.any(exact(s0 * dt)[~mask] <= 2.0 * hmin * math.sqrt(np.linalg.eigvalsh(g0)[-1])):
        s0 //= 2
    for k in range(0, s0 + 1):
        ph = exact(k * dt).reshape(shape)
        hit = (ph <= 0.0) & ~np.isfinite(times) & mask.reshape(shape)
        times[hit] = k * dt
    phi = np.clip(exact(s0 * dt), -B, B)
    phi[~mask] = B
    phi = phi.reshape(shape)
    maskf = mask.reshape(shape).astype(float)
    has_holes = not mask.all() or wd.space.domain is not None

    # blocked[j-1][m, k]: the straight backward segment from node m along -v_k leaves the domain within j steps
    blocked = []
    if has_holes:
        acc = np.zeros(V.shape[:2], dtype=bool)
        for j in range(1, hop + 1):
            inside = map_coordinates(maskf, np.moveaxis(idx0[:, None, :] - j * dV, -1, 0), order=1,
                                     mode="constant", cval=0.0)
            acc = acc | (inside < 1.0 - 1e-9)
            blocked.append(acc.copy())

    base = phi
    active = None
    for s in range(s0 + 1, nsteps + 1):
        j = (s - s0 - 1) % hop + 1
        if j == 1:
            band = binary_dilation(np.abs(base) < B, structure=footprint, iterations=rad)
            active = np.flatnonzero(band.reshape(-1) & mask)
        coords = idx0[active, None, :] - j * dV[active]
        vals = map_coordinates(base, np.moveaxis(coords, -1, 0), order=1, mode="constant", cval=B)
        if has_holes:
            vals[blocked[j - 1][active]] = B
        new = base.reshape(-1).copy()
        new[active] = np.clip(vals.min(axis=1), -B, B)
        phi = new.reshape(shape)
        hit = (phi <= 0.0) & ~np.isfinite(times)
        times[hit] = s * dt
        if j == hop:
            base = phi
    return times, phi, mask.reshape(shape)


def forward_ball(wd: WindData, p0, r: float, grid: GridSpec, backward: bool = False, hop: int = 8) -> ArrivalField:
    """Forward (or, with ``backward=True``, backward) wind ball of radius ``r`` about ``p0``."""
    p0 = wd.space.check(p0)
    if r <= 0:
        raise ValueError("radius must be positive")
    if grid.dim != wd.dim:
        raise ValueError("grid dimension does not match the model")
    if np.any(p0 < grid.lo) or np.any(p0 > grid.hi):
        raise ValueError("center lies outside the grid box")
    data = reverse(wd) if backward else wd
    if grid.dim == 1:
        ext = max_extent(data, grid)
        if grid.dt > 0.5 * float(grid.cell[0]) / ext * (1 + 1e-9):
            raise ValueError("CFL violation")
        times, phi = _sweep_1d(data, p0, r, grid)
        mask = np.array([data.space.contains(np.array([x])) for x in grid.axes()[0]])
        times[~mask] = np.inf
    else:
        times, phi, mask = _sweep(data, p0, r, grid, hop)
    return ArrivalField(grid, times, np.array(p0), float(r), phi, mask, backward)


class InclusionReport(NamedTuple):
    monotone: bool
    monotone_violations: int
    open_in_closed: bool
    closed_minus_open: tuple  # per field
    ok: bool


def ball_inclusion_report(small: ArrivalField, large: ArrivalField) -> InclusionReport:
    """Cell-wise checks ``B(r1) <= B(r2)`` (closed variants) and open <= closed for both fields."""
    if small.grid != large.grid:
        raise ValueError("fields live on different grids")
    if not small.radius < large.radius:
        raise ValueError("first field must have the smaller radius")
    viol = int(np.sum(small.closed_ball() & ~large.closed_ball()))
    oc = all(not np.any(f.open_ball() & ~f.closed_ball()) for f in (small, large))
    diff = tuple(int(np.sum(f.closed_ball() & ~f.open_ball())) for f in (small, large))
    return InclusionReport(viol == 0, viol, oc, diff, viol == 0 and oc)


class ProbeResult(NamedTuple):
    bounded_inside: bool
    margin: float
    note: str = "grid evidence, not a proof"


def precompactness_probe(wd: WindData, p0, r: float, grid: GridSpec) -> ProbeResult:
    """Does everything reached within time ``r`` stay inside the box and away from excluded points?

    ``margin`` is the smallest distance from a reached node to the box faces
    or to a node outside the domain.
    """
    field = forward_ball(wd, p0, r, grid)
    reached = grid.nodes()[field.ever_reached()]
    if len(reached) == 0:
        return ProbeResult(True, math.inf)
    margin = float(np.min(np.minimum(reached - grid.lo, grid.hi - reached)))
    outside = grid.nodes()[~field.mask]
    if len(outside):
        d, _ = cKDTree(outside).query(reached)
        margin = min(margin, float(d.min()))
    return ProbeResult(margin > 0.0, margin)


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))
