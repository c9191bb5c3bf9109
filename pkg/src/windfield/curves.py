from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SampledCurve:
    """Ordered samples ``(param, point, velocity)`` of a curve plus free-form tags."""

    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if not (len(self.params) == len(self.points) == len(self.velocities)):
            raise ValueError("params, points and velocities must have equal length")
        if len(self.params) > 1 and np.any(np.diff(self.params) <= 0):
            raise ValueError("curve parameters must be strictly increasing")

    def __len__(self) -> int:
        return len(self.params)

    @property
    def span(self) -> float:
        return float(self.params[-1] - self.params[0])

    def at(self, s) -> np.ndarray:
        """Cubic Hermite interpolation of the points (uses the stored velocities)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(self.params, s) - 1, 0, len(self.params) - 2)
        t0, t1 = self.params[idx], self.params[idx + 1]
        hh = (t1 - t0)[:, None]
        u = ((s - t0) / (t1 - t0))[:, None]
        p0, p1 = self.points[idx], self.points[idx + 1]
        m0, m1 = self.velocities[idx] * hh, self.velocities[idx + 1] * hh
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
