"""Constant flag curvature decisions from Zermelo data.

A wind structure has constant flag curvature ``kappa`` exactly when ``g_R``
has constant curvature ``k0`` and ``W`` is ``mu``-homothetic, with
``kappa = k0 - mu^2 / 4``. The algebraic test decides; the geodesic
deviation estimate is only a cross-check that may attach warnings.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .geodesics import flag_curvature_deviation
from .geometry import DomainError, constant_curvature_check, homothety_classify, norm, parallel_defect
from .wrs import WindData, g_unit, speeds, tangent

MODEL_SPACES = ("euclidean", "sphere", "hyperbolic")


@dataclass
class CfcVerdict:
    is_cfc: bool
    k0: float
    mu: float
    kappa: float
    wind_type: str  # "Killing" | "ProperlyHomothetic" | "Neither"
    global_case: Optional[str] = None
    kropina_case: Optional[str] = None
    residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    hypotheses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_samples(wd: WindData, samples, need: int = 8) -> list:
    pts = [wd.space.check(p) for p in samples]
    if len(pts) < need:
        raise ValueError(f"need at least {need} sample points, got {len(pts)}")
    if np.linalg.matrix_rank(np.array(pts) - pts[0], tol=1e-9) < min(wd.dim, len(pts) - 1):
        raise ValueError("sample points are degenerate (they do not span the chart)")
    return pts


def _cross_check(wd: WindData, pts, kappa: float, rng, flags: int = 3) -> tuple[list, list]:
    found, warnings = [], []
    for p in pts:
        if len(found) >= flags:
            break
        g, w = wd.g(p), wd.W(p)
        e = rng.standard_normal(wd.dim)
        u = g_unit(g, e / np.linalg.norm(e))[0]
        if 1.0 + w @ g @ u < 0.2:
            u = -u
        v = w + u
        trans = rng.standard_normal(wd.dim)
        try:
            v = v / speeds(wd, tangent(p, v))[0]
            est = flag_curvature_deviation(wd, p, v, trans, samples=21)
        except (DomainError, ValueError):
            continue
        found.append(est.kappa)
        if abs(est.kappa - kappa) / max(1.0, abs(kappa)) > 0.02:
            warnings.append(f"deviation estimate {est.kappa:.4f} disagrees with kappa {kappa:.4f}")
    if not found:
        warnings.append("deviation cross-check skipped: no flag kept its geodesic inside the chart")
    return found, warnings


def classify_cfc(
    wd: WindData,
    samples,
    tol: float = 1e-6,
    curvature_tol: float = 1e-5,
    cross_check: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> CfcVerdict:
    pts = _check_samples(wd, samples)
    rng = np.random.default_rng(0) if rng is None else rng
    cc = constant_curvature_check(wd.space, pts, tol=curvature_tol, rng=rng)
    hom = homothety_classify(wd.space, wd.wind, pts, tol=tol)
    if hom.kind == "Killing" or (hom.kind == "Homothetic" and abs(hom.mu) <= tol):
        wind_type, mu = "Killing", 0.0
    elif hom.kind == "Homothetic":
        wind_type, mu = "ProperlyHomothetic", hom.mu
    else:
        wind_type, mu = "Neither", hom.mu
    warnings, hyps = [], ["simple connectedness is not checked"]
    if wd.dim == 1:
        is_cfc = True
        warnings.append("dimension one has no flags; constant flag curvature holds vacuously")
    else:
        is_cfc = cc.constant and wind_type != "Neither"
    k0 = cc.k0 if cc.constant else math.nan
    kappa = k0 - mu * mu / 4.0
    residuals = {"curvature_spread": cc.spread, "homothety": hom.residual}
    verdict = CfcVerdict(is_cfc, k0, mu, kappa, wind_type, residuals=residuals, warnings=warnings, hypotheses=hyps)
    if cross_check and is_cfc and wd.dim >= 2:
        found, warns = _cross_check(wd, pts, kappa, rng)
        verdict.residuals["deviation_kappa"] = found
        verdict.warnings.extend(warns)
    return verdict


def global_match(wd: WindData, verdict: CfcVerdict, probe=None, tol: float = 1e-6) -> str:
    """Match a CFC verdict against the complete simply connected models.

    The chart's identity as a model space comes from the catalog (``meta``);
    a failed precompactness probe forces ``NotGlobalModel``.
    """
    if not verdict.is_cfc:
        raise ValueError("global_match needs a constant-flag-curvature verdict")
    space = wd.meta.get("model_space")
    if probe is not None and not probe.bounded_inside:
        return "NotGlobalModel"
    if space not in MODEL_SPACES or wd.dim < 2:
        return "NotGlobalModel"
    expected_sign = {"euclidean": 0, "sphere": 1, "hyperbolic": -1}[space]
    sign = 0 if abs(verdict.k0) <= 1e-5 else int(math.copysign(1, verdict.k0))
    if sign != expected_sign:
        return "NotGlobalModel"
    if verdict.wind_type == "Killing":
        return "ModelKilling"
    if verdict.wind_type == "ProperlyHomothetic" and sign == 0:
        return "FlatProperHomothetic"
    return "NotGlobalModel"


def kropina_classify(wd: WindData, samples, tol: float = 1e-6, curvature_tol: float = 1e-5) -> str:
    """Which unit-wind (Kropina) case the data falls in, or the reason none can."""
    pts = _check_samples(wd, samples)
    worst = max(abs(norm(wd.space, p, wd.W(p)) - 1.0) for p in pts)
    if worst > tol:
        raise ValueError(f"not a Kropina structure: |W| deviates from 1 by {worst:.3e}")
    cc = constant_curvature_check(wd.space, pts, tol=curvature_tol)
    if not cc.constant:
        return "Obstructed(non-constant curvature)"
    if cc.k0 < -curvature_tol:
        return "Obstructed(negative curvature)"
    if abs(cc.k0) <= curvature_tol:
        if parallel_defect(wd.space, wd.wind, pts) <= tol:
            return "FlatParallel"
        return "Obstructed(flat non-parallel)"
    if wd.dim % 2 == 0:
        return "Obstructed(even-dimensional positive curvature)"
    if homothety_classify(wd.space, wd.wind, pts, tol=tol).kind == "Killing":
        return "OddSphereHopf"
    return "Obstructed(not Killing)"


def classify_all(wd: WindData, samples, tol: float = 1e-6, cross_check: bool = True, probe=None) -> CfcVerdict:
    """``classify_cfc`` plus the global and unit-wind cases where they apply."""
    verdict = classify_cfc(wd, samples, tol=tol, cross_check=cross_check)
    if verdict.is_cfc:
        verdict.global_case = global_match(wd, verdict, probe)
    pts = [np.asarray(p, dtype=float) for p in samples]
    if max(abs(norm(wd.space, p, wd.W(p)) - 1.0) for p in pts) <= tol and wd.dim >= 2:
        verdict.kropina_case = kropina_classify(wd, samples, tol=tol)
    return verdict
