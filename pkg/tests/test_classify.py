import json
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import flat_wind
from windfield.classify import CfcVerdict, classify_all, classify_cfc, global_match, kropina_classify
from windfield.models import example_ex1, get_spec, list_models, make_model, sample_points
from windfield.reachability import GridSpec, precompactness_probe
from windfield.wrs import WindData


def samples_for(spec, n=16, seed=3):
    wd = spec.build()
    return wd, sample_points(wd, spec.box, n, np.random.default_rng(seed))


def scaled_metric(wd: WindData, c: float) -> WindData:
    """Same wind, metric ``c^2 g_R``."""
    s = wd.space
    space = replace(
        s,
        metric_at=lambda p: c * c * s.g(p),
        metric_d1=lambda p: c * c * s.dg(p),
        metric_d2=lambda p: c * c * s.ddg(p),
    )
    return WindData(space, wd.wind, wd.meta)


@pytest.mark.parametrize("spec", list_models(), ids=lambda s: s.key)
def test_catalog_verdicts(spec):
    wd, pts = samples_for(spec)
    v = classify_all(wd, pts, cross_check=False)
    exp = spec.expected
    assert v.is_cfc == exp["is_cfc"]
    assert v.wind_type == exp["wind_type"]
    assert v.global_case == exp["global_case"]
    assert v.kropina_case == exp["kropina_case"]
    if "k0" in exp:
        assert v.k0 == pytest.approx(exp["k0"], abs=1e-5)
        assert v.mu == pytest.approx(exp["mu"], abs=1e-6)
        assert v.kappa == pytest.approx(exp["kappa"], abs=1e-5)
    if v.is_cfc:
        assert v.kappa == pytest.approx(v.k0 - v.mu**2 / 4, abs=1e-8)


def test_spec_examples():
    v = classify_cfc(*samples_for(get_spec("euclidean_parallel")), cross_check=False)
    assert v.is_cfc and v.k0 == pytest.approx(0, abs=1e-8) and v.mu == 0 and v.kappa == pytest.approx(0, abs=1e-8)
    v = classify_cfc(*samples_for(get_spec("odd_sphere_hopf")), cross_check=False)
    assert v.is_cfc and v.k0 == pytest.approx(1, abs=1e-5) and v.mu == 0 and v.kappa == pytest.approx(1, abs=1e-5)
    shear = flat_wind(lambda p: [p[1], 0.0])
    v = classify_cfc(shear, np.random.default_rng(0).uniform(-1, 1, (10, 2)), cross_check=False)
    assert not v.is_cfc and v.wind_type == "Neither"


def test_global_cases_are_exclusive():
    for spec in list_models():
        wd, pts = samples_for(spec)
        v = classify_cfc(wd, pts, cross_check=False)
        if not v.is_cfc:
            continue
        case = global_match(wd, v)
        assert case in ("ModelKilling", "FlatProperHomothetic", "NotGlobalModel")
        if case == "FlatProperHomothetic":
            assert abs(v.k0) < 1e-8 and v.wind_type == "ProperlyHomothetic"
        if case == "ModelKilling":
            assert v.wind_type == "Killing"


def test_global_match_requires_cfc():
    wd, pts = samples_for(get_spec("euclidean_shear"))
    v = classify_cfc(wd, pts, cross_check=False)
    with pytest.raises(ValueError):
        global_match(wd, v)


def test_failed_probe_forces_not_global():
    wd, pts = samples_for(get_spec("sphere_killing"))
    v = classify_cfc(wd, pts, cross_check=False)

    class Probe:
        bounded_inside = False

    assert global_match(wd, v) == "ModelKilling"
    assert global_match(wd, v, Probe()) == "NotGlobalModel"


def test_example_ex1_is_not_global_model():
    wd = example_ex1()
    pts = np.linspace(0.05, 0.45, 10)[:, None]
    v = classify_all(wd, pts, cross_check=False)
    assert v.is_cfc and v.global_case == "NotGlobalModel"
    assert any("dimension one" in w for w in v.warnings)
    probe = precompactness_probe(wd, [1.0], 3.0, GridSpec.auto(wd, ((1e-3,), (4.0,)), 2000))
    assert probe.bounded_inside and probe.margin > 0


@pytest.mark.parametrize("key", ["sphere_killing", "hyperbolic", "flat_homothetic"])
@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scale_covariance(key, c):
    wd, pts = samples_for(get_spec(key))
    base = classify_cfc(wd, pts, cross_check=False)
    scaled = classify_cfc(scaled_metric(wd, c), pts, cross_check=False)
    assert scaled.wind_type == base.wind_type
    assert scaled.k0 == pytest.approx(base.k0 / c**2, abs=1e-5)
    assert scaled.mu == pytest.approx(base.mu, abs=1e-8)


def test_kropina_examples():
    wd, pts = samples_for(get_spec("euclidean_parallel_unit"))
    assert kropina_classify(wd, pts) == "FlatParallel"
    wd, pts = samples_for(get_spec("odd_sphere_hopf_r2"))
    assert kropina_classify(wd, pts) == "OddSphereHopf"
    assert classify_cfc(wd, pts, cross_check=False).k0 == pytest.approx(0.25, abs=1e-5)
    wd, pts = samples_for(get_spec("hyperbolic_unit_field"))
    assert kropina_classify(wd, pts) == "Obstructed(negative curvature)"


def test_kropina_rejects_non_unit_wind():
    wd, pts = samples_for(get_spec("euclidean_parallel"))
    with pytest.raises(ValueError, match="not a Kropina"):
        kropina_classify(wd, pts)


def test_sample_preconditions():
    wd = make_model("euclidean_parallel")
    with pytest.raises(ValueError, match="at least"):
        classify_cfc(wd, np.zeros((4, 2)))
    line = np.column_stack([np.linspace(0, 1, 10), np.zeros(10)])
    with pytest.raises(ValueError, match="degenerate"):
        classify_cfc(wd, line)


def test_cross_check_agrees_on_cfc_models():
    for key in ("euclidean_parallel", "sphere_killing", "hyperbolic", "flat_homothetic", "odd_sphere_hopf"):
        wd, pts = samples_for(get_spec(key))
        v = classify_cfc(wd, pts, cross_check=True)
        found = v.residuals["deviation_kappa"]
        assert found, key
        for k in found:
            assert abs(k - v.kappa) / max(1.0, abs(v.kappa)) < 0.02, key
        assert not [w for w in v.warnings if "disagrees" in w]


def test_verdict_serializes():
    wd, pts = samples_for(get_spec("flat_homothetic"))
    v = classify_all(wd, pts, cross_check=False)
    d = json.loads(json.dumps(v.to_dict()))
    assert set(d) >= {"is_cfc", "k0", "mu", "kappa", "wind_type", "global_case", "kropina_case", "residuals", "warnings"}
    assert isinstance(v, CfcVerdict) and not math.isnan(d["kappa"])
