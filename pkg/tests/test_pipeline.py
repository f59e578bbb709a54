"""Full pipeline runs on the built-in families, against frozen verdicts.

The numeric anchors here were computed with standalone scripts (direct
eigenvalue algebra for the toral map, scalar minimization for the circle
families) before the pipeline existed, then frozen.
"""

import json

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypcert.config import runconfig_from_dict
from hypcert.pipeline import run_pipeline
from hypcert.report import (
    CHECK_FAIL,
    CHECK_PASS,
    VERDICT_EXPANDING,
    VERDICT_HYPERBOLIC,
    VERDICT_INCONCLUSIVE,
    VERDICT_VIOLATED,
    CheckRecord,
    derive_verdict,
    report_json_text,
    report_schema,
)

# Adapted-metric expansion factor for g at s = 1.5, horizon 8, grid 4096;
# independent scalar minimization gives sigma = 1.5691108526123054.
PD15_SIGMA = 1.5691108526123054
# Toral splitting rates: lam_s = (3 - sqrt 5)/2 = 0.38196601125010515,
# domination factor lam_s/lam_u = 0.1458980337503155.
CAT_RATE = 0.38196601125010515
CAT_DOMINATION = 0.1458980337503155


def make_config(family, s=None, **extra):
    model = {"family": family}
    if s is not None:
        model["s"] = s
    raw = {"model": model, "seed": 1}
    raw.update(extra)
    return runconfig_from_dict(raw)


@pytest.fixture(scope="module")
def doubling_report():
    return run_pipeline(make_config(
        "doubling", max_period=6, conjugacy={"resolution": 1024}))


@pytest.fixture(scope="module")
def cat_report():
    return run_pipeline(make_config("cat_map", max_period=5))


@pytest.fixture(scope="module")
def critical_report():
    return run_pipeline(make_config(
        "perturbed_doubling", 2.0, max_period=10,
        conjugacy={"resolution": 1024, "max_orbit_period": 1},
        shadowing={"trials": 10, "alphas": [1e-2]}))


def test_doubling_is_certified_expanding(doubling_report):
    rep = doubling_report
    assert rep.verdict == VERDICT_EXPANDING
    assert rep.check("nue_certificate").constants["varsigma"] == 0.5
    assert rep.check("adapted_metric").constants["sigma"] == 2.0
    assert rep.check("local_diffeo").constants["min_conorm"] == 2.0
    assert [c.status for c in rep.checks] == [CHECK_PASS] * len(rep.checks)


def test_doubling_stage_order(doubling_report):
    names = [c.name for c in doubling_report.checks]
    assert names == ["local_diffeo", "periodic_orbits", "nue_certificate",
                     "pliss_density", "shadowing", "conjugacy",
                     "holder_estimate", "eigenvalue_bounds", "adapted_metric"]


def test_mild_perturbation_expands_despite_weak_flat_metric():
    rep = run_pipeline(make_config(
        "perturbed_doubling", 1.5, max_period=5,
        conjugacy={"resolution": 1024},
        shadowing={"trials": 20}))
    assert rep.verdict == VERDICT_EXPANDING
    # flat metric sees contraction (min g' = 0.5 < 1) ...
    assert rep.check("local_diffeo").constants["min_conorm"] == pytest.approx(
        0.5, abs=1e-12)
    # ... but the adapted metric certifies uniform expansion
    assert rep.check("adapted_metric").constants["sigma"] == pytest.approx(
        PD15_SIGMA, rel=1e-12)


def test_critical_perturbation_flags_hypothesis_violation(critical_report):
    rep = critical_report
    assert rep.verdict == VERDICT_VIOLATED
    diffeo = rep.check("local_diffeo")
    assert diffeo.status == CHECK_FAIL
    assert diffeo.constants["min_conorm"] == 0.0
    nue = rep.check("nue_certificate")
    assert nue.status == CHECK_PASS
    assert nue.constants["max_period"] == 10
    assert set(rep.basis) == {"nue_certificate", "local_diffeo"}


def test_critical_perturbation_metric_failure_is_recorded(critical_report):
    # the scan hits the vanishing derivative and fails without aborting
    metric = critical_report.check("adapted_metric")
    assert metric is not None
    assert metric.status == CHECK_FAIL
    assert metric.note != ""


def test_cat_map_is_certified_hyperbolic(cat_report):
    rep = cat_report
    assert rep.verdict == VERDICT_HYPERBOLIC
    assert rep.check("nuh_certificate").constants["varsigma"] == pytest.approx(
        CAT_RATE, rel=1e-12)
    dom = rep.check("splitting_domination")
    assert dom.status == CHECK_PASS
    assert dom.constants["lam"] == pytest.approx(CAT_DOMINATION, rel=1e-12)
    hyp = rep.check("hyperbolic_set")
    assert hyp.status == CHECK_PASS
    assert hyp.constants["lam"] == pytest.approx(CAT_RATE, rel=1e-10)
    assert hyp.constants["c"] == pytest.approx(1.0, rel=1e-12)


def test_cat_stage_order(cat_report):
    names = [c.name for c in cat_report.checks]
    assert names == ["local_diffeo", "periodic_orbits", "nuh_certificate",
                     "pliss_density", "shadowing", "splitting_domination",
                     "splitting_continuity", "hyperbolic_set"]
    assert cat_report.check("conjugacy") is None


def test_reports_rederive_their_verdicts(doubling_report, cat_report,
                                         critical_report):
    for rep in (doubling_report, cat_report, critical_report):
        assert derive_verdict(rep.checks) == (rep.verdict, rep.basis)


def test_reports_validate_against_shipped_schema(doubling_report, cat_report,
                                                 critical_report):
    schema = report_schema()
    for rep in (doubling_report, cat_report, critical_report):
        jsonschema.validate(json.loads(report_json_text(rep)), schema)


def test_identical_runs_serialize_byte_identically():
    config = make_config("cat_map", max_period=3, shadowing={"trials": 5})
    a = report_json_text(run_pipeline(config))
    b = report_json_text(run_pipeline(config))
    assert a == b


def test_config_echo_in_report_reloads(doubling_report):
    echo = json.loads(report_json_text(doubling_report))["config"]
    assert runconfig_from_dict(echo).family == "doubling"


STAGE_NAMES = ["local_diffeo", "periodic_orbits", "nue_certificate",
               "nuh_certificate", "pliss_density", "shadowing",
               "splitting_domination", "splitting_continuity",
               "hyperbolic_set", "adapted_metric"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(STAGE_NAMES), unique=True, min_size=0,
                max_size=len(STAGE_NAMES)).flatmap(
    lambda names: st.tuples(st.just(names), st.lists(
        st.sampled_from(["pass", "fail", "skip"]),
        min_size=len(names), max_size=len(names)))))
def test_verdict_is_pure_and_never_cites_absent_checks(names_statuses):
    names, statuses = names_statuses
    checks = tuple(CheckRecord(name=n, status=s)
                   for n, s in zip(names, statuses))
    verdict, basis = derive_verdict(checks)
    assert derive_verdict(checks) == (verdict, basis)
    assert verdict in (VERDICT_EXPANDING, VERDICT_HYPERBOLIC,
                       VERDICT_VIOLATED, VERDICT_INCONCLUSIVE)
    present = {c.name for c in checks}
    for cited in basis:
        assert cited in present
    if verdict == VERDICT_INCONCLUSIVE:
        assert basis == ()
