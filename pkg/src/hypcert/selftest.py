"""Release-gate criteria, runnable as a selftest.

Each criterion is a standalone function checking one acceptance property
at desk scale.  ``tighten`` divides every numeric tolerance, so a 10x
tightened run demonstrates the suite can actually fail; exact-equality
checks are unaffected by it.
"""

from __future__ import annotations

import math
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cocycle import (
    KIND_INVERSE_NORM,
    CocycleSequence,
    hyperbolic_times,
    lyapunov_spectrum,
    nue_certificate,
    pliss_density,
)
from .config import runconfig_from_dict
from .conjugacy import (
    VERDICT_INAPPLICABLE as EIG_INAPPLICABLE,
    VERDICT_VIOLATED as EIG_VIOLATED,
    build_conjugacy,
    eigenvalue_bound_check,
)
from .errors import ConfigError
from .maps import flat_distance, make_model
from .orbits import count_fixed_points, find_periodic_points, period_map_splitting
from .pipeline import run_pipeline
from .report import VERDICT_EXPANDING, VERDICT_VIOLATED, emit_report
from .shadowing import shadowing_constants
from .splitting import (
    cone_field_iterate,
    domination_check,
    initial_cone_field,
    periodic_splitting_field,
    principal_angle,
)

CAT_FIXED_COUNTS = (1, 5, 16, 45, 121, 320, 841, 2205)
CAT_EXPANSION_LOG = math.log((3.0 + math.sqrt(5.0)) / 2.0)
CAT_DOMINATION = (3.0 - math.sqrt(5.0)) / (3.0 + math.sqrt(5.0))


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    label: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SelftestSummary:
    results: tuple[CriterionResult, ...]
    passed: bool

    @property
    def failed_ids(self) -> tuple[int, ...]:
        return tuple(r.cid for r in self.results if not r.passed)


# ----------------------------------------------------------- criteria


def _criterion_doubling_exact(tighten: float, seed: int) -> CriterionResult:
    dbl = make_model("doubling")
    orbits = find_periodic_points(dbl, 12)
    bad_counts = [n for n in range(1, 13)
                  if count_fixed_points(orbits, n) != 2 ** n - 1]
    mult_err = max(abs(abs(float(ob.period_map[0, 0])) - 2.0 ** ob.period)
                   for ob in orbits)
    cert = nue_certificate(orbits)
    tol = 1e-12 / tighten
    passed = (not bad_counts) and mult_err <= tol and cert.varsigma == 0.5
    detail = (f"counts 2^n-1 for n<=12: {'ok' if not bad_counts else bad_counts}, "
              f"worst multiplier error {mult_err:.3g} (tol {tol:.3g}), "
              f"varsigma {cert.varsigma!r}")
    return CriterionResult(1, "doubling-map exactness", passed, detail)


def _criterion_cat_counts(tighten: float, seed: int) -> CriterionResult:
    cat = make_model("cat_map")
    orbits = find_periodic_points(cat, 8)
    counts = tuple(count_fixed_points(orbits, n) for n in range(1, 9))
    passed = counts == CAT_FIXED_COUNTS
    return CriterionResult(2, "cat-map orbit counting", passed,
                           f"fixed-point counts n<=8: {list(counts)}")


def _criterion_lyapunov(tighten: float, seed: int) -> CriterionResult:
    rng = np.random.default_rng([seed, 3])
    cat = make_model("cat_map")
    spec = lyapunov_spectrum(cat, rng.random(2), 100000)
    cat_err = max(abs(float(spec[0]) - CAT_EXPANSION_LOG),
                  abs(float(spec[1]) + CAT_EXPANSION_LOG))
    dbl = make_model("doubling")
    dspec = lyapunov_spectrum(dbl, rng.random(1), 1000)
    dbl_err = abs(float(dspec[0]) - math.log(2.0))
    cat_tol = 1e-4 / tighten
    dbl_tol = 1e-12 / tighten
    passed = cat_err <= cat_tol and dbl_err <= dbl_tol
    detail = (f"cat exponent error {cat_err:.3g} (tol {cat_tol:.3g}), "
              f"doubling error {dbl_err:.3g} (tol {dbl_tol:.3g})")
    return CriterionResult(3, "Lyapunov spectrum", passed, detail)


def _brute_hyperbolic_times(values: np.ndarray, log_level: float) -> list[int]:
    """Quadratic restatement of the backward partial-sum definition."""
    out = []
    for k in range(1, values.size + 1):
        sums = np.cumsum(values[k - 1::-1])
        if np.all(sums <= np.arange(1, k + 1) * log_level):
            out.append(k)
    return out


def _criterion_pliss(tighten: float, seed: int) -> CriterionResult:
    rate, weaker = 0.7, 0.85
    log_rate, log_weaker = math.log(rate), math.log(weaker)
    total = 1000
    mismatches = 0
    shortfalls = 0
    for k in range(total):
        rng = np.random.default_rng([seed, 4, k])
        n = 20 + int(rng.integers(0, 101))
        values = rng.normal(-0.45, 0.55, n)
        mean = float(np.mean(values))
        if mean > log_rate - 1e-6:
            values = values + (log_rate - 1e-6 - mean)
        seq = CocycleSequence(values, KIND_INVERSE_NORM)
        guaranteed, _ = pliss_density(seq, rate, weaker)
        got = list(hyperbolic_times(seq, weaker))
        brute = _brute_hyperbolic_times(values, log_weaker)
        if got != brute:
            mismatches += 1
        if len(brute) < guaranteed:
            shortfalls += 1
    passed = mismatches == 0 and shortfalls == 0
    detail = (f"{total} sequences: {mismatches} oracle mismatches, "
              f"{shortfalls} below the guaranteed count")
    return CriterionResult(4, "Pliss density suite", passed, detail)


def _criterion_shadowing(tighten: float, seed: int) -> CriterionResult:
    alphas = np.array([1e-2, 1e-3, 1e-4])
    dbl_table = shadowing_constants(make_model("doubling"), 100, alphas,
                                    seed=seed * 16 + 5)
    dbl_clean = int(np.sum(dbl_table.failures)) == 0
    dbl_bound = 2.0 / tighten
    dbl_ok = dbl_clean and bool(np.all(dbl_table.eps_max <= dbl_bound * alphas))
    cat_table = shadowing_constants(make_model("cat_map"), 100, alphas,
                                    seed=seed * 16 + 5)
    cat_clean = int(np.sum(cat_table.failures)) == 0
    fitted = float(np.mean(cat_table.ratios))
    spread = float(np.max(np.abs(cat_table.ratios / fitted - 1.0)))
    spread_tol = 0.2 / tighten
    cat_ok = cat_clean and spread <= spread_tol
    passed = dbl_ok and cat_ok
    detail = (f"doubling worst eps/alpha {float(np.max(dbl_table.ratios)):.4g} "
              f"(bound {dbl_bound:.3g}), cat fitted C {fitted:.4g} "
              f"spread {spread:.2e} (tol {spread_tol:.3g})")
    return CriterionResult(5, "shadowing bound", passed, detail)


def _criterion_domination(tighten: float, seed: int) -> CriterionResult:
    cat = make_model("cat_map")
    orbits = find_periodic_points(cat, 3)
    field = periodic_splitting_field(orbits)
    dom = domination_check(cat, field, 1)
    lam_err = abs(dom.lam - CAT_DOMINATION)
    lam_tol = 1e-10 / tighten

    vs_dir, vu_dir = period_map_splitting(orbits[0].period_map)
    vs_col, vu_col = vs_dir.reshape(2, 1), vu_dir.reshape(2, 1)
    samples = field.points
    fields = {
        width: cone_field_iterate(cat, samples,
                                  initial_cone_field(cat, samples, width), 50)
        for width in (0.3, 0.7)
    }
    angle = max(
        max(principal_angle(f.unstable[i], vu_col),
            principal_angle(f.stable[i], vs_col))
        for f in fields.values() for i in range(f.size)
    )
    angle_tol = 1e-8 / tighten
    narrow, wide = fields[0.3], fields[0.7]
    agreement = max(
        max(principal_angle(narrow.unstable[i], wide.unstable[i]),
            principal_angle(narrow.stable[i], wide.stable[i]))
        for i in range(narrow.size)
    )
    agree_tol = 1e-6 / tighten
    passed = (dom.passed and lam_err <= lam_tol and angle <= angle_tol
              and agreement <= agree_tol)
    detail = (f"domination lam error {lam_err:.2e} (tol {lam_tol:.3g}), "
              f"cone angle after 50 steps {angle:.2e} (tol {angle_tol:.3g}), "
              f"width agreement {agreement:.2e} (tol {agree_tol:.3g})")
    return CriterionResult(6, "domination constants", passed, detail)


def _criterion_conjugacy(tighten: float, seed: int) -> CriterionResult:
    source = make_model("perturbed_doubling", 0.5)
    target = make_model("doubling")
    h = build_conjugacy(source, target, 2 ** 14)
    defect_tol = 1e-8 / tighten
    monotone = bool(np.all(np.diff(h.values) > 0.0))
    worst_map = 0.0
    for orbit in find_periodic_points(source, 8):
        denom = 2 ** orbit.period - 1
        targets = np.arange(denom) / denom
        for point in orbit.points:
            image = h.evaluate(float(point[0]))
            worst_map = max(worst_map, float(np.min(
                [flat_distance(image, t) for t in targets])))
    map_tol = 1e-6 / tighten
    passed = (h.measured_defect < defect_tol and monotone
              and worst_map <= map_tol)
    detail = (f"defect {h.measured_defect:.3g} (tol {defect_tol:.3g}), "
              f"monotone {monotone}, worst periodic-point image error "
              f"{worst_map:.3g} (tol {map_tol:.3g})")
    return CriterionResult(7, "conjugacy construction", passed, detail)


def _criterion_eigenvalue_suite(tighten: float, seed: int) -> CriterionResult:
    models = [make_model("doubling"), make_model("perturbed_doubling", 0.5),
              make_model("perturbed_doubling", 1.5), make_model("cat_map"),
              make_model("perturbed_cat", 0.3)]
    violated = 0
    concluded = 0
    checked = 0
    for model in models:
        for orbit in find_periodic_points(model, 3):
            if model.dim == 1:
                back_rate = 1.0 / abs(float(orbit.period_map[0, 0]))
            else:
                back_rate = 1.0 / float(np.max(np.abs(orbit.eigenvalues)))
            lam = min(0.95, 1.1 * back_rate)
            result = eigenvalue_bound_check(orbit, lam, 1.0, pairs=40, seed=seed)
            checked += 1
            if result.verdict == EIG_VIOLATED:
                violated += 1
            elif result.verdict != EIG_INAPPLICABLE:
                concluded += 1
    fp = find_periodic_points(make_model("perturbed_doubling", 0.5), 1)[0]
    falsification = eigenvalue_bound_check(fp, 0.35, 1.0, seed=seed)
    passed = (violated == 0 and concluded >= 1
              and falsification.verdict == EIG_INAPPLICABLE)
    detail = (f"{checked} orbits: {violated} violated, {concluded} concluded; "
              f"falsification verdict {falsification.verdict!r}")
    return CriterionResult(8, "eigenvalue bound suite", passed, detail)


def _desk_config(family: str, s: float | None, seed: int, **overrides) -> dict:
    model: dict = {"family": family}
    if s is not None:
        model["s"] = s
    raw = {"model": model, "seed": seed}
    raw.update(overrides)
    return raw


def _criterion_end_to_end(tighten: float, seed: int) -> CriterionResult:
    mild = runconfig_from_dict(_desk_config(
        "perturbed_doubling", 1.5, seed,
        max_period=5,
        conjugacy={"resolution": 1024, "max_orbit_period": 2},
        shadowing={"trials": 20, "alphas": [1e-2, 1e-3]},
        adapted_metric={"grid": 2048},
    ))
    mild_report = run_pipeline(mild)
    metric = mild_report.check("adapted_metric")
    sigma = metric.constants.get("sigma", 0.0) if metric else 0.0
    conorm = mild_report.check("local_diffeo").constants["min_conorm"]
    mild_ok = (mild_report.verdict == VERDICT_EXPANDING and sigma > 1.0
               and abs(conorm - 0.5) < 1e-12)

    critical = runconfig_from_dict(_desk_config(
        "perturbed_doubling", 2.0, seed,
        max_period=10,
        conjugacy={"resolution": 1024, "max_orbit_period": 1},
        shadowing={"trials": 10, "alphas": [1e-2]},
    ))
    critical_report = run_pipeline(critical)
    nue = critical_report.check("nue_certificate")
    critical_ok = (critical_report.verdict == VERDICT_VIOLATED
                   and nue is not None and nue.status == "pass"
                   and nue.constants["max_period"] == 10
                   and critical_report.check("local_diffeo").status == "fail")
    passed = mild_ok and critical_ok
    detail = (f"s=1.5: verdict {mild_report.verdict!r}, sigma {sigma:.4g}, "
              f"min conorm {conorm!r}; s=2.0: verdict {critical_report.verdict!r}, "
              f"NUE status {nue.status if nue else 'missing'!r} up to period 10")
    return CriterionResult(9, "end-to-end theorem logic", passed, detail)


def _criterion_determinism(tighten: float, seed: int) -> CriterionResult:
    raw = _desk_config(
        "doubling", None, seed,
        max_period=4,
        conjugacy={"resolution": 256, "holder_pairs": 100, "max_orbit_period": 1},
        shadowing={"trials": 10, "alphas": [1e-2, 1e-3]},
        adapted_metric={"grid": 512},
    )
    config = runconfig_from_dict(raw)
    blobs = []
    for _ in range(2):
        report = run_pipeline(config)
        with tempfile.TemporaryDirectory() as tmp:
            jpath = emit_report(report, "json", tmp, "run")
            cpath = emit_report(report, "csv-summary", tmp, "run")
            blobs.append((jpath.read_bytes(), cpath.read_bytes()))
    same_json = blobs[0][0] == blobs[1][0]
    same_csv = blobs[0][1] == blobs[1][1]
    passed = same_json and same_csv
    detail = (f"json identical: {same_json} ({len(blobs[0][0])} bytes), "
              f"csv identical: {same_csv} ({len(blobs[0][1])} bytes)")
    return CriterionResult(10, "report determinism", passed, detail)


CRITERIA = {
    1: _criterion_doubling_exact,
    2: _criterion_cat_counts,
    3: _criterion_lyapunov,
    4: _criterion_pliss,
    5: _criterion_shadowing,
    6: _criterion_domination,
    7: _criterion_conjugacy,
    8: _criterion_eigenvalue_suite,
    9: _criterion_end_to_end,
    10: _criterion_determinism,
}


def run_criterion(cid: int, tighten: float = 1.0, seed: int = 0) -> CriterionResult:
    if cid not in CRITERIA:
        raise ConfigError(f"unknown criterion id {cid}; valid ids are 1..{len(CRITERIA)}")
    if not tighten >= 1.0:
        raise ConfigError(f"tighten factor must be >= 1, got {tighten}")
    return CRITERIA[cid](tighten, seed)


def run_selftest(only=None, tighten: float = 1.0, seed: int = 0,
                 stream=None) -> SelftestSummary:
    """Run the release criteria and print one line per criterion."""
    stream = stream if stream is not None else sys.stdout
    ids = sorted(CRITERIA) if only is None else list(only)
    results = []
    for cid in ids:
        result = run_criterion(cid, tighten=tighten, seed=seed)
        results.append(result)
        mark = "PASS" if result.passed else "FAIL"
        print(f"criterion {result.cid:2d} [{mark}] {result.label}: {result.detail}",
              file=stream)
    summary = SelftestSummary(tuple(results), all(r.passed for r in results))
    print(f"selftest: {sum(r.passed for r in results)}/{len(results)} criteria passed",
          file=stream)
    return summary
