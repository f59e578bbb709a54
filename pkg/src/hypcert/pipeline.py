"""End-to-end certification pipeline.

Stages run in a fixed order and every mathematical failure is recorded as
a failed check rather than raised, so one bad stage never hides the rest.
Only infrastructure problems (I/O, bad config) abort.
"""

from __future__ import annotations

import numpy as np

from .cocycle import (
    KIND_INVERSE_NORM,
    KIND_STABLE_NORM,
    KIND_UNSTABLE_INVERSE_NORM,
    CocycleSequence,
    adapted_metric,
    log_conorm_sequence,
    nue_certificate,
    nuh_certificate,
    pliss_density,
    transport_directions,
)
from .config import RunConfig
from .conjugacy import (
    VERDICT_VIOLATED as EIG_VIOLATED,
    VERDICT_PASS as EIG_PASS,
    build_conjugacy,
    eigenvalue_bound_check,
    holder_estimate,
)
from .errors import AdaptedMetricError, CertifierError
from .maps import make_model, min_conorm_scan
from .orbits import find_periodic_points, period_map_splitting
from .report import (
    CHECK_FAIL,
    CHECK_PASS,
    CHECK_SKIP,
    CertificationReport,
    CheckRecord,
    build_report,
)
from .shadowing import shadowing_constants

# Grid minimum of the Jacobian conorm below this counts as a vanishing
# derivative.  Tangencies of the built-in circle family scale like
# (2 pi dx)^2 around the degenerate point, so the default 4096-point grid
# resolves genuine minima four orders of magnitude above this floor.
LOCAL_DIFFEO_TOL = 1e-6

# Relative slack applied to the certified rate before the Pliss spot
# checks: the certificate takes a geometric mean per orbit while the
# density bound compares a mean of logs, and the two round differently
# in the last ulp for the rate-defining orbit.
RATE_SLACK = 1e-9


def _orbit_sequences(model, orbit) -> list[CocycleSequence]:
    """Per-period log-norm sequences for one orbit, by cocycle kind."""
    seg = model.iterate(orbit.base_point, orbit.period)
    if model.dim == 1:
        return [log_conorm_sequence(model, seg, KIND_INVERSE_NORM)]
    vs, vu = period_map_splitting(orbit.period_map)
    return [
        log_conorm_sequence(model, seg, KIND_STABLE_NORM,
                            directions=transport_directions(model, seg, vs)),
        log_conorm_sequence(model, seg, KIND_UNSTABLE_INVERSE_NORM,
                            directions=transport_directions(model, seg, vu)),
    ]


def run_pipeline(config: RunConfig) -> CertificationReport:
    """Execute every check the config asks for and derive the verdict."""
    model = config.model()
    records: list[CheckRecord] = []

    def run(name, fn) -> CheckRecord:
        try:
            rec = fn()
        except CertifierError as exc:
            rec = CheckRecord(name, CHECK_FAIL, {}, note=str(exc))
        records.append(rec)
        return rec

    # ---- model validation: the derivative must be invertible everywhere

    def local_diffeo() -> CheckRecord:
        scan = min_conorm_scan(model, config.conorm_grid)
        passed = scan.value > LOCAL_DIFFEO_TOL
        return CheckRecord(
            "local_diffeo",
            CHECK_PASS if passed else CHECK_FAIL,
            {
                "min_conorm": scan.value,
                "argmin": [float(v) for v in scan.argmin],
                "grid": scan.grid,
                "tolerance": LOCAL_DIFFEO_TOL,
            },
            note="" if passed else "Jacobian conorm vanishes to grid resolution",
        )

    run("local_diffeo", local_diffeo)

    # ---- periodic orbit inventory

    orbits: list = []

    def periodic_orbits() -> CheckRecord:
        nonlocal orbits
        orbits = find_periodic_points(model, config.max_period)
        counts: dict[str, int] = {}
        for ob in orbits:
            counts[str(ob.period)] = counts.get(str(ob.period), 0) + 1
        if not orbits:
            return CheckRecord("periodic_orbits", CHECK_FAIL,
                               {"max_period": config.max_period},
                               note="no periodic orbits found")
        return CheckRecord("periodic_orbits", CHECK_PASS, {
            "orbit_count": len(orbits),
            "point_count": sum(ob.period for ob in orbits),
            "max_period": config.max_period,
            "orbits_by_period": counts,
        })

    run("periodic_orbits", periodic_orbits)

    # ---- non-uniform expansion / hyperbolicity over the orbit family

    cert = None

    if config.is_circle:
        def nue() -> CheckRecord:
            nonlocal cert
            if not orbits:
                return CheckRecord("nue_certificate", CHECK_SKIP, {},
                                   note="needs periodic orbits")
            cert = nue_certificate(list(orbits))
            worst = max(cert.margins, key=lambda m: m.margin)
            return CheckRecord(
                "nue_certificate",
                CHECK_PASS if cert.passed else CHECK_FAIL,
                {
                    "varsigma": cert.varsigma,
                    "eta": cert.eta,
                    "max_period": cert.max_period,
                    "orbit_count": len(cert.margins),
                    "worst_orbit_period": worst.period,
                },
                note="" if cert.passed else
                f"{len(cert.violations)} orbit(s) fail to expand over a period",
            )

        run("nue_certificate", nue)
    else:
        def nuh() -> CheckRecord:
            nonlocal cert
            if not orbits:
                return CheckRecord("nuh_certificate", CHECK_SKIP, {},
                                   note="needs periodic orbits")
            cert = nuh_certificate(list(orbits))
            if cert.reason is not None:
                return CheckRecord("nuh_certificate", CHECK_FAIL, {},
                                   note=cert.reason)
            return CheckRecord(
                "nuh_certificate",
                CHECK_PASS if cert.passed else CHECK_FAIL,
                {
                    "varsigma": cert.varsigma,
                    "eta": cert.eta,
                    "max_period": cert.max_period,
                    "orbit_count": len(cert.stable_margins),
                },
                note="" if cert.passed else
                f"{len(cert.violations)} margin(s) at or above 1",
            )

        run("nuh_certificate", nuh)

    # ---- Pliss density spot checks on tiled orbit cocycles

    def pliss_spot_checks() -> CheckRecord:
        if cert is None or not cert.passed:
            return CheckRecord("pliss_density", CHECK_SKIP, {},
                               note="needs a certified rate below 1")
        rate = cert.varsigma * (1.0 + RATE_SLACK)
        if not rate < 1.0:
            return CheckRecord("pliss_density", CHECK_SKIP,
                               {"varsigma": cert.varsigma},
                               note="certified rate too close to 1 for a density bound")
        weaker = rate ** config.pliss_prime_exponent
        chosen = orbits[:config.pliss_max_orbits]
        sequences = 0
        total_guaranteed = 0
        total_actual = 0
        min_slack = None
        failures = 0
        for ob in chosen:
            for seq in _orbit_sequences(model, ob):
                tiled = CocycleSequence(
                    np.tile(seq.values, config.pliss_repeats), seq.kind,
                    source=f"orbit period {ob.period} x{config.pliss_repeats}",
                )
                guaranteed, actual = pliss_density(tiled, rate, weaker)
                sequences += 1
                total_guaranteed += guaranteed
                total_actual += actual
                slack = actual - guaranteed
                min_slack = slack if min_slack is None else min(min_slack, slack)
                if actual < guaranteed:
                    failures += 1
        passed = failures == 0
        return CheckRecord(
            "pliss_density",
            CHECK_PASS if passed else CHECK_FAIL,
            {
                "orbits_checked": len(chosen),
                "sequences_checked": sequences,
                "repeats": config.pliss_repeats,
                "rate": rate,
                "weaker_rate": weaker,
                "total_guaranteed": total_guaranteed,
                "total_actual": total_actual,
                "min_actual_minus_guaranteed": min_slack,
            },
            note="" if passed else f"{failures} sequence(s) below the guaranteed count",
        )

    run("pliss_density", pliss_spot_checks)

    # ---- empirical shadowing constants

    def shadowing() -> CheckRecord:
        table = shadowing_constants(model, config.shadow_trials,
                                    config.shadow_alphas, seed=config.seed,
                                    max_period=config.shadow_max_period)
        clean = int(np.sum(table.failures)) == 0
        finite = bool(np.all(np.isfinite(table.eps_max)))
        passed = clean and finite
        return CheckRecord(
            "shadowing",
            CHECK_PASS if passed else CHECK_FAIL,
            {
                "trials": table.trials,
                "alphas": [float(a) for a in table.alphas],
                "eps_max": [float(e) for e in table.eps_max],
                "ratios": [float(r) for r in table.ratios],
                "failures": [int(f) for f in table.failures],
                "max_ratio": float(np.max(table.ratios)),
            },
            note="" if passed else "some closing trials failed to shadow",
        )

    run("shadowing", shadowing)

    # ---- optional conjugacy stage (circle only)

    if config.is_circle and config.conjugacy_enabled:
        conj = None

        def conjugacy() -> CheckRecord:
            nonlocal conj
            conj = build_conjugacy(model, make_model("doubling"),
                                   config.conjugacy_resolution)
            return CheckRecord("conjugacy", CHECK_PASS, {
                "resolution": conj.resolution,
                "digits": conj.digits,
                "measured_defect": conj.measured_defect,
                "defect_bound": conj.defect_bound,
            })

        run("conjugacy", conjugacy)

        def holder() -> CheckRecord:
            if conj is None:
                return CheckRecord("holder_estimate", CHECK_SKIP, {},
                                   note="needs a conjugacy table")
            est = holder_estimate(conj, config.holder_pairs, seed=config.seed)
            return CheckRecord("holder_estimate", CHECK_PASS, {
                "holder_constant": est.holder_constant,
                "holder_exponent": est.holder_exponent,
                "residual": est.residual,
                "pairs": est.pairs,
            })

        run("holder_estimate", holder)

        def eigenvalue_bounds() -> CheckRecord:
            if not orbits:
                return CheckRecord("eigenvalue_bounds", CHECK_SKIP, {},
                                   note="needs periodic orbits")
            chosen = [ob for ob in orbits
                      if ob.period <= config.conjugacy_max_orbit_period]
            if not chosen:
                return CheckRecord("eigenvalue_bounds", CHECK_SKIP, {},
                                   note="no orbits within the configured period cap")
            passes = 0
            inapplicable = 0
            violated = 0
            worst_margin = 0.0
            for ob in chosen:
                back_rate = 1.0 / abs(float(ob.period_map[0, 0]))
                lam = min(0.95, 1.1 * back_rate)
                result = eigenvalue_bound_check(ob, lam, 1.0,
                                                pairs=config.eigenvalue_pairs,
                                                seed=config.seed)
                worst_margin = max(worst_margin, result.hypothesis_margin)
                if result.verdict == EIG_PASS:
                    passes += 1
                elif result.verdict == EIG_VIOLATED:
                    violated += 1
                else:
                    inapplicable += 1
            passed = violated == 0
            return CheckRecord(
                "eigenvalue_bounds",
                CHECK_PASS if passed else CHECK_FAIL,
                {
                    "orbits_checked": len(chosen),
                    "pass_count": passes,
                    "inapplicable_count": inapplicable,
                    "violated_count": violated,
                    "worst_hypothesis_margin": worst_margin,
                },
                note="" if passed else
                "an eigenvalue bound is violated where its hypothesis holds",
            )

        run("eigenvalue_bounds", eigenvalue_bounds)

    # ---- splitting pipeline (torus only)

    if not config.is_circle:
        from .splitting import (domination_check, hyperbolic_set_certificate,
                                periodic_splitting_field,
                                splitting_continuity_modulus)

        field = None

        def domination() -> CheckRecord:
            nonlocal field
            if not orbits:
                return CheckRecord("splitting_domination", CHECK_SKIP, {},
                                   note="needs periodic orbits")
            field = periodic_splitting_field(list(orbits))
            dom = domination_check(model, field, config.split_iterate)
            return CheckRecord(
                "splitting_domination",
                CHECK_PASS if dom.passed else CHECK_FAIL,
                {
                    "lam": dom.lam,
                    "iterate": dom.iterate,
                    "samples": field.size,
                },
                note="" if dom.passed else "stable stretch does not stay below unstable",
            )

        run("splitting_domination", domination)

        def continuity() -> CheckRecord:
            if field is None:
                return CheckRecord("splitting_continuity", CHECK_SKIP, {},
                                   note="needs a periodic splitting field")
            table = splitting_continuity_modulus(field, config.split_bins)
            radius = table.radius_for()
            passed = radius > 0.0
            return CheckRecord(
                "splitting_continuity",
                CHECK_PASS if passed else CHECK_FAIL,
                {
                    "radius": radius,
                    "max_angle": float(np.max(table.angles)),
                    "bins": config.split_bins,
                },
                note="" if passed else "no distance scale keeps subspace angles small",
            )

        run("splitting_continuity", continuity)

        def hyperbolic_set() -> CheckRecord:
            if field is None:
                return CheckRecord("hyperbolic_set", CHECK_SKIP, {},
                                   note="needs a periodic splitting field")
            hc = hyperbolic_set_certificate(model, field, config.split_horizon)
            return CheckRecord(
                "hyperbolic_set",
                CHECK_PASS if hc.passed else CHECK_FAIL,
                {
                    "c": hc.c,
                    "lam": hc.lam,
                    "n_checked": hc.n_checked,
                    "samples": field.size,
                },
                note="" if hc.passed else "no uniform rate below 1 fits the data",
            )

        run("hyperbolic_set", hyperbolic_set)

    # ---- adapted metric: direct confirmation of uniform expansion

    if config.is_circle:
        def metric() -> CheckRecord:
            if cert is None or not cert.passed:
                return CheckRecord("adapted_metric", CHECK_SKIP, {},
                                   note="needs a passing expansion certificate")
            try:
                am = adapted_metric(model, cert, horizon=config.metric_horizon,
                                    grid=config.metric_grid)
            except AdaptedMetricError as exc:
                constants = {"horizon": config.metric_horizon,
                             "grid": config.metric_grid}
                if exc.sigma is not None:
                    constants["sigma"] = exc.sigma
                return CheckRecord("adapted_metric", CHECK_FAIL, constants,
                                   note=str(exc))
            return CheckRecord("adapted_metric", CHECK_PASS, {
                "sigma": am.sigma,
                "horizon": am.horizon,
                "grid": am.grid,
                "varsigma": am.varsigma,
                "argmin": am.argmin,
            })

        run("adapted_metric", metric)

    return build_report(config.to_dict(), records)
