"""Run configuration for the certification pipeline.

The schema is strict on purpose: unknown keys are errors, every default is
made explicit in the echo, and the echo round-trips through load_config.
A report therefore pins down the run that produced it.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .maps import MapModel, make_model

FAMILIES = ("doubling", "perturbed_doubling", "cat_map", "perturbed_cat")
CIRCLE_FAMILIES = ("doubling", "perturbed_doubling")
PARAMETRIC_FAMILIES = ("perturbed_doubling", "perturbed_cat")

MAX_SEED = 2 ** 64 - 1


def _fail(field: str, message: str) -> None:
    raise ConfigError(f"{field}: {message}")


def _as_mapping(value, field: str) -> dict:
    if not isinstance(value, dict):
        _fail(field, f"expected an object, got {type(value).__name__}")
    return value


def _as_int(value, field: str, minimum: int | None = None,
            maximum: int | None = None) -> int:
    # bool is an int subclass; a config saying "trials": true is a mistake
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(field, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        _fail(field, f"must be <= {maximum}, got {value}")
    return value


def _as_float(value, field: str, minimum: float | None = None,
              exclusive_min: float | None = None,
              exclusive_max: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(field, f"expected a number, got {value!r}")
    out = float(value)
    if minimum is not None and out < minimum:
        _fail(field, f"must be >= {minimum}, got {out}")
    if exclusive_min is not None and not out > exclusive_min:
        _fail(field, f"must be > {exclusive_min}, got {out}")
    if exclusive_max is not None and not out < exclusive_max:
        _fail(field, f"must be < {exclusive_max}, got {out}")
    return out


def _as_bool(value, field: str) -> bool:
    if not isinstance(value, bool):
        _fail(field, f"expected true or false, got {value!r}")
    return value


def _as_str(value, field: str) -> str:
    if not isinstance(value, str) or not value:
        _fail(field, f"expected a non-empty string, got {value!r}")
    return value


def _reject_unknown(mapping: dict, allowed: tuple[str, ...], path: str) -> None:
    extra = sorted(set(mapping) - set(allowed))
    if extra:
        shown = ", ".join(f"{path}.{k}" if path else k for k in extra)
        raise ConfigError(f"unknown config key(s): {shown}")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class RunConfig:
    """Validated pipeline inputs with every default resolved."""

    family: str
    s: float | None
    seed: int
    max_period: int
    conorm_grid: int
    pliss_prime_exponent: float
    pliss_repeats: int
    pliss_max_orbits: int
    metric_horizon: int
    metric_grid: int
    shadow_trials: int
    shadow_alphas: tuple[float, ...]
    shadow_max_period: int
    conjugacy_enabled: bool
    conjugacy_resolution: int
    holder_pairs: int
    eigenvalue_pairs: int
    conjugacy_max_orbit_period: int
    split_iterate: int
    split_bins: int
    split_horizon: int
    report_dir: str
    basename: str

    @property
    def is_circle(self) -> bool:
        return self.family in CIRCLE_FAMILIES

    def model(self) -> MapModel:
        return make_model(self.family, self.s)

    def to_dict(self) -> dict:
        """Echo in input-schema shape; feeding it back reproduces the config."""
        model: dict = {"family": self.family}
        if self.s is not None:
            model["s"] = self.s
        return {
            "model": model,
            "seed": self.seed,
            "max_period": self.max_period,
            "conorm_grid": self.conorm_grid,
            "pliss": {
                "prime_exponent": self.pliss_prime_exponent,
                "repeats": self.pliss_repeats,
                "max_orbits": self.pliss_max_orbits,
            },
            "adapted_metric": {
                "horizon": self.metric_horizon,
                "grid": self.metric_grid,
            },
            "shadowing": {
                "trials": self.shadow_trials,
                "alphas": list(self.shadow_alphas),
                "max_period": self.shadow_max_period,
            },
            "conjugacy": {
                "enabled": self.conjugacy_enabled,
                "resolution": self.conjugacy_resolution,
                "holder_pairs": self.holder_pairs,
                "eigenvalue_pairs": self.eigenvalue_pairs,
                "max_orbit_period": self.conjugacy_max_orbit_period,
            },
            "splitting": {
                "iterate": self.split_iterate,
                "bins": self.split_bins,
                "horizon": self.split_horizon,
            },
            "output": {
                "report_dir": self.report_dir,
                "basename": self.basename,
            },
        }


_TOP_KEYS = ("model", "seed", "max_period", "conorm_grid", "pliss",
             "adapted_metric", "shadowing", "conjugacy", "splitting", "output")


def _parse_model(raw: dict) -> tuple[str, float | None]:
    if "model" not in raw:
        raise ConfigError("model: required section is missing")
    section = _as_mapping(raw["model"], "model")
    _reject_unknown(section, ("family", "s"), "model")
    if "family" not in section:
        raise ConfigError("model.family: required key is missing")
    family = _as_str(section["family"], "model.family")
    if family not in FAMILIES:
        _fail("model.family", f"unknown family {family!r}; "
              f"choose one of {', '.join(FAMILIES)}")
    if family in PARAMETRIC_FAMILIES:
        if "s" not in section:
            _fail("model.s", f"family {family!r} requires the parameter s")
        return family, _as_float(section["s"], "model.s", minimum=0.0)
    if "s" in section:
        _fail("model.s", f"family {family!r} takes no parameter")
    return family, None


def runconfig_from_dict(raw) -> RunConfig:
    """Validate a parsed config mapping and apply defaults."""
    raw = _as_mapping(raw, "config")
    _reject_unknown(raw, _TOP_KEYS, "")
    family, s = _parse_model(raw)
    is_circle = family in CIRCLE_FAMILIES

    if "seed" not in raw:
        raise ConfigError("seed: required key is missing (runs must be reproducible)")
    seed = _as_int(raw["seed"], "seed", minimum=0, maximum=MAX_SEED)
    max_period = _as_int(raw.get("max_period", 6), "max_period", minimum=1)
    conorm_grid = _as_int(raw.get("conorm_grid", 4096 if is_circle else 96),
                          "conorm_grid", minimum=2)

    pliss = _as_mapping(raw.get("pliss", {}), "pliss")
    _reject_unknown(pliss, ("prime_exponent", "repeats", "max_orbits"), "pliss")
    prime_exponent = _as_float(pliss.get("prime_exponent", 0.5),
                               "pliss.prime_exponent",
                               exclusive_min=0.0, exclusive_max=1.0)
    repeats = _as_int(pliss.get("repeats", 20), "pliss.repeats", minimum=1)
    max_orbits = _as_int(pliss.get("max_orbits", 32), "pliss.max_orbits", minimum=1)

    metric = _as_mapping(raw.get("adapted_metric", {}), "adapted_metric")
    _reject_unknown(metric, ("horizon", "grid"), "adapted_metric")
    horizon = _as_int(metric.get("horizon", 8), "adapted_metric.horizon", minimum=1)
    metric_grid = _as_int(metric.get("grid", 4096), "adapted_metric.grid", minimum=2)

    shadowing = _as_mapping(raw.get("shadowing", {}), "shadowing")
    _reject_unknown(shadowing, ("trials", "alphas", "max_period"), "shadowing")
    trials = _as_int(shadowing.get("trials", 50), "shadowing.trials", minimum=1)
    raw_alphas = shadowing.get("alphas", [1e-2, 1e-3])
    if not isinstance(raw_alphas, list) or not raw_alphas:
        _fail("shadowing.alphas", f"expected a non-empty array, got {raw_alphas!r}")
    alphas = tuple(
        _as_float(a, f"shadowing.alphas[{i}]", exclusive_min=0.0)
        for i, a in enumerate(raw_alphas)
    )
    shadow_max_period = _as_int(shadowing.get("max_period", 6),
                                "shadowing.max_period", minimum=1)

    conjugacy = _as_mapping(raw.get("conjugacy", {}), "conjugacy")
    _reject_unknown(conjugacy, ("enabled", "resolution", "holder_pairs",
                                "eigenvalue_pairs", "max_orbit_period"), "conjugacy")
    enabled = _as_bool(conjugacy.get("enabled", is_circle), "conjugacy.enabled")
    if enabled and not is_circle:
        _fail("conjugacy.enabled", "the conjugacy stage needs a circle family")
    resolution = _as_int(conjugacy.get("resolution", 4096),
                         "conjugacy.resolution", minimum=4)
    if not _is_power_of_two(resolution):
        _fail("conjugacy.resolution", f"must be a power of two, got {resolution}")
    holder_pairs = _as_int(conjugacy.get("holder_pairs", 200),
                           "conjugacy.holder_pairs", minimum=100)
    eigenvalue_pairs = _as_int(conjugacy.get("eigenvalue_pairs", 60),
                               "conjugacy.eigenvalue_pairs", minimum=1, maximum=200)
    max_orbit_period = _as_int(conjugacy.get("max_orbit_period", 2),
                               "conjugacy.max_orbit_period", minimum=1)

    splitting = _as_mapping(raw.get("splitting", {}), "splitting")
    _reject_unknown(splitting, ("iterate", "bins", "horizon"), "splitting")
    split_iterate = _as_int(splitting.get("iterate", 1), "splitting.iterate", minimum=1)
    split_bins = _as_int(splitting.get("bins", 8), "splitting.bins", minimum=1)
    split_horizon = _as_int(splitting.get("horizon", 8), "splitting.horizon", minimum=1)

    output = _as_mapping(raw.get("output", {}), "output")
    _reject_unknown(output, ("report_dir", "basename"), "output")
    report_dir = _as_str(output.get("report_dir", "reports"), "output.report_dir")
    basename = _as_str(output.get("basename", "certification"), "output.basename")
    if os.sep in basename or (os.altsep and os.altsep in basename) or ".." in basename:
        _fail("output.basename", f"must be a bare file stem, got {basename!r}")

    return RunConfig(
        family=family, s=s, seed=seed, max_period=max_period,
        conorm_grid=conorm_grid,
        pliss_prime_exponent=prime_exponent, pliss_repeats=repeats,
        pliss_max_orbits=max_orbits,
        metric_horizon=horizon, metric_grid=metric_grid,
        shadow_trials=trials, shadow_alphas=alphas,
        shadow_max_period=shadow_max_period,
        conjugacy_enabled=enabled, conjugacy_resolution=resolution,
        holder_pairs=holder_pairs, eigenvalue_pairs=eigenvalue_pairs,
        conjugacy_max_orbit_period=max_orbit_period,
        split_iterate=split_iterate, split_bins=split_bins,
        split_horizon=split_horizon,
        report_dir=report_dir, basename=basename,
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"parse error in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return runconfig_from_dict(raw)


def config_schema() -> dict:
    """The shipped JSON schema for run configuration files."""
    text = resources.files("hypcert").joinpath(
        "schemas/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
