"""Certification reports: verdict logic and deterministic serialization.

The verdict is a pure function of the recorded check outcomes, so a report
can always be re-audited: rerun derive_verdict on the checks and compare.
Serialization rounds every float to 12 significant digits and sorts keys,
making repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError

CHECK_PASS = "pass"
CHECK_FAIL = "fail"
CHECK_SKIP = "skip"
CHECK_STATUSES = (CHECK_PASS, CHECK_FAIL, CHECK_SKIP)

VERDICT_EXPANDING = "expanding"
VERDICT_HYPERBOLIC = "hyperbolic set"
VERDICT_VIOLATED = "not expanding (hypothesis violated)"
VERDICT_INCONCLUSIVE = "inconclusive"

REPORT_FORMATS = ("json", "csv-summary")

SIGNIFICANT_DIGITS = 12


@dataclass(frozen=True)
class CheckRecord:
    """One pipeline check: outcome plus the constants it measured."""

    name: str
    status: str
    constants: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if self.status not in CHECK_STATUSES:
            raise ConfigError(f"unknown check status {self.status!r}")


@dataclass(frozen=True)
class CertificationReport:
    version: str
    config: dict
    checks: tuple[CheckRecord, ...]
    verdict: str
    basis: tuple[str, ...]

    def check(self, name: str) -> CheckRecord | None:
        for rec in self.checks:
            if rec.name == name:
                return rec
        return None

    def verdict_line(self) -> str:
        return _verdict_line(self.verdict, self.basis)

    def to_dict(self) -> dict:
        return {
            "tool": {"name": "hypcert", "version": self.version},
            "config": self.config,
            "checks": [
                {"name": c.name, "status": c.status,
                 "constants": dict(c.constants), "note": c.note}
                for c in self.checks
            ],
            "verdict": self.verdict,
            "verdict_basis": list(self.basis),
            "verdict_line": self.verdict_line(),
        }


# --------------------------------------------------------------- verdict


_EXPANDING_NEEDS = ("local_diffeo", "nue_certificate", "shadowing", "adapted_metric")
_HYPERBOLIC_NEEDS = ("nuh_certificate", "shadowing", "hyperbolic_set")


def derive_verdict(checks) -> tuple[str, tuple[str, ...]]:
    """Map recorded outcomes to (verdict, names of the checks it rests on).

    Expansion needs the local-diffeomorphism scan, the periodic NUE rate,
    the shadowing table, and the adapted-metric confirmation all passing.
    A hyperbolic set needs the NUH rate, a dominated or continuous
    splitting, shadowing, and the uniform-constants certificate.  A passing
    NUE rate over a failed local-diffeomorphism scan is the classical
    trap: expansion on the periodic points alone, so the verdict calls the
    hypothesis violated rather than staying silent.
    """
    status = {c.name: c.status for c in checks}

    def ok(name: str) -> bool:
        return status.get(name) == CHECK_PASS

    if all(ok(n) for n in _EXPANDING_NEEDS):
        return VERDICT_EXPANDING, _EXPANDING_NEEDS
    if all(ok(n) for n in _HYPERBOLIC_NEEDS):
        if ok("splitting_domination"):
            return VERDICT_HYPERBOLIC, ("nuh_certificate", "splitting_domination",
                                        "shadowing", "hyperbolic_set")
        if ok("splitting_continuity"):
            return VERDICT_HYPERBOLIC, ("nuh_certificate", "splitting_continuity",
                                        "shadowing", "hyperbolic_set")
    if ok("nue_certificate") and status.get("local_diffeo") == CHECK_FAIL:
        return VERDICT_VIOLATED, ("nue_certificate", "local_diffeo")
    return VERDICT_INCONCLUSIVE, ()


def _verdict_line(verdict: str, basis: tuple[str, ...]) -> str:
    if verdict == VERDICT_EXPANDING:
        return ("expanding: local diffeomorphism, periodic expansion rate, "
                "shadowing, and adapted-metric confirmation all certified")
    if verdict == VERDICT_HYPERBOLIC:
        side = ("dominated splitting" if "splitting_domination" in basis
                else "continuous splitting")
        return (f"hyperbolic set: periodic contraction/expansion rates, {side}, "
                "shadowing, and uniform hyperbolicity constants all certified")
    if verdict == VERDICT_VIOLATED:
        return ("not expanding (hypothesis violated): the periodic-orbit "
                "expansion rate is certified but the map is not a local "
                "diffeomorphism")
    return "inconclusive: one or more required checks failed or did not run"


def build_report(config_echo: dict, checks) -> CertificationReport:
    verdict, basis = derive_verdict(checks)
    return CertificationReport(
        version=__version__,
        config=config_echo,
        checks=tuple(checks),
        verdict=verdict,
        basis=basis,
    )


# --------------------------------------------------------- serialization


def canonical_value(value):
    """Round floats to 12 significant digits; map payloads to JSON types.

    Non-finite floats become the strings "inf" / "-inf" / "nan" because
    strict JSON has no tokens for them and a shadowing bound can honestly
    be infinite.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, dict):
        return {str(k): canonical_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [canonical_value(v) for v in value]
    raise ConfigError(f"cannot serialize report value of type {type(value).__name__}")


def _scalar_text(value) -> str:
    value = canonical_value(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def report_json_text(report: CertificationReport) -> str:
    payload = canonical_value(report.to_dict())
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def report_csv_text(report: CertificationReport) -> str:
    """One row per check plus a closing verdict row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "status", "summary"])
    for rec in report.checks:
        parts = [
            f"{key}={_scalar_text(val)}"
            for key, val in sorted(rec.constants.items())
            if not isinstance(val, (dict, list, tuple, np.ndarray))
        ]
        if rec.note:
            parts.append(f"note={rec.note}")
        writer.writerow([rec.name, rec.status, "; ".join(parts)])
    writer.writerow(["verdict", report.verdict, report.verdict_line()])
    return buf.getvalue()


def emit_report(report: CertificationReport, fmt: str, directory,
                basename: str = "certification") -> Path:
    """Write one serialization of the report; returns the file path."""
    if fmt not in REPORT_FORMATS:
        raise ConfigError(
            f"unknown report format {fmt!r}; choose one of {', '.join(REPORT_FORMATS)}"
        )
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = directory / f"{basename}.json"
        path.write_text(report_json_text(report), encoding="utf-8")
    else:
        path = directory / f"{basename}.csv"
        path.write_text(report_csv_text(report), encoding="utf-8")
    return path


def report_schema() -> dict:
    """The shipped JSON schema for emitted JSON reports."""
    text = resources.files("hypcert").joinpath(
        "schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
