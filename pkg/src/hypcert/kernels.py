"""Kernel backend selection.

Prefers the compiled extension, falls back to the pure-Python twin.  Set
HYPCERT_PURE=1 in the environment to force the fallback (used by the
benchmark and the parity tests).
"""

from __future__ import annotations

import os

from hypcert import _kernels_py

if os.environ.get("HYPCERT_PURE"):
    _impl = _kernels_py
else:
    try:
        from hypcert import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME

wrap1 = _impl.wrap1
wrap_signed = _impl.wrap_signed
circle_lift = _impl.circle_lift
circle_eval = _impl.circle_eval
circle_deriv = _impl.circle_deriv
circle_orbit = _impl.circle_orbit
circle_log_deriv_orbit = _impl.circle_log_deriv_orbit
circle_itinerary = _impl.circle_itinerary
circle_branch_preimage = _impl.circle_branch_preimage
circle_word_fixed_point = _impl.circle_word_fixed_point
circle_newton_periodic = _impl.circle_newton_periodic
min_abs_deriv_scan = _impl.min_abs_deriv_scan
hyp_time_indices = _impl.hyp_time_indices
torus_step = _impl.torus_step
torus_jacobian_entries = _impl.torus_jacobian_entries
torus_orbit = _impl.torus_orbit
torus_qr_logs = _impl.torus_qr_logs


def backend() -> str:
    """Name of the active kernel implementation."""
    return BACKEND
