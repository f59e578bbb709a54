"""Vector plots of circle-map lifts.

One figure: the interval graph of the map drawn branch by branch, the
diagonal, the branch cuts, and every periodic point up to period 6 marked
on the graph.  Output is restricted to vector formats so the plot stays
inspectable at any zoom.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# Fixed hash salt: SVG element ids become content-derived instead of
# uuid-random, keeping repeated emissions byte-identical.
matplotlib.rcParams["svg.hashsalt"] = "hypcert"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import PreconditionError, UnsupportedModelError
from .maps import MapModel
from .orbits import find_periodic_points

PLOT_MAX_PERIOD = 6
VECTOR_SUFFIXES = (".svg", ".pdf")


def _branch_graph(model: MapModel, left: float, right: float,
                  samples: int) -> tuple[list[float], list[float]]:
    xs = [left + (right - left) * i / (samples - 1) for i in range(samples)]
    lifts = [model.lift(x) for x in xs]
    base = math.floor(lifts[0] + 0.5)
    return xs, [v - base for v in lifts]


def emit_lift_plot(model: MapModel, path, samples: int = 400) -> Path:
    """Draw the lift of a circle map to [0, 1] and save a vector file."""
    if model.dim != 1:
        raise UnsupportedModelError("lift plots are defined for circle maps only")
    if not hasattr(model, "lift") or not hasattr(model, "branch_cuts"):
        raise UnsupportedModelError("lift plots need branch cut and lift data")
    path = Path(path)
    if path.suffix.lower() not in VECTOR_SUFFIXES:
        raise PreconditionError(
            f"vector output required: use one of {', '.join(VECTOR_SUFFIXES)}, "
            f"got {path.suffix or '(no suffix)'!r}"
        )
    if samples < 2:
        raise PreconditionError(f"samples must be >= 2, got {samples}")

    cuts = [float(c) for c in model.branch_cuts()]
    edges = cuts + [1.0]

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot([0.0, 1.0], [0.0, 1.0], linestyle="--", color="0.55",
            linewidth=0.9, label="diagonal")
    for cut in cuts:
        ax.axvline(cut, linestyle=":", color="0.7", linewidth=0.9)
    for k in range(len(edges) - 1):
        xs, ys = _branch_graph(model, edges[k], edges[k + 1], samples)
        ax.plot(xs, ys, color="C0", linewidth=1.6,
                label="map" if k == 0 else None)

    orbits = find_periodic_points(model, PLOT_MAX_PERIOD)
    px = [float(p[0]) for ob in orbits for p in ob.points]
    py = [float(model.eval_point(x)[0]) for x in px]
    ax.scatter(px, py, s=16, color="C3", zorder=5,
               label=f"periodic points (period <= {PLOT_MAX_PERIOD})")

    label = model.family
    if getattr(model, "params", None):
        args = ", ".join(f"{k}={v:g}" for k, v in sorted(model.params.items()))
        label = f"{label} ({args})"
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("g(x)")
    ax.set_title(f"lift of {label}")
    ax.legend(loc="lower right", fontsize=8)

    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".svg":
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path, metadata={"CreationDate": None})
    plt.close(fig)
    return path
