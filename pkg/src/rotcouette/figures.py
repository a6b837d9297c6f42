"""CSV data behind the eigenvalue-curve and instability-map plots."""

from __future__ import annotations

import csv
import enum
from pathlib import Path

import numpy as np

from .regime import growth_rate, instability_sets


class FigureKind(enum.Enum):
    EIGEN_CURVE = "EigenCurve"
    INSTABILITY_MAP = "InstabilityMap"


def eigen_curve(beta: float, nu: float, l: int, eta_max: float = 30.0, steps: int = 601):
    eta = np.linspace(0.0, eta_max, steps)
    return eta, np.array([growth_rate(beta, nu, float(e), l) for e in eta])


def emit_figure_data(which: FigureKind | str, params: dict, path: str | Path) -> Path:
    """Write the figure's CSV.

    EigenCurve params: beta, nu, l, eta_max (30), steps (601) -> columns eta, rate.
    InstabilityMap params: beta, nu, eta_max, eta_steps, l_max -> columns eta, l, rate, in_S, in_Sprime.
    """
    which = FigureKind(which)
    path = Path(path)
    if which is FigureKind.EIGEN_CURVE:
        eta, rate = eigen_curve(params["beta"], params["nu"], int(params.get("l", 2)),
                                params.get("eta_max", 30.0), int(params.get("steps", 601)))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eta", "rate"])
            w.writerows([repr(float(e)), repr(float(r))] for e, r in zip(eta, rate))
        return path
    write_instability_map(path, params["beta"], params["nu"], params.get("eta_max", 10.0),
                          int(params.get("eta_steps", 201)), int(params.get("l_max", 10)))
    return path


def write_instability_map(path, beta, nu, eta_max, eta_steps, l_max) -> None:
    eta = np.linspace(-eta_max, eta_max, eta_steps)
    sets = instability_sets(beta, nu, eta, l_max)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "l", "rate", "in_S", "in_Sprime"])
        for mode, rate in sets.rates.items():
            w.writerow([repr(mode.eta), mode.l, repr(rate),
                        int(mode in sets.s_members), int(mode in sets.s_prime_members)])
