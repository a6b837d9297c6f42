"""Classification of (beta, nu) and the simple-zero eigenvalue structure."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .spectral_core import ModeIndex


class RegimeKind(enum.Enum):
    LIFT_UP_CLASSICAL = "LiftUpClassical"
    LIFT_UP_ROTATED = "LiftUpRotated"
    EXPONENTIALLY_UNSTABLE = "ExponentiallyUnstable"
    STABLE = "Stable"


def bradshaw_richardson(beta: float) -> float:
    return beta * (beta - 1.0) + 0.0  # avoid -0.0 at beta = 0


@dataclass(frozen=True)
class RegimeReport:
    beta: float
    nu: float
    b_beta: float
    kind: RegimeKind
    alpha: float | None = None
    c_beta: float | None = None
    instability_margin: float | None = None

    def as_lines(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "undefined"
            if isinstance(v, RegimeKind):
                return v.value
            return repr(float(v))

        keys = ("beta", "nu", "b_beta", "kind", "alpha", "c_beta", "instability_margin")
        return [f"{key}={fmt(getattr(self, key))}" for key in keys]


def classify(beta: float, nu: float) -> RegimeReport:
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    b = bradshaw_richardson(beta)
    # exact comparisons: the lift-up cases are isolated parameter values
    if beta == 0.0:
        return RegimeReport(beta, nu, b, RegimeKind.LIFT_UP_CLASSICAL)
    if beta == 1.0:
        return RegimeReport(beta, nu, b, RegimeKind.LIFT_UP_ROTATED)
    if 0.0 < beta < 1.0:
        return RegimeReport(
            beta, nu, b, RegimeKind.EXPONENTIALLY_UNSTABLE,
            instability_margin=math.sqrt(-b) - nu,
        )
    alpha = math.sqrt(b)
    c_beta = math.sqrt(((beta - 1.0) ** 2 + beta**2) / b)
    return RegimeReport(beta, nu, b, RegimeKind.STABLE, alpha=alpha, c_beta=c_beta)


def growth_rate(beta: float, nu: float, eta: float, l: int) -> float:
    """Rate of the inflating simple-zero component at frequency (eta, l), 0 < beta < 1."""
    if not 0.0 < beta < 1.0:
        raise ValueError("growth_rate is defined for 0 < beta < 1")
    r2 = eta * eta + l * l
    if r2 == 0.0:
        raise ValueError("growth_rate is singular at (eta, l) = (0, 0)")
    return -nu * r2 + math.sqrt(beta * (1.0 - beta)) * abs(l) / math.sqrt(r2)


def stable_eigenvalues(beta: float, nu: float, eta: float, l: int) -> tuple[complex, complex]:
    b = bradshaw_richardson(beta)
    if not b > 0:
        raise ValueError(f"stable_eigenvalues needs B_beta > 0, got {b}")
    r2 = eta * eta + l * l
    if r2 == 0.0:
        raise ValueError("eigenvalues are singular at (eta, l) = (0, 0)")
    re = -nu * r2
    im = math.sqrt(b) * abs(l) / math.sqrt(r2)
    return complex(re, im), complex(re, -im)


@dataclass
class InstabilitySets:
    beta: float
    nu: float
    threshold: float
    s_members: set[ModeIndex] = field(default_factory=set)
    s_prime_members: set[ModeIndex] = field(default_factory=set)
    rates: dict[ModeIndex, float] = field(default_factory=dict)


def instability_sets(beta: float, nu: float, eta_samples, l_max: int) -> InstabilitySets:
    """Sample S = {rate > 0} and S' = S n {rate > (sqrt(beta(1-beta)) - nu)/2}.

    l runs over -l_max..l_max; the singular point (0, 0) is skipped.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("instability sets are defined for 0 < beta < 1")
    threshold = 0.5 * (math.sqrt(beta * (1.0 - beta)) - nu)
    out = InstabilitySets(beta, nu, threshold)
    for l in range(-l_max, l_max + 1):
        for eta in eta_samples:
            eta = float(eta)
            if eta == 0.0 and l == 0:
                continue
            rate = growth_rate(beta, nu, eta, l)
            mode = ModeIndex(0, eta, l)
            out.rates[mode] = rate
            if rate > 0.0:
                out.s_members.add(mode)
                if rate > threshold:
                    out.s_prime_members.add(mode)
    return out


def rescale_slope(beta: float, nu: float, sigma: float) -> tuple[float, float]:
    """Parameters of unit-slope Couette flow equivalent to slope sigma at (beta, nu)."""
    if sigma == 0:
        raise ValueError("sigma must be nonzero")
    return beta / sigma, nu / sigma
