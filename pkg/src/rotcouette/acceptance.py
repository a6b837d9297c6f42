"""Acceptance-suite runner: one measured pass/fail entry per criterion."""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import experiments as ex
from .multipliers import (
    check_m_bounds,
    integrate_symbol_ode,
    m1_values,
    m2_values,
    m_values,
    random_sweep,
)
from .nonlinear import SimulationConfig, threshold_scan
from .regime import RegimeKind, bradshaw_richardson, classify, growth_rate

ALL_CRITERIA = tuple(range(1, 12))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    tolerance: str
    seconds: float
    runtime_limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return (f"[{status}] criterion {self.number:2d} {self.name}: {vals} "
                f"(tolerance: {self.tolerance}; {self.seconds:.1f}s / limit {self.runtime_limit:g}s)")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class SuiteConfig:
    criteria: tuple[int, ...] = ALL_CRITERIA
    seed: int = 0
    baselines_path: str | None = None
    corrupt_m: bool = False  # mutation hook: perturbs the closed form of m
    sweep_samples: int = 10_000
    scan_bisection_steps: int = 5


@dataclass
class AcceptanceReport:
    results: list[CriterionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]

    def result(self, number: int) -> CriterionResult:
        return next(r for r in self.results if r.number == number)


class _Baselines:
    """Values frozen on first run and compared on later runs."""

    def __init__(self, path):
        self.path = Path(path) if path else None
        self.data = {}
        if self.path and self.path.exists():
            self.data = json.loads(self.path.read_text())
        self.dirty = False

    def check(self, key: str, values: dict, rel: float) -> tuple[bool, str]:
        if self.path is None:
            return True, "not frozen"
        if key not in self.data:
            self.data[key] = values
            self.dirty = True
            return True, "frozen"
        old = self.data[key]
        for name, v in values.items():
            ref = old.get(name)
            if (ref is None) != (v is None):
                return False, f"{name} changed from {ref} to {v}"
            if ref is not None and not math.isclose(v, ref, rel_tol=rel, abs_tol=0.0):
                return False, f"{name} drifted from {ref} to {v}"
        return True, "matches"

    def save(self):
        if self.path and self.dirty:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


# --- criteria -----------------------------------------------------------------

def _c1(cfg, base):
    betas = (-2.0, -1.0, 0.0, 0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 10.0)
    expected = {
        -2.0: RegimeKind.STABLE, -1.0: RegimeKind.STABLE, 0.0: RegimeKind.LIFT_UP_CLASSICAL,
        0.1: RegimeKind.EXPONENTIALLY_UNSTABLE, 0.5: RegimeKind.EXPONENTIALLY_UNSTABLE,
        0.9: RegimeKind.EXPONENTIALLY_UNSTABLE, 1.0: RegimeKind.LIFT_UP_ROTATED,
        1.5: RegimeKind.STABLE, 2.0: RegimeKind.STABLE, 10.0: RegimeKind.STABLE,
    }
    wrong = [b for b in betas if classify(b, 1e-3).kind is not expected[b]]
    b_vals = {b: bradshaw_richardson(b) for b in betas}
    floor_ok = all(v >= -0.25 for v in b_vals.values())
    equality = [b for b, v in b_vals.items() if v == -0.25]
    ok = not wrong and floor_ok and equality == [0.5]
    return ok, {"misclassified": wrong, "min_B": min(b_vals.values()), "equality_at": equality}, \
        "exact trichotomy; B >= -1/4 with equality only at beta=0.5"


def _c2(cfg, base):
    at0 = growth_rate(0.5, 0.001, 0.0, 2)
    eta = np.linspace(0.0, 30.0, 3001)
    rates = np.array([growth_rate(0.5, 0.001, float(e), 2) for e in eta])
    changes = int(np.sum(np.diff(np.sign(rates)) != 0))
    ok = at0 > 0 and abs(at0 - 0.496) <= 1e-12 and changes >= 1 and rates[-1] < 0
    return ok, {"rate_eta0": at0, "sign_changes": changes, "rate_eta30": float(rates[-1])}, \
        "rate(0)=0.496 to 1e-12, sign change in [0,30]"


def _corrupted_m(t, k, eta, l, nu):
    value, rate = m_values(t, k, eta, l, nu)
    return value**2, rate


def _c3(cfg, base):
    samples = random_sweep(cfg.sweep_samples, seed=cfg.seed)
    t = np.array([s.t for s in samples])
    k = np.array([s.mode.k for s in samples], float)
    eta = np.array([s.mode.eta for s in samples])
    l = np.array([s.mode.l for s in samples], float)
    nu = np.array([s.nu for s in samples])
    m_fn = _corrupted_m if cfg.corrupt_m else m_values
    errors = {}
    for which, closed in (
        ("m", lambda: m_fn(t, k, eta, l, nu)[0]),
        ("m1", lambda: m1_values(t, k, eta, l, nu)[0]),
        ("m2", lambda: m2_values(t, k, eta, l)[0]),
    ):
        ode = integrate_symbol_ode(which, t, k, eta, l, nu)
        errors[which] = float(np.max(np.abs(closed() - ode) / np.abs(ode)))
    m1 = m1_values(t, k, eta, l, nu)[0]
    m2 = m2_values(t, k, eta, l)[0]
    lo = math.exp(-math.pi)
    range_ok = bool(np.all((m1 >= lo) & (m1 <= 1)) and np.all((m2 >= lo) & (m2 <= 1)))
    # monotonicity of m along a time grid, one row per sample
    sub = slice(0, 1000)
    grid_t = np.linspace(0.0, 1.0, 400)[:, None] * (2e3 * nu[sub] ** (-1 / 3))[None, :]
    mt = m_fn(grid_t, k[sub], eta[sub], l[sub], nu[sub])[0]
    mono = float(np.max(np.diff(mt, axis=0)))
    ok = max(errors.values()) <= 1e-8 and range_ok and mono <= 1e-15
    return ok, {**{f"rel_err_{w}": e for w, e in errors.items()}, "M_in_range": range_ok,
                "max_m_increase": mono}, "rel err <= 1e-8; M1,M2 in [e^-pi,1]; m non-increasing"


def _c4(cfg, base):
    samples = random_sweep(cfg.sweep_samples, seed=cfg.seed)
    rep = check_m_bounds(samples)
    frozen_ok, note = base.check("criterion_4", {"c_low": rep.c_low, "c_prod": rep.c_prod}, 1e-9)
    ok = (not rep.violation) and frozen_ok
    return ok, {"C_low": rep.c_low, "C_prod": rep.c_prod, "1/C_low": 1.0 / rep.c_low, "baseline": note}, \
        "1/C_low <= 1e4 and C_prod <= 1e4; baseline regression"


def _c5(cfg, base):
    rep = ex.enhanced_dissipation_check(seed=cfg.seed)
    return rep.passed(), {"max_increase": rep.worst_increase, "max_envelope_ratio": rep.worst_envelope}, \
        "m-energy non-increasing; ratio to exp(-nu k^2 t^3/12) <= 1+1e-6"


def _c6(cfg, base):
    ratio = ex.inviscid_damping_check(seed=cfg.seed + 1)
    return ratio <= 8.0, {"max_ratio": ratio}, "<t>|U2(t)| <= 8 <k,eta,l>^2 |U(0)|"


def _c7(cfg, base):
    rep = ex.dispersive_check()
    ok = rep.max_deviation() <= 0.05 and rep.max_shift() < 0.01
    return ok, {"slopes": list(rep.slopes), "slopes_ly_doubled": list(rep.slopes_doubled),
                "max_shift": rep.max_shift(), "w2inf_slope": rep.w2_slope}, \
        "slope -1/3 +- 0.05 per component; ly-doubling shift < 0.01"


def _c8(cfg, base):
    rep = ex.instability_growth(seed=cfg.seed + 2)
    ok = rep.fitted_rate >= rep.lower_bound * 0.98 and rep.fitted_rate <= rep.max_rate * 1.02
    return ok, {"fitted_rate": rep.fitted_rate, "lower_bound": rep.lower_bound, "max_rate": rep.max_rate}, \
        "lower_bound(1-2%) <= rate <= max_rate(1+2%)"


def _c9(cfg, base):
    rep = ex.linear_consistency(seed=cfg.seed + 7)
    ok = abs(rep.ratio - 10.0) <= 3.0 and rep.max_div_residual < 1e-10
    return ok, {"deviations": list(rep.deviations.values()), "ratio": rep.ratio,
                "max_div_residual": rep.max_div_residual}, "ratio 10 +- 3; divergence < 1e-10"


def _c10(cfg, base):
    rep = ex.ledger_sanity()
    ok = rep.status == "Completed" and rep.max_bootstrap_over_eps2 <= 100.0 and rep.heat_identity_error <= 1e-8
    return ok, {"status": rep.status, "max_bootstrap/eps^2": rep.max_bootstrap_over_eps2,
                "heat_identity_error": rep.heat_identity_error}, "bootstrap <= 100 eps^2; heat identity 1e-8"


def scan_config() -> SimulationConfig:
    return SimulationConfig(nx=32, ny=32, nz=32, ly=32 * math.pi, dt=0.02, t_end=10.0, ledger_interval=0.5)


def _c11(cfg, base):
    measured = {}
    ok = True
    crit = {}
    for beta in (2.0, 8.0):
        table = threshold_scan(replace(scan_config(), beta=beta), (1e-2, 3e-3), (1.0, 1000.0),
                               cfg.scan_bisection_steps)
        for row in table.rows:
            ok &= row.bracket_ok
            measured[f"eps_c(beta={beta:g},nu={row.nu:g})"] = row.eps_critical
            crit[(beta, row.nu)] = row.eps_critical
        measured[f"exponent(beta={beta:g})"] = table.exponent
    mono = all(
        crit[(8.0, nu)] is not None and crit[(2.0, nu)] is not None and crit[(8.0, nu)] >= crit[(2.0, nu)]
        for nu in (1e-2, 3e-3)
    )
    measured["eps_c(beta=8)>=eps_c(beta=2)"] = mono
    frozen_ok, note = base.check(
        "criterion_11", {k: v for k, v in measured.items() if not isinstance(v, bool)}, 1e-6
    )
    measured["baseline"] = note
    return ok and frozen_ok, measured, "valid brackets everywhere; baseline regression (monotonicity reported)"


CRITERIA: dict[int, tuple[str, Callable, float]] = {
    1: ("regime classification", _c1, 1.0),
    2: ("eigenvalue curve", _c2, 1.0),
    3: ("multiplier closed forms", _c3, 120.0),
    4: ("multiplier bounds", _c4, 120.0),
    5: ("enhanced dissipation", _c5, 120.0),
    6: ("inviscid damping", _c6, 120.0),
    7: ("dispersive decay", _c7, 600.0),
    8: ("exponential instability", _c8, 60.0),
    9: ("nonlinear-vs-linear consistency", _c9, 900.0),
    10: ("ledger sanity", _c10, 900.0),
    11: ("threshold scan", _c11, 7200.0),
}


def run_criterion(number: int, cfg: SuiteConfig, base: _Baselines) -> CriterionResult:
    name, fn, limit = CRITERIA[number]
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            ok, measured, tol = fn(cfg, base)
        except Exception as exc:  # a crashing criterion is a failed criterion
            ok, measured, tol = False, {"error": f"{type(exc).__name__}: {exc}"}, "runs without error"
    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < limit
    return CriterionResult(number, name, ok, measured, tol, elapsed, limit)


def run_acceptance(suite_config: SuiteConfig | None = None, echo: Callable[[str], None] | None = None) -> AcceptanceReport:
    cfg = suite_config or SuiteConfig()
    base = _Baselines(cfg.baselines_path)
    report = AcceptanceReport()
    for number in cfg.criteria:
        if number not in CRITERIA:
            raise ValueError(f"unknown criterion {number}")
        res = run_criterion(number, cfg, base)
        report.results.append(res)
        if echo:
            echo(res.line())
    base.save()
    return report


def report_json(report: AcceptanceReport) -> str:
    return json.dumps([asdict(r) for r in report.results], indent=2, default=str)
