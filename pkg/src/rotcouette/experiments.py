"""Experiment drivers: per-mode linear checks, nonlinear consistency, ledger runs."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import spectral_core as sc
from .fitting import fit_exp_rate, fit_power_law
from .linear import (
    LinearState,
    beta_for_alpha,
    dispersive_decay_experiment,
    evolve_linear,
    evolve_nonzero_mode,
    evolve_simple_zero,
    gaussian_simple_zero_data,
    reconstruct_velocity,
    velocity_to_unknowns,
    w_prefactor,
)
from .multipliers import m_values
from .nonlinear import (
    SimState,
    SimulationConfig,
    random_initial_data,
    run,
    sobolev_norm,
    step,
)
from .spectral_core import Grid, ModeClass, ModeIndex, SpectralField


def _random_mode(rng, eta_max, l_max) -> ModeIndex:
    k = int(rng.choice([-2, -1, 1, 2]))
    return ModeIndex(k, float(rng.uniform(-eta_max, eta_max)), int(rng.integers(-l_max, l_max + 1)))


# --- enhanced dissipation ---------------------------------------------------

@dataclass
class EnhancedDissipationReport:
    n_modes: int
    worst_increase: float  # largest relative step-to-step increase of m^2 E
    worst_envelope: float  # largest m^2 E(t) / (exp(-nu k^2 t^3 / 12) E(0))

    def passed(self, tol: float = 1e-6) -> bool:
        return self.worst_increase <= 1e-12 and self.worst_envelope <= 1.0 + tol


def enhanced_dissipation_check(n_modes=100, nu=1e-3, alpha=math.sqrt(2.0), seed=0, n_out=100,
                               eta_max=30.0, l_max=8) -> EnhancedDissipationReport:
    rng = np.random.default_rng(seed)
    t_end = 2.0 * nu ** (-1.0 / 3.0)
    times = np.linspace(0.0, t_end, n_out + 1)
    worst_inc = -np.inf
    worst_env = 0.0
    for _ in range(n_modes):
        mode = _random_mode(rng, eta_max, l_max)
        q, w = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        e0 = abs(q) ** 2 + abs(w) ** 2
        prev = e0
        for t0, t1 in zip(times[:-1], times[1:]):
            q, w = evolve_nonzero_mode(mode, q, w, alpha, nu, t0, t1)
            m, _ = m_values(t1, mode.k, mode.eta, mode.l, nu)
            e = float(m) ** 2 * (abs(q) ** 2 + abs(w) ** 2)
            worst_inc = max(worst_inc, (e - prev) / e0)
            worst_env = max(worst_env, e / (math.exp(-nu * mode.k**2 * t1**3 / 12.0) * e0))
            prev = e
    return EnhancedDissipationReport(n_modes, float(worst_inc), float(worst_env))


# --- inviscid damping -------------------------------------------------------

def _divergence_free_mode(rng, mode: ModeIndex) -> np.ndarray:
    kap = np.array([mode.k, mode.eta, mode.l], float)
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return u - kap * (kap @ u) / (kap @ kap)


def inviscid_damping_ratio(mode: ModeIndex, u0: np.ndarray, beta: float, nu: float, times) -> float:
    """max_t <t> |U^2(t)| / (<k, eta, l>^2 |U(0)|) along one mode's linear evolution."""
    kap0 = np.array([mode.k, mode.eta, mode.l], float)
    k20 = float(kap0 @ kap0)
    q = -k20 * u0[1]
    w = w_prefactor(beta) * math.sqrt(k20) * 1j * (mode.l * u0[0] - mode.k * u0[2])
    alpha = math.sqrt(beta * (beta - 1.0))
    if beta < 0:
        raise ValueError("inviscid damping driver expects beta > 1")
    weight = (1.0 + k20) * float(np.linalg.norm(u0))
    best = abs(u0[1])
    t_prev = 0.0
    for t in times[1:]:
        q, w = evolve_nonzero_mode(mode, q, w, alpha, nu, t_prev, t)
        t_prev = t
        k2 = mode.k**2 + (mode.eta - mode.k * t) ** 2 + mode.l**2
        best = max(best, math.sqrt(1 + t * t) * abs(q) / k2)
    return best / weight


def inviscid_damping_check(n_modes=100, nu=1e-3, beta=2.0, seed=1, n_out=200, eta_max=30.0, l_max=8):
    """Largest damping ratio over random modes plus the l = 0 Orr family."""
    rng = np.random.default_rng(seed)
    t_end = 2.0 * nu ** (-1.0 / 3.0)
    times = np.linspace(0.0, t_end, n_out + 1)
    worst = 0.0
    for _ in range(n_modes):
        mode = _random_mode(rng, eta_max, l_max)
        worst = max(worst, inviscid_damping_ratio(mode, _divergence_free_mode(rng, mode), beta, nu, times))
    # critical time k t = eta inside the window: the transient amplification of U^2 is largest
    for k in (1, 2):
        for tc in np.linspace(1.0, t_end, 10):
            mode = ModeIndex(k, k * float(tc), 0)
            u0 = np.array([-mode.eta / k, 1.0, 0.0], complex)
            worst = max(worst, inviscid_damping_ratio(mode, u0, beta, nu, times))
    return worst


# --- dispersive decay -------------------------------------------------------

@dataclass
class DispersiveReport:
    slopes: tuple[float, float, float]
    slopes_doubled: tuple[float, float, float]
    w2_slope: float

    def max_deviation(self, target=-1.0 / 3.0) -> float:
        return max(abs(s - target) for s in self.slopes)

    def max_shift(self) -> float:
        return max(abs(a - b) for a, b in zip(self.slopes, self.slopes_doubled))


def dispersive_slopes(alpha=2.0, nu=1e-4, ly=2000.0, ny=8192, nz=32, width=0.5,
                      window=(10.0, 1000.0), n_times=25):
    grid = Grid(4, ny, nz, ly=ly)
    data = gaussian_simple_zero_data(grid, width, beta=beta_for_alpha(alpha))
    times = np.geomspace(window[0], window[1], n_times)
    series = dispersive_decay_experiment(data, alpha, nu, times)
    slopes = tuple(
        fit_power_law(np.column_stack([times, series.compensated(j)]), window).exponent for j in range(3)
    )
    w2 = fit_power_law(np.column_stack([times, series.compensated()]), window).exponent
    return slopes, w2


def dispersive_check(alpha=2.0, nu=1e-4, ly=2000.0, ny=8192) -> DispersiveReport:
    slopes, w2 = dispersive_slopes(alpha, nu, ly, ny)
    doubled, _ = dispersive_slopes(alpha, nu, 2 * ly, 2 * ny)
    return DispersiveReport(slopes, doubled, w2)


# --- exponential instability ------------------------------------------------

@dataclass
class InstabilityReport:
    fitted_rate: float
    lower_bound: float
    max_rate: float
    n_modes: int


def instability_growth(beta=0.5, nu=1e-3, grid: Grid | None = None, seed=2,
                       window=(20.0, 80.0), n_times=31) -> InstabilityReport:
    """Fit the growth of ||u_simple-zero|| for random data supported on S'."""
    grid = grid or Grid(4, 64, 16, ly=32 * math.pi)
    threshold = 0.5 * (math.sqrt(beta * (1.0 - beta)) - nu)
    eta = grid.eta[:, None]
    l = grid.l[None, :]
    r2 = eta**2 + l**2
    rates = np.where(l != 0, math.sqrt(beta * (1 - beta)) * np.abs(l) / np.sqrt(np.where(r2 == 0, 1, r2)) - nu * r2,
                     -np.inf)
    support = rates > threshold
    # respect the lattice cutoff so the field stays conjugate symmetric
    support &= grid.dealias_mask[0]
    rng = np.random.default_rng(seed)
    shape = grid.shape
    q = np.zeros(shape, complex)
    om = np.zeros(shape, complex)
    q[0] = np.where(support, rng.standard_normal(support.shape) + 1j * rng.standard_normal(support.shape), 0)
    om[0] = np.where(support, rng.standard_normal(support.shape) + 1j * rng.standard_normal(support.shape), 0)
    q, om = sc.symmetrize(q), sc.symmetrize(om)
    zero = (np.zeros(grid.ny, complex), np.zeros(grid.ny, complex))
    state = LinearState(SpectralField(grid, q[None]), None, SpectralField(grid, om[None]), zero, beta, nu, 0.0)
    times = np.linspace(window[0], window[1], n_times)
    norms = [reconstruct_velocity(replace(evolve_simple_zero(state, float(t)), time=float(t))).l2_norm()
             for t in times]
    fit = fit_exp_rate(np.column_stack([times, norms]), window)
    return InstabilityReport(fit.exponent, threshold, float(rates[support].max()), int(support.sum()))


# --- nonlinear vs linear ----------------------------------------------------

@dataclass
class ConsistencyReport:
    deviations: dict[float, float]
    ratio: float
    max_div_residual: float


def linear_consistency(beta=2.0, nu=1e-2, grid: Grid | None = None, epsilons=(1e-6, 1e-5),
                       dt=0.01, t_end=10.0, seed=7, sample_every=1.0) -> ConsistencyReport:
    """Max relative deviation of the nonlinear trajectory from the linear engine, per amplitude."""
    grid = grid or Grid(32, 64, 32, ly=32 * math.pi)
    devs = {}
    worst_div = 0.0
    n = int(round(t_end / dt))
    every = max(1, int(round(sample_every / dt)))
    for eps in epsilons:
        u0 = random_initial_data(grid, eps, seed)
        state = SimState(u0, beta, nu)
        lin = velocity_to_unknowns(u0, beta, nu=nu)
        dev = 0.0
        for i in range(1, n + 1):
            state, _ = step(state, dt)
            worst_div = max(worst_div, sc.divergence_residual(state.u))
            if i % every == 0 or i == n:
                lin = evolve_linear(lin, state.time, dt_max=dt / 5)
                ref = reconstruct_velocity(lin)
                dev = max(dev, (state.u - ref).l2_norm() / ref.l2_norm())
        devs[eps] = dev
    lo, hi = sorted(epsilons)[:2]
    return ConsistencyReport(devs, devs[hi] / devs[lo], worst_div)


# --- ledger sanity ----------------------------------------------------------

@dataclass
class LedgerReport:
    status: str
    max_bootstrap_over_eps2: float
    heat_identity_error: float


def heat_identity_error(config: SimulationConfig, seed=3) -> float:
    """Relative drift of ||U0bar||^2_{H^N} + 2 nu int ||d_y U0bar||^2_{H^N} for double-zero data."""
    grid = config.grid()
    rng = np.random.default_rng(seed)
    c = np.zeros((3,) + grid.shape, complex)
    eta = grid.eta
    for j in (0, 2):
        prof = (rng.standard_normal(grid.ny) + 1j * rng.standard_normal(grid.ny)) * np.exp(-eta**2)
        prof = np.where(grid.dealias_mask[0, :, 0], prof, 0)
        prof[0] = 0.0
        c[j][0, :, 0] = prof
    c = sc.symmetrize(c)
    state = SimState(SpectralField(grid, c), config.beta, config.nu, config.delta)
    result = run(replace(config, output_dir=None), initial=state)
    err = 0.0
    for j in ("1", "3"):
        total = result.ledger.column("E00_" + j) + 2 * result.ledger.column("D00_" + j)
        err = max(err, float(np.max(np.abs(total - total[0])) / total[0]))
    return err


def ledger_sanity(config: SimulationConfig | None = None, heat_config: SimulationConfig | None = None) -> LedgerReport:
    config = config or SimulationConfig(beta=2.0, nu=1e-2, dt=0.05, t_end=10.0, ledger_interval=0.5, epsilon=1e-6)
    heat_config = heat_config or replace(config, dt=0.02, t_end=5.0, ledger_interval=0.02)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run(replace(config, output_dir=None))
        heat = heat_identity_error(heat_config)
    return LedgerReport(res.status.value, res.ledger.max_bootstrap() / res.epsilon**2, heat)


# --- full linear evolution --------------------------------------------------

LINEAR_COLUMNS = (
    "t", "u0bar_l2", "simple_zero_l2", "nonzero_u1_l2", "nonzero_u2_l2", "nonzero_u3_l2",
    "t_weighted_u2", "envelope",
)


def linear_norm_series(config: SimulationConfig):
    """Rows of norms tracking the three linear statements (lift-up/instability/stable decay)."""
    grid = config.grid()
    u0 = random_initial_data(grid, config.epsilon, config.seed, config.sobolev_n)
    state = velocity_to_unknowns(u0, config.beta, nu=config.nu)
    nz_mask = grid.class_mask(ModeClass.NONZERO)
    h2 = sobolev_norm(np.where(nz_mask, u0.coeffs, 0), grid, 2)
    n_out = int(round(config.t_end / config.ledger_interval))
    rows = []
    for i in range(n_out + 1):
        t = min(i * config.ledger_interval, config.t_end)
        if t > state.time:
            state = evolve_linear(state, t)
        u = reconstruct_velocity(state).coeffs
        sz = grid.class_mask(ModeClass.SIMPLE_ZERO)
        d_eta = grid.d_eta

        def norm(arr):
            return math.sqrt(float(np.sum(np.abs(arr) ** 2)) * d_eta)

        u2 = norm(np.where(nz_mask, u[1], 0))
        rows.append((
            t,
            norm(np.array([state.ubar0[0], state.ubar0[1]])),
            norm(np.where(sz, u, 0)),
            norm(np.where(nz_mask, u[0], 0)),
            u2,
            norm(np.where(nz_mask, u[2], 0)),
            math.sqrt(1 + t * t) * u2,
            math.exp(-config.nu * t**3 / 24.0) * h2,
        ))
    return rows


def write_rows(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else repr(float(v)) for v in r])


# --- CLI dispersive series --------------------------------------------------

def dispersive_series_rows(beta: float, nu: float, t_max: float, ly=2000.0, ny=8192, nz=32, n_times=40,
                           fit_from=10.0):
    b = beta * (beta - 1.0)
    if b <= 0:
        raise ValueError("dispersive decay needs B_beta > 0")
    alpha = math.sqrt(b)
    grid = Grid(4, ny, nz, ly=ly)
    data = gaussian_simple_zero_data(grid, 0.5, beta=beta_for_alpha(alpha))
    times = np.geomspace(1.0, t_max, n_times)
    series = dispersive_decay_experiment(data, alpha, nu, times)
    comp = np.max(series.sup, axis=0) * np.exp(nu * times)
    rows = []
    for i, t in enumerate(times):
        slope = None
        sel = times[: i + 1] >= fit_from
        if sel.sum() >= 8:
            slope = fit_power_law(np.column_stack([times[: i + 1], comp[: i + 1]]), (fit_from, t)).exponent
        rows.append((t, series.sup[0, i], series.sup[1, i], series.sup[2, i], slope))
    return rows

