"""Pseudo-spectral solver for the full perturbation system in the moving frame.

The primitive velocity U(t, k, eta, l) is advanced. With kappa = (k, eta - kt, l)
and P the per-mode projector orthogonal to kappa,

    dU/dt = P[f(U) + N(U)] + k U^2 kappa / |kappa|^2 - nu |kappa|^2 U,

where f = ((beta - 1) U^2, -beta U^1, 0) collects lift-up and Coriolis terms and
N = -div_L(U (x) U) is the dealiased transport term. The extra gradient
``k U^2 kappa / |kappa|^2`` comes from the time dependence of kappa and keeps
kappa(t) . U(t) = 0. Viscosity is integrated exactly per mode and the rest
with a Lawson RK4 scheme.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.fft

from . import spectral_core as sc
from .linear import _viscous_exponent
from .multipliers import DEFAULT_DELTA, a_values, m1_values, m2_values
from .regime import RegimeKind, bradshaw_richardson, classify
from .spectral_core import Frame, Grid, ModeClass, SpectralField

DIV_TOL = 1e-10
BOOTSTRAP_FACTOR = 100.0
BLOWUP_FACTOR = 1e4

LEDGER_COLUMNS = (
    "t", "E00_1", "E00_3", "D00_1", "D00_3", "Es0_Q", "Es0_W", "Ds0_Q", "Ds0_W",
    "EA_Q", "EA_W", "DA_Q", "DA_W", "G_Q", "G_W", "sup_u1", "sup_u2", "sup_u3", "div_residual",
)
# (energy column, integrated columns) per bootstrap estimate
BOOTSTRAP_GROUPS = (
    ("E00_1", ("D00_1",)),
    ("E00_3", ("D00_3",)),
    ("Es0_Q", ("Ds0_Q",)),
    ("Es0_W", ("Ds0_W",)),
    ("EA_Q", ("DA_Q", "G_Q")),
    ("EA_W", ("DA_W", "G_W")),
)


class RunStatus(enum.Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUp"
    TOLERANCE_FAIL = "ToleranceFail"


@dataclass(frozen=True)
class SimState:
    u: SpectralField
    beta: float
    nu: float
    delta: float = DEFAULT_DELTA
    time: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        if self.u.components != 3 or self.u.frame != Frame.MOVING:
            raise ValueError("SimState needs a 3-component moving-frame field")
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    @property
    def grid(self) -> Grid:
        return self.u.grid


# --- configuration ----------------------------------------------------------

@dataclass
class SimulationConfig:
    beta: float = 2.0
    nu: float = 1e-2
    delta: float = DEFAULT_DELTA
    nx: int = 32
    ny: int = 64
    nz: int = 32
    ly: float = 32 * math.pi
    dealias: float = 2.0 / 3.0
    dt: float = 0.02
    t_end: float = 10.0
    ledger_interval: float = 0.1
    init_kind: str = "seeded_random"
    epsilon: float = 1e-6
    seed: int = 0
    init_path: str | None = None
    sobolev_n: int = 4
    output_dir: str | None = None
    snapshot_interval: float | None = None

    _SECTIONS = {
        "physics": {"beta": "beta", "nu": "nu", "delta": "delta"},
        "grid": {"nx": "nx", "ny": "ny", "nz": "nz", "ly": "ly", "dealias": "dealias"},
        "time": {"dt": "dt", "t_end": "t_end", "ledger_interval": "ledger_interval"},
        "init": {"kind": "init_kind", "epsilon": "epsilon", "seed": "seed", "path": "init_path"},
        "sobolev": {"n": "sobolev_n"},
        "output": {"dir": "output_dir", "snapshot_interval": "snapshot_interval"},
    }

    @classmethod
    def from_mapping(cls, data: dict) -> "SimulationConfig":
        kwargs = {}
        for section, keys in data.items():
            if section not in cls._SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            if not isinstance(keys, dict):
                raise ValueError(f"[{section}] must be a table")
            for key, value in keys.items():
                if key not in cls._SECTIONS[section]:
                    raise ValueError(f"unknown key {section}.{key}")
                kwargs[cls._SECTIONS[section][key]] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path: str | Path) -> "SimulationConfig":
        import tomli

        with open(path, "rb") as fh:
            return cls.from_mapping(tomli.load(fh))

    def grid(self) -> Grid:
        return Grid(int(self.nx), int(self.ny), int(self.nz), float(self.ly), float(self.dealias))

    def validate(self) -> None:
        if not 0 < self.nu < 1:
            raise ValueError("physics.nu must lie in (0, 1)")
        if self.delta < 0:
            raise ValueError("physics.delta must be non-negative")
        if self.dt <= 0:
            raise ValueError("time.dt must be positive")
        if self.t_end < 0:
            raise ValueError("time.t_end must be non-negative")
        if self.ledger_interval <= 0:
            raise ValueError("time.ledger_interval must be positive")
        if self.init_kind not in ("seeded_random", "file"):
            raise ValueError("init.kind must be seeded_random or file")
        if self.init_kind == "file" and not self.init_path:
            raise ValueError("init.path is required for init.kind = file")
        if self.epsilon < 0:
            raise ValueError("init.epsilon must be non-negative")
        if self.sobolev_n < 0:
            raise ValueError("sobolev.n must be non-negative")
        grid = self.grid()
        k_max = grid._cutoff(grid.nx)
        horizon = (grid.ny * math.pi / grid.ly) / k_max
        if self.t_end > horizon:
            warnings.warn(
                f"t_end={self.t_end} exceeds the sheared-resolution horizon {horizon:.3g}; "
                "eta - kt leaves the resolved band for the largest k",
                stacklevel=2,
            )


# --- right-hand side --------------------------------------------------------

def _to_physical(c: np.ndarray, grid: Grid) -> np.ndarray:
    half = grid.nz // 2 + 1
    scale = grid.d_eta * grid.nx * grid.ny * grid.nz
    return scipy.fft.irfftn(c[..., :half], s=grid.shape, axes=(-3, -2, -1),
                            workers=sc._FFT_WORKERS) * scale


def _to_spectral(v: np.ndarray, grid: Grid) -> np.ndarray:
    scale = grid.ly / (2 * math.pi) / (grid.nx * grid.ny * grid.nz)
    half = scipy.fft.rfftn(v, axes=(-3, -2, -1), workers=sc._FFT_WORKERS) * scale
    full = np.empty(v.shape[:-3] + grid.shape, complex)
    nh = half.shape[-1]
    full[..., :nh] = half
    # l < 0 columns from c(k, eta, l) = conj c(-k, -eta, -l)
    neg = np.conj(np.roll(np.flip(half, axis=(-3, -2)), 1, axis=(-3, -2)))
    full[..., nh:] = neg[..., grid.nz - np.arange(nh, grid.nz)]
    return full


def _transport(u: np.ndarray, grid: Grid, kv) -> np.ndarray:
    """-div_L(U (x) U) with 2/3 dealiasing, coefficients on the full lattice."""
    mask = grid.dealias_mask
    phys = _to_physical(np.where(mask, u, 0), grid)
    out = np.zeros_like(u)
    pairs = {}
    for i in range(3):
        for j in range(i, 3):
            pairs[i, j] = _to_spectral(phys[i] * phys[j], grid)
    for i in range(3):
        for j in range(3):
            out[i] -= 1j * kv[j] * pairs[min(i, j), max(i, j)]
    return np.where(mask, out, 0)


def _forcing(u: np.ndarray, beta: float, grid: Grid, t: float, linear_only: bool):
    """Returns (P[f + N], extra gradient term) at time t."""
    kv = sc.wavevector(grid, t)
    k2 = grid.kappa2(t)
    origin = k2 == 0
    safe = np.where(origin, 1.0, k2)
    g = np.empty_like(u)
    g[0] = (beta - 1.0) * u[1]
    g[1] = -beta * u[0]
    g[2] = 0.0
    if not linear_only:
        g += _transport(u, grid, kv)
    div = (kv[0] * g[0] + kv[1] * g[1] + kv[2] * g[2]) / safe
    proj = g - np.array([kv[0] * div, kv[1] * div, kv[2] * div])
    proj[1][origin] = 0.0
    lift = kv[0] * u[1] / safe
    extra = np.array([kv[0] * lift, kv[1] * lift, kv[2] * lift])
    return proj, extra


def compute_rhs(state: SimState, linear_only: bool = False) -> SpectralField:
    """Non-viscous tendency dU/dt at the state's time (viscosity is handled by the stepper)."""
    proj, extra = _forcing(state.u.coeffs, state.beta, state.grid, state.time, linear_only)
    res = sc.divergence_residual(SpectralField(state.grid, proj, Frame.MOVING, state.time))
    if res > DIV_TOL:
        raise FloatingPointError(f"projected tendency not divergence-free (residual {res:.3e})")
    return SpectralField(state.grid, proj + extra, Frame.MOVING, state.time)


def _tendency(u, beta, grid, t, linear_only):
    proj, extra = _forcing(u, beta, grid, t, linear_only)
    return proj + extra


def step(state: SimState, dt: float, linear_only: bool = False) -> tuple[SimState, RunStatus]:
    """One Lawson RK4 step with the exact per-mode viscous factor."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.grid
    t = state.time
    k, eta, l = grid.mesh
    e_half = np.exp(-_viscous_exponent(k, eta, l, state.nu, t, dt / 2))
    e_full = np.exp(-_viscous_exponent(k, eta, l, state.nu, t, dt))
    e_late = np.exp(-_viscous_exponent(k, eta, l, state.nu, t + dt / 2, dt / 2))
    u0 = state.u.coeffs
    beta = state.beta
    k1 = _tendency(u0, beta, grid, t, linear_only)
    k2 = _tendency(e_half * (u0 + dt / 2 * k1), beta, grid, t + dt / 2, linear_only)
    k3 = _tendency(e_half * u0 + dt / 2 * k2, beta, grid, t + dt / 2, linear_only)
    k4 = _tendency(e_full * u0 + dt * e_late * k3, beta, grid, t + dt, linear_only)
    u1 = e_full * u0 + dt / 6 * (e_full * k1 + 2 * e_late * (k2 + k3) + k4)
    # the (0, eta, 0) second component is zero in exact arithmetic
    u1[1][grid.class_mask(ModeClass.DOUBLE_ZERO)] = 0.0
    new = replace(state, u=SpectralField(grid, u1, Frame.MOVING, t + dt), time=t + dt,
                  step_count=state.step_count + 1)
    if not np.all(np.isfinite(u1)):
        return new, RunStatus.BLOW_UP
    return new, RunStatus.COMPLETED


# --- initial data -----------------------------------------------------------

def sobolev_norm(coeffs: np.ndarray, grid: Grid, n: float) -> float:
    w = grid.bracket() ** (2 * n)
    return math.sqrt(float(np.sum(w * np.abs(coeffs) ** 2)) * grid.d_eta)


def random_initial_data(grid: Grid, epsilon: float, seed: int, n: int = 4) -> SpectralField:
    """Seeded divergence-free field with spectrum <k, eta, l>^-(n+3) and no double-zero part.

    Normalized so that the H^(n+2) norm equals epsilon.
    """
    rng = np.random.default_rng(seed)
    shape = (3,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= grid.bracket() ** (-(n + 3))
    c = np.where(grid.dealias_mask, c, 0)
    c = sc.symmetrize(c)
    c = np.where(grid.class_mask(ModeClass.DOUBLE_ZERO), 0, c)
    u = sc.leray_project(SpectralField(grid, c, Frame.MOVING, 0.0))
    norm = sobolev_norm(u.coeffs, grid, n + 2)
    if epsilon == 0 or norm == 0:
        return SpectralField.zeros(grid)
    return u * (epsilon / norm)


# --- ledger -----------------------------------------------------------------

@dataclass
class EnergyLedger:
    n: int = 4
    rows: list[dict] = field(default_factory=list)
    _rates: dict | None = field(default=None, repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], float)

    def bootstrap_values(self) -> dict[str, float]:
        """sup_t of each energy plus the accumulated integrals, per estimate."""
        out = {}
        if not self.rows:
            return out
        last = self.rows[-1]
        for energy, integrals in BOOTSTRAP_GROUPS:
            out[energy] = float(np.max(self.column(energy)) + sum(last[c] for c in integrals))
        return out

    def max_bootstrap(self) -> float:
        vals = self.bootstrap_values()
        return max(vals.values()) if vals else 0.0

    def all_finite(self) -> bool:
        return all(math.isfinite(v) for r in self.rows for v in r.values())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LEDGER_COLUMNS)
            for r in self.rows:
                writer.writerow([repr(float(r[c])) for c in LEDGER_COLUMNS])


def _weighted(arr: np.ndarray, weight: np.ndarray, d_eta: float) -> float:
    return float(np.sum(weight * np.abs(arr) ** 2)) * d_eta


def ledger_snapshot(state: SimState, n: int = 4) -> tuple[dict, dict]:
    """Instantaneous ledger energies and the integrands of the integrated columns."""
    grid = state.grid
    t = state.time
    nu = state.nu
    u = state.u.coeffs
    d_eta = grid.d_eta
    hn = grid.bracket() ** (2 * n)
    kv = sc.wavevector(grid, t)
    k2 = grid.kappa2(t)

    eta = grid.eta
    w1 = (1.0 + eta**2) ** n
    ubar = (u[0][0, :, 0], u[2][0, :, 0])
    e = {
        "E00_1": _weighted(ubar[0], w1, d_eta),
        "E00_3": _weighted(ubar[1], w1, d_eta),
    }
    rate = {
        "D00_1": nu * _weighted(ubar[0], w1 * eta**2, d_eta),
        "D00_3": nu * _weighted(ubar[1], w1 * eta**2, d_eta),
    }

    q = -k2 * u[1]
    omega = 1j * (kv[2] * u[0] - kv[0] * u[2])
    b = bradshaw_richardson(state.beta)
    pref = math.sqrt(state.beta / (state.beta - 1.0)) if b > 0 else 1.0
    w = pref * np.sqrt(k2) * omega

    sz = grid.class_mask(ModeClass.SIMPLE_ZERO)
    for name, f in (("Q", q), ("W", w)):
        fs = np.where(sz, f, 0)
        e[f"Es0_{name}"] = _weighted(fs, hn, d_eta)
        rate[f"Ds0_{name}"] = nu * _weighted(fs, hn * k2, d_eta)

    nz = grid.class_mask(ModeClass.NONZERO)
    kk, ee, ll = (np.broadcast_to(a, grid.shape)[nz] for a in grid.mesh)
    a = a_values(t, kk, ee, ll, nu, state.delta)
    _, r1 = m1_values(t, kk, ee, ll, nu)
    _, r2 = m2_values(t, kk, ee, ll)
    ghost = -(r1 + r2)
    hn_nz = hn[nz]
    k2_nz = k2[nz]
    for name, f in (("Q", q), ("W", w)):
        af = a * f[nz]
        e[f"EA_{name}"] = _weighted(af, hn_nz, d_eta)
        rate[f"DA_{name}"] = nu * _weighted(af, hn_nz * k2_nz, d_eta)
        rate[f"G_{name}"] = _weighted(af, hn_nz * ghost, d_eta)

    for j in range(3):
        plane = np.where(sz[0], u[j][0], 0)
        vals = np.fft.ifft2(plane).real * grid.ny * grid.nz * d_eta
        e[f"sup_u{j + 1}"] = float(np.max(np.abs(vals)))
    e["div_residual"] = sc.divergence_residual(state.u)
    return e, rate


def record_ledger(state: SimState, ledger: EnergyLedger) -> EnergyLedger:
    energies, rates = ledger_snapshot(state, ledger.n)
    row = {"t": state.time}
    row.update(energies)
    if ledger.rows:
        prev = ledger.rows[-1]
        dt = state.time - prev["t"]
        for key, r in rates.items():
            row[key] = prev[key] + 0.5 * dt * (ledger._rates[key] + r)
    else:
        row.update({key: 0.0 for key in rates})
    ledger.rows.append({c: row[c] for c in LEDGER_COLUMNS})
    ledger._rates = rates
    return ledger


# --- driver -----------------------------------------------------------------

@dataclass
class RunResult:
    ledger: EnergyLedger
    state: SimState
    status: RunStatus
    epsilon: float

    @property
    def stable(self) -> bool:
        return self.status is RunStatus.COMPLETED and self.ledger.max_bootstrap() <= BOOTSTRAP_FACTOR * self.epsilon**2

    def __iter__(self):
        return iter((self.ledger, self.state, self.status))


def initial_state(config: SimulationConfig) -> tuple[SimState, float]:
    grid = config.grid()
    if config.init_kind == "file":
        u = sc.read_snapshot(config.init_path, config.dealias)
        if u.grid.shape != grid.shape or not math.isclose(u.grid.ly, grid.ly):
            raise sc.GridMismatchError("snapshot grid differs from the configured grid")
        if u.components != 3:
            raise ValueError("initial snapshot must hold 3 components")
        c = np.where(grid.class_mask(ModeClass.DOUBLE_ZERO), 0, u.coeffs)
        u = SpectralField(grid, c, Frame.MOVING, 0.0)
        eps = sobolev_norm(u.coeffs, grid, config.sobolev_n + 2)
    else:
        u = random_initial_data(grid, config.epsilon, config.seed, config.sobolev_n)
        eps = config.epsilon
    return SimState(u, config.beta, config.nu, config.delta, 0.0, 0), eps


def run(config: SimulationConfig, linear_only: bool = False, initial: SimState | None = None,
        observer=None) -> RunResult:
    """Integrate to t_end, recording the ledger every ledger_interval.

    ``observer(state)`` is called at every ledger time.
    """
    config.validate()
    if initial is None:
        state, eps = initial_state(config)
    else:
        state = initial
        eps = config.epsilon
    ledger = EnergyLedger(n=config.sobolev_n)
    record_ledger(state, ledger)
    if observer:
        observer(state)
    out_dir = Path(config.output_dir) if config.output_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    n_steps = int(math.ceil(config.t_end / config.dt - 1e-9))
    ledger_every = max(1, int(round(config.ledger_interval / config.dt)))
    snap_every = (max(1, int(round(config.snapshot_interval / config.dt)))
                  if config.snapshot_interval else None)
    status = RunStatus.COMPLETED
    blow = BLOWUP_FACTOR * eps**2
    # overflow is reported through the BlowUp status
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            dt = min(config.dt, config.t_end - state.time) if i == n_steps else config.dt
            state, status = step(state, dt, linear_only)
            if status is RunStatus.BLOW_UP:
                break
            if sc.divergence_residual(state.u) > DIV_TOL:
                status = RunStatus.TOLERANCE_FAIL
                break
            if i % ledger_every == 0 or i == n_steps:
                record_ledger(state, ledger)
                if observer:
                    observer(state)
                if not ledger.all_finite():
                    status = RunStatus.BLOW_UP
                    break
                if eps > 0 and ledger.max_bootstrap() > blow:
                    status = RunStatus.BLOW_UP
                    break
            if out_dir and snap_every and i % snap_every == 0:
                sc.write_snapshot(out_dir / f"snapshot_{i:07d}.rcsf", state.u)
    if out_dir:
        ledger.write_csv(out_dir / "ledger.csv")
        sc.write_snapshot(out_dir / "final.rcsf", state.u)
    return RunResult(ledger, state, status, eps)


# --- threshold scan ---------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    nu: float
    eps_stable: float | None
    eps_unstable: float | None
    bracket_ok: bool

    @property
    def eps_critical(self) -> float | None:
        if not self.bracket_ok:
            return None
        return math.sqrt(self.eps_stable * self.eps_unstable)


@dataclass
class ScanTable:
    beta: float
    rows: list[ScanRow]
    exponent: float | None

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["beta", "nu", "eps_stable", "eps_unstable", "eps_critical", "bracket_ok"])
            for r in self.rows:
                writer.writerow([self.beta, r.nu, r.eps_stable, r.eps_unstable, r.eps_critical, int(r.bracket_ok)])
            writer.writerow(["# exponent", self.exponent])


def threshold_scan(base_config: SimulationConfig, nu_list, eps_bounds: tuple[float, float],
                   bisection_steps: int, linear_only: bool = False) -> ScanTable:
    """Geometric bisection in epsilon between stable and unstable outcomes, per nu."""
    if bisection_steps < 1:
        raise ValueError("bisection_steps must be >= 1")
    lo, hi = eps_bounds
    if not 0 < lo < hi:
        raise ValueError("eps_bounds must satisfy 0 < eps_min < eps_max")

    def stable(nu, eps):
        cfg = replace(base_config, nu=nu, epsilon=eps, init_kind="seeded_random", output_dir=None)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return run(cfg, linear_only=linear_only).stable

    rows = []
    for nu in nu_list:
        s_lo, s_hi = stable(nu, lo), stable(nu, hi)
        if s_lo == s_hi or not s_lo:
            rows.append(ScanRow(nu, lo if s_lo else None, hi if not s_hi else None, False))
            continue
        a, b = lo, hi
        for _ in range(bisection_steps):
            mid = math.sqrt(a * b)
            if stable(nu, mid):
                a = mid
            else:
                b = mid
        rows.append(ScanRow(nu, a, b, True))
    good = [r for r in rows if r.bracket_ok]
    exponent = None
    if len(good) >= 2:
        x = np.log([r.nu for r in good])
        y = np.log([r.eps_critical for r in good])
        exponent = float(np.polyfit(x, y, 1)[0])
    return ScanTable(base_config.beta, rows, exponent)


def regime_of(state: SimState) -> RegimeKind:
    return classify(state.beta, state.nu).kind
