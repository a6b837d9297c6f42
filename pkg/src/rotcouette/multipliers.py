"""Time-dependent Fourier multipliers m, M1, M2 and A = m M1 M2 exp(delta nu^(1/3) t).

All symbols are evaluated from closed-form antiderivatives of their defining
logarithmic rates. The vectorized ``*_values`` functions accept numpy arrays
for (k, eta, l) and a scalar or broadcastable t; the ``*_symbol`` functions
wrap them for a single :class:`ModeIndex`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral_core import ModeClass, SpectralField, ModeIndex

DEFAULT_DELTA = 0.01
WINDOW_LENGTH = 1000.0  # in units of nu^(-1/3)


def _require_nonzero_k(k) -> None:
    if np.any(np.asarray(k) == 0):
        raise ValueError("multipliers are only defined on nonzero modes (k != 0)")


def m_window(k, eta, nu):
    """Active window [start, end] of m, clipped to t >= 0."""
    k = np.asarray(k, float)
    crit = np.asarray(eta, float) / k
    return np.maximum(crit, 0.0), crit + WINDOW_LENGTH * nu ** (-1.0 / 3.0)


def m_values(t, k, eta, l, nu):
    """Return (m, dlog m) arrays."""
    _require_nonzero_k(k)
    k = np.asarray(k, float)
    eta = np.asarray(eta, float)
    l = np.asarray(l, float)
    t = np.asarray(t, float)
    start, end = m_window(k, eta, nu)
    tau = np.clip(t, start, np.maximum(start, end))
    base = k**2 + l**2
    value = np.sqrt((base + (eta - k * start) ** 2) / (base + (eta - k * tau) ** 2))
    shifted = eta - k * t
    rate = k * shifted / (base + shifted**2)
    active = (t >= start) & (t <= end)
    return value, np.where(active, rate, 0.0)


def m1_values(t, k, eta, l, nu):
    _require_nonzero_k(k)
    t, k, eta, _ = np.broadcast_arrays(*(np.asarray(a, float) for a in (t, k, eta, l)))
    c = nu ** (1.0 / 3.0)
    ak = np.abs(k)
    integral = np.sign(k) * (np.arctan(c * eta / ak) - np.arctan(c * (eta - k * t) / ak))
    rate = c * k**2 / (k**2 + c**2 * (eta - k * t) ** 2)
    return np.exp(-integral), -rate


def m2_values(t, k, eta, l):
    _require_nonzero_k(k)
    k = np.asarray(k, float)
    eta = np.asarray(eta, float)
    l = np.asarray(l, float)
    t = np.asarray(t, float)
    a = np.sqrt(k**2 + l**2)
    integral = (k / a) * (np.arctan(eta / a) - np.arctan((eta - k * t) / a))
    rate = k**2 / (k**2 + l**2 + (eta - k * t) ** 2)
    return np.exp(-integral), -rate


def a_values(t, k, eta, l, nu, delta=DEFAULT_DELTA):
    if delta < 0:
        raise ValueError("delta must be non-negative")
    m, _ = m_values(t, k, eta, l, nu)
    m1, _ = m1_values(t, k, eta, l, nu)
    m2, _ = m2_values(t, k, eta, l)
    return m * m1 * m2 * np.exp(delta * nu ** (1.0 / 3.0) * np.asarray(t, float))


def m_symbol(t: float, mode: ModeIndex, nu: float) -> tuple[float, float]:
    v, d = m_values(t, mode.k, mode.eta, mode.l, nu)
    return float(v), float(d)


def m1_symbol(t: float, mode: ModeIndex, nu: float) -> tuple[float, float]:
    v, d = m1_values(t, mode.k, mode.eta, mode.l, nu)
    return float(v), float(d)


def m2_symbol(t: float, mode: ModeIndex) -> tuple[float, float]:
    v, d = m2_values(t, mode.k, mode.eta, mode.l)
    return float(v), float(d)


def a_symbol(t: float, mode: ModeIndex, nu: float, delta: float = DEFAULT_DELTA) -> float:
    return float(a_values(t, mode.k, mode.eta, mode.l, nu, delta))


@dataclass(frozen=True)
class MultiplierSample:
    t: float
    mode: ModeIndex
    nu: float
    delta: float
    m: float
    m1: float
    m2: float
    a: float
    dlog_m: float
    dlog_m1: float
    dlog_m2: float


def sample(t: float, mode: ModeIndex, nu: float, delta: float = DEFAULT_DELTA) -> MultiplierSample:
    m, dm = m_symbol(t, mode, nu)
    m1, d1 = m1_symbol(t, mode, nu)
    m2, d2 = m2_symbol(t, mode)
    a = m * m1 * m2 * math.exp(delta * nu ** (1.0 / 3.0) * t)
    return MultiplierSample(t, mode, nu, delta, m, m1, m2, a, dm, d1, d2)


# --- independent ODE route --------------------------------------------------

def _rate_function(which: str, k, eta, l, nu):
    """d/dt log of the symbol; for ``m`` this is the in-window rate."""
    k = np.asarray(k, float)
    eta = np.asarray(eta, float)
    l = np.asarray(l, float)
    if which == "m":
        def rate(s):
            sh = eta - k * s
            return k * sh / (k**2 + sh**2 + l**2)

        return rate
    if which == "m1":
        c = nu ** (1.0 / 3.0)
        return lambda s: -c * k**2 / (k**2 + c**2 * (eta - k * s) ** 2)
    if which == "m2":
        return lambda s: -(k**2) / (k**2 + l**2 + (eta - k * s) ** 2)
    raise ValueError(f"unknown multiplier {which!r}")


def integrate_symbol_ode(which: str, t, k, eta, l, nu, steps: int = 2000):
    """Integrate dv/dt = rate(t) v from v(0)=1 with classical RK4.

    Works on arrays of independent samples. Time is reparametrized by
    s = t_c + L sinh(xi) around the critical time t_c = eta/k with the
    symbol's natural width L, so a fixed number of steps resolves both the
    critical layer and the long algebraic tails. For ``m`` the rate vanishes
    outside its window, so only the window part of [0, t] is integrated.
    """
    t = np.asarray(t, float)
    k = np.broadcast_to(np.asarray(k, float), t.shape)
    eta = np.broadcast_to(np.asarray(eta, float), t.shape)
    l = np.broadcast_to(np.asarray(l, float), t.shape)
    rate = _rate_function(which, k, eta, l, nu)
    crit = eta / k
    if which == "m1":
        width = nu ** (-1.0 / 3.0) * np.ones_like(t)
    else:
        width = np.sqrt(k**2 + l**2) / np.abs(k)

    if which == "m":
        start, end = m_window(k, eta, nu)
        a0 = np.clip(start, 0.0, t)
        a1 = np.clip(end, 0.0, t)
        # m only evolves inside its window
        pieces = [(a0, np.maximum(a0, a1))]
    else:
        pieces = [(np.zeros_like(t), t)]

    total = np.zeros_like(t)
    for lo, hi in pieces:
        xi0 = np.arcsinh((lo - crit) / width)
        xi1 = np.arcsinh((hi - crit) / width)
        h = (xi1 - xi0) / steps
        def f(xi):
            return rate(crit + width * np.sinh(xi)) * width * np.cosh(xi)

        v = np.ones_like(t)
        xi = xi0.copy()
        for _ in range(steps):
            k1 = f(xi) * v
            k2 = f(xi + 0.5 * h) * (v + 0.5 * h * k1)
            k3 = f(xi + 0.5 * h) * (v + 0.5 * h * k2)
            k4 = f(xi + h) * (v + h * k3)
            v = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            xi = xi + h
        acc = np.log(v)
        total += np.where(hi > lo, acc, 0.0)
    return np.exp(total)


# --- norms ------------------------------------------------------------------

def weighted_sobolev_norm(
    f: SpectralField,
    weight: str = "none",
    n: float = 0.0,
    nu: float | None = None,
    delta: float = DEFAULT_DELTA,
) -> float:
    """sqrt(sum <k,eta,l>^(2n) w^2 |c|^2 d_eta) at the field's time.

    ``weight`` is one of ``none``, ``M`` (ghost product M1 M2) or ``A``.
    """
    weight = weight.lower()
    grid = f.grid
    br = grid.bracket() ** (2 * n)
    coeffs = f.coeffs
    if weight == "none":
        w2 = np.ones(grid.shape)
    elif weight in ("m", "a"):
        if nu is None:
            raise ValueError("nu is required for weighted norms")
        zero_k = ~grid.class_mask(ModeClass.NONZERO)
        if np.any(np.abs(coeffs[:, zero_k]) > 0):
            raise ValueError("weighted norm requested on a field with k = 0 content")
        w2 = np.zeros(grid.shape)
        k, eta, l = (np.broadcast_to(a, grid.shape) for a in grid.mesh)
        nz = ~zero_k
        if weight == "m":
            m1, _ = m1_values(f.time, k[nz], eta[nz], l[nz], nu)
            m2, _ = m2_values(f.time, k[nz], eta[nz], l[nz])
            w2[nz] = (m1 * m2) ** 2
        else:
            w2[nz] = a_values(f.time, k[nz], eta[nz], l[nz], nu, delta) ** 2
    else:
        raise ValueError(f"unknown weight {weight!r}")
    terms = (br * w2)[None] * np.abs(coeffs) ** 2
    return math.sqrt(math.fsum(terms.ravel()) * grid.d_eta)


# --- empirical bound checks ------------------------------------------------

@dataclass
class BoundsReport:
    c_low: float  # largest c with m >= c (nu^(1/3) + |k,l|/|k,eta-kt,l|)
    c_prod: float  # smallest C with m(eta,l) <= C m(eta',l') <eta-eta', l-l'>
    n_samples: int
    n_pairs: int
    limit: float = 1e4

    @property
    def violation(self) -> bool:
        return not (self.c_low > 1.0 / self.limit and self.c_prod <= self.limit)


def check_m_bounds(samples: list[MultiplierSample], limit: float = 1e4) -> BoundsReport:
    """Empirical constants of the uniform lower bound and the product estimate.

    Product pairs are formed between samples sharing (t, k, nu).
    """
    if not samples:
        return BoundsReport(math.inf, 0.0, 0, 0, limit)
    c_low = math.inf
    groups: dict[tuple, list[MultiplierSample]] = {}
    for s in samples:
        md = s.mode
        lower = s.nu ** (1.0 / 3.0) + math.hypot(md.k, md.l) / math.sqrt(
            md.k**2 + (md.eta - md.k * s.t) ** 2 + md.l**2
        )
        c_low = min(c_low, s.m / lower)
        groups.setdefault((s.t, md.k, s.nu), []).append(s)
    c_prod = 0.0
    pairs = 0
    for members in groups.values():
        eta = np.array([s.mode.eta for s in members])
        l = np.array([s.mode.l for s in members], float)
        m = np.array([s.m for s in members])
        br = np.sqrt(1.0 + (eta[:, None] - eta[None, :]) ** 2 + (l[:, None] - l[None, :]) ** 2)
        ratio = m[:, None] / (m[None, :] * br)
        c_prod = max(c_prod, float(ratio.max()))
        pairs += len(members) ** 2
    return BoundsReport(c_low, c_prod, len(samples), pairs, limit)


def random_sweep(
    n_samples: int,
    seed: int = 0,
    nus=(1e-3, 1e-4),
    k_max: int = 8,
    l_max: int = 8,
    eta_max: float = 64.0,
    t_factor: float = 2e3,
    group_size: int = 8,
    delta: float = DEFAULT_DELTA,
) -> list[MultiplierSample]:
    """Randomized (t, k, eta, l, nu) samples, in groups sharing (t, k, nu)."""
    rng = np.random.default_rng(seed)
    out: list[MultiplierSample] = []
    while len(out) < n_samples:
        nu = float(rng.choice(nus))
        k = int(rng.choice([i for i in range(-k_max, k_max + 1) if i != 0]))
        t = float(rng.uniform(0.0, t_factor * nu ** (-1.0 / 3.0)))
        for _ in range(min(group_size, n_samples - len(out))):
            eta = float(rng.uniform(-eta_max, eta_max))
            l = int(rng.integers(-l_max, l_max + 1))
            out.append(sample(t, ModeIndex(k, eta, l), nu, delta))
    return out
