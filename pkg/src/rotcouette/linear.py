"""Per-mode propagation of the linearized perturbation system.

Unknowns, per Fourier mode with kappa = (k, eta - kt, l):

* ``q = -|kappa|^2 U^2``   (Q = Delta_L U^2)
* ``omega2 = i (l U^1 - k U^3)``
* ``w = sqrt(beta/(beta-1)) |kappa| omega2`` in the stable regime only
* ``ubar0`` = the (k, l) = (0, 0) content of U^1 and U^3 as functions of eta

Double-zero modes follow the heat flow, simple-zero modes have closed forms in
every regime, and nonzero modes are integrated with a Lawson (integrating
factor) RK4 scheme in which the viscous decay and the shear stretching of W
are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .regime import RegimeKind, bradshaw_richardson, classify
from .spectral_core import (
    Frame,
    Grid,
    ModeClass,
    ModeIndex,
    SpectralField,
    divergence_residual,
    wavevector,
)

DIVERGENCE_TOL = 1e-10


def regime_kind(beta: float) -> RegimeKind:
    # nu does not enter the classification of the kind
    return classify(beta, 0.5).kind


def effective_alpha(beta: float) -> float:
    """Signed coupling strength of the (Q, W) system.

    For beta > 1 this is sqrt(B_beta); for beta < 0 the coupling terms of
    the (Q, W) system change sign, which is absorbed here.
    """
    b = bradshaw_richardson(beta)
    if b <= 0:
        raise ValueError(f"(Q, W) variables need B_beta > 0, got {b}")
    return math.copysign(math.sqrt(b), beta)


def w_prefactor(beta: float) -> float:
    b = bradshaw_richardson(beta)
    if b <= 0:
        raise ValueError(f"W is only defined for B_beta > 0, got {b}")
    return math.sqrt(beta / (beta - 1.0))


@dataclass(frozen=True)
class LinearState:
    q: SpectralField
    w: SpectralField | None
    omega2: SpectralField | None
    ubar0: tuple[np.ndarray, np.ndarray]
    beta: float
    nu: float
    time: float

    @property
    def grid(self) -> Grid:
        return self.q.grid

    @property
    def stable(self) -> bool:
        return self.w is not None

    def coupling(self) -> np.ndarray:
        return (self.w if self.stable else self.omega2).coeffs[0]


def _scalar(grid: Grid, arr: np.ndarray, t: float) -> SpectralField:
    return SpectralField(grid, arr[None], Frame.MOVING, t)


def velocity_to_unknowns(u: SpectralField, beta: float, t: float | None = None, nu: float = 0.0) -> LinearState:
    if u.components != 3:
        raise ValueError("velocity must have 3 components")
    t = u.time if t is None else t
    u = u.replace(time=t)
    res = divergence_residual(u)
    if res > DIVERGENCE_TOL:
        raise ValueError(f"velocity is not divergence-free (residual {res:.3e})")
    grid = u.grid
    kk, sh, ll = wavevector(grid, t)
    k2 = grid.kappa2(t)
    dz = grid.class_mask(ModeClass.DOUBLE_ZERO)
    c = u.coeffs
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale and np.max(np.abs(c[1][dz])) > DIVERGENCE_TOL * scale:
        raise ValueError("double-zero U^2 content must vanish")

    q = np.where(dz, 0, -k2 * c[1])
    omega = np.where(dz, 0, 1j * (ll * c[0] - kk * c[2]))
    ubar0 = (c[0][0, :, 0].copy(), c[2][0, :, 0].copy())
    if regime_kind(beta) is RegimeKind.STABLE:
        w = w_prefactor(beta) * np.sqrt(k2) * omega
        return LinearState(_scalar(grid, q, t), _scalar(grid, w, t), None, ubar0, beta, nu, t)
    return LinearState(_scalar(grid, q, t), None, _scalar(grid, omega, t), ubar0, beta, nu, t)


def reconstruct_velocity(state: LinearState) -> SpectralField:
    grid = state.grid
    t = state.time
    kk, sh, ll = wavevector(grid, t)
    k2 = grid.kappa2(t)
    dz = grid.class_mask(ModeClass.DOUBLE_ZERO)
    q = state.q.coeffs[0]
    if state.stable:
        wc = state.w.coeffs[0]
        if np.any(np.abs(q[dz]) > 0) or np.any(np.abs(wc[dz]) > 0):
            raise ValueError("q/w carry (k, l) = (0, 0) content")
        safe_k = np.where(dz, 1.0, np.sqrt(k2))
        omega = np.where(dz, 0, wc / (w_prefactor(state.beta) * safe_k))
    else:
        omega = state.omega2.coeffs[0]
        if np.any(np.abs(q[dz]) > 0) or np.any(np.abs(omega[dz]) > 0):
            raise ValueError("q/omega2 carry (k, l) = (0, 0) content")
    h2 = np.where(dz, 1.0, kk**2 + ll**2)
    u2 = np.where(dz, 0, -q / np.where(dz, 1.0, k2))
    u1 = np.where(dz, 0, -(kk * sh * u2 + 1j * ll * omega) / h2)
    u3 = np.where(dz, 0, -(ll * sh * u2 - 1j * kk * omega) / h2)
    u1[0, :, 0] = state.ubar0[0]
    u3[0, :, 0] = state.ubar0[1]
    return SpectralField(grid, np.array([u1, u2, u3]), Frame.MOVING, t)


def evolve_double_zero(ubar0, eta, nu: float, dt: float):
    if dt < 0:
        raise ValueError("dt must be non-negative")
    factor = np.exp(-nu * np.asarray(eta, float) ** 2 * dt)
    return tuple(np.asarray(u) * factor for u in ubar0)


def _simple_zero_update(q, c, eta, l, beta: float, nu: float, dt: float):
    """Closed-form propagation of (q, coupling) on k = 0 modes; arrays broadcast."""
    r2 = eta**2 + l**2
    r2s = np.where(r2 == 0, 1.0, r2)
    r = np.sqrt(r2s)
    heat = np.exp(-nu * r2 * dt)
    kind = regime_kind(beta)
    if kind is RegimeKind.LIFT_UP_ROTATED:
        # dQ = -i l Omega, dOmega = 0 (plus heat)
        return heat * (q - dt * 1j * l * c), heat * c
    if kind is RegimeKind.LIFT_UP_CLASSICAL:
        # dQ = 0, dOmega = i l Q / |eta,l|^2
        return heat * q, heat * (c + dt * 1j * l * q / r2s)
    s = np.sign(l)
    s_safe = np.where(s == 0, 1.0, s)
    if kind is RegimeKind.EXPONENTIALLY_UNSTABLE:
        root = math.sqrt(beta * (1.0 - beta))
        cb = math.sqrt(beta / (1.0 - beta))
        x = 1j * s * r * c
        d_plus = q + cb * x
        d_minus = q - cb * x
        lam = root * np.abs(l) / r
        d_plus = d_plus * heat * np.exp(-lam * dt)
        d_minus = d_minus * heat * np.exp(lam * dt)
        q_new = 0.5 * (d_plus + d_minus)
        x_new = (d_plus - d_minus) / (2 * cb)
        return q_new, x_new / (1j * s_safe * r)
    alpha = effective_alpha(beta)
    g_plus = q - s * c
    g_minus = q + s * c
    phase = alpha * np.abs(l) / r * dt
    g_plus = g_plus * heat * np.exp(1j * phase)
    g_minus = g_minus * heat * np.exp(-1j * phase)
    return 0.5 * (g_plus + g_minus), s * (g_minus - g_plus) / 2


def evolve_simple_zero(state: LinearState, dt: float) -> LinearState:
    """Exact update of simple-zero modes; double-zero modes follow the heat flow."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    grid = state.grid
    nzm = grid.class_mask(ModeClass.NONZERO)
    q = state.q.coeffs[0]
    c = state.coupling()
    if np.any(np.abs(q[nzm]) > 0) or np.any(np.abs(c[nzm]) > 0):
        raise ValueError("evolve_simple_zero received k != 0 content")
    eta = grid.eta[:, None]
    l = grid.l[None, :]
    q0, c0 = q[0], c[0]
    q1, c1 = _simple_zero_update(q0, c0, eta, l, state.beta, state.nu, dt)
    q1 = np.where(l == 0, 0, q1)
    c1 = np.where(l == 0, 0, c1)
    qn = np.zeros_like(q)
    cn = np.zeros_like(c)
    qn[0] = q1
    cn[0] = c1
    return _with_fields(state, qn, cn, state.time + dt,
                        evolve_double_zero(state.ubar0, grid.eta, state.nu, dt))


def _with_fields(state: LinearState, q, c, t, ubar0) -> LinearState:
    grid = state.grid
    qf = _scalar(grid, q, t)
    cf = _scalar(grid, c, t)
    if state.stable:
        return replace(state, q=qf, w=cf, ubar0=ubar0, time=t)
    return replace(state, q=qf, omega2=cf, ubar0=ubar0, time=t)


# --- nonzero modes ----------------------------------------------------------

def _viscous_exponent(k, eta, l, nu, t0, h):
    """nu * int_{t0}^{t0+h} |k, eta - ks, l|^2 ds."""
    u = eta - k * t0
    return nu * ((k**2 + l**2) * h + u**2 * h - u * k * h**2 + k**2 * h**3 / 3.0)


def evolve_nonzero_modes(k, eta, l, q, c, beta: float, nu: float, t0: float, t1: float,
                         dt_max: float | None = None):
    """Propagate arrays of nonzero modes from t0 to t1.

    ``c`` is W in the stable regime and Omega^2 otherwise. Returns (q, c).
    """
    k = np.asarray(k, float)
    eta = np.asarray(eta, float)
    l = np.asarray(l, float)
    if np.any(k == 0):
        raise ValueError("evolve_nonzero_modes needs k != 0")
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    q = np.array(q, complex)
    c = np.array(c, complex)
    if t1 == t0:
        return q, c
    if dt_max is None:
        dt_max = default_dt_max(k, eta, l, nu, t1)
    stable = regime_kind(beta) is RegimeKind.STABLE
    alpha = effective_alpha(beta) if stable else None
    return _lawson_rk4(k, eta, l, q, c, beta, alpha, nu, t0, t1, dt_max)


def _lawson_rk4(k, eta, l, q, c, beta, alpha, nu, t0, t1, dt_max):
    """(Q, W) system when alpha is given, (Q, Omega) system with beta otherwise."""
    stable = alpha is not None
    n = max(1, math.ceil((t1 - t0) / dt_max - 1e-12))
    h = (t1 - t0) / n

    def kappa(s):
        return np.sqrt(k**2 + (eta - k * s) ** 2 + l**2)

    for i in range(n):
        tn = t0 + i * h
        kn = kappa(tn)
        if stable:
            # V_Q' = -i a l/|kappa(tn)| V_W ; V_W' = -i a l |kappa(tn)| / |kappa(s)|^2 V_Q
            def rhs(s, vq, vw):
                return (-1j * alpha * l / kn * vw, -1j * alpha * l * kn / kappa(s) ** 2 * vq)
        else:
            def rhs(s, vq, vw):
                return (-1j * beta * l * vw, -1j * (beta - 1.0) * l / kappa(s) ** 2 * vq)
        a1q, a1w = rhs(tn, q, c)
        a2q, a2w = rhs(tn + h / 2, q + h / 2 * a1q, c + h / 2 * a1w)
        a3q, a3w = rhs(tn + h / 2, q + h / 2 * a2q, c + h / 2 * a2w)
        a4q, a4w = rhs(tn + h, q + h * a3q, c + h * a3w)
        vq = q + h / 6 * (a1q + 2 * a2q + 2 * a3q + a4q)
        vw = c + h / 6 * (a1w + 2 * a2w + 2 * a3w + a4w)
        decay = np.exp(-_viscous_exponent(k, eta, l, nu, tn, h))
        q = decay * vq
        c = decay * vw * (kappa(tn + h) / kn if stable else 1.0)
    return q, c


def default_dt_max(k, eta, l, nu, t1) -> float:
    k = np.asarray(k, float)
    eta = np.asarray(eta, float)
    l = np.asarray(l, float)
    worst = np.max(k**2 + l**2 + np.maximum((eta) ** 2, (eta - k * t1) ** 2)) if k.size else 1.0
    return min(0.01, 0.1 / (nu * worst)) if nu > 0 else 0.01


def evolve_nonzero_mode(mode: ModeIndex, qhat: complex, what: complex, alpha: float, nu: float,
                        t0: float, t1: float, dt_max: float = 0.01) -> tuple[complex, complex]:
    """Single-mode (Q, W) propagation for the stable regime with coupling alpha > 0."""
    if mode.k == 0:
        raise ValueError("evolve_nonzero_mode needs k != 0")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    arr = lambda v: np.array([v], float)
    q, w = np.array([qhat], complex), np.array([what], complex)
    if t1 > t0:
        q, w = _lawson_rk4(arr(mode.k), arr(mode.eta), arr(mode.l), q, w, None, alpha, nu, t0, t1, dt_max)
    return complex(q[0]), complex(w[0])


def evolve_linear(state: LinearState, t1: float, dt_max: float | None = None) -> LinearState:
    """Advance every mode class of a full linear state to time t1."""
    dt = t1 - state.time
    if dt < 0:
        raise ValueError("cannot evolve backwards")
    grid = state.grid
    nzm = grid.class_mask(ModeClass.NONZERO)
    q = state.q.coeffs[0].copy()
    c = state.coupling().copy()
    qz = np.where(nzm, 0, q)
    cz = np.where(nzm, 0, c)
    zero_part = _with_fields(state, qz, cz, state.time, state.ubar0)
    zero_part = evolve_simple_zero(zero_part, dt)
    qn = zero_part.q.coeffs[0].copy()
    cn = zero_part.coupling().copy()
    k, eta, l = (np.broadcast_to(a, grid.shape) for a in grid.mesh)
    active = nzm & ((np.abs(q) > 0) | (np.abs(c) > 0))
    if np.any(active):
        dq, dc = evolve_nonzero_modes(
            k[active], eta[active], l[active], q[active], c[active],
            state.beta, state.nu, state.time, t1, dt_max,
        )
        qn[active] = dq
        cn[active] = dc
    return _with_fields(state, qn, cn, t1, zero_part.ubar0)


def mode_energy(q, w) -> np.ndarray:
    return np.abs(q) ** 2 + np.abs(w) ** 2


# --- dispersive decay -------------------------------------------------------

@dataclass
class DispersiveSeries:
    times: np.ndarray
    sup: np.ndarray  # (3, n_times): sup over (y, z) of |U^j|
    w2inf: np.ndarray  # sum over j and |a| <= 2 of sup |d^a U^j|
    nu: float
    alpha: float

    def compensated(self, j: int | None = None) -> np.ndarray:
        base = self.w2inf if j is None else self.sup[j]
        return base * np.exp(self.nu * self.times)


def beta_for_alpha(alpha: float) -> float:
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * alpha**2))


def dispersive_decay_experiment(data: SpectralField, alpha: float, nu: float, times,
                                upsample: int = 1) -> DispersiveSeries:
    """Sup-norm series of the linear evolution of simple-zero velocity data.

    The data are converted to (Q, W) with the beta > 1 root of
    beta (beta - 1) = alpha^2 and propagated exactly to each requested time.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    grid = data.grid
    mask = ~grid.class_mask(ModeClass.SIMPLE_ZERO)
    if np.any(np.abs(data.coeffs[:, mask]) > 0):
        raise ValueError("dispersive experiment needs simple-zero data only")
    beta = beta_for_alpha(alpha)
    state0 = velocity_to_unknowns(data.replace(time=0.0), beta, nu=nu)
    times = np.asarray(list(times), float)
    eta = grid.eta[:, None]
    l = grid.l[None, :]
    ny, nz = grid.ny * upsample, grid.nz * upsample
    sup = np.zeros((3, times.size))
    w2 = np.zeros(times.size)
    orders = [(a, b) for a in range(3) for b in range(3) if a + b <= 2]
    for i, t in enumerate(times):
        st = evolve_simple_zero(state0, float(t))
        u = reconstruct_velocity(replace(st, time=float(t)))
        for j in range(3):
            plane = u.coeffs[j][0]
            for a, b in orders:
                spec = plane * (1j * eta) ** a * (1j * l) ** b
                vals = _plane_to_physical(spec, ny, nz) * grid.d_eta
                m = float(np.max(np.abs(vals)))
                if (a, b) == (0, 0):
                    sup[j, i] = m
                w2[i] += m
    return DispersiveSeries(times, sup, w2, nu, alpha)


def _plane_to_physical(spec: np.ndarray, ny: int, nz: int) -> np.ndarray:
    n0, n1 = spec.shape
    if (ny, nz) != (n0, n1):
        padded = np.zeros((ny, nz), complex)
        h0, h1 = n0 // 2, n1 // 2
        padded[:h0, :h1] = spec[:h0, :h1]
        padded[:h0, -h1:] = spec[:h0, -h1:]
        padded[-h0:, :h1] = spec[-h0:, :h1]
        padded[-h0:, -h1:] = spec[-h0:, -h1:]
        spec = padded
    return np.fft.ifft2(spec).real * ny * nz


def gaussian_simple_zero_data(grid: Grid, width: float = 0.5, ls=(1, 2, 3), amplitude: float = 1.0,
                              beta: float = 2.0) -> SpectralField:
    """Velocity with Q = amplitude * exp(-(eta width)^2/2) on the z-harmonics ``ls``, W = 0."""
    q = np.zeros(grid.shape, complex)
    prof = amplitude * np.exp(-0.5 * (grid.eta * width) ** 2)
    for lv in ls:
        for sgn in (1, -1):
            iz = int(sgn * lv) % grid.nz
            q[0, :, iz] = prof
    zero = np.zeros_like(q)
    kind = regime_kind(beta)
    t = 0.0
    if kind is RegimeKind.STABLE:
        st = LinearState(_scalar(grid, q, t), _scalar(grid, zero, t), None,
                         (np.zeros(grid.ny, complex), np.zeros(grid.ny, complex)), beta, 0.0, t)
    else:
        st = LinearState(_scalar(grid, q, t), None, _scalar(grid, zero, t),
                         (np.zeros(grid.ny, complex), np.zeros(grid.ny, complex)), beta, 0.0, t)
    return reconstruct_velocity(st)
