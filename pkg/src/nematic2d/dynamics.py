"""Coupled (v, theta) evolution: tendencies, IMEX stepping and energy diagnostics.

The director is evolved through its angle.  Velocity forcing is assembled in
angle form; an independent director-form assembly is kept alongside for
cross-checking.  Linear diffusion (gamma/Re) lap v and mu1 lap theta is
implicit, everything else explicit and dealiased with the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import spectral as sp
from .director import (
    AngleField,
    angle_to_director,
    director_derivatives,
    molecular_field,
    perpendicular,
    rotation_kernels,
    sine_gordon_residual,
    strain_and_spin,
    velocity_gradient,
)
from .material import MaterialParams
from .spectral import Grid

BLOWUP_LIMIT = 1e6
STAB = 1.0


class CFLViolation(ValueError):
    pass


class BlowupDetected(RuntimeError):
    pass


class RunError(RuntimeError):
    """A step failed during :func:`run`; carries the last good state."""

    def __init__(self, message, state, cause, records=None):
        super().__init__(message)
        self.state = state
        self.cause = cause
        self.records = records or []


@dataclass(frozen=True)
class SimState:
    grid: Grid
    v: np.ndarray
    theta: AngleField
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", self.grid.check(self.v, components=2))
        self.grid.check(self.theta.remainder)


@dataclass
class DiagnosticsRecord:
    t: float
    energy_E: float
    dissipation_D: float
    energy_EH: float
    v_l2: float
    v_h1: float
    theta_residual: float
    dist_h2: float | None = None


# ---------------------------------------------------------------- tendencies

def _tensor_divergence_hat(grid: Grid, sigma: np.ndarray, mask=None) -> np.ndarray:
    """Fourier coefficients of div(sigma)_i = d_j sigma_ij, after dealiasing sigma."""
    sh = sp.fft(sigma) * (grid.dealias_mask if mask is None else mask)
    k1, k2 = grid.k_odd
    return 1j * (k1 * sh[:, 0] + k2 * sh[:, 1])


def sigma1(D: np.ndarray, d: np.ndarray, p: MaterialParams) -> np.ndarray:
    """Leslie viscous stress after eliminating N (beta form)."""
    Dd = np.einsum("ij...,j...->i...", D, d)
    ddD = np.einsum("i...,i...->...", d, Dd)
    dd = np.einsum("i...,j...->ij...", d, d)
    sym = np.einsum("i...,j...->ij...", d, Dd)
    sym = sym + np.swapaxes(sym, 0, 1)
    return p.beta1 * ddD * dd + p.beta2 * D + 0.5 * p.beta3 * sym


def _orientation_tensor(d: np.ndarray, p: MaterialParams) -> np.ndarray:
    """0.5(-1-mu2) d_perp (x) d + 0.5(1-mu2) d (x) d_perp."""
    dp = perpendicular(d)
    a = 0.5 * (-1.0 - p.mu2)
    b = 0.5 * (1.0 - p.mu2)
    return a * np.einsum("i...,j...->ij...", dp, d) + b * np.einsum("i...,j...->ij...", d, dp)


def _director_forcing_hat(state: SimState, p: MaterialParams, grad_v: np.ndarray,
                         dealias: bool = True) -> np.ndarray:
    """Unprojected angle-form director forcing (without the (1-gamma)/Re weight)."""
    grid, theta = state.grid, state.theta
    mask = grid.dealias_mask if dealias else 1.0
    d = angle_to_director(grid, theta)
    D, _ = strain_and_spin(grad_v)
    lap_theta = theta.laplacian(grid)
    grad_theta = theta.gradient(grid)
    resid = lap_theta + 0.5 * p.h_squared * np.sin(2 * theta.full(grid))
    sigma = sigma1(D, d, p) + resid * _orientation_tensor(d, p)
    # Ericksen stress: -lap(theta) grad(theta); its pure-gradient part is dropped.
    ericksen = -lap_theta * grad_theta
    return _tensor_divergence_hat(grid, sigma, mask) + sp.fft(ericksen) * mask


def _advection_hat(grid: Grid, v: np.ndarray, grad_v: np.ndarray) -> np.ndarray:
    adv = np.einsum("ij...,j...->i...", grad_v, v)
    return -sp.fft(adv) * grid.dealias_mask


def velocity_explicit_hat(state: SimState, p: MaterialParams, coupling_off: bool = False,
                          grad_v: np.ndarray | None = None) -> np.ndarray:
    """Projected explicit velocity tendency in Fourier space (no gamma/Re lap v)."""
    grid = state.grid
    if grad_v is None:
        grad_v = velocity_gradient(grid, state.v)
    nh = _advection_hat(grid, state.v, grad_v)
    if not coupling_off:
        nh = nh + p.coupling * _director_forcing_hat(state, p, grad_v)
    return sp._leray_hat(grid, nh)


def theta_explicit_hat(state: SimState, p: MaterialParams, grad_v: np.ndarray | None = None) -> np.ndarray:
    """Explicit angle tendency in Fourier space (no mu1 lap theta)."""
    grid, theta = state.grid, state.theta
    if grad_v is None:
        grad_v = velocity_gradient(grid, state.v)
    omega_k, strain_k = rotation_kernels(grid, theta, state.v, grad_v=grad_v)
    grad_theta = theta.gradient(grid)
    tendency = (
        -np.einsum("i...,i...->...", state.v, grad_theta)
        + 0.5 * p.mu1 * p.h_squared * np.sin(2 * theta.full(grid))
        + omega_k
        + p.mu2 * strain_k
    )
    return sp.fft(tendency) * grid.dealias_mask


def rhs_theta(state: SimState, p: MaterialParams) -> np.ndarray:
    """Full tendency of the periodic angle remainder."""
    grid = state.grid
    nh = theta_explicit_hat(state, p)
    return sp.ifft(nh, grid.n) + p.mu1 * state.theta.laplacian(grid)


def rhs_velocity(state: SimState, p: MaterialParams, coupling_off: bool = False) -> np.ndarray:
    """Full Leray-projected velocity tendency."""
    grid = state.grid
    nh = velocity_explicit_hat(state, p, coupling_off=coupling_off)
    return sp.ifft(nh, grid.n) + p.viscosity * sp.laplacian(grid, state.v)


def velocity_forcing_theta_form(state: SimState, p: MaterialParams, dealias: bool = True) -> np.ndarray:
    """Projected (1-gamma)/Re director forcing, angle form.

    With ``dealias=True`` this is exactly the forcing used by the stepper.
    """
    grid = state.grid
    grad_v = velocity_gradient(grid, state.v)
    fh = p.coupling * _director_forcing_hat(state, p, grad_v, dealias)
    return sp.ifft(sp._leray_hat(grid, fh), grid.n)


def velocity_forcing_d_form(state: SimState, p: MaterialParams) -> np.ndarray:
    """Projected (1-gamma)/Re div(sigma1 + sigma2 + sigmaE), director form.

    Built from spectral derivatives of the director components themselves,
    independent of the angle-form assembly.  No dealiasing.
    """
    grid, theta = state.grid, state.theta
    d, grad_d, lap_d = director_derivatives(grid, theta)
    grad_v = velocity_gradient(grid, state.v)
    D, _ = strain_and_spin(grad_v)
    H2 = p.h_squared
    Hd = np.sqrt(H2) * d[0]
    grad_d_sq = np.sum(grad_d**2, axis=(0, 1))
    # f(d, grad d) = |grad d|^2 d + (H.d) H - (H.d)^2 d
    f = grad_d_sq * d - Hd**2 * d
    f[0] += np.sqrt(H2) * Hd
    m = lap_d + f
    a = 0.5 * (-1.0 - p.mu2)
    b = 0.5 * (1.0 - p.mu2)
    sigma2 = a * np.einsum("i...,j...->ij...", m, d) + b * np.einsum("i...,j...->ij...", d, m)
    # (sigma^E)_ij = -d_i d_k d_j d_k
    sigma_e = -np.einsum("ki...,kj...->ij...", grad_d, grad_d)
    sigma = sigma1(D, d, p) + sigma2 + sigma_e
    sh = sp.fft(sigma)
    k1, k2 = grid.k_odd
    div_h = 1j * (k1 * sh[:, 0] + k2 * sh[:, 1])
    return sp.ifft(sp._leray_hat(grid, p.coupling * div_h), grid.n)


# ---------------------------------------------------------------- stepping

def max_stable_dt(state: SimState, p: MaterialParams) -> float:
    vmax = float(np.max(np.abs(state.v))) if state.v.size else 0.0
    return min(0.5 * state.grid.h / max(vmax, 1.0), 0.1 / (p.mu1 * p.h_squared + 1.0))


def _check_dt(state: SimState, p: MaterialParams, dt: float) -> None:
    if not dt > 0:
        raise CFLViolation(f"time step must be positive, got {dt}")
    limit = max_stable_dt(state, p)
    if dt > limit * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt:.3e} exceeds the stability bound {limit:.3e}")


def _check_blowup(grid: Grid, v: np.ndarray, th: np.ndarray, t: float) -> None:
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(th))):
        raise BlowupDetected(f"non-finite values at t = {t:.6g}")
    vmax = float(np.max(np.abs(v)))
    if vmax > BLOWUP_LIMIT:
        raise BlowupDetected(f"|v|_inf = {vmax:.3e} exceeds {BLOWUP_LIMIT:g} at t = {t:.6g}")


class IMEXStepper:
    """First-order IMEX Euler or second-order IMEX-BDF2 (SBDF2).

    Implicit parts are diagonal in Fourier space and solved exactly.  BDF2
    keeps one step of history and starts with an Euler step.
    """

    def __init__(self, params: MaterialParams, dt: float, scheme: str = "euler",
                 coupling_off: bool = False, stabilization: float | None = None):
        if scheme not in ("euler", "bdf2"):
            raise ValueError(f"unknown integrator {scheme!r}")
        self.params = params
        self.dt = float(dt)
        self.scheme = scheme
        self.coupling_off = coupling_off
        if stabilization is None:
            stabilization = 0.0 if (scheme == "euler" or coupling_off) else STAB
        self.stabilization = float(stabilization)
        self._prev = None  # (v_hat, theta_hat, Nv_hat, Ntheta_hat) of the previous step

    def reset(self) -> None:
        self._prev = None

    def step(self, state: SimState) -> SimState:
        p, dt, grid = self.params, self.dt, state.grid
        _check_dt(state, p, dt)
        grad_v = velocity_gradient(grid, state.v)
        nv = velocity_explicit_hat(state, p, self.coupling_off, grad_v=grad_v)
        nt = theta_explicit_hat(state, p, grad_v=grad_v)
        vh = sp.fft(state.v)
        th = sp.fft(state.theta.remainder)
        lam_v = p.viscosity * grid.k2
        lam_t = p.mu1 * grid.k2
        if self.scheme == "bdf2" and self._prev is not None:
            vh0, th0, nv0, nt0 = self._prev
            sv, st = self.stabilization * lam_v, self.stabilization * lam_t
            vh_new = ((4 * vh - vh0 + 2 * dt * (2 * nv - nv0) + 2 * dt * sv * (2 * vh - vh0))
                      / (3 + 2 * dt * (lam_v + sv)))
            th_new = ((4 * th - th0 + 2 * dt * (2 * nt - nt0) + 2 * dt * st * (2 * th - th0))
                      / (3 + 2 * dt * (lam_t + st)))
        else:
            sv, st = self.stabilization * lam_v, self.stabilization * lam_t
            vh_new = (vh + dt * (nv + sv * vh)) / (1 + dt * (lam_v + sv))
            th_new = (th + dt * (nt + st * th)) / (1 + dt * (lam_t + st))
        if self.scheme == "bdf2":
            self._prev = (vh, th, nv, nt)
        vh_new = sp._leray_hat(grid, vh_new)
        v = sp.ifft(vh_new, grid.n)
        rem = sp.ifft(th_new, grid.n)
        t = state.t + dt
        _check_blowup(grid, v, rem, t)
        return SimState(grid, v, AngleField(rem, state.theta.winding), t)


def step(state: SimState, p: MaterialParams, dt: float, coupling_off: bool = False) -> SimState:
    """One IMEX Euler step."""
    return IMEXStepper(p, dt, "euler", coupling_off).step(state)


# ---------------------------------------------------------------- diagnostics

def energy(state: SimState, p: MaterialParams) -> float:
    """1/2 int |v|^2 + (1-gamma)/Re (|grad d|^2 + |H|^2 - (H.d)^2)."""
    grid, theta = state.grid, state.theta
    g = theta.gradient(grid)
    th = theta.full(grid)
    density = (np.sum(state.v**2, axis=0)
               + p.coupling * (np.sum(g**2, axis=0) + p.h_squared * np.cos(th) ** 2))
    return 0.5 * sp.integrate(grid, density)


def dissipation(state: SimState, p: MaterialParams) -> float:
    """Instantaneous dissipation rate: -dE/dt from the basic energy law."""
    grid, theta = state.grid, state.theta
    grad_v = velocity_gradient(grid, state.v)
    D, _ = strain_and_spin(grad_v)
    d = angle_to_director(grid, theta)
    h = molecular_field(grid, theta, p.h_field)
    Dd = np.einsum("ij...,j...->i...", D, d)
    ddD = np.einsum("i...,i...->...", d, Dd)
    hd = np.einsum("i...,i...->...", h, d)
    leslie = (p.beta1 * ddD**2 + p.beta2 * np.sum(D * D, axis=(0, 1))
              + p.beta3 * np.sum(Dd**2, axis=0))
    rotational = p.mu1 * (np.sum(h**2, axis=0) - hd**2)
    density = p.viscosity * np.sum(grad_v**2, axis=(0, 1)) + p.coupling * (leslie + rotational)
    return sp.integrate(grid, density)


def energy_EH(state: SimState, p: MaterialParams) -> float:
    """||grad v||^2 + (1-gamma)/Re ||lap theta + (H^2/2) sin 2 theta||^2."""
    grid = state.grid
    grad_v = velocity_gradient(grid, state.v)
    r = sine_gordon_residual(grid, state.theta, p.h_field)
    return sp.integrate(grid, np.sum(grad_v**2, axis=(0, 1))) + p.coupling * sp.integrate(grid, r**2)


def aligned_angle_difference(grid: Grid, theta: AngleField, ref: AngleField) -> np.ndarray:
    """theta - ref - k*pi with k the nearest integer to mean(theta - ref)/pi."""
    if theta.winding != ref.winding:
        raise ValueError(f"winding mismatch: {theta.winding} vs {ref.winding}")
    diff = theta.remainder - ref.remainder
    k = np.round(np.mean(diff) / np.pi)
    return diff - k * np.pi


def diagnostics(state: SimState, p: MaterialParams, reference: AngleField | None = None) -> DiagnosticsRecord:
    grid = state.grid
    dist = None
    if reference is not None:
        dist = sp.sobolev_norm(grid, aligned_angle_difference(grid, state.theta, reference), 2)
    r = sine_gordon_residual(grid, state.theta, p.h_field)
    return DiagnosticsRecord(
        t=state.t,
        energy_E=energy(state, p),
        dissipation_D=dissipation(state, p),
        energy_EH=energy_EH(state, p),
        v_l2=sp.sobolev_norm(grid, state.v, 0),
        v_h1=sp.sobolev_norm(grid, state.v, 1),
        theta_residual=float(np.sqrt(sp.integrate(grid, r**2))),
        dist_h2=dist,
    )


def run(s0: SimState, p: MaterialParams, dt: float, t_end: float, sample_every: int = 1, *,
        integrator: str = "euler", coupling_off: bool = False,
        reference: AngleField | None = None, callback=None):
    """Integrate to ``t_end`` sampling diagnostics every ``sample_every`` steps.

    Returns ``(records, final_state)``; the initial and final states are always
    sampled.  ``callback(step_index, state)`` is invoked at each sample.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    nsteps = int(round(t_end / dt))
    stepper = IMEXStepper(p, dt, integrator, coupling_off)
    state = s0
    records = [diagnostics(state, p, reference)]
    if callback:
        callback(0, state)
    for i in range(1, nsteps + 1):
        try:
            state = replace(stepper.step(state), t=s0.t + i * dt)
        except (CFLViolation, BlowupDetected) as exc:
            raise RunError(f"step {i} failed at t = {state.t + dt:.6g}: {exc}", state, exc, records) from exc
        if i % sample_every == 0 or i == nsteps:
            records.append(diagnostics(state, p, reference))
            if callback:
                callback(i, state)
    return records, state


def with_time(state: SimState, t: float) -> SimState:
    return replace(state, t=t)
