"""Steady states of the angle equation in the doubled variable psi = 2*theta.

Solves ``lap psi + H^2 sin psi = 0`` with ``psi(x + e_i) = psi(x) + 2*a_i*pi``
on the unit torus.  ``psi`` is stored as a periodic remainder plus the
harmonic background ``2*pi*(a1*x1 + a2*x2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import LinearOperator, gmres

from . import spectral as sp
from .director import AngleField, linear_background
from .spectral import Grid

log = logging.getLogger(__name__)

CONSTANT_TOL = 1e-8


class SingularLinearization(RuntimeError):
    pass


class UnconvergedInput(ValueError):
    pass


@dataclass(frozen=True)
class SteadyProblem:
    grid: Grid
    h_field: float
    winding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if not np.isfinite(self.h_field):
            raise ValueError("field strength must be finite")
        object.__setattr__(self, "winding", (int(self.winding[0]), int(self.winding[1])))

    @property
    def h_squared(self) -> float:
        return self.h_field**2

    def background(self) -> np.ndarray:
        return linear_background(self.grid, self.winding, scale=2 * np.pi)

    def residual(self, psi: np.ndarray) -> np.ndarray:
        """lap psi + H^2 sin psi for a periodic remainder ``psi``."""
        return sp.laplacian(self.grid, psi) + self.h_squared * np.sin(psi + self.background())

    def residual_norm(self, psi: np.ndarray) -> float:
        r = self.residual(psi)
        return float(np.sqrt(sp.integrate(self.grid, r**2)))


@dataclass
class SteadySolution:
    problem: SteadyProblem
    psi: np.ndarray
    residual_l2: float
    converged: bool
    iterations: int = 0
    method: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def is_constant(self) -> bool:
        return self.problem.winding == (0, 0) and float(np.max(np.abs(self.psi - self.psi.mean()))) < CONSTANT_TOL

    def psi_full(self) -> np.ndarray:
        return self.psi + self.problem.background()

    def theta(self) -> AngleField:
        return AngleField(0.5 * self.psi, self.problem.winding)


def lambda2(grid: Grid) -> float:
    """Smallest nonzero eigenvalue of -lap with periodic conditions on the grid."""
    k2 = grid.k2
    return float(np.min(k2[k2 > 0]))


def rayleigh_quotient(grid: Grid, psi: np.ndarray) -> float:
    g = sp.gradient(grid, psi)
    num = sp.integrate(grid, np.sum(g**2, axis=0))
    dev = psi - psi.mean()
    return num / sp.integrate(grid, dev**2)


def energy_I(grid: Grid, psi: np.ndarray, h_field: float, winding=(0, 0)) -> float:
    """int 1/2 |grad psi|^2 + H^2 (cos psi - 1)."""
    g = sp.gradient(grid, psi)
    g[0] += 2 * np.pi * winding[0]
    g[1] += 2 * np.pi * winding[1]
    full = psi + linear_background(grid, winding, scale=2 * np.pi)
    return sp.integrate(grid, 0.5 * np.sum(g**2, axis=0) + h_field**2 * (np.cos(full) - 1.0))


def energy_E(grid: Grid, theta: AngleField, h_field: float) -> float:
    """int 1/2 |grad theta|^2 + (H^2/4)(1 + cos 2 theta)."""
    g = theta.gradient(grid)
    th = theta.full(grid)
    return sp.integrate(grid, 0.5 * np.sum(g**2, axis=0) + 0.25 * h_field**2 * (1 + np.cos(2 * th)))


def _as_remainder(prob: SteadyProblem, psi_init) -> np.ndarray:
    if psi_init is None:
        return np.zeros(prob.grid.shape)
    psi = np.asarray(psi_init, dtype=float)
    if psi.ndim == 0:
        return np.full(prob.grid.shape, float(psi))
    return prob.grid.check(psi).copy()


def solve_gradient_flow(prob: SteadyProblem, psi_init=None, tol: float = 1e-10,
                        max_time: float = 200.0, dtau: float | None = None) -> SteadySolution:
    """Relax ``d psi/d tau = lap psi + H^2 sin psi`` to a local minimiser of I.

    Semi-implicit with a stabilising shift S = H^2 on both sides, which makes
    every step decrease I for any ``dtau``.  Returns the last iterate with
    ``converged=False`` when ``max_time`` is reached first.
    """
    grid, H2 = prob.grid, prob.h_squared
    bg = prob.background()
    psi = _as_remainder(prob, psi_init)
    if dtau is None:
        dtau = 1.0 / max(H2, 1.0)
    S = H2
    denom = 1.0 + dtau * (grid.k2 + S)
    nsteps = int(np.ceil(max_time / dtau))
    res = prob.residual_norm(psi)
    history = [energy_I(grid, psi, prob.h_field, prob.winding)]
    it = 0
    while res >= tol and it < nsteps:
        rhs = (1.0 + dtau * S) * psi + dtau * H2 * np.sin(psi + bg)
        psi = sp.ifft(sp.fft(rhs) / denom, grid.n)
        it += 1
        res = prob.residual_norm(psi)
        history.append(energy_I(grid, psi, prob.h_field, prob.winding))
    return SteadySolution(prob, psi, res, res < tol, it, "gradient_flow", history)


def solve_newton(prob: SteadyProblem, psi_init=None, tol: float = 1e-10,
                 max_iter: int = 60) -> SteadySolution:
    """Damped Newton on the periodic remainder.

    Jacobian ``lap + H^2 cos psi`` is inverted with preconditioned GMRES
    (preconditioner ``(lap - sigma)^-1``, diagonal in Fourier space).  Steps
    are halved until the residual norm decreases, down to 2^-10.
    """
    grid, H2 = prob.grid, prob.h_squared
    bg = prob.background()
    psi = _as_remainder(prob, psi_init)
    res = prob.residual_norm(psi)
    history = [res]
    sigma = max(H2, 1.0)
    size = grid.n * grid.n
    precond_symbol = -1.0 / (grid.k2 + sigma)

    def precond(x):
        return sp.ifft(precond_symbol * sp.fft(x.reshape(grid.shape)), grid.n).ravel()

    M = LinearOperator((size, size), matvec=precond, dtype=float)
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        c = H2 * np.cos(psi + bg)

        def jac(x, c=c):
            x = x.reshape(grid.shape)
            return (sp.laplacian(grid, x) + c * x).ravel()

        J = LinearOperator((size, size), matvec=jac, dtype=float)
        r = prob.residual(psi)
        rtol = max(1e-13, min(1e-3, 0.1 * res))
        delta, info = gmres(J, -r.ravel(), M=M, rtol=rtol, atol=0.0, restart=60, maxiter=40)
        lin_res = np.linalg.norm(jac(delta) + r.ravel()) / max(np.linalg.norm(r), 1e-300)
        if not np.isfinite(lin_res) or lin_res > 0.5:
            raise SingularLinearization(
                f"Jacobian solve stagnated (relative residual {lin_res:.2e}, info {info})")
        delta = delta.reshape(grid.shape)
        lam = 1.0
        while True:
            trial = psi + lam * delta
            trial_res = prob.residual_norm(trial)
            if trial_res < res or lam <= 2.0**-10:
                break
            lam *= 0.5
        if not trial_res < res:
            log.debug("Newton line search failed at iteration %d (residual %.3e)", it, res)
            break
        psi, res = trial, trial_res
        history.append(res)
    return SteadySolution(prob, psi, res, res < tol, it, "newton", history)


def classify(sol: SteadySolution) -> str:
    """``"constant"`` or ``"nonconstant"`` for a converged solution."""
    if not sol.converged:
        raise UnconvergedInput(f"solution not converged (residual {sol.residual_l2:.3e})")
    return "constant" if sol.is_constant else "nonconstant"


def seeded_initial(grid: Grid, amplitude: float = 0.5) -> np.ndarray:
    """amplitude * cos(2 pi x1), the first unstable mode at the threshold."""
    x1, _ = grid.coords
    return amplitude * np.cos(2 * np.pi * x1)


# ---------------------------------------------------------------- alignment

def shift_angle(grid: Grid, theta: AngleField, w) -> AngleField:
    """theta(x + w) for an arbitrary shift w (Fourier interpolation of the remainder)."""
    a1, a2 = theta.winding
    rem = sp.shift(grid, theta.remainder, w) + np.pi * (a1 * w[0] + a2 * w[1])
    return AngleField(rem, theta.winding)


def roll_angle(grid: Grid, theta: AngleField, cells) -> AngleField:
    """theta(x + cells*h) by an exact whole-cell shift."""
    i, j = int(cells[0]), int(cells[1])
    a1, a2 = theta.winding
    rem = np.roll(theta.remainder, (-i, -j), axis=(0, 1)) + np.pi * (a1 * i + a2 * j) * grid.h
    return AngleField(rem, theta.winding)


def _mod_pi_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a - b
    return diff - np.pi * np.round(np.mean(diff) / np.pi)


def align(grid: Grid, theta: AngleField, ref: AngleField, continuous: bool = True):
    """Translate ``ref`` and add k*pi so it best matches ``theta`` in L2.

    Whole-cell shifts are searched exhaustively; with ``continuous`` the best
    one is refined over real shifts.  Returns ``(aligned_ref, w)``.
    """
    if theta.winding != ref.winding:
        raise ValueError(f"winding mismatch: {theta.winding} vs {ref.winding}")
    best, best_cells = np.inf, (0, 0)
    for i in range(grid.n):
        for j in range(grid.n):
            cand = roll_angle(grid, ref, (i, j)).remainder
            err = float(np.sum(_mod_pi_diff(theta.remainder, cand) ** 2))
            if err < best:
                best, best_cells = err, (i, j)
    w0 = np.array(best_cells, dtype=float) * grid.h
    if continuous:
        def objective(w):
            cand = shift_angle(grid, ref, w).remainder
            return float(np.sum(_mod_pi_diff(theta.remainder, cand) ** 2)) * grid.h**2

        out = minimize(objective, w0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-30, "maxiter": 2000})
        if out.fun < objective(w0):
            w0 = out.x
        aligned = shift_angle(grid, ref, w0)
    else:
        aligned = roll_angle(grid, ref, best_cells)
    k = np.round(np.mean(theta.remainder - aligned.remainder) / np.pi)
    return AngleField(aligned.remainder + k * np.pi, ref.winding), tuple(w0)
