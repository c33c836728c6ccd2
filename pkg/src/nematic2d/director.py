"""Director field in angle form.

The angle is stored as a periodic remainder plus an integer winding pair,
``theta(x) = remainder(x) + pi * (a1*x1 + a2*x2)``, so ``theta(x + e_i) =
theta(x) + a_i*pi`` holds by construction and ``d = (sin theta, cos theta)``
is a unit vector by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .spectral import Grid

UNRESOLVED_JUMP = np.pi / 2


class UnresolvedField(ValueError):
    """Neighbouring directors differ by more than pi/2; the lift is unreliable."""


class NonUnitDirector(ValueError):
    pass


@dataclass(frozen=True)
class AngleField:
    remainder: np.ndarray
    winding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        a1, a2 = self.winding
        if int(a1) != a1 or int(a2) != a2:
            raise ValueError(f"winding must be integers, got {self.winding}")
        object.__setattr__(self, "winding", (int(a1), int(a2)))
        object.__setattr__(self, "remainder", np.asarray(self.remainder, dtype=float))

    @property
    def parity(self) -> tuple[int, int]:
        return (self.winding[0] % 2, self.winding[1] % 2)

    def background(self, grid: Grid) -> np.ndarray:
        return linear_background(grid, self.winding)

    def full(self, grid: Grid) -> np.ndarray:
        return grid.check(self.remainder) + self.background(grid)

    def gradient(self, grid: Grid) -> np.ndarray:
        """grad theta = grad remainder + pi * (a1, a2)."""
        g = sp.gradient(grid, self.remainder)
        g[0] += np.pi * self.winding[0]
        g[1] += np.pi * self.winding[1]
        return g

    def laplacian(self, grid: Grid) -> np.ndarray:
        # The linear background is harmonic.
        return sp.laplacian(grid, self.remainder)

    def shifted(self, delta: float) -> "AngleField":
        return AngleField(self.remainder + delta, self.winding)


def linear_background(grid: Grid, winding: tuple[int, int], scale: float = np.pi) -> np.ndarray:
    x1, x2 = grid.coords
    return scale * (winding[0] * x1 + winding[1] * x2)


def angle_to_director(grid: Grid, theta: AngleField) -> np.ndarray:
    """d = (sin theta, cos theta), shape (2, n, n)."""
    th = theta.full(grid)
    return np.stack([np.sin(th), np.cos(th)])


def perpendicular(d: np.ndarray) -> np.ndarray:
    """d_perp = (cos theta, -sin theta) = (d2, -d1)."""
    return np.stack([d[1], -d[0]])


def _check_unit(d: np.ndarray, tol: float = 1e-8) -> None:
    err = np.max(np.abs(np.hypot(d[0], d[1]) - 1.0))
    if not np.isfinite(err) or err > tol:
        raise NonUnitDirector(f"director deviates from unit length by {err:.3e}")


def _lift_axis(phi: np.ndarray, axis: int) -> np.ndarray:
    """Unwrap along ``axis`` by 2*pi corrections, rejecting large raw jumps."""
    steps = np.diff(phi, axis=axis)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(steps) > UNRESOLVED_JUMP):
        raise UnresolvedField("neighbouring directors differ by more than pi/2")
    first = np.take(phi, [0], axis=axis)
    return np.concatenate([first, first + np.cumsum(steps, axis=axis)], axis=axis)


def director_to_angle(grid: Grid, d: np.ndarray, anchor: float = 0.0) -> AngleField:
    """Continuous angle lift of a resolved unit director field.

    The lift at the grid origin is the branch of ``atan2(d1, d2)`` closest to
    ``anchor``.  Winding integers are read off the seam: the continuation of
    each grid line across x_i = 1 must land within pi/2 of ``theta(0) + a_i*pi``.
    """
    d = grid.check(d, components=2)
    _check_unit(d)
    phi = np.arctan2(d[0], d[1])
    phi = phi + 2 * np.pi * np.round((anchor - phi[0, 0]) / (2 * np.pi))
    # First column along x1 fixes each row's starting branch, then rows along x2.
    col = _lift_axis(phi[:, :1], axis=0)
    rows = phi - phi[:, :1] + col
    theta = _lift_axis(rows, axis=1)
    # Consistency of the lift along every x1 line.
    if np.any(np.abs(np.diff(theta, axis=0)) > UNRESOLVED_JUMP):
        raise UnresolvedField("lifted angle jumps by more than pi/2 along x1")

    winding = []
    for axis in (0, 1):
        first = np.take(theta, 0, axis=axis)
        last = np.take(theta, -1, axis=axis)
        a = np.round((last - first) / np.pi)
        gap = np.abs(first + a * np.pi - last)
        if np.any(a != a.flat[0]) or np.any(gap > UNRESOLVED_JUMP):
            raise UnresolvedField("seam crossing is not resolved or winding is inconsistent")
        winding.append(int(a.flat[0]))
    winding = tuple(winding)
    return AngleField(theta - linear_background(grid, winding), winding)


def winding_numbers(grid: Grid, d: np.ndarray) -> tuple[int, int]:
    return director_to_angle(grid, d).winding


def director_derivatives(grid: Grid, theta: AngleField):
    """Spectral gradient and Laplacian of d computed from sin/cos samples.

    Odd winding makes the corresponding component antiperiodic, so the
    half-shifted Fourier basis is used there.  Returns ``(d, grad_d, lap_d)``
    with ``grad_d[k, i] = d d_k / d x_i``.
    """
    d = angle_to_director(grid, theta)
    grads, laps = [], []
    for comp in d:
        g, lap = sp.twisted_derivatives(grid, comp, theta.parity)
        grads.append(g)
        laps.append(lap)
    return d, np.stack(grads), np.stack(laps)


def molecular_field(grid: Grid, theta: AngleField, h_field: float) -> np.ndarray:
    """h = lap d + (H.d) H with H = h_field * (1, 0)."""
    d, _, lap_d = director_derivatives(grid, theta)
    h = lap_d.copy()
    h[0] += h_field**2 * d[0]
    return h


def velocity_gradient(grid: Grid, v: np.ndarray) -> np.ndarray:
    """grad_v[i, j] = d v_i / d x_j."""
    v = grid.check(v, components=2)
    return np.stack([sp.gradient(grid, v[0]), sp.gradient(grid, v[1])])


def strain_and_spin(grad_v: np.ndarray):
    """Symmetric part D and skew part Omega of grad_v."""
    gt = np.swapaxes(grad_v, 0, 1)
    return 0.5 * (grad_v + gt), 0.5 * (grad_v - gt)


def rotation_kernels(grid: Grid, theta: AngleField, v: np.ndarray, grad_v: np.ndarray | None = None):
    """Pointwise Omega : d_perp (x) d and D : d_perp (x) d."""
    if grad_v is None:
        grad_v = velocity_gradient(grid, v)
    else:
        grid.check(v, components=2)
    D, W = strain_and_spin(grad_v)
    d = angle_to_director(grid, theta)
    dp = perpendicular(d)
    omega_k = np.einsum("i...,ij...,j...->...", dp, W, d)
    strain_k = np.einsum("i...,ij...,j...->...", dp, D, d)
    return omega_k, strain_k


def sine_gordon_residual(grid: Grid, theta: AngleField, h_field: float) -> np.ndarray:
    """lap theta + (H^2/2) sin 2 theta."""
    return theta.laplacian(grid) + 0.5 * h_field**2 * np.sin(2 * theta.full(grid))
