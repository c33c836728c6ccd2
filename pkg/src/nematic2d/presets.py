"""Initial states for runs."""

from __future__ import annotations

import numpy as np

from . import spectral as sp
from .director import AngleField
from .dynamics import SimState
from .spectral import Grid


def band_limited_noise(grid: Grid, rng: np.random.Generator, modes: int = 2) -> np.ndarray:
    """Random trigonometric polynomial with |m_i| <= modes, scaled to max |f| = 1."""
    x1, x2 = grid.coords
    f = np.zeros(grid.shape)
    for m1 in range(-modes, modes + 1):
        for m2 in range(-modes, modes + 1):
            a, b = rng.normal(size=2)
            arg = 2 * np.pi * (m1 * x1 + m2 * x2)
            f += a * np.cos(arg) + b * np.sin(arg)
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def solenoidal_noise(grid: Grid, rng: np.random.Generator, modes: int = 2, amplitude: float = 1.0) -> np.ndarray:
    """Divergence-free field from a random stream function, max component = amplitude."""
    psi = band_limited_noise(grid, rng, modes)
    v = np.stack([sp.derivative(grid, psi, 2), -sp.derivative(grid, psi, 1)])
    peak = np.max(np.abs(v))
    return amplitude * v / peak if peak > 0 else v


def taylor_green(grid: Grid, amplitude: float = 1.0) -> np.ndarray:
    x1, x2 = grid.coords
    s1, c1 = np.sin(2 * np.pi * x1), np.cos(2 * np.pi * x1)
    s2, c2 = np.sin(2 * np.pi * x2), np.cos(2 * np.pi * x2)
    return amplitude * np.stack([s1 * c2, -c1 * s2])


def make_initial(grid: Grid, preset: str, winding=(0, 0), seed: int = 0,
                 amplitude: float = 0.2, v_amplitude: float = 0.05, modes: int = 2) -> SimState:
    """Build a named initial state.

    ``aligned``: remainder pi/2, v = 0.  ``winding_linear``: remainder 0, v = 0.
    ``taylor_green``: aligned director with the unit Taylor-Green vortex.
    ``steady_plus_noise``: aligned director plus ``amplitude`` times seeded
    band-limited noise, and a seeded solenoidal v of size ``v_amplitude``.
    """
    zero_v = np.zeros((2,) + grid.shape)
    half_pi = np.full(grid.shape, np.pi / 2)
    if preset == "aligned":
        return SimState(grid, zero_v, AngleField(half_pi, winding))
    if preset == "winding_linear":
        return SimState(grid, zero_v, AngleField(np.zeros(grid.shape), winding))
    if preset == "taylor_green":
        return SimState(grid, taylor_green(grid), AngleField(half_pi, winding))
    if preset == "steady_plus_noise":
        rng = np.random.default_rng(seed)
        theta = half_pi + amplitude * band_limited_noise(grid, rng, modes)
        v = solenoidal_noise(grid, rng, modes, v_amplitude) if v_amplitude else zero_v
        return SimState(grid, v, AngleField(theta, winding))
    raise ValueError(f"unknown preset {preset!r}")
