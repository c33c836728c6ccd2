import numpy as np
import pytest

from nematic2d import spectral as sp
from nematic2d.material import derive_params

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def trig_field(grid, rng, modes=2, amp=1.0):
    """Random trigonometric polynomial with |m_i| <= modes, max |f| = amp."""
    x1, x2 = grid.coords
    f = np.zeros(grid.shape)
    for m1 in range(-modes, modes + 1):
        for m2 in range(-modes, modes + 1):
            a, b = rng.normal(size=2)
            arg = 2 * np.pi * (m1 * x1 + m2 * x2)
            f += a * np.cos(arg) + b * np.sin(arg)
    return amp * f / np.max(np.abs(f))


def solenoidal(grid, rng, modes=2, amp=1.0):
    psi = trig_field(grid, rng, modes)
    v = np.stack([sp.derivative(grid, psi, 2), -sp.derivative(grid, psi, 1)])
    return amp * v / np.max(np.abs(v))


def random_admissible(rng):
    """Leslie coefficients satisfying Parodi, gamma1 > 0 and the dissipation inequalities."""
    a2, a5 = rng.normal(size=2)
    a3 = a2 + rng.uniform(0.1, 3.0)
    a6 = a5 + a2 + a3
    g1, g2 = a3 - a2, a5 - a6
    b3 = a5 + a6 - g2**2 / g1
    a4 = max(0.0, -b3 / 2) + rng.uniform(0.0, 2.0)
    a1 = -2 * a4 - b3 - g2**2 / g1 + rng.uniform(0.0, 2.0)
    return (a1, a2, a3, a4, a5, a6)


# ---------------------------------------------------------- FD oracles
# Centred differences with one Richardson step (fourth order), built only from
# np.roll so they share nothing with the spectral code under test.

def _fd1(f, axis, h):
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)


def _fd2(f, axis, h):
    return (np.roll(f, -1, axis) - 2 * f + np.roll(f, 1, axis)) / h**2


def fd_derivative(f_fine, axis, order, h):
    """Richardson-extrapolated derivative on the fine grid; returns fine-grid values."""
    op = _fd1 if order == 1 else _fd2
    fine = op(f_fine, axis, h)
    coarse = op(f_fine[::2, ::2], axis, 2 * h)
    return (4 * fine[::2, ::2] - coarse) / 3


def fd_laplacian(f_fine, h):
    return fd_derivative(f_fine, 0, 2, h) + fd_derivative(f_fine, 1, 2, h)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def preset_a():
    return derive_params((0.0, -1.0, 0.0, 1.0, 1.0, 0.0), 0.5, 1.0, np.sqrt(20.0))
