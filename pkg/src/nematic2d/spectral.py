"""Fourier pseudospectral operators on the unit torus [0, 1)^2.

Fields are plain numpy arrays sampled at ``(i*h, j*h)``; axis 0 is x1 and
axis 1 is x2.  Vector fields carry a leading component axis of length 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


class GridError(ValueError):
    """Raised for invalid grid sizes or fields that do not match a grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform ``n x n`` periodic grid on the unit square."""

    n: int
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise GridError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 16 or self.n % 2:
            raise GridError(f"grid size must be even and >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.h
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        x1.setflags(write=False)
        x2.setflags(write=False)
        return x1, x2

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer mode numbers on the rfft2 half-spectrum, shape (n, n//2+1)."""
        m1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        m2 = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        M1, M2 = np.meshgrid(m1, m2, indexing="ij")
        return M1, M2

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers 2*pi*m used for even-order derivatives."""
        M1, M2 = self.modes
        return TWO_PI * M1, TWO_PI * M2

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist row/column zeroed, for odd derivatives."""
        k1, k2 = (a.copy() for a in self.k)
        M1, M2 = self.modes
        k1[np.abs(M1) == self.n // 2] = 0.0
        k2[np.abs(M2) == self.n // 2] = 0.0
        return k1, k2

    @cached_property
    def k2(self) -> np.ndarray:
        k1, k2 = self.k
        return k1**2 + k2**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        out = np.zeros_like(self.k2)
        nz = self.k2 > 0
        out[nz] = 1.0 / self.k2[nz]
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        M1, M2 = self.modes
        cut = self.n / 3.0
        return (np.abs(M1) <= cut) & (np.abs(M2) <= cut)

    def check(self, f: np.ndarray, components: int | None = None) -> np.ndarray:
        """Validate that ``f`` is a finite field on this grid."""
        f = np.asarray(f, dtype=float)
        expected = self.shape if components is None else (components, *self.shape)
        if f.shape != expected:
            raise GridError(f"field shape {f.shape} does not match grid {expected}")
        if not np.isfinite(f).all():
            raise GridError("field contains NaN or Inf")
        return f


def fft(f: np.ndarray) -> np.ndarray:
    return np.fft.rfft2(f, axes=(-2, -1))


def ifft(fh: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft2(fh, s=(n, n), axes=(-2, -1))


def derivative(grid: Grid, f: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Spectral derivative of order 1 or 2 along ``axis`` (1 for x1, 2 for x2)."""
    f = grid.check(f)
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    if order == 1:
        kk = 1j * grid.k_odd[axis - 1]
    elif order == 2:
        kk = -grid.k[axis - 1] ** 2
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return ifft(kk * fft(f), grid.n)


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    fh = fft(grid.check(f))
    k1, k2 = grid.k_odd
    return np.stack([ifft(1j * k1 * fh, grid.n), ifft(1j * k2 * fh, grid.n)])


def mixed_derivative(grid: Grid, f: np.ndarray) -> np.ndarray:
    """d^2 f / dx1 dx2."""
    k1, k2 = grid.k_odd
    return ifft(-k1 * k2 * fft(grid.check(f)), grid.n)


def divergence(grid: Grid, u: np.ndarray) -> np.ndarray:
    u = grid.check(u, components=2)
    uh = fft(u)
    k1, k2 = grid.k_odd
    return ifft(1j * (k1 * uh[0] + k2 * uh[1]), grid.n)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Spectral Laplacian; also accepts a stacked vector field."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 3:
        grid.check(f, components=f.shape[0])
    else:
        grid.check(f)
    return ifft(-grid.k2 * fft(f), grid.n)


def inverse_laplacian_zero_mean(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero-mean ``g`` with ``laplacian(g) == f - mean(f)``."""
    return ifft(-grid.inv_k2 * fft(grid.check(f)), grid.n)


def leray_project(grid: Grid, u: np.ndarray) -> np.ndarray:
    """L2-orthogonal projection onto divergence-free fields."""
    u = grid.check(u, components=2)
    return ifft(_leray_hat(grid, fft(u)), grid.n)


def _leray_hat(grid: Grid, uh: np.ndarray) -> np.ndarray:
    k1, k2 = grid.k_odd
    kk = k1**2 + k2**2
    inv = np.zeros_like(kk)
    nz = kk > 0
    inv[nz] = 1.0 / kk[nz]
    kdotu = (k1 * uh[0] + k2 * uh[1]) * inv
    return np.stack([uh[0] - k1 * kdotu, uh[1] - k2 * kdotu])


def dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero every mode with |m_j| > n/3 (works on scalar or stacked fields)."""
    f = np.asarray(f, dtype=float)
    if f.shape[-2:] != grid.shape:
        raise GridError(f"field shape {f.shape} does not match grid {grid.shape}")
    return ifft(grid.dealias_mask * fft(f), grid.n)


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Riemann-sum quadrature h^2 * sum(f)."""
    return float(np.sum(f)) * grid.h**2


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    return integrate(grid, np.asarray(f) * np.asarray(g))


def sobolev_norm(grid: Grid, f: np.ndarray, order: int = 0) -> float:
    """H^m norm: sqrt(sum over multi-indices |alpha| <= m of ||D^alpha f||^2).

    ``f`` may be a scalar field or a stacked vector field (components summed).
    """
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported Sobolev order {order}")
    f = np.asarray(f, dtype=float)
    comps = f if f.ndim == 3 else f[None]
    total = 0.0
    for c in comps:
        c = grid.check(c)
        total += inner(grid, c, c)
        if order >= 1:
            g = gradient(grid, c)
            total += inner(grid, g[0], g[0]) + inner(grid, g[1], g[1])
        if order >= 2:
            d11 = derivative(grid, c, 1, 2)
            d22 = derivative(grid, c, 2, 2)
            d12 = mixed_derivative(grid, c)
            total += inner(grid, d11, d11) + inner(grid, d22, d22) + inner(grid, d12, d12)
    return float(np.sqrt(total))


def shift(grid: Grid, f: np.ndarray, w: tuple[float, float]) -> np.ndarray:
    """Fourier-interpolated translate ``f(x + w)`` of a periodic field."""
    k1, k2 = grid.k_odd
    phase = np.exp(1j * (k1 * w[0] + k2 * w[1]))
    return ifft(phase * fft(grid.check(f)), grid.n)


# Twisted (half-integer) Fourier basis for fields with f(x+e_i) = (-1)^{p_i} f(x).

def _twist(grid: Grid, parity: tuple[int, int]) -> np.ndarray:
    x1, x2 = grid.coords
    return np.exp(1j * np.pi * (parity[0] * x1 + parity[1] * x2))


def twisted_derivatives(grid: Grid, f: np.ndarray, parity: tuple[int, int]):
    """Gradient and Laplacian of a (possibly antiperiodic) field.

    ``parity[i]`` is 1 when ``f`` flips sign across the seam in direction i.
    Returns ``(grad, lap)`` with ``grad`` of shape (2, n, n).
    """
    f = grid.check(f)
    p = (int(parity[0]) % 2, int(parity[1]) % 2)
    if p == (0, 0):
        return gradient(grid, f), laplacian(grid, f)
    tw = _twist(grid, p)
    gh = np.fft.fft2(f * np.conj(tw))
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    M1, M2 = np.meshgrid(m, m, indexing="ij")
    K1 = TWO_PI * M1 + np.pi * p[0]
    K2 = TWO_PI * M2 + np.pi * p[1]
    # Shifted wavenumbers are symmetric about zero; only untwisted axes have a Nyquist mode.
    K1o = np.where((p[0] == 0) & (np.abs(M1) == grid.n // 2), 0.0, K1)
    K2o = np.where((p[1] == 0) & (np.abs(M2) == grid.n // 2), 0.0, K2)
    d1 = np.real(np.fft.ifft2(1j * K1o * gh) * tw)
    d2 = np.real(np.fft.ifft2(1j * K2o * gh) * tw)
    lap = np.real(np.fft.ifft2(-(K1**2 + K2**2) * gh) * tw)
    return np.stack([d1, d2]), lap
