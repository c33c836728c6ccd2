"""Leslie coefficients, derived constants and the viscous dissipation form."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXACT_TOL = 1e-12


class MaterialError(ValueError):
    """Base class for inadmissible coefficient sets."""


class ParodiViolation(MaterialError):
    pass


class NonPositiveGamma1(MaterialError):
    pass


class DissipationViolation(MaterialError):
    pass


class RangeError(MaterialError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    gamma: float
    reynolds: float
    h_field: float

    @property
    def alphas(self) -> tuple[float, ...]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    @property
    def gamma1(self) -> float:
        return self.alpha3 - self.alpha2

    @property
    def gamma2(self) -> float:
        return self.alpha5 - self.alpha6

    @property
    def mu1(self) -> float:
        return 1.0 / self.gamma1

    @property
    def mu2(self) -> float:
        return self.gamma2 / self.gamma1

    @property
    def beta1(self) -> float:
        return self.alpha1 + self.gamma2**2 / self.gamma1

    @property
    def beta2(self) -> float:
        return self.alpha4

    @property
    def beta3(self) -> float:
        return self.alpha5 + self.alpha6 - self.gamma2**2 / self.gamma1

    @property
    def h_squared(self) -> float:
        return self.h_field**2

    @property
    def viscosity(self) -> float:
        """Newtonian viscosity gamma/Re."""
        return self.gamma / self.reynolds

    @property
    def coupling(self) -> float:
        """Elastic/Leslie stress weight (1 - gamma)/Re."""
        return (1.0 - self.gamma) / self.reynolds

    def derived(self) -> dict[str, float]:
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "beta3": self.beta3,
        }


def check_relations(alphas, gamma, reynolds, h_field) -> list[tuple[str, bool, str]]:
    """Evaluate every admissibility relation without raising.

    Returns ``(name, passed, detail)`` triples in a fixed order.
    """
    a1, a2, a3, a4, a5, a6 = (float(a) for a in alphas)
    out = []
    finite = all(math.isfinite(x) for x in (a1, a2, a3, a4, a5, a6, gamma, reynolds, h_field))
    out.append(("finite", finite, "all inputs finite"))
    lhs, rhs = a2 + a3, a6 - a5
    out.append(("parodi", abs(lhs - rhs) < EXACT_TOL,
                f"alpha2+alpha3 = {lhs:g}, alpha6-alpha5 = {rhs:g}"))
    g1 = a3 - a2
    out.append(("gamma1_positive", g1 > 0, f"gamma1 = alpha3-alpha2 = {g1:g}"))
    if g1 > 0:
        g2 = a5 - a6
        b1 = a1 + g2**2 / g1
        b2 = a4
        b3 = a5 + a6 - g2**2 / g1
        s1, s2 = b1 + 2 * b2 + b3, 2 * b2 + b3
        out.append(("dissipation", s1 >= -EXACT_TOL and s2 >= -EXACT_TOL,
                    f"beta1+2beta2+beta3 = {s1:g}, 2beta2+beta3 = {s2:g}"))
    else:
        out.append(("dissipation", False, "undefined without gamma1 > 0"))
    out.append(("gamma_range", 0.0 < gamma < 1.0, f"gamma = {gamma:g} must lie in (0, 1)"))
    out.append(("reynolds_range", reynolds > 0.0, f"Re = {reynolds:g} must be positive"))
    out.append(("field_range", h_field >= 0.0, f"H = {h_field:g} must be non-negative"))
    return out


_ERRORS = {
    "finite": RangeError,
    "parodi": ParodiViolation,
    "gamma1_positive": NonPositiveGamma1,
    "dissipation": DissipationViolation,
    "gamma_range": RangeError,
    "reynolds_range": RangeError,
    "field_range": RangeError,
}


def derive_params(alphas, gamma: float, reynolds: float, h_field: float) -> MaterialParams:
    """Build validated :class:`MaterialParams` from six Leslie coefficients.

    Raises the first violated relation's error type with a message naming it.
    """
    alphas = tuple(float(a) for a in alphas)
    if len(alphas) != 6:
        raise ValueError(f"expected 6 Leslie coefficients, got {len(alphas)}")
    for name, ok, detail in check_relations(alphas, gamma, reynolds, h_field):
        if not ok:
            raise _ERRORS[name](f"{name} relation violated: {detail}")
    return MaterialParams(*alphas, float(gamma), float(reynolds), float(h_field))


def dissipation_quadratic(D: np.ndarray, d: np.ndarray, p: MaterialParams) -> float:
    """beta1 (d d : D)^2 + beta2 D:D + beta3 |D d|^2 for trace-free symmetric D."""
    D = np.asarray(D, dtype=float)
    d = np.asarray(d, dtype=float)
    if D.shape != (2, 2) or d.shape != (2,):
        raise ValueError("expected a 2x2 matrix and a 2-vector")
    if abs(D[0, 1] - D[1, 0]) > EXACT_TOL or abs(np.trace(D)) > EXACT_TOL:
        raise ValueError("D must be symmetric and trace free")
    if abs(np.linalg.norm(d) - 1.0) > EXACT_TOL:
        raise ValueError("d must be a unit vector")
    ddD = d @ D @ d
    Dd = D @ d
    return float(p.beta1 * ddD**2 + p.beta2 * np.sum(D * D) + p.beta3 * Dd @ Dd)


# Presets used by the CLI and tests.
PRESET_A = dict(alphas=(0.0, -1.0, 0.0, 1.0, 1.0, 0.0), gamma=0.5, reynolds=1.0)
PRESET_DECOUPLED = dict(alphas=(0.0, -0.5, 0.5, 1.0, 0.0, 0.0), gamma=0.5, reynolds=1.0)
