"""Long-time behaviour: distance to a steady state, decay fits and limit detection."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import spectral as sp
from .director import AngleField
from .dynamics import SimState, aligned_angle_difference
from .steady import SteadySolution

FIT_BAND = (1e-8, 1e-1)
MIN_SAMPLES = 8
LIMIT_EH = 1e-10


class WindingMismatch(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


class NonPositiveDistances(ValueError):
    pass


@dataclass(frozen=True)
class DecayFit:
    window: tuple[float, float]
    model: str
    rate: float
    r_squared: float
    samples_used: int
    prefactor: float = 1.0

    def report(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        if self.model == "exponential":
            out["kappa"] = self.rate
        else:
            out["exponent"] = self.rate
        return out


def _reference_angle(ref) -> AngleField:
    if isinstance(ref, SteadySolution):
        return ref.theta()
    return ref


def distance_to_steady(s: SimState, ref, p=None) -> float:
    """||v||_H1 + ||theta - theta_inf - k pi||_H2 with k from the mean difference.

    ``ref`` is a :class:`SteadySolution` (theta_inf = psi/2) or an AngleField.
    ``p`` is accepted for signature symmetry with the other diagnostics.
    """
    theta_inf = _reference_angle(ref)
    if s.theta.winding != theta_inf.winding:
        raise WindingMismatch(f"state winding {s.theta.winding} differs from reference {theta_inf.winding}")
    if theta_inf.remainder.shape != s.grid.shape:
        raise WindingMismatch("state and reference live on different grids")
    diff = aligned_angle_difference(s.grid, s.theta, theta_inf)
    return sp.sobolev_norm(s.grid, s.v, 1) + sp.sobolev_norm(s.grid, diff, 2)


def fit_decay(t, dist, model: str = "exponential", band=FIT_BAND) -> DecayFit:
    """Least-squares fit of log(dist) against t or log(1 + t) inside ``band``."""
    if model not in ("exponential", "algebraic"):
        raise ValueError(f"unknown decay model {model!r}")
    t = np.asarray(t, dtype=float)
    dist = np.asarray(dist, dtype=float)
    if t.shape != dist.shape or t.ndim != 1:
        raise ValueError("t and dist must be 1-D arrays of equal length")
    if np.any(~np.isfinite(dist)) or np.any(dist <= 0):
        raise NonPositiveDistances("distances must be finite and positive")
    lo, hi = band
    sel = (dist >= lo) & (dist <= hi)
    n = int(np.count_nonzero(sel))
    if n < MIN_SAMPLES:
        raise InsufficientSamples(f"{n} samples inside [{lo:g}, {hi:g}], need {MIN_SAMPLES}")
    ts, y = t[sel], np.log(dist[sel])
    x = ts if model == "exponential" else np.log1p(ts)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(
        window=(float(ts.min()), float(ts.max())),
        model=model,
        rate=float(-slope),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        samples_used=n,
        prefactor=float(np.exp(intercept)),
    )


def compare_models(t, dist, band=FIT_BAND) -> dict:
    """Fit both models and name the one with the larger R^2."""
    fits = {m: fit_decay(t, dist, m, band) for m in ("exponential", "algebraic")}
    best = max(fits, key=lambda m: fits[m].r_squared)
    return {"best": best, **{m: f.report() for m, f in fits.items()}}


@dataclass(frozen=True)
class LimitStatus:
    converged: bool
    residual: float

    def __str__(self):
        tag = "converged" if self.converged else "not_converged"
        return f"{tag}({self.residual:.3g})"


def detect_limit(energy_eh, slack: float = 1e-14) -> LimitStatus:
    """Converged when the final E_H is below 1e-10 and E_H did not grow over the
    last tenth of the samples (at least two samples; ``slack`` absorbs rounding).
    """
    eh = np.asarray([getattr(r, "energy_EH", r) for r in energy_eh], dtype=float)
    if eh.size == 0:
        raise ValueError("diagnostics are empty")
    final = float(eh[-1])
    tail = eh[-max(2, eh.size // 10):]
    monotone = bool(np.all(np.diff(tail) <= slack))
    return LimitStatus(final < LIMIT_EH and monotone, final)
