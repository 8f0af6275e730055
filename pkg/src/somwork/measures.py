"""
Work-source quality measures.

Two complementary views of how "work-like" the energy exchanged with a
subsystem is:

* purity based: the oscillator purity stays close to 1 while the
  factorization approximation, and with it the work-source picture, holds.
  The breakdown time t* is the first time the purity drops to the z-SOM
  bound (1 + exp(-8 xi)) / 2;
* flux based: r = |W_dot| / (|W_dot| + |Q_dot|) per instant and
  R = W / (W + Q) for absolute time-integrated fluxes W, Q.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import TaintedTrajectoryError
from .lembas import FluxSeries
from .models import ModelKind, build_hamiltonian, initial_state
from .propagation import evolve

#: Default relative tolerance for the rectangle/trapezoid and step-halving gates.
QUADRATURE_TOL = 1e-3


class PuritySeries(NamedTuple):
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class QualityReport:
    """Flux-based quality of a work source over ``[t0, t1]``.

    ``r_series`` holds NaN where both fluxes vanish. ``R_running[k]`` is
    R(times[k], t0) (NaN at t0 and while no energy has been exchanged).
    ``R`` is None when no energy is exchanged over the whole window.
    """

    t0: float
    t1: float
    times: np.ndarray
    r_series: np.ndarray
    R: float | None
    W_abs: float
    Q_abs: float
    W_signed: np.ndarray
    Q_signed: np.ndarray
    R_running: np.ndarray
    R_trapezoid: float | None
    t_star: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def crosscheck_gap(self):
        """Relative gap between rectangle-rule and trapezoid-rule R."""
        if self.R is None or self.R_trapezoid is None:
            return None
        return abs(self.R - self.R_trapezoid) / max(abs(self.R), 1e-300)

    def quadrature_ok(self, tol=QUADRATURE_TOL):
        gap = self.crosscheck_gap
        return gap is None or gap < tol


def instantaneous_ratio(w_dot, q_dot):
    """|W_dot| / (|W_dot| + |Q_dot|), or None when both vanish."""
    w, q = abs(w_dot), abs(q_dot)
    if w + q == 0:
        return None
    return w / (w + q)


def _as_series(fluxes):
    if isinstance(fluxes, FluxSeries):
        return fluxes
    return FluxSeries.from_samples(fluxes)


def _window(series, t0, t1):
    """Indices of samples in [t0, t1]; validates grid and taint status."""
    t = series.times
    if len(t) < 2:
        raise ValueError("need at least two flux samples")
    dt = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ValueError("flux samples are not on a uniform grid")
    eps = 1e-9 * dt
    if t0 < t[0] - eps or t1 > t[-1] + eps or not t1 > t0:
        raise ValueError(f"window [{t0}, {t1}] not covered by samples [{t[0]}, {t[-1]}]")
    idx = np.flatnonzero((t >= t0 - eps) & (t <= t1 + eps))
    if len(idx) < 2:
        raise ValueError("window contains fewer than two samples")
    tainted = series.first_tainted_time
    if tainted is not None and tainted <= t1 + eps:
        raise TaintedTrajectoryError(
            f"flux samples tainted by Fock truncation from t={tainted:g}", tainted
        )
    return idx, float(dt)


def _cumulative(values, dt):
    """Left-endpoint rectangle rule, cumulative: out[k] = dt * sum(values[:k])."""
    out = np.zeros(len(values))
    out[1:] = np.cumsum(values[:-1]) * dt
    return out


def signed_integrals(fluxes, t0, t1):
    """Cumulative W(t, t0) and Q(t, t0) along the grid points in [t0, t1]."""
    s = _as_series(fluxes)
    idx, dt = _window(s, t0, t1)
    return _cumulative(s.w_dot[idx], dt), _cumulative(s.q_dot[idx], dt)


def weighted_ratio(r_series, w_dot, q_dot):
    """R as the flux-weighted average of r over the samples (left rectangle rule)."""
    weight = np.abs(w_dot[:-1]) + np.abs(q_dot[:-1])
    total = weight.sum()
    if total == 0:
        return None
    r = np.nan_to_num(r_series[:-1], nan=0.0)
    return float(np.sum(r * weight) / total)


def integral_quality(fluxes, t0, t1, t_star=None):
    """Integrated quality R(t1, t0) = W / (W + Q) from sampled fluxes.

    W and Q integrate |W_dot| and |Q_dot| with the left-endpoint rectangle
    rule over the grid points in ``[t0, t1]``; the trapezoid rule result is
    kept as a crosscheck.

    Raises
    ------
    TaintedTrajectoryError
        If any sample up to ``t1`` is tainted by Fock truncation.
    """
    s = _as_series(fluxes)
    idx, dt = _window(s, t0, t1)
    w, q = s.w_dot[idx], s.q_dot[idx]
    aw, aq = np.abs(w), np.abs(q)
    denom = aw + aq
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, aw / np.where(denom > 0, denom, 1.0), np.nan)
    cw, cq = _cumulative(aw, dt), _cumulative(aq, dt)
    with np.errstate(invalid="ignore", divide="ignore"):
        running = np.where(cw + cq > 0, cw / np.where(cw + cq > 0, cw + cq, 1.0), np.nan)
    W, Q = float(cw[-1]), float(cq[-1])
    R = W / (W + Q) if W + Q > 0 else None
    tw, tq = float(np.trapezoid(aw, dx=dt)), float(np.trapezoid(aq, dx=dt))
    R_trap = tw / (tw + tq) if tw + tq > 0 else None
    return QualityReport(
        t0=float(s.times[idx[0]]),
        t1=float(s.times[idx[-1]]),
        times=s.times[idx],
        r_series=r,
        R=R,
        W_abs=W,
        Q_abs=Q,
        W_signed=_cumulative(w, dt),
        Q_signed=_cumulative(q, dt),
        R_running=running,
        R_trapezoid=R_trap,
        t_star=t_star,
    )


def min_purity_bound(xi):
    """Minimum oscillator purity (1 + exp(-8 xi)) / 2 of the z-SOM over t and c."""
    if xi < 0:
        raise ValueError("xi must be non-negative")
    return 0.5 * (1.0 + np.exp(-8.0 * xi))


def breakdown_time(purity_series, threshold):
    """First time the purity falls to ``threshold``, or None.

    ``purity_series`` is a :class:`PuritySeries` or a ``(times, values)``
    pair. The crossing is located by linear interpolation between the two
    bracketing samples; a series starting at or below the threshold crosses
    at its first sample.
    """
    times, values = (np.asarray(a, dtype=float) for a in purity_series)
    below = np.flatnonzero(values <= threshold)
    if below.size == 0:
        return None
    i = below[0]
    if i == 0:
        return float(times[0])
    p0, p1 = values[i - 1], values[i]
    frac = (p0 - threshold) / (p0 - p1)
    return float(times[i - 1] + frac * (times[i] - times[i - 1]))


class RwaComparison(NamedTuple):
    times: np.ndarray
    exact: np.ndarray
    rwa: np.ndarray
    first_tainted_time: float | None

    @property
    def deviation(self):
        return np.abs(self.exact - self.rwa)

    @property
    def relative(self):
        return relative_deviation(self.exact, self.rwa)


def relative_deviation(reference, approx):
    """|reference - approx| / |reference| per sample."""
    reference = np.asarray(reference, dtype=float)
    return np.abs(reference - np.asarray(approx, dtype=float)) / np.abs(reference)


def rwa_comparison(params, grid, cutoff):
    """Oscillator purity under exact xz-SOM and resonant JCM dynamics."""
    rho0 = initial_state(params, cutoff)
    exact = evolve(rho0, build_hamiltonian(params, ModelKind.XZ_SOM, cutoff), grid)
    rwa = evolve(rho0, build_hamiltonian(params, ModelKind.JCM_RWA, cutoff), grid)
    tainted = [t for t in (exact.first_tainted_time(), rwa.first_tainted_time()) if t is not None]
    return RwaComparison(
        exact.times, exact.purities()[:, 1], rwa.purities()[:, 1], min(tainted) if tainted else None
    )


def rwa_deviation(params, grid, cutoff):
    """|P_exact(t) - P_rwa(t)| of the oscillator purity per sample."""
    return rwa_comparison(params, grid, cutoff).deviation
