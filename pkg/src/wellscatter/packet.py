"""Spectral wave-packet check of the stationary-phase delay.

A Gaussian spectrum is pushed through the exact transfer function F(omega)
and resynthesised in time. The shift of the envelope maximum between the
well entrance (x=0) and exit (x=a, where F carries the accumulated phase)
is then compared with the phase time at the centre frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dispersion import DispersionModel
from .errors import EvanescentRegimeError, PeakRefinementError
from .phasetime import FrequencyGrid
from .scattering import WellScatterer, transmission_coefficient

EDGE_DECAY = 1e-6
_CHUNK = 512


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet; ``sigma_f`` is the standard deviation of the amplitude spectrum.

    Unset ``grid`` and ``time_window`` are derived from ``sigma_f``: the grid
    spans +-6 sigma and the window is wide enough for the envelope to fall
    far below `EDGE_DECAY` at its edges.
    """

    f_center: float
    sigma_f: float
    grid: Optional[FrequencyGrid] = None
    time_window: Optional[float] = None
    time_points: int = 4001
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma_f > 0:
            raise ValueError("sigma_f must be positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.grid is None:
            object.__setattr__(
                self,
                "grid",
                FrequencyGrid(self.f_center - 6 * self.sigma_f, self.f_center + 6 * self.sigma_f, 2001),
            )
        if self.time_window is None:
            object.__setattr__(self, "time_window", 16.0 / (2 * math.pi * self.sigma_f))
        g = self.grid
        if g.f_min > self.f_center - 5 * self.sigma_f or g.f_max < self.f_center + 5 * self.sigma_f:
            raise ValueError("frequency grid must cover at least +-5 sigma_f around f_center")
        if self.time_points < 3:
            raise ValueError("time_points must be at least 3")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(-self.time_window / 2, self.time_window / 2, self.time_points)

    def spectrum(self) -> np.ndarray:
        f = self.grid.frequencies
        return self.amplitude * np.exp(-0.5 * ((f - self.f_center) / self.sigma_f) ** 2)


@dataclass(frozen=True)
class TimeTrace:
    t: np.ndarray
    envelope: np.ndarray

    @property
    def peak_time(self) -> float:
        return _refine_peak(self.t, self.envelope)

    def energy(self) -> float:
        dt = self.t[1] - self.t[0]
        return float(np.sum(self.envelope**2) * dt)


def _refine_peak(t, y):
    t = np.asarray(t)
    y = np.asarray(y)
    i = int(np.argmax(y))
    top = y[i]
    inner = (y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] >= 0.5 * top)
    candidates = np.flatnonzero(inner) + 1
    if candidates.size > 1:
        # a single plateau of adjacent samples is just as ambiguous as two peaks
        raise PeakRefinementError(
            f"envelope has {candidates.size} candidate maxima", candidates=t[candidates]
        )
    if i == 0 or i == y.size - 1:
        raise PeakRefinementError("envelope maximum lies on the window edge", candidates=[t[i]])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curvature = y0 - 2 * y1 + y2
    if not curvature < 0:
        raise PeakRefinementError("flat envelope around the maximum", candidates=[t[i]])
    offset = 0.5 * (y0 - y2) / curvature
    return float(t[i] + offset * (t[i + 1] - t[i]))


def _synthesize(t, f, f_center, weights):
    # baseband sum over the one-sided spectrum; its modulus is the envelope
    df = f[1] - f[0]
    out = np.empty(t.size, dtype=complex)
    phase_rate = -2j * math.pi * (f - f_center)
    for start in range(0, t.size, _CHUNK):
        chunk = t[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.exp(np.outer(chunk, phase_rate)) @ weights * df
    return out


def synthesize_and_transmit(spec: PacketSpec, model: DispersionModel, a):
    """Incident (at x=0) and transmitted (at x=a) envelope traces.

    Raises
    ------
    EvanescentRegimeError
        If the packet spectrum reaches down to the outer cutoff within 5 sigma.
    """
    f = spec.grid.frequencies
    f_cut = model.omega_min / (2 * math.pi)
    if spec.f_center - 5 * spec.sigma_f <= f_cut or f[0] <= f_cut:
        raise EvanescentRegimeError(
            f"packet spectrum extends below the cutoff {f_cut:.6g} Hz"
        )
    k, kp = model.wavenumbers(2 * math.pi * f)
    F = transmission_coefficient(WellScatterer(k, kp, a))
    X = spec.spectrum().astype(complex)
    t = spec.times
    incident = np.abs(_synthesize(t, f, spec.f_center, X))
    transmitted = np.abs(_synthesize(t, f, spec.f_center, X * F))
    for name, env in (("incident", incident), ("transmitted", transmitted)):
        edge = max(env[0], env[-1])
        if edge > EDGE_DECAY * env.max():
            raise ValueError(
                f"{name} envelope does not decay below {EDGE_DECAY:g} of its peak "
                "inside the time window; widen time_window"
            )
    return TimeTrace(t, incident), TimeTrace(t, transmitted)


def spectral_energy_ratio(spec: PacketSpec, model: DispersionModel, a) -> float:
    """Fraction of the spectral energy passed by the well, sum |F X|^2 / sum |X|^2."""
    k, kp = model.wavenumbers(2 * math.pi * spec.grid.frequencies)
    F = transmission_coefficient(WellScatterer(k, kp, a))
    X2 = spec.spectrum() ** 2
    return float(np.sum(np.abs(F) ** 2 * X2) / np.sum(X2))


def peak_delay(incident: TimeTrace, transmitted: TimeTrace) -> float:
    """Time between the refined envelope maxima of two traces on one time grid."""
    if incident.t.shape != transmitted.t.shape or not np.array_equal(incident.t, transmitted.t):
        raise ValueError("traces must share the same time grid")
    return transmitted.peak_time - incident.peak_time
