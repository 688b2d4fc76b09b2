"""Phase unwrapping, phase time and negative-phase-time maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionModel, EMWaveguide, QMParticle, QuantumWellSpec
from .errors import UnwrapAmbiguityError
from .scattering import WellScatterer, transmission_coefficient

#: cells with |tau| below this are treated as zero (nonnegative)
SIGN_THRESHOLD = 1e-15


@dataclass(frozen=True)
class FrequencyGrid:
    f_min: float
    f_max: float
    points: int = 2001

    def __post_init__(self):
        if self.points < 3:
            raise ValueError(f"a frequency grid needs at least 3 points, got {self.points}")
        if not self.f_max > self.f_min:
            raise ValueError(f"f_max must exceed f_min ({self.f_min!r} .. {self.f_max!r})")

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.points)

    def doubled(self) -> "FrequencyGrid":
        # keeps every existing sample and adds the midpoints
        return FrequencyGrid(self.f_min, self.f_max, 2 * self.points - 1)


@dataclass(frozen=True)
class PhaseTimeProfile:
    freq: np.ndarray
    phase_unwrapped: np.ndarray
    tau: np.ndarray
    method: str

    def __post_init__(self):
        if self.method not in ("analytic", "numeric", "measured"):
            raise ValueError(f"unknown profile method {self.method!r}")


@dataclass(frozen=True)
class RegionMap:
    a_axis: np.ndarray
    f_axis: np.ndarray
    tau_value: np.ndarray  # shape (len(a_axis), len(f_axis))

    @property
    def negative(self) -> np.ndarray:
        return self.tau_value < -SIGN_THRESHOLD

    def column_has_negative(self, a: float) -> bool:
        """Whether the lattice row closest to width ``a`` holds any negative cell."""
        i = int(np.argmin(np.abs(self.a_axis - a)))
        return bool(self.negative[i].any())


def _as_frequencies(grid):
    if isinstance(grid, FrequencyGrid):
        return grid.frequencies
    f = np.asarray(grid, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise ValueError("need a 1-D frequency axis with at least 3 samples")
    if np.any(np.diff(f) <= 0):
        raise ValueError("frequency axis must be strictly increasing")
    return f


def unwrap_phase(phase):
    """Remove 2*pi jumps so that consecutive samples differ by less than pi.

    ``out[0] == phase[0]`` and ``out - phase`` is an exact multiple of 2*pi.
    A raw step of exactly pi cannot be resolved and raises
    `UnwrapAmbiguityError`.
    """
    phase = np.asarray(phase, dtype=float)
    if phase.size < 2:
        return phase.copy()
    step = np.diff(phase)
    wrapped = np.mod(step + math.pi, 2 * math.pi) - math.pi
    ambiguous = np.isclose(np.abs(wrapped), math.pi, rtol=0, atol=1e-12)
    if np.any(ambiguous):
        i = int(np.flatnonzero(ambiguous)[0])
        raise UnwrapAmbiguityError(
            f"phase step of pi between samples {i} and {i + 1}; "
            "sample the band more densely"
        )
    turns = np.round((wrapped - step) / (2 * math.pi))
    return phase + np.concatenate(([0.0], np.cumsum(turns))) * 2 * math.pi


def derivative(y, x):
    """First derivative of samples ``y`` on a (possibly nonuniform) axis ``x``.

    Five-point stencils, centred in the interior and shifted inward at the two
    samples nearest each end, so the result is fourth-order accurate
    everywhere. Axes with 3 or 4 samples fall back to second order.
    ``y`` may carry leading batch dimensions; differentiation is along the last.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 samples to differentiate")
    if n < 5:
        return np.gradient(y, x, axis=-1, edge_order=2)
    idx = np.clip(np.arange(n) - 2, 0, n - 5)[:, None] + np.arange(5)
    dx = x[idx] - x[:, None]
    h = np.max(np.abs(dx), axis=1)
    t = dx / h[:, None]
    V = t[:, None, :] ** np.arange(5)[None, :, None]
    rhs = np.zeros((n, 5, 1))
    rhs[:, 1, 0] = 1.0
    w = np.linalg.solve(V, rhs)[..., 0]
    # weights sum to zero only up to rounding; differencing first keeps constants exact
    y = y - y[..., :1]
    return np.sum(w * y[..., idx], axis=-1) / h


def phase_time_analytic(model: EMWaveguide, f, a):
    """Closed-form phase time of a dielectric-filled guide section (seconds).

    Broadcasts over ``f`` and ``a``; at ``a == 0`` the removable singularity
    of ``sin(2k'a)/(k'a)`` takes its limit value 2 and the result is exactly 0.
    """
    if not isinstance(model, EMWaveguide):
        raise TypeError("the closed-form phase time exists only for the waveguide model")
    omega = 2 * math.pi * np.asarray(f, dtype=float)
    a = np.asarray(a, dtype=float)
    k, kp = model.wavenumbers(omega)
    n2, c2 = model.n**2, model.constants.c**2
    k2, kp2 = k**2, kp**2
    k0sq = kp2 - n2 * k2
    theta = kp * a
    sin2_over = 2 * np.sinc(2 * theta / math.pi)  # sin(2 k'a) / (k'a)
    num = 2 * n2 * k2 * (kp2 + k2) - (kp2 - k2) * k0sq * sin2_over
    den = 4 * k2 * kp2 + (kp2 - k2) ** 2 * np.sin(theta) ** 2
    return a * omega / (c2 * k) * num / den


def transmitted_phase(model: DispersionModel, f, a):
    """Unwrapped phase of the transmission coefficient over a frequency axis."""
    k, kp = model.wavenumbers(2 * math.pi * np.asarray(f, dtype=float))
    return unwrap_phase(np.angle(transmission_coefficient(WellScatterer(k, kp, a))))


def phase_time_numeric(model: DispersionModel, grid, a) -> PhaseTimeProfile:
    """Phase time from differentiating the unwrapped phase of F.

    The phase is differentiated against the outer wave number ``k`` and
    multiplied by the analytic ``dk/domega``. Doing so removes the
    square-root branch point at cutoff from the differenced quantity. Works
    for both dispersion models; it is the only phase-time path for particles.
    """
    f = _as_frequencies(grid)
    omega = 2 * math.pi * f
    k, kp = model.wavenumbers(omega)
    phase = unwrap_phase(np.angle(transmission_coefficient(WellScatterer(k, kp, a))))
    tau = derivative(phase, k) * model.dk_domega(omega)[0]
    return PhaseTimeProfile(freq=f, phase_unwrapped=phase, tau=tau, method="numeric")


def phase_time_profile_analytic(model: EMWaveguide, grid, a) -> PhaseTimeProfile:
    f = _as_frequencies(grid)
    return PhaseTimeProfile(
        freq=f,
        phase_unwrapped=transmitted_phase(model, f, a),
        tau=phase_time_analytic(model, f, a),
        method="analytic",
    )


def region_map(model: EMWaveguide, a_range, f_range, resolution=(181, 341)) -> RegionMap:
    """Tabulate the closed-form phase time on an (a, f) lattice.

    ``a_range`` and ``f_range`` are ``(min, max)`` pairs in meters and Hz;
    ``resolution`` gives the number of lattice points along each.
    """
    na, nf = resolution
    (a_lo, a_hi), (f_lo, f_hi) = a_range, f_range
    if na < 1 or nf < 1 or a_hi < a_lo or f_hi < f_lo:
        raise ValueError("region map ranges and resolution must be nonempty")
    a_axis = np.linspace(a_lo, a_hi, na)
    f_axis = np.linspace(f_lo, f_hi, nf)
    tau = phase_time_analytic(model, f_axis[None, :], a_axis[:, None])
    return RegionMap(a_axis=a_axis, f_axis=f_axis, tau_value=tau)


def negative_band_edge(model: EMWaveguide, a, f_range, points=4001):
    """Highest sampled frequency in ``f_range`` with negative phase time, or None."""
    f = np.linspace(*f_range, points)
    neg = f[phase_time_analytic(model, f, a) < -SIGN_THRESHOLD]
    return float(neg.max()) if neg.size else None


@dataclass(frozen=True)
class HighFrequencyReport:
    freq: np.ndarray
    product_ratio: np.ndarray  # (a/tau)(omega/k) / (c/n)^2
    asymptote_ratio: np.ndarray
    residual: np.ndarray  # |product_ratio / asymptote_ratio - 1|
    rate: float  # log-log slope of residual against frequency

    @property
    def reaches_c_over_n_squared(self) -> bool:
        return bool(abs(self.product_ratio[-1] - 1) < 1e-2)


def highfreq_limit_check(
    model: EMWaveguide, a, f_start=10e9, factor=10 ** 0.5, steps=9
) -> HighFrequencyReport:
    """Follow v_gr * v_ph = (a/tau)(omega/k) up in frequency.

    For a frequency-independent index the closed-form phase time does not
    approach ``a (omega/k) n^2 / c^2``. Its large-k limit keeps the
    reflection term and gives
    ``(4n^2 + (n^2-1)^2 sin^2(k'a)) / (2(n^2+1))`` times ``(c/n)^2``, which
    equals ``(c/n)^2`` only when ``n == 1``. The report gives the ratio to
    ``(c/n)^2``, this asymptote, and how fast the ratio converges onto it.
    """
    if not a > 0:
        raise ValueError("well width must be positive")
    f = f_start * factor ** np.arange(steps)
    omega = 2 * math.pi * f
    k, kp = model.wavenumbers(omega)
    n2, c = model.n**2, model.constants.c
    tau = phase_time_analytic(model, f, a)
    product_ratio = (a / tau) * (omega / k) / (c**2 / n2)
    asymptote = (4 * n2 + (n2 - 1) ** 2 * np.sin(kp * a) ** 2) / (2 * (n2 + 1))
    residual = np.abs(product_ratio / asymptote - 1)
    good = residual > 0
    if good.sum() >= 2:
        rate = float(np.polyfit(np.log(f[good]), np.log(residual[good]), 1)[0])
    else:
        rate = float("-inf")
    return HighFrequencyReport(f, product_ratio, asymptote, residual, rate)


@dataclass(frozen=True)
class NegativeConditionReport:
    energies: np.ndarray  # J
    excess_fraction: np.ndarray  # (E - E0) / V0
    a_grid: np.ndarray
    tau: np.ndarray  # shape (len(energies), len(a_grid))
    has_negative: np.ndarray

    @property
    def highest_negative_fraction(self):
        if not self.has_negative.any():
            return None
        return float(self.excess_fraction[self.has_negative].max())

    def violations(self, limit=0.5, slack=0.0):
        """Excess fractions above ``limit + slack`` that still allow negative times."""
        mask = self.has_negative & (self.excess_fraction > limit + slack)
        return self.excess_fraction[mask]


def negative_condition_scan(spec: QuantumWellSpec, energy_grid, a_grid, constants=None):
    """For each energy, does any well width give a negative phase time?

    Phase times come from `phase_time_numeric`, differentiated along
    ``energy_grid`` (absolute energies in J) one width at a time.
    """
    model = QMParticle(spec) if constants is None else QMParticle(spec, constants)
    energies = np.asarray(energy_grid, dtype=float)
    a_grid = np.asarray(a_grid, dtype=float)
    freq = energies / (2 * math.pi * model.constants.hbar)
    tau = np.column_stack([phase_time_numeric(model, freq, a).tau for a in a_grid])
    has_negative = (tau < -SIGN_THRESHOLD).any(axis=1)
    if spec.depth_V0 > 0:
        fraction = (energies - spec.baseline_E0) / spec.depth_V0
    else:
        fraction = np.full(energies.shape, np.inf)
    return NegativeConditionReport(energies, fraction, a_grid, tau, has_negative)
