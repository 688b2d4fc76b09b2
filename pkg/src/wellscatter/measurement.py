"""Measured two-port traces: parsing, reference-plane correction, phase time.

Trace CSV files have the header ``freq_hz,s21_re,s21_im`` and one sample per
line. The Touchstone reader accepts version-1 two-port files with the option
line ``# HZ S RI R 50`` and reads only S21.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dispersion import CONSTANTS, EMWaveguide, GuideGeometry, Medium, get_material
from .errors import TraceFormatError
from .fileio import atomic_write
from .phasetime import FrequencyGrid, PhaseTimeProfile, _as_frequencies, derivative, unwrap_phase
from .scattering import WellScatterer, transmission_coefficient

CSV_HEADER = "freq_hz,s21_re,s21_im"
PROFILE_HEADER = "freq_hz,phase_rad_unwrapped,tau_seconds"
PASSIVITY_TOLERANCE = 1e-6
FIXTURE_POINTS = 801
CORRECTION_MODES = ("analytic_k", "reference_trace")


@dataclass(frozen=True)
class SParamTrace:
    freq: np.ndarray
    s21: np.ndarray
    guide_length_l: Optional[float] = None
    well_width_a: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        freq = np.asarray(self.freq, dtype=float)
        s21 = np.asarray(self.s21, dtype=complex)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "s21", s21)
        if freq.ndim != 1 or freq.shape != s21.shape:
            raise ValueError("frequency and S21 arrays must be 1-D and equally long")
        if freq.size < 3:
            raise ValueError(f"a trace needs at least 3 samples, got {freq.size}")
        bad = np.flatnonzero(np.diff(freq) <= 0)
        if bad.size:
            raise ValueError(f"frequencies must increase strictly (sample {bad[0] + 1})")
        over = np.flatnonzero(np.abs(s21) > 1 + PASSIVITY_TOLERANCE)
        if over.size:
            raise ValueError(
                f"|S21| exceeds 1 at sample {over[0]} ({abs(s21[over[0]]):.9g}); "
                "a passive device cannot amplify"
            )


@dataclass(frozen=True)
class CorrectedTransmission:
    freq: np.ndarray
    F: np.ndarray
    correction_mode: str
    wavenumber: Optional[np.ndarray] = field(default=None, repr=False)
    c: float = field(default=CONSTANTS.c, repr=False)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _parse_csv(text):
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].lstrip("\ufeff").strip() != CSV_HEADER:
        raise TraceFormatError(f"expected header {CSV_HEADER!r}", line=1)
    rows, numbers = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceFormatError(f"expected 3 comma-separated values, got {len(parts)}", line=lineno)
        try:
            numbers.append([float(p) for p in parts])
        except ValueError:
            raise TraceFormatError(f"not a number in {line!r}", line=lineno) from None
        rows.append(lineno)
    return rows, numbers


def _parse_touchstone(text):
    rows, numbers = [], []
    seen_option = False
    pending, pending_line = [], None
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].upper().split()
            supported = (
                len(tokens) == 5
                and tokens[:4] == ["HZ", "S", "RI", "R"]
                and _is_fifty(tokens[4])
            )
            if not supported:
                raise TraceFormatError(
                    f"unsupported option line {line!r}; only '# HZ S RI R 50' "
                    "two-port files are read",
                    line=lineno,
                )
            seen_option = True
            continue
        if line.startswith("["):
            raise TraceFormatError("Touchstone version 2 keywords are not supported", line=lineno)
        if not seen_option:
            raise TraceFormatError(
                "data before option line; only '# HZ S RI R 50' two-port files are read",
                line=lineno,
            )
        try:
            values = [float(v) for v in line.split()]
        except ValueError:
            raise TraceFormatError(f"not a number in {line!r}", line=lineno) from None
        if not pending:
            pending_line = lineno
        pending.extend(values)
        if len(pending) > 9:
            raise TraceFormatError("a two-port data row holds 9 values", line=pending_line)
        if len(pending) == 9:
            numbers.append([pending[0], pending[3], pending[4]])
            rows.append(pending_line)
            pending = []
    if pending:
        raise TraceFormatError("incomplete two-port data row", line=pending_line)
    if not seen_option:
        raise TraceFormatError("missing option line '# HZ S RI R 50'", line=1)
    return rows, numbers


def _is_fifty(token):
    try:
        return float(token) == 50.0
    except ValueError:
        return False


def load_trace(source, format="csv", *, guide_length_l=None, well_width_a=None, label="") -> SParamTrace:
    """Read a transmission trace from a path or a (byte or text) stream.

    Raises
    ------
    TraceFormatError
        For malformed rows, unsupported Touchstone variants, non-increasing
        frequencies or non-passive samples, with the offending line number.
    """
    text = _open_text(source)
    if format == "csv":
        rows, numbers = _parse_csv(text)
    elif format in ("touchstone_ri", "touchstone"):
        rows, numbers = _parse_touchstone(text)
    else:
        raise ValueError(f"unknown trace format {format!r}; use 'csv' or 'touchstone_ri'")
    if len(numbers) < 3:
        raise TraceFormatError(f"a trace needs at least 3 samples, found {len(numbers)}")
    data = np.array(numbers, dtype=float)
    bad = np.flatnonzero(np.diff(data[:, 0]) <= 0)
    if bad.size:
        raise TraceFormatError("frequency does not increase", line=rows[bad[0] + 1])
    magnitude = np.hypot(data[:, 1], data[:, 2])
    bad = np.flatnonzero(magnitude > 1 + PASSIVITY_TOLERANCE)
    if bad.size:
        raise TraceFormatError(f"|S21| = {magnitude[bad[0]]:.9g} exceeds 1", line=rows[bad[0]])
    return SParamTrace(
        freq=data[:, 0],
        s21=data[:, 1] + 1j * data[:, 2],
        guide_length_l=guide_length_l,
        well_width_a=well_width_a,
        label=label,
    )


def _fmt(x) -> str:
    return repr(float(x))


def trace_to_csv(trace: SParamTrace) -> str:
    lines = [CSV_HEADER]
    lines += [
        f"{_fmt(f)},{_fmt(s.real)},{_fmt(s.imag)}" for f, s in zip(trace.freq, trace.s21)
    ]
    return "\n".join(lines) + "\n"


def save_trace(trace: SParamTrace, dest) -> None:
    text = trace_to_csv(trace)
    if isinstance(dest, (str, os.PathLike)):
        atomic_write(dest, text)
    elif isinstance(dest, io.TextIOBase):
        dest.write(text)
    else:
        dest.write(text.encode("utf-8"))


def _empty_guide_k(geometry: GuideGeometry, freq, constants=CONSTANTS):
    model = EMWaveguide(geometry, get_material("vacuum"), constants)
    return model.wavenumbers(2 * math.pi * np.asarray(freq, dtype=float))[0]


def forward_model(
    geometry: GuideGeometry, medium: Medium, grid, constants=CONSTANTS, label=None
) -> SParamTrace:
    """Synthetic S21 of the partially filled guide, ``F * exp(+i k (l - a))``."""
    f = _as_frequencies(grid)
    model = EMWaveguide(geometry, medium, constants)
    k, kp = model.wavenumbers(2 * math.pi * f)
    a, l = geometry.well_width_a, geometry.total_length_l
    F = transmission_coefficient(WellScatterer(k, kp, a))
    if label is None:
        label = f"{medium.name or 'n=%g' % medium.refractive_index_n} a={a * 1e3:g}mm"
    return SParamTrace(f, F * np.exp(1j * k * (l - a)), guide_length_l=l, well_width_a=a, label=label)


def deembed(
    trace: SParamTrace,
    geometry: GuideGeometry,
    mode: str = "analytic_k",
    reference: Optional[SParamTrace] = None,
    constants=CONSTANTS,
) -> CorrectedTransmission:
    """Shift the reference planes from the guide ends to the faces of the well.

    ``analytic_k`` multiplies by ``exp(-i k (l - a))`` with the empty-guide
    ``k``. ``reference_trace`` subtracts ``(l - a)/l`` times the unwrapped
    phase of an empty-guide reference measurement and keeps ``|S21|``.
    """
    if mode not in CORRECTION_MODES:
        raise ValueError(f"unknown correction mode {mode!r}; use one of {CORRECTION_MODES}")
    a, l = geometry.well_width_a, geometry.total_length_l
    k = _empty_guide_k(geometry, trace.freq, constants)
    if mode == "analytic_k":
        F = trace.s21 * np.exp(-1j * k * (l - a))
    else:
        if reference is None:
            raise ValueError("reference_trace mode needs a reference trace")
        if reference.freq.shape != trace.freq.shape or not np.allclose(
            reference.freq, trace.freq, rtol=1e-12, atol=0
        ):
            raise ValueError("reference and trace frequency axes differ")
        if np.any(np.abs(reference.s21) < 1e-9):
            raise ValueError("reference trace magnitude is too close to zero")
        ref_phase = unwrap_phase(np.angle(reference.s21))
        # pick the 2*pi branch of the reference from the nominal k*l at the first sample
        ref_phase += 2 * math.pi * np.round((k[0] * l - ref_phase[0]) / (2 * math.pi))
        phase = np.angle(trace.s21) - (l - a) / l * ref_phase
        F = np.abs(trace.s21) * np.exp(1j * phase)
    return CorrectedTransmission(trace.freq, F, mode, wavenumber=k, c=constants.c)


def _moving_average(y, window):
    if window % 2 == 0 or window < 1:
        raise ValueError("smoothing window must be a positive odd number of samples")
    kernel = np.ones(window)
    total = np.convolve(y, kernel, mode="same")
    counts = np.convolve(np.ones_like(y), kernel, mode="same")
    return total / counts


def measured_phase_time(ct: CorrectedTransmission, smooth: Optional[int] = None) -> PhaseTimeProfile:
    """Phase time ``(2 pi)^-1 dphi/df`` by numerical differentiation of the data.

    When the correction step attached the empty-guide wave numbers, the phase
    is differentiated against ``k`` and converted with ``dk/domega =
    omega/(c^2 k)``, which is much more accurate close to cutoff. Smoothing is
    off unless a window is given.
    """
    if ct.freq.size < 3:
        raise ValueError("need at least 3 samples")
    phase = unwrap_phase(np.angle(ct.F))
    if smooth and smooth > 1:
        phase = _moving_average(phase, smooth)
    if ct.wavenumber is not None:
        omega = 2 * math.pi * ct.freq
        tau = derivative(phase, ct.wavenumber) * omega / (ct.c**2 * ct.wavenumber)
    else:
        tau = derivative(phase, ct.freq) / (2 * math.pi)
    return PhaseTimeProfile(freq=ct.freq, phase_unwrapped=phase, tau=tau, method="measured")


def profile_to_csv(profile: PhaseTimeProfile) -> str:
    lines = [PROFILE_HEADER]
    lines += [
        f"{_fmt(f)},{_fmt(p)},{_fmt(t)}"
        for f, p, t in zip(profile.freq, profile.phase_unwrapped, profile.tau)
    ]
    return "\n".join(lines) + "\n"


def fixture_grid(f_min, f_max, points=FIXTURE_POINTS) -> FrequencyGrid:
    return FrequencyGrid(f_min, f_max, points)
