"""Plane-wave scattering at a square well of width ``a``.

The field is written piecewise as

    A e^{ikx} + B e^{-ikx}                 x <= 0
    C e^{ik'x} + D e^{-ik'x}               0 < x < a
    F e^{ik(x-a)} + G e^{-ik(x-a)}         a <= x

so the whole phase accumulated across the well sits in ``F`` and ``G``.
All functions broadcast over numpy arrays of ``k``, ``kprime`` and ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WellScatterer:
    k: object
    kprime: object
    a: object = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.k) <= 0) or np.any(np.asarray(self.kprime) <= 0):
            raise ValueError("wave numbers k and kprime must be positive")
        if np.any(np.asarray(self.a) < 0):
            raise ValueError("well width must be non-negative")


@dataclass(frozen=True)
class CoefficientSet:
    A: complex
    B: complex
    C: complex
    D: complex
    F: complex
    G: complex


@dataclass(frozen=True)
class TransmissionResult:
    F: complex
    B: complex
    magnitude_sq: float
    phase_principal: float


def _bracket(s):
    # (k'/k + k/k')/2, symmetric under k <-> k'
    return 0.5 * (s.kprime / s.k + s.k / s.kprime)


def transmission_coefficient(s: WellScatterer):
    """Closed-form transmitted amplitude for unit incidence from the left."""
    theta = s.kprime * s.a
    return 1.0 / (np.cos(theta) - 1j * _bracket(s) * np.sin(theta))


def reflection_coefficient(s: WellScatterer):
    """Reflected amplitude for unit incidence from the left.

    ``B = (i/2)(k'/k - k/k') sin(k'a) F``; with real wave numbers this gives
    ``|B|**2 + |F|**2 = 1``.
    """
    theta = s.kprime * s.a
    delta = 0.5 * (s.kprime / s.k - s.k / s.kprime)
    return 1j * delta * np.sin(theta) * transmission_coefficient(s)


def phase_principal(s: WellScatterer):
    """Principal phase of ``F`` in (-pi, pi], taken from its real and imaginary parts."""
    return np.angle(transmission_coefficient(s))


def transmission(s: WellScatterer) -> TransmissionResult:
    F = transmission_coefficient(s)
    return TransmissionResult(
        F=F,
        B=reflection_coefficient(s),
        magnitude_sq=np.abs(F) ** 2,
        phase_principal=np.angle(F),
    )


def _boundary_system(k, kp, a):
    # unknowns ordered (B, C, D, F); rows: value and slope at x=0, then x=a
    ep, em = np.exp(1j * kp * a), np.exp(-1j * kp * a)
    M = np.zeros((4, 4), dtype=complex)
    M[0] = [-1, 1, 1, 0]
    M[1] = [k, kp, -kp, 0]
    M[2] = [0, ep, em, -1]
    M[3] = [0, kp * ep, -kp * em, -k]
    return M


def solve_coefficients(s: WellScatterer, A=1.0, G=0.0) -> CoefficientSet:
    """Solve the four matching conditions at x=0 and x=a for given incident amplitudes.

    This is a direct dense solve (LU with partial pivoting) and serves as the
    independent check on `transmission_coefficient`. Only scalar scatterers are
    accepted.
    """
    k, kp, a = (float(v) for v in (s.k, s.kprime, s.a))
    M = _boundary_system(k, kp, a)
    rhs = np.array([A, k * A, G, -k * G], dtype=complex)
    try:
        B, C, D, F = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - not reachable for k, k' > 0
        raise ArithmeticError(f"singular matching system for k={k}, k'={kp}, a={a}") from exc
    return CoefficientSet(A=complex(A), B=B, C=C, D=D, F=F, G=complex(G))


def field_evaluate(cs: CoefficientSet, s: WellScatterer, x):
    """Evaluate the piecewise field at positions ``x`` (meters)."""
    x = np.asarray(x, dtype=float)
    k, kp, a = float(s.k), float(s.kprime), float(s.a)
    left = cs.A * np.exp(1j * k * x) + cs.B * np.exp(-1j * k * x)
    inside = cs.C * np.exp(1j * kp * x) + cs.D * np.exp(-1j * kp * x)
    right = cs.F * np.exp(1j * k * (x - a)) + cs.G * np.exp(-1j * k * (x - a))
    return np.where(x <= 0, left, np.where(x < a, inside, right))


def field_derivative(cs: CoefficientSet, s: WellScatterer, x):
    """First spatial derivative of `field_evaluate`."""
    x = np.asarray(x, dtype=float)
    k, kp, a = float(s.k), float(s.kprime), float(s.a)
    left = 1j * k * (cs.A * np.exp(1j * k * x) - cs.B * np.exp(-1j * k * x))
    inside = 1j * kp * (cs.C * np.exp(1j * kp * x) - cs.D * np.exp(-1j * kp * x))
    right = 1j * k * (cs.F * np.exp(1j * k * (x - a)) - cs.G * np.exp(-1j * k * (x - a)))
    return np.where(x <= 0, left, np.where(x < a, inside, right))
