"""Physical constants, guide geometry and the two dispersion models.

Everything is SI internally: angular frequency in rad/s, lengths in meters,
energies in joules. Unit conversion happens only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EvanescentRegimeError

ELECTRON_VOLT = 1.602176634e-19  # J, exact


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 299792458.0
    hbar: float = 1.054571817e-34
    electron_mass: float = 9.1093837015e-31


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class GuideGeometry:
    """Rectangular guide of broad-wall width ``width_b`` and length ``total_length_l``.

    ``well_width_a`` is the length of the dielectric-filled section.
    """

    width_b: float
    total_length_l: float
    well_width_a: float = 0.0

    def __post_init__(self):
        if not self.width_b > 0:
            raise ValueError(f"guide width must be positive, got {self.width_b!r}")
        if not 0 <= self.well_width_a <= self.total_length_l:
            raise ValueError(
                "well width must satisfy 0 <= a <= l, got "
                f"a={self.well_width_a!r}, l={self.total_length_l!r}"
            )

    def with_well(self, a: float) -> "GuideGeometry":
        return replace(self, well_width_a=float(a))


@dataclass(frozen=True)
class Medium:
    refractive_index_n: float
    name: str = ""

    def __post_init__(self):
        if not self.refractive_index_n >= 1:
            raise ValueError(
                f"refractive index must be >= 1, got {self.refractive_index_n!r}"
            )


@dataclass(frozen=True)
class QuantumWellSpec:
    baseline_E0: float
    depth_V0: float
    mass_m: float = CONSTANTS.electron_mass

    def __post_init__(self):
        # depth 0 is admitted: it is what an unfilled guide maps to
        if not self.depth_V0 >= 0:
            raise ValueError(f"well depth must be >= 0, got {self.depth_V0!r}")
        if not self.mass_m > 0:
            raise ValueError(f"particle mass must be positive, got {self.mass_m!r}")
        if not self.baseline_E0 >= 0:
            raise ValueError(f"baseline energy must be >= 0, got {self.baseline_E0!r}")


MATERIALS = {
    "teflon": Medium(math.sqrt(2.05), "teflon"),
    "perspex": Medium(1.6, "perspex"),
    "vacuum": Medium(1.0, "vacuum"),
}

GEOMETRIES = {
    "xband": GuideGeometry(width_b=22.86e-3, total_length_l=250e-3),
}


def get_material(name: str) -> Medium:
    try:
        return MATERIALS[name]
    except KeyError:
        raise KeyError(
            f"unknown material {name!r}; available: {', '.join(sorted(MATERIALS))}"
        ) from None


def get_geometry(name: str) -> GuideGeometry:
    try:
        return GEOMETRIES[name]
    except KeyError:
        raise KeyError(
            f"unknown geometry {name!r}; available: {', '.join(sorted(GEOMETRIES))}"
        ) from None


def cutoffs(geometry: GuideGeometry, medium: Medium, constants=CONSTANTS):
    """Return ``(omega0, omega_n)``, the empty and filled TE10 cutoffs in rad/s."""
    omega0 = math.pi * constants.c / geometry.width_b
    return omega0, omega0 / medium.refractive_index_n


def energy_mapping(
    geometry: GuideGeometry, medium: Medium, constants=CONSTANTS
) -> QuantumWellSpec:
    """Quantum well equivalent of a partially filled guide.

    The empty-guide cutoff sets the baseline, ``E0 = hbar*omega0``, and the
    drop in cutoff inside the dielectric sets the depth,
    ``V0 = hbar*(omega0 - omega_n)``.
    """
    omega0, omega_n = cutoffs(geometry, medium, constants)
    return QuantumWellSpec(
        baseline_E0=constants.hbar * omega0,
        depth_V0=constants.hbar * (omega0 - omega_n),
        mass_m=constants.electron_mass,
    )


class DispersionModel:
    """Common interface: angular frequency -> outer and well wave numbers.

    Subclasses provide ``omega_min`` (the outer cutoff below which waves are
    evanescent), ``wavenumbers`` and their analytic frequency derivatives.
    """

    @property
    def omega_min(self) -> float:
        raise NotImplementedError

    def wavenumbers(self, omega):
        raise NotImplementedError

    def dk_domega(self, omega):
        raise NotImplementedError

    def check_propagating(self, omega):
        if np.any(np.asarray(omega) <= self.omega_min):
            raise EvanescentRegimeError(
                "frequency at or below the outer cutoff "
                f"f0 = {self.omega_min / (2 * math.pi):.6g} Hz; "
                "only propagating waves are supported"
            )


@dataclass(frozen=True)
class EMWaveguide(DispersionModel):
    geometry: GuideGeometry
    medium: Medium
    constants: PhysicalConstants = field(default=CONSTANTS, repr=False)

    @property
    def n(self) -> float:
        return self.medium.refractive_index_n

    @property
    def cutoffs(self):
        return cutoffs(self.geometry, self.medium, self.constants)

    @property
    def omega_min(self) -> float:
        return self.cutoffs[0]

    def wavenumbers(self, omega):
        return em_wavenumbers(self, omega)

    def dk_domega(self, omega):
        k, kp = self.wavenumbers(omega)
        c2 = self.constants.c**2
        return omega / (c2 * k), self.n**2 * omega / (c2 * kp)


@dataclass(frozen=True)
class QMParticle(DispersionModel):
    """Massive particle with energy ``E = hbar*omega`` over a square well."""

    spec: QuantumWellSpec
    constants: PhysicalConstants = field(default=CONSTANTS, repr=False)

    @property
    def omega_min(self) -> float:
        return self.spec.baseline_E0 / self.constants.hbar

    def wavenumbers(self, omega):
        return qm_wavenumbers(self, self.constants.hbar * np.asarray(omega, dtype=float))

    def dk_domega(self, omega):
        k, kp = self.wavenumbers(omega)
        ratio = self.spec.mass_m / self.constants.hbar
        return ratio / k, ratio / kp


def em_wavenumbers(model: EMWaveguide, omega):
    """Outer and filled-section wave numbers of the TE10 mode.

    Raises
    ------
    EvanescentRegimeError
        If any ``omega`` is at or below the empty-guide cutoff.
    """
    model.check_propagating(omega)
    omega0, omega_n = model.cutoffs
    c = model.constants.c
    k = np.sqrt(omega**2 - omega0**2) / c
    kp = model.n * np.sqrt(omega**2 - omega_n**2) / c
    return k, kp


def qm_wavenumbers(model: QMParticle, E):
    spec, hbar = model.spec, model.constants.hbar
    if np.any(np.asarray(E) <= spec.baseline_E0):
        raise EvanescentRegimeError(
            f"energy must exceed the baseline E0 = {spec.baseline_E0:.6g} J"
        )
    k = np.sqrt(2 * spec.mass_m * (E - spec.baseline_E0)) / hbar
    kp = np.sqrt(2 * spec.mass_m * (E + spec.depth_V0 - spec.baseline_E0)) / hbar
    return k, kp


def velocities(model: DispersionModel, omega, region: str = "outer"):
    """Phase and group velocity in the outer region or inside the well."""
    if region not in ("outer", "well"):
        raise ValueError(f"region must be 'outer' or 'well', got {region!r}")
    k, kp = model.wavenumbers(omega)
    dk, dkp = model.dk_domega(omega)
    if region == "outer":
        return omega / k, 1.0 / dk
    return omega / kp, 1.0 / dkp
