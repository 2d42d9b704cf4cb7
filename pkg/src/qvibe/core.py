"""Interferometer fringe models and delay/displacement conversions.

Two detection models share a common geometry: a relative optical delay
``tau`` between two interferometer arms maps to a detection probability
through a fringe. The quantum fringe applies to coincidence detection of
energy-entangled photon pairs behind a beamsplitter; its period is set by
the pair's internal detuning rather than an optical carrier. The classical
fringe is ordinary single-photon (or intensity) interference with period
set by the optical frequency.

Conventions used throughout the package:

* delays ``tau`` are in seconds, displacements in metres,
  angular frequencies in rad/s,
* a reflective geometry factor ``g`` converts mirror displacement ``x``
  into delay via ``tau = g * x / c`` (g=2 for retro-reflection),
* probabilities are exact fringe values, never clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Exact SI definition.
SPEED_OF_LIGHT = 299_792_458.0

# Relative tolerance for the optional wavelength/detuning cross-check.
_WAVELENGTH_CONSISTENCY_RTOL = 1e-3


@dataclass(frozen=True)
class PhotonPairSpec:
    """Source parameters of an energy-entangled photon pair.

    Attributes
    ----------
    delta_omega : float
        Angular detuning between the two photon colours, rad/s.
    sigma : float
        Angular width of the Gaussian detuning spread, rad/s. Controls
        the Gaussian envelope of the coincidence fringe.
    visibility_v0 : float
        Baseline fringe visibility in (0, 1].
    lambda_1, lambda_2 : float or None
        Optional centre wavelengths (metres) of the two photons,
        informational. When both are given they must reproduce
        ``delta_omega`` within 0.1%.
    """

    delta_omega: float
    sigma: float = 2 * math.pi * 0.5e12
    visibility_v0: float = 1.0
    lambda_1: float | None = None
    lambda_2: float | None = None

    def __post_init__(self) -> None:
        if not self.delta_omega > 0:
            raise ValueError("delta_omega must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0 < self.visibility_v0 <= 1:
            raise ValueError("visibility_v0 must lie in (0, 1]")
        if (self.lambda_1 is None) != (self.lambda_2 is None):
            raise ValueError("give both wavelengths or neither")
        if self.lambda_1 is not None and self.lambda_2 is not None:
            if self.lambda_1 <= 0 or self.lambda_2 <= 0:
                raise ValueError("wavelengths must be positive")
            implied = abs(
                2 * math.pi * SPEED_OF_LIGHT * (1 / self.lambda_1 - 1 / self.lambda_2)
            )
            if abs(implied - self.delta_omega) > _WAVELENGTH_CONSISTENCY_RTOL * self.delta_omega:
                raise ValueError(
                    "wavelengths imply a detuning of %.6g rad/s, which differs from "
                    "delta_omega=%.6g rad/s by more than 0.1%%" % (implied, self.delta_omega)
                )

    @classmethod
    def from_wavelengths(
        cls,
        lambda_1: float,
        lambda_2: float,
        sigma: float = 2 * math.pi * 0.5e12,
        visibility_v0: float = 1.0,
    ) -> "PhotonPairSpec":
        """Build a spec whose detuning is computed exactly from wavelengths."""
        if lambda_1 <= 0 or lambda_2 <= 0:
            raise ValueError("wavelengths must be positive")
        delta_omega = abs(2 * math.pi * SPEED_OF_LIGHT * (1 / lambda_1 - 1 / lambda_2))
        return cls(
            delta_omega=delta_omega,
            sigma=sigma,
            visibility_v0=visibility_v0,
            lambda_1=lambda_1,
            lambda_2=lambda_2,
        )


@dataclass(frozen=True)
class ClassicalFringeSpec:
    """Single-photon interference fringe of a classical reference channel.

    ``arm_intensity_ratio`` is the intensity ratio r of arm b to arm a in
    [0, 1]; an excess loss L on arm b corresponds to r = 1 - L. The fringe
    visibility follows as 2 sqrt(r) / (1 + r).
    """

    omega_optical: float
    arm_intensity_ratio: float = 1.0
    phase_offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.omega_optical > 0:
            raise ValueError("omega_optical must be positive")
        if not 0 <= self.arm_intensity_ratio <= 1:
            raise ValueError("arm_intensity_ratio must lie in [0, 1]")

    @property
    def visibility(self) -> float:
        r = self.arm_intensity_ratio
        return 2.0 * math.sqrt(r) / (1.0 + r)


@dataclass(frozen=True)
class GeometryFactor:
    """Delay-per-displacement multiplicity. g=1 transmissive, g=2 retro-reflective."""

    g: int = 2

    def __post_init__(self) -> None:
        if self.g not in (1, 2):
            raise ValueError("geometry factor must be 1 or 2")


def quantum_coincidence_probability(spec: PhotonPairSpec, tau):
    """Coincidence probability of the entangled pair at relative delay tau.

    P(tau) = (1/2) * (1 - V0 * cos(delta_omega * tau) * exp(-2 sigma^2 tau^2))

    Accepts a scalar or ndarray delay; returns the same shape. The value
    is an exact probability in [0, 1] for any visibility in (0, 1].
    """
    tau = np.asarray(tau, dtype=float)
    envelope = np.exp(-2.0 * (spec.sigma * tau) ** 2)
    p = 0.5 * (1.0 - spec.visibility_v0 * np.cos(spec.delta_omega * tau) * envelope)
    return p if p.ndim else float(p)


def classical_port_probability(spec: ClassicalFringeSpec, tau, port: int):
    """Probability that a photon exits the given beamsplitter port (1 or 2).

    Port 1 carries the +cos fringe, port 2 the complement; the two ports
    sum to one for every delay regardless of the arm intensity ratio.
    """
    if port not in (1, 2):
        raise ValueError("port must be 1 or 2")
    tau = np.asarray(tau, dtype=float)
    fringe = spec.visibility * np.cos(spec.omega_optical * tau + spec.phase_offset)
    p = 0.5 * (1.0 + fringe) if port == 1 else 0.5 * (1.0 - fringe)
    return p if p.ndim else float(p)


def delay_to_displacement(tau, geometry: GeometryFactor):
    """Convert a relative delay (s) to mirror displacement (m)."""
    tau = np.asarray(tau, dtype=float)
    x = SPEED_OF_LIGHT * tau / geometry.g
    return x if x.ndim else float(x)


def displacement_to_delay(x, geometry: GeometryFactor):
    """Convert a mirror displacement (m) to relative delay (s)."""
    x = np.asarray(x, dtype=float)
    tau = geometry.g * x / SPEED_OF_LIGHT
    return tau if tau.ndim else float(tau)


def quadrature_delay(spec: PhotonPairSpec) -> float:
    """Delay at the half-fringe (maximum slope) point of the quantum fringe."""
    return math.pi / (2.0 * spec.delta_omega)
