import math

import numpy as np
import pytest

from qvibe.core import (
    ClassicalFringeSpec,
    GeometryFactor,
    PhotonPairSpec,
    SPEED_OF_LIGHT,
    classical_port_probability,
    delay_to_displacement,
    displacement_to_delay,
    quadrature_delay,
    quantum_coincidence_probability,
)

DETUNING = 2 * math.pi * 177e12


def test_quadrature_delay_and_fringe_period():
    pair = PhotonPairSpec(delta_omega=DETUNING)
    tau_op = quadrature_delay(pair)
    assert tau_op == pytest.approx(1.4124293785310734e-15, rel=1e-12)
    # full fringe period is 4x the quadrature delay
    assert 2 * math.pi / pair.delta_omega == pytest.approx(4 * tau_op, rel=1e-12)


def test_probability_at_quadrature_is_half():
    pair = PhotonPairSpec(delta_omega=DETUNING, visibility_v0=0.93)
    p = quantum_coincidence_probability(pair, quadrature_delay(pair))
    assert abs(p - 0.5) < 1e-12


def test_probability_extremes_at_zero_delay():
    pair = PhotonPairSpec(delta_omega=DETUNING, visibility_v0=1.0, sigma=0.0)
    assert quantum_coincidence_probability(pair, 0.0) == pytest.approx(0.0, abs=1e-15)
    half_period = math.pi / pair.delta_omega
    assert quantum_coincidence_probability(pair, half_period) == pytest.approx(1.0, abs=1e-12)


def test_envelope_bounds_fringe_contrast():
    pair = PhotonPairSpec(delta_omega=DETUNING, visibility_v0=0.9)
    rng = np.random.default_rng(3)
    tau = rng.uniform(-5e-13, 5e-13, 200)
    p = quantum_coincidence_probability(pair, tau)
    envelope = 0.5 * 0.9 * np.exp(-2.0 * (pair.sigma * tau) ** 2)
    assert np.all(np.abs(p - 0.5) <= envelope + 1e-15)
    assert np.all((p >= 0) & (p <= 1))


def test_envelope_nearly_flat_at_operating_point():
    # At the quadrature delay the Gaussian envelope term is within 4e-5
    # of unity, which is why the waveform inversion can ignore it.
    pair = PhotonPairSpec(delta_omega=DETUNING)
    tau_op = quadrature_delay(pair)
    assert math.exp(-2.0 * (pair.sigma * tau_op) ** 2) == pytest.approx(1.0, abs=4e-5)


def test_classical_visibility_value():
    fringe = ClassicalFringeSpec(omega_optical=1.2e15, arm_intensity_ratio=0.13)
    assert fringe.visibility == pytest.approx(0.638, abs=1e-3)
    balanced = ClassicalFringeSpec(omega_optical=1.2e15, arm_intensity_ratio=1.0)
    assert balanced.visibility == pytest.approx(1.0, rel=1e-12)


def test_classical_ports_sum_to_one():
    fringe = ClassicalFringeSpec(
        omega_optical=2 * math.pi * SPEED_OF_LIGHT / 1550e-9,
        arm_intensity_ratio=0.4,
        phase_offset=-math.pi / 2,
    )
    tau = np.linspace(-2e-15, 2e-15, 101)
    p1 = classical_port_probability(fringe, tau, 1)
    p2 = classical_port_probability(fringe, tau, 2)
    assert np.allclose(p1 + p2, 1.0, atol=1e-12)
    assert np.all((p1 >= 0) & (p1 <= 1))


def test_classical_port_validation():
    fringe = ClassicalFringeSpec(omega_optical=1.2e15)
    with pytest.raises(ValueError):
        classical_port_probability(fringe, 0.0, 3)


def test_delay_displacement_conversion_values():
    # 4.2 as of delay reads as 1.2591 nm of path length
    assert delay_to_displacement(4.2e-18, GeometryFactor(1)) == pytest.approx(
        1.2591e-9, rel=1e-4
    )
    # 55 nm of mirror motion at g=2 is 0.367 fs of delay
    assert displacement_to_delay(55e-9, GeometryFactor(2)) == pytest.approx(
        3.6692e-16, rel=1e-4
    )


def test_delay_displacement_round_trip():
    g = GeometryFactor(2)
    x = np.linspace(-1e-7, 1e-7, 41)
    back = delay_to_displacement(displacement_to_delay(x, g), g)
    assert np.allclose(back, x, rtol=1e-12, atol=0)


def test_pair_spec_validation():
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=0.0)
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=DETUNING, sigma=-1.0)
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=DETUNING, visibility_v0=0.0)
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=DETUNING, visibility_v0=1.2)
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=DETUNING, lambda_1=810e-9)


def test_wavelength_consistency_check():
    # Round 810/1550 nm wavelengths imply a 176.70 THz beat, 0.17% away
    # from a 177 THz detuning, so the cross-check must reject the combo.
    with pytest.raises(ValueError):
        PhotonPairSpec(delta_omega=DETUNING, lambda_1=810e-9, lambda_2=1550e-9)
    pair = PhotonPairSpec.from_wavelengths(810e-9, 1550e-9)
    implied = abs(2 * math.pi * SPEED_OF_LIGHT * (1 / 810e-9 - 1 / 1550e-9))
    assert pair.delta_omega == pytest.approx(implied, rel=1e-12)
    assert pair.delta_omega == pytest.approx(2 * math.pi * 176.70e12, rel=1e-3)


def test_geometry_factor_validation():
    assert GeometryFactor(1).g == 1
    assert GeometryFactor(2).g == 2
    with pytest.raises(ValueError):
        GeometryFactor(3)
    with pytest.raises(ValueError):
        GeometryFactor(0)
