import math

import numpy as np
import pytest

from pulse import (ChirpCoefficients, EnvelopeShape, EnvelopeSpec, GHZ_TO_RAD_PER_PS, PulseError, PulseSpec,
                   SPEED_OF_LIGHT_CM_PER_PS, chirp_from_wavenumbers, envelope_amplitude, ghz_to_rad_per_ps,
                   instantaneous_frequency, phase, pulse_area, rabi_frequency, rad_per_ps_to_ghz,
                   single_term_chirp, wavenumber_to_rad_per_ps)


def test_phase_and_sweep_known_values():
    chirp = ChirpCoefficients((0.5, 0.0, 2.0, 1.0))
    assert phase(2.0, chirp) == pytest.approx(0.5 + 8.0 + 8.0)
    assert instantaneous_frequency(2.0, chirp) == pytest.approx(4.0 * 2.0 + 3.0 * 4.0)


def test_linear_sweep_from_b2():
    '''phi_dot = 2 b_2 t for a pure b_2 chirp'''
    chirp = ChirpCoefficients((0.0, 0.0, 0.3))
    t = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(instantaneous_frequency(t, chirp), 0.6 * t)


def test_b0_never_reaches_the_sweep():
    t = np.linspace(-3, 3, 7)
    a = ChirpCoefficients((0.0, 0.1, 0.2))
    b = ChirpCoefficients((17.0, 0.1, 0.2))
    np.testing.assert_array_equal(instantaneous_frequency(t, a), instantaneous_frequency(t, b))


def test_transform_limited_has_no_sweep():
    t = np.linspace(-1, 1, 5)
    np.testing.assert_array_equal(instantaneous_frequency(t, ChirpCoefficients()), np.zeros(5))
    assert ChirpCoefficients((0.3,)).is_transform_limited


@pytest.mark.parametrize('order', [1, 2, 3, 4, 5])
def test_sweep_is_central_difference_of_phase(order, rng):
    '''phi_dot matches a central difference of phi for random coefficients up to 1e2'''
    h = 1e-5
    for _ in range(20):
        chirp = ChirpCoefficients(tuple(rng.uniform(-100, 100, order + 1)))
        t = rng.uniform(-1, 1)
        numeric = (phase(t + h, chirp) - phase(t - h, chirp)) / (2 * h)
        exact = instantaneous_frequency(t, chirp)
        assert abs(numeric - exact) <= 1e-6 * max(1.0, abs(exact))


def test_single_term_chirp_hits_target_sweep():
    chirp = single_term_chirp(2, 3.0, 20.0)
    assert chirp.coeffs == (0.0, 0.0, 0.075)
    for n in (3, 4, 5):
        c = single_term_chirp(n, 3.0, 20.0)
        assert c.single_term_order() == n
        assert instantaneous_frequency(20.0, c) == pytest.approx(3.0)


def test_single_term_chirp_rejects_bad_order():
    with pytest.raises(PulseError):
        single_term_chirp(0, 1.0, 1.0)
    with pytest.raises(PulseError):
        single_term_chirp(3, 1.0, 0.0)


def test_wavenumber_chirp_conversion():
    chirp = chirp_from_wavenumbers([0.0, 0.0, 10.0])
    assert chirp.coeffs[2] == pytest.approx(10.0 * SPEED_OF_LIGHT_CM_PER_PS ** 2)


def test_unit_helpers():
    assert ghz_to_rad_per_ps(1.0) == pytest.approx(2 * math.pi * 1e-3)
    assert rad_per_ps_to_ghz(GHZ_TO_RAD_PER_PS * 3.23) == pytest.approx(3.23)
    assert wavenumber_to_rad_per_ps(1.0) == pytest.approx(29.9792458 * 2 * math.pi * 1e-3)
    np.testing.assert_allclose(ghz_to_rad_per_ps(np.array([1.0, 2.0])), [GHZ_TO_RAD_PER_PS, 2 * GHZ_TO_RAD_PER_PS])


@pytest.mark.parametrize('shape', [EnvelopeShape.GAUSSIAN, EnvelopeShape.SECH])
def test_intensity_fwhm(shape):
    '''eps^2 falls to half its peak at center +/- fwhm/2'''
    env = EnvelopeSpec(shape, peak_amplitude=2.0, fwhm=10.0, center=3.0)
    assert envelope_amplitude(3.0, env) == pytest.approx(2.0)
    for t in (-2.0, 8.0):
        assert envelope_amplitude(t, env) ** 2 == pytest.approx(2.0, rel=1e-12)


def test_constant_envelope_is_gated_by_window():
    env = EnvelopeSpec(EnvelopeShape.CONSTANT, peak_amplitude=1.5, fwhm=1.0)
    values = envelope_amplitude(np.array([-1.0, 0.0, 0.5, 1.0, 1.5]), env, window=(0.0, 1.0))
    np.testing.assert_array_equal(values, [0.0, 1.5, 1.5, 1.5, 0.0])


def test_multiphoton_rabi_frequency():
    pulse = PulseSpec(EnvelopeSpec(peak_amplitude=0.5, fwhm=4.0), photon_order=2, start=-10, end=10)
    assert rabi_frequency(0.0, pulse, mu_eff=1.0) == pytest.approx(0.25)
    assert rabi_frequency(0.0, pulse, mu_eff=2.0) == pytest.approx(1.0)


def test_sweep_scales_with_photon_order_and_centers_on_peak():
    chirp = ChirpCoefficients((0.0, 0.0, 0.1))
    pulse = PulseSpec(EnvelopeSpec(fwhm=4.0, center=5.0), chirp, photon_order=3, start=0, end=10)
    assert pulse.sweep(5.0) == pytest.approx(0.0)
    assert pulse.sweep(7.0) == pytest.approx(3 * 0.2 * 2.0)
    assert pulse.sweep_derivative(7.0) == pytest.approx(3 * 0.2)


def test_zero_amplitude_pulse_has_zero_rabi():
    pulse = PulseSpec(EnvelopeSpec(peak_amplitude=0.0, fwhm=4.0), start=-10, end=10)
    np.testing.assert_array_equal(rabi_frequency(np.linspace(-10, 10, 5), pulse), np.zeros(5))


def test_pulse_area_of_square_pulse():
    pulse = PulseSpec(EnvelopeSpec(EnvelopeShape.CONSTANT, peak_amplitude=1.0, fwhm=1.0),
                      start=0.0, end=math.pi / 2)
    assert pulse_area(pulse) == pytest.approx(math.pi, rel=1e-12)


def test_fwhm_window():
    pulse = PulseSpec(EnvelopeSpec(fwhm=20.0, center=5.0), start=-60, end=60)
    assert pulse.fwhm_window() == (-5.0, 15.0)


@pytest.mark.parametrize('kwargs', [
    {'fwhm': 0.0},
    {'fwhm': -1.0},
    {'peak_amplitude': -0.1},
    {'peak_amplitude': math.inf},
    {'shape': 'triangle'},
])
def test_invalid_envelopes_raise(kwargs):
    with pytest.raises(PulseError):
        EnvelopeSpec(**kwargs)


def test_invalid_pulses_raise():
    with pytest.raises(PulseError):
        PulseSpec(start=1.0, end=1.0)
    with pytest.raises(PulseError):
        PulseSpec(photon_order=0)
    with pytest.raises(PulseError):
        ChirpCoefficients((0.0, math.nan))
    with pytest.raises(PulseError):
        ChirpCoefficients(())
