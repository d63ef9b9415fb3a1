import math

import numpy as np
import pytest

from surfspin import sequences
from surfspin.errors import DataFormatError, DomainError, NumericError, UnsupportedKindError
from surfspin.noise import NoiseModel
from surfspin.sequences import (DecayCurve, PulseSequence, SequenceKind, bath_factor, chi_numeric,
                                closed_form_decay, closed_form_prediction, deer_signal, envelope_coefficient,
                                exact_ramsey_chi, filter_function, filter_over_omega_squared, finite_pulse_time,
                                numeric_prediction, two_spin_first_zero, two_spin_signal)


def exact_echo_chi(t, model):
    s = t / model.tau
    return model.w ** 2 * model.tau ** 2 * (s - 3 + 4 * math.exp(-s / 2) - math.exp(-s))


@pytest.mark.parametrize('name, kind', [
    ('xy4', SequenceKind.XY4),
    ('MREV8', SequenceKind.MREV8InEcho),
    ('spin-lock', SequenceKind.SpinLock),
    ('Ramsey', SequenceKind.Ramsey),
    (SequenceKind.DEER, SequenceKind.DEER),
])
def test_kind_names(name, kind):
    assert SequenceKind.from_name(name) is kind


def test_unknown_kind():
    with pytest.raises(UnsupportedKindError):
        SequenceKind.from_name('cpmg')


def test_pulse_sequence_normalizes_its_kind():
    assert PulseSequence('echo').kind is SequenceKind.Echo
    with pytest.raises(DomainError):
        PulseSequence('echo', pi_time=-1)


@pytest.mark.parametrize('kind', ['Ramsey', 'Echo', 'XY4', 'MREV8InEcho'])
def test_filter_functions_are_periodic(kind):
    period = sequences._FILTER_PERIODS[SequenceKind.from_name(kind)]
    x = np.linspace(0.1, 20, 50)
    assert np.allclose(filter_function(kind, x, 1.0), filter_function(kind, x + period, 1.0))


def test_free_precession_filter():
    assert filter_function('Ramsey', math.pi, 1.0) == pytest.approx(2.0)
    assert filter_over_omega_squared('Ramsey', 0.0, 3.0) == pytest.approx(4.5)


@pytest.mark.parametrize('kind, limit', [('Echo', 1 / 32), ('MREV8InEcho', 1 / 288)])
def test_filters_start_as_fourth_power(kind, limit):
    x = 1e-2
    assert filter_function(kind, x, 1.0) / x ** 4 == pytest.approx(limit, rel=1e-3)


def test_mrev8_filter_is_non_negative(reference_noise):
    x = np.linspace(0, 400, 20001)
    assert np.all(filter_function('MREV8InEcho', x, 1.0) >= 0)
    for t in (0.5, 2.0, 5.0):
        assert 0 < math.exp(-chi_numeric('MREV8InEcho', t, reference_noise)) <= 1


def test_decoupling_filters_vanish_at_zero_frequency():
    for kind in sequences.DECOUPLING_KINDS:
        assert filter_over_omega_squared(kind, 0.0, 2.0) == 0.0


def test_filter_needs_non_negative_time():
    with pytest.raises(DomainError):
        filter_function('Echo', 1.0, -1.0)


def test_envelope_coefficients_from_filters():
    assert envelope_coefficient('Echo') == pytest.approx(1 / 12, rel=1e-4)
    assert envelope_coefficient('XY4') == pytest.approx(1 / 192, rel=1e-3)
    assert envelope_coefficient('MREV8InEcho') == pytest.approx(59 / 5184, rel=1e-3)


def test_published_envelope_coefficients():
    assert envelope_coefficient('Echo', 'published') == 1 / 12
    assert envelope_coefficient('XY4', 'published') == 13 / 4500
    assert envelope_coefficient('MREV8InEcho', 'published') == 49 / 2592
    with pytest.raises(DomainError):
        envelope_coefficient('Echo', 'guess')
    with pytest.raises(UnsupportedKindError):
        envelope_coefficient('Ramsey')


def test_published_xy4_to_echo_ratio():
    ratio = envelope_coefficient('XY4', 'published') / envelope_coefficient('Echo', 'published')
    assert ratio == pytest.approx(0.0347, abs=1e-4)


@pytest.mark.parametrize('kind', ['Ramsey', 'Echo', 'XY4', 'MREV8InEcho'])
def test_closed_form_decay_is_bounded(kind, reference_noise):
    times = np.linspace(0, reference_noise.tau, 60)
    values = closed_form_decay(kind, times, reference_noise, t2_dipolar=1.4, detuning=0.3)
    assert np.all(np.abs(values) <= 1)


@pytest.mark.parametrize('t', [0.5, 3.0, 20.0])
def test_echo_exponent_matches_the_cumulant(t):
    model = NoiseModel(2.0, 5.0, 0.0)
    expected = (14 / 9) * exact_echo_chi(t, model)
    assert chi_numeric('Echo', t, model, larmor='lorentzian') == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize('t', [0.5, 3.0, 20.0])
def test_ramsey_exponent_matches_the_cumulant(t):
    model = NoiseModel(2.0, 5.0, 0.0)
    expected = (14 / 9) * exact_ramsey_chi(t, model)
    assert chi_numeric('Ramsey', t, model, larmor='lorentzian') == pytest.approx(expected, rel=1e-3)


def test_delta_convention_adds_the_static_larmor_term():
    model = NoiseModel(2.0, 5.0, 0.0)
    t = 1.5
    expected = exact_ramsey_chi(t, model) + (5 / 9) * 4.0 * t ** 2 / 2
    assert chi_numeric('Ramsey', t, model, larmor='delta') == pytest.approx(expected, rel=1e-3)


def test_exponent_trivial_cases():
    model = NoiseModel(2.0, 5.0, 1.0)
    assert chi_numeric('Echo', 0.0, model) == 0.0
    assert chi_numeric('Echo', 1.0, NoiseModel(0.0, 5.0, 1.0)) == 0.0
    with pytest.raises(UnsupportedKindError):
        chi_numeric('SpinLock', 1.0, model)
    with pytest.raises(DomainError):
        chi_numeric('Echo', 1.0, model, larmor='gaussian')


def test_quadrature_gives_up_with_diagnostics():
    diagnostics = {}
    with pytest.raises(NumericError) as excinfo:
        sequences._adaptive_quad(lambda x: math.sin(1 / x) / x, 1e-4, 1, 1e-12, 0, diagnostics)
    assert 'interval' in excinfo.value.diagnostics


def test_echo_closed_form_is_the_short_time_limit():
    model = NoiseModel(1.0, 50.0, 0.0)
    t = np.array([0.5, 1.0, 2.0])
    closed = -np.log(bath_factor('Echo', t, model))
    numeric = np.array([chi_numeric('Echo', s, model, larmor='delta') for s in t])
    assert np.allclose(closed, numeric, rtol=0.05)


def test_ramsey_bath_factor_switches_to_the_cumulant_beyond_tau():
    model = NoiseModel(1.0, 2.0, 0.0)
    short, long = 1.0, 6.0
    static = sequences.larmor_exponent('Ramsey', short, model)
    assert -math.log(bath_factor('Ramsey', short, model)) == pytest.approx(0.5 - 1 / 12 + static)
    static = sequences.larmor_exponent('Ramsey', long, model)
    assert -math.log(bath_factor('Ramsey', long, model)) == pytest.approx(exact_ramsey_chi(long, model) + static)


def test_mrev8_ignores_the_dipolar_envelope():
    model = NoiseModel(1.0, 10.0, 0.0)
    assert closed_form_decay('MREV8InEcho', 1.0, model, t2_dipolar=0.5) == \
        pytest.approx(bath_factor('MREV8InEcho', 1.0, model))
    assert closed_form_decay('Echo', 1.0, model, t2_dipolar=0.5) == \
        pytest.approx(bath_factor('Echo', 1.0, model) * math.exp(-4))


def test_ramsey_detuning_oscillates():
    model = NoiseModel(0.0, 10.0, 0.0)
    assert closed_form_decay('Ramsey', math.pi, model, detuning=1.0) == pytest.approx(-1.0)


def test_closed_form_rejects_bad_input():
    model = NoiseModel(1.0, 10.0, 0.0)
    with pytest.raises(DomainError):
        closed_form_decay('Echo', [-1.0], model)
    with pytest.raises(DomainError):
        closed_form_decay('Echo', 1.0, model, t2_dipolar=0.0)


def test_long_ramsey_predictions_are_flagged():
    model = NoiseModel(1.0, 2.0, 0.0)
    inside = closed_form_prediction(PulseSequence('Ramsey'), [0.0, 1.0, 2.0], model)
    outside = closed_form_prediction(PulseSequence('Ramsey'), [0.0, 1.0, 3.0], model)
    assert inside.metadata['ramsey_regime_ok']
    assert not outside.metadata['ramsey_regime_ok']


def test_predictions_start_at_one():
    model = NoiseModel(4.4, 14.6, 19.5)
    times = np.linspace(0, 2, 5)
    for curve in (closed_form_prediction(PulseSequence('xy4'), times, model, t2_dipolar=1.4),
                  numeric_prediction(PulseSequence('xy4'), times, model, t2_dipolar=1.4)):
        assert curve.values[0] == pytest.approx(1.0)
        assert np.all(curve.values[1:] < 1.0)


def test_two_spin_signal():
    assert two_spin_signal(0.7, 0.0) == 1.0
    assert two_spin_first_zero(0.7) == pytest.approx(math.pi / 0.7, rel=1e-10)
    assert two_spin_signal(0.7, math.pi / 0.7) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        two_spin_first_zero(0.0)


def test_two_spin_signal_period():
    j1 = 0.71
    t = np.linspace(0, 30, 61)
    assert np.allclose(two_spin_signal(j1, t + 8 * math.pi / j1), two_spin_signal(j1, t))
    assert not np.allclose(two_spin_signal(j1, t + 4 * math.pi / j1), two_spin_signal(j1, t))


def test_deer_signal():
    k = 0.4
    assert deer_signal([k], math.pi / k) == pytest.approx(0.5)
    assert deer_signal([k], 2 * math.pi / k) == pytest.approx(0.0, abs=1e-12)
    assert deer_signal([], 3.0) == 1.0
    assert np.allclose(deer_signal([k, 2 * k], [0.0, 1.0]), [1.0, 0.5 * (1 + math.cos(0.2) * math.cos(0.4))])


def test_finite_pulses_extend_the_evolution():
    assert finite_pulse_time('XY4', 1.0, 0.1) == pytest.approx(1.5)
    assert finite_pulse_time('FreeDecay', 1.0, 0.1) == 1.0
    assert finite_pulse_time('Echo', 1.0, 0.1, {'Echo': 4}) == pytest.approx(1.4)
    with pytest.raises(UnsupportedKindError):
        finite_pulse_time('DEER', 1.0, 0.1)


def test_decay_curve_validation():
    with pytest.raises(DataFormatError):
        DecayCurve([0.0, 2.0, 1.0], [1.0, 0.5, 0.2])
    with pytest.raises(DataFormatError):
        DecayCurve([0.0, 1.0], [1.0, 1.5])
    with pytest.raises(DataFormatError):
        DecayCurve([0.0, 1.0], [1.0, 0.5], [0.1])
    curve = DecayCurve([0.0, 1.0], [1.0, 0.5], [0.0, 0.1])
    assert len(curve) == 2
    with pytest.raises(ValueError):
        curve.values[0] = 0.0


@pytest.mark.parametrize('kind', ['Echo', 'XY4', 'MREV8InEcho'])
def test_closed_form_bath_factor_matches_the_integral(kind):
    model = NoiseModel(4.40, 14.6, 2 * math.pi * 3.11)
    times = np.linspace(0, min(3 * model.tau, 3 / model.w), 12)
    numeric = np.exp(-sequences.chi_curve(kind, times, model))
    closed = bath_factor(kind, times, model)
    assert np.allclose(numeric, closed, rtol=0.03, atol=0)
