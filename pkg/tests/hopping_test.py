import math
from dataclasses import replace

import numpy as np
import pytest

from surfspin.errors import DomainError, RegimeError
from surfspin.hopping import (EffectiveDisorder, HoppingParams, alpha_from_p1, collapse_spread, collapse_transform,
                              dressed_splitting_spread, effective_disorder, one_over_e_time,
                              pair_resonance_probability, predict_tz, resonance_monte_carlo, resonance_ratio,
                              scan_wtau, stretch_exponent, survival_closed, survival_integral, t1rho_rate,
                              w_eff_driven)
from surfspin.inference import DEFAULT_OMEGA_L, fit_stretched_exp
from surfspin.noise import NoiseModel
from surfspin.sequences import DecayCurve


def test_params_must_be_positive():
    with pytest.raises(DomainError):
        HoppingParams(alpha=0.0)
    with pytest.raises(DomainError):
        HoppingParams(density=-1.0)


def test_mean_coupling_at_default_density(hopping_params):
    assert hopping_params.mean_coupling == pytest.approx(0.5512, rel=1e-3)


def test_resonance_ratio(hopping_params):
    assert resonance_ratio(6.0, 3.77, hopping_params) == pytest.approx(326.7 / (216 * 3.77))
    with pytest.raises(DomainError):
        resonance_ratio(6.0, 0.0, hopping_params)


def test_pair_resonance_limits(hopping_params):
    x = resonance_ratio(6.0, 3.77, hopping_params)
    assert pair_resonance_probability(6.0, 0.0, 3.77, 15.0, hopping_params) == pytest.approx(x)
    assert pair_resonance_probability(6.0, 1e4, 3.77, 15.0, hopping_params) == pytest.approx(1.0)


def test_pair_resonance_refuses_strong_pairs(hopping_params):
    with pytest.raises(RegimeError):
        pair_resonance_probability(2.0, 1.0, 3.77, 15.0, hopping_params)


def test_resonance_probability_matches_simulation(hopping_params):
    expected = pair_resonance_probability(6.0, 15.0, 3.77, 15.0, hopping_params)
    estimate, stderr = resonance_monte_carlo(6.0, 15.0, 3.77, 15.0, hopping_params, trials=40000, seed=3)
    assert expected == pytest.approx(0.599, abs=0.01)
    assert abs(estimate - expected) < 4 * stderr


def test_survival_starts_at_one_inside_the_exclusion_radius(hopping_params):
    # R(t) = (J₀t)^{1/3} stays under r₀ = 2 nm until t = 8/J₀
    assert survival_integral(0.01, 3.77, 15.0, hopping_params) == 1.0
    assert survival_integral([0.0, 0.01], 3.77, 15.0, hopping_params).tolist() == [1.0, 1.0]


def test_closed_form_tracks_the_radial_integral():
    params = HoppingParams(beta=1.0, r0=2.0, j0=326.7)
    w, tau = 3.77, 15.0
    params = replace(params, alpha=alpha_from_p1(w, tau, params))
    times = np.geomspace(tau, 100 * tau, 20)
    closed = -np.log(survival_closed(times, w, tau, params, form='offset'))
    integral = -np.log(survival_integral(times, w, tau, params))
    assert np.allclose(closed, integral, rtol=0.10)


def test_renormalized_survival_starts_at_one(hopping_params):
    assert survival_closed(0.0, 4.4, 14.6, hopping_params, renormalize=True) == pytest.approx(1.0)
    assert survival_closed(0.0, 4.4, 14.6, hopping_params) < 1.0
    assert survival_closed(0.0, 4.4, 14.6, hopping_params, form='long') == 1.0


def test_survival_closed_rejects_bad_input(hopping_params):
    with pytest.raises(DomainError):
        survival_closed(1.0, 4.4, 14.6, hopping_params, form='short')
    with pytest.raises(DomainError):
        survival_closed(-1.0, 4.4, 14.6, hopping_params)
    with pytest.raises(DomainError):
        survival_closed(1.0, 0.0, 14.6, hopping_params)


def test_stretch_exponent_is_two_thirds(hopping_params):
    rng = np.random.default_rng(12)
    j = hopping_params.mean_coupling
    for _ in range(10):
        w = rng.uniform(j, 6.0)
        tau = rng.uniform(1.5 / j, 30.0)
        times = np.geomspace(2 * tau, 200 * tau, 50)
        p = stretch_exponent(times, survival_closed(times, w, tau, hopping_params, form='long'))
        assert p == pytest.approx(2 / 3, abs=0.02)


def test_stretch_exponent_needs_decay():
    with pytest.raises(DomainError):
        stretch_exponent([0.0, 1.0], [1.0, 1.0])


def test_one_over_e_time(hopping_params):
    t = one_over_e_time(4.4, 14.6, hopping_params)
    assert survival_closed(t, 4.4, 14.6, hopping_params, form='long') == pytest.approx(1 / math.e)
    # the long time form depends on t only through t/(Wτ)
    assert one_over_e_time(8.8, 14.6, hopping_params) == pytest.approx(2 * t)


def test_effective_disorder():
    assert effective_disorder(4.0, 10.0, 0.0, math.inf) == EffectiveDisorder(4.0, 10.0)
    effective = effective_disorder(3.0, 9.0, 4.0, 4.0)
    assert effective.w_e == pytest.approx(5.0)
    assert effective.tau_e == pytest.approx(1 / ((3 / 3 + 4 / 2) / 5) ** 2)
    with pytest.raises(DomainError):
        effective_disorder(3.0, 9.0, -1.0, 4.0)
    with pytest.raises(DomainError):
        effective_disorder(3.0, 9.0, 1.0, 0.0)


def test_tz_is_a_fixed_point():
    t_z = predict_tz(4.40, 14.6, 0.71, 0.57, 0.31)
    effective = effective_disorder(4.40, 14.6, 0.71, t_z)
    assert t_z == pytest.approx(0.31 * effective.tau_e * effective.w_e / 0.57, rel=1e-5)


def test_tz_is_tens_of_t2():
    t2 = 1 / 0.71
    assert 15 <= predict_tz(4.40, 14.6, 0.71, 0.57, 0.31) / t2 <= 60


def test_tz_without_interaction_disorder():
    assert predict_tz(4.0, 10.0, 0.0, 0.5, 0.31) == pytest.approx(0.31 * 10.0 * 4.0 / 0.5)
    with pytest.raises(DomainError):
        predict_tz(4.0, 10.0, 0.0, 0.0, 0.31)


@pytest.mark.parametrize('name, values, increasing', [
    ('w', (3.0, 4.4, 6.0), True),
    ('tau', (8.0, 14.6, 25.0), True),
    ('kappa', (0.2, 0.31, 0.5), True),
    ('j_mean', (0.4, 0.57, 0.9), False),
])
def test_tz_is_monotonic(name, values, increasing):
    base = {'w': 4.40, 'tau': 14.6, 'j1': 0.71, 'j_mean': 0.57, 'kappa': 0.31}
    t_z = np.array([predict_tz(**dict(base, **{name: value})) for value in values])
    steps = np.diff(t_z)
    assert np.all(steps > 0) if increasing else np.all(steps < 0)


def test_closed_survival_is_a_two_thirds_stretched_exponential(hopping_params):
    t_1e = one_over_e_time(4.40, 14.6, hopping_params)
    times = np.linspace(0, 4 * t_1e, 60)
    curve = DecayCurve(times, survival_closed(times, 4.40, 14.6, hopping_params, 'long'))
    fit = fit_stretched_exp(curve)
    assert fit.params['power'] == pytest.approx(2 / 3, abs=2e-3)
    assert fit.params['timescale'] == pytest.approx(t_1e, rel=1e-3)


def test_one_over_e_time_is_linear_in_wtau(hopping_params):
    rows = scan_wtau([2.0, 3.0, 4.0, 5.0, 6.0], [5.0, 10.0, 20.0, 30.0], hopping_params)
    x = np.array([row['wtau_e'] for row in rows])
    y = np.array([row['t_1e'] for row in rows])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    r2 = 1 - np.sum(residual ** 2) / np.sum((y - y.mean()) ** 2)
    assert len(rows) == 20
    assert slope > 0
    assert r2 > 0.99


def test_collapse_of_synthetic_systems(hopping_params):
    systems = ((2.1, 28.0), (2.9, 19.0), (3.5, 14.6), (3.8, 9.5), (4.4, 14.6), (5.2, 7.0), (6.0, 5.2))
    times = np.linspace(0, 300, 301)
    curves, disorder = [], []
    for w, tau in systems:
        t_z = predict_tz(w, tau, 0.05, hopping_params.mean_coupling, hopping_params.kappa)
        effective = effective_disorder(w, tau, 0.05, t_z)
        curves.append(DecayCurve(times, survival_closed(times, effective.w_e, effective.tau_e, hopping_params,
                                                        'long')))
        disorder.append(effective)
    collapsed = collapse_transform(curves, disorder)
    before = collapse_spread(curves, np.linspace(0, 300, 200))
    after = collapse_spread(collapsed, np.linspace(0, min(c.times[-1] for c in collapsed), 200))
    assert after * 3 <= before
    assert collapsed[0].metadata['time_column'] == 't_rescaled'


def test_collapse_needs_matching_lengths():
    with pytest.raises(DomainError):
        collapse_transform([DecayCurve([0.0, 1.0], [1.0, 0.5])], [])


@pytest.mark.parametrize('factor', [5.0, 10.0])
def test_dressed_splitting_spread(factor):
    w = 2.0
    omega = factor * w
    assert dressed_splitting_spread(w, omega, seed=4) == pytest.approx(w_eff_driven(w, omega), rel=0.10)


def test_driven_width_needs_a_drive():
    with pytest.raises(DomainError):
        w_eff_driven(1.0, 0.0)


def test_t1rho_rate_between_the_spectral_peaks(reference_noise):
    low = np.geomspace(0.1, 0.5 * DEFAULT_OMEGA_L, 30)
    high = np.linspace(0.6 * DEFAULT_OMEGA_L, DEFAULT_OMEGA_L, 30)
    assert np.all(np.diff(t1rho_rate(low, reference_noise)) < 0)
    assert np.all(np.diff(t1rho_rate(high, reference_noise)) > 0)


def test_t1rho_prefactor():
    model = NoiseModel(1.0, 2.0, 0.0)
    rate = t1rho_rate(0.0, model, prefactor=0.5)
    assert rate == pytest.approx(0.5 * 2 * (14 / 9) * 2.0)
    with pytest.raises(DomainError):
        t1rho_rate(-1.0, model)
