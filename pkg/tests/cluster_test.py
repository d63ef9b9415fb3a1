import math

import numpy as np
import pytest

from surfspin.cluster import (Cluster, ClusterTemplate, _Evolver, basis_sz, global_rotation, pauli, propagate,
                              pulse_schedule, sequence_response, spin_lock_decay, static_hamiltonian,
                              sz_autocorrelation)
from surfspin.ensemble import CouplingSet
from surfspin.errors import CapacityError, DomainError, OutOfRangeError, UnsupportedKindError
from surfspin.hopping import t1rho_rate
from surfspin.inference import fit_stretched_exp
from surfspin.noise import NoiseModel, NoiseTrajectory
from surfspin.sequences import PulseSequence, chi_numeric, exact_ramsey_chi, filter_function, two_spin_signal

J1 = 0.71
QUIET = NoiseModel(0.0, 1.0, 0.0)


def pair(j=J1):
    return ClusterTemplate(2, QUIET, couplings=CouplingSet.from_pairs(2, [(0, 1, j)]))


def star(n, j):
    return CouplingSet.from_pairs(n, [(0, i, j) for i in range(1, n)])


def test_basis_sz():
    assert basis_sz(2).tolist() == [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]


def test_static_hamiltonian_is_hermitian_and_traceless():
    h = static_hamiltonian(star(3, 0.4), drive=(2.0, 'y'), detuning=0.3)
    assert np.allclose(h, h.conj().T)
    assert abs(np.trace(h)) < 1e-12


def test_flip_flop_couples_antiparallel_pairs():
    h = static_hamiltonian(star(2, 1.0))
    # |↑↓⟩ and |↓↑⟩ are states 1 and 2
    assert h[1, 2] == pytest.approx(-0.25)
    assert h[0, 0] == pytest.approx(0.25)
    assert not np.any(static_hamiltonian(star(2, 1.0), flip_flop=False)[1, 2])


def test_global_pi_rotation_flips_every_spin():
    rotation = global_rotation(3, 'x', math.pi)
    state = np.zeros(8)
    state[0] = 1
    assert abs((rotation @ state)[7]) == pytest.approx(1.0)


def test_two_spin_echo_is_exact():
    grid = np.linspace(0, 20, 200)
    result = sequence_response(pair(), PulseSequence('Echo'), grid)
    assert np.max(np.abs(result.correlation - two_spin_signal(J1, grid))) < 1e-8


def test_two_spin_ramsey_matches_the_echo():
    grid = np.linspace(0, 10, 21)
    result = sequence_response(pair(), PulseSequence('Ramsey'), grid)
    assert np.allclose(result.correlation, two_spin_signal(J1, grid), atol=1e-8)


def test_two_spin_sz_correlation():
    grid = np.linspace(0, 20, 41)
    result = sz_autocorrelation(pair(), grid)
    assert np.allclose(result.correlation, 0.5 * (1 + np.cos(J1 * grid / 2)), atol=1e-8)


def test_undriven_spin_lock_is_the_free_signal():
    grid = np.linspace(0, 10, 21)
    result = spin_lock_decay(pair(), 0.0, grid)
    assert np.allclose(result.correlation, two_spin_signal(J1, grid), atol=1e-8)


def test_strong_drive_keeps_only_the_locked_exchange():
    grid = np.linspace(0, 15, 31)
    result = spin_lock_decay(pair(), 100.0, grid)
    assert np.allclose(result.correlation, 0.5 * (1 + np.cos(J1 * grid / 4)), atol=0.02)


def test_without_bath_spins_nothing_decays():
    template = ClusterTemplate(1, QUIET)
    for kind in ('Ramsey', 'Echo', 'XY4', 'MREV8'):
        result = sequence_response(template, PulseSequence(kind), [0.0, 1.0, 2.0])
        assert np.allclose(result.correlation, 1.0)


def test_single_spin_echo_follows_the_noise_cumulant():
    model = NoiseModel(1.0, 2.0, 0.0)
    template = ClusterTemplate(1, model, dt=0.02, include_larmor=False)
    grid = np.array([0.5, 1.0, 2.0, 3.0])
    result = sequence_response(template, PulseSequence('Echo'), grid, n_realizations=400, seed=4)
    s = grid / model.tau
    chi = model.w ** 2 * model.tau ** 2 * (s - 3 + 4 * np.exp(-s / 2) - np.exp(-s))
    assert np.all(np.abs(result.correlation - np.exp(-chi)) <= 4 * result.stderr + 1e-3)


def test_single_spin_ramsey_follows_the_noise_cumulant():
    model = NoiseModel(1.0, 2.0, 0.0)
    template = ClusterTemplate(1, model, dt=0.02, include_larmor=False)
    grid = np.array([0.5, 1.0, 2.0])
    result = sequence_response(template, PulseSequence('Ramsey'), grid, n_realizations=400, seed=5)
    expected = np.exp(-exact_ramsey_chi(grid, model))
    assert np.all(np.abs(result.correlation - expected) <= 4 * result.stderr + 1e-3)


def toggling_frame_filter(kind, x):
    """ F(x) of a single spin schedule from the y and z parts of its toggled σ^z. """
    schedule = pulse_schedule(kind, 1.0, 1)
    times = [0.0] + [time for time, _ in schedule] + [1.0]
    rotations = [np.eye(2)] + [rotation for _, rotation in schedule]
    phases = np.exp(1j * np.outer(x, times))
    frame = np.eye(2, dtype=complex)
    amplitudes = np.zeros((2, len(x)), dtype=complex)
    for j, rotation in enumerate(rotations):
        frame = rotation @ frame
        toggled = frame.conj().T @ pauli(1, 0, 'z') @ frame
        for row, axis in enumerate('yz'):
            component = 0.5 * np.trace(toggled @ pauli(1, 0, axis)).real
            amplitudes[row] += component * (phases[:, j + 1] - phases[:, j])
    return 0.5 * np.sum(np.abs(amplitudes) ** 2, axis=0)


@pytest.mark.parametrize('kind', ['Ramsey', 'Echo', 'XY4', 'MREV8InEcho'])
def test_filters_match_the_simulated_schedules(kind):
    x = np.linspace(0.05, 150, 400)
    assert np.allclose(toggling_frame_filter(kind, x), filter_function(kind, x, 1.0), atol=1e-9)


@pytest.mark.slow
def test_single_spin_mrev8_follows_the_noise_cumulant():
    model = NoiseModel(1.0, 2.0, 0.0)
    template = ClusterTemplate(1, model, dt=0.01, include_larmor=False)
    grid = np.array([1.0, 2.0, 3.0])
    result = sequence_response(template, PulseSequence('MREV8InEcho'), grid, n_realizations=400, seed=7)
    # at ω_L = 0 the Larmor branch scales chi_numeric by 14/9, the simulation leaves it out
    chi = np.array([9 / 14 * chi_numeric('MREV8InEcho', t, model, larmor='lorentzian') for t in grid])
    assert np.all(np.abs(result.correlation - np.exp(-chi)) <= 4 * result.stderr + 5e-3)


def test_propagator_is_unitary_and_conserves_total_sz():
    template = ClusterTemplate(3, NoiseModel(1.0, 5.0, 0.0), couplings=star(3, 0.6))
    cluster = template.build(np.random.SeedSequence(3), 4.0)
    u = propagate(cluster, 3.7)
    total_sz = sum(pauli(3, spin, 'z') for spin in range(3))
    assert np.allclose(u @ u.conj().T, np.eye(8))
    assert np.allclose(u @ total_sz, total_sz @ u)


def test_ising_couplings_freeze_sz():
    template = ClusterTemplate(3, NoiseModel(1.0, 5.0, 0.0), couplings=star(3, 0.6), flip_flop=False)
    result = sz_autocorrelation(template, [0.0, 1.0, 2.5, 4.0], n_realizations=3, seed=1)
    assert np.allclose(result.correlation, 1.0)


def test_eigendecompositions_are_bounded():
    template = ClusterTemplate(3, NoiseModel(1.0, 5.0, 0.0), couplings=star(3, 0.6), dt=0.05)
    cluster = template.build(np.random.SeedSequence(8), 5.0)
    evolver = _Evolver(cluster, cache_bytes=16 * 8 * 9 * 10)
    u = evolver.evolve(np.eye(8, dtype=complex), 0.0, 5.0)
    assert evolver.max_entries == 10
    assert len(evolver._eigen) == 10
    assert np.allclose(u, propagate(cluster, 5.0))


def one_over_e_time(result):
    below = np.flatnonzero(result.correlation < 1 / math.e)
    assert below.size, 'no decay below 1/e on the grid'
    k = below[0]
    t0, t1 = result.times[k - 1], result.times[k]
    c0, c1 = result.correlation[k - 1], result.correlation[k]
    return t0 + (c0 - 1 / math.e) * (t1 - t0) / (c0 - c1)


@pytest.mark.slow
def test_xy4_and_echo_decay_on_the_same_timescale():
    template = ClusterTemplate(3, NoiseModel(1.0, 2.0, 0.0), couplings=star(3, 0.3), include_larmor=False)
    grid = np.linspace(0.5, 16.0, 32)
    echo = sequence_response(template, PulseSequence('Echo'), grid, n_realizations=40, seed=11)
    xy4 = sequence_response(template, PulseSequence('XY4'), grid, n_realizations=40, seed=11)
    ratio = one_over_e_time(xy4) / one_over_e_time(echo)
    assert 0.5 < ratio < 4


@pytest.mark.slow
@pytest.mark.parametrize('omega', [4.0, 8.0])
def test_single_spin_spin_lock_rate(omega):
    model = NoiseModel(1.0, 0.2, 0.0)
    expected = (9 / 14) * t1rho_rate(omega, model)
    template = ClusterTemplate(1, model, include_larmor=False)
    grid = np.linspace(0.5, 2 / expected, 12)
    result = spin_lock_decay(template, omega, grid, n_realizations=400, seed=6)
    fit = fit_stretched_exp(result.to_curve(), power=1)
    rate = 1 / fit.params['timescale']
    sigma = fit.sigmas['timescale'] / fit.params['timescale'] ** 2
    assert abs(rate - expected) <= 3 * sigma


def test_strong_disorder_freezes_the_central_spin():
    template = ClusterTemplate(6, NoiseModel(4.0, 15.0, 0.0), couplings=star(6, 0.5))
    result = sz_autocorrelation(template, [0.0, 5.0, 10.0], n_realizations=10, seed=1)
    assert result.correlation[0] == pytest.approx(1.0)
    assert result.correlation[-1] > 1 / math.e


def test_thread_count_does_not_change_results():
    template = ClusterTemplate(3, NoiseModel(1.0, 5.0, 0.0), density=0.02)
    grid = np.linspace(0, 2, 5)
    serial = sz_autocorrelation(template, grid, n_realizations=6, seed=9, threads=1)
    pooled = sz_autocorrelation(template, grid, n_realizations=6, seed=9, threads=3)
    assert np.array_equal(serial.correlation, pooled.correlation)
    assert np.array_equal(serial.stderr, pooled.stderr)


def test_sampled_clusters_are_reproducible():
    template = ClusterTemplate(3, NoiseModel(1.0, 5.0, 0.0), density=0.02)
    a = sequence_response(template, PulseSequence('XY4'), [0.5, 1.0], n_realizations=3, seed=2)
    b = sequence_response(template, PulseSequence('XY4'), [0.5, 1.0], n_realizations=3, seed=2)
    assert np.array_equal(a.correlation, b.correlation)
    assert a.metadata['kind'] == 'XY4'
    assert a.n_disorder == 3


def test_single_realization_has_zero_stderr():
    result = sz_autocorrelation(pair(), [0.0, 1.0])
    assert not np.any(result.stderr)
    assert result.to_curve().sigmas is not None


def test_finite_pulses_lengthen_the_evolution():
    free = sequence_response(pair(), PulseSequence('Echo'), [1.0, 2.0])
    pulsed = sequence_response(pair(), PulseSequence('Echo', pi_time=0.5), [1.0, 2.0])
    assert np.allclose(pulsed.correlation, two_spin_signal(J1, [2.0, 3.0]), atol=1e-8)
    assert not np.allclose(free.correlation, pulsed.correlation)


def test_pulse_schedules():
    assert len(pulse_schedule('Echo', 2.0, 1)) == 1
    assert [time for time, _ in pulse_schedule('XY4', 8.0, 1)] == [1.0, 3.0, 5.0, 7.0]
    assert len(pulse_schedule('MREV8InEcho', 24.0, 1)) == 17
    with pytest.raises(UnsupportedKindError):
        pulse_schedule('DEER', 1.0, 1)
    with pytest.raises(UnsupportedKindError):
        sequence_response(pair(), PulseSequence('SpinLock'), [1.0])


def test_cluster_size_is_capped():
    with pytest.raises(CapacityError):
        ClusterTemplate(11, QUIET, density=0.01)
    with pytest.raises(CapacityError):
        ClusterTemplate(4, QUIET, density=0.01, max_spins=3)


def test_template_needs_a_source_of_couplings():
    with pytest.raises(DomainError):
        ClusterTemplate(3, QUIET)
    with pytest.raises(DomainError):
        ClusterTemplate(3, QUIET, couplings=star(2, 1.0))


def test_cluster_validates_its_trajectories():
    couplings = star(2, 1.0)
    with pytest.raises(DomainError):
        Cluster(couplings, (NoiseTrajectory.zeros(0.1, 1.0),))
    with pytest.raises(DomainError):
        Cluster(couplings, (NoiseTrajectory.zeros(0.1, 1.0), NoiseTrajectory.zeros(0.2, 1.0)))
    with pytest.raises(DomainError):
        Cluster(couplings, (NoiseTrajectory.zeros(0.1, 1.0),) * 2, drive=(1.0, 'w'))


def test_propagation_stays_within_the_trajectory():
    cluster = Cluster(star(2, 1.0), (NoiseTrajectory.zeros(0.1, 1.0),) * 2)
    u = propagate(cluster, 1.0)
    assert np.allclose(u @ u.conj().T, np.eye(4))
    with pytest.raises(OutOfRangeError):
        propagate(cluster, 5.0)
    with pytest.raises(OutOfRangeError):
        propagate(cluster, -1.0)


def test_time_grid_must_increase():
    with pytest.raises(DomainError):
        sz_autocorrelation(pair(), [1.0, 0.5])
    with pytest.raises(DomainError):
        sz_autocorrelation(pair(), [])
    with pytest.raises(DomainError):
        sz_autocorrelation(pair(), [0.0, 1.0], n_realizations=0)
