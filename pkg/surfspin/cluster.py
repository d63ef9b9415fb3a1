""" Exact dynamics of a central surface spin and up to a few bath spins.

H(t) = Σ_{i<j} J_ij [S_i^zS_j^z − ¼(S_i⁺S_j⁻ + S_i⁻S_j⁺)] + Σ_i δ_i(t)S_i^z (+ ΩΣ_iS_i^axis)

is held constant over each step of the on-site noise trajectories and exponentiated exactly.
Correlations are infinite temperature traces over the full 2^N space, so the only randomness
left is in the disorder realizations (positions and noise), which run on a thread pool.
"""
import functools
import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constants import Constants, DEFAULT_CONSTANTS
from .ensemble import (CouplingSet, DEFAULT_AZIMUTH, DEFAULT_MAX_RADIUS, DEFAULT_MIN_RADIUS, DEFAULT_TILT,
                       ensemble_couplings, sample_ensemble)
from .errors import CapacityError, DomainError, OutOfRangeError, UnsupportedKindError
from .noise import NoiseModel, NoiseTrajectory, generate_trajectory
from .sequences import DecayCurve, PulseSequence, SequenceKind, finite_pulse_time

log = logging.getLogger(__name__)

DEFAULT_MAX_SPINS = 10
EIGEN_CACHE_BYTES = 256 * 2 ** 20

_PAULI = {
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# (fraction of the total time, axis, angle) of each ideal pulse
_PULSE_SCHEDULES = {
    SequenceKind.Ramsey: (),
    SequenceKind.Echo: ((0.5, 'x', math.pi),),
    SequenceKind.XY4: ((1 / 8, 'x', math.pi), (3 / 8, 'y', math.pi), (5 / 8, 'x', math.pi), (7 / 8, 'y', math.pi)),
}
_MREV8_CYCLE = ((1, 'x', 1), (2, 'y', -1), (4, 'y', 1), (5, 'x', -1),
                (7, 'x', -1), (8, 'y', 1), (10, 'y', -1), (11, 'x', 1))


def _mrev8_in_echo():
    # two 12-slot MREV-8 cycles around a refocusing π pulse, 24 slots in total
    pulses = [(slot / 24, axis, sign * math.pi / 2) for slot, axis, sign in _MREV8_CYCLE]
    pulses.append((0.5, 'x', math.pi))
    pulses += [((12 + slot) / 24, axis, sign * math.pi / 2) for slot, axis, sign in _MREV8_CYCLE]
    return tuple(pulses)


_PULSE_SCHEDULES[SequenceKind.MREV8InEcho] = _mrev8_in_echo()


def pauli(n_spins: int, spin: int, axis: str) -> np.ndarray:
    """ σ^axis acting on one spin of an n spin register, spin 0 being the most significant bit. """
    return np.kron(np.kron(np.eye(2 ** spin), _PAULI[axis]), np.eye(2 ** (n_spins - spin - 1)))


@functools.lru_cache(maxsize=None)
def basis_sz(n_spins: int) -> np.ndarray:
    """ S^z eigenvalues (±½) of every spin in every computational basis state, shape (2^N, N). """
    index = np.arange(2 ** n_spins)[:, None]
    bits = (index >> (n_spins - 1 - np.arange(n_spins))[None, :]) & 1
    values = 0.5 - bits
    values.setflags(write=False)
    return values


def global_rotation(n_spins: int, axis: str, angle: float) -> np.ndarray:
    """ exp(−iθΣ_jS_j^axis) as a product of single spin rotations. """
    single = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * _PAULI[axis]
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n_spins):
        out = np.kron(out, single)
    return out


def static_hamiltonian(couplings: CouplingSet, flip_flop: bool = True, drive: Optional[Tuple[float, str]] = None,
                       detuning: float = 0.0) -> np.ndarray:
    """ Time independent part of the cluster Hamiltonian in rad·μs⁻¹. """
    n = couplings.n_spins
    sz = basis_sz(n)
    matrix = couplings.matrix
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if matrix[i, j] != 0]
    diagonal = detuning * sz.sum(axis=1)
    for i, j in pairs:
        diagonal = diagonal + matrix[i, j] * sz[:, i] * sz[:, j]
    hamiltonian = np.diag(diagonal).astype(complex)
    if flip_flop:
        index = np.arange(2 ** n)
        for i, j in pairs:
            differ = sz[:, i] != sz[:, j]
            mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
            hamiltonian[index[differ] ^ mask, index[differ]] += -matrix[i, j] / 4
    if drive is not None and drive[0] != 0:
        omega, axis = drive
        hamiltonian += omega / 2 * sum(pauli(n, spin, axis) for spin in range(n))
    return hamiltonian


@dataclass(frozen=True)
class Cluster:
    couplings: CouplingSet
    onsite: Tuple[NoiseTrajectory, ...]
    drive: Optional[Tuple[float, str]] = None
    flip_flop: bool = True
    detuning: float = 0.0
    max_spins: int = DEFAULT_MAX_SPINS

    def __post_init__(self):
        object.__setattr__(self, 'onsite', tuple(self.onsite))
        n = self.couplings.n_spins
        if n < 1:
            raise DomainError('A cluster needs at least the central spin.')
        if n > self.max_spins:
            raise CapacityError('%d spins exceed the configured maximum of %d.' % (n, self.max_spins))
        if len(self.onsite) != n:
            raise DomainError('Expected %d on-site trajectories, got %d.' % (n, len(self.onsite)))
        if len({traj.dt for traj in self.onsite}) != 1 or len({len(traj.samples) for traj in self.onsite}) != 1:
            raise DomainError('On-site trajectories must share spacing and duration.')
        if self.drive is not None:
            omega, axis = self.drive
            if omega < 0 or axis not in _PAULI:
                raise DomainError('Drive must be a non negative Ω and an axis among x, y, z; got %r.' % (self.drive,))

    @property
    def n_spins(self) -> int:
        return self.couplings.n_spins

    @property
    def dimension(self) -> int:
        return 2 ** self.n_spins

    @property
    def dt(self) -> float:
        return self.onsite[0].dt

    @property
    def duration(self) -> float:
        return self.onsite[0].duration

    @functools.cached_property
    def hamiltonian(self) -> np.ndarray:
        return static_hamiltonian(self.couplings, self.flip_flop, self.drive, self.detuning)


class _Evolver:
    """
    Left multiplies propagators onto an operator, reusing each step's eigendecomposition.

    Decompositions are kept in a least recently used cache of at most `cache_bytes`.
    """

    def __init__(self, cluster: Cluster, cache_bytes: int = EIGEN_CACHE_BYTES):
        self.cluster = cluster
        self.h0 = cluster.hamiltonian
        self.diagonal = not np.any(self.h0 - np.diag(np.diag(self.h0)))
        self.noise = np.array([traj.samples for traj in cluster.onsite])
        self.static = not np.any(self.noise)
        self.fields = basis_sz(cluster.n_spins) @ self.noise  # (2^N, steps)
        entry_bytes = 16 * cluster.dimension * (cluster.dimension + 1)
        self.max_entries = max(1, cache_bytes // entry_bytes)
        self._eigen = OrderedDict()

    def _decomposition(self, k):
        if k in self._eigen:
            self._eigen.move_to_end(k)
            return self._eigen[k]
        hamiltonian = self.h0 if self.static else self.h0 + np.diag(self.fields[:, k])
        decomposition = self._eigen[k] = np.linalg.eigh(hamiltonian)
        if len(self._eigen) > self.max_entries:
            self._eigen.popitem(last=False)
        return decomposition

    def _apply(self, u, k, duration):
        if self.diagonal:
            energies = np.diag(self.h0).real + (0 if self.static else self.fields[:, k])
            return np.exp(-1j * energies * duration)[:, None] * u
        energies, vectors = self._decomposition(0 if self.static else k)
        return (vectors * np.exp(-1j * energies * duration)) @ (vectors.conj().T @ u)

    def evolve(self, u, start, stop):
        if stop > self.cluster.duration * (1 + 1e-12):
            raise OutOfRangeError('t = %g μs is beyond the noise trajectory (%g μs).' % (stop, self.cluster.duration))
        if stop <= start:
            return u
        if self.static:
            return self._apply(u, 0, stop - start)
        dt = self.cluster.dt
        last = len(self.cluster.onsite[0].samples) - 1
        now = start
        while now < stop:
            k = min(int(math.floor(now / dt + 1e-9)), last)
            end = min(stop, (k + 1) * dt) if k < last else stop
            u = self._apply(u, k, end - now)
            now = end
        return u


def propagate(cluster: Cluster, t: float, pulses: Sequence[Tuple[float, np.ndarray]] = ()) -> np.ndarray:
    """
    Evolution operator U(t) over the 2^N space.

    :param pulses: (time, unitary) pairs applied instantaneously, in time order.
    """
    if t < 0:
        raise OutOfRangeError('Propagation time must be non negative, got %r.' % t)
    if t > cluster.duration * (1 + 1e-12):
        raise OutOfRangeError('t = %g μs is beyond the noise trajectory (%g μs).' % (t, cluster.duration))
    return _run(_Evolver(cluster), t, pulses)


def _run(evolver: _Evolver, t: float, pulses) -> np.ndarray:
    u = np.eye(evolver.cluster.dimension, dtype=complex)
    now = 0.0
    for time, rotation in pulses:
        u = rotation @ evolver.evolve(u, now, time)
        now = time
    return evolver.evolve(u, now, t)


def infinite_temperature_correlation(u: np.ndarray, observable: np.ndarray) -> float:
    """ Tr[A(t)A]/2^N with A(t) = U†AU; A = σ gives 4⟨S(t)S⟩. """
    return float(np.vdot(u, observable @ u @ observable).real / len(u))


@dataclass(frozen=True)
class CorrelationResult:
    times: np.ndarray
    correlation: np.ndarray
    n_disorder: int
    stderr: np.ndarray
    metadata: Mapping = field(default_factory=dict, compare=False)

    def to_curve(self) -> DecayCurve:
        return DecayCurve(self.times, self.correlation, self.stderr, dict(self.metadata))

    def to_json(self) -> str:
        return json.dumps({'times': list(map(float, self.times)),
                           'correlation': list(map(float, self.correlation)),
                           'stderr': list(map(float, self.stderr)),
                           'n_disorder': self.n_disorder,
                           'metadata': dict(self.metadata)}, sort_keys=True)


@dataclass(frozen=True)
class ClusterTemplate:
    """
    Recipe for one disorder realization: fixed couplings or positions sampled at `density`,
    and fresh on-site trajectories for every spin.
    """
    n_spins: int
    noise: NoiseModel
    density: Optional[float] = None
    couplings: Optional[CouplingSet] = None
    min_radius: float = DEFAULT_MIN_RADIUS
    max_radius: float = DEFAULT_MAX_RADIUS
    dt: Optional[float] = None
    flip_flop: bool = True
    include_larmor: bool = True
    max_spins: int = DEFAULT_MAX_SPINS
    tilt: float = DEFAULT_TILT
    azimuth: float = DEFAULT_AZIMUTH
    constants: Constants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if self.n_spins < 1:
            raise DomainError('A cluster needs at least the central spin, got %r.' % self.n_spins)
        if self.n_spins > self.max_spins:
            raise CapacityError('%d spins exceed the configured maximum of %d.' % (self.n_spins, self.max_spins))
        if self.couplings is not None and self.couplings.n_spins != self.n_spins:
            raise DomainError('Fixed couplings cover %d spins, the template has %d.'
                              % (self.couplings.n_spins, self.n_spins))
        if self.couplings is None and self.density is None and self.n_spins > 1:
            raise DomainError('Give either a spin density or fixed couplings.')

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else self.noise.resolution_limit()

    def describe(self) -> dict:
        return {'n_spins': self.n_spins, 'w': self.noise.w, 'tau': self.noise.tau, 'omega_l': self.noise.omega_l,
                'density': self.density, 'fixed_couplings': self.couplings is not None, 'dt': self.step,
                'flip_flop': self.flip_flop, 'include_larmor': self.include_larmor, 'min_radius': self.min_radius}

    def build(self, seed: np.random.SeedSequence, duration: float, drive: Optional[Tuple[float, str]] = None,
              detuning: float = 0.0) -> Cluster:
        states = seed.generate_state(self.n_spins + 1)
        couplings = self.couplings
        if couplings is None:
            if self.n_spins == 1:
                couplings = CouplingSet(np.zeros((1, 1)))
            else:
                ensemble = sample_ensemble(self.density, self.n_spins - 1, self.min_radius, int(states[0]),
                                           self.max_radius, self.tilt, self.azimuth)
                couplings = ensemble_couplings(ensemble, self.constants)
        if self.noise.w == 0:
            onsite = [NoiseTrajectory.zeros(self.step, duration) for _ in range(self.n_spins)]
        else:
            onsite = [generate_trajectory(self.noise, self.step, duration, int(state), self.include_larmor)
                      for state in states[1:]]
        return Cluster(couplings, tuple(onsite), drive, self.flip_flop, detuning, self.max_spins)


def _check_grid(t_grid) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float).ravel()
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise DomainError('Time grid must be non empty, non negative and strictly increasing.')
    return grid


def _average(realization: Callable[[np.random.SeedSequence], np.ndarray], grid: np.ndarray, n_realizations: int,
             seed: int, threads: int, metadata: dict) -> CorrelationResult:
    if n_realizations < 1:
        raise DomainError('At least one realization is needed, got %r.' % n_realizations)
    children = np.random.SeedSequence(seed).spawn(n_realizations)
    if threads > 1:
        with ThreadPool(threads) as pool:
            rows = pool.map(realization, children)
    else:
        rows = [realization(child) for child in children]
    rows = np.array(rows)
    mean = rows.mean(axis=0)
    if n_realizations > 1:
        stderr = rows.std(axis=0, ddof=1) / math.sqrt(n_realizations)
    else:
        stderr = np.zeros_like(mean)
    metadata = dict(metadata, seed=seed, n_realizations=n_realizations)
    log.info('Averaged %d realizations of %s' % (n_realizations, metadata.get('observable')))
    return CorrelationResult(grid, mean, n_realizations, stderr, metadata)


def _correlation_scan(template: ClusterTemplate, grid: np.ndarray, axis: str, drive, seed_seq) -> np.ndarray:
    cluster = template.build(seed_seq, grid[-1], drive)
    observable = pauli(template.n_spins, 0, axis)
    evolver = _Evolver(cluster)
    u = np.eye(cluster.dimension, dtype=complex)
    values, now = [], 0.0
    for t in grid:
        u = evolver.evolve(u, now, t)
        now = t
        values.append(infinite_temperature_correlation(u, observable))
    return np.array(values)


def sz_autocorrelation(template: ClusterTemplate, t_grid, n_realizations: int = 1, seed: int = 0,
                       threads: int = 1) -> CorrelationResult:
    """ 4⟨S_0^z(t)S_0^z(0)⟩ of the central spin averaged over disorder realizations. """
    grid = _check_grid(t_grid)
    metadata = dict(template.describe(), observable='sz')
    return _average(functools.partial(_correlation_scan, template, grid, 'z', None), grid, n_realizations, seed,
                    threads, metadata)


def spin_lock_decay(template: ClusterTemplate, omega: float, t_grid, n_realizations: int = 1, seed: int = 0,
                    threads: int = 1) -> CorrelationResult:
    """ 4⟨S_0^y(t)S_0^y(0)⟩ under a resonant drive ΩΣS^y on every surface spin. """
    if omega < 0:
        raise DomainError('Drive strength must be non negative, got %r.' % omega)
    grid = _check_grid(t_grid)
    metadata = dict(template.describe(), observable='spin_lock', omega=omega)
    return _average(functools.partial(_correlation_scan, template, grid, 'y', (omega, 'y')), grid, n_realizations,
                    seed, threads, metadata)


def pulse_schedule(kind, total_time: float, n_spins: int) -> List[Tuple[float, np.ndarray]]:
    """ Ideal pulses of a sequence lasting `total_time`, as (time, rotation) pairs. """
    kind = SequenceKind.from_name(kind)
    if kind not in _PULSE_SCHEDULES:
        raise UnsupportedKindError('%s cannot be simulated as a pulse sequence.' % kind.value)
    return [(fraction * total_time, global_rotation(n_spins, axis, angle))
            for fraction, axis, angle in _PULSE_SCHEDULES[kind]]


def _sequence_scan(template: ClusterTemplate, sequence: PulseSequence, grid: np.ndarray, pi_equivalents,
                   seed_seq) -> np.ndarray:
    totals = finite_pulse_time(sequence.kind, grid, sequence.pi_time, pi_equivalents)
    detuning = sequence.detuning if sequence.kind is SequenceKind.Ramsey else 0.0
    cluster = template.build(seed_seq, float(np.max(totals)), None, detuning)
    observable = pauli(template.n_spins, 0, 'x')
    evolver = _Evolver(cluster)
    values = []
    for total in np.atleast_1d(totals):
        u = _run(evolver, total, pulse_schedule(sequence.kind, total, template.n_spins))
        values.append(infinite_temperature_correlation(u, observable))
    return np.array(values)


def sequence_response(template: ClusterTemplate, sequence: PulseSequence, t_grid, n_realizations: int = 1,
                      seed: int = 0, threads: int = 1, pi_equivalents: Optional[Mapping] = None) -> CorrelationResult:
    """
    Transverse signal 4⟨S_0^x⟩ after a pulse sequence, ideal pulses interleaved with free evolution.

    :param t_grid: free evolution times; finite π pulses lengthen each evolution by finite_pulse_time.
    """
    if sequence.kind not in _PULSE_SCHEDULES:
        raise UnsupportedKindError('%s cannot be simulated as a pulse sequence.' % sequence.kind.value)
    grid = _check_grid(t_grid)
    metadata = dict(template.describe(), observable='sequence', kind=sequence.kind.value,
                    pi_time=sequence.pi_time, detuning=sequence.detuning)
    scan = functools.partial(_sequence_scan, template, sequence, grid, pi_equivalents)
    return _average(scan, grid, n_realizations, seed, threads, metadata)
