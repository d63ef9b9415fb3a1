""" Nuclear bath noise: power spectrum, field geometry and time domain trajectories.

The on-site detuning of a surface spin is δ(t) = γ_e B_z(t). Its longitudinal part is an
exponentially correlated Gaussian process of variance W², the Larmor part precesses at
ω_L with an exponentially correlated envelope and carries (5/9)W² of variance.
W is the longitudinal width only; the total variance is (14/9)W².
"""
import json
import logging
import math
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .constants import Constants, DEFAULT_CONSTANTS
from .errors import ConfigurationError, DomainError, OutOfRangeError

log = logging.getLogger(__name__)

LARMOR_WEIGHT = 5.0 / 9.0
DEFAULT_DEPTH_MAX = 1.0e4  # nm


class LayerKind(Enum):
    TwoDLayer = 'TwoDLayer'
    HalfSpace = 'HalfSpace'


class Component(Enum):
    Longitudinal = 'Longitudinal'
    Transverse = 'Transverse'


@dataclass(frozen=True)
class NoiseModel:
    w: float
    tau: float
    omega_l: float = 0.0

    def __post_init__(self):
        if not self.w >= 0:
            raise DomainError('Disorder width must be non negative, got %r.' % self.w)
        if not self.tau > 0:
            raise DomainError('Correlation time must be positive, got %r.' % self.tau)
        if not self.omega_l >= 0:
            raise DomainError('Larmor frequency must be non negative, got %r.' % self.omega_l)

    def resolution_limit(self) -> float:
        """ Largest trajectory step resolving both τ and the fastest oscillation. """
        limit = self.tau / 10
        fastest = max(self.omega_l, self.w)
        if fastest > 0:
            limit = min(limit, 2 * math.pi / (10 * fastest))
        return limit

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'NoiseModel':
        return cls(**json.loads(text))


@dataclass(frozen=True)
class LayerGeometry:
    kind: LayerKind
    depth: float
    proton_density: float
    spin_quantum: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, 'kind', LayerKind(self.kind))
        if not self.depth > 0:
            raise DomainError('Depth must be positive, got %r.' % self.depth)
        if not self.proton_density > 0:
            raise DomainError('Proton density must be positive, got %r.' % self.proton_density)


@dataclass(frozen=True)
class NoiseTrajectory:
    dt: float
    samples: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        if not self.dt > 0:
            raise DomainError('Trajectory spacing must be positive, got %r.' % self.dt)
        if not np.all(np.isfinite(samples)):
            raise DomainError('Trajectory samples must be finite.')

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt

    def value_at(self, t: float) -> float:
        """ Piecewise constant value, sample k holds on [k·dt, (k+1)·dt). """
        if t < 0 or t > self.duration:
            raise OutOfRangeError('t = %g μs is outside the trajectory [0, %g].' % (t, self.duration))
        return float(self.samples[min(int(t / self.dt), len(self.samples) - 1)])

    @classmethod
    def zeros(cls, dt: float, duration: float) -> 'NoiseTrajectory':
        return cls(dt, np.zeros(_sample_count(dt, duration)), None)


def spectral_density(model: NoiseModel, omega, constants: Constants = DEFAULT_CONSTANTS):
    """
    V(ω) of the field B_z in G²·μs, one sided in the Larmor term.

    :param omega: angular frequency in rad·μs⁻¹, scalar or array.
    """
    omega = np.asarray(omega, dtype=float)
    tau = model.tau
    value = 2 * (model.w / constants.gamma_e) ** 2 * (
        tau / (omega ** 2 * tau ** 2 + 1) + LARMOR_WEIGHT * tau / ((omega - model.omega_l) ** 2 * tau ** 2 + 1))
    return float(value) if value.ndim == 0 else value


def detuning_spectrum(model: NoiseModel, omega, constants: Constants = DEFAULT_CONSTANTS):
    """ γ_e²V(ω), the spectrum of the detuning δ(t) in rad²·μs⁻¹. """
    return constants.gamma_e ** 2 * spectral_density(model, omega, constants)


# B_rms² = prefactor · m_n² ρ / d^power
_GEOMETRY_LAWS = {
    (LayerKind.TwoDLayer, Component.Longitudinal): (3 * math.pi / 8, 4),
    (LayerKind.TwoDLayer, Component.Transverse): (5 * math.pi / 24, 4),
    (LayerKind.HalfSpace, Component.Longitudinal): (math.pi / 8, 3),
    (LayerKind.HalfSpace, Component.Transverse): (5 * math.pi / 72, 3),
}


def brms_squared(geom: LayerGeometry, component: Component = Component.Longitudinal,
                 constants: Constants = DEFAULT_CONSTANTS) -> float:
    """ Mean square proton field in G² seen at distance `depth` from the layer. """
    prefactor, power = _GEOMETRY_LAWS[geom.kind, Component(component)]
    moment = constants.nuclear_moment(geom.spin_quantum)
    return prefactor * moment ** 2 * geom.proton_density / geom.depth ** power


def depth_from_brms(brms: float, geom_kind: LayerKind, proton_density: float,
                    component: Component = Component.Longitudinal, spin_quantum: float = 0.5,
                    constants: Constants = DEFAULT_CONSTANTS, depth_max: float = DEFAULT_DEPTH_MAX) -> float:
    """
    Invert brms_squared for the depth in nm.

    :param brms: rms field in G.
    :param depth_max: depths beyond this are refused with an OutOfRangeError.
    """
    if not brms > 0:
        raise DomainError('The rms field must be positive, got %r.' % brms)
    kind = LayerKind(geom_kind)
    prefactor, power = _GEOMETRY_LAWS[kind, Component(component)]
    moment = constants.nuclear_moment(spin_quantum)
    depth = (prefactor * moment ** 2 * proton_density / brms ** 2) ** (1.0 / power)
    if not depth <= depth_max:
        raise OutOfRangeError('B_rms = %g G maps to a depth of %g nm, beyond the %g nm limit.'
                              % (brms, depth, depth_max))
    return depth


def disorder_width(geom: LayerGeometry, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """ W = γ_e B_∥,rms in rad·μs⁻¹. """
    return constants.gamma_e * math.sqrt(brms_squared(geom, Component.Longitudinal, constants))


def larmor_frequency(field_gauss: float, constants: Constants = DEFAULT_CONSTANTS) -> float:
    if field_gauss < 0:
        raise DomainError('Field magnitude must be non negative, got %r.' % field_gauss)
    return constants.gamma_n * field_gauss


def _sample_count(dt: float, duration: float) -> int:
    # one extra sample so the last partial step is covered
    return int(math.floor(duration / dt + 1e-9)) + 1


def ou_process(rng: np.random.Generator, n_samples: int, dt: float, tau: float, sigma: float,
               size: Tuple[int, ...] = ()) -> np.ndarray:
    """
    Stationary Ornstein-Uhlenbeck samples with the exact update
    x(t+dt) = x(t)e^{-dt/τ} + σ√(1 − e^{-2dt/τ})ξ.

    :param size: leading batch shape, the last axis is time.
    """
    decay = math.exp(-dt / tau)
    kick = sigma * math.sqrt(1 - decay ** 2)
    start = np.asarray(sigma * rng.standard_normal(size))
    if n_samples == 1:
        return start[..., None]
    noise = kick * rng.standard_normal(tuple(size) + (n_samples - 1,))
    rest = signal.lfilter([1.0], [1.0, -decay], noise, axis=-1, zi=(decay * start)[..., None])[0]
    return np.concatenate([np.asarray(start)[..., None], rest], axis=-1)


def generate_trajectory(model: NoiseModel, dt: float, duration: float, seed: int,
                        include_larmor: bool = True) -> NoiseTrajectory:
    """
    Sample δ(t) = δ_∥(t) + A(t)cos(ω_L t + φ).

    :param include_larmor: when False only the longitudinal component is generated.
    """
    limit = model.resolution_limit()
    if dt > limit * (1 + 1e-12):
        raise ConfigurationError('Trajectory step dt = %g μs is above the resolution limit %g μs '
                                 '(τ = %g, W = %g, ω_L = %g).' % (dt, limit, model.tau, model.w, model.omega_l))
    if duration < 0:
        raise DomainError('Duration must be non negative, got %r.' % duration)
    n_samples = _sample_count(dt, duration)
    rng = np.random.default_rng(seed)
    samples = ou_process(rng, n_samples, dt, model.tau, model.w)
    if include_larmor:
        envelope = ou_process(rng, n_samples, dt, model.tau, math.sqrt(2 * LARMOR_WEIGHT) * model.w)
        phase = rng.uniform(0, 2 * math.pi)
        samples = samples + envelope * np.cos(model.omega_l * np.arange(n_samples) * dt + phase)
    return NoiseTrajectory(dt, samples, seed)


def generate_trajectories(model: NoiseModel, dt: float, duration: float, seed: int, count: int,
                          include_larmor: bool = True) -> Sequence[NoiseTrajectory]:
    """ Independent trajectories with child seeds spawned from `seed`. """
    children = np.random.SeedSequence(seed).generate_state(count)
    return [generate_trajectory(model, dt, duration, int(child), include_larmor) for child in children]


def empirical_autocorrelation(samples: np.ndarray, max_lag: int) -> np.ndarray:
    """
    ⟨x(t₀ + k·dt)x(t₀)⟩ for k = 0..max_lag, averaged over trajectories and start times.

    :param samples: array of shape (trajectories, time).
    """
    samples = np.atleast_2d(samples)
    n = samples.shape[-1]
    if max_lag >= n:
        raise DomainError('Lag %d does not fit in %d samples.' % (max_lag, n))
    origins = n - max_lag
    return np.array([np.mean(samples[:, :origins] * samples[:, k:k + origins]) for k in range(max_lag + 1)])


def fit_autocorrelation(lags: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """ Amplitude and decay time of A·e^{-t/τ} by a log-linear fit of the positive part. """
    keep = values > 0
    slope, intercept = np.polyfit(lags[keep], np.log(values[keep]), 1)
    if slope >= 0:
        raise DomainError('Autocorrelation does not decay.')
    return math.exp(intercept), -1.0 / slope


def periodogram(samples: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Averaged two sided power spectrum estimate dt·|FFT|²/N at non negative frequencies.

    :return: angular frequencies (rad·μs⁻¹) and the spectrum estimate (rad²·μs⁻¹).
    """
    samples = np.atleast_2d(samples)
    n = samples.shape[-1]
    spectrum = dt * np.abs(np.fft.rfft(samples, axis=-1)) ** 2 / n
    omega = 2 * math.pi * np.fft.rfftfreq(n, dt)
    return omega, spectrum.mean(axis=0)
