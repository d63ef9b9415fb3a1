""" Pulse sequences, filter functions and the decay laws they imply.

χ(t) = γ_e² ∫ dω/2π V(ω) F(ωt)/ω² over the whole real axis. The zero frequency Lorentzian
is always integrated numerically; the Larmor peak is either the analytic delta term
(5/9)W²F(ω_L t)/ω_L² or its Lorentzian, integrated like the rest.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .constants import Constants, DEFAULT_CONSTANTS
from .errors import DataFormatError, DomainError, NumericError, UnsupportedKindError
from .noise import LARMOR_WEIGHT, NoiseModel

log = logging.getLogger(__name__)


class SequenceKind(Enum):
    Ramsey = 'Ramsey'
    Echo = 'Echo'
    XY4 = 'XY4'
    MREV8InEcho = 'MREV8InEcho'
    DEER = 'DEER'
    SpinLock = 'SpinLock'
    FreeDecay = 'FreeDecay'

    @classmethod
    def from_name(cls, name) -> 'SequenceKind':
        """ Accepts enum members, exact values and case insensitive short names like 'xy4' or 'mrev8'. """
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace('-', '').replace('_', '')
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        aliases = {'mrev8': cls.MREV8InEcho, 'mrev': cls.MREV8InEcho, 'spinlock': cls.SpinLock,
                   'fid': cls.FreeDecay, 'hahn': cls.Echo}
        if key in aliases:
            return aliases[key]
        raise UnsupportedKindError('Unknown pulse sequence %r.' % name)


# kinds with a scalar filter function; FreeDecay is an unpulsed free induction decay
FILTER_KINDS = (SequenceKind.Ramsey, SequenceKind.FreeDecay, SequenceKind.Echo,
                SequenceKind.XY4, SequenceKind.MREV8InEcho)
DECOUPLING_KINDS = (SequenceKind.Echo, SequenceKind.XY4, SequenceKind.MREV8InEcho)

PI_EQUIVALENTS = {
    SequenceKind.FreeDecay: 0,
    SequenceKind.Ramsey: 1,
    SequenceKind.SpinLock: 1,
    SequenceKind.Echo: 2,
    SequenceKind.XY4: 5,
    SequenceKind.MREV8InEcho: 10,
}

PUBLISHED_ENVELOPES = {
    SequenceKind.Echo: 1 / 12,
    SequenceKind.XY4: 13 / 4500,
    SequenceKind.MREV8InEcho: 49 / 2592,
}

# period of F in x = ωt, and the x → 0 limit of F(x)/x⁴
_FILTER_PERIODS = {
    SequenceKind.Ramsey: 2 * math.pi,
    SequenceKind.FreeDecay: 2 * math.pi,
    SequenceKind.Echo: 4 * math.pi,
    SequenceKind.XY4: 32 * math.pi,
    SequenceKind.MREV8InEcho: 48 * math.pi,
}
_QUARTIC_LIMITS = {
    SequenceKind.Echo: 1 / 32,
    SequenceKind.XY4: 0.0,
    SequenceKind.MREV8InEcho: 1 / 288,
}


@dataclass(frozen=True)
class PulseSequence:
    kind: SequenceKind
    detuning: float = 0.0
    drive: float = 0.0
    pi_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', SequenceKind.from_name(self.kind))
        if self.pi_time < 0:
            raise DomainError('π pulse duration must be non negative, got %r.' % self.pi_time)
        if self.drive < 0:
            raise DomainError('Drive strength must be non negative, got %r.' % self.drive)


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    values: np.ndarray
    sigmas: Optional[np.ndarray] = None
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        values = np.array(self.values, dtype=float).ravel()
        if len(times) != len(values):
            raise DataFormatError('Curve has %d times but %d values.' % (len(times), len(values)))
        if len(times) and (np.any(times < 0) or np.any(np.diff(times) <= 0)):
            raise DataFormatError('Curve times must be non negative and strictly increasing.')
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) > 1.05):
            raise DataFormatError('Curve values must be finite and within [-1.05, 1.05].')
        for array in (times, values):
            array.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)
        if self.sigmas is not None:
            sigmas = np.array(self.sigmas, dtype=float).ravel()
            if len(sigmas) != len(times):
                raise DataFormatError('Curve has %d times but %d sigmas.' % (len(times), len(sigmas)))
            if np.any(~np.isfinite(sigmas)) or np.any(sigmas < 0):
                raise DataFormatError('Sigmas must be finite and non negative.')
            sigmas.setflags(write=False)
            object.__setattr__(self, 'sigmas', sigmas)

    def __len__(self):
        return len(self.times)


def _x(omega, t):
    return np.asarray(omega, dtype=float) * t


def _filter_of_x(kind: SequenceKind, x):
    if kind in (SequenceKind.Ramsey, SequenceKind.FreeDecay):
        return 2 * np.sin(x / 2) ** 2
    if kind is SequenceKind.Echo:
        return 8 * np.sin(x / 4) ** 4
    if kind is SequenceKind.XY4:
        return 128 * np.sin(x / 16) ** 6 * (np.cos(3 * x / 16) + np.cos(5 * x / 16)) ** 2
    if kind is SequenceKind.MREV8InEcho:
        # z and y components of the toggling frame of the simulated 24 slot schedule
        common = 128 * np.sin(x / 48) ** 2 * np.sin(x / 4) ** 2
        return common * (np.cos(5 * x / 48) ** 2 * np.cos(x / 8) ** 2 + np.cos(x / 16) ** 2 * np.sin(x / 8) ** 2)
    raise UnsupportedKindError('%s has no scalar filter function.' % kind.value)


def filter_function(kind, omega, t):
    """
    F(ωt) of a sequence of total duration t.

    :param kind: a SequenceKind or its name.
    :param omega: angular frequency in rad·μs⁻¹, scalar or array.
    :param t: total sequence time in μs.
    """
    if t < 0:
        raise DomainError('Sequence time must be non negative, got %r.' % t)
    value = _filter_of_x(SequenceKind.from_name(kind), _x(omega, t))
    return float(value) if np.ndim(value) == 0 else value


def filter_over_omega_squared(kind, omega, t):
    """ F(ωt)/ω² with its finite value at ω = 0 (t²/2 for free precession, 0 otherwise). """
    kind = SequenceKind.from_name(kind)
    omega = np.asarray(omega, dtype=float)
    limit = t ** 2 / 2 if kind in (SequenceKind.Ramsey, SequenceKind.FreeDecay) else 0.0
    with np.errstate(divide='ignore', invalid='ignore'):
        value = np.where(omega == 0, limit, _filter_of_x(kind, omega * t) / np.where(omega == 0, 1, omega) ** 2)
    return float(value) if value.ndim == 0 else value


def _check_filter_kind(kind) -> SequenceKind:
    kind = SequenceKind.from_name(kind)
    if kind not in FILTER_KINDS:
        raise UnsupportedKindError('%s has no scalar filter function.' % kind.value)
    return kind


def _adaptive_quad(func, a, b, rtol, levels, diagnostics):
    """ quad on [a, b], bisecting the interval on failure at most `levels` times deep. """
    result = integrate.quad(func, a, b, epsabs=1e-14, epsrel=rtol, limit=100, full_output=1)
    if len(result) == 3:
        return result[0]
    if levels <= 0:
        diagnostics.update({'interval': (a, b), 'estimate': result[0], 'abserr': result[1], 'message': result[3]})
        raise NumericError('Quadrature did not converge within the refinement cap.', diagnostics)
    log.debug('Refining quadrature on [%g, %g]: %s' % (a, b, result[3]))
    mid = 0.5 * (a + b)
    return (_adaptive_quad(func, a, mid, rtol, levels - 1, diagnostics)
            + _adaptive_quad(func, mid, b, rtol, levels - 1, diagnostics))


@functools.lru_cache(maxsize=None)
def _mean_filter(kind: SequenceKind) -> float:
    period = _FILTER_PERIODS[kind]
    value = integrate.quad(lambda x: _filter_of_x(kind, x), 0, period, limit=200)[0]
    return value / period


def _breakpoints(start, stop, points, width):
    edges = {start, stop}
    edges.update(p for p in points if start < p < stop)
    edges = sorted(edges)
    out = [edges[0]]
    for right in edges[1:]:
        pieces = max(1, int(math.ceil((right - out[-1]) / width)))
        out.extend(np.linspace(out[-1], right, pieces + 1)[1:])
    return out


def chi_numeric(kind, t: float, model: NoiseModel, larmor: str = 'delta', constants: Constants = DEFAULT_CONSTANTS,
                rtol: float = 1e-6, max_levels: int = 20) -> float:
    """
    Decoherence exponent χ(t) from the filter function and the bath spectrum.

    :param larmor: 'delta' adds the Larmor peak as an analytic delta term,
                   'lorentzian' integrates it with the rest of the spectrum.
    :param rtol: relative tolerance of each quadrature.
    :param max_levels: bisection depth allowed before giving up.
    """
    kind = _check_filter_kind(kind)
    if t < 0:
        raise DomainError('Sequence time must be non negative, got %r.' % t)
    if larmor not in ('delta', 'lorentzian'):
        raise DomainError("Larmor convention must be 'delta' or 'lorentzian', got %r." % larmor)
    if t == 0 or model.w == 0:
        return 0.0

    w2, tau, omega_l = model.w ** 2, model.tau, model.omega_l

    def spectrum(omega):
        # S(ω) + S(−ω) of the detuning, in rad²·μs⁻¹
        total = 4 * w2 * tau / (1 + omega ** 2 * tau ** 2)
        if larmor == 'lorentzian':
            total += 2 * LARMOR_WEIGHT * w2 * tau * (1 / (1 + (omega - omega_l) ** 2 * tau ** 2)
                                                     + 1 / (1 + (omega + omega_l) ** 2 * tau ** 2))
        return total

    def integrand(omega):
        return spectrum(omega) * filter_over_omega_squared(kind, omega, t)

    omega_cut = max(20 / tau, 20 / t, 4 * omega_l)
    width = 16 * _FILTER_PERIODS[kind] / t
    edges = _breakpoints(0.0, omega_cut, (1 / tau, 10 / tau, omega_l), width)
    diagnostics = {'kind': kind.value, 't': t, 'w': model.w, 'tau': tau, 'omega_l': omega_l}
    body = sum(_adaptive_quad(integrand, a, b, rtol, max_levels, diagnostics) for a, b in zip(edges, edges[1:]))

    weight = 1 + LARMOR_WEIGHT if larmor == 'lorentzian' else 1.0
    tail = 4 * weight * w2 * _mean_filter(kind) / (3 * tau * omega_cut ** 3)
    chi = (body + tail) / (2 * math.pi)
    if larmor == 'delta':
        chi += larmor_exponent(kind, t, model)
    log.debug('χ_%s(%g) = %g (%d intervals)' % (kind.value, t, chi, len(edges) - 1))
    return chi


def chi_curve(kind, times: Sequence[float], model: NoiseModel, **kwargs) -> np.ndarray:
    return np.array([chi_numeric(kind, float(t), model, **kwargs) for t in times])


def larmor_exponent(kind, t, model: NoiseModel):
    """ Delta convention Larmor term (5/9)W²F(ω_L t)/ω_L². """
    kind = _check_filter_kind(kind)
    return LARMOR_WEIGHT * model.w ** 2 * filter_over_omega_squared(kind, model.omega_l, t)


def exact_ramsey_chi(t, model: NoiseModel):
    """ Free precession cumulant of the longitudinal Lorentzian, W²τ²(t/τ − 1 + e^{-t/τ}). """
    t = np.asarray(t, dtype=float)
    tau = model.tau
    value = model.w ** 2 * tau ** 2 * (t / tau - 1 + np.exp(-t / tau))
    return float(value) if value.ndim == 0 else value


@functools.lru_cache(maxsize=None)
def _filter_envelope(kind: SequenceKind) -> float:
    def quartic(x):
        return _QUARTIC_LIMITS[kind] if x == 0 else _filter_of_x(kind, x) / x ** 4

    period = _FILTER_PERIODS[kind]
    stop = 8 * period
    edges = np.linspace(0, stop, 33)
    body = sum(integrate.quad(quartic, a, b, limit=200)[0] for a, b in zip(edges, edges[1:]))
    tail = _mean_filter(kind) / (3 * stop ** 3)
    return 2 / math.pi * (body + tail)


def envelope_coefficient(kind, source: str = 'filter') -> float:
    """
    c in the short time bath exponent c·W²t³/τ of a decoupling sequence.

    :param source: 'filter' derives c from the filter function, (2/π)∫F(x)/x⁴dx;
                   'published' returns the tabulated 1/12, 13/4500, 49/2592.
    """
    kind = SequenceKind.from_name(kind)
    if kind not in DECOUPLING_KINDS:
        raise UnsupportedKindError('%s has no t³ envelope coefficient.' % kind.value)
    if source == 'published':
        return PUBLISHED_ENVELOPES[kind]
    if source != 'filter':
        raise DomainError("Envelope source must be 'filter' or 'published', got %r." % source)
    return _filter_envelope(kind)


def bath_factor(kind, t, model: NoiseModel, envelope: str = 'filter'):
    """ Closed form nuclear bath factor of a sequence, the Larmor peak in the delta convention. """
    kind = _check_filter_kind(kind)
    t = np.asarray(t, dtype=float)
    w2 = model.w ** 2
    if kind in (SequenceKind.Ramsey, SequenceKind.FreeDecay):
        # the t³ correction only holds up to τ, the full cumulant takes over beyond
        exponent = np.where(t <= model.tau, w2 * t ** 2 / 2 - w2 * t ** 3 / (6 * model.tau),
                            exact_ramsey_chi(t, model))
    else:
        exponent = envelope_coefficient(kind, envelope) * w2 * t ** 3 / model.tau
    exponent = exponent + np.vectorize(lambda s: larmor_exponent(kind, s, model))(t)
    value = np.exp(-exponent)
    return float(value) if value.ndim == 0 else value


def closed_form_decay(kind, t, model: NoiseModel, t2_dipolar: float = math.inf, detuning: float = 0.0,
                      envelope: str = 'filter'):
    """
    Signal of a sequence: dipolar envelope × bath factor × detuning oscillation.

    :param t2_dipolar: T₂ of the dipolar envelope e^{-(t/T₂)²}, math.inf for the bath only.
    :param detuning: Δ, only used by Ramsey.
    """
    kind = _check_filter_kind(kind)
    if not t2_dipolar > 0:
        raise DomainError('Dipolar T₂ must be positive, got %r.' % t2_dipolar)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError('Times must be non negative.')
    value = bath_factor(kind, t, model, envelope)
    if kind is not SequenceKind.MREV8InEcho and math.isfinite(t2_dipolar):
        value = value * np.exp(-(t / t2_dipolar) ** 2)
    if kind is SequenceKind.Ramsey:
        value = value * np.cos(detuning * t)
    return float(value) if np.ndim(value) == 0 else value


def closed_form_prediction(sequence: PulseSequence, times, model: NoiseModel, t2_dipolar: float = math.inf,
                           envelope: str = 'filter', pi_equivalents: Optional[Mapping] = None) -> DecayCurve:
    """ Closed form curve over free evolution times, finite pulses included in the evolution time. """
    times = np.asarray(times, dtype=float)
    total = finite_pulse_time(sequence.kind, times, sequence.pi_time, pi_equivalents)
    values = closed_form_decay(sequence.kind, total, model, t2_dipolar, sequence.detuning, envelope)
    regime_ok = bool(sequence.kind not in (SequenceKind.Ramsey, SequenceKind.FreeDecay)
                     or np.max(total, initial=0.0) <= model.tau)
    if not regime_ok:
        log.warning('Ramsey times reach %.3g μs, beyond τ = %.3g μs where the t³ correction holds.'
                    % (np.max(total), model.tau))
    return DecayCurve(times, np.atleast_1d(values), None,
                      {'kind': sequence.kind.value, 'source': 'closed_form', 'envelope': envelope,
                       'ramsey_regime_ok': regime_ok})


def numeric_prediction(sequence: PulseSequence, times, model: NoiseModel, t2_dipolar: float = math.inf,
                       larmor: str = 'delta', pi_equivalents: Optional[Mapping] = None, **quad_options) -> DecayCurve:
    """ Same signal as closed_form_prediction with the bath factor e^{-χ} from chi_numeric. """
    kind = _check_filter_kind(sequence.kind)
    times = np.asarray(times, dtype=float)
    total = finite_pulse_time(kind, times, sequence.pi_time, pi_equivalents)
    values = np.exp(-chi_curve(kind, total, model, larmor=larmor, **quad_options))
    if kind is not SequenceKind.MREV8InEcho and math.isfinite(t2_dipolar):
        values = values * np.exp(-(total / t2_dipolar) ** 2)
    if kind is SequenceKind.Ramsey:
        values = values * np.cos(sequence.detuning * total)
    return DecayCurve(times, values, None, {'kind': kind.value, 'source': 'numeric', 'larmor': larmor})


def two_spin_signal(j1: float, t):
    """ ½[cos(3J₁t/4) + cos(J₁t/4)] of a central spin and one partner. """
    t = np.asarray(t, dtype=float)
    value = 0.5 * (np.cos(3 * j1 * t / 4) + np.cos(j1 * t / 4))
    return float(value) if value.ndim == 0 else value


def two_spin_first_zero(j1: float) -> float:
    """ Earliest time at which the two spin signal vanishes, found by root bracketing. """
    if not j1 > 0:
        raise DomainError('Coupling must be positive, got %r.' % j1)
    root = optimize.brentq(lambda x: math.cos(3 * x / 4) + math.cos(x / 4), 0.0, 1.5 * math.pi, xtol=1e-14)
    return root / j1


def deer_signal(couplings: Sequence[float], t):
    """ ½[1 + ∏ cos(k_i t/2)]; an empty bath gives 1. """
    t = np.asarray(t, dtype=float)
    couplings = np.asarray(couplings, dtype=float).ravel()
    if couplings.size == 0:
        value = np.ones_like(t)
    else:
        value = 0.5 * (1 + np.prod(np.cos(np.multiply.outer(t, couplings) / 2), axis=-1))
    return float(value) if value.ndim == 0 else value


def finite_pulse_time(kind, free_time, pi_time: float, pi_equivalents: Optional[Mapping] = None):
    """
    Total evolution time, free time plus the drive time of the sequence's pulses.

    :param pi_equivalents: per kind pulse counts in units of a π pulse, defaults to PI_EQUIVALENTS.
    """
    kind = SequenceKind.from_name(kind)
    counts = PI_EQUIVALENTS if pi_equivalents is None else {SequenceKind.from_name(k): v
                                                            for k, v in pi_equivalents.items()}
    if kind not in counts:
        raise UnsupportedKindError('No π pulse count known for %s.' % kind.value)
    free_time = np.asarray(free_time, dtype=float)
    if np.any(free_time < 0) or pi_time < 0:
        raise DomainError('Times must be non negative.')
    value = free_time + counts[kind] * pi_time
    return float(value) if value.ndim == 0 else value
