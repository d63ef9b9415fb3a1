""" Resonance counting for spin transport under dynamical disorder.

A bath spin at distance r is resonant with the central spin once their detuning difference has
come within βJ₀/r³; with disorder jumping at rate 1/τ the pair resonance probability is

    P_res(t) = 1 − e^{−x t/τ}(1 − x),    x = βJ₀/(r³W),

and the central spin survives with P(t) = exp(−∫_{r₀}^{R(t)} 2πnr P_res dr), R(t) = (J₀t)^{1/3}.
The closed form replaces the radial integral by α(n^{3/2}βJ₀(t+τ)/(Wτ))^{2/3}.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .constants import DEFAULT_CONSTANTS
from .errors import DomainError, NumericError, RegimeError
from .noise import NoiseModel, detuning_spectrum
from .sequences import DecayCurve

log = logging.getLogger(__name__)

DEFAULT_DENSITY = 1 / 8.4 ** 2  # nm⁻²
DEFAULT_T1RHO_PREFACTOR = 0.5


@dataclass(frozen=True)
class HoppingParams:
    alpha: float = 5.0
    beta: float = 1.0
    kappa: float = 0.31
    density: float = DEFAULT_DENSITY
    j0: float = DEFAULT_CONSTANTS.j0
    r0: float = 2.0

    def __post_init__(self):
        for name in ('alpha', 'beta', 'kappa', 'density', 'j0', 'r0'):
            if not getattr(self, name) > 0:
                raise DomainError('%s must be positive, got %r.' % (name, getattr(self, name)))

    @property
    def mean_coupling(self) -> float:
        """ J = J₀n^{3/2}. """
        return self.j0 * self.density ** 1.5


@dataclass(frozen=True)
class EffectiveDisorder:
    w_e: float
    tau_e: float

    def __post_init__(self):
        if not self.tau_e > 0:
            raise DomainError('Effective correlation time must be positive, got %r.' % self.tau_e)

    @property
    def timescale(self) -> float:
        """ τ_eW_e, the collapse variable. """
        return self.tau_e * self.w_e


def resonance_ratio(r, w: float, params: HoppingParams):
    """ x = βJ₀/(r³W), the chance that a bath spin at r starts on resonance. """
    if not w > 0:
        raise DomainError('Disorder width must be positive, got %r.' % w)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError('Distance must be positive.')
    return params.beta * params.j0 / (r ** 3 * w)


def _resonance(x, t, tau):
    return np.clip(1 - np.exp(-x * t / tau) * (1 - x), 0.0, 1.0)


def pair_resonance_probability(r, t, w: float, tau: float, params: HoppingParams):
    """
    Probability that the pair at distance r (nm) has been resonant by time t (μs).

    Raises RegimeError when βJ₀/r³ exceeds W, where the expression no longer is a probability.
    """
    x = resonance_ratio(r, w, params)
    if np.any(x > 1):
        raise RegimeError('βJ₀/r³ exceeds W at r = %s nm; raise the exclusion radius or W.'
                          % np.min(np.asarray(r)))
    if np.any(np.asarray(t) < 0):
        raise DomainError('Time must be non negative.')
    value = _resonance(x, np.asarray(t, dtype=float), tau)
    return float(value) if np.ndim(value) == 0 else value


def resonance_monte_carlo(r: float, t: float, w: float, tau: float, params: HoppingParams, trials: int = 20000,
                          seed: int = 0):
    """
    Estimate P_res by simulation: the pair detuning difference is uniform on [−W, W] and redrawn at
    Poisson rate 1/τ; a trial counts once any drawn value lies within βJ₀/r³ of zero.

    :return: (estimate, standard error)
    """
    window = params.beta * params.j0 / r ** 3
    rng = np.random.default_rng(seed)
    counts = 1 + rng.poisson(t / tau, size=trials)
    draws = rng.uniform(-w, w, size=counts.sum())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    hits = np.add.reduceat((np.abs(draws) < window).astype(int), starts) > 0
    p = hits.mean()
    return float(p), float(math.sqrt(max(p * (1 - p), 1e-12) / trials))


def _radial_integral(t: float, w: float, tau: float, params: HoppingParams) -> float:
    if t < 0:
        raise DomainError('Time must be non negative, got %r.' % t)
    outer = (params.j0 * t) ** (1 / 3)
    if outer <= params.r0:
        return 0.0

    def integrand(r):
        # inside βJ₀/r³ > W the pair is resonant from the start
        return 2 * math.pi * params.density * r * _resonance(min(resonance_ratio(r, w, params), 1.0), t, tau)

    crossover = (params.beta * params.j0 / w) ** (1 / 3)
    points = [crossover] if params.r0 < crossover < outer else None
    result = integrate.quad(integrand, params.r0, outer, points=points, limit=200, full_output=1)
    if len(result) > 3 or not np.isfinite(result[0]):
        raise NumericError('Radial resonance integral did not converge.',
                           {'t': t, 'w': w, 'tau': tau, 'estimate': result[0], 'abserr': result[1],
                            'message': result[3] if len(result) > 3 else None})
    return result[0]


def survival_integral(t, w: float, tau: float, params: HoppingParams):
    """ Survival probability from the radial integral, 1 while R(t) is inside the exclusion radius. """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    value = np.exp(-np.array([_radial_integral(s, w, tau, params) for s in t_arr]))
    return float(value[0]) if np.ndim(t) == 0 else value


def _time_factor(t, w, tau, params, form):
    """ n^{3/2}βJ₀(t+τ)/(Wτ), or with t in place of t+τ for the long time form. """
    t = np.asarray(t, dtype=float)
    shift = tau if form == 'offset' else 0.0
    return params.density ** 1.5 * params.beta * params.j0 * (t + shift) / (w * tau)


def p1_factor(t, w: float, tau: float, params: HoppingParams):
    """ −log P from the radial integral divided by (n^{3/2}βJ₀(t+τ)/(Wτ))^{2/3}; α is its long time mean. """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    exponent = np.array([_radial_integral(s, w, tau, params) for s in t_arr])
    value = exponent / _time_factor(t_arr, w, tau, params, 'offset') ** (2 / 3)
    return float(value[0]) if np.ndim(t) == 0 else value


def alpha_from_p1(w: float, tau: float, params: HoppingParams, start: Optional[float] = None,
                  stop: Optional[float] = None, points: int = 40) -> float:
    """ Average of p1_factor over a log grid, by default t ∈ [τ, 100τ]. """
    start = tau if start is None else start
    stop = 100 * tau if stop is None else stop
    return float(np.mean(p1_factor(np.geomspace(start, stop, points), w, tau, params)))


def survival_closed(t, w: float, tau: float, params: HoppingParams, form: str = 'offset', renormalize: bool = False):
    """
    Closed form survival exp(−α(n^{3/2}βJ₀(t+τ)/(Wτ))^{2/3}).

    :param form: 'offset' keeps t+τ, 'long' uses t (the t ≫ τ limit).
    :param renormalize: divide by P(0) so the curve starts at 1 (only changes the offset form).
    """
    if form not in ('offset', 'long'):
        raise DomainError("Survival form must be 'offset' or 'long', got %r." % form)
    if not w > 0 or not tau > 0:
        raise DomainError('W and τ must be positive.')
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError('Time must be non negative.')
    exponent = params.alpha * _time_factor(t, w, tau, params, form) ** (2 / 3)
    if renormalize:
        exponent = exponent - params.alpha * _time_factor(0.0, w, tau, params, form) ** (2 / 3)
    value = np.exp(-exponent)
    return float(value) if value.ndim == 0 else value


def one_over_e_time(w: float, tau: float, params: HoppingParams, form: str = 'long') -> float:
    """ Time at which survival_closed (renormalized) falls to 1/e. """
    def excess(t):
        return math.log(survival_closed(t, w, tau, params, form, renormalize=True)) + 1

    upper = tau + w * tau
    while excess(upper) > 0:
        upper *= 2
    return optimize.brentq(excess, 0.0, upper, xtol=1e-12, rtol=1e-12)


def stretch_exponent(times, survival) -> float:
    """ p of −log P ∝ t^p by a log-log least squares line. """
    times = np.asarray(times, dtype=float)
    exponent = -np.log(np.asarray(survival, dtype=float))
    keep = (times > 0) & (exponent > 0)
    if keep.sum() < 2:
        raise DomainError('Need at least two decayed points to fit an exponent.')
    slope, _ = np.polyfit(np.log(times[keep]), np.log(exponent[keep]), 1)
    return float(slope)


def effective_disorder(w: float, tau: float, j1: float, t_z_guess: float) -> EffectiveDisorder:
    """
    Combine bath disorder (W, τ) with the interaction disorder (J₁, T_z).

    W_e = √(W² + J₁²) and √(1/τ_e) = (W√(1/τ) + J₁√(1/T_z))/W_e.
    """
    if not w > 0 or not tau > 0:
        raise DomainError('W and τ must be positive.')
    if j1 < 0:
        raise DomainError('J₁ must be non negative, got %r.' % j1)
    if j1 == 0:
        return EffectiveDisorder(w, tau)
    if not t_z_guess > 0:
        raise DomainError('T_z must be positive, got %r.' % t_z_guess)
    w_e = math.hypot(w, j1)
    root_rate = (w / math.sqrt(tau) + j1 / math.sqrt(t_z_guess)) / w_e
    return EffectiveDisorder(w_e, 1 / root_rate ** 2)


def predict_tz(w: float, tau: float, j1: float, j_mean: float, kappa: float, damping: float = 0.5,
               tolerance: float = 1e-6, max_iterations: int = 1000) -> float:
    """
    Solve T_z = κτ_e(T_z)W_e/J by damped fixed point iteration from T_z = κτW/J.

    :param j_mean: average dipolar interaction J in rad·μs⁻¹.
    :param damping: weight of the new iterate.
    """
    for name, value in (('W', w), ('τ', tau), ('J', j_mean), ('κ', kappa)):
        if not value > 0:
            raise DomainError('%s must be positive, got %r.' % (name, value))
    if w < j_mean:
        log.warning('W = %g is below the mean coupling J = %g, outside the resonance counting regime.' % (w, j_mean))

    def image(t_z):
        disorder = effective_disorder(w, tau, j1, t_z)
        return kappa * disorder.tau_e * disorder.w_e / j_mean

    t_z = kappa * tau * w / j_mean
    for iteration in range(max_iterations):
        target = image(t_z)
        if abs(target - t_z) < tolerance * t_z:
            log.debug('T_z fixed point %g after %d iterations' % (target, iteration))
            return t_z
        t_z = (1 - damping) * t_z + damping * target
    raise NumericError('T_z fixed point did not converge.',
                       {'w': w, 'tau': tau, 'j1': j1, 'j_mean': j_mean, 'kappa': kappa, 'last': t_z,
                        'iterations': max_iterations})


def collapse_transform(curves: Sequence[DecayCurve], disorder: Sequence[EffectiveDisorder]) -> List[DecayCurve]:
    """ Divide each curve's times by its τ_eW_e; values and sigmas are kept. """
    if len(curves) != len(disorder):
        raise DomainError('Got %d curves but %d disorder values.' % (len(curves), len(disorder)))
    out = []
    for curve, effective in zip(curves, disorder):
        metadata = dict(curve.metadata, time_column='t_rescaled', timescale=effective.timescale)
        out.append(DecayCurve(curve.times / effective.timescale, curve.values, curve.sigmas, metadata))
    return out


def collapse_spread(curves: Sequence[DecayCurve], grid: Iterable[float]) -> float:
    """ RMS over the grid of the spread between curves, each linearly interpolated onto the grid. """
    grid = np.asarray(list(grid), dtype=float)
    stacked = np.array([np.interp(grid, curve.times, curve.values) for curve in curves])
    return float(np.sqrt(np.mean(stacked.std(axis=0) ** 2)))


def w_eff_driven(w: float, omega: float) -> float:
    """ Residual disorder W²/(√2Ω) of the dressed states at strong drive. """
    if not omega > 0:
        raise DomainError('The driven disorder width needs Ω > 0, got %r.' % omega)
    return w ** 2 / (math.sqrt(2) * omega)


def dressed_splitting_spread(w: float, omega: float, samples: int = 100000, seed: int = 0) -> float:
    """ Standard deviation of √(Ω² + δ²) − Ω for δ drawn from N(0, W²). """
    delta = np.random.default_rng(seed).normal(0.0, w, samples)
    return float(np.std(np.sqrt(omega ** 2 + delta ** 2) - omega))


def t1rho_rate(omega, model: NoiseModel, prefactor: float = DEFAULT_T1RHO_PREFACTOR,
               constants=DEFAULT_CONSTANTS):
    """ Spin lock relaxation rate prefactor·γ_e²V(Ω) in μs⁻¹. """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError('Drive strength must be non negative.')
    value = prefactor * detuning_spectrum(model, omega, constants)
    return float(value) if np.ndim(value) == 0 else value


def scan_wtau(ws: Sequence[float], taus: Sequence[float], params: HoppingParams, j1: float = 0.0,
              form: str = 'long') -> List[dict]:
    """ One row per (W, τ): effective disorder, predicted T_z and the 1/e time of the closed form. """
    rows = []
    for w in ws:
        for tau in taus:
            t_z = predict_tz(w, tau, j1, params.mean_coupling, params.kappa)
            effective = effective_disorder(w, tau, j1, t_z)
            rows.append({'w': w, 'tau': tau, 'w_e': effective.w_e, 'tau_e': effective.tau_e,
                         'wtau_e': effective.timescale, 't_z': t_z,
                         't_1e': one_over_e_time(w, tau, params, form)})
    return rows
