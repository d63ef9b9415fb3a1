""" Parameter extraction from decay curves.

All fits are weighted least squares solved with scipy's trust region reflective method;
covariances come from the Jacobian at the optimum scaled by the reduced χ².
"""
import json
import logging
import math
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from typing import Dict, List, Mapping, MutableMapping, Optional, Sequence

import numpy as np
from scipy import optimize

from .cluster import ClusterTemplate, sequence_response
from .constants import DEFAULT_CONSTANTS
from .errors import DomainError
from .noise import NoiseModel
from .sequences import DecayCurve, PulseSequence, SequenceKind, closed_form_decay
from .storage import parameter_key

log = logging.getLogger(__name__)

JOINT_PARAMETERS = ('j1', 'w', 'tau', 'detuning')
JOINT_UNITS = {'j1': 'rad/us', 'w': 'rad/us', 'tau': 'us', 'detuning': 'rad/us', 'omega_l': 'rad/us',
               't2': 'us', 't2_star': 'us'}
DEFAULT_DETUNING = 2 * math.pi * 9.2
DEFAULT_FIELD = 730.0  # G
DEFAULT_OMEGA_L = DEFAULT_CONSTANTS.gamma_n * DEFAULT_FIELD
DEFAULT_INIT = {'j1': 0.5, 'w': 3.0, 'tau': 10.0, 'detuning': DEFAULT_DETUNING, 'omega_l': DEFAULT_OMEGA_L}

FIT_MAX_NFEV = 500
FIT_XTOL = 1e-8
FIT_STARTS = 5


def _finite_or_none(value):
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class FitResult:
    params: Dict[str, float]
    sigmas: Dict[str, float]
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    n_iter: int
    units: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    extra: Dict = field(default_factory=dict)

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    def warn(self, message: str):
        log.warning(message)
        self.warnings.append(message)

    def to_dict(self) -> dict:
        covariance = np.asarray(self.covariance, dtype=float)
        return {'params': {k: _finite_or_none(v) for k, v in self.params.items()},
                'sigmas': {k: _finite_or_none(v) for k, v in self.sigmas.items()},
                'covariance': [[_finite_or_none(v) for v in row] for row in np.atleast_2d(covariance)],
                'chi2': _finite_or_none(self.chi2),
                'dof': self.dof,
                'converged': self.converged,
                'n_iter': self.n_iter,
                'units': self.units,
                'warnings': self.warnings,
                'extra': self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class StretchedExpModel:
    amplitude: float
    timescale: float
    power: float

    def __post_init__(self):
        if not self.timescale > 0:
            raise DomainError('Timescale must be positive, got %r.' % self.timescale)
        if not 0 < self.power <= 4:
            raise DomainError('Power must lie in (0, 4], got %r.' % self.power)

    def __call__(self, t):
        return self.amplitude * np.exp(-(np.asarray(t, dtype=float) / self.timescale) ** self.power)


def _weights(curve: DecayCurve, result: Optional[FitResult] = None) -> np.ndarray:
    if curve.sigmas is None:
        message = 'Curve has no sigmas, using unit weights.'
        if result is not None:
            result.warn(message)
        else:
            log.warning(message)
        return np.ones(len(curve))
    if np.any(curve.sigmas == 0):
        raise DomainError('Sigmas must be positive to weight a fit.')
    return 1.0 / curve.sigmas


def chi2(curve: DecayCurve, model_values) -> float:
    """ Σ((y − m)/σ)², unit weights when the curve has no sigmas. """
    model_values = np.asarray(model_values, dtype=float).ravel()
    if len(model_values) != len(curve):
        raise DomainError('Curve has %d points but the model has %d.' % (len(curve), len(model_values)))
    return float(np.sum(((curve.values - model_values) * _weights(curve)) ** 2))


def _covariance(jacobian: np.ndarray, reduced_chi2: float, result: FitResult) -> np.ndarray:
    _, singular, vt = np.linalg.svd(jacobian, full_matrices=False)
    threshold = np.finfo(float).eps * max(jacobian.shape) * singular[0] if singular.size else 0.0
    if singular.size == 0 or singular[-1] <= threshold:
        result.warn('Jacobian is rank deficient at the optimum; uncertainties are not reliable.')
    keep = singular > threshold
    inverse = (vt[keep].T / singular[keep] ** 2) @ vt[keep]
    scale = reduced_chi2 if math.isfinite(reduced_chi2) else 1.0
    return inverse * scale


def _solve(residuals, start, bounds, max_nfev, xtol):
    return optimize.least_squares(residuals, start, bounds=bounds, method='trf', x_scale='jac',
                                  max_nfev=max_nfev, xtol=xtol, ftol=1e-15, gtol=1e-15)


def fit_stretched_exp(curve: DecayCurve, power: Optional[float] = None, max_nfev: int = FIT_MAX_NFEV,
                      xtol: float = FIT_XTOL) -> FitResult:
    """
    Fit A·exp(−(t/T)^p).

    :param power: fixed p, or None to fit it within (0.2, 4].
    """
    if len(curve) < 4:
        raise DomainError('A stretched exponential fit needs at least 4 points, got %d.' % len(curve))
    if power is not None and not 0 < power <= 4:
        raise DomainError('A fixed power must lie in (0, 4], got %r.' % power)
    names = ('amplitude', 'timescale') + (('power',) if power is None else ())
    units = {'amplitude': '', 'timescale': 'us', 'power': ''}
    times, values = curve.times, curve.values
    result = FitResult({}, {}, np.zeros((len(names), len(names))), 0.0, len(curve) - len(names), False, 0, units)
    weights = _weights(curve, result)

    amplitude = float(values[np.argmax(np.abs(values))])
    decaying = amplitude > 0 and values[-1] < amplitude * (1 - 1e-9) and not np.allclose(values, values[0])
    if not decaying:
        result.params = {'amplitude': float(np.mean(values)), 'timescale': math.inf,
                         'power': power if power is not None else math.nan}
        result.sigmas = {name: math.inf for name in names}
        result.chi2 = float(np.sum(((values - np.mean(values)) * weights) ** 2))
        result.warn('Curve does not decay; the timescale is unbounded.')
        return result

    below = np.nonzero(values <= amplitude / math.e)[0]
    timescale = float(times[below[0]]) if below.size and times[below[0]] > 0 else float(np.median(times[times > 0]))
    start = [amplitude, timescale] + ([1.0] if power is None else [])
    lower = [0.0, 1e-12] + ([0.2] if power is None else [])
    upper = [np.inf, np.inf] + ([4.0] if power is None else [])

    def model(x):
        p = x[2] if power is None else power
        return x[0] * np.exp(-(times / x[1]) ** p)

    solution = _solve(lambda x: (model(x) - values) * weights, start, (lower, upper), max_nfev, xtol)
    result.chi2 = float(2 * solution.cost)
    result.covariance = _covariance(solution.jac, result.reduced_chi2, result)
    result.params = dict(zip(names, map(float, solution.x)))
    if power is not None:
        result.params['power'] = float(power)
    result.sigmas = dict(zip(names, np.sqrt(np.abs(np.diag(result.covariance)))))
    result.converged = bool(solution.status > 0)
    result.n_iter = int(solution.nfev)
    if not result.converged:
        result.warn('Stretched exponential fit stopped after %d evaluations: %s' % (solution.nfev, solution.message))
    return result


def _joint_model(kind: SequenceKind, times, x, omega_l, envelope):
    j1, w, tau, detuning = x
    model = NoiseModel(w, tau, omega_l)
    t2 = math.inf if kind is SequenceKind.MREV8InEcho else 1 / j1
    return closed_form_decay(kind, times, model, t2, detuning if kind is SequenceKind.Ramsey else 0.0, envelope)


_JOINT_KINDS = (SequenceKind.Ramsey, SequenceKind.Echo, SequenceKind.XY4, SequenceKind.MREV8InEcho)


def fit_joint(ramsey: DecayCurve, echo: DecayCurve, xy4: DecayCurve, mrev8: DecayCurve,
              init: Optional[Mapping[str, float]] = None, envelope: str = 'filter', starts: int = FIT_STARTS,
              max_nfev: int = FIT_MAX_NFEV, xtol: float = FIT_XTOL, seed: int = 0, threads: int = 1) -> FitResult:
    """
    Fit (J₁, W, τ) shared by the Ramsey, echo, XY-4 and MREV-8 curves, plus the Ramsey detuning Δ.

    :param init: starting values, any of j1, w, tau, detuning and the fixed omega_l.
    :param starts: number of starts, the first at `init` and the rest jittered around it.
    """
    curves = (ramsey, echo, xy4, mrev8)
    for kind, curve in zip(_JOINT_KINDS, curves):
        if len(curve) == 0:
            raise DomainError('The %s curve is empty.' % kind.value)
    guess = dict(DEFAULT_INIT, **(init or {}))
    omega_l = float(guess['omega_l'])
    result = FitResult({}, {}, np.zeros((4, 4)), 0.0, sum(map(len, curves)) - 4, False, 0, dict(JOINT_UNITS))
    weights = [_weights(curve, result) for curve in curves]

    def residuals(x):
        return np.concatenate([(_joint_model(kind, curve.times, x, omega_l, envelope) - curve.values) * weight
                               for kind, curve, weight in zip(_JOINT_KINDS, curves, weights)])

    first = np.array([guess[name] for name in JOINT_PARAMETERS], dtype=float)
    rng = np.random.default_rng(seed)
    jitter = np.array([0.2, 0.2, 0.2, 0.01])
    initials = [first] + [first * np.exp(jitter * rng.standard_normal(4)) for _ in range(max(starts, 1) - 1)]
    bounds = ([1e-6, 1e-6, 1e-6, -np.inf], [np.inf, np.inf, np.inf, np.inf])

    def attempt(start):
        return _solve(residuals, start, bounds, max_nfev, xtol)

    if threads > 1:
        with ThreadPool(threads) as pool:
            solutions = pool.map(attempt, initials)
    else:
        solutions = [attempt(start) for start in initials]
    best = min(solutions, key=lambda s: s.cost)
    log.info('Joint fit: best χ² %.4g over %d starts' % (2 * best.cost, len(solutions)))

    result.chi2 = float(2 * best.cost)
    result.covariance = _covariance(best.jac, result.reduced_chi2, result)
    sigmas = np.sqrt(np.abs(np.diag(result.covariance)))
    result.params = dict(zip(JOINT_PARAMETERS, map(float, best.x)))
    result.sigmas = dict(zip(JOINT_PARAMETERS, map(float, sigmas)))
    j1, w = result.params['j1'], result.params['w']
    result.params.update({'omega_l': omega_l, 't2': 1 / j1, 't2_star': math.sqrt(2) / w})
    result.sigmas.update({'omega_l': 0.0, 't2': result.sigmas['j1'] / j1 ** 2,
                          't2_star': math.sqrt(2) * result.sigmas['w'] / w ** 2})
    result.converged = bool(best.status > 0)
    result.n_iter = int(sum(s.nfev for s in solutions))
    result.extra = {'starts': len(solutions), 'envelope': envelope,
                    'start_chi2': [float(2 * s.cost) for s in solutions]}
    if not result.converged:
        result.warn('Joint fit stopped without converging: %s' % best.message)
    return result


def synthesize_joint_dataset(truth: Mapping[str, float], noise: float = 0.02, seed: int = 0,
                             grids: Optional[Mapping[str, Sequence[float]]] = None,
                             envelope: str = 'filter') -> Dict[str, DecayCurve]:
    """
    Ramsey, echo, XY-4 and MREV-8 curves from the closed forms with Gaussian noise of the given σ.

    :param truth: j1, w, tau and optionally detuning and omega_l.
    """
    truth = dict(DEFAULT_INIT, **truth)
    grids = dict({'ramsey': np.linspace(0, 1.2, 121), 'echo': np.linspace(0, 5, 101),
                  'xy4': np.linspace(0, 5, 101), 'mrev8': np.linspace(0, 6, 121)}, **(grids or {}))
    rng = np.random.default_rng(seed)
    x = [truth[name] for name in JOINT_PARAMETERS]
    out = {}
    for name, kind in zip(('ramsey', 'echo', 'xy4', 'mrev8'), _JOINT_KINDS):
        times = np.asarray(grids[name], dtype=float)
        clean = _joint_model(kind, times, x, truth['omega_l'], envelope)
        values = np.clip(clean + noise * rng.standard_normal(len(times)), -1.05, 1.05)
        sigmas = np.full(len(times), noise) if noise > 0 else None
        out[name] = DecayCurve(times, values, sigmas, {'kind': kind.value, 'synthetic': True})
    return out


def _simulate_xy4(template: ClusterTemplate, times, n_realizations, seed, threads, cache):
    key = parameter_key(dict(template.describe(), sequence='XY4', times=list(map(float, times)),
                             n_realizations=n_realizations, seed=seed))
    if cache is not None and key in cache:
        log.debug('Cache hit for density %s' % template.density)
        return np.asarray(cache[key])
    result = sequence_response(template, PulseSequence(SequenceKind.XY4), times, n_realizations, seed, threads)
    if cache is not None:
        cache[key] = list(map(float, result.correlation))
    return result.correlation


def _interval_edge(grid, values, index, step, level):
    """ Where χ² crosses `level` walking from the minimum at `index` in direction `step`. """
    i = index
    while 0 <= i + step < len(grid):
        if values[i + step] >= level:
            x0, x1, y0, y1 = grid[i], grid[i + step], values[i], values[i + step]
            return x0 + (level - y0) * (x1 - x0) / (y1 - y0)
        i += step
    return None


def extract_density(xy4_curve: DecayCurve, w: float, tau: float, separations: Sequence[float],
                    n_realizations: int = 500, seed: int = 0, omega_l: float = 0.0, neighbors: int = 5,
                    threads: int = 1, cache: Optional[MutableMapping] = None, dt: Optional[float] = None,
                    min_radius: float = 2.0) -> FitResult:
    """
    Mean surface spin separation by a χ² scan of simulated XY-4 curves over a separation grid.

    :param separations: strictly increasing mean separations n^{-1/2} in nm.
    :param cache: mapping used to keep simulated curves between runs.
    """
    grid = np.asarray(separations, dtype=float)
    if grid.size == 0:
        raise DomainError('The separation grid is empty.')
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError('Separations must be positive and strictly increasing.')
    noise = NoiseModel(w, tau, omega_l)
    result = FitResult({}, {}, np.zeros((1, 1)), 0.0, len(xy4_curve) - 1, True, len(grid),
                       {'separation': 'nm', 'density': 'nm^-2'})
    weights = _weights(xy4_curve, result)

    chi2_values = []
    for separation in grid:
        template = ClusterTemplate(neighbors + 1, noise, density=1 / separation ** 2, dt=dt, min_radius=min_radius)
        simulated = _simulate_xy4(template, xy4_curve.times, n_realizations, seed, threads, cache)
        chi2_values.append(float(np.sum(((xy4_curve.values - simulated) * weights) ** 2)))
        log.info('Separation %.3g nm: χ² = %.4g' % (separation, chi2_values[-1]))
    chi2_values = np.array(chi2_values)
    best = int(np.argmin(chi2_values))
    separation = float(grid[best])

    if grid.size == 1:
        sigma = math.nan
        result.extra['undefined_uncertainty'] = True
        result.warn('A single grid point leaves the separation uncertainty undefined.')
    else:
        if best in (0, grid.size - 1):
            result.warn('χ² minimum lies on the grid boundary at %g nm.' % separation)
        level = chi2_values[best] + 1
        low = _interval_edge(grid, chi2_values, best, -1, level)
        high = _interval_edge(grid, chi2_values, best, 1, level)
        low = grid[0] if low is None else low
        high = grid[-1] if high is None else high
        sigma = 0.5 * (high - low)
        result.extra['interval'] = [float(low), float(high)]

    result.params = {'separation': separation, 'density': 1 / separation ** 2}
    density_sigma = 2 * sigma / separation ** 3 if math.isfinite(sigma) else math.nan
    result.sigmas = {'separation': sigma, 'density': density_sigma}
    result.covariance = np.array([[sigma ** 2]])
    result.chi2 = float(chi2_values[best])
    result.extra.update({'grid': grid.tolist(), 'chi2_curve': chi2_values.tolist(), 'neighbors': neighbors,
                         'n_realizations': n_realizations, 'seed': seed})
    return result
