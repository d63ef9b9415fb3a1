""" Surface spin ensembles on a 2D plane and their dipolar couplings.

The central spin sits at the origin, bath spins are scattered uniformly over an annulus
[min_radius, R] whose outer radius follows from the requested count and areal density.
Random numbers come from numpy's PCG64 generator (``numpy.random.default_rng``), a
portable 64 bit permuted congruential generator: the same seed gives the same ensemble on
every platform numpy supports.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .constants import Constants, DEFAULT_CONSTANTS, MAGIC_ANGLE
from .errors import ConfigurationError, DomainError

log = logging.getLogger(__name__)

DEFAULT_MIN_RADIUS = 2.0  # nm
DEFAULT_MAX_RADIUS = 5000.0  # nm
DEFAULT_TILT = MAGIC_ANGLE  # field along [1,1,1]/√3 with the surface normal along z
DEFAULT_AZIMUTH = math.pi / 4


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def field_direction(tilt: float = DEFAULT_TILT, azimuth: float = DEFAULT_AZIMUTH) -> np.ndarray:
    """ Unit vector of the external field, tilt measured from the surface normal. """
    return np.array([math.sin(tilt) * math.cos(azimuth),
                     math.sin(tilt) * math.sin(azimuth),
                     math.cos(tilt)])


@dataclass(frozen=True)
class SpinEnsemble:
    positions: np.ndarray  # (count, 2) in nm, relative to the central spin
    density: float
    quantization_axis_tilt: float = DEFAULT_TILT
    min_radius: float = DEFAULT_MIN_RADIUS
    seed: Optional[int] = None
    field_azimuth: float = DEFAULT_AZIMUTH

    def __post_init__(self):
        positions = _frozen(self.positions).reshape(-1, 2)
        object.__setattr__(self, 'positions', positions)
        if self.density <= 0:
            raise DomainError('Spin density must be positive, got %r.' % self.density)
        if self.min_radius <= 0:
            raise DomainError('The exclusion radius must be positive, got %r.' % self.min_radius)
        if len(positions) and np.min(self.distances) < self.min_radius:
            raise DomainError('A bath spin lies inside the exclusion radius %g nm.' % self.min_radius)

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def field_direction(self) -> np.ndarray:
        return field_direction(self.quantization_axis_tilt, self.field_azimuth)

    def all_positions(self) -> np.ndarray:
        """ Positions including the central spin as row 0. """
        return np.vstack([np.zeros((1, 2)), self.positions])

    def to_json(self) -> str:
        return json.dumps({'positions': self.positions.tolist(),
                           'density': self.density,
                           'quantization_axis_tilt': self.quantization_axis_tilt,
                           'field_azimuth': self.field_azimuth,
                           'min_radius': self.min_radius,
                           'seed': self.seed}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'SpinEnsemble':
        return cls(**json.loads(text))


@dataclass(frozen=True)
class CouplingSet:
    """ Symmetric pair couplings over spins 0..N-1, spin 0 being the central spin. """
    matrix: np.ndarray
    nv_couplings: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError('Coupling matrix must be square, got shape %s.' % (matrix.shape,))
        if not np.all(np.isfinite(matrix)):
            raise DomainError('Couplings must be finite.')
        if not np.allclose(matrix, matrix.T):
            raise DomainError('Coupling matrix must be symmetric.')
        object.__setattr__(self, 'matrix', matrix)
        if self.nv_couplings is not None:
            object.__setattr__(self, 'nv_couplings', _frozen(self.nv_couplings))

    @property
    def n_spins(self) -> int:
        return self.matrix.shape[0]

    @property
    def couplings(self) -> np.ndarray:
        """ J_ij for i < j, row major. """
        return self.matrix[np.triu_indices(self.n_spins, k=1)]

    @property
    def central(self) -> np.ndarray:
        """ Couplings of the central spin to every bath spin. """
        return self.matrix[0, 1:]

    @classmethod
    def from_pairs(cls, n_spins: int, pairs: Sequence[Tuple[int, int, float]], nv_couplings=None) -> 'CouplingSet':
        matrix = np.zeros((n_spins, n_spins))
        for i, j, value in pairs:
            matrix[i, j] = matrix[j, i] = value
        return cls(matrix, nv_couplings)


def coupling_strength(r, theta, constants: Constants = DEFAULT_CONSTANTS):
    """
    Signed dipolar coupling J₀(1 − 3cos²θ)/r³ in rad·μs⁻¹.

    :param r: distance in nm, scalar or array.
    :param theta: angle between the pair vector and the external field.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError('Dipolar coupling needs a positive distance, got %r.' % (r,))
    value = constants.j0 * (1 - 3 * np.cos(theta) ** 2) / r ** 3
    return float(value) if value.ndim == 0 else value


def pair_angles(points: np.ndarray, direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ Distances and field angles between all pairs of in-plane points. """
    points3 = np.hstack([points, np.zeros((len(points), 1))])
    delta = points3[:, None, :] - points3[None, :, :]
    r = np.linalg.norm(delta, axis=-1)
    with np.errstate(invalid='ignore', divide='ignore'):
        cos_theta = np.where(r > 0, delta @ direction / np.where(r > 0, r, 1.0), 1.0)
    return r, np.arccos(np.clip(cos_theta, -1.0, 1.0))


def ensemble_couplings(ensemble: SpinEnsemble, constants: Constants = DEFAULT_CONSTANTS,
                       nv_position: Optional[Sequence[float]] = None) -> CouplingSet:
    """
    Couplings between every pair of spins of the ensemble, the central spin included.

    :param nv_position: optional 3D position (nm) of the sensor below the plane, when given the
                        NV couplings k_i to every spin are computed too.
    """
    points = ensemble.all_positions()
    r, theta = pair_angles(points, ensemble.field_direction)
    matrix = np.zeros_like(r)
    off = r > 0
    matrix[off] = coupling_strength(r[off], theta[off], constants)

    nv = None
    if nv_position is not None:
        points3 = np.hstack([points, np.zeros((len(points), 1))])
        delta = points3 - np.asarray(nv_position, dtype=float)
        dist = np.linalg.norm(delta, axis=-1)
        cos_theta = delta @ ensemble.field_direction / dist
        nv = coupling_strength(dist, np.arccos(np.clip(cos_theta, -1, 1)), constants)
    return CouplingSet(matrix, nv)


def mean_coupling(density: float, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """ Average interaction strength J = J₀n^{3/2}. """
    return constants.j0 * density ** 1.5


def separation_to_density(separation: float) -> float:
    """ Areal density whose mean spacing n^{-1/2} equals the given separation (nm). """
    return 1.0 / separation ** 2


def converged_bath_radius(min_radius: float, tolerance: float = 0.01) -> float:
    """
    Outer radius beyond which the expected share of Σ1/r³ stays under tolerance.

    For a uniform 2D density the tail beyond R carries the fraction r₀/R of the total.
    """
    return min_radius / tolerance


def sampling_radius(density: float, count: int, min_radius: float) -> float:
    return math.sqrt(count / (math.pi * density) + min_radius ** 2)


def sample_ensemble(density: float, count: Optional[int] = None, min_radius: float = DEFAULT_MIN_RADIUS,
                    seed: int = 0, max_radius: float = DEFAULT_MAX_RADIUS,
                    tilt: float = DEFAULT_TILT, azimuth: float = DEFAULT_AZIMUTH) -> SpinEnsemble:
    """
    Draw bath spins uniformly over the annulus that holds `count` spins at the given density.

    :param count: number of bath spins; when None the bath extends to the converged radius.
    :param max_radius: largest sampling radius allowed before the request is refused.
    """
    if density <= 0:
        raise DomainError('Spin density must be positive, got %r.' % density)
    if count is None:
        radius = converged_bath_radius(min_radius)
        count = int(round(math.pi * density * (radius ** 2 - min_radius ** 2)))
    if count < 1:
        raise DomainError('At least one bath spin is needed, got %r.' % count)

    radius = sampling_radius(density, count, min_radius)
    if radius > max_radius:
        raise ConfigurationError('Sampling %d spins at density %g nm⁻² needs a disc of radius %.1f nm, '
                                 'above the configured maximum of %.1f nm.' % (count, density, radius, max_radius))

    rng = np.random.default_rng(seed)
    # uniform in area over the annulus
    r = np.sqrt(rng.uniform(min_radius ** 2, radius ** 2, size=count))
    phi = rng.uniform(0.0, 2 * math.pi, size=count)
    positions = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    log.debug('Sampled %d spins within %.2f nm (seed %s)' % (count, radius, seed))
    return SpinEnsemble(positions, density, tilt, min_radius, seed, azimuth)


def nearest_neighbor_distances(points: np.ndarray) -> np.ndarray:
    tree = cKDTree(points)
    distances, _ = tree.query(points, k=2)
    return distances[:, 1]


def poisson_nearest_neighbor(density: float) -> Tuple[float, float]:
    """ Mean and standard deviation of the nearest neighbour distance of a 2D Poisson process. """
    mean = 1.0 / (2.0 * math.sqrt(density))
    std = math.sqrt((4.0 - math.pi) / (4.0 * math.pi * density))
    return mean, std
