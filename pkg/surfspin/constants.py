""" Physical constants and unit conventions.

Units used throughout the package:

* lengths in nm, times in μs, magnetic fields in G;
* every rate, coupling and detuning is an angular frequency in rad·μs⁻¹;
* ħ is kept in CGS (erg·s) because the field geometry formulas are CGS.
"""
import json
import logging
import math
from dataclasses import dataclass, asdict, replace

log = logging.getLogger(__name__)

GAMMA_E = 2 * math.pi * 2.80  # rad μs⁻¹ G⁻¹
GAMMA_N = 2 * math.pi * 4.2577e-3  # proton, rad μs⁻¹ G⁻¹
HBAR_CGS = 1.054571817e-27  # erg s
J0 = 326.7  # nm³ μs⁻¹

# 1 cm³ = 1e21 nm³ and 1 s⁻¹ = 1e-6 μs⁻¹
_CM3_PER_S_TO_NM3_PER_US = 1e21 * 1e-6

MAGIC_ANGLE = math.acos(1 / math.sqrt(3))


@dataclass(frozen=True)
class Constants:
    gamma_e: float = GAMMA_E
    gamma_n: float = GAMMA_N
    j0: float = J0
    hbar: float = HBAR_CGS

    def j0_from_hbar(self) -> float:
        """ J₀ = ħγ_e² recomputed from ħ (erg·s) and γ_e, in nm³·μs⁻¹. """
        gamma_per_s = self.gamma_e * 1e6
        return self.hbar * gamma_per_s ** 2 * _CM3_PER_S_TO_NM3_PER_US

    def nuclear_moment(self, spin_quantum: float = 0.5) -> float:
        """ m_n = γ_N ħ √(S(S+1)) in G·nm³. """
        gamma_per_s = self.gamma_n * 1e6
        return gamma_per_s * self.hbar * math.sqrt(spin_quantum * (spin_quantum + 1)) * 1e21

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'Constants':
        return cls(**json.loads(text))


DEFAULT_CONSTANTS = Constants()


def constants_from_config(config) -> Constants:
    """ Build the constants from a config module, any missing attribute keeps its default. """
    overrides = {}
    for field, attr in (('gamma_e', 'GAMMA_E'), ('gamma_n', 'GAMMA_N'), ('j0', 'J0'), ('hbar', 'HBAR')):
        value = getattr(config, attr, None)
        if value is not None:
            overrides[field] = float(value)
    if overrides:
        log.info('Constants overridden from config: %s' % overrides)
    return replace(DEFAULT_CONSTANTS, **overrides)
