""" The packaged four curve dataset used by `surfspin fit --joint` when no curves are given. """
from typing import Dict

from .inference import synthesize_joint_dataset
from .sequences import DecayCurve

FIXTURE_TRUTH = {'j1': 0.71, 'w': 4.40, 'tau': 14.6}
FIXTURE_NOISE = 0.02
FIXTURE_SEED = 20160305
# relative tolerance a joint fit of the fixture is expected to meet
FIXTURE_TOLERANCE = 0.10


def joint_fixture() -> Dict[str, DecayCurve]:
    """ Ramsey, echo, XY-4 and MREV-8 curves keyed 'ramsey', 'echo', 'xy4' and 'mrev8'. """
    curves = synthesize_joint_dataset(FIXTURE_TRUTH, FIXTURE_NOISE, FIXTURE_SEED)
    return {name: DecayCurve(c.times, c.values, c.sigmas, dict(c.metadata, fixture=True))
            for name, c in curves.items()}
