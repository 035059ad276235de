import json

import numpy as np
import pytest

from invobs import parse_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def build_scenario(instance="so3-s2", **overrides):
    doc = {"instance": instance}
    doc.update(overrides)
    return parse_scenario(json.dumps(doc))


@pytest.fixture
def make_scenario():
    return build_scenario
