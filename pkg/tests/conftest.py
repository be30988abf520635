import os
import random

import hypothesis
import pytest

from Resources.KloostermanSum import CharacterPair
from Resources.WeylElement import make_admissible

hypothesis.settings.register_profile("dev", max_examples=25, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def gl2():
    return make_admissible((1, 1))


@pytest.fixture
def gl3_long():
    return make_admissible((1, 1, 1))


@pytest.fixture
def w0():
    return make_admissible((2, 3))


@pytest.fixture
def unit_chars():
    def build(N: int) -> CharacterPair:
        return CharacterPair([1] * N, [1] * N)
    return build
