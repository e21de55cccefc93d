import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import adjfree as af

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# Small shared scale keeps unit tests fast; acceptance uses its own.
RATE = 4000
DURATION = 0.2


@pytest.fixture(scope="session")
def corpus():
    return af.make_synthetic_corpus(af.DEFAULT_LABELS, duration=DURATION, rate=RATE, seed=0)


@pytest.fixture(scope="session")
def model(corpus):
    return af.TemplateClassifier.from_waveforms(corpus)


@pytest.fixture(scope="session")
def target(corpus):
    return corpus["no"]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
