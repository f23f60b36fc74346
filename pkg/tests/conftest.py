import numpy as np
import pytest

from gfr_bayes.model import ModelConfig
from gfr_bayes.posterior import PosteriorContext
from gfr_bayes.sample import CensoredSample

# The hand-checkable context used throughout: one failure at t=1, n=1,
# theta=2, unit prior rates. Then S1 = S2 = 1, A_1 = 2, B_1 = 1.5, M = [1, 1].
TINY_CFG = ModelConfig(theta=2.0, lambda1=1.0, lambda2=1.0, rho=0.0)
TINY_SAMPLE = CensoredSample(1, 1, [1.0])

SIM_CFG = ModelConfig(theta=1.5, lambda1=0.1, lambda2=0.2, rho=0.5)


@pytest.fixture
def tiny_ctx():
    return PosteriorContext.from_sample(TINY_CFG, TINY_SAMPLE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
