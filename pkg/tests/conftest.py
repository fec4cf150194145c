import numpy as np
import pytest

from sqfrep.arith import build_sieve


@pytest.fixture(scope="session")
def tables():
    # Shared across the whole run; large enough for every non-acceptance test.
    return build_sieve(20_000)


@pytest.fixture()
def rng():
    return np.random.default_rng(0x5EED)
