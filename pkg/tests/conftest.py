import math
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from magspec import correction as corr

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def correction_sweeps():
    """Correction term over one action period at three hbar values; the middle
    one spans four periods for the period estimate.
    Returns ``{"sweeps": {hbar: ActionSweep}, "elapsed": seconds}``."""
    start = time.perf_counter()
    S0 = corr.classical_action_at_kstar(2)
    out = {}
    for hbar, periods in ((0.05, 1), (0.025, 4), (0.0125, 1)):
        t0 = math.ceil(S0 / (2.0 * math.pi * hbar))
        out[hbar] = corr.action_sweep(2, hbar, t0, n_periods=periods, per_period=32)
    return {"sweeps": out, "elapsed": time.perf_counter() - start}


def first_period(sweep, per_period=32):
    return corr.ActionSweep(
        sweep.t[:per_period], sweep.W[:per_period], sweep.values[:per_period], sweep.hbar, sweep.h, sweep.S0
    )
