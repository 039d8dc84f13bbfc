import copy

import numpy as np
import pytest

from rsgmfg import spec_from_dict
from rsgmfg.presets import benchmark_config, small_coupling_config


def make_config(n_t=400, n_alpha=50, **overrides):
    """Benchmark configuration with small grids and targeted overrides.

    ``coefficients``, ``initial_law``, ``graphon`` overrides are merged
    into the base config; anything else replaces the top-level key.
    """
    cfg = copy.deepcopy(benchmark_config())
    cfg["grids"] = {"n_t": n_t, "n_alpha": n_alpha}
    for key, val in overrides.items():
        if key in ("coefficients", "initial_law", "graphon", "simulation") \
                and isinstance(val, dict):
            cfg[key] = {**cfg[key], **val} if key in cfg else val
        else:
            cfg[key] = val
    return cfg


def make_spec(n_t=400, n_alpha=50, **overrides):
    return spec_from_dict(make_config(n_t=n_t, n_alpha=n_alpha, **overrides))


@pytest.fixture(scope="session")
def benchmark_spec():
    """Full benchmark on its native grids (n_t=1000, n_alpha=200)."""
    return spec_from_dict(benchmark_config())


@pytest.fixture(scope="session")
def small_coupling_spec():
    return spec_from_dict(small_coupling_config())


@pytest.fixture
def rng():
    return np.random.default_rng(20230817)
