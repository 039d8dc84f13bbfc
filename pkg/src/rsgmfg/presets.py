"""Built-in configurations used by the reproduction command and the tests."""

from __future__ import annotations

import copy


def benchmark_config() -> dict:
    """Scalar benchmark: sinusoidal kernel, strong coupling, gaussian start."""
    return {
        "coefficients": {"A": 0.5, "B": 0.6, "D": 2.0, "sigma": 0.5,
                         "Q": 0.3, "R": 1.5, "Qf": 0.8,
                         "Gamma": 2.0, "Gamma_f": -0.8},
        "gamma": 0.3,
        "T": 1.0,
        "initial_law": {"kind": "gaussian", "mean": 2.0, "dispersion": 0.1},
        "grids": {"n_t": 1000, "n_alpha": 200},
        "graphon": {"kind": "sinusoidal"},
        "simulation": {"N": 200, "M": 1, "seed": 12345},
    }


def small_coupling_config() -> dict:
    """Benchmark variant with weak coupling (D = 0.2), where the
    fixed-point contraction bound holds and both solvers apply.

    Node grid fine enough (1000 >= 4 * 200) for the step-approximation
    errors of the near-Nash experiment up to N = 200.
    """
    cfg = copy.deepcopy(benchmark_config())
    cfg["coefficients"]["D"] = 0.2
    cfg["grids"] = {"n_t": 500, "n_alpha": 1000}
    cfg["simulation"] = {"N": 25, "M": 20000, "seed": 11}
    return cfg
