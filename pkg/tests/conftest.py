from __future__ import annotations

import dataclasses

import pytest

from meshroute.scenario import ScenarioConfig, generate_scenario
from meshroute.sim_core import SimulationConfig, run_scenario

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def small_scenarios(count: int = 3, base_seed: int = 11, nodes=(45, 60, 75)):
    return [generate_scenario(ScenarioConfig(seed=base_seed + i, node_count=nodes[i % len(nodes)]),
                              i + 1) for i in range(count)]


@pytest.fixture(scope="session")
def small_suite():
    return small_scenarios()


@pytest.fixture(scope="session")
def small_sim():
    return SimulationConfig(messages_per_scenario=60)


@pytest.fixture(scope="session")
def small_baseline_logs(small_suite, small_sim):
    logs = []
    for s in small_suite:
        logs.extend(run_scenario(s, small_sim, "baseline"))
    return logs


def quick_specs():
    """Default model specs with ensembles trimmed to 20 members, for fast unit tests."""
    from meshroute.models_abcd import MODEL_SPECS

    out = {}
    for role, spec in MODEL_SPECS.items():
        hyper = dict(spec.hyperparameters)
        if "n_estimators" in hyper:
            hyper["n_estimators"] = 20
        out[role] = dataclasses.replace(spec, hyperparameters=hyper)
    return out


@pytest.fixture(scope="session")
def small_bundle(small_baseline_logs):
    from meshroute.models_abcd import train_bundle

    return train_bundle(small_baseline_logs, seed=3, specs=quick_specs())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


class ConstantBundle:
    """Stand-in bundle with fixed model outputs; a=0, b=ttl makes every fused score negative."""

    def __init__(self, a=0.0, b=10.0, c=500.0, d=0.0):
        self.values = (a, b, c, d)

    def _fill(self, X, v):
        import numpy as np

        X = np.asarray(X, dtype=float)
        return np.full(1 if X.ndim == 1 else len(X), float(v))

    def predict_a(self, X):
        return self._fill(X, self.values[0])

    def predict_b(self, X):
        return self._fill(X, self.values[1])

    def predict_c(self, X):
        return self._fill(X, self.values[2])

    def predict_d(self, X):
        return self._fill(X, self.values[3])
