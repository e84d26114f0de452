# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math
import time

import pytest

from phasekit import checks, phase_stats
from phasekit.data import RunConfig


def test_gauss_legendre_rule_is_not_shared_mutably():
    nodes, weights = phase_stats.gauss_legendre(64, 0.0, math.pi)
    assert float(weights.sum()) == pytest.approx(math.pi, abs=1e-13)
    nodes += 1.0
    weights.zero_()
    again_nodes, again_weights = phase_stats.gauss_legendre(64, 0.0, math.pi)
    assert float(again_weights.sum()) == pytest.approx(math.pi, abs=1e-13)
    assert float(again_nodes.max()) < math.pi


def test_oracle_quadrature_paths_agree(small_states, monkeypatch):
    state = small_states[2]
    grouped = phase_stats.grid_oracle(state, n_alpha=512, n_theta=1024)
    single = phase_stats.quadrature_stats(state, 1.3, n_theta=1024)
    monkeypatch.setattr(phase_stats, "_GRAM_MAX_MODES", 0)
    by_node = phase_stats.grid_oracle(state, n_alpha=512, n_theta=1024)
    assert grouped.alpha0 == by_node.alpha0
    assert grouped.variance == pytest.approx(by_node.variance, abs=1e-13)
    assert grouped.n_extrema_found == by_node.n_extrema_found
    assert phase_stats.quadrature_stats(state, 1.3, n_theta=1024).variance == pytest.approx(
        single.variance, abs=1e-13
    )


def test_relations_suite_rows():
    rows = checks.relations_suite(RunConfig(), num_states=3, alphas_per_state=4, oracle_states=2)
    assert [r.check for r in rows[:3]] == ["relation_at", "relation_min", "variance_bound"]
    assert len(rows) == 3 * 3 + 2
    assert all(r.passed for r in rows)


@pytest.mark.slow
def test_oracle_suite_runs_within_a_minute():
    start = time.perf_counter()
    rows = checks.relations_suite(RunConfig(), num_states=1, alphas_per_state=1)
    elapsed = time.perf_counter() - start
    oracle_rows = [r for r in rows if r.check == "oracle"]
    assert len(oracle_rows) == 200
    assert all(r.passed for r in oracle_rows)
    assert elapsed < 60.0
