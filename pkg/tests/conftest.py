# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math

import pytest
import torch
from hypothesis import settings

from phasekit.data import RandomStateDataset

settings.register_profile("phasekit", max_examples=25, deadline=None)
settings.load_profile("phasekit")


@pytest.fixture
def random_states():
    """Eight seeded 32-mode states centred on l = 0."""
    return RandomStateDataset(8, 32, seed=7)


@pytest.fixture
def small_states():
    """Four seeded 16-mode states, small enough for the brute-force oracle."""
    return RandomStateDataset(4, 16, seed=11)


@pytest.fixture
def theta_grid():
    return torch.linspace(-math.pi, math.pi, 257, dtype=torch.float64)