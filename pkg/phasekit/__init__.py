# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

from .version import version as __version__  # noqa

from .modes import ModeExpansion, PhaseDensity  # noqa
from .phase_stats import Window, WindowedStats, ExtremumKind, UncertaintyResult  # noqa
from .relations import MomentumStats, RelationReport, OperatorMatrix  # noqa
from .series import SeriesRegularization  # noqa
from .bases import BasisFamily  # noqa
from .data import StateSpec, RunConfig, RandomStateDataset  # noqa
from . import modes, phase_stats, relations, series, bases  # noqa
