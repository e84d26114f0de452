# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math

import torch

REAL = torch.float64
COMPLEX = torch.complex128

TWO_PI = 2.0 * math.pi
UNIFORM_VARIANCE = math.pi ** 2 / 3.0

# Largest number of Fourier modes a single state may carry.
MODE_CAP = 10 ** 6

NORM_TOL = 1e-12
DEFAULT_TAIL_TOL = 1e-14
MAX_TAIL_TOL = 1e-6

# Window-origin search.
DEFAULT_GRID_N = 512
MIN_GRID_N = 64
BISECT_XTOL = 1e-12
FLAT_RESIDUAL_TOL = 1e-12
FLAT_EDGE_TOL = 1e-9
VARIANCE_BOUND_SLACK = 1e-9

# Quadrature cross-checks and the brute-force oracle.
DEFAULT_QUAD_THETA = 8192
CROSS_CHECK_TOL = 1e-10
MIN_ORACLE_N = 256

# Switch from the direct O(M^2) autocorrelation to the FFT path above this size.
DIRECT_SUM_MAX_MODES = 4096

# Regularised series.
SERIES_TAIL = 1e-16
SERIES_N_MAX_CAP = 10 ** 7

# Basis overlaps.
DEFAULT_QUAD_N = 1024

RELATION_TOL = 1e-9

# Explicit coefficients are renormalised only if already this close to unit norm.
EXPLICIT_NORM_TOL = 1e-6

DEFAULT_SEED = 42
THREADS_ENV = "PHASEKIT_THREADS"
