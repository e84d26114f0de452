# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import logging
import math
import warnings
from dataclasses import replace
from enum import Enum

import torch

from .constants import COMPLEX, DEFAULT_QUAD_N, REAL
from .errors import DegenerateProjectionError, InvalidInputError, ResolutionError
from .modes import ModeExpansion, as_angles, project_nonnegative
from .phase_stats import gauss_legendre
from .relations import OperatorMatrix

logger = logging.getLogger(__name__)

_QUAD_CONVERGENCE_TOL = 1e-9
_TRUNCATION_WARN = 1e-6
_DEGENERATE_TOL = 1e-24


class BasisFamily(str, Enum):
    """Phase-representation bases of the oscillator on [0, pi]."""

    SG_COSINE = "sg_cosine"
    Z2_COSINE = "z2_cosine"
    HALF_SINE = "half_sine"

    @property
    def normalization(self):
        return math.sqrt(2.0) if self is BasisFamily.SG_COSINE else 1.0


def _as_family(family):
    try:
        return BasisFamily(family)
    except ValueError:
        choices = ", ".join(f.value for f in BasisFamily)
        raise InvalidInputError(f"unknown basis family {family!r}, expected one of {choices}")


def _raw_wavefunction(family, n, theta):
    if family is BasisFamily.SG_COSINE:
        return torch.sin((n + 1.0) * theta)
    if family is BasisFamily.Z2_COSINE:
        return torch.where(n == 0, torch.ones_like(theta), math.sqrt(2.0) * torch.cos(n * theta))
    return math.sqrt(2.0) * torch.sin((n + 0.5) * theta)


def basis_wavefunction(family, n, theta):
    """The n-th function of a family at theta in [0, pi].

    ``sg_cosine`` is returned without its normalisation constant sqrt(2).
    """
    family = _as_family(family)
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise InvalidInputError(f"n must be a non-negative integer, got {n}")
    scalar = not isinstance(theta, torch.Tensor)
    theta = as_angles(theta)
    if bool(((theta < -1e-12) | (theta > math.pi + 1e-12)).any()):
        raise InvalidInputError("theta must lie in [0, pi]")
    value = _raw_wavefunction(family, torch.tensor(float(n), dtype=REAL), theta)
    return float(value) if scalar else value


def _family_matrix(family, size, theta):
    n = torch.arange(size, dtype=REAL)[None, :]
    return family.normalization * _raw_wavefunction(family, n, theta[:, None])


def _overlap(family_a, family_b, size, quad_n):
    nodes, weights = gauss_legendre(quad_n, 0.0, math.pi)
    weights = weights / math.pi
    fa = _family_matrix(family_a, size, nodes)
    fb = _family_matrix(family_b, size, nodes)
    return fa.T @ (weights[:, None] * fb)


def overlap_matrix(family_a, family_b, size, quad_n=DEFAULT_QUAD_N):
    """U_mn = int_0^pi dtheta/pi a_m(theta) b_n(theta) over the first ``size`` functions.

    The quadrature is repeated with twice the nodes and must agree to 1e-9. Between
    different families the entries fall off like 1/|m - n|, so the unitarity defect of a
    truncated matrix shrinks only as 1/size.
    """
    family_a = _as_family(family_a)
    family_b = _as_family(family_b)
    if size < 1:
        raise InvalidInputError(f"size must be >= 1, got {size}")
    if quad_n < 16 * size:
        raise InvalidInputError(f"quad_n must be >= {16 * size} for {size} functions")

    coarse = _overlap(family_a, family_b, size, quad_n)
    fine = _overlap(family_a, family_b, size, 2 * quad_n)
    gap = float((coarse - fine).abs().max())
    if gap > _QUAD_CONVERGENCE_TOL:
        raise ResolutionError(
            f"overlap quadrature not converged ({gap:.3g}); raise quad_n above {2 * quad_n}"
        )
    matrix = OperatorMatrix(0, size - 1, fine.to(COMPLEX))
    defect = matrix.unitarity_defect()
    logger.info(
        "overlap %s/%s N=%d: unitarity defect %.3g", family_a.value, family_b.value, size, defect
    )
    if family_a is not family_b and defect > _TRUNCATION_WARN:
        warnings.warn(
            f"{family_a.value}/{family_b.value} overlap with {size} functions has unitarity "
            f"defect {defect:.3g} from truncation; compare leading blocks only"
        )
    return matrix


def parity_apply(state, signed=False):
    """Mirror the modes, c_l -> c_{-l}.

    With ``signed`` the map is P|n> = -|-n>; on half-integer modes this is the only
    parity available, and mode l + 1/2 goes to -l - 1/2.
    """
    if state.half_integer and not signed:
        raise InvalidInputError("plain parity is undefined on half-integer modes, use signed")
    offset = 1 if state.half_integer else 0
    coeffs = state.coeffs.flip(0)
    if signed:
        coeffs = -coeffs
    return replace(
        state,
        l_min=-state.l_max - offset,
        l_max=-state.l_min - offset,
        coeffs=coeffs,
        discarded_mass=0.0,
    )


def z2_symmetrize(state, signed=False):
    """Project onto the parity-invariant states, (1 + P) psi, and renormalise."""
    mirrored = parity_apply(state, signed=signed)
    lo = min(state.l_min, mirrored.l_min)
    hi = max(state.l_max, mirrored.l_max)
    combined = state.embed(lo, hi) + mirrored.embed(lo, hi)
    norm2 = float((combined.abs() ** 2).sum())
    if norm2 <= _DEGENERATE_TOL * max(state.norm_squared(), 1.0):
        raise DegenerateProjectionError("the state has no parity-invariant component")
    return replace(
        state, l_min=lo, l_max=hi, coeffs=combined / math.sqrt(norm2), discarded_mass=0.0
    )


def _require_physical(state, what):
    if not state.is_physical:
        raise InvalidInputError(f"{what} needs a physical state (integer modes, l_min >= 0)")


def ladder_apply(state, direction):
    """Oscillator ladder operators on the number basis; the result is not renormalised."""
    _require_physical(state, "ladder_apply")
    full = state.embed(0, state.l_max)
    if direction == "lower":
        if state.l_max == 0:
            return ModeExpansion(0, 0, torch.zeros(1, dtype=COMPLEX))
        m = torch.arange(state.l_max, dtype=REAL)
        return ModeExpansion(0, state.l_max - 1, torch.sqrt(m + 1.0) * full[1:])
    if direction == "raise":
        m = torch.arange(state.l_max + 2, dtype=REAL)
        shifted = torch.cat([torch.zeros(1, dtype=COMPLEX), full])
        return ModeExpansion(0, state.l_max + 1, torch.sqrt(m) * shifted)
    raise InvalidInputError(f"direction must be 'lower' or 'raise', got {direction!r}")


def shift_apply(state, direction):
    """exp(-i theta) (``down``) or its inverse (``up``) on the full set of modes."""
    if direction == "down":
        step = -1
    elif direction == "up":
        step = 1
    else:
        raise InvalidInputError(f"direction must be 'down' or 'up', got {direction!r}")
    return replace(state, l_min=state.l_min + step, l_max=state.l_max + step)


def exponential_apply(state):
    """One-sided exponential sum_n |n><n+1|; kills |0> and keeps the physical subspace."""
    _require_physical(state, "exponential_apply")
    return project_nonnegative(shift_apply(state, "down"))


def sg_cosine_operator(size):
    """Truncated cosine operator (E + E^dagger) / 2 on the first ``size`` number states."""
    if size < 1:
        raise InvalidInputError(f"size must be >= 1, got {size}")
    off = torch.full((size - 1,), 0.5, dtype=COMPLEX)
    entries = torch.diag(off, 1) + torch.diag(off, -1)
    return OperatorMatrix(0, size - 1, entries)


def time_evolve(state, omega, t):
    """Harmonic evolution c_n -> exp(-i (n + 1/2) omega t) c_n; the density rotates by omega t."""
    _require_physical(state, "time_evolve")
    phase = torch.exp(-1j * (state.modes + 0.5) * (omega * t))
    return replace(state, coeffs=state.coeffs * phase)
