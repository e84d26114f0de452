# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import logging
import math
from dataclasses import dataclass

import torch

from .constants import COMPLEX, NORM_TOL, REAL, RELATION_TOL
from .errors import InvalidInputError, ResolutionError, UnsupportedInputError
from .modes import ModeExpansion, PhaseDensity
from .phase_stats import Window, phase_uncertainty, windowed_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentumStats(object):
    mean: float
    std: float


@dataclass(frozen=True)
class RelationReport(object):
    """Both sides of Delta L * Delta theta_alpha >= |1 - rho(alpha + pi)| / 2."""

    alpha: float
    delta_L: float
    delta_theta: float
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    at_global_min: bool = False

    COLUMNS = ("alpha", "delta_L", "delta_theta", "lhs", "rhs", "margin", "satisfied")

    def as_row(self):
        return {name: getattr(self, name) for name in self.COLUMNS}


@dataclass(frozen=True, eq=False)
class OperatorMatrix(object):
    """A dense operator on the mode range [l_min, l_max]."""

    l_min: int
    l_max: int
    entries: torch.Tensor

    def __post_init__(self):
        size = self.l_max - self.l_min + 1
        if tuple(self.entries.shape) != (size, size):
            raise InvalidInputError(
                f"entries of shape {tuple(self.entries.shape)} for a range of {size} modes"
            )

    @property
    def size(self):
        return self.l_max - self.l_min + 1

    def hermiticity_defect(self):
        return float((self.entries - self.entries.conj().T).abs().max())

    def unitarity_defect(self, block=None):
        """max |U^dagger U - I| over the leading ``block`` rows and columns."""
        block = self.size if block is None else block
        u = self.entries[:, :block]
        gram = u.conj().T @ u
        return float((gram - torch.eye(block, dtype=gram.dtype)).abs().max())

    def expectation(self, state):
        coeffs = state.embed(self.l_min, self.l_max).to(self.entries.dtype)
        return complex(torch.vdot(coeffs, self.entries @ coeffs))


def _as_state(state):
    if isinstance(state, PhaseDensity):
        if state.kind != PhaseDensity.FROM_MODES:
            raise UnsupportedInputError(
                "the relation needs a state; a piecewise density has no angular momentum"
            )
        state = state.modes
    if not isinstance(state, ModeExpansion):
        raise UnsupportedInputError(f"expected a ModeExpansion, got {type(state).__name__}")
    return state


def momentum_stats(state):
    state = _as_state(state)
    probs = state.probabilities
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise InvalidInputError(f"state is not normalised: norm^2 = {total!r}")
    modes = state.modes
    mean = float((modes * probs).sum())
    variance = float(((modes - mean) ** 2 * probs).sum())
    return MomentumStats(mean=mean, std=math.sqrt(max(variance, 0.0)))


def _report(alpha, delta_L, delta_theta, edge, tol, at_global_min):
    lhs = delta_L * delta_theta
    rhs = 0.5 * abs(1.0 - edge)
    margin = lhs - rhs
    return RelationReport(
        alpha=alpha,
        delta_L=delta_L,
        delta_theta=delta_theta,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        satisfied=margin >= -tol * max(1.0, lhs),
        at_global_min=at_global_min,
    )


def check_relation_at(state, alpha, tol=RELATION_TOL):
    """The uncertainty relation evaluated for the window of origin alpha."""
    state = _as_state(state)
    momentum = momentum_stats(state)
    stats = windowed_stats(state, alpha)
    report = _report(stats.alpha, momentum.std, stats.std, stats.edge_density, tol, False)
    if not report.satisfied:
        logger.warning("relation violated at alpha=%r: margin %.3g", stats.alpha, report.margin)
    return report


def check_relation_min(state, tol=RELATION_TOL):
    """The relation at the variance-minimising window, where its right side is 1/2 (1 - rho)."""
    state = _as_state(state)
    momentum = momentum_stats(state)
    result = phase_uncertainty(state)
    if result.edge_density_at_min > 1.0 + tol:
        raise ResolutionError(
            f"edge density {result.edge_density_at_min!r} above 1 at the reported minimum"
        )
    return _report(
        result.alpha0,
        momentum.std,
        result.delta_theta,
        result.edge_density_at_min,
        tol,
        True,
    )


def _mode_gaps(l_min, l_max):
    if l_min >= l_max:
        raise InvalidInputError(f"need l_min < l_max, got [{l_min}, {l_max}]")
    l = torch.arange(l_min, l_max + 1)
    return l, l[:, None] - l[None, :]


def windowed_position_matrix(alpha, l_min, l_max):
    """Matrix of the window-alpha phase operator in the mode basis.

    The diagonal is alpha; entry (l, L) is i (-1)^(l-L) exp(-i (l-L) alpha) / (l-L).
    """
    alpha = Window(alpha).alpha
    _, gap = _mode_gaps(l_min, l_max)
    diagonal = gap == 0
    sign = 1.0 - 2.0 * torch.remainder(gap, 2).to(REAL)
    gap_real = torch.where(diagonal, torch.ones_like(gap), gap).to(REAL)
    off = 1j * sign * torch.exp(-1j * gap_real * alpha) / gap_real
    entries = torch.where(diagonal, torch.full_like(off, alpha), off)
    return OperatorMatrix(l_min, l_max, entries)


def delta_matrix(x, l_min, l_max):
    """Matrix of the periodic delta function delta(theta - x): entries exp(-i (l-L) x)."""
    _, gap = _mode_gaps(l_min, l_max)
    return OperatorMatrix(l_min, l_max, torch.exp(-1j * gap.to(REAL) * x))


def edge_delta_matrix(alpha, l_min, l_max):
    """delta_matrix at the window edge alpha + pi, with exp(-i d pi) taken as (-1)^d exactly."""
    alpha = Window(alpha).alpha
    _, gap = _mode_gaps(l_min, l_max)
    sign = 1.0 - 2.0 * torch.remainder(gap, 2).to(REAL)
    return OperatorMatrix(l_min, l_max, sign * torch.exp(-1j * gap.to(REAL) * alpha))


@dataclass(frozen=True)
class CommutatorReport(object):
    max_offdiag_error: float
    max_diag_error: float

    def within(self, tol):
        return max(self.max_offdiag_error, self.max_diag_error) <= tol


def commutator_check(alpha, l_min, l_max):
    """Compare [L, theta_alpha] with -i (1 - delta(theta - alpha - pi)) entry by entry."""
    position = windowed_position_matrix(alpha, l_min, l_max)
    _, gap = _mode_gaps(l_min, l_max)
    # L is diagonal, so [L, A]_lL = (l - L) A_lL
    commutator = gap.to(COMPLEX) * position.entries
    identity = torch.eye(position.size, dtype=COMPLEX)
    expected = -1j * (identity - edge_delta_matrix(alpha, l_min, l_max).entries)
    error = (commutator - expected).abs()
    diagonal = torch.eye(position.size, dtype=torch.bool)
    return CommutatorReport(
        max_offdiag_error=float(error[~diagonal].max()),
        max_diag_error=float(error[diagonal].max()),
    )
