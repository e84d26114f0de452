# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import logging
import math
from dataclasses import dataclass

import torch

from .constants import COMPLEX, REAL, SERIES_N_MAX_CAP, SERIES_TAIL, TWO_PI
from .errors import ConvergenceError, InvalidInputError

logger = logging.getLogger(__name__)

KERNEL_FAMILIES = ("sg_cosine", "nonneg_phase", "z2_cosine", "half_sine")

_SUM_BLOCK = 1 << 20
_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class SeriesRegularization(object):
    epsilon: float
    n_max: int
    convergence_estimate: float


def _check_epsilon(epsilon):
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise InvalidInputError(f"epsilon must be positive and finite, got {epsilon}")


def _angles(theta):
    """Tensor view of theta plus whether the caller passed a plain number."""
    scalar = not isinstance(theta, torch.Tensor)
    return torch.as_tensor(theta, dtype=REAL), scalar


def _unwrap(value, scalar):
    if not scalar:
        return value
    return complex(value) if value.is_complex() else float(value)


def auto_n_max(epsilon, n_max_cap=SERIES_N_MAX_CAP):
    """Smallest n with exp(-n eps) below the double-precision tail, capped."""
    _check_epsilon(epsilon)
    return min(n_max_cap, math.ceil(-math.log(SERIES_TAIL) / epsilon))


def _poisson_denominator(x, epsilon):
    # 1 + q^2 - 2 q cos x written to keep precision for small x and eps
    q = math.exp(-epsilon)
    return (1.0 - q) ** 2 + 4.0 * q * torch.sin(x / 2.0) ** 2


def poisson_kernel(theta, epsilon):
    """P_eps(theta) = sum_n exp(-|n| eps + i n theta), a periodic delta as eps -> 0."""
    _check_epsilon(epsilon)
    x, scalar = _angles(theta)
    value = -math.expm1(-2.0 * epsilon) / _poisson_denominator(x, epsilon)
    return _unwrap(value, scalar)


def cosine_delta_sum(theta, epsilon):
    """sum_{n>=1} 2 cos(n theta) exp(-n eps) = P_eps(theta) - 1."""
    _check_epsilon(epsilon)
    x, scalar = _angles(theta)
    value = -math.expm1(-2.0 * epsilon) / _poisson_denominator(x, epsilon) - 1.0
    return _unwrap(value, scalar)


def sine_cot_sum(theta, epsilon, summed=False):
    """sum_{n>=1} 2 sin(n theta) exp(-n eps) = sin(theta) / (cosh(eps) - cos(theta)).

    Tends to cot(theta/2) as eps -> 0. With ``summed`` the literal damped series is
    evaluated through regularized_sum instead of the closed form.
    """
    _check_epsilon(epsilon)
    x, scalar = _angles(theta)
    if summed:
        value, _ = regularized_sum(lambda n: -1j * torch.sign(n), x, epsilon)
        return _unwrap(value.real, scalar)
    # reduce to [-pi, pi] so that multiples of 2 pi give sin(x) = 0 exactly
    x = x - TWO_PI * torch.round(x / TWO_PI)
    denom = 2.0 * math.sinh(epsilon / 2.0) ** 2 + 2.0 * torch.sin(x / 2.0) ** 2
    return _unwrap(torch.sin(x) / denom, scalar)


def half_integer_kernel(theta, epsilon):
    """sum over half-integer k of exp(-|k| eps + i k theta), antiperiodic in 2 pi."""
    _check_epsilon(epsilon)
    x, scalar = _angles(theta)
    numer = 2.0 * math.exp(-epsilon / 2.0) * -math.expm1(-epsilon) * torch.cos(x / 2.0)
    return _unwrap(numer / _poisson_denominator(x, epsilon), scalar)


def _damped_sum(term_fn, n_start, n_stop, theta):
    """sum_{n_start <= n <= n_stop} term_fn(n, theta) evaluated in blocks over n."""
    total = torch.zeros(theta.shape, dtype=COMPLEX)
    flat_theta = theta.reshape(-1)
    block = max(1, _SUM_BLOCK // max(1, flat_theta.numel()))
    for start in range(n_start, n_stop + 1, block):
        n = torch.arange(start, min(start + block, n_stop + 1), dtype=REAL)
        terms = term_fn(n[None, :], flat_theta[:, None])
        total = total + terms.sum(dim=-1).reshape(theta.shape)
    return total


def regularized_sum(rule, theta, epsilon, n_max=None):
    """sum_{|n| <= n_max} rule(n) exp(-|n| eps) exp(i n theta).

    ``rule`` maps a tensor of integers (as float64) to coefficients. Raises
    ConvergenceError when the damped terms do not decay towards n_max.
    """
    _check_epsilon(epsilon)
    x, scalar = _angles(theta)
    if n_max is None:
        n_max = auto_n_max(epsilon)
    if n_max < 1:
        raise InvalidInputError(f"n_max must be >= 1, got {n_max}")

    probe = torch.tensor([-n_max, n_max, -(n_max // 2), n_max // 2], dtype=REAL)
    probe_mag = torch.as_tensor(rule(probe), dtype=COMPLEX).abs().expand(4)
    probe_mag = probe_mag * torch.exp(-probe.abs() * epsilon)
    edge = float(probe_mag[:2].max())
    middle = float(probe_mag[2:].max())
    if not math.isfinite(edge) or (edge > 0 and edge >= middle):
        raise ConvergenceError(
            f"damped terms do not decay: |term| = {edge:.3g} at n = {n_max} "
            f"against {middle:.3g} at n = {n_max // 2}"
        )
    estimate = edge * math.exp(-epsilon) / -math.expm1(-epsilon)

    def term(n, t):
        coeff = torch.as_tensor(rule(n), dtype=COMPLEX)
        return coeff * torch.exp(-n.abs() * epsilon) * torch.exp(1j * n * t)

    value = _damped_sum(term, -n_max, n_max, x)
    logger.debug("regularized sum eps=%g n_max=%d tail~%.3g", epsilon, n_max, estimate)
    return _unwrap(value, scalar), SeriesRegularization(epsilon, n_max, estimate)


def _kernel_terms(family, epsilon):
    """Term function of a family, taking n (1, B) and angle pairs (P, 2)."""

    def sg_cosine(n, tp):
        k = n + 1.0
        damp = torch.exp(-k * epsilon)
        return 2.0 * torch.sin(k * tp[:, 0:1]) * torch.sin(k * tp[:, 1:2]) * damp

    def nonneg_phase(n, tp):
        return torch.exp(1j * n * (tp[:, 0:1] - tp[:, 1:2]) - n * epsilon)

    def z2_cosine(n, tp):
        weight = torch.where(n == 0, 2.0, 4.0)
        damp = weight * torch.exp(-n * epsilon)
        return torch.cos(n * tp[:, 0:1]) * torch.cos(n * tp[:, 1:2]) * damp

    def half_sine(n, tp):
        k = n + 0.5
        damp = torch.exp(-k * epsilon)
        return 4.0 * torch.sin(k * tp[:, 0:1]) * torch.sin(k * tp[:, 1:2]) * damp

    return {
        "sg_cosine": sg_cosine,
        "nonneg_phase": nonneg_phase,
        "z2_cosine": z2_cosine,
        "half_sine": half_sine,
    }[family]


def overlap_kernel(family, theta, phi, epsilon, n_max=None):
    """Damped completeness sum sum_n f_n(theta) conj(f_n(phi)) of a basis family.

    Each family tends to its delta function on [0, pi] as eps -> 0:

    * ``sg_cosine``: 2 sin((n+1)theta) sin((n+1)phi), n >= 0.
    * ``nonneg_phase``: exp(i n (theta - phi)), n >= 0.
    * ``z2_cosine``: 2 for n = 0, then 4 cos(n theta) cos(n phi).
    * ``half_sine``: 4 sin((n+1/2)theta) sin((n+1/2)phi), n >= 0.
    """
    if family not in KERNEL_FAMILIES:
        raise InvalidInputError(
            f"unknown kernel family {family!r}, expected one of {', '.join(KERNEL_FAMILIES)}"
        )
    _check_epsilon(epsilon)
    t, scalar_t = _angles(theta)
    p, scalar_p = _angles(phi)
    t, p = torch.broadcast_tensors(t, p)
    if family != "nonneg_phase":
        for name, angles in (("theta", t), ("phi", p)):
            if bool(((angles < -_RANGE_SLACK) | (angles > math.pi + _RANGE_SLACK)).any()):
                raise InvalidInputError(f"{family} kernel needs {name} in [0, pi]")
    if n_max is None:
        n_max = auto_n_max(epsilon)

    pairs = torch.stack([t.reshape(-1), p.reshape(-1)], dim=1)
    term = _kernel_terms(family, epsilon)
    total = torch.zeros(pairs.shape[0], dtype=COMPLEX)
    block = max(1, _SUM_BLOCK // max(1, pairs.shape[0]))
    for start in range(0, n_max + 1, block):
        n = torch.arange(start, min(start + block, n_max + 1), dtype=REAL)[None, :]
        total = total + term(n, pairs).sum(dim=-1)
    return _unwrap(total.reshape(t.shape), scalar_t and scalar_p)
