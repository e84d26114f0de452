# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import torch
from scipy import stats

from .constants import (
    COMPLEX,
    DEFAULT_TAIL_TOL,
    MAX_TAIL_TOL,
    MODE_CAP,
    NORM_TOL,
    REAL,
    TWO_PI,
)
from .errors import InvalidInputError, ResourceError

logger = logging.getLogger(__name__)

# Upper bound on the size of the (angles x modes) phase block built at once.
_EVAL_BLOCK = 1 << 22


def as_angles(thetas):
    return torch.as_tensor(thetas, dtype=REAL)


def _check_finite(name, value):
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value}")


def _as_int(name, value):
    if isinstance(value, bool) or int(value) != value:
        raise InvalidInputError(f"{name} must be an integer, got {value}")
    return int(value)


def _check_tail_tol(tail_tol):
    if not 0.0 < tail_tol <= MAX_TAIL_TOL:
        raise InvalidInputError(f"tail_tol must lie in (0, {MAX_TAIL_TOL}], got {tail_tol}")


def _check_mode_count(num_modes, mode_cap, what):
    if num_modes > mode_cap:
        raise ResourceError(
            f"{what} needs {num_modes} modes, more than the mode cap of {mode_cap}"
        )


@dataclass(frozen=True, eq=False)
class ModeExpansion(object):
    """A state given by its Fourier coefficients, Psi(theta) = sum_l c_l exp(i l theta).

    Coefficient ``k`` belongs to the mode ``l_min + k``; with ``half_integer`` set the
    actual mode value is shifted by 1/2, so the index range [l_min, l_max] stands for
    the modes l_min + 1/2, ..., l_max + 1/2.
    """

    l_min: int
    l_max: int
    coeffs: torch.Tensor
    half_integer: bool = False
    tail_bound: float = 0.0
    discarded_mass: float = 0.0

    def __post_init__(self):
        coeffs = torch.as_tensor(self.coeffs, dtype=COMPLEX).reshape(-1).clone()
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "l_min", _as_int("l_min", self.l_min))
        object.__setattr__(self, "l_max", _as_int("l_max", self.l_max))
        if self.l_min > self.l_max:
            raise InvalidInputError(f"l_min={self.l_min} exceeds l_max={self.l_max}")
        if coeffs.numel() != self.l_max - self.l_min + 1:
            raise InvalidInputError(
                f"{coeffs.numel()} coefficients given for the mode range "
                f"[{self.l_min}, {self.l_max}]"
            )
        if not (torch.isfinite(coeffs.real).all() and torch.isfinite(coeffs.imag).all()):
            raise InvalidInputError("coefficients must be finite")
        if self.tail_bound < 0:
            raise InvalidInputError(f"tail_bound must be >= 0, got {self.tail_bound}")

    def __len__(self):
        return self.num_modes

    @property
    def num_modes(self):
        return self.l_max - self.l_min + 1

    @property
    def modes(self):
        offset = 0.5 if self.half_integer else 0.0
        return torch.arange(self.l_min, self.l_max + 1, dtype=REAL) + offset

    @property
    def probabilities(self):
        return self.coeffs.abs() ** 2

    @property
    def is_physical(self):
        return not self.half_integer and self.l_min >= 0

    def norm_squared(self):
        return float(self.probabilities.sum())

    def is_normalized(self, tol=NORM_TOL):
        return abs(self.norm_squared() - 1.0) <= tol

    def normalized(self):
        norm2 = self.norm_squared()
        if norm2 == 0.0:
            raise InvalidInputError("cannot normalise the zero vector")
        return replace(self, coeffs=self.coeffs / math.sqrt(norm2))

    def coefficient(self, l):
        if not self.l_min <= l <= self.l_max:
            return 0j
        return complex(self.coeffs[l - self.l_min])

    def embed(self, l_min, l_max):
        """Coefficients zero-padded onto the wider index range [l_min, l_max]."""
        if l_min > self.l_min or l_max < self.l_max:
            raise InvalidInputError(
                f"range [{l_min}, {l_max}] does not contain [{self.l_min}, {self.l_max}]"
            )
        out = torch.zeros(l_max - l_min + 1, dtype=COMPLEX)
        out[self.l_min - l_min : self.l_max - l_min + 1] = self.coeffs
        return out


@dataclass(frozen=True, eq=False)
class PhaseDensity(object):
    """A normalised probability density on the circle, against dtheta/2pi.

    Either induced by a state (``kind="from_modes"``) or piecewise constant on
    non-overlapping arcs ``(start, end, height)``; arcs are half-open (start, end].
    """

    FROM_MODES = "from_modes"
    PIECEWISE = "piecewise_constant"

    kind: str
    modes: Optional[ModeExpansion] = None
    pieces: Tuple[Tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind == self.FROM_MODES:
            if self.modes is None:
                raise InvalidInputError("a from_modes density needs its ModeExpansion")
            return
        if self.kind != self.PIECEWISE:
            raise InvalidInputError(f"unknown density kind {self.kind!r}")
        pieces = tuple(sorted((float(a), float(b), float(h)) for a, b, h in self.pieces))
        if not pieces:
            raise InvalidInputError("a piecewise density needs at least one arc")
        for a, b, h in pieces:
            if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(h)):
                raise InvalidInputError(f"arc ({a}, {b}, {h}) is not finite")
            if not a < b or h < 0:
                raise InvalidInputError(f"arc ({a}, {b}) with height {h} is malformed")
        for (_, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise InvalidInputError(f"arcs overlap at {a1} < {b0}")
        if pieces[-1][1] - pieces[0][0] > TWO_PI + 1e-12:
            raise InvalidInputError("arcs must lie within one period")
        object.__setattr__(self, "pieces", pieces)
        mass = self.total_mass()
        if abs(mass - 1.0) > NORM_TOL:
            raise InvalidInputError(f"piecewise density integrates to {mass!r}, not 1")

    @classmethod
    def from_pieces(cls, pieces):
        return cls(kind=cls.PIECEWISE, pieces=tuple(pieces))

    def total_mass(self):
        if self.kind == self.FROM_MODES:
            return self.modes.norm_squared()
        return sum(h * (b - a) for a, b, h in self.pieces) / TWO_PI

    def evaluate(self, thetas):
        thetas = as_angles(thetas)
        if self.kind == self.FROM_MODES:
            return eval_wavefunction(self.modes, thetas).abs() ** 2
        origin = self.pieces[0][0]
        u = torch.remainder(thetas - origin, TWO_PI)
        u = torch.where(u == 0, torch.full_like(u, TWO_PI), u)
        reduced = origin + u
        out = torch.zeros_like(reduced)
        for a, b, h in self.pieces:
            out = out + h * ((reduced > a) & (reduced <= b)).to(REAL)
        return out


def make_number_state(l, mode_cap=MODE_CAP):
    """Angular momentum (or number) eigenstate |l>."""
    l = _as_int("l", l)
    if abs(l) > mode_cap:
        raise InvalidInputError(f"|l|={abs(l)} exceeds the mode cap of {mode_cap}")
    return ModeExpansion(l, l, torch.ones(1, dtype=COMPLEX))


def _rotor_cutoff(epsilon, tail_tol):
    # mass outside |l| <= L is 2 exp(-2(L+1)eps) / (1 + exp(-2 eps))
    scale = math.log(2.0 / ((1.0 + math.exp(-2.0 * epsilon)) * tail_tol))
    cutoff = max(0, math.floor(scale / (2.0 * epsilon)))
    tail = 2.0 * math.exp(-2.0 * (cutoff + 1) * epsilon) / (1.0 + math.exp(-2.0 * epsilon))
    return cutoff, tail


def make_rotor_wavepacket(epsilon, beta=0.0, tail_tol=DEFAULT_TAIL_TOL, mode_cap=MODE_CAP):
    """Rotor wave packet sqrt(tanh eps) sum_l exp(-|l| eps) exp(i l (theta - beta)).

    It tends to the periodic delta function at theta = beta as eps -> 0. The series is
    cut at the smallest L whose discarded mass is below ``tail_tol`` and renormalised.
    """
    _check_finite("epsilon", epsilon)
    _check_finite("beta", beta)
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    _check_tail_tol(tail_tol)

    cutoff, tail = _rotor_cutoff(epsilon, tail_tol)
    _check_mode_count(2 * cutoff + 1, mode_cap, f"wave packet eps={epsilon} (L={cutoff})")

    l = torch.arange(-cutoff, cutoff + 1, dtype=REAL)
    log_mag = 0.5 * math.log(math.tanh(epsilon)) - l.abs() * epsilon
    coeffs = torch.exp(torch.complex(log_mag, -l * beta))
    coeffs = coeffs / torch.linalg.vector_norm(coeffs)
    logger.debug("rotor wave packet eps=%g: L=%d, tail=%.3g", epsilon, cutoff, tail)
    return ModeExpansion(-cutoff, cutoff, coeffs, tail_bound=tail)


def rotor_wavepacket_closed_form(thetas, epsilon, beta=0.0):
    """Summed amplitude of the rotor wave packet.

    The denominator carries the factor exp(-eps) on the sin^2 term; this is what the
    Poisson kernel sum produces.
    """
    thetas = as_angles(thetas)
    q = math.exp(-epsilon)
    prefactor = math.sqrt(math.tanh(epsilon)) * -math.expm1(-2.0 * epsilon)
    denom = (1.0 - q) ** 2 + 4.0 * q * torch.sin((thetas - beta) / 2.0) ** 2
    return prefactor / denom


def make_two_mode_superposition(l, L, gamma, beta=0.0, mode_cap=MODE_CAP):
    """cos(gamma)|l> + sin(gamma) exp(-i beta)|L> for l != L."""
    l = _as_int("l", l)
    L = _as_int("L", L)
    if l == L:
        raise InvalidInputError(f"the two modes must differ, got l = L = {l}")
    _check_finite("gamma", gamma)
    _check_finite("beta", beta)
    lo, hi = min(l, L), max(l, L)
    _check_mode_count(hi - lo + 1, mode_cap, f"two-mode state ({l}, {L})")
    coeffs = torch.zeros(hi - lo + 1, dtype=COMPLEX)
    coeffs[l - lo] = math.cos(gamma)
    coeffs[L - lo] = math.sin(gamma) * complex(math.cos(beta), -math.sin(beta))
    return ModeExpansion(lo, hi, coeffs)


def make_coherent_phase_state(zeta, tail_tol=DEFAULT_TAIL_TOL, mode_cap=MODE_CAP):
    """Coherent phase state sqrt(1 - |zeta|^2) sum_{n>=0} zeta^n |n>, |zeta| < 1.

    Eigenstate of the one-sided exponential operator; with zeta = exp(-eps - i beta)
    its density is the Poisson kernel centred on beta.
    """
    zeta = complex(zeta)
    radius = abs(zeta)
    _check_finite("|zeta|", radius)
    if radius >= 1.0:
        raise InvalidInputError(f"|zeta| must be < 1, got {radius}")
    _check_tail_tol(tail_tol)
    if radius == 0.0:
        return make_number_state(0)

    log_radius = math.log(radius)
    # tail mass beyond n = N is |zeta|^(2(N+1))
    cutoff = max(0, math.floor(math.log(tail_tol) / (2.0 * log_radius)))
    _check_mode_count(cutoff + 1, mode_cap, f"coherent phase state |zeta|={radius}")
    tail = math.exp(2.0 * (cutoff + 1) * log_radius)

    n = torch.arange(cutoff + 1, dtype=REAL)
    one_minus_q = -math.expm1(2.0 * log_radius)
    log_mag = 0.5 * math.log(one_minus_q) + n * log_radius
    coeffs = torch.exp(torch.complex(log_mag, n * math.atan2(zeta.imag, zeta.real)))
    coeffs = coeffs / torch.linalg.vector_norm(coeffs)
    logger.debug("coherent phase state |zeta|=%g: N=%d, tail=%.3g", radius, cutoff, tail)
    return ModeExpansion(0, cutoff, coeffs, tail_bound=tail)


def poisson_cutoff(mean, tail_tol):
    cutoff = int(stats.poisson.isf(tail_tol, mean))
    tail = float(stats.poisson.sf(cutoff, mean))
    while tail >= tail_tol:
        cutoff += 1
        tail = float(stats.poisson.sf(cutoff, mean))
    return cutoff, tail


def make_coherent_state(r, beta=0.0, tail_tol=DEFAULT_TAIL_TOL, mode_cap=MODE_CAP):
    """Oscillator coherent state |z>, z = r exp(-i beta), as a phase wave function."""
    _check_finite("r", r)
    _check_finite("beta", beta)
    if r < 0:
        raise InvalidInputError(f"r must be >= 0, got {r}")
    _check_tail_tol(tail_tol)
    if r == 0:
        return make_number_state(0)

    mean = r * r
    # cheap guard before asking scipy for the quantile of a huge Poisson law
    _check_mode_count(int(mean), mode_cap, f"coherent state r={r}")
    cutoff, tail = poisson_cutoff(mean, tail_tol)
    _check_mode_count(cutoff + 1, mode_cap, f"coherent state r={r}")

    n = torch.arange(cutoff + 1, dtype=REAL)
    log_mag = -0.5 * mean + n * math.log(r) - 0.5 * torch.lgamma(n + 1.0)
    coeffs = torch.exp(torch.complex(log_mag, -n * beta))
    coeffs = coeffs / torch.linalg.vector_norm(coeffs)
    logger.debug("coherent state r=%g: N=%d, tail=%.3g", r, cutoff, tail)
    return ModeExpansion(0, cutoff, coeffs, tail_bound=tail)


def make_two_peak_density(delta):
    """Two flat peaks of width delta centred on +pi/2 and -pi/2 (height pi/delta)."""
    _check_finite("delta", delta)
    if not 0.0 < delta <= math.pi:
        raise InvalidInputError(f"delta must lie in (0, pi], got {delta}")
    height = math.pi / delta
    half = delta / 2.0
    return PhaseDensity.from_pieces(
        [
            (-math.pi / 2 - half, -math.pi / 2 + half, height),
            (math.pi / 2 - half, math.pi / 2 + half, height),
        ]
    )


def make_explicit_state(entries: Sequence[Tuple[int, complex]], half_integer=False):
    """State from (l, c_l) pairs; missing modes inside the range are zero."""
    if not entries:
        raise InvalidInputError("an explicit state needs at least one coefficient")
    ls = [_as_int("l", l) for l, _ in entries]
    if len(set(ls)) != len(ls):
        raise InvalidInputError("explicit coefficients list a mode twice")
    lo, hi = min(ls), max(ls)
    coeffs = torch.zeros(hi - lo + 1, dtype=COMPLEX)
    for l, (_, c) in zip(ls, entries):
        coeffs[l - lo] = complex(c)
    return ModeExpansion(lo, hi, coeffs, half_integer=half_integer)


def eval_wavefunction(state, thetas):
    """Psi(theta) = sum_l c_l exp(i l theta) at every sample, O(modes x samples)."""
    thetas = as_angles(thetas)
    flat = thetas.reshape(-1)
    modes = state.modes
    out = torch.empty(flat.shape, dtype=COMPLEX)
    chunk = max(1, _EVAL_BLOCK // state.num_modes)
    for start in range(0, flat.numel(), chunk):
        phase = torch.outer(flat[start : start + chunk], modes)
        out[start : start + chunk] = torch.exp(1j * phase) @ state.coeffs
    return out.reshape(thetas.shape)


def rotate_state(state, phi):
    """Rigid rotation of the density by phi: c_l -> c_l exp(-i l phi)."""
    return replace(state, coeffs=state.coeffs * torch.exp(-1j * phi * state.modes))


def project_nonnegative(state):
    """Drop the negative modes (the physical oscillator subspace), without renormalising.

    The returned state records the dropped probability in ``discarded_mass``.
    """
    if state.l_min >= 0:
        return replace(state, discarded_mass=0.0)
    probs = state.probabilities
    if state.l_max < 0:
        discarded = float(probs.sum())
        return replace(
            state, l_min=0, l_max=0, coeffs=torch.zeros(1, dtype=COMPLEX), discarded_mass=discarded
        )
    cut = -state.l_min
    discarded = float(probs[:cut].sum())
    return replace(state, l_min=0, coeffs=state.coeffs[cut:], discarded_mass=discarded)


def density_from_state(state):
    norm2 = state.norm_squared()
    if abs(norm2 - 1.0) > NORM_TOL:
        raise InvalidInputError(f"state is not normalised: norm^2 = {norm2!r}")
    return PhaseDensity(kind=PhaseDensity.FROM_MODES, modes=state)
