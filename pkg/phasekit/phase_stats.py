# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import functools
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum

import torch
from scipy import integrate, special

from .constants import (
    BISECT_XTOL,
    COMPLEX,
    CROSS_CHECK_TOL,
    DEFAULT_GRID_N,
    DEFAULT_QUAD_THETA,
    DEFAULT_TAIL_TOL,
    DIRECT_SUM_MAX_MODES,
    FLAT_EDGE_TOL,
    FLAT_RESIDUAL_TOL,
    MIN_GRID_N,
    MIN_ORACLE_N,
    NORM_TOL,
    REAL,
    TWO_PI,
    UNIFORM_VARIANCE,
    VARIANCE_BOUND_SLACK,
)
from .errors import InvalidInputError, ResolutionError, UnsupportedInputError
from .modes import ModeExpansion, PhaseDensity, eval_wavefunction, poisson_cutoff

logger = logging.getLogger(__name__)

_BLOCK = 1 << 22
_ORACLE_ALPHA_CHUNK = 512
_GRAM_MAX_MODES = 256
_BISECT_MAX_ITER = 80
_EXTREMAL_TOL = 1e-10
_TIE_TOL = 1e-12
_ARC_SHIFTS = (-2, -1, 0, 1, 2)
_ALPHA_SNAP = 2.0 ** 44


class ExtremumKind(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    FLAT = "flat"
    NON_EXTREMAL = "non_extremal"


def canonical_alpha(alpha):
    """Reduce a window origin to [0, 2 pi).

    The reduced value is snapped to a grid of 2^-44 so that alpha and alpha + 2 k pi,
    which differ by the rounding of the addition, land on the same origin.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise InvalidInputError(f"window origin must be finite, got {alpha}")
    reduced = math.fmod(alpha, TWO_PI)
    if reduced < 0:
        reduced += TWO_PI
    reduced = round(reduced * _ALPHA_SNAP) / _ALPHA_SNAP
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


@dataclass(frozen=True)
class Window(object):
    """The 2 pi interval (alpha - pi, alpha + pi]; alpha is kept canonical."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", canonical_alpha(self.alpha))

    @property
    def lower(self):
        return self.alpha - math.pi

    @property
    def upper(self):
        return self.alpha + math.pi


@dataclass(frozen=True)
class WindowedStats(object):
    alpha: float
    mean: float
    variance: float
    edge_density: float
    kind: ExtremumKind = ExtremumKind.NON_EXTREMAL

    @property
    def std(self):
        return math.sqrt(self.variance)

    @property
    def residual(self):
        return self.mean - self.alpha


@dataclass(frozen=True)
class UncertaintyResult(object):
    alpha0: float
    delta_theta: float
    variance: float
    edge_density_at_min: float
    n_extrema_found: int

    def as_row(self):
        return asdict(self)


def _classify(edge):
    if edge < 1.0 - FLAT_EDGE_TOL:
        return ExtremumKind.MINIMUM
    if edge > 1.0 + FLAT_EDGE_TOL:
        return ExtremumKind.MAXIMUM
    return ExtremumKind.FLAT


def autocorrelation(coeffs):
    """a_k = sum_l conj(c_l) c_{l+k} for k = 0 .. M-1, the Fourier series of |Psi|^2."""
    size = coeffs.numel()
    if size <= DIRECT_SUM_MAX_MODES:
        return torch.stack([torch.vdot(coeffs[: size - k], coeffs[k:]) for k in range(size)])
    padded = 1 << (2 * size - 1).bit_length()
    spectrum = torch.fft.fft(coeffs, n=padded)
    return torch.fft.ifft(spectrum.conj() * spectrum)[:size]


class FourierMoments(object):
    """Window moments of a mode expansion, summed over the Fourier series of its density.

    For a window centred on alpha every moment is a trigonometric series in alpha whose
    coefficients come from the autocorrelation of the state, so no quadrature is needed.
    """

    def __init__(self, state):
        acf = autocorrelation(state.coeffs)
        self.mass = float(acf[0].real)
        self.k = torch.arange(1, acf.numel(), dtype=REAL)
        # (-1)^k a_k, the coefficients seen from the window edge
        edge_coeffs = acf[1:] * (1.0 - 2.0 * torch.remainder(self.k, 2.0))
        self.weights = torch.stack(
            [
                edge_coeffs / (1j * self.k),
                2.0 * edge_coeffs / self.k ** 2,
                edge_coeffs,
                1j * self.k * edge_coeffs,
            ]
        ).T.contiguous()

    def _series(self, alpha):
        # 2 Re sum_k w_k exp(i k alpha) for the four weight columns
        out = torch.empty(alpha.numel(), 4, dtype=REAL)
        chunk = max(1, _BLOCK // max(1, self.k.numel()))
        for start in range(0, alpha.numel(), chunk):
            phases = torch.exp(1j * torch.outer(alpha[start : start + chunk], self.k))
            out[start : start + chunk] = 2.0 * (phases @ self.weights).real
        return out

    def evaluate(self, alpha):
        """(mean - alpha, variance, edge density, d edge density / d alpha) per origin."""
        series = self._series(alpha.reshape(-1))
        offset = series[:, 0]
        variance = self.mass * UNIFORM_VARIANCE + series[:, 1] - offset ** 2
        return offset, variance, self.mass + series[:, 2], series[:, 3]

    def residual_grid(self, grid_n):
        """mean - alpha on alpha_j = 2 pi j / grid_n, by folding the series onto one FFT."""
        folded = torch.zeros(grid_n, dtype=COMPLEX)
        folded.index_add_(0, torch.remainder(self.k.long(), grid_n), self.weights[:, 0])
        return 2.0 * (grid_n * torch.fft.ifft(folded)).real


class PiecewiseMoments(object):
    """Exact window moments of a piecewise constant density, arc by arc."""

    def __init__(self, density):
        self.density = density
        pieces = torch.tensor(density.pieces, dtype=REAL)
        shifts = TWO_PI * torch.tensor(_ARC_SHIFTS, dtype=REAL)[None, :]
        self.starts = (pieces[:, 0:1] + shifts).reshape(-1)
        self.ends = (pieces[:, 1:2] + shifts).reshape(-1)
        self.heights = (pieces[:, 2:3] / TWO_PI).expand(-1, len(_ARC_SHIFTS)).reshape(-1)

    def evaluate(self, alpha):
        alpha = alpha.reshape(-1, 1)
        lo = torch.maximum(self.starts[None, :], alpha - math.pi) - alpha
        hi = torch.minimum(self.ends[None, :], alpha + math.pi) - alpha
        hi = torch.maximum(hi, lo)
        offset = (self.heights * (hi ** 2 - lo ** 2) / 2.0).sum(dim=1)
        second = (self.heights * (hi ** 3 - lo ** 3) / 3.0).sum(dim=1)
        edge = self.density.evaluate(alpha.reshape(-1) + math.pi)
        return offset, second - offset ** 2, edge, torch.zeros_like(edge)

    def residual_grid(self, grid_n):
        return self.evaluate(_uniform_grid(grid_n))[0]


def _uniform_grid(count):
    return torch.arange(count, dtype=REAL) * (TWO_PI / count)


def _moments_for(src):
    if isinstance(src, PhaseDensity):
        if src.kind == PhaseDensity.PIECEWISE:
            return PiecewiseMoments(src)
        src = src.modes
    if not isinstance(src, ModeExpansion):
        raise UnsupportedInputError(
            f"expected a ModeExpansion or PhaseDensity, got {type(src).__name__}"
        )
    norm2 = src.norm_squared()
    if abs(norm2 - 1.0) > NORM_TOL:
        raise InvalidInputError(f"state is not normalised: norm^2 = {norm2!r}")
    return FourierMoments(src)


def _density_at(src, thetas):
    if isinstance(src, ModeExpansion):
        return eval_wavefunction(src, thetas).abs() ** 2
    return src.evaluate(thetas)


def _collect(moments, alphas, kind=None):
    offset, variance, edge, _ = moments.evaluate(alphas)
    out = []
    for a, off, var, e in zip(alphas.tolist(), offset.tolist(), variance.tolist(), edge.tolist()):
        out.append(
            WindowedStats(
                alpha=a,
                mean=a + off,
                variance=max(var, 0.0),
                edge_density=e,
                kind=kind if kind is not None else _classify(e),
            )
        )
    return out


def windowed_stats(src, alpha, cross_check=False, n_theta=DEFAULT_QUAD_THETA):
    """Mean, variance and edge density of the phase within the window of origin alpha.

    With ``cross_check`` the closed-form moments are compared against direct Gauss-Legendre
    quadrature with ``n_theta`` nodes and a ResolutionError is raised on disagreement.
    """
    window = Window(alpha)
    moments = _moments_for(src)
    offset, variance, edge, _ = moments.evaluate(torch.tensor([window.alpha], dtype=REAL))
    offset, variance, edge = float(offset[0]), max(float(variance[0]), 0.0), float(edge[0])
    kind = _classify(edge) if abs(offset) <= _EXTREMAL_TOL else ExtremumKind.NON_EXTREMAL
    stats = WindowedStats(window.alpha, window.alpha + offset, variance, edge, kind)
    if cross_check:
        reference = quadrature_stats(src, window.alpha, n_theta=n_theta)
        gap = max(
            abs(stats.mean - reference.mean),
            abs(stats.variance - reference.variance),
            abs(stats.edge_density - reference.edge_density),
        )
        if gap > CROSS_CHECK_TOL:
            raise ResolutionError(
                f"window moments at alpha={window.alpha!r} disagree with quadrature by "
                f"{gap:.3g}; increase n_theta beyond {n_theta}"
            )
        logger.debug("cross-check at alpha=%r agrees to %.3g", window.alpha, gap)
    return stats


def extremality_residual(src, alpha):
    """<theta>_alpha - alpha; zero exactly where the window variance is stationary."""
    window = Window(alpha)
    offset = _moments_for(src).evaluate(torch.tensor([window.alpha], dtype=REAL))[0]
    return float(offset[0])


def variance_curvature(src, alpha):
    """Second derivative of the window variance with respect to alpha.

    At an extremum this reduces to 2 (1 - rho_e) rho_e, with rho_e the edge density.
    """
    window = Window(alpha)
    offset, _, edge, slope = _moments_for(src).evaluate(torch.tensor([window.alpha], dtype=REAL))
    offset, edge, slope = float(offset[0]), float(edge[0]), float(slope[0])
    return 2.0 * (1.0 - edge) * edge - 2.0 * offset * slope


def _bisect(fn, lo, hi):
    if lo.numel() == 0:
        return lo
    f_lo = fn(lo)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if bool(((mid == lo) | (mid == hi)).all()):
            break
        f_mid = fn(mid)
        left = f_lo * f_mid <= 0
        hi = torch.where(left, mid, hi)
        lo = torch.where(left, lo, mid)
        f_lo = torch.where(left, f_lo, f_mid)
    f_hi = fn(hi)
    return torch.where(f_lo.abs() <= f_hi.abs(), lo, hi)


def find_extrema(src, grid_n=DEFAULT_GRID_N):
    """All window origins where the variance is stationary, sorted by (variance, alpha).

    The residual is scanned on a uniform grid of ``grid_n`` origins, each sign change is
    refined by bisection and each root classified by its edge density. A flat residual
    yields a single ``flat`` entry at alpha = 0.
    """
    if grid_n < MIN_GRID_N:
        raise InvalidInputError(f"grid_n must be >= {MIN_GRID_N}, got {grid_n}")
    moments = _moments_for(src)
    grid = _uniform_grid(grid_n)
    residual = moments.residual_grid(grid_n)

    if float(residual.abs().max()) <= FLAT_RESIDUAL_TOL:
        logger.debug("residual is flat to %.3g, every window is stationary", FLAT_RESIDUAL_TOL)
        return _collect(moments, torch.zeros(1, dtype=REAL), kind=ExtremumKind.FLAT)

    crossing = torch.nonzero(residual * torch.roll(residual, -1) < 0).reshape(-1)
    lo = grid[crossing]
    roots = _bisect(lambda a: moments.evaluate(a)[0], lo, lo + TWO_PI / grid_n)
    roots = torch.cat([grid[residual == 0], roots])
    if roots.numel() == 0:
        raise ResolutionError(
            f"residual changes sign nowhere on a grid of {grid_n}; retry with grid_n={4 * grid_n}"
        )
    roots = torch.remainder(roots, TWO_PI)
    # a root just below 2 pi is the origin seen from the other side
    roots = torch.where(roots >= TWO_PI - BISECT_XTOL, torch.zeros_like(roots), roots)
    roots, _ = torch.sort(roots)

    extrema = _collect(moments, roots)
    extrema.sort(key=lambda e: (e.variance, e.alpha))
    logger.debug("found %d extrema on a grid of %d", len(extrema), grid_n)
    return extrema


def phase_uncertainty(src, grid_n=DEFAULT_GRID_N):
    """Window-minimised phase uncertainty: the smallest variance over all window origins."""
    extrema = find_extrema(src, grid_n)
    candidates = [e for e in extrema if e.kind is ExtremumKind.MINIMUM]
    if not candidates:
        candidates = [e for e in extrema if e.kind is ExtremumKind.FLAT]
    if not candidates:
        raise ResolutionError(f"no minimum among {len(extrema)} extrema; raise grid_n")

    best_variance = min(e.variance for e in candidates)
    tied = [e for e in candidates if e.variance <= best_variance + _TIE_TOL]
    best = min(tied, key=lambda e: e.alpha)
    if best.variance > UNIFORM_VARIANCE + VARIANCE_BOUND_SLACK:
        raise ResolutionError(
            f"smallest variance {best.variance!r} exceeds the uniform value; raise grid_n"
        )
    return UncertaintyResult(
        alpha0=best.alpha,
        delta_theta=math.sqrt(best.variance),
        variance=best.variance,
        edge_density_at_min=best.edge_density,
        n_extrema_found=len(extrema),
    )


@functools.lru_cache(maxsize=64)
def _legendre_rule(count):
    nodes, weights = special.roots_legendre(count)
    return torch.as_tensor(nodes, dtype=REAL), torch.as_tensor(weights, dtype=REAL)


def gauss_legendre(count, lo, hi):
    """Gauss-Legendre nodes and weights on [lo, hi]; the reference rule is cached per count."""
    nodes, weights = _legendre_rule(count)
    half = 0.5 * (hi - lo)
    return nodes * half + 0.5 * (hi + lo), weights * half


def _mode_quadrature(state, alphas, n_theta):
    """Window moments sum_t w_j(u_t) |Psi(alpha + u_t)|^2 on Gauss-Legendre nodes u_t.

    Up to _GRAM_MAX_MODES modes the node sum is regrouped into the quadratic form
    s(alpha)^H G_j s(alpha), G_j[l, L] = sum_t w_j(u_t) exp(-i (l - L) u_t), with
    s_l(alpha) = c_l exp(i l alpha). Larger states sum the density node by node.
    """
    u, w = gauss_legendre(n_theta, -math.pi, math.pi)
    w = w / TWO_PI
    weights = torch.stack([w, w * u, w * u ** 2])
    modes = state.modes
    moments = torch.zeros(3, alphas.numel(), dtype=REAL)

    if state.num_modes <= _GRAM_MAX_MODES:
        basis = torch.exp(1j * torch.outer(u, modes))
        gram = (weights[:, None, :] * basis.conj().T[None]) @ basis
        for a0 in range(0, alphas.numel(), _ORACLE_ALPHA_CHUNK):
            a1 = min(a0 + _ORACLE_ALPHA_CHUNK, alphas.numel())
            shifted = state.coeffs[:, None] * torch.exp(1j * torch.outer(modes, alphas[a0:a1]))
            moments[:, a0:a1] = (shifted.conj()[None] * (gram @ shifted)).sum(dim=1).real
        return moments

    theta_chunk = max(1, _BLOCK // state.num_modes)
    for t0 in range(0, n_theta, theta_chunk):
        t1 = min(t0 + theta_chunk, n_theta)
        basis = torch.exp(1j * torch.outer(u[t0:t1], modes))
        for a0 in range(0, alphas.numel(), _ORACLE_ALPHA_CHUNK):
            a1 = min(a0 + _ORACLE_ALPHA_CHUNK, alphas.numel())
            shifted = state.coeffs[:, None] * torch.exp(1j * torch.outer(modes, alphas[a0:a1]))
            density = (basis @ shifted).abs() ** 2
            moments[:, a0:a1] += weights[:, t0:t1] @ density
    return moments


def _piecewise_quadrature(density, alphas, n_theta):
    edges = [x for a, b, _ in density.pieces for x in (a, b)]
    moments = torch.zeros(3, alphas.numel(), dtype=REAL)
    for i, alpha in enumerate(alphas.tolist()):
        lo, hi = alpha - math.pi, alpha + math.pi
        cuts = {lo, hi}
        for x in edges:
            for shift in _ARC_SHIFTS:
                y = x + shift * TWO_PI
                if lo < y < hi:
                    cuts.add(y)
        cuts = sorted(cuts)
        per_segment = max(16, n_theta // (len(cuts) - 1))
        for a, b in zip(cuts, cuts[1:]):
            nodes, w = gauss_legendre(per_segment, a, b)
            rho = density.evaluate(nodes) * w / TWO_PI
            u = nodes - alpha
            moments[:, i] += torch.stack([rho.sum(), (rho * u).sum(), (rho * u ** 2).sum()])
    return moments


def _quadrature_moments(src, alphas, n_theta):
    """Mass, first and second moments of theta - alpha over each window, by quadrature."""
    if isinstance(src, PhaseDensity):
        if src.kind == PhaseDensity.PIECEWISE:
            return _piecewise_quadrature(src, alphas, n_theta)
        src = src.modes
    if not isinstance(src, ModeExpansion):
        raise UnsupportedInputError(
            f"expected a ModeExpansion or PhaseDensity, got {type(src).__name__}"
        )
    return _mode_quadrature(src, alphas, n_theta)


def quadrature_stats(src, alpha, n_theta=DEFAULT_QUAD_THETA):
    """windowed_stats by direct Gauss-Legendre quadrature over the window."""
    if n_theta < MIN_ORACLE_N:
        raise InvalidInputError(f"n_theta must be >= {MIN_ORACLE_N}, got {n_theta}")
    window = Window(alpha)
    mass, first, second = _quadrature_moments(
        src, torch.tensor([window.alpha], dtype=REAL), n_theta
    )[:, 0].tolist()
    offset = first / mass
    edge = float(_density_at(src, torch.tensor([window.upper], dtype=REAL))[0])
    return WindowedStats(
        window.alpha, window.alpha + offset, max(second / mass - offset ** 2, 0.0), edge
    )


def grid_oracle(src, n_alpha=4096, n_theta=4096):
    """Brute-force minimum of the window variance over a uniform grid of origins.

    Uses quadrature only, no closed forms, so it can vouch for phase_uncertainty.
    """
    if n_alpha < MIN_ORACLE_N or n_theta < MIN_ORACLE_N:
        raise InvalidInputError(
            f"n_alpha and n_theta must be >= {MIN_ORACLE_N}, got {n_alpha} and {n_theta}"
        )
    alphas = _uniform_grid(n_alpha)
    mass, first, second = _quadrature_moments(src, alphas, n_theta)
    offset = first / mass
    variance = (second / mass - offset ** 2).clamp(min=0.0)

    best = float(variance.min())
    index = int(torch.nonzero(variance <= best).reshape(-1)[0])
    alpha0 = float(alphas[index])
    edge = float(_density_at(src, torch.tensor([alpha0 + math.pi], dtype=REAL))[0])
    sign_changes = int((offset * torch.roll(offset, -1) < 0).sum())
    return UncertaintyResult(
        alpha0=alpha0,
        delta_theta=math.sqrt(best),
        variance=best,
        edge_density_at_min=edge,
        n_extrema_found=sign_changes,
    )


def coherent_state_variance_series(r, tail_tol=DEFAULT_TAIL_TOL):
    """Window variance of the coherent state |r> about its peak, as a double sum over modes.

    pi^2/3 + exp(-r^2) sum_{m != n} 2 (-r)^(m+n) / (sqrt(m! n!) (m - n)^2)
    """
    if not (math.isfinite(r) and r >= 0):
        raise InvalidInputError(f"r must be finite and >= 0, got {r}")
    if r == 0:
        return UNIFORM_VARIANCE
    cutoff, _ = poisson_cutoff(r * r, tail_tol)
    n = torch.arange(cutoff + 1, dtype=REAL)
    log_mag = n * math.log(r) - 0.5 * torch.lgamma(n + 1.0) - 0.5 * r * r
    gap = n[:, None] - n[None, :]
    off_diagonal = gap != 0
    safe_gap = torch.where(off_diagonal, gap, torch.ones_like(gap))
    sign = 1.0 - 2.0 * torch.remainder(n[:, None] + n[None, :], 2.0)
    terms = 2.0 * sign * torch.exp(log_mag[:, None] + log_mag[None, :]) / safe_gap ** 2
    terms = torch.where(off_diagonal, terms, torch.zeros_like(terms))
    return UNIFORM_VARIANCE + float(terms.sum())


def coherent_phase_variance_integral(zeta_abs):
    """Phase variance of a coherent phase state about its peak, by adaptive quadrature."""
    if not 0.0 <= zeta_abs < 1.0:
        raise InvalidInputError(f"|zeta| must lie in [0, 1), got {zeta_abs}")
    q = zeta_abs

    def integrand(theta):
        return theta * theta / ((1.0 - q) ** 2 + 4.0 * q * math.sin(theta / 2.0) ** 2)

    value, _ = integrate.quad(
        integrand, -math.pi, math.pi, points=[0.0], limit=500, epsabs=1e-12, epsrel=1e-12
    )
    return (1.0 - q * q) * value / TWO_PI
