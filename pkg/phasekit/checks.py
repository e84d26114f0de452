# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

"""Verification suites and the table of worked examples run by ``phase.py``."""

import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import torch

from . import bases, modes, phase_stats, relations, series
from .constants import REAL, UNIFORM_VARIANCE, VARIANCE_BOUND_SLACK
from .data import RandomStateDataset

logger = logging.getLogger(__name__)

SUITES = ("relations", "identities", "bases")


@dataclass(frozen=True)
class CheckRow(object):
    suite: str
    check: str
    subject: str
    value: float
    tolerance: float
    margin: float
    passed: bool

    def as_row(self):
        return asdict(self)


@dataclass(frozen=True)
class ReproRow(object):
    example_id: str
    quantity: str
    paper_value_or_asymptote: float
    computed_value: float
    abs_or_rel_error: float
    tolerance: float
    passed: bool

    def as_row(self):
        row = asdict(self)
        row["pass"] = row.pop("passed")
        return row


def _error_check(suite, check, subject, error, tolerance):
    return CheckRow(suite, check, subject, error, tolerance, tolerance - error, error <= tolerance)


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


def relations_suite(config, num_states=1000, alphas_per_state=16, oracle_states=200):
    """Random-state checks of the relation, the variance bound and the oracle agreement."""
    dataset = RandomStateDataset(num_states, 32, seed=config.seed)
    tol = config.tolerance

    def check_state(idx):
        state = dataset[idx]
        subject = dataset.describe(idx)
        reports = [
            relations.check_relation_at(state, alpha, tol)
            for alpha in dataset.angles(idx, alphas_per_state)
        ]
        worst = min(reports, key=lambda r: r.margin / max(1.0, r.lhs))
        at_min = relations.check_relation_min(state, tol)
        variance = at_min.delta_theta ** 2
        bound_margin = UNIFORM_VARIANCE + VARIANCE_BOUND_SLACK - variance
        return [
            CheckRow(
                "relations", "relation_at", subject, worst.lhs, tol, worst.margin, worst.satisfied
            ),
            CheckRow(
                "relations",
                "relation_min",
                subject,
                at_min.lhs,
                tol,
                at_min.margin,
                at_min.satisfied,
            ),
            CheckRow(
                "relations",
                "variance_bound",
                subject,
                variance,
                VARIANCE_BOUND_SLACK,
                bound_margin,
                bound_margin >= 0,
            ),
        ]

    oracle_set = RandomStateDataset(oracle_states, 16, seed=config.seed + 1)

    def check_oracle(idx):
        state = oracle_set[idx]
        found = phase_stats.phase_uncertainty(state, config.grid_n)
        brute = phase_stats.grid_oracle(state, n_alpha=4096, n_theta=4096)
        gap = abs(found.variance - brute.variance)
        return [_error_check("relations", "oracle", oracle_set.describe(idx), gap, 1e-6)]

    rows = []
    start = time.perf_counter()
    for chunk in _map(check_state, range(len(dataset)), config.threads):
        rows.extend(chunk)
    logger.info("relations: %d states in %.1f s", len(dataset), time.perf_counter() - start)
    start = time.perf_counter()
    for chunk in _map(check_oracle, range(len(oracle_set)), config.threads):
        rows.extend(chunk)
    logger.info("oracle: %d states in %.1f s", len(oracle_set), time.perf_counter() - start)
    return rows


def identities_suite(config):
    """The Poisson kernel, the cotangent sum and the family overlap kernels."""
    rows = []
    grid = torch.arange(1 << 16, dtype=REAL) * (2.0 * math.pi / (1 << 16)) - math.pi
    for eps in (1.0, 0.1, 0.01):
        mass = float(series.poisson_kernel(grid, eps).mean())
        rows.append(
            _error_check("identities", "poisson_normalization", f"eps={eps}", abs(mass - 1), 1e-10)
        )

    for theta in (math.pi / 4, math.pi / 2, math.pi):
        error = abs(series.sine_cot_sum(theta, 1e-6) - 1.0 / math.tan(theta / 2.0))
        rows.append(_error_check("identities", "cot_limit", f"theta={theta!r}", error, 1e-4))

    samples = torch.linspace(-3.0, 3.0, 13, dtype=REAL)
    for eps in (1.0, 0.1):
        summed, _ = series.regularized_sum(torch.ones_like, samples, eps)
        error = float((summed.real - series.poisson_kernel(samples, eps)).abs().max())
        rows.append(_error_check("identities", "poisson_summed", f"eps={eps}", error, 1e-10))
        error = float(
            (
                series.sine_cot_sum(samples, eps, summed=True) - series.sine_cot_sum(samples, eps)
            ).abs().max()
        )
        rows.append(_error_check("identities", "sine_summed", f"eps={eps}", error, 1e-10))

    theta = torch.tensor([0.3, 1.1, 2.0, 2.9], dtype=REAL)
    phi = torch.tensor([0.5, 1.1, 0.2, 2.5], dtype=REAL)
    eps = 0.1
    p_minus = series.poisson_kernel(theta - phi, eps)
    p_plus = series.poisson_kernel(theta + phi, eps)
    h_minus = series.half_integer_kernel(theta - phi, eps)
    h_plus = series.half_integer_kernel(theta + phi, eps)
    closed = {
        "sg_cosine": 0.5 * (p_minus - p_plus),
        "nonneg_phase": 0.5 * p_minus + 0.5 + 0.5j * series.sine_cot_sum(theta - phi, eps),
        "z2_cosine": p_minus + p_plus,
        "half_sine": h_minus - h_plus,
    }
    for family, expected in closed.items():
        kernel = series.overlap_kernel(family, theta, phi, eps)
        error = float((kernel - expected).abs().max())
        rows.append(_error_check("identities", f"kernel_{family}", f"eps={eps}", error, 1e-10))
        swapped = series.overlap_kernel(family, phi, theta, eps)
        error = float((kernel - swapped.conj()).abs().max())
        rows.append(_error_check("identities", f"hermitian_{family}", f"eps={eps}", error, 1e-12))
    return rows


def bases_suite(config):
    """Basis orthonormality, overlap truncation, operator algebra and the window commutator."""
    rows = []
    for family in bases.BasisFamily:
        gram = bases.overlap_matrix(family, family, 64, max(config.quad_n, 1024))
        rows.append(
            _error_check("bases", "gram", family.value, gram.unitarity_defect(), 1e-8)
        )

    # only the leading block is compared, so the truncation warning is expected
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        defects = [
            bases.overlap_matrix("sg_cosine", "half_sine", size, 4096).unitarity_defect(block=16)
            for size in (32, 64)
        ]
    rows.append(
        _error_check("bases", "cross_overlap_n32", "sg_cosine/half_sine", defects[0], 0.05)
    )
    rows.append(
        CheckRow(
            "bases",
            "cross_overlap_shrinks",
            "sg_cosine/half_sine N=32->64",
            defects[1],
            defects[0],
            defects[0] - defects[1],
            defects[1] < defects[0],
        )
    )

    ladder_error = 0.0
    for n in range(65):
        number = modes.make_number_state(n)
        up_down = bases.ladder_apply(bases.ladder_apply(number, "lower"), "raise")
        down_up = bases.ladder_apply(bases.ladder_apply(number, "raise"), "lower")
        ladder_error = max(
            ladder_error,
            abs(up_down.coefficient(n) - n),
            abs(down_up.coefficient(n) - (n + 1)),
        )
    rows.append(_error_check("bases", "ladder_algebra", "n<=64", ladder_error, 1e-12))

    dataset = RandomStateDataset(8, 8, seed=config.seed)
    commutator_error = 0.0
    delta_error = 0.0
    parity_error = 0.0
    shift_error = 0.0
    for idx in range(len(dataset)):
        state = dataset[idx]
        (alpha,) = dataset.angles(idx, 1)
        report = relations.commutator_check(alpha, -64, 64)
        commutator_error = max(commutator_error, report.max_offdiag_error, report.max_diag_error)
        edge = relations.edge_delta_matrix(alpha, -64, 64).expectation(state)
        density = float(modes.density_from_state(state).evaluate(alpha + math.pi))
        delta_error = max(delta_error, abs(edge - density))
        twice = bases.parity_apply(bases.parity_apply(state))
        parity_error = max(parity_error, float((twice.coeffs - state.coeffs).abs().max()))
        shifted = bases.shift_apply(state, "down")
        shift_error = max(shift_error, abs(shifted.norm_squared() - state.norm_squared()))
    rows.append(_error_check("bases", "commutator", "[-64, 64]", commutator_error, 1e-14))
    rows.append(_error_check("bases", "edge_delta", "8 random states", delta_error, 1e-10))
    rows.append(_error_check("bases", "parity_involution", "8 random states", parity_error, 0.0))
    rows.append(_error_check("bases", "shift_norm", "8 random states", shift_error, 1e-12))

    size = 32
    spectrum = torch.linalg.eigvalsh(bases.sg_cosine_operator(size).entries)
    k = torch.arange(size, 0, -1, dtype=REAL)
    expected = torch.cos(k * math.pi / (size + 1))
    error = float((spectrum - expected).abs().max())
    rows.append(_error_check("bases", "cosine_spectrum", f"N={size}", error, 1e-12))
    return rows


def run_suite(name, config, **kwargs):
    if name == "relations":
        return relations_suite(config, **kwargs)
    if name == "identities":
        return identities_suite(config)
    return bases_suite(config)


def _compare(example_id, quantity, expected, computed, tolerance, relative=False):
    error = abs(computed - expected)
    if relative:
        error /= abs(expected)
    return ReproRow(example_id, quantity, expected, computed, error, tolerance, error <= tolerance)


def repro_table(config):
    """One row per quantitative claim of the worked examples."""
    tail_tol = config.tail_tol
    grid_n = config.grid_n
    rows = []

    uniform = phase_stats.phase_uncertainty(modes.make_number_state(0), grid_n)
    rows.append(
        _compare(
            "uniform_dtheta", "delta_theta", math.pi / math.sqrt(3), uniform.delta_theta, 1e-9
        )
    )

    for label, delta in (("pi/4", math.pi / 4), ("pi/2", math.pi / 2), ("pi", math.pi)):
        result = phase_stats.phase_uncertainty(modes.make_two_peak_density(delta), grid_n)
        expected = math.pi ** 2 / 4 + delta ** 2 / 12
        rows.append(_compare(f"two_peak_{label}", "variance", expected, result.variance, 1e-8))
    rows.append(_compare("two_peak_max", "variance", UNIFORM_VARIANCE, result.variance, 1e-8))

    eps = 1e-3
    packet = modes.make_rotor_wavepacket(eps, 0.5, tail_tol=tail_tol)
    result = phase_stats.phase_uncertainty(packet, grid_n)
    momentum = relations.momentum_stats(packet)
    rows.append(_compare("packet_dtheta", "delta_theta/eps", 1.0, result.delta_theta / eps, 0.01))
    rows.append(
        _compare(
            "packet_dl",
            "delta_L*(e^eps-e^-eps)/sqrt2",
            1.0,
            momentum.std * 2.0 * math.sinh(eps) / math.sqrt(2.0),
            1e-9,
        )
    )
    rows.append(
        _compare(
            "packet_product",
            "delta_L*delta_theta",
            1.0 / math.sqrt(2.0),
            momentum.std * result.delta_theta,
            0.05,
            relative=True,
        )
    )
    rows.append(_compare("packet_edge", "edge_density", 0.0, result.edge_density_at_min, 1e-4))

    # the pointwise amplitude error is the l1 norm of the dropped coefficients
    packet = modes.make_rotor_wavepacket(0.1, 0.0, tail_tol=1e-30)
    thetas = torch.linspace(-math.pi, math.pi, 257, dtype=REAL)
    amplitude = modes.eval_wavefunction(packet, thetas)
    closed = modes.rotor_wavepacket_closed_form(thetas, 0.1)
    error = float((amplitude - closed).abs().max())
    rows.append(_compare("packet_closed_form", "max|psi-closed|", 0.0, error, 1e-12))
    dropped = modes.project_nonnegative(packet).discarded_mass
    rows.append(
        _compare(
            "packet_negative_mass",
            "discarded_mass",
            math.exp(-0.2) / (1.0 + math.exp(-0.2)),
            dropped,
            1e-12,
        )
    )

    two_mode = modes.make_two_mode_superposition(0, 1, math.pi / 4, 0.3)
    extrema = phase_stats.find_extrema(two_mode, grid_n)
    worst = max(abs(math.sin(-e.alpha + 0.3)) for e in extrema)
    rows.append(_compare("two_mode_extrema", "max|sin((l-L)alpha+beta)|", 0.0, worst, 1e-10))
    result = phase_stats.phase_uncertainty(two_mode, grid_n)
    rows.append(
        _compare("two_mode_variance", "variance", UNIFORM_VARIANCE - 2.0, result.variance, 1e-8)
    )
    report = relations.check_relation_min(two_mode, config.tolerance)
    rows.append(
        ReproRow(
            "two_mode_margin", "margin", 0.0, report.margin, report.margin, 0.0, report.margin > 0
        )
    )

    eps = 1e-4
    cps = modes.make_coherent_phase_state(math.exp(-eps), tail_tol=tail_tol)
    result = phase_stats.phase_uncertainty(cps, grid_n)
    rows.append(
        _compare(
            "cps_ln4", "variance/eps", 4 * math.log(2), result.variance / eps, 0.02, relative=True
        )
    )
    eps = 1e-3
    cps = modes.make_coherent_phase_state(math.exp(-eps), tail_tol=tail_tol)
    momentum = relations.momentum_stats(cps)
    rows.append(
        _compare("cps_dn", "delta_N*2eps", 1.0, momentum.std * 2 * eps, 1e-3, relative=True)
    )
    cps = modes.make_coherent_phase_state(0.8, tail_tol=tail_tol)
    rows.append(
        _compare(
            "cps_integral",
            "variance",
            phase_stats.coherent_phase_variance_integral(0.8),
            phase_stats.phase_uncertainty(cps, grid_n).variance,
            1e-8,
        )
    )

    margins = []
    for r in (1, 2, 4, 8):
        coherent = modes.make_coherent_state(r, 0.0, tail_tol=tail_tol)
        momentum = relations.momentum_stats(coherent)
        rows.append(_compare(f"coherent_dn_r{r}", "delta_N", float(r), momentum.std, 1e-6))
        margins.append(relations.check_relation_min(coherent, config.tolerance).margin)
    decreasing = all(m > 0 for m in margins) and all(
        a > b for a, b in zip(margins, margins[1:])
    )
    rows.append(
        ReproRow(
            "coherent_margin",
            "margin decreasing in r",
            0.0,
            margins[-1],
            margins[-1],
            0.0,
            decreasing,
        )
    )
    coherent = modes.make_coherent_state(3.0, 0.0, tail_tol=tail_tol)
    rows.append(
        _compare(
            "coherent_series",
            "variance at alpha=beta",
            phase_stats.coherent_state_variance_series(3.0, tail_tol),
            phase_stats.windowed_stats(coherent, 0.0).variance,
            1e-10,
        )
    )
    logger.info("repro: %d rows, %d failing", len(rows), sum(not r.passed for r in rows))
    return rows
