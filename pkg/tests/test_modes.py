# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math

import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from phasekit import modes
from phasekit.constants import COMPLEX, REAL, TWO_PI
from phasekit.data import RandomStateDataset
from phasekit.errors import InvalidInputError, ResourceError


def test_number_state_has_flat_density(theta_grid):
    state = modes.make_number_state(3)
    assert state.l_min == state.l_max == 3
    rho = modes.density_from_state(state).evaluate(theta_grid)
    assert torch.allclose(rho, torch.ones_like(rho), atol=1e-14)


def test_number_state_wavefunction():
    value = modes.eval_wavefunction(modes.make_number_state(1), torch.tensor([math.pi / 2]))
    assert complex(value[0]) == pytest.approx(1j, abs=1e-15)


@pytest.mark.parametrize(
    "state, centre",
    [
        (modes.make_rotor_wavepacket(0.2, 1.0), 1.0),
        (modes.make_coherent_state(5.0, 1.0), 1.0),
    ],
)
def test_peaked_densities_are_symmetric(state, centre):
    density = modes.density_from_state(state)
    x = torch.linspace(0.0, math.pi, 33, dtype=REAL)
    left = density.evaluate(centre - x)
    right = density.evaluate(centre + x)
    assert float((left - right).abs().max()) <= 1e-10


def test_number_state_rejects_fractional_mode():
    with pytest.raises(InvalidInputError):
        modes.make_number_state(1.5)


@pytest.mark.parametrize("epsilon", [1.0, 0.1, 0.01])
def test_wavepacket_truncation(epsilon):
    state = modes.make_rotor_wavepacket(epsilon, 0.4)
    assert state.is_normalized()
    assert state.l_min == -state.l_max
    assert 0 < state.tail_bound < 1e-14
    # the first dropped shell would already be below the tolerance
    outer = 2.0 * math.exp(-2.0 * state.l_max * epsilon) / (1.0 + math.exp(-2.0 * epsilon))
    assert outer >= 1e-14


def test_wavepacket_peaks_at_beta():
    state = modes.make_rotor_wavepacket(0.2, 1.3)
    rho = modes.density_from_state(state).evaluate(torch.tensor([1.3, 1.8, 1.3 + math.pi]))
    assert rho[0] > rho[1] > rho[2]


def test_wavepacket_matches_closed_form(theta_grid):
    state = modes.make_rotor_wavepacket(0.1, 0.7, tail_tol=1e-30)
    amplitude = modes.eval_wavefunction(state, theta_grid)
    closed = modes.rotor_wavepacket_closed_form(theta_grid, 0.1, 0.7)
    assert float((amplitude - closed).abs().max()) <= 1e-12


def test_wavepacket_errors():
    with pytest.raises(InvalidInputError):
        modes.make_rotor_wavepacket(0.0)
    with pytest.raises(InvalidInputError):
        modes.make_rotor_wavepacket(0.1, tail_tol=1e-3)
    with pytest.raises(ResourceError):
        modes.make_rotor_wavepacket(1e-9)


def test_two_mode_superposition():
    state = modes.make_two_mode_superposition(2, -1, math.pi / 3, 0.5)
    assert (state.l_min, state.l_max) == (-1, 2)
    assert state.coefficient(2) == pytest.approx(0.5)
    assert abs(state.coefficient(-1)) == pytest.approx(math.sin(math.pi / 3))
    assert state.coefficient(0) == 0
    assert state.is_normalized()
    with pytest.raises(InvalidInputError):
        modes.make_two_mode_superposition(1, 1, 0.3)


def test_coherent_phase_state_density_is_poisson_kernel(theta_grid):
    eps, beta = 0.3, 0.9
    zeta = math.exp(-eps) * complex(math.cos(beta), -math.sin(beta))
    state = modes.make_coherent_phase_state(zeta, tail_tol=1e-30)
    assert state.l_min == 0
    rho = modes.density_from_state(state).evaluate(theta_grid)
    q = math.exp(-eps)
    expected = (1 - q * q) / ((1 - q) ** 2 + 4 * q * torch.sin((theta_grid - beta) / 2) ** 2)
    assert float(((rho - expected) / expected).abs().max()) <= 1e-10


def test_coherent_phase_state_limits():
    vacuum = modes.make_coherent_phase_state(0)
    assert (vacuum.l_min, vacuum.l_max) == (0, 0)
    with pytest.raises(InvalidInputError):
        modes.make_coherent_phase_state(1.0)
    with pytest.raises(ResourceError):
        modes.make_coherent_phase_state(math.exp(-1e-9))


def test_coherent_state_is_poisson():
    state = modes.make_coherent_state(5.0, 0.0)
    assert state.is_physical
    assert state.is_normalized()
    assert int(state.probabilities.argmax()) in (24, 25)
    assert state.tail_bound < 1e-14
    mean = float((state.modes * state.probabilities).sum())
    assert mean == pytest.approx(25.0, abs=1e-9)


def test_coherent_state_limits():
    vacuum = modes.make_coherent_state(0.0)
    assert vacuum.num_modes == 1
    with pytest.raises(InvalidInputError):
        modes.make_coherent_state(-1.0)
    with pytest.raises(ResourceError):
        modes.make_coherent_state(1e4)


def test_two_peak_density_values():
    density = modes.make_two_peak_density(math.pi / 2)
    assert density.total_mass() == pytest.approx(1.0, abs=1e-14)
    rho = density.evaluate(torch.tensor([math.pi / 2, -math.pi / 2, 0.0, math.pi]))
    assert rho.tolist() == [2.0, 2.0, 0.0, 0.0]


def test_two_peak_arcs_are_half_open():
    density = modes.make_two_peak_density(math.pi)
    # arcs (-pi, 0] and (0, pi]: every point belongs to exactly one of them
    rho = density.evaluate(torch.tensor([0.0, math.pi, -math.pi, 2 * math.pi]))
    assert rho.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_two_peak_errors():
    for delta in (0.0, -0.1, 3.5):
        with pytest.raises(InvalidInputError):
            modes.make_two_peak_density(delta)


def test_piecewise_validation():
    with pytest.raises(InvalidInputError, match="overlap"):
        modes.PhaseDensity.from_pieces([(0.0, 2.0, 1.5), (1.0, 3.0, 1.5)])
    with pytest.raises(InvalidInputError, match="integrates"):
        modes.PhaseDensity.from_pieces([(0.0, 1.0, 1.0)])


def test_mode_expansion_validation():
    with pytest.raises(InvalidInputError):
        modes.ModeExpansion(0, 2, torch.ones(2, dtype=COMPLEX))
    with pytest.raises(InvalidInputError):
        modes.ModeExpansion(3, 1, torch.ones(1, dtype=COMPLEX))
    with pytest.raises(InvalidInputError):
        modes.ModeExpansion(0, 0, torch.tensor([float("nan")], dtype=COMPLEX))


def test_explicit_state_and_embed():
    state = modes.make_explicit_state([(2, 0.6), (-1, 0.8j)])
    assert (state.l_min, state.l_max) == (-1, 2)
    assert state.embed(-2, 3).tolist() == [0, 0.8j, 0, 0, 0.6, 0]
    with pytest.raises(InvalidInputError):
        state.embed(0, 3)
    with pytest.raises(InvalidInputError):
        modes.make_explicit_state([(1, 0.5), (1, 0.5)])


def test_half_integer_modes():
    state = modes.make_explicit_state([(0, 1.0)], half_integer=True)
    assert state.modes.tolist() == [0.5]
    assert not state.is_physical
    # exp(i theta / 2) is antiperiodic
    psi = modes.eval_wavefunction(state, torch.tensor([0.3, 0.3 + TWO_PI]))
    assert complex(psi[0] + psi[1]) == pytest.approx(0, abs=1e-14)


def test_eval_wavefunction_keeps_shape():
    state = modes.make_rotor_wavepacket(0.5)
    thetas = torch.zeros(3, 4, dtype=REAL)
    assert modes.eval_wavefunction(state, thetas).shape == (3, 4)


def test_project_nonnegative_wavepacket_mass():
    state = modes.make_rotor_wavepacket(0.1, 0.0)
    projected = modes.project_nonnegative(state)
    assert projected.l_min == 0
    expected = math.exp(-0.2) / (1.0 + math.exp(-0.2))
    assert projected.discarded_mass == pytest.approx(expected, abs=1e-12)
    assert projected.norm_squared() + projected.discarded_mass == pytest.approx(1.0, abs=1e-13)
    again = modes.project_nonnegative(projected)
    assert again.discarded_mass == 0.0
    assert torch.equal(again.coeffs, projected.coeffs)


def test_project_nonnegative_all_negative():
    projected = modes.project_nonnegative(modes.make_number_state(-3))
    assert projected.norm_squared() == 0.0
    assert projected.discarded_mass == 1.0


def test_density_from_state_requires_normalisation():
    state = modes.ModeExpansion(0, 1, torch.tensor([1.0, 1.0], dtype=COMPLEX))
    with pytest.raises(InvalidInputError, match="normalised"):
        modes.density_from_state(state)
    assert modes.density_from_state(state.normalized()).total_mass() == pytest.approx(1.0)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    num_modes=st.integers(min_value=1, max_value=32),
    phi=st.floats(min_value=-10.0, max_value=10.0),
)
def test_rotation_moves_density_rigidly(seed, num_modes, phi):
    state = RandomStateDataset(1, num_modes, seed=seed)[0]
    rotated = modes.rotate_state(state, phi)
    assert rotated.norm_squared() == pytest.approx(state.norm_squared(), abs=1e-12)
    thetas = torch.linspace(-math.pi, math.pi, 33, dtype=REAL)
    before = modes.eval_wavefunction(state, thetas).abs() ** 2
    after = modes.eval_wavefunction(rotated, thetas + phi).abs() ** 2
    assert float((before - after).abs().max()) <= 1e-9


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    num_modes=st.integers(min_value=1, max_value=32),
)
def test_density_mean_is_norm(seed, num_modes):
    state = RandomStateDataset(1, num_modes, seed=seed)[0]
    grid = torch.arange(256, dtype=REAL) * (TWO_PI / 256)
    rho = modes.density_from_state(state).evaluate(grid)
    assert float(rho.mean()) == pytest.approx(1.0, abs=1e-12)
