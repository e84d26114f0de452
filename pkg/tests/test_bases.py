# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math

import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from phasekit import bases, modes, phase_stats
from phasekit.bases import BasisFamily
from phasekit.constants import COMPLEX, REAL
from phasekit.data import RandomStateDataset
from phasekit.errors import DegenerateProjectionError, InvalidInputError


def test_basis_wavefunction_values():
    assert bases.basis_wavefunction("sg_cosine", 0, math.pi / 2) == pytest.approx(1.0)
    assert bases.basis_wavefunction("z2_cosine", 0, 1.234) == 1.0
    assert bases.basis_wavefunction("z2_cosine", 2, 0.0) == pytest.approx(math.sqrt(2.0))
    assert bases.basis_wavefunction("half_sine", 0, math.pi) == pytest.approx(math.sqrt(2.0))
    values = bases.basis_wavefunction(BasisFamily.HALF_SINE, 3, torch.tensor([0.0, 1.0]))
    assert values.shape == (2,)
    assert float(values[0]) == 0.0


def test_basis_wavefunction_errors():
    with pytest.raises(InvalidInputError):
        bases.basis_wavefunction("sg_cosine", -1, 0.5)
    with pytest.raises(InvalidInputError):
        bases.basis_wavefunction("sg_cosine", 1, 3.5)
    with pytest.raises(InvalidInputError, match="unknown basis family"):
        bases.basis_wavefunction("laguerre", 1, 0.5)


@pytest.mark.parametrize("family", list(BasisFamily))
@pytest.mark.parametrize("size", [16, 64])
def test_families_are_orthonormal(family, size):
    gram = bases.overlap_matrix(family, family, size, quad_n=1024)
    assert gram.unitarity_defect() <= 1e-8
    assert float((gram.entries - torch.eye(size, dtype=COMPLEX)).abs().max()) <= 1e-8


def test_cross_family_overlap_truncation():
    with pytest.warns(UserWarning, match="truncation"):
        small = bases.overlap_matrix("sg_cosine", "half_sine", 32, quad_n=4096)
    with pytest.warns(UserWarning, match="truncation"):
        large = bases.overlap_matrix("sg_cosine", "half_sine", 64, quad_n=4096)
    assert small.unitarity_defect(block=16) <= 0.05
    assert large.unitarity_defect(block=16) < small.unitarity_defect(block=16)


def test_overlap_matrix_needs_enough_nodes():
    with pytest.raises(InvalidInputError):
        bases.overlap_matrix("sg_cosine", "sg_cosine", 64, quad_n=512)
    with pytest.raises(InvalidInputError):
        bases.overlap_matrix("sg_cosine", "sg_cosine", 0)


def test_parity_of_number_state():
    mirrored = bases.parity_apply(modes.make_number_state(2))
    assert (mirrored.l_min, mirrored.l_max) == (-2, -2)
    assert mirrored.coefficient(-2) == 1


def test_signed_parity_on_half_integer_modes():
    state = modes.make_explicit_state([(0, 0.6), (1, 0.8)], half_integer=True)
    with pytest.raises(InvalidInputError):
        bases.parity_apply(state)
    mirrored = bases.parity_apply(state, signed=True)
    # modes 1/2, 3/2 go to -1/2, -3/2
    assert mirrored.modes.tolist() == [-1.5, -0.5]
    assert mirrored.coeffs.tolist() == [-0.8, -0.6]
    assert torch.equal(bases.parity_apply(mirrored, signed=True).coeffs, state.coeffs)


@given(seed=st.integers(min_value=0, max_value=10_000), signed=st.booleans())
def test_parity_is_an_involution(seed, signed):
    state = RandomStateDataset(1, 9, seed=seed, l_min=-3)[0]
    twice = bases.parity_apply(bases.parity_apply(state, signed=signed), signed=signed)
    assert (twice.l_min, twice.l_max) == (state.l_min, state.l_max)
    assert torch.equal(twice.coeffs, state.coeffs)


def test_parity_mirrors_density():
    state = RandomStateDataset(1, 12, seed=5)[0]
    thetas = torch.linspace(-math.pi, math.pi, 41, dtype=REAL)
    rho = modes.eval_wavefunction(state, thetas).abs() ** 2
    mirrored = modes.eval_wavefunction(bases.parity_apply(state), -thetas).abs() ** 2
    assert float((rho - mirrored).abs().max()) <= 1e-12


def test_z2_symmetrize():
    sym = bases.z2_symmetrize(modes.make_number_state(1))
    assert sym.coefficient(1) == pytest.approx(1 / math.sqrt(2))
    assert sym.coefficient(-1) == pytest.approx(1 / math.sqrt(2))
    vacuum = bases.z2_symmetrize(modes.make_number_state(0))
    assert vacuum.coefficient(0) == pytest.approx(1.0)
    with pytest.raises(DegenerateProjectionError):
        bases.z2_symmetrize(modes.make_number_state(0), signed=True)


def test_lowering_operator():
    assert bases.ladder_apply(modes.make_number_state(0), "lower").norm_squared() == 0.0
    lowered = bases.ladder_apply(modes.make_number_state(4), "lower")
    assert lowered.coefficient(3) == pytest.approx(2.0)
    raised = bases.ladder_apply(modes.make_number_state(3), "raise")
    assert raised.coefficient(4) == pytest.approx(2.0)
    with pytest.raises(InvalidInputError):
        bases.ladder_apply(modes.make_number_state(1), "sideways")
    with pytest.raises(InvalidInputError):
        bases.ladder_apply(modes.make_number_state(-1), "lower")


@pytest.mark.parametrize("n", [0, 1, 7, 64])
def test_ladder_algebra(n):
    state = modes.make_number_state(n)
    up_down = bases.ladder_apply(bases.ladder_apply(state, "lower"), "raise")
    down_up = bases.ladder_apply(bases.ladder_apply(state, "raise"), "lower")
    assert up_down.coefficient(n) == pytest.approx(n, abs=1e-12)
    assert down_up.coefficient(n) == pytest.approx(n + 1, abs=1e-12)


def test_coherent_state_is_lowering_eigenstate():
    r = 2.0
    state = modes.make_coherent_state(r, 0.3)
    lowered = bases.ladder_apply(state, "lower")
    expected = r * complex(math.cos(0.3), -math.sin(0.3)) * state.coeffs[:-1]
    assert float((lowered.coeffs - expected).abs().max()) <= 1e-10


def test_shift_operators():
    state = modes.make_number_state(5)
    assert bases.shift_apply(state, "down").l_min == 4
    random = RandomStateDataset(1, 10, seed=2)[0]
    back = bases.shift_apply(bases.shift_apply(random, "down"), "up")
    assert (back.l_min, back.l_max) == (random.l_min, random.l_max)
    assert torch.equal(back.coeffs, random.coeffs)
    with pytest.raises(InvalidInputError):
        bases.shift_apply(state, "left")


def test_exponential_kills_vacuum():
    killed = bases.exponential_apply(modes.make_number_state(0))
    assert killed.norm_squared() == 0.0
    assert killed.discarded_mass == 1.0


def test_coherent_phase_state_is_exponential_eigenstate():
    zeta = 0.7 * complex(math.cos(1.0), math.sin(1.0))
    state = modes.make_coherent_phase_state(zeta)
    image = bases.exponential_apply(state)
    expected = zeta * state.coeffs[: image.num_modes]
    assert image.l_max == state.l_max - 1
    assert float((image.coeffs - expected).abs().max()) <= 1e-12


def test_cosine_operator_spectrum():
    size = 16
    operator = bases.sg_cosine_operator(size)
    assert operator.hermiticity_defect() == 0.0
    spectrum = torch.linalg.eigvalsh(operator.entries)
    k = torch.arange(size, 0, -1, dtype=REAL)
    assert torch.allclose(spectrum, torch.cos(k * math.pi / (size + 1)), atol=1e-12)


def test_time_evolution_rotates_density():
    state = modes.make_coherent_state(3.0, 0.0)
    evolved = bases.time_evolve(state, 2.0, 0.5)
    assert evolved.norm_squared() == pytest.approx(1.0, abs=1e-12)
    thetas = torch.linspace(-math.pi, math.pi, 65, dtype=REAL)
    before = modes.eval_wavefunction(state, thetas).abs() ** 2
    after = modes.eval_wavefunction(evolved, thetas + 1.0).abs() ** 2
    assert float((before - after).abs().max()) <= 1e-10

    base = phase_stats.phase_uncertainty(state)
    moved = phase_stats.phase_uncertainty(evolved)
    assert moved.delta_theta == pytest.approx(base.delta_theta, abs=1e-9)
    assert moved.alpha0 == pytest.approx(phase_stats.canonical_alpha(base.alpha0 + 1.0), abs=1e-9)


def test_time_evolution_identity_at_zero():
    state = modes.make_coherent_state(1.5, 0.2)
    assert torch.equal(bases.time_evolve(state, 3.0, 0.0).coeffs, state.coeffs)
