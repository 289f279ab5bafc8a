"""
Tests pour le module `pyblockpovm.core.povm`.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pyblockpovm.core.errors import (
    BlockValidationError,
    DimensionMismatchError,
    EffectRangeError,
    InvalidPermutationError,
    InvalidStateError,
    NonPsdBlock,
    NonPsdEffect,
    PovmValidationError,
    SumNotIdentity,
    UnsupportedDimensionError,
)
from pyblockpovm.core.linalg import hs_norm, identity
from pyblockpovm.core.povm import (
    BlockKind,
    BlockMatrix,
    analytic_volume_ratio,
    basis_state,
    cone_coordinates,
    delta22_analytic_volume,
    fuzzy_povm,
    is_valid_effect_region,
    matrix_convex_combination,
    pauli_povms,
    uniform_povm,
    validate_block,
    validate_density,
    validate_effect,
    validate_povm,
)
from pyblockpovm.core.sampling import (
    PovmMethod,
    SeededRng,
    ginibre_effect,
    random_density,
    random_povm,
    random_unitary,
)


@pytest.fixture
def pauli():
    """Les mesures de Pauli en d = 2."""
    return pauli_povms()


def test_validate_povm_accepts_pauli(pauli):
    povm = validate_povm(list(pauli.z.effects))
    assert povm.n == 2 and povm.d == 2
    np.testing.assert_allclose(povm.effects.sum(axis=0), identity(2))


def test_validate_povm_reports_negative_effect():
    """Un effet non positif est signalé avec son indice et son λ_min."""
    effects = [np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])]
    with pytest.raises(PovmValidationError) as excinfo:
        validate_povm(effects)
    assert excinfo.value.violations == [NonPsdEffect(1, pytest.approx(-0.5))]


def test_validate_povm_collects_all_violations():
    """Toutes les violations sont collectées avant de lever l'erreur."""
    effects = [np.diag([1.0, -0.2]), np.diag([0.5, 0.5])]
    with pytest.raises(PovmValidationError) as excinfo:
        validate_povm(effects)
    kinds = [type(v) for v in excinfo.value.violations]
    assert kinds == [NonPsdEffect, SumNotIdentity]
    assert excinfo.value.violations[1].deviation == pytest.approx(0.5)
    detail = excinfo.value.to_dict()
    assert detail["error"] == "PovmValidationError"
    assert [v["kind"] for v in detail["violations"]] == ["NonPsdEffect", "SumNotIdentity"]


def test_validate_povm_empty_or_mixed_shapes():
    with pytest.raises(DimensionMismatchError):
        validate_povm([])
    with pytest.raises(DimensionMismatchError):
        validate_povm([identity(2), np.zeros((3, 3))])


def test_povm_is_immutable(pauli):
    with pytest.raises(ValueError):
        pauli.z.effects[0, 0, 0] = 2.0


def test_fuzzy_povm():
    """V_j porte l'identité à l'emplacement j (indices à partir de 0)."""
    povm = fuzzy_povm(1, 3, 2)
    np.testing.assert_allclose(povm[1], identity(2))
    np.testing.assert_allclose(povm[0], 0.0)
    with pytest.raises(IndexError):
        fuzzy_povm(3, 3, 2)


def test_uniform_povm():
    povm = uniform_povm(4, 3)
    np.testing.assert_allclose(povm.effects.sum(axis=0), identity(3))
    np.testing.assert_allclose(povm[2], identity(3) / 4)


def test_permuted(pauli):
    swapped = pauli.z.permuted((1, 0))
    np.testing.assert_allclose(swapped[0], pauli.z[1])
    with pytest.raises(InvalidPermutationError):
        pauli.z.permuted((0, 0))


def test_probabilities(pauli):
    """tr(P_j ρ) pour |0⟩⟨0| : (1, 0) sur P_Z, (1/2, 1/2) sur P_X."""
    rho = basis_state(0, 2)
    np.testing.assert_allclose(pauli.z.probabilities(rho), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(pauli.x.probabilities(rho), [0.5, 0.5], atol=1e-15)
    with pytest.raises(DimensionMismatchError):
        pauli.z.probabilities(basis_state(0, 3))


def test_block_matrix_shape_check():
    with pytest.raises(DimensionMismatchError):
        BlockMatrix(np.zeros((2, 2, 2)))


def test_block_kinds(pauli):
    """Identité bistochastique, colonnes distinctes stochastiques, sinon générale."""
    assert BlockMatrix.identity(3, 2).kind() is BlockKind.BISTOCHASTIC
    assert BlockMatrix.from_columns([pauli.z, pauli.x]).kind() is BlockKind.STOCHASTIC
    general = BlockMatrix(np.zeros((2, 2, 2, 2), dtype=complex))
    assert general.kind() is BlockKind.GENERAL


def test_validate_block_reports_blocks():
    blocks = np.zeros((2, 2, 1, 1))
    blocks[0, 1, 0, 0] = -0.25
    with pytest.raises(BlockValidationError) as excinfo:
        validate_block(blocks)
    assert excinfo.value.violations == [NonPsdBlock(0, 1, pytest.approx(-0.25))]


def test_validate_block_non_rectangular():
    with pytest.raises(DimensionMismatchError):
        validate_block([[identity(2)], [identity(2), identity(2)]])


def test_block_column_and_adjoint(pauli):
    block = BlockMatrix.from_columns([pauli.z, pauli.x])
    np.testing.assert_allclose(block.column(1).effects, pauli.x.effects)
    np.testing.assert_allclose(block.adjoint().blocks[1, 0], block.blocks[0, 1])


def test_validate_effect():
    validate_effect(identity(2) / 3)
    with pytest.raises(EffectRangeError):
        validate_effect(2 * identity(2))


def test_validate_density():
    with pytest.raises(InvalidStateError):
        validate_density(identity(2))
    with pytest.raises(InvalidStateError):
        validate_density(np.diag([1.5, -0.5]))
    rho = validate_density(identity(2) / 2)
    assert rho.d == 2


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_density_probabilities_sum_to_one(seed):
    """Σ_j tr(P_j ρ) = 1."""
    rng = SeededRng(seed)
    povm = random_povm(3, 3, PovmMethod.GINIBRE_RENORMALIZED, rng)
    rho = random_density(3, rng)
    assert povm.probabilities(rho).sum() == pytest.approx(1.0, abs=1e-12)


def test_cone_coordinates(pauli):
    """P_{Z+} a t = 1 et τ = 1; 1/2 a τ = 0."""
    assert cone_coordinates(pauli.z[0]) == (pytest.approx(1.0), pytest.approx(1.0))
    assert cone_coordinates(identity(2) / 2).tau == pytest.approx(0.0)
    with pytest.raises(UnsupportedDimensionError):
        cone_coordinates(identity(3))


@pytest.mark.parametrize(
    "t, tau, expected",
    [(1.0, 1.0, True), (0.5, 0.6, False), (1.5, 0.5, True), (1.5, 0.6, False), (0.0, 0.0, True)],
)
def test_is_valid_effect_region(t, tau, expected):
    assert is_valid_effect_region(t, tau) is expected


def test_is_valid_effect_region_negative_tau():
    with pytest.raises(ValueError):
        is_valid_effect_region(1.0, -0.1)


def test_analytic_volumes():
    assert delta22_analytic_volume() == pytest.approx(2 * math.pi / 3)
    assert analytic_volume_ratio() == pytest.approx(1 / 8)


def test_matrix_convex_combination_scalar_weight(pauli):
    """Avec A = 1/2 et U = V = 1, on obtient le mélange (P + Q)/2."""
    mixed = matrix_convex_combination(pauli.z, pauli.x, identity(2) / 2)
    np.testing.assert_allclose(mixed.effects, (pauli.z.effects + pauli.x.effects) / 2, atol=1e-12)


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_matrix_convex_combination_is_povm(seed):
    """Un poids matriciel et des unitaires quelconques donnent une POVM."""
    rng = SeededRng(seed)
    p = random_povm(3, 2, PovmMethod.GINIBRE_RENORMALIZED, rng)
    q = random_povm(3, 2, PovmMethod.NEAR_EXTREMAL, rng, 0.1)
    result = matrix_convex_combination(
        p, q, ginibre_effect(2, rng), random_unitary(2, rng), random_unitary(2, rng)
    )
    assert hs_norm(result.effects.sum(axis=0) - identity(2)) < 1e-10


def test_matrix_convex_combination_rejects_bad_weight(pauli):
    with pytest.raises(EffectRangeError):
        matrix_convex_combination(pauli.z, pauli.x, 2 * identity(2))
