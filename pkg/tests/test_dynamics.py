"""
Tests pour le module `pyblockpovm.core.dynamics`.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pyblockpovm.core.dynamics import (
    apply,
    blockwise_product,
    circulant_from_povm,
    dual_blockwise_product,
    evolve,
    is_fixed_point,
    luders_post_state,
    mixture,
    seq_product,
    star_first_effect,
    two_outcome_bistochastic,
    two_stage_run,
    xi_combination,
)
from pyblockpovm.core.errors import (
    DimensionMismatchError,
    OutcomeProbabilityZeroError,
    PovmInputError,
)
from pyblockpovm.core.experiments import commuting_ansatz
from pyblockpovm.core.linalg import hs_norm, identity
from pyblockpovm.core.povm import (
    BlockMatrix,
    Povm,
    basis_state,
    fuzzy_povm,
    pauli_povms,
)
from pyblockpovm.core.sampling import (
    BistochasticMethod,
    PovmMethod,
    SeededRng,
    ginibre_effect,
    random_bistochastic,
    random_density,
    random_povm,
    random_stochastic,
    random_unitary,
)

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def pauli():
    return pauli_povms()


def _column(left, right):
    return apply(BlockMatrix.from_columns(left), right).effects


def test_pauli_product_table(pauli):
    """Les identités de la table des produits de Pauli, à 1e-12 près."""
    z, x, y, flat = pauli
    np.testing.assert_allclose(_column([z, z], z), z.effects, atol=1e-12)
    np.testing.assert_allclose(_column([z, z], x), flat.effects, atol=1e-12)
    np.testing.assert_allclose(_column([z, x], y), flat.effects, atol=1e-12)
    expected = np.stack([x[0] / 2, identity(2) - x[0] / 2])
    np.testing.assert_allclose(_column([z, x], x), expected, atol=1e-12)


def test_seq_product_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        seq_product(identity(2), identity(3))


def test_blockwise_product_shapes():
    """Une grille n×n′ composée avec n′×n″ donne n×n″; sinon erreur."""
    left = BlockMatrix(np.zeros((3, 2, 2, 2), dtype=complex))
    right = BlockMatrix.identity(2, 2)
    assert blockwise_product(left, right).blocks.shape == (3, 2, 2, 2)
    with pytest.raises(DimensionMismatchError):
        blockwise_product(right, left)
    with pytest.raises(DimensionMismatchError):
        blockwise_product(BlockMatrix.identity(2, 3), right)


@given(seed=SEEDS, n=st.integers(min_value=2, max_value=3), d=st.integers(min_value=2, max_value=3))
@settings(max_examples=30, deadline=None)
def test_stochastic_maps_povms_to_povms(seed, n, d):
    """S*P est une POVM pour S stochastique."""
    rng = SeededRng(seed)
    p = random_povm(n, d, PovmMethod.GINIBRE_RENORMALIZED, rng)
    q = evolve(random_stochastic(n, d, rng), p)
    assert q.n == n


@given(seed=SEEDS)
@settings(max_examples=30, deadline=None)
def test_left_and_dual_distributivity(seed):
    """(A + B)*C = A*C + B*C et A*†(B + C) = A*†B + A*†C."""
    rng = SeededRng(seed)
    a, b, c = (random_stochastic(2, 2, rng) for _ in range(3))
    np.testing.assert_allclose(
        blockwise_product(a + b, c).blocks,
        (blockwise_product(a, c) + blockwise_product(b, c)).blocks,
        atol=1e-12,
    )
    np.testing.assert_allclose(
        dual_blockwise_product(a, b + c).blocks,
        (dual_blockwise_product(a, b) + dual_blockwise_product(a, c)).blocks,
        atol=1e-12,
    )


def test_product_is_neither_commutative_nor_associative():
    """Témoins explicites : écarts supérieurs à 1e-6."""
    rng = SeededRng(2024)
    a, b, c = (random_stochastic(2, 2, rng) for _ in range(3))
    commuted = blockwise_product(a, b).blocks - blockwise_product(b, a).blocks
    assert np.max(np.abs(commuted)) > 1e-6
    left = blockwise_product(blockwise_product(a, b), c).blocks
    right = blockwise_product(a, blockwise_product(b, c)).blocks
    assert np.max(np.abs(left - right)) > 1e-6


def test_identity_is_neutral():
    rng = SeededRng(7)
    p = random_povm(3, 2, PovmMethod.GINIBRE_RENORMALIZED, rng)
    np.testing.assert_allclose(apply(BlockMatrix.identity(3, 2), p).effects, p.effects, atol=1e-12)


def test_circulant_reproduces_seed():
    """B_{ij} = P_{(i+j) mod n} est bistochastique et B*V_0 = P."""
    p = random_povm(3, 2, PovmMethod.GINIBRE_RENORMALIZED, SeededRng(1))
    b = circulant_from_povm(p)
    assert b.is_bistochastic(1e-9)
    np.testing.assert_allclose(apply(b, fuzzy_povm(0, 3, 2)).effects, p.effects, atol=1e-12)
    np.testing.assert_allclose(b.blocks[2, 2], p[1])


def test_two_outcome_products():
    """Les premiers effets de * et *† valent Ξ(P, B) et Ξ(B, P)."""
    rng = SeededRng(9)
    effect_b, effect_p = ginibre_effect(2, rng), ginibre_effect(2, rng)
    matrix = two_outcome_bistochastic(effect_b)
    assert matrix.is_bistochastic()
    povm = Povm(np.stack([effect_p, identity(2) - effect_p]))
    np.testing.assert_allclose(apply(matrix, povm)[0], star_first_effect(effect_b, effect_p), atol=1e-12)
    np.testing.assert_allclose(
        apply(matrix, povm, dual=True)[0], xi_combination(effect_b, effect_p), atol=1e-12
    )


def test_xi_with_identity():
    effect_p = ginibre_effect(2, SeededRng(4))
    np.testing.assert_allclose(xi_combination(identity(2), effect_p), effect_p, atol=1e-12)


def test_mixture_is_convex():
    """(λS₁ + (1−λ)S₂)*P = λ S₁*P + (1−λ) S₂*P."""
    rng = SeededRng(12)
    p = random_povm(2, 2, PovmMethod.GINIBRE_RENORMALIZED, rng)
    s1, s2 = random_stochastic(2, 2, rng), random_stochastic(2, 2, rng)
    mixed = apply(mixture(s1, s2, 0.3), p).effects
    expected = 0.3 * apply(s1, p).effects + 0.7 * apply(s2, p).effects
    np.testing.assert_allclose(mixed, expected, atol=1e-12)
    with pytest.raises(ValueError):
        mixture(s1, s2, 1.5)


def test_luders_post_state(pauli):
    rho = basis_state(0, 2)
    post, probability = luders_post_state(rho, pauli.z[0])
    assert probability == pytest.approx(1.0)
    np.testing.assert_allclose(post.matrix, rho.matrix, atol=1e-12)
    with pytest.raises(OutcomeProbabilityZeroError) as excinfo:
        luders_post_state(rho, pauli.z[1])
    assert excinfo.value.probability == pytest.approx(0.0, abs=1e-12)


@given(seed=SEEDS)
@settings(max_examples=30, deadline=None)
def test_two_stage_marginal_matches_effective_povm(seed):
    """La marginale du second résultat est la statistique de S*P."""
    rng = SeededRng(seed)
    p = random_povm(3, 2, PovmMethod.GINIBRE_RENORMALIZED, rng)
    s = random_stochastic(3, 2, rng)
    rho = random_density(2, rng)
    result = two_stage_run(rho, p, s)
    assert result.joint.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(result.marginal_second, result.effective.probabilities(rho), atol=1e-12)
    np.testing.assert_allclose(result.joint.sum(axis=1), p.probabilities(rho), atol=1e-12)


def test_two_stage_requires_stochastic(pauli):
    not_stochastic = BlockMatrix(np.zeros((2, 2, 2, 2), dtype=complex))
    with pytest.raises(PovmInputError):
        two_stage_run(basis_state(0, 2), pauli.z, not_stochastic)


def test_commuting_ansatz_is_fixed_point():
    effect_b, effect_p = commuting_ansatz(0.3, -0.4, random_unitary(2, SeededRng(8)))
    assert is_fixed_point(effect_b, effect_p, dual=False, tol=1e-12)
    assert is_fixed_point(effect_b, effect_p, dual=True, tol=1e-12)


def test_bistochastic_image_sums_to_identity():
    rng = SeededRng(21)
    b = random_bistochastic(3, 2, BistochasticMethod.NEAR_FLAT, rng)
    q = evolve(b, random_povm(3, 2, PovmMethod.NEAR_UNIFORM, rng))
    assert hs_norm(q.effects.sum(axis=0) - identity(2)) < 1e-10


@given(seed=SEEDS, n=st.integers(min_value=2, max_value=3), d=st.integers(min_value=2, max_value=3))
@settings(max_examples=30, deadline=None)
def test_stochastic_matrices_are_closed_under_product(seed, n, d):
    """Le produit de deux matrices stochastiques à blocs matriciels est stochastique."""
    rng = SeededRng(seed)
    left, right = random_stochastic(n, d, rng), random_stochastic(n, d, rng)
    product = blockwise_product(left, right)
    assert product.is_stochastic(1e-9)
    assert all(np.linalg.eigvalsh(block)[0] >= -1e-12 for block in product.blocks.reshape(-1, d, d))


@given(seed=SEEDS, rows=st.integers(min_value=1, max_value=4))
@settings(max_examples=30, deadline=None)
def test_z_outputs_stay_diagonal(seed, rows):
    """S*P_Z reste diagonale dans la base de calcul pour tout S stochastique."""
    z = pauli_povms().z
    q = apply(random_stochastic(2, 2, SeededRng(seed), rows=rows), z)
    assert np.max(np.abs(q.effects[:, 0, 1])) <= 1e-12
    assert np.max(np.abs(q.effects[:, 1, 0])) <= 1e-12


@given(seed=SEEDS, n=st.integers(min_value=2, max_value=3), d=st.integers(min_value=2, max_value=3))
@settings(max_examples=30, deadline=None)
def test_dual_product_with_repeated_column_returns_it(seed, n, d):
    """Si toutes les colonnes de S valent Q, alors S*†P = Q pour toute POVM P."""
    rng = SeededRng(seed)
    p = random_povm(n, d, PovmMethod.GINIBRE_RENORMALIZED, rng)
    q = random_povm(n, d, PovmMethod.GINIBRE_RENORMALIZED, rng)
    s = BlockMatrix.from_columns([q] * n)
    np.testing.assert_allclose(apply(s, p, dual=True).effects, q.effects, atol=1e-10)


def test_dual_product_leaves_povm_set(pauli):
    """Colonnes (Z, X) appliquées à (P_X+/2, 1 − P_X+/2) : la somme vaut 5/4 − P_X+/2."""
    s = BlockMatrix.from_columns([pauli.z, pauli.x])
    p = Povm(np.stack([pauli.x[0] / 2, identity(2) - pauli.x[0] / 2]))
    gap = apply(s, p, dual=True).effects.sum(axis=0) - identity(2)
    np.testing.assert_allclose(gap, identity(2) / 4 - pauli.x[0] / 2, atol=1e-12)
    assert hs_norm(gap) == pytest.approx(np.sqrt(2) / 4)
    forward = apply(s, p).effects.sum(axis=0)
    np.testing.assert_allclose(forward, identity(2), atol=1e-12)
