"""
Module de la dynamique des mesures : produits par blocs et mesures séquentielles.

Le produit par blocs (A*B)_{ik} = Σ_j √B_{jk} A_{ij} √B_{jk} modélise une
mesure suivie d'une seconde mesure conditionnée par le premier résultat
(règle de Lüders). Son dual (A*†B)_{ik} = Σ_j √A_{ij} B_{jk} √A_{ij} agit
comme un produit séquentiel dans l'autre sens.

Les racines sont calculées pour toute la grille en un seul appel vectorisé,
et les sommes sont réduites par `numpy.einsum` dans un ordre fixe.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import (
    DimensionMismatchError,
    NumericFailureError,
    OutcomeProbabilityZeroError,
    PovmInputError,
)
from .linalg import DEFAULT_TOL, HermitianMatrix, hermitian, identity, sqrt_psd
from .povm import (
    SUM_TOL,
    BlockMatrix,
    DensityMatrix,
    Povm,
    validate_effect,
    validate_povm,
)

JOINT_NEGATIVITY_TOL = 1e-12
ZERO_PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class TwoStageResult:
    """Résultat de la simulation d'une mesure en deux étapes.

    Attributes:
        joint (np.ndarray): Matrice n×n des probabilités prob(j, i) : premier
            résultat j puis second résultat i.
        effective (Povm): La POVM effective Q = S*P.
        marginal_second (np.ndarray): prob(i) = Σ_j prob(j, i).
    """

    joint: np.ndarray
    effective: Povm
    marginal_second: np.ndarray


def _check_grids(left: BlockMatrix, right: BlockMatrix) -> None:
    if left.cols != right.rows:
        raise DimensionMismatchError(
            f"Grilles incompatibles : {left.rows}×{left.cols} et "
            f"{right.rows}×{right.cols}."
        )
    if left.d != right.d:
        raise DimensionMismatchError(
            f"Blocs de tailles différentes : {left.d} et {right.d}."
        )


def seq_product(a: npt.ArrayLike, b: npt.ArrayLike) -> HermitianMatrix:
    """Produit séquentiel A∘B = √A B √A.

    Raises:
        NotPositiveSemidefiniteError: Si A n'est pas PSD.
        DimensionMismatchError: Si les dimensions diffèrent.
    """
    a_arr = hermitian(a)
    b_arr = hermitian(b)
    if a_arr.shape != b_arr.shape:
        raise DimensionMismatchError(
            f"Dimensions incompatibles : {a_arr.shape} et {b_arr.shape}."
        )
    root = sqrt_psd(a_arr)
    return hermitian(root @ b_arr @ root)


def blockwise_product(left: BlockMatrix, right: BlockMatrix) -> BlockMatrix:
    """Produit par blocs A*B.

    Args:
        left (BlockMatrix): A, grille n×n′.
        right (BlockMatrix): B, grille n′×n″ (une POVM est le cas n′×1).

    Returns:
        BlockMatrix: La grille n×n″ des blocs Σ_j √B_{jk} A_{ij} √B_{jk}.

    Raises:
        DimensionMismatchError: Si les grilles ne se composent pas.
        NotPositiveSemidefiniteError: Si un bloc de B n'est pas PSD.
    """
    _check_grids(left, right)
    roots = sqrt_psd(right.blocks)
    out = np.einsum("jkab,ijbc,jkcd->ikad", roots, left.blocks, roots)
    return BlockMatrix(hermitian(out))


def dual_blockwise_product(left: BlockMatrix, right: BlockMatrix) -> BlockMatrix:
    """Produit dual A*†B = (B† * A†)†, soit Σ_j √A_{ij} B_{jk} √A_{ij}."""
    _check_grids(left, right)
    roots = sqrt_psd(left.blocks)
    out = np.einsum("ijab,jkbc,ijcd->ikad", roots, right.blocks, roots)
    return BlockMatrix(hermitian(out))


def apply(matrix: BlockMatrix, povm: Povm, dual: bool = False) -> Povm:
    """Applique une matrice par blocs à une POVM et retourne la colonne produite.

    Le résultat n'est pas validé : hors du cas stochastique (ou pour le
    produit dual) il peut ne pas sommer à l'identité.
    """
    product = dual_blockwise_product if dual else blockwise_product
    return product(matrix, povm.as_block()).column(0)


def evolve(matrix: BlockMatrix, povm: Povm, tol: float = SUM_TOL) -> Povm:
    """Calcule Q = S*P et le valide comme POVM.

    Raises:
        PovmValidationError: Si S n'est pas stochastique et que Q ne somme pas
            à l'identité.
    """
    return validate_povm(list(apply(matrix, povm).effects), tol)


def two_outcome_bistochastic(effect: npt.ArrayLike) -> BlockMatrix:
    """Matrice bistochastique ((B, 1−B), (1−B, B)) d'un effet B."""
    b = validate_effect(effect)
    rest = identity(b.shape[0]) - b
    return BlockMatrix(np.array([[b, rest], [rest, b]]))


def xi_combination(b: npt.ArrayLike, p: npt.ArrayLike) -> HermitianMatrix:
    """Combinaison Ξ(B, P) = √B P √B + √(1−B)(1−P)√(1−B).

    C'est le premier effet de ((B,1−B),(1−B,B)) *† (P, 1−P).

    Raises:
        EffectRangeError: Si B ou P sort de [0, 1].
        DimensionMismatchError: Si les dimensions diffèrent.
    """
    b_eff = validate_effect(b)
    p_eff = validate_effect(p)
    if b_eff.shape != p_eff.shape:
        raise DimensionMismatchError("B et P doivent avoir la même dimension.")
    one = identity(b_eff.shape[0])
    return hermitian(seq_product(b_eff, p_eff) + seq_product(one - b_eff, one - p_eff))


def star_first_effect(b: npt.ArrayLike, p: npt.ArrayLike) -> HermitianMatrix:
    """Premier effet de ((B,1−B),(1−B,B)) * (P, 1−P), soit Ξ(P, B)."""
    return xi_combination(p, b)


def circulant_from_povm(povm: Povm) -> BlockMatrix:
    """Matrice bistochastique circulante B_{ij} = P_{(i+j) mod n}.

    Sa première colonne reproduit P : B * V_0 = P.
    """
    n = povm.n
    index = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return BlockMatrix(povm.effects[index])


def mixture(
    first: BlockMatrix, second: BlockMatrix, weight: float
) -> BlockMatrix:
    """Mélange convexe λ·S₁ + (1−λ)·S₂ de deux matrices par blocs.

    Comme le produit est linéaire à gauche, (λS₁ + (1−λ)S₂)*P est le même
    mélange de S₁*P et S₂*P : la région accessible depuis P est convexe.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"Le poids doit être dans [0, 1], reçu {weight}.")
    return weight * first + (1.0 - weight) * second


def luders_post_state(
    rho: DensityMatrix, effect: npt.ArrayLike, tol: float = ZERO_PROBABILITY_TOL
) -> tuple[DensityMatrix, float]:
    """État après l'issue associée à `effect` selon la règle de Lüders.

    Returns:
        tuple[DensityMatrix, float]: (√P ρ √P / tr(Pρ), tr(Pρ)).

    Raises:
        OutcomeProbabilityZeroError: Si tr(Pρ) ≤ tol.
    """
    p = hermitian(effect)
    if p.shape != rho.matrix.shape:
        raise DimensionMismatchError("L'effet et l'état n'ont pas la même dimension.")
    probability = rho.expectation(p)
    if probability <= tol:
        raise OutcomeProbabilityZeroError(
            f"Probabilité d'issue {probability:.3e} : état conditionnel indéfini.",
            probability,
        )
    root = sqrt_psd(p)
    return DensityMatrix(hermitian(root @ rho.matrix @ root) / probability), probability


def two_stage_run(
    rho: DensityMatrix, povm: Povm, matrix: BlockMatrix, tol: float = SUM_TOL
) -> TwoStageResult:
    """Simule une mesure P suivie de la mesure conditionnelle S.

    joint[j][i] = tr(√S_{ij} √P_j ρ √P_j √S_{ij}) = tr(S_{ij} √P_j ρ √P_j).

    Args:
        rho (DensityMatrix): L'état initial.
        povm (Povm): La première mesure.
        matrix (BlockMatrix): La matrice stochastique des mesures
            conditionnelles (colonne j = mesure après le résultat j).
        tol (float): Tolérance de stochasticité de `matrix`.

    Returns:
        TwoStageResult: Probabilités jointes, POVM effective et marginale.

    Raises:
        DimensionMismatchError: Si les formes ne concordent pas ou si S n'est
            pas stochastique.
        NumericFailureError: Si une probabilité jointe est franchement
            négative.
    """
    if matrix.cols != povm.n or matrix.d != povm.d or rho.d != povm.d:
        raise DimensionMismatchError(
            f"Formes incompatibles : S {matrix.rows}×{matrix.cols} (d={matrix.d}), "
            f"P n={povm.n} (d={povm.d}), ρ d={rho.d}."
        )
    if not matrix.is_stochastic(tol):
        raise PovmInputError("La matrice S doit être stochastique par colonnes.")
    roots = sqrt_psd(povm.effects)
    post = roots @ rho.matrix @ roots
    joint = np.real(np.einsum("ijab,jba->ji", matrix.blocks, post))
    if np.any(joint < -JOINT_NEGATIVITY_TOL):
        raise NumericFailureError(
            f"Probabilité jointe négative ({joint.min():.3e}) : entrées invalides."
        )
    joint = np.where(joint < 0.0, 0.0, joint)
    effective = Povm(apply(matrix, povm).effects)
    return TwoStageResult(
        joint=joint, effective=effective, marginal_second=joint.sum(axis=0)
    )


def is_fixed_point(
    effect_b: npt.ArrayLike, effect_p: npt.ArrayLike, dual: bool, tol: float = DEFAULT_TOL
) -> bool:
    """Teste si (P, 1−P) est invariant sous ((B,1−B),(1−B,B)) pour le produit choisi."""
    step = xi_combination if dual else star_first_effect
    p = hermitian(effect_p)
    return bool(np.max(np.abs(step(effect_b, p) - p)) <= tol)
