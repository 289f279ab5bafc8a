"""
Module de compatibilité (mesurabilité conjointe) des POVMs.

Deux POVMs P et Q sont compatibles s'il existe une mesure mère M ≥ 0 dont
elles sont les deux marginales, ce qui équivaut à l'existence d'une matrice
stochastique par blocs S telle que Q = S*P. Ce module construit l'une à
partir de l'autre et décide la compatibilité par projections alternées
entre le cône PSD (bloc par bloc) et le sous-espace affine des marginales.
Le schéma `dykstra` sert aussi, avec correction, à la complétion des
matrices bistochastiques tirées au hasard.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatchError, MarginalMismatchError
from .linalg import (
    DEFAULT_TOL,
    commutator,
    dagger,
    hermitian,
    hs_norm,
    identity,
    is_projector,
    pinv_sqrt_support,
    sqrt_psd,
)
from .povm import BlockMatrix, Povm

COMPAT_BUDGET = 5000
MARGINAL_TOL = 1e-8
COMPAT_TOL = MARGINAL_TOL
RESIDUAL_CHECK_EVERY = 10

Projection = Callable[[np.ndarray], np.ndarray]


class CompatStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MotherMeasurement:
    """Mesure mère M_ij.

    Attributes:
        blocks (np.ndarray): Grille `(rows, cols, d, d)`; la ligne i indexe
            les issues de Q et la colonne j celles de P, de sorte que
            Σ_i M_ij = P_j et Σ_j M_ij = Q_i.
    """

    blocks: np.ndarray

    @property
    def rows(self) -> int:
        return self.blocks.shape[0]

    @property
    def cols(self) -> int:
        return self.blocks.shape[1]

    @property
    def d(self) -> int:
        return self.blocks.shape[-1]

    def p_marginal(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def q_marginal(self) -> np.ndarray:
        return self.blocks.sum(axis=1)

    def residuals(self, p: Povm, q: Povm) -> tuple[float, float]:
        """Écarts maximaux (par entrée) aux marginales P et Q."""
        return (
            float(np.max(np.abs(self.p_marginal() - p.effects))),
            float(np.max(np.abs(self.q_marginal() - q.effects))),
        )

    def certifies(self, p: Povm, q: Povm, tol: float = MARGINAL_TOL) -> bool:
        """Vrai si M est PSD bloc par bloc et a pour marginales P et Q à `tol` près."""
        if self.blocks.shape != (q.n, p.n, p.d, p.d):
            return False
        lowest = np.linalg.eigvalsh(hermitian(self.blocks))[..., 0]
        return bool(np.all(lowest >= -tol)) and max(self.residuals(p, q)) <= tol


@dataclass(frozen=True)
class IncompatibilityCertificate:
    """Paire d'effets projectifs qui ne commutent pas : ‖[P_j, Q_i]‖₂ > tol."""

    p_index: int
    q_index: int
    commutator_norm: float

    def describe(self) -> str:
        return (
            f"POVMs projectives avec [P_{self.p_index}, Q_{self.q_index}] ≠ 0 "
            f"(‖·‖₂ = {self.commutator_norm:.3e})"
        )


@dataclass(frozen=True)
class CompatVerdict:
    """Verdict de compatibilité.

    `witness` est renseigné pour FEASIBLE, `certificate` pour INFEASIBLE;
    `iterations` et `residual` décrivent la dernière itération des projections
    alternées (négativité PSD et écart aux marginales).
    """

    status: CompatStatus
    witness: Optional[MotherMeasurement] = None
    certificate: Optional[IncompatibilityCertificate] = None
    iterations: int = 0
    residual: float = 0.0


@dataclass(frozen=True)
class DykstraResult:
    point: np.ndarray
    iterations: int
    residual: float
    converged: bool


# --- Projections ---


def project_psd_blocks(blocks: np.ndarray) -> np.ndarray:
    """Projection (Frobenius) de chaque bloc sur le cône PSD."""
    values, vectors = np.linalg.eigh(hermitian(blocks))
    clipped = np.clip(values, 0.0, None)
    return hermitian((vectors * clipped[..., None, :]) @ dagger(vectors))


def project_marginals(
    blocks: np.ndarray, row_targets: np.ndarray, col_targets: np.ndarray
) -> np.ndarray:
    """Projection orthogonale sur {X : Σ_j X_ij = R_i, Σ_i X_ij = C_j}.

    Formule à double correction de moyenne :
    X' = X − (ΔR_i)/c − (ΔC_j)/r + Δ/(r·c), où Δ est l'écart de la somme
    totale. Les cibles doivent avoir la même somme totale.
    """
    rows, cols = blocks.shape[:2]
    row_gap = blocks.sum(axis=1) - row_targets
    col_gap = blocks.sum(axis=0) - col_targets
    total_gap = blocks.sum(axis=(0, 1)) - row_targets.sum(axis=0)
    return (
        blocks
        - row_gap[:, None] / cols
        - col_gap[None, :] / rows
        + total_gap[None, None] / (rows * cols)
    )


def pinned_marginal_projection(
    row_targets: np.ndarray,
    col_targets: np.ndarray,
    index: tuple[int, int],
    block: np.ndarray,
) -> Projection:
    """Projection sur {X : X[index] = block, Σ_j X_ij = R_i, Σ_i X_ij = C_j}.

    Le bloc épinglé est imposé, puis la correction de norme minimale est
    répartie sur les autres cellules : X' = X − Aᵀ (A Aᵀ)⁺ (A X − t), où A
    somme les cellules libres par ligne et par colonne. Le système est
    compatible dès que Σ R_i = Σ C_j et que la grille libre reste connexe
    (rows, cols ≥ 2).

    Args:
        row_targets (np.ndarray): Cibles R_i, forme `(rows, d, d)`.
        col_targets (np.ndarray): Cibles C_j, forme `(cols, d, d)`.
        index (tuple[int, int]): Cellule épinglée.
        block (np.ndarray): Valeur imposée à cette cellule.

    Returns:
        Projection: La projection, avec A et (A Aᵀ)⁺ précalculés.
    """
    rows, cols = row_targets.shape[0], col_targets.shape[0]
    free = np.ones((rows, cols))
    free[index] = 0.0
    constraints = np.zeros((rows + cols, rows, cols))
    constraints[np.arange(rows), np.arange(rows), :] = free
    constraints[rows + np.arange(cols), :, np.arange(cols)] = free.T
    weights = np.linalg.pinv(np.einsum("kij,lij->kl", constraints, constraints))

    def project(blocks: np.ndarray) -> np.ndarray:
        pinned = np.array(blocks, dtype=np.complex128)
        pinned[index] = block
        gap = np.concatenate(
            [pinned.sum(axis=1) - row_targets, pinned.sum(axis=0) - col_targets]
        )
        multipliers = np.einsum("kl,lab->kab", weights, gap)
        return pinned - np.einsum("kij,kab->ijab", constraints, multipliers)

    return project


def psd_negativity(blocks: np.ndarray) -> float:
    """max(0, −λ_min) sur l'ensemble des blocs."""
    lowest = np.linalg.eigvalsh(hermitian(blocks))[..., 0]
    return float(max(0.0, -np.min(lowest)))


def marginal_residual(
    blocks: np.ndarray, row_targets: np.ndarray, col_targets: np.ndarray
) -> float:
    """Écart maximal (par entrée) des sommes de lignes et colonnes aux cibles."""
    return float(
        max(
            np.max(np.abs(blocks.sum(axis=1) - row_targets)),
            np.max(np.abs(blocks.sum(axis=0) - col_targets)),
        )
    )


def dykstra(
    start: np.ndarray,
    projections: Sequence[Projection],
    residual: Callable[[np.ndarray], float],
    budget: int,
    tol: float,
    corrected: bool = True,
) -> DykstraResult:
    """Projections alternées de Dykstra sur l'intersection d'ensembles convexes.

    Le point retourné appartient exactement au dernier ensemble de
    `projections`; `residual` mesure l'écart aux autres.

    Args:
        start (np.ndarray): Point initial.
        projections (Sequence[Projection]): Projections sur chaque ensemble.
        residual (Callable): Mesure de non-faisabilité du point courant.
        budget (int): Nombre maximal de balayages.
        tol (float): Seuil de convergence sur `residual`.
        corrected (bool): Sans correction, le schéma se réduit aux
            projections alternées simples, qui cherchent un point de
            l'intersection et non le plus proche de `start`.

    Returns:
        DykstraResult: Le dernier point et l'état de convergence.
    """
    point = np.array(start, dtype=np.complex128)
    increments = [np.zeros_like(point) for _ in projections]
    current = residual(point)
    for iteration in range(1, budget + 1):
        for k, project in enumerate(projections):
            shifted = point + increments[k] if corrected else point
            point = project(shifted)
            if corrected:
                increments[k] = shifted - point
        if iteration % RESIDUAL_CHECK_EVERY == 0 or iteration == budget:
            current = residual(point)
            if current <= tol:
                return DykstraResult(point, iteration, current, True)
    return DykstraResult(point, budget, current, False)


# --- Mesures mères ---


def _check_pair(p: Povm, matrix: BlockMatrix) -> None:
    if matrix.cols != p.n or matrix.d != p.d:
        raise DimensionMismatchError(
            f"S {matrix.rows}×{matrix.cols} (d={matrix.d}) incompatible avec "
            f"P (n={p.n}, d={p.d})."
        )


def mother_from_stochastic(p: Povm, matrix: BlockMatrix) -> MotherMeasurement:
    """Mesure mère M_ij = √P_j S_ij √P_j de P et de S*P."""
    _check_pair(p, matrix)
    roots = sqrt_psd(p.effects)
    blocks = roots[None, :] @ matrix.blocks @ roots[None, :]
    return MotherMeasurement(hermitian(blocks))


def stochastic_from_mother(
    p: Povm,
    mother: MotherMeasurement,
    p_dist: npt.ArrayLike,
    tol: float = MARGINAL_TOL,
) -> BlockMatrix:
    """Matrice stochastique S_ij = √P_j⁺ M_ij √P_j⁺ + p_i R_j.

    √P_j⁺ est la pseudo-inverse de √P_j sur son support et R_j le projecteur
    sur le noyau de P_j; le terme p_i R_j complète les colonnes à l'identité.

    Args:
        p (Povm): La POVM dont M est une extension.
        mother (MotherMeasurement): Une mesure mère de marginale P.
        p_dist (ArrayLike): Distribution de longueur `mother.rows`.
        tol (float): Tolérance sur la marginale P.

    Returns:
        BlockMatrix: Une matrice stochastique avec S*P = marginale Q de M.

    Raises:
        MarginalMismatchError: Si la marginale de M s'écarte de P.
    """
    if mother.cols != p.n or mother.d != p.d:
        raise DimensionMismatchError("Mesure mère incompatible avec P.")
    weights = np.asarray(p_dist, dtype=np.float64).reshape(-1)
    if weights.size != mother.rows:
        raise DimensionMismatchError(
            f"Distribution de longueur {weights.size}, {mother.rows} attendue."
        )
    residual = float(np.max(np.abs(mother.p_marginal() - p.effects)))
    if residual > tol:
        raise MarginalMismatchError(
            f"Marginale de M éloignée de P ({residual:.3e} > {tol:.1e}).", residual
        )
    inverse_roots, supports = pinv_sqrt_support(p.effects)
    kernels = identity(p.d) - supports
    blocks = (
        inverse_roots[None, :] @ mother.blocks @ inverse_roots[None, :]
        + weights[:, None, None, None] * kernels[None, :]
    )
    return BlockMatrix(hermitian(blocks))


def projective_incompatibility_test(
    p: Povm, q: Povm, tol: float = DEFAULT_TOL
) -> Optional[IncompatibilityCertificate]:
    """Certificat exact d'incompatibilité pour deux POVMs projectives.

    Deux mesures projectives sont compatibles si et seulement si leurs
    effets commutent. Le test est inapplicable (retourne `None`) dès qu'un
    effet n'est pas un projecteur.
    """
    if p.d != q.d:
        raise DimensionMismatchError("Les POVMs doivent avoir la même dimension.")
    if not all(is_projector(e, tol) for e in (*p.effects, *q.effects)):
        return None
    for j, effect_p in enumerate(p.effects):
        for i, effect_q in enumerate(q.effects):
            norm = hs_norm(commutator(effect_p, effect_q))
            if norm > tol:
                return IncompatibilityCertificate(j, i, norm)
    return None


def decide_compatibility(
    p: Povm, q: Povm, budget: int = COMPAT_BUDGET, tol: float = COMPAT_TOL
) -> CompatVerdict:
    """Décide si P et Q admettent une mesure mère commune.

    Args:
        p (Povm): Première POVM.
        q (Povm): Seconde POVM, de même dimension.
        budget (int): Nombre maximal de balayages.
        tol (float): Tolérance du témoin, la même que celle de
            `MotherMeasurement.certifies`.

    Returns:
        CompatVerdict: FEASIBLE avec un témoin certifié à `tol`, INFEASIBLE
        uniquement via le certificat projectif, UNKNOWN sinon.
    """
    certificate = projective_incompatibility_test(p, q)
    if certificate is not None:
        return CompatVerdict(CompatStatus.INFEASIBLE, certificate=certificate)
    roots = sqrt_psd(p.effects)
    start = roots[None, :] @ q.effects[:, None] @ roots[None, :]
    # La projection affine vient en dernier : les marginales du point
    # retourné sont exactes et seule la négativité reste à contrôler.
    result = dykstra(
        start,
        [project_psd_blocks, lambda x: project_marginals(x, q.effects, p.effects)],
        psd_negativity,
        budget,
        tol,
        corrected=False,
    )
    witness = MotherMeasurement(hermitian(result.point))
    gap = marginal_residual(result.point, q.effects, p.effects)
    residual = max(result.residual, gap)
    if result.converged and witness.certifies(p, q, tol):
        return CompatVerdict(
            CompatStatus.FEASIBLE,
            witness=witness,
            iterations=result.iterations,
            residual=residual,
        )
    return CompatVerdict(CompatStatus.UNKNOWN, iterations=result.iterations, residual=residual)
