"""
Module d'échantillonnage aléatoire reproductible.

Les tirages passent tous par `SeededRng`, qui enveloppe un générateur
`numpy.random.Generator(PCG64)`. Les gaussiennes sont obtenues par la
transformation de Box–Muller appliquée aux uniformes du générateur, de
sorte que les fixtures ne dépendent que du flux PCG64.

La complétion SDP du tirage de POVM de Ginibre est remplacée par la
renormalisation exacte P_j = T^{-1/2} G_j T^{-1/2} avec T = Σ G_j.
"""

import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .compatibility import (
    COMPAT_BUDGET,
    dykstra,
    pinned_marginal_projection,
    project_psd_blocks,
    psd_negativity,
)
from .dynamics import circulant_from_povm
from .errors import CompletionBudgetError, NumericFailureError
from .linalg import dagger, eigvals_h, hermitian, identity
from .povm import (
    SUM_TOL,
    BlockMatrix,
    DensityMatrix,
    Povm,
    fuzzy_povm,
    uniform_povm,
    validate_block,
    validate_povm,
)

MAX_RENORMALIZATION_RETRIES = 10
SINGULAR_TOL = 1e-12
BISTOCHASTIC_TOL = 1e-8
COMPLETION_TOL = 1e-8


class PovmMethod(str, Enum):
    GINIBRE_RENORMALIZED = "ginibre_renormalized"
    NEAR_EXTREMAL = "near_extremal"
    NEAR_UNIFORM = "near_uniform"


class BistochasticMethod(str, Enum):
    FEASIBILITY_COMPLETED = "feasibility_completed"
    NEAR_IDENTITY = "near_identity"
    NEAR_FLAT = "near_flat"
    CIRCULANT = "circulant"


def derive_seed(master: int, index: int) -> int:
    """Graine fille de `master` pour le travailleur (ou l'échantillon) `index`."""
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


class SeededRng:
    """Générateur reproductible à partir d'une graine 64 bits.

    Attributes:
        seed (int): La graine d'origine.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniformes sur [low, high)."""
        return low + (high - low) * self._generator.random(size)

    def normal(self, size) -> np.ndarray:
        """Gaussiennes centrées réduites par Box–Muller."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u1 = 1.0 - self._generator.random(pairs)
        u2 = self._generator.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        values = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return values[:count].reshape(shape)

    def complex_normal(self, size) -> np.ndarray:
        """Entrées a + ib avec a, b ~ N(0, 1)."""
        return self.normal(size) + 1j * self.normal(size)

    def child(self, index: int) -> "SeededRng":
        """Générateur indépendant dérivé par `derive_seed`."""
        return SeededRng(derive_seed(self.seed, index))


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"ε doit être dans [0, 1], reçu {epsilon}.")


def ginibre_matrix(d: int, rng: SeededRng, count: Optional[int] = None) -> np.ndarray:
    """Matrice (ou pile de `count` matrices) de Ginibre d×d."""
    shape = (d, d) if count is None else (count, d, d)
    return rng.complex_normal(shape)


def ginibre_effect(d: int, rng: SeededRng, trace: Optional[float] = None) -> np.ndarray:
    """Effet aléatoire t·X†X / tr(X†X), avec t uniforme sur [0, 1] par défaut.

    Args:
        d (int): Dimension.
        rng (SeededRng): Générateur.
        trace (Optional[float]): Trace imposée t ∈ [0, 1].

    Returns:
        np.ndarray: Un effet PSD de trace t, donc λ_max ≤ t ≤ 1.
    """
    if d < 1:
        raise ValueError(f"La dimension doit être ≥ 1, reçu {d}.")
    x = ginibre_matrix(d, rng)
    t = float(rng.uniform()) if trace is None else float(trace)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"La trace doit être dans [0, 1], reçu {t}.")
    gram = dagger(x) @ x
    return hermitian(t * gram / np.real(np.trace(gram)))


def random_density(d: int, rng: SeededRng) -> DensityMatrix:
    """État de Ginibre X†X / tr(X†X) (mesure de Hilbert–Schmidt)."""
    x = ginibre_matrix(d, rng)
    gram = dagger(x) @ x
    return DensityMatrix(hermitian(gram / np.real(np.trace(gram))))


def random_pure(d: int, rng: SeededRng) -> DensityMatrix:
    """État pur |ψ⟩⟨ψ| d'un vecteur gaussien complexe normalisé."""
    vector = rng.complex_normal(d)
    vector /= np.linalg.norm(vector)
    return DensityMatrix(np.outer(vector, vector.conj()))


def random_unitary(d: int, rng: SeededRng) -> np.ndarray:
    """Unitaire aléatoire (QR d'une matrice de Ginibre, phases corrigées)."""
    q, r = np.linalg.qr(ginibre_matrix(d, rng))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


def _ginibre_renormalized(n: int, d: int, rng: SeededRng) -> Povm:
    for _ in range(MAX_RENORMALIZATION_RETRIES):
        x = ginibre_matrix(d, rng, count=n)
        grams = dagger(x) @ x
        total = hermitian(grams.sum(axis=0))
        values, vectors = np.linalg.eigh(total)
        if values[0] <= SINGULAR_TOL * values[-1]:
            continue
        inverse_root = (vectors / np.sqrt(values)[None, :]) @ dagger(vectors)
        return validate_povm(list(inverse_root @ grams @ inverse_root), SUM_TOL)
    raise NumericFailureError(
        f"Somme T singulière après {MAX_RENORMALIZATION_RETRIES} tirages."
    )


def random_povm(
    n: int,
    d: int,
    method: PovmMethod | str,
    rng: SeededRng,
    epsilon: float = 0.01,
) -> Povm:
    """Tire une POVM aléatoire.

    Args:
        n (int): Nombre d'issues.
        d (int): Dimension.
        method (PovmMethod | str): `ginibre_renormalized`, `near_extremal`
            (ε·P + (1−ε)·V_0) ou `near_uniform` (ε·P + (1−ε)·P_u).
        rng (SeededRng): Générateur.
        epsilon (float): Poids ε de la perturbation.

    Returns:
        Povm: Une POVM validée.
    """
    if n < 1 or d < 1:
        raise ValueError(f"n et d doivent être ≥ 1, reçu n={n}, d={d}.")
    method = PovmMethod(method)
    base = _ginibre_renormalized(n, d, rng)
    if method is PovmMethod.GINIBRE_RENORMALIZED:
        return base
    _check_epsilon(epsilon)
    anchor = fuzzy_povm(0, n, d) if method is PovmMethod.NEAR_EXTREMAL else uniform_povm(n, d)
    return validate_povm(list(epsilon * base.effects + (1 - epsilon) * anchor.effects), SUM_TOL)


def random_stochastic(
    n: int, d: int, rng: SeededRng, rows: Optional[int] = None
) -> BlockMatrix:
    """Matrice stochastique dont les n colonnes sont des POVMs de Ginibre."""
    rows = n if rows is None else rows
    columns = [random_povm(rows, d, PovmMethod.GINIBRE_RENORMALIZED, rng) for _ in range(n)]
    return BlockMatrix.from_columns(columns)


def _interior_completion(seed_block: np.ndarray, n: int) -> np.ndarray:
    """Complétion bistochastique explicite de B₀₀ = seed_block (n ≥ 2).

    B₀ⱼ = Bᵢ₀ = (1 − S)/(n−1) et Bᵢⱼ = (1 − (1 − S)/(n−1))/(n−1) pour i, j ≥ 1.
    """
    d = seed_block.shape[-1]
    edge = (identity(d) - seed_block) / (n - 1)
    blocks = np.broadcast_to((identity(d) - edge) / (n - 1), (n, n, d, d)).copy()
    blocks[0, 1:] = edge
    blocks[1:, 0] = edge
    blocks[0, 0] = seed_block
    return blocks


def _feasibility_completed(n: int, d: int, rng: SeededRng, budget: int) -> BlockMatrix:
    if n == 1:
        return BlockMatrix.identity(1, d)
    seed_block = ginibre_effect(d, rng)
    start = np.stack([ginibre_effect(d, rng) for _ in range(n * n)]).reshape(n, n, d, d)
    start[0, 0] = seed_block
    targets = np.broadcast_to(identity(d), (n, d, d))
    affine = pinned_marginal_projection(targets, targets, (0, 0), seed_block)
    result = dykstra(
        start,
        [project_psd_blocks, affine],
        psd_negativity,
        budget,
        COMPLETION_TOL,
    )
    if not result.converged:
        raise CompletionBudgetError(
            f"Complétion bistochastique non convergée en {budget} itérations.",
            result.iterations,
            result.residual,
        )
    # Le dernier point a ses marginales et B₀₀ exacts; un mélange convexe
    # avec la complétion explicite absorbe la négativité restante η.
    interior = _interior_completion(seed_block, n)
    lowest = lowest_eigenvalues(interior)
    lowest[0, 0] = np.inf
    margin = float(lowest.min())
    blocks = result.point
    if result.residual > 0.0 and margin > 0.0:
        theta = result.residual / (result.residual + margin)
        blocks = (1.0 - theta) * blocks + theta * interior
    blocks[0, 0] = seed_block
    return BlockMatrix(hermitian(blocks))


def random_bistochastic(
    n: int,
    d: int,
    method: BistochasticMethod | str,
    rng: SeededRng,
    epsilon: float = 0.01,
    budget: int = COMPAT_BUDGET,
) -> BlockMatrix:
    """Tire une matrice bistochastique par blocs.

    Args:
        n (int): Taille de la grille.
        d (int): Taille des blocs.
        method (BistochasticMethod | str): `feasibility_completed` (B₀₀ de
            Ginibre complété par Dykstra), `near_identity`, `near_flat` ou
            `circulant`.
        rng (SeededRng): Générateur.
        epsilon (float): Poids ε des méthodes perturbatives.
        budget (int): Budget d'itérations de la complétion.

    Returns:
        BlockMatrix: Une matrice bistochastique à 1e-8 près.

    Raises:
        CompletionBudgetError: Si la complétion ne converge pas.
    """
    if n < 1 or d < 1:
        raise ValueError(f"n et d doivent être ≥ 1, reçu n={n}, d={d}.")
    method = BistochasticMethod(method)
    if method is BistochasticMethod.CIRCULANT:
        result = circulant_from_povm(random_povm(n, d, PovmMethod.GINIBRE_RENORMALIZED, rng))
    else:
        result = _feasibility_completed(n, d, rng, budget)
        if method is not BistochasticMethod.FEASIBILITY_COMPLETED:
            _check_epsilon(epsilon)
            if method is BistochasticMethod.NEAR_IDENTITY:
                anchor = BlockMatrix.identity(n, d)
            else:
                anchor = BlockMatrix(np.broadcast_to(identity(d) / n, (n, n, d, d)))
            result = epsilon * result + (1 - epsilon) * anchor
    block = validate_block(result.blocks)
    if not block.is_bistochastic(BISTOCHASTIC_TOL):
        raise CompletionBudgetError(
            "Le tirage n'est pas bistochastique à 1e-8 près.",
            budget,
            max(block.row_deviation(), block.column_deviation()),
        )
    return block


def random_sortable_povm(
    n: int, d: int, rng: SeededRng, spread: float = 1e-6
) -> Tuple[Povm, Tuple[int, ...]]:
    """POVM triable : mélanges scalaires ordonnés plus perturbations commutantes.

    P_j = c_j·1 + δ·U diag(D_j) U†, avec c_0 > ... > c_{n−1} > 0 tirés selon
    Dirichlet(1), Σ_j D_j = 0 et δ = spread · min(écart, c_min) / 4, ce qui
    garde la chaîne de Löwner dans l'ordre naturel.

    Returns:
        Tuple[Povm, Tuple[int, ...]]: La POVM et son ordre (0, 1, ..., n−1).
    """
    weights = -np.log(1.0 - rng.uniform(size=n))
    weights = np.sort(weights / weights.sum())[::-1]
    gaps = -np.diff(weights)
    scale = min(gaps.min() if gaps.size else 1.0, weights[-1])
    delta = spread * scale / 4.0
    diagonals = rng.uniform(size=(n, d), low=-1.0, high=1.0)
    diagonals -= diagonals.mean(axis=0, keepdims=True)
    unitary = random_unitary(d, rng)
    perturbations = (unitary[None, :] * diagonals[:, None, :]) @ dagger(unitary)[None, :]
    effects = weights[:, None, None] * identity(d)[None, :] + delta * perturbations
    effects -= (effects.sum(axis=0) - identity(d))[None, :] / n
    return validate_povm(list(effects), SUM_TOL), tuple(range(n))


def lowest_eigenvalues(blocks: np.ndarray) -> np.ndarray:
    """λ_min de chaque matrice d'une pile (effets ou grille de blocs)."""
    return eigvals_h(blocks)[..., 0]
