"""
Module de majorisation d'opérateurs et des monotones associés.

Contient la recherche d'ordre de Löwner (POVMs triables), la majorisation
d'opérateurs et son test réciproque par familles test, la majorisation classique
et sa réalisation par T-transformations, la majorisation dépendant de
l'état, les monotones entropiques et le profil de normes cumulées.
"""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.optimize

from .dynamics import xi_combination
from .errors import (
    CombinatorialLimitError,
    DimensionMismatchError,
    MajorizationError,
    NumericFailureError,
    ProbabilityVectorError,
)
from .linalg import (
    DEFAULT_TOL,
    eigvals_h,
    hermitian,
    hs_norm,
    identity,
    loewner_leq,
    sqrt_psd,
)
from .povm import BlockMatrix, DensityMatrix, Povm, check_permutation, pauli_matrices
from .sampling import SeededRng

Permutation = Tuple[int, ...]

CONJECTURE_MAX_N = 6
ENTROPY_ZERO_TOL = 1e-14
READINGS = ("joint", "per_k")


@dataclass(frozen=True)
class MajorizationReport:
    """Résultat d'un test de majorisation d'opérateurs P ≻ Q.

    Attributes:
        holds (bool): Vrai si toutes les sommes cumulées k < n dominent et
            si les sommes totales coïncident.
        k_values (Tuple[float, ...]): λ_min(Σ_{j≤k}(P_j − Q_j)) pour
            k = 1..n.
        equality_residual (float): ‖Σ_j P_j − Σ_j Q_j‖₂.
    """

    holds: bool
    k_values: Tuple[float, ...]
    equality_residual: float


@dataclass(frozen=True)
class NecessityVerdict:
    """Verdict du test par les familles V_j et P_u d'une matrice stochastique.

    Attributes:
        bistochastic (bool): Vrai si aucune famille n'est violée.
        family (Optional[str]): Famille violée (`"fuzzy"` ou `"uniform"`).
        row (Optional[int]): Ligne de blocs (ou colonne pour `"fuzzy"`) fautive.
        deficit (float): Valeur propre la plus négative de l'opérateur cumulé
            fautif, ou résidu d'égalité.
        row_residual (float): Écart maximal des sommes de lignes à l'identité.
    """

    bistochastic: bool
    family: Optional[str] = None
    row: Optional[int] = None
    deficit: float = 0.0
    row_residual: float = 0.0


@dataclass(frozen=True)
class NormProfile:
    """Profil ‖Σ_{i≤k}(P_{π(i)} − 1/n)‖₂ pour k = 1..n."""

    values: Tuple[float, ...]


@dataclass(frozen=True)
class ConjectureViolation:
    ordering_q: Permutation
    margin: float


@dataclass(frozen=True)
class ConjectureVerdict:
    """Verdict de la conjecture sur les profils de normes cumulées.

    Attributes:
        holds (bool): Vrai si chaque ordre de Q est dominé par un ordre de P.
        reading (str): `"joint"` (un même π pour tout k) ou `"per_k"`.
        violations (Tuple[ConjectureViolation, ...]): Ordres σ de Q non
            dominés, avec la meilleure marge atteignable (négative).
        worst_margin (float): Plus petite des meilleures marges sur tous σ.
    """

    holds: bool
    reading: str
    violations: Tuple[ConjectureViolation, ...] = ()
    worst_margin: float = 0.0


@dataclass
class MinEntropyConfig:
    """Résolution de la recherche du minimum de E_ρ sur les états purs.

    Attributes:
        grid (int): Nombre de points de la grille de Fibonacci sur la sphère
            de Bloch (d = 2).
        iterations (int): Itérations maximales du raffinement local.
        samples (int): Nombre d'états purs aléatoires (d > 2).
        seed (int): Graine de la recherche aléatoire (d > 2).
    """

    grid: int = 2048
    iterations: int = 200
    samples: int = 512
    seed: int = 0


@dataclass(frozen=True)
class MinEntropyResult:
    """Valeur de min_ρ E_ρ(P), minimiseur, et caractère certifié de la recherche."""

    value: float
    state: Optional[DensityMatrix] = field(default=None, compare=False)
    certified: bool = True


# --- Ordres de Löwner ---


def _loewner_chain(stack: np.ndarray, tol: float) -> Optional[Permutation]:
    """Ordre total décroissant d'une pile de matrices, s'il existe.

    Graphe de comparabilité puis tri topologique (Kahn); les égalités sont
    départagées par l'indice d'origine.
    """
    n = len(stack)
    geq = [[a == b or loewner_leq(stack[b], stack[a], tol) for b in range(n)] for a in range(n)]
    successors: List[List[int]] = [[] for _ in range(n)]
    indegree = [0] * n
    for a, b in itertools.combinations(range(n), 2):
        if not (geq[a][b] or geq[b][a]):
            return None
        first, second = (a, b) if geq[a][b] else (b, a)
        successors[first].append(second)
        indegree[second] += 1
    ready = [k for k in range(n) if indegree[k] == 0]
    heapq.heapify(ready)
    order: List[int] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for nxt in successors[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    # Un cycle n'apparaît que si la tolérance rend la relation non transitive.
    return tuple(order) if len(order) == n else None


def sortable_order(povm: Povm, tol: float = DEFAULT_TOL) -> Optional[Permutation]:
    """Cherche π tel que 1 ≥ P_{π(0)} ≥ ... ≥ P_{π(n−1)} ≥ 0.

    Args:
        povm (Povm): La POVM à trier.
        tol (float): Tolérance des comparaisons de Löwner.

    Returns:
        Optional[Permutation]: L'ordre (indices à partir de 0), ou `None` si
        deux effets sont incomparables.
    """
    return _loewner_chain(povm.effects, tol)


def state_weighted_chain(
    povm: Povm, rho: DensityMatrix, tol: float = DEFAULT_TOL
) -> Optional[Permutation]:
    """Ordre de Löwner décroissant des opérateurs X_r = √P_r ρ √P_r.

    Lorsque cet ordre existe, la distribution p = (tr P_r ρ) majorise
    q = tr((B*P)_i ρ) pour toute matrice bistochastique B. Il implique
    l'ordre des λ_min retourné par `state_dep_precondition`.
    """
    roots = sqrt_psd(povm.effects)
    weighted = hermitian(roots @ rho.matrix @ roots)
    return _loewner_chain(weighted, tol)


def _check_same_shape(p: Povm, q: Povm) -> None:
    if p.effects.shape != q.effects.shape:
        raise DimensionMismatchError(
            f"POVMs de formes différentes : (n={p.n}, d={p.d}) et (n={q.n}, d={q.d})."
        )


def operator_majorizes(
    p_sorted: Povm, q: Povm, tol: float = DEFAULT_TOL
) -> MajorizationReport:
    """Teste P ≻ Q : Σ_{j≤k} P_j ≥ Σ_{j≤k} Q_j pour tout k, égalité à k = n.

    P doit déjà être rangée selon `sortable_order`; l'ordre de Q est pris
    tel quel.

    Args:
        p_sorted (Povm): La POVM majorante, triée.
        q (Povm): La POVM majorée.
        tol (float): Tolérance absolue sur les valeurs propres et le résidu.

    Returns:
        MajorizationReport: Le détail par k.
    """
    _check_same_shape(p_sorted, q)
    cumulative = np.cumsum(p_sorted.effects - q.effects, axis=0)
    k_values = tuple(float(v) for v in eigvals_h(cumulative)[:, 0])
    residual = hs_norm(cumulative[-1])
    leading = min(k_values[:-1], default=0.0)
    holds = leading >= -tol and residual <= tol
    return MajorizationReport(holds=holds, k_values=k_values, equality_residual=residual)


def bistochastic_necessity_check(
    matrix: BlockMatrix, tol: float = DEFAULT_TOL
) -> NecessityVerdict:
    """Réciproque par familles test : une matrice stochastique qui préserve la
    majorisation de V_j et de P_u est bistochastique.

    La famille V_j examine les sommes partielles de la colonne j. La famille P_u
    donne Q = S*P_u = (R_i/n) où R_i est la somme de la ligne i; chaque ligne
    est placée en tête d'un ordre de Q, ce qui exige R_i ≤ 1. Comme
    Σ_i R_i = n·1, l'ensemble de ces familles force R_i = 1.

    Args:
        matrix (BlockMatrix): Une matrice stochastique carrée.
        tol (float): Tolérance des tests de Löwner.

    Returns:
        NecessityVerdict: La première famille violée, le cas échéant.
    """
    if matrix.rows != matrix.cols:
        raise DimensionMismatchError("Les familles test requièrent une grille carrée.")
    n, d = matrix.rows, matrix.d
    one = identity(d)
    row_residual = matrix.row_deviation()
    for j in range(n):
        partial = one - np.cumsum(matrix.blocks[:, j], axis=0)
        lowest = eigvals_h(partial[:-1])[:, 0] if n > 1 else np.zeros(0)
        if lowest.size and lowest.min() < -tol:
            return NecessityVerdict(False, "fuzzy", j, float(lowest.min()), row_residual)
        equality = hs_norm(partial[-1])
        if equality > tol:
            return NecessityVerdict(False, "fuzzy", j, equality, row_residual)
    deficits = eigvals_h((one - matrix.row_sums()) / n)[:, 0]
    worst = int(np.argmin(deficits))
    if deficits[worst] < -tol:
        return NecessityVerdict(False, "uniform", worst, float(deficits[worst]), row_residual)
    return NecessityVerdict(True, row_residual=row_residual)


# --- Majorisation classique ---


def _probability_vector(p: npt.ArrayLike, tol: float) -> np.ndarray:
    vec = np.asarray(p, dtype=np.float64).reshape(-1)
    if vec.size == 0 or np.any(vec < -tol) or abs(vec.sum() - 1.0) > max(tol, 1e-12):
        raise ProbabilityVectorError(f"{vec.tolist()} n'est pas un vecteur de probabilité.")
    return vec


def classical_majorizes(p: npt.ArrayLike, q: npt.ArrayLike, tol: float = 1e-10) -> bool:
    """Teste p ≻ q pour deux vecteurs de probabilité.

    Raises:
        DimensionMismatchError: Si les longueurs diffèrent.
        ProbabilityVectorError: Si un argument n'est pas une distribution.
    """
    p_vec = _probability_vector(p, tol)
    q_vec = _probability_vector(q, tol)
    if p_vec.shape != q_vec.shape:
        raise DimensionMismatchError(
            f"Longueurs différentes : {p_vec.size} et {q_vec.size}."
        )
    p_cum = np.cumsum(np.sort(p_vec)[::-1])
    q_cum = np.cumsum(np.sort(q_vec)[::-1])
    return bool(np.all(p_cum >= q_cum - tol))


def bistochastic_from_majorization(p: npt.ArrayLike, q: npt.ArrayLike) -> np.ndarray:
    """Construit une matrice bistochastique B telle que Bp = q.

    B est une composition d'au plus n−1 T-transformations, chacune mélangeant
    deux coordonnées de p trié, conjuguée par les permutations de tri.

    Raises:
        MajorizationError: Si p ne majorise pas q.
        NumericFailureError: Si la reconstruction dépasse 1e-10.
    """
    p_vec = np.asarray(p, dtype=np.float64).reshape(-1)
    q_vec = np.asarray(q, dtype=np.float64).reshape(-1)
    if not classical_majorizes(p_vec, q_vec):
        raise MajorizationError(f"{p_vec.tolist()} ne majorise pas {q_vec.tolist()}.")
    n = p_vec.size
    order_p = np.argsort(-p_vec, kind="stable")
    order_q = np.argsort(-q_vec, kind="stable")
    x = p_vec[order_p].copy()
    target = q_vec[order_q]
    sorted_map = np.eye(n)
    for _ in range(n - 1):
        diff = x - target
        above = np.nonzero(diff > 1e-15)[0]
        if above.size == 0:
            break
        j = int(above[-1])
        below = np.nonzero(diff[j + 1:] < -1e-15)[0]
        if below.size == 0:
            break
        k = j + 1 + int(below[0])
        delta = min(x[j] - target[j], target[k] - x[k])
        weight = delta / (x[j] - x[k])
        transform = np.eye(n)
        transform[[j, k], [j, k]] = 1.0 - weight
        transform[j, k] = transform[k, j] = weight
        x = transform @ x
        sorted_map = transform @ sorted_map
    # B = Π_qᵀ · B↓ · Π_p, avec (Π_p p) = p trié.
    perm_p = np.eye(n)[order_p]
    perm_q = np.eye(n)[order_q]
    result = perm_q.T @ sorted_map @ perm_p
    if np.max(np.abs(result @ p_vec - q_vec)) > 1e-10:
        raise NumericFailureError("La reconstruction Bp = q dépasse 1e-10.")
    return result


# --- Majorisation dépendant de l'état ---


def state_dep_precondition(
    povm: Povm, rho: DensityMatrix, tol: float = DEFAULT_TOL
) -> Permutation:
    """Ordre π rendant λ_min(√P_{π(r)} ρ √P_{π(r)}) non croissant.

    Les valeurs à `tol` près sont considérées égales et départagées par
    l'indice. Seul, cet ordre ne garantit pas p ≻ q (voir
    `state_weighted_chain` pour la condition suffisante).
    """
    roots = sqrt_psd(povm.effects)
    scalars = eigvals_h(roots @ rho.matrix @ roots)[:, 0]

    def _compare(a: int, b: int) -> int:
        if abs(scalars[a] - scalars[b]) <= tol:
            return a - b
        return -1 if scalars[a] > scalars[b] else 1

    return tuple(sorted(range(povm.n), key=cmp_to_key(_compare)))


# --- Monotones ---


def entropy_monotone(
    povm: Povm, rho: DensityMatrix, tol: float = ENTROPY_ZERO_TOL
) -> float:
    """E_ρ(P) = Σ_j log tr(P_j ρ) + n log n, avec −∞ si une issue est impossible.

    E_ρ ≤ 0 avec égalité pour la POVM uniforme; une étape bistochastique ne
    fait jamais décroître E_ρ lorsque la distribution est majorisée.
    """
    probabilities = povm.probabilities(rho)
    if np.any(probabilities <= tol):
        return -math.inf
    return float(np.sum(np.log(probabilities)) + povm.n * math.log(povm.n))


def _entropy_from_probabilities(probabilities: np.ndarray, n: int) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(probabilities > 0, np.log(np.clip(probabilities, 1e-300, None)), -np.inf)
    return logs.sum(axis=-1) + n * math.log(n)


def _fibonacci_sphere(count: int) -> np.ndarray:
    """Grille quasi uniforme de `count` points de la sphère unité (spirale dorée)."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(count)
    return np.stack([radius * np.cos(phi), radius * np.sin(phi), z], axis=1)


def _bloch_state(vector: np.ndarray) -> np.ndarray:
    sigma = pauli_matrices()
    return (identity(2) + sum(c * s for c, s in zip(vector, sigma))) / 2


def min_entropy(povm: Povm, config: Optional[MinEntropyConfig] = None) -> MinEntropyResult:
    """Approche min_ρ E_ρ(P) en se restreignant aux états purs.

    L'objectif étant concave en ρ, le minimum est atteint sur un état pur.
    En d = 2 : grille de Fibonacci sur la sphère de Bloch puis raffinement
    Nelder–Mead en (θ, φ). En d > 2 : recherche aléatoire graine-fixée puis
    raffinement; le résultat est marqué non certifié.

    Args:
        povm (Povm): La POVM.
        config (Optional[MinEntropyConfig]): Résolution de la recherche.

    Returns:
        MinEntropyResult: La valeur approchée (−∞ si un effet a un noyau).
    """
    config = config or MinEntropyConfig()
    n, d = povm.n, povm.d
    if np.any(eigvals_h(povm.effects)[:, 0] <= DEFAULT_TOL):
        return MinEntropyResult(value=-math.inf, certified=True)
    if d == 1:
        rho = DensityMatrix(np.ones((1, 1)))
        return MinEntropyResult(entropy_monotone(povm, rho), rho, True)
    if d == 2:
        return _min_entropy_qubit(povm, config)
    return _min_entropy_random(povm, config)


def _min_entropy_qubit(povm: Povm, config: MinEntropyConfig) -> MinEntropyResult:
    n = povm.n
    sigma = np.stack(pauli_matrices())
    traces = np.real(np.trace(povm.effects, axis1=1, axis2=2))
    bloch = np.real(np.einsum("jab,sba->js", povm.effects, sigma))

    def _objective_vec(points: np.ndarray) -> np.ndarray:
        probabilities = (traces[None, :] + points @ bloch.T) / 2
        return _entropy_from_probabilities(probabilities, n)

    grid = _fibonacci_sphere(config.grid)
    values = _objective_vec(grid)
    best = int(np.argmin(values))
    z = np.clip(grid[best, 2], -1.0, 1.0)
    start = np.array([math.acos(z), math.atan2(grid[best, 1], grid[best, 0])])

    def _point(angles: np.ndarray) -> np.ndarray:
        theta, phi = angles
        return np.array([
            math.sin(theta) * math.cos(phi),
            math.sin(theta) * math.sin(phi),
            math.cos(theta),
        ])

    refined = scipy.optimize.minimize(
        lambda a: float(_objective_vec(_point(a)[None, :])[0]),
        start,
        method="Nelder-Mead",
        options={"maxiter": config.iterations, "xatol": 1e-10, "fatol": 1e-12},
    )
    point = grid[best]
    value = float(values[best])
    if refined.fun < value:
        point, value = _point(refined.x), float(refined.fun)
    return MinEntropyResult(value, DensityMatrix(_bloch_state(point)), certified=True)


def _min_entropy_random(povm: Povm, config: MinEntropyConfig) -> MinEntropyResult:
    n, d = povm.n, povm.d
    rng = SeededRng(config.seed)
    vectors = rng.complex_normal((config.samples, d))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)

    def _objective_vec(vecs: np.ndarray) -> np.ndarray:
        probabilities = np.real(np.einsum("sa,jab,sb->sj", vecs.conj(), povm.effects, vecs))
        return _entropy_from_probabilities(probabilities, n)

    values = _objective_vec(vectors)
    best = int(np.argmin(values))

    def _unpack(x: np.ndarray) -> np.ndarray:
        vec = x[:d] + 1j * x[d:]
        return vec / np.linalg.norm(vec)

    start = np.concatenate([vectors[best].real, vectors[best].imag])
    refined = scipy.optimize.minimize(
        lambda x: float(_objective_vec(_unpack(x)[None, :])[0]),
        start,
        method="Nelder-Mead",
        options={"maxiter": config.iterations},
    )
    vector, value = vectors[best], float(values[best])
    if refined.fun < value:
        vector, value = _unpack(refined.x), float(refined.fun)
    rho = DensityMatrix(np.outer(vector, vector.conj()))
    return MinEntropyResult(value, rho, certified=False)


# --- Profils de normes cumulées ---


def cone_radius(effect: npt.ArrayLike) -> float:
    """Distance ‖E − 1/2‖₂ d'un effet au centre de la POVM uniforme à deux issues."""
    mat = hermitian(effect)
    return hs_norm(mat - identity(mat.shape[-1]) / 2)


def xi_shrinks_cone_radius(
    effect_b: npt.ArrayLike, effect_p: npt.ArrayLike, tol: float = 1e-10
) -> bool:
    """Vérifie ‖Ξ(B, P) − 1/2‖₂ ≤ ‖P − 1/2‖₂ + tol (contraction vers le centre)."""
    return cone_radius(xi_combination(effect_b, effect_p)) <= cone_radius(effect_p) + tol


def _profiles(effects: np.ndarray, orderings: np.ndarray) -> np.ndarray:
    n, d = effects.shape[0], effects.shape[-1]
    centered = effects - identity(d) / n
    cumulative = np.cumsum(centered[orderings], axis=1)
    return np.sqrt(np.sum(np.abs(cumulative) ** 2, axis=(-2, -1)))


def norm_profile(povm: Povm, ordering: Sequence[int]) -> NormProfile:
    """Calcule ‖Σ_{i≤k}(P_{ordering(i)} − 1/n)‖₂ pour k = 1..n.

    Raises:
        InvalidPermutationError: Si `ordering` n'est pas une permutation.
    """
    check_permutation(ordering, povm.n)
    values = _profiles(povm.effects, np.asarray([list(ordering)]))[0]
    return NormProfile(tuple(float(v) for v in values))


def conjecture_check(
    p: Povm, q: Povm, tol: float = 1e-8, reading: str = "joint"
) -> ConjectureVerdict:
    """Teste la conjecture de domination des profils de normes cumulées.

    Pour chaque ordre σ de Q, on cherche un ordre π de P dont le profil
    domine celui de Q à `tol` près : à tous les k simultanément (lecture
    `"joint"`) ou k par k (lecture `"per_k"`).

    Raises:
        CombinatorialLimitError: Si n > 6.
        DimensionMismatchError: Si les formes diffèrent.
        ValueError: Si `reading` est inconnue.
    """
    _check_same_shape(p, q)
    if reading not in READINGS:
        raise ValueError(f"Lecture inconnue '{reading}', attendue parmi {READINGS}.")
    if p.n > CONJECTURE_MAX_N:
        raise CombinatorialLimitError(p.n, CONJECTURE_MAX_N)
    orderings = np.array(list(itertools.permutations(range(p.n))), dtype=int)
    profile_p = _profiles(p.effects, orderings)
    profile_q = _profiles(q.effects, orderings)
    if reading == "joint":
        # gap[s, π, k] = profil_P[π, k] − profil_Q[s, k]
        gap = profile_p[None, :, :] - profile_q[:, None, :]
        margins = gap.min(axis=2).max(axis=1)
    else:
        margins = (profile_p.max(axis=0)[None, :] - profile_q).min(axis=1)
    violations = tuple(
        ConjectureViolation(tuple(int(k) for k in orderings[s]), float(margins[s]))
        for s in np.nonzero(margins < -tol)[0]
    )
    return ConjectureVerdict(
        holds=not violations,
        reading=reading,
        violations=violations,
        worst_margin=float(margins.min()),
    )
