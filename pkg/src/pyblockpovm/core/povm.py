"""
Module des types de mesures : POVM, matrices par blocs et états.

Une POVM (vecteur de probabilité par blocs) est stockée comme une pile
`(n, d, d)` d'effets, une matrice par blocs comme un tableau
`(rows, cols, d, d)`. Les valeurs sont immuables : les tableaux sont
verrouillés en écriture à la construction.

Tous les indices d'issue sont comptés à partir de 0.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, NamedTuple, Sequence

import numpy as np
import numpy.typing as npt

from .errors import (
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
from .linalg import (
    DEFAULT_TOL,
    HermitianMatrix,
    dagger,
    eigvals_h,
    hermitian,
    identity,
    is_psd,
    rank_one,
    sqrt_psd,
)

SUM_TOL = 1e-9
DENSITY_TRACE_TOL = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.complex128, copy=True)
    array.flags.writeable = False
    return array


class BlockKind(str, Enum):
    """Nature d'une matrice par blocs, calculée à la demande."""

    GENERAL = "general"
    STOCHASTIC = "stochastic"
    BISTOCHASTIC = "bistochastic"


@dataclass(frozen=True)
class Povm:
    """Vecteur de probabilité par blocs : n effets d×d sommant à l'identité.

    Les instances valides sont produites par `validate_povm` ou par les
    constructeurs canoniques de ce module.

    Attributes:
        effects (np.ndarray): Pile `(n, d, d)` des effets.
    """

    effects: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "effects", _frozen(self.effects))

    @property
    def n(self) -> int:
        return self.effects.shape[0]

    @property
    def d(self) -> int:
        return self.effects.shape[-1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int) -> HermitianMatrix:
        return self.effects[index]

    def __iter__(self) -> Iterator[HermitianMatrix]:
        return iter(self.effects)

    def probabilities(self, rho: "DensityMatrix") -> np.ndarray:
        """Distribution p_j = tr(P_j ρ) induite sur l'état `rho`."""
        if rho.d != self.d:
            raise DimensionMismatchError(
                f"État de dimension {rho.d} pour une POVM de dimension {self.d}."
            )
        return np.real(np.einsum("jab,ba->j", self.effects, rho.matrix))

    def permuted(self, order: Sequence[int]) -> "Povm":
        """Retourne la POVM dont l'effet k est `self[order[k]]`."""
        check_permutation(order, self.n)
        return Povm(self.effects[list(order)])

    def as_block(self) -> "BlockMatrix":
        """Vue n×1 de la POVM en tant que matrice par blocs."""
        return BlockMatrix(self.effects[:, None, :, :])


@dataclass(frozen=True)
class BlockMatrix:
    """Grille rows×cols de blocs PSD de taille d.

    Attributes:
        blocks (np.ndarray): Tableau `(rows, cols, d, d)`; l'indice externe
            est la ligne de blocs.
    """

    blocks: np.ndarray

    def __post_init__(self) -> None:
        blocks = np.asarray(self.blocks)
        if blocks.ndim != 4 or blocks.shape[-1] != blocks.shape[-2]:
            raise DimensionMismatchError(
                f"Grille (rows, cols, d, d) attendue, forme reçue {blocks.shape}."
            )
        object.__setattr__(self, "blocks", _frozen(blocks))

    @property
    def rows(self) -> int:
        return self.blocks.shape[0]

    @property
    def cols(self) -> int:
        return self.blocks.shape[1]

    @property
    def d(self) -> int:
        return self.blocks.shape[-1]

    def column_sums(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def row_sums(self) -> np.ndarray:
        return self.blocks.sum(axis=1)

    def column_deviation(self) -> float:
        """Écart maximal (par entrée) des sommes de colonnes à l'identité."""
        return float(np.max(np.abs(self.column_sums() - identity(self.d))))

    def row_deviation(self) -> float:
        """Écart maximal (par entrée) des sommes de lignes à l'identité."""
        return float(np.max(np.abs(self.row_sums() - identity(self.d))))

    def is_stochastic(self, tol: float = SUM_TOL) -> bool:
        return self.column_deviation() <= tol

    def is_bistochastic(self, tol: float = SUM_TOL) -> bool:
        return (
            self.rows == self.cols
            and self.is_stochastic(tol)
            and self.row_deviation() <= tol
        )

    def kind(self, tol: float = SUM_TOL) -> BlockKind:
        """Calcule la nature (générale, stochastique, bistochastique)."""
        if self.is_bistochastic(tol):
            return BlockKind.BISTOCHASTIC
        if self.is_stochastic(tol):
            return BlockKind.STOCHASTIC
        return BlockKind.GENERAL

    def column(self, j: int) -> Povm:
        """Colonne de blocs `j` vue comme une POVM (sans validation)."""
        return Povm(self.blocks[:, j])

    def adjoint(self) -> "BlockMatrix":
        """Transposée par blocs B† (les blocs sont hermitiens)."""
        return BlockMatrix(np.swapaxes(dagger(self.blocks), 0, 1))

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        if self.blocks.shape != other.blocks.shape:
            raise DimensionMismatchError("Grilles de formes différentes.")
        return BlockMatrix(self.blocks + other.blocks)

    def __mul__(self, scalar: float) -> "BlockMatrix":
        return BlockMatrix(self.blocks * scalar)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, n: int, d: int) -> "BlockMatrix":
        """Identité d·n découpée en blocs d×d."""
        blocks = np.zeros((n, n, d, d), dtype=np.complex128)
        for i in range(n):
            blocks[i, i] = identity(d)
        return cls(blocks)

    @classmethod
    def from_columns(cls, columns: Sequence[Povm]) -> "BlockMatrix":
        """Assemble une matrice stochastique dont la colonne j est `columns[j]`."""
        if not columns:
            raise DimensionMismatchError("Au moins une colonne est requise.")
        shapes = {povm.effects.shape for povm in columns}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"Colonnes de formes différentes : {shapes}.")
        return cls(np.stack([povm.effects for povm in columns], axis=1))


@dataclass(frozen=True)
class DensityMatrix:
    """État quantique : matrice PSD de trace 1."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def d(self) -> int:
        return self.matrix.shape[-1]

    def expectation(self, operator: np.ndarray) -> float:
        """Valeur moyenne Re tr(O ρ)."""
        return float(np.real(np.trace(np.asarray(operator) @ self.matrix)))


class ConeCoords(NamedTuple):
    """Coordonnées (t, τ) d'un effet qubit : trace et longueur de Bloch."""

    t: float
    tau: float


class PauliPovms(NamedTuple):
    """Les mesures projectives de Pauli et la POVM plate, en d = 2."""

    z: Povm
    x: Povm
    y: Povm
    flat: Povm


def check_permutation(order: Sequence[int], n: int) -> None:
    """Lève `InvalidPermutationError` si `order` n'est pas une permutation de range(n)."""
    if sorted(int(k) for k in order) != list(range(n)):
        raise InvalidPermutationError(
            f"{tuple(order)} n'est pas une permutation de 0..{n - 1}."
        )


def _stack(matrices: Sequence[npt.ArrayLike]) -> np.ndarray:
    if len(matrices) == 0:
        raise DimensionMismatchError("La liste d'effets est vide.")
    arrays = [np.asarray(m, dtype=np.complex128) for m in matrices]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"Effets de dimensions différentes : {shapes}.")
    return hermitian(np.stack(arrays))


def validate_povm(effects: Sequence[npt.ArrayLike], tol: float = SUM_TOL) -> Povm:
    """Valide une liste d'effets et retourne la POVM correspondante.

    Toutes les violations sont collectées avant de lever l'erreur : chaque
    effet non positif, puis l'écart de la somme à l'identité.

    Args:
        effects (Sequence[ArrayLike]): Les n matrices d×d.
        tol (float): Tolérance PSD (relative) et d'écart à l'identité (par
            entrée).

    Returns:
        Povm: La POVM validée.

    Raises:
        DimensionMismatchError: Si la liste est vide ou les tailles diffèrent.
        PovmValidationError: Avec la liste des `NonPsdEffect`/`SumNotIdentity`.
    """
    stack = _stack(effects)
    violations: List[object] = []
    lowest = eigvals_h(stack)[:, 0]
    for index, effect in enumerate(stack):
        if not is_psd(effect, tol):
            violations.append(NonPsdEffect(index, float(lowest[index])))
    deviation = float(np.max(np.abs(stack.sum(axis=0) - identity(stack.shape[-1]))))
    if deviation > tol:
        violations.append(SumNotIdentity(deviation))
    if violations:
        raise PovmValidationError("POVM invalide", violations)
    return Povm(stack)


def validate_block(blocks: npt.ArrayLike, tol: float = DEFAULT_TOL) -> BlockMatrix:
    """Valide une grille de blocs PSD.

    Args:
        blocks (ArrayLike): Grille `(rows, cols, d, d)` ou liste de listes de
            matrices.
        tol (float): Tolérance PSD relative.

    Returns:
        BlockMatrix: La matrice validée; sa nature s'obtient par `kind()`.

    Raises:
        DimensionMismatchError: Si la grille n'est pas rectangulaire.
        BlockValidationError: Avec un `NonPsdBlock` par bloc fautif.
    """
    try:
        grid = np.asarray(blocks, dtype=np.complex128)
    except ValueError as exc:
        raise DimensionMismatchError(f"Grille non rectangulaire : {exc}") from exc
    if grid.ndim != 4 or grid.shape[-1] != grid.shape[-2] or grid.shape[-1] < 1:
        raise DimensionMismatchError(
            f"Grille (rows, cols, d, d) attendue, forme reçue {grid.shape}."
        )
    grid = hermitian(grid)
    lowest = eigvals_h(grid)[..., 0]
    violations = [
        NonPsdBlock(i, j, float(lowest[i, j]))
        for i in range(grid.shape[0])
        for j in range(grid.shape[1])
        if not is_psd(grid[i, j], tol)
    ]
    if violations:
        raise BlockValidationError("Matrice par blocs invalide", violations)
    return BlockMatrix(grid)


def validate_effect(matrix: npt.ArrayLike, tol: float = DEFAULT_TOL) -> HermitianMatrix:
    """Vérifie 0 ≤ P ≤ 1 et retourne l'effet symétrisé.

    Raises:
        EffectRangeError: Si l'une des deux bornes de Löwner est violée.
    """
    effect = hermitian(matrix)
    if effect.ndim != 2:
        raise DimensionMismatchError("Un effet est une matrice unique.")
    if not (is_psd(effect, tol) and is_psd(identity(effect.shape[0]) - effect, tol)):
        values = eigvals_h(effect)
        raise EffectRangeError(
            f"Effet hors de [0, 1] : spectre dans [{values[0]:.3e}, {values[-1]:.3e}]."
        )
    return effect


def validate_density(
    matrix: npt.ArrayLike, tol: float = DENSITY_TRACE_TOL
) -> DensityMatrix:
    """Valide une matrice densité (PSD, trace 1 à `tol` près)."""
    rho = hermitian(matrix)
    if rho.ndim != 2:
        raise DimensionMismatchError("Une matrice densité est une matrice unique.")
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > tol:
        raise InvalidStateError(f"Trace {trace!r} différente de 1.")
    if not is_psd(rho, DEFAULT_TOL):
        raise InvalidStateError("Matrice densité non positive.")
    return DensityMatrix(rho)


def fuzzy_povm(j: int, n: int, d: int) -> Povm:
    """POVM floue V_j : identité à l'emplacement `j`, zéro ailleurs.

    Raises:
        IndexError: Si `j` n'est pas dans range(n).
    """
    if n < 1 or d < 1:
        raise ValueError(f"n et d doivent être ≥ 1, reçu n={n}, d={d}.")
    if not 0 <= j < n:
        raise IndexError(f"Indice {j} hors de range({n}).")
    effects = np.zeros((n, d, d), dtype=np.complex128)
    effects[j] = identity(d)
    return Povm(effects)


def uniform_povm(n: int, d: int) -> Povm:
    """POVM uniforme P_u : n copies de identité/n."""
    if n < 1 or d < 1:
        raise ValueError(f"n et d doivent être ≥ 1, reçu n={n}, d={d}.")
    return Povm(np.broadcast_to(identity(d) / n, (n, d, d)))


def pauli_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Retourne (σ_X, σ_Y, σ_Z)."""
    sigma_x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sigma_y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sigma_z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    return sigma_x, sigma_y, sigma_z


def pauli_povms() -> PauliPovms:
    """Mesures projectives P_Z, P_X, P_Y et la POVM plate, avec P_± = (1 ± σ)/2."""
    one = identity(2)

    def _projective(sigma: np.ndarray) -> Povm:
        return Povm(np.stack([(one + sigma) / 2, (one - sigma) / 2]))

    sigma_x, sigma_y, sigma_z = pauli_matrices()
    return PauliPovms(
        z=_projective(sigma_z),
        x=_projective(sigma_x),
        y=_projective(sigma_y),
        flat=uniform_povm(2, 2),
    )


def basis_state(index: int, d: int) -> DensityMatrix:
    """État pur |index⟩⟨index| de la base calculatoire."""
    vector = np.zeros(d)
    vector[index] = 1.0
    return DensityMatrix(rank_one(vector))


def cone_coordinates(effect: npt.ArrayLike) -> ConeCoords:
    """Coordonnées de cône (t, τ) d'un effet qubit.

    Args:
        effect (ArrayLike): Un effet 2×2.

    Returns:
        ConeCoords: t = tr(P) et τ = λ₊ − λ₋.

    Raises:
        UnsupportedDimensionError: Si d ≠ 2.
    """
    mat = hermitian(effect)
    if mat.shape != (2, 2):
        raise UnsupportedDimensionError(
            f"Coordonnées de cône définies pour d = 2, reçu forme {mat.shape}."
        )
    low, high = eigvals_h(mat)
    return ConeCoords(t=float(low + high), tau=float(high - low))


def is_valid_effect_region(t: float, tau: float, tol: float = 1e-12) -> bool:
    """Appartenance au double cône τ ≤ min(t, 2 − t) des effets qubit."""
    if tau < 0:
        raise ValueError(f"τ doit être ≥ 0, reçu {tau}.")
    return tau <= min(t, 2.0 - t) + tol


def delta22_analytic_volume() -> float:
    """Hypervolume de Δ₂,₂ en coordonnées (t, τ⃗) : deux cônes de hauteur 1."""
    return 2.0 * math.pi / 3.0


def positive_cone_volume() -> float:
    """Volume du cône |τ⃗| ≤ t pour t ∈ [0, 2] (ensemble de conditionnement)."""
    return 16.0 * math.pi / 3.0


def analytic_volume_ratio() -> float:
    """Fraction des matrices PSD de trace ≤ 2 qui sont des effets (1/8)."""
    return delta22_analytic_volume() / positive_cone_volume()


def matrix_convex_combination(
    p: Povm,
    q: Povm,
    weight: npt.ArrayLike,
    u: npt.ArrayLike | None = None,
    v: npt.ArrayLike | None = None,
    tol: float = SUM_TOL,
) -> Povm:
    """Combinaison matricielle-convexe de deux POVMs.

    P'_j = √A U P_j U† √A + √(1−A) V Q_j V† √(1−A).

    Args:
        p (Povm): Première POVM.
        q (Povm): Seconde POVM, de même forme.
        weight (ArrayLike): Le poids matriciel A, avec 0 ≤ A ≤ 1.
        u (ArrayLike | None): Unitaire appliquée à `p` (identité par défaut).
        v (ArrayLike | None): Unitaire appliquée à `q` (identité par défaut).
        tol (float): Tolérance de validation du résultat.

    Returns:
        Povm: La combinaison, validée.
    """
    if p.effects.shape != q.effects.shape:
        raise DimensionMismatchError("Les deux POVMs doivent avoir la même forme.")
    a = validate_effect(weight)
    if a.shape[0] != p.d:
        raise DimensionMismatchError("Poids de dimension incompatible.")
    u_mat = identity(p.d) if u is None else np.asarray(u, dtype=np.complex128)
    v_mat = identity(p.d) if v is None else np.asarray(v, dtype=np.complex128)
    root_a = sqrt_psd(a)
    root_rest = sqrt_psd(identity(p.d) - a)
    left = root_a @ (u_mat @ p.effects @ dagger(u_mat)) @ root_a
    right = root_rest @ (v_mat @ q.effects @ dagger(v_mat)) @ root_rest
    return validate_povm(list(left + right), tol)
