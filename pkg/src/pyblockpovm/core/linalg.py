"""
Module de primitives d'algèbre linéaire hermitienne dense.

Toutes les matrices manipulées par la bibliothèque sont des `numpy.ndarray`
complexes de forme `(..., d, d)`. Les fonctions de ce module acceptent des
piles de matrices (dimensions de tête arbitraires) lorsque cela a un sens :
les produits par blocs traitent ainsi toute une grille en un seul appel à
`numpy.linalg.eigh`.

Les tolérances PSD sont relatives : une matrice H est considérée positive si
λ_min(H) ≥ −tol · max(1, ‖H‖₂).
"""

from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    NotPositiveSemidefiniteError,
    NumericFailureError,
)

HermitianMatrix = npt.NDArray[np.complex128]

DEFAULT_TOL = 1e-9
DEFAULT_RANK_TOL = 1e-9


class EigenSystem(NamedTuple):
    """Décomposition spectrale d'une matrice hermitienne.

    Attributes:
        eigenvalues (np.ndarray): Valeurs propres réelles, triées par ordre
            croissant.
        eigenvectors (np.ndarray): Matrice unitaire dont les colonnes sont
            les vecteurs propres associés.
    """

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: HermitianMatrix


def _check_square(arr: np.ndarray) -> None:
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2] or arr.shape[-1] < 1:
        raise DimensionMismatchError(
            f"Matrice carrée de dimension ≥ 1 attendue, forme reçue {arr.shape}."
        )


def hermitian(matrix: npt.ArrayLike) -> HermitianMatrix:
    """Construit une matrice hermitienne en appliquant H ← (H + H†)/2.

    Args:
        matrix (ArrayLike): Une matrice carrée (ou une pile de matrices).

    Returns:
        HermitianMatrix: Une copie complexe exactement hermitienne.

    Raises:
        DimensionMismatchError: Si l'entrée n'est pas carrée.
    """
    arr = np.asarray(matrix, dtype=np.complex128)
    _check_square(arr)
    return (arr + np.swapaxes(arr.conj(), -1, -2)) / 2


def dagger(matrix: np.ndarray) -> np.ndarray:
    """Adjoint hermitien sur les deux derniers axes."""
    return np.swapaxes(np.asarray(matrix).conj(), -1, -2)


def identity(d: int) -> HermitianMatrix:
    """Retourne l'identité complexe de dimension `d`."""
    if d < 1:
        raise ValueError(f"La dimension doit être ≥ 1, reçu {d}.")
    return np.eye(d, dtype=np.complex128)


def same_dim(a: np.ndarray, b: np.ndarray) -> None:
    """Lève `DimensionMismatchError` si `a` et `b` n'ont pas la même forme."""
    if np.shape(a) != np.shape(b):
        raise DimensionMismatchError(
            f"Dimensions incompatibles : {np.shape(a)} et {np.shape(b)}."
        )


def eig_h(h: npt.ArrayLike) -> EigenSystem:
    """Diagonalise une matrice hermitienne.

    Args:
        h (ArrayLike): La matrice à diagonaliser (symétrisée au préalable).

    Returns:
        EigenSystem: Valeurs propres croissantes et vecteurs propres unitaires.

    Raises:
        NumericFailureError: Si le solveur ne converge pas. L'erreur porte le
            conditionnement de la matrice.
    """
    mat = hermitian(h)
    if mat.ndim != 2:
        raise DimensionMismatchError("eig_h attend une matrice unique.")
    try:
        values, vectors = scipy.linalg.eigh(mat)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(
            f"Le solveur de valeurs propres n'a pas convergé : {exc}",
            condition=float(np.linalg.cond(mat)),
        ) from exc
    return EigenSystem(values, vectors)


def _eigh_stack(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            f"Le solveur de valeurs propres n'a pas convergé : {exc}"
        ) from exc


def eigvals_h(h: npt.ArrayLike) -> np.ndarray:
    """Valeurs propres croissantes (fonctionne sur une pile de matrices)."""
    mat = hermitian(h)
    try:
        return np.linalg.eigvalsh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            f"Le solveur de valeurs propres n'a pas convergé : {exc}"
        ) from exc


def min_eigenvalue(h: npt.ArrayLike) -> float:
    """Retourne λ_min d'une matrice hermitienne."""
    return float(eigvals_h(h)[..., 0])


def spectral_norm(h: npt.ArrayLike) -> float:
    """Norme d'opérateur ‖H‖₂ (plus grande valeur propre en module)."""
    values = eigvals_h(h)
    return float(np.max(np.abs(values)))


def _psd_floor(values: np.ndarray, tol: float) -> np.ndarray:
    scale = np.maximum(1.0, np.max(np.abs(values), axis=-1))
    return -tol * scale


def is_psd(h: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """Teste si une matrice hermitienne est semi-définie positive.

    Args:
        h (ArrayLike): La matrice à tester.
        tol (float): Tolérance relative, doit être ≥ 0.

    Returns:
        bool: `True` si λ_min(H) ≥ −tol · max(1, ‖H‖₂).

    Raises:
        ValueError: Si `tol` est négatif.
    """
    if tol < 0:
        raise ValueError(f"La tolérance doit être positive, reçu {tol}.")
    values = eigvals_h(h)
    return bool(np.all(values[..., 0] >= _psd_floor(values, tol)))


def sqrt_psd(h: npt.ArrayLike, tol: float = DEFAULT_TOL) -> HermitianMatrix:
    """Racine carrée principale d'une matrice (ou pile de matrices) PSD.

    Les valeurs propres dans [−tol·échelle, 0) sont ramenées à 0 avant la
    racine.

    Args:
        h (ArrayLike): Matrice PSD ou pile de matrices PSD.
        tol (float): Tolérance PSD relative.

    Returns:
        HermitianMatrix: R, PSD, avec R·R = H.

    Raises:
        NotPositiveSemidefiniteError: Si une valeur propre est plus négative
            que la tolérance.
    """
    mat = hermitian(h)
    values, vectors = _eigh_stack(mat)
    floor = _psd_floor(values, tol)
    lowest = values[..., 0]
    if np.any(lowest < floor):
        worst = float(np.min(lowest))
        raise NotPositiveSemidefiniteError(
            f"Racine d'une matrice non positive (λ_min = {worst:.3e}).", worst
        )
    roots = np.sqrt(np.clip(values, 0.0, None))
    result = (vectors * roots[..., None, :]) @ dagger(vectors)
    return hermitian(result)


def pinv_support(
    h: npt.ArrayLike, rank_tol: float = DEFAULT_RANK_TOL
) -> Tuple[HermitianMatrix, HermitianMatrix]:
    """Pseudo-inverse sur le support et projecteur sur ce support.

    Les valeurs propres ≤ rank_tol · λ_max sont traitées comme le noyau. La
    matrice nulle donne une pseudo-inverse et un support nuls.

    Args:
        h (ArrayLike): Une matrice PSD.
        rank_tol (float): Seuil relatif de rang.

    Returns:
        Tuple[HermitianMatrix, HermitianMatrix]: `(pinv, support_projector)`.
    """
    return _support_inverse(h, rank_tol, power=1.0)


def pinv_sqrt_support(
    h: npt.ArrayLike, rank_tol: float = DEFAULT_RANK_TOL
) -> Tuple[HermitianMatrix, HermitianMatrix]:
    """Pseudo-inverse de √H sur le support de H, et le projecteur du support.

    Le support est décidé sur les valeurs propres de H et non sur celles de
    √H : un bruit de 1e-16 sur H devient 1e-8 après la racine.
    """
    return _support_inverse(h, rank_tol, power=0.5)


def _support_inverse(
    h: npt.ArrayLike, rank_tol: float, power: float
) -> Tuple[HermitianMatrix, HermitianMatrix]:
    mat = hermitian(h)
    values, vectors = _eigh_stack(mat)
    top = np.max(values, axis=-1, keepdims=True)
    keep = (values > rank_tol * np.maximum(top, 0.0)) & (top > 0)
    safe = np.where(keep, values, 1.0)
    inverted = np.where(keep, safe ** -power, 0.0)
    pinv = (vectors * inverted[..., None, :]) @ dagger(vectors)
    support = (vectors * keep[..., None, :].astype(float)) @ dagger(vectors)
    return hermitian(pinv), hermitian(support)


def loewner_leq(a: npt.ArrayLike, b: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """Retourne `True` si A ≤ B dans l'ordre de Löwner (B − A PSD)."""
    a_arr = hermitian(a)
    b_arr = hermitian(b)
    same_dim(a_arr, b_arr)
    return is_psd(b_arr - a_arr, tol)


def hs_inner(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Produit scalaire de Hilbert–Schmidt Re tr(A†B)."""
    a_arr = np.asarray(a, dtype=np.complex128)
    b_arr = np.asarray(b, dtype=np.complex128)
    same_dim(a_arr, b_arr)
    return float(np.real(np.vdot(a_arr, b_arr)))


def hs_norm(a: npt.ArrayLike) -> float:
    """Norme de Hilbert–Schmidt ‖A‖₂ = √tr(A†A)."""
    return float(np.sqrt(max(hs_inner(a, a), 0.0)))


def commutator(a: npt.ArrayLike, b: npt.ArrayLike) -> np.ndarray:
    """Commutateur [A, B] = AB − BA."""
    a_arr = np.asarray(a, dtype=np.complex128)
    b_arr = np.asarray(b, dtype=np.complex128)
    same_dim(a_arr, b_arr)
    return a_arr @ b_arr - b_arr @ a_arr


def is_projector(h: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """Teste l'idempotence ‖E² − E‖₂ ≤ tol."""
    mat = hermitian(h)
    return hs_norm(mat @ mat - mat) <= tol


def rank_one(vector: npt.ArrayLike) -> HermitianMatrix:
    """Projecteur |v⟩⟨v| associé à un vecteur (non normalisé)."""
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())
