"""
Module définissant la hiérarchie d'exceptions de PyBlockPovm.

Toutes les erreurs dérivent de `PovmError`. Les erreurs d'entrée héritent
aussi de `ValueError` et les échecs numériques de `ArithmeticError`, ce qui
permet à l'application de choisir le code de sortie par simple `isinstance`.
Chaque erreur sait se décrire en JSON via `to_dict()`.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence


class PovmError(Exception):
    """Classe de base de toutes les erreurs de la bibliothèque."""

    def to_dict(self) -> Dict[str, Any]:
        """Retourne une description sérialisable de l'erreur."""
        return {"error": type(self).__name__, "message": str(self)}


class PovmInputError(PovmError, ValueError):
    """Entrée invalide : dimensions, positivité, normalisation..."""


class NumericFailureError(PovmError, ArithmeticError):
    """Échec d'une routine numérique (valeurs propres, inversion, budget).

    Attributes:
        condition (float | None): Un résumé du conditionnement de la matrice
            en cause, lorsqu'il est disponible.
    """

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["condition"] = self.condition
        return data


class DimensionMismatchError(PovmInputError):
    """Les dimensions ou formes de grille des opérandes ne concordent pas."""


class UnsupportedDimensionError(PovmInputError):
    """Opération définie uniquement pour certaines dimensions (ex. d = 2)."""


class NotPositiveSemidefiniteError(PovmInputError):
    """Une matrice attendue semi-définie positive ne l'est pas."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = lambda_min

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["lambda_min"] = self.lambda_min
        return data


class EffectRangeError(PovmInputError):
    """Un effet sort de l'intervalle de Löwner 0 ≤ P ≤ 1."""


class InvalidStateError(PovmInputError):
    """Une matrice densité n'est pas positive ou pas de trace 1."""


class InvalidPermutationError(PovmInputError):
    """Un ordre fourni n'est pas une permutation de 0..n-1."""


class ProbabilityVectorError(PovmInputError):
    """Un vecteur n'est pas un vecteur de probabilité."""


class OutcomeProbabilityZeroError(PovmInputError):
    """L'issue a une probabilité nulle : l'état conditionnel n'existe pas."""

    def __init__(self, message: str, probability: float):
        super().__init__(message)
        self.probability = probability

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["probability"] = self.probability
        return data


class MarginalMismatchError(PovmInputError):
    """Les marginales d'une mesure mère ne correspondent pas à la POVM."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["residual"] = self.residual
        return data


class MajorizationError(PovmInputError):
    """La relation de majorisation requise n'est pas satisfaite."""


class CombinatorialLimitError(PovmInputError):
    """La recherche exhaustive dépasserait la limite factorielle autorisée."""

    def __init__(self, n: int, limit: int):
        super().__init__(f"n = {n} dépasse la limite combinatoire n ≤ {limit}.")
        self.n = n
        self.limit = limit


class CompletionBudgetError(NumericFailureError):
    """Le budget d'itérations de Dykstra est épuisé sans convergence."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update(iterations=self.iterations, residual=self.residual)
        return data


class EstimateUndefinedError(NumericFailureError):
    """Aucun tirage n'est tombé dans l'ensemble de conditionnement."""


# --- Violations structurées ---


@dataclass(frozen=True)
class NonPsdEffect:
    """L'effet `index` a une valeur propre minimale négative."""

    index: int
    lambda_min: float


@dataclass(frozen=True)
class SumNotIdentity:
    """La somme des effets s'écarte de l'identité (écart max. par entrée)."""

    deviation: float


@dataclass(frozen=True)
class NonPsdBlock:
    """Le bloc (row, col) a une valeur propre minimale négative."""

    row: int
    col: int
    lambda_min: float


class _ViolationsError(PovmInputError):
    def __init__(self, message: str, violations: Sequence[Any]):
        self.violations: List[Any] = list(violations)
        details = "; ".join(repr(v) for v in self.violations)
        super().__init__(f"{message}: {details}" if details else message)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["violations"] = [
            {"kind": type(v).__name__, **asdict(v)} for v in self.violations
        ]
        return data


class PovmValidationError(_ViolationsError):
    """La liste d'effets ne forme pas une POVM."""


class BlockValidationError(_ViolationsError):
    """La grille de blocs contient des blocs non positifs."""
