"""
Module d'encodage JSON des POVMs, matrices par blocs et états.

Formats :
    - scalaire complexe = paire [re, im];
    - matrice = tableau de lignes de scalaires complexes;
    - Povm = {"n", "d", "effects"};
    - BlockMatrix = {"rows", "cols", "d", "blocks"} (indice externe = ligne);
    - DensityMatrix = {"d", "matrix"}.

Le décodage ne fait confiance à aucun champ redondant : les tailles
annoncées sont recoupées avec les tableaux, et la validation numérique est
effectuée par les constructeurs de `povm`.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .errors import DimensionMismatchError
from .povm import (
    SUM_TOL,
    BlockMatrix,
    DensityMatrix,
    Povm,
    validate_block,
    validate_density,
    validate_povm,
)

Document = Union[Povm, BlockMatrix, DensityMatrix]


def matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    """Encode une matrice complexe en lignes de paires [re, im]."""
    arr = np.asarray(matrix, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_from_json(data: Any) -> np.ndarray:
    """Décode une matrice encodée par `matrix_to_json`."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise DimensionMismatchError(
            f"Matrice de paires [re, im] attendue, forme reçue {arr.shape}."
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _expect(data: Dict[str, Any], key: str, actual: int) -> None:
    if key in data and int(data[key]) != actual:
        raise DimensionMismatchError(
            f"Champ '{key}' = {data[key]} mais le tableau indique {actual}."
        )


def povm_to_dict(povm: Povm) -> Dict[str, Any]:
    return {
        "n": povm.n,
        "d": povm.d,
        "effects": [matrix_to_json(e) for e in povm.effects],
    }


def povm_from_dict(data: Dict[str, Any], tol: float = SUM_TOL) -> Povm:
    effects = [matrix_from_json(e) for e in data["effects"]]
    povm = validate_povm(effects, tol)
    _expect(data, "n", povm.n)
    _expect(data, "d", povm.d)
    return povm


def block_to_dict(block: BlockMatrix) -> Dict[str, Any]:
    return {
        "rows": block.rows,
        "cols": block.cols,
        "d": block.d,
        "blocks": [[matrix_to_json(b) for b in row] for row in block.blocks],
    }


def block_from_dict(data: Dict[str, Any], tol: float = SUM_TOL) -> BlockMatrix:
    rows = [[matrix_from_json(b) for b in row] for row in data["blocks"]]
    if len({len(row) for row in rows}) > 1:
        raise DimensionMismatchError("Grille de blocs non rectangulaire.")
    block = validate_block(rows, tol)
    _expect(data, "rows", block.rows)
    _expect(data, "cols", block.cols)
    _expect(data, "d", block.d)
    return block


def density_to_dict(rho: DensityMatrix) -> Dict[str, Any]:
    return {"d": rho.d, "matrix": matrix_to_json(rho.matrix)}


def density_from_dict(data: Dict[str, Any]) -> DensityMatrix:
    rho = validate_density(matrix_from_json(data["matrix"]))
    _expect(data, "d", rho.d)
    return rho


def to_dict(document: Document) -> Dict[str, Any]:
    """Encode l'un des trois types de documents."""
    if isinstance(document, Povm):
        return povm_to_dict(document)
    if isinstance(document, BlockMatrix):
        return block_to_dict(document)
    if isinstance(document, DensityMatrix):
        return density_to_dict(document)
    raise TypeError(f"Type de document non pris en charge : {type(document)!r}")


def from_dict(data: Dict[str, Any], tol: float = SUM_TOL) -> Document:
    """Décode un document en reconnaissant son type par ses clés."""
    if "effects" in data:
        return povm_from_dict(data, tol)
    if "blocks" in data:
        return block_from_dict(data, tol)
    if "matrix" in data:
        return density_from_dict(data)
    raise ValueError(f"Document JSON non reconnu (clés : {sorted(data)}).")


def dumps(document: Document) -> str:
    """Sérialise un document de manière déterministe."""
    return json.dumps(to_dict(document), indent=2)


def load_document(path: Union[str, Path], tol: float = SUM_TOL) -> Document:
    """Lit et valide un document JSON depuis un fichier."""
    with open(path, encoding="utf-8") as handle:
        return from_dict(json.load(handle), tol)


def save_document(document: Document, path: Union[str, Path]) -> None:
    """Écrit un document JSON dans un fichier."""
    Path(path).write_text(dumps(document) + "\n", encoding="utf-8")
