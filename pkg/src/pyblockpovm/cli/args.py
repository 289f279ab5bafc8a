"""
Module pour la configuration et l'analyse des arguments de la ligne de commande.

Ce module utilise `argparse` pour définir les sous-commandes de
l'application : validation et produit de documents JSON, tests de
majorisation et de compatibilité, échantillonnage et expériences.
"""

import argparse
from typing import Optional, Sequence

from ..core.compatibility import COMPAT_BUDGET, COMPAT_TOL
from ..core.linalg import DEFAULT_TOL
from ..core.majorization import READINGS
from ..core.sampling import BistochasticMethod, PovmMethod

POVM_METHODS = [m.value for m in PovmMethod]
BISTOCHASTIC_METHODS = [m.value for m in BistochasticMethod]


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Fichier de sortie (par défaut: sortie standard).",
    )


def _add_experiment_parsers(subparsers: argparse._SubParsersAction) -> None:
    experiment = subparsers.add_parser(
        "experiment",
        help="Expériences reproductibles.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    kinds = experiment.add_subparsers(dest="experiment", required=True)

    volume = kinds.add_parser("volume", help="Volume relatif de Δ₂,₂ (attendu 1/8).")
    volume.add_argument("--samples", type=int, required=True)
    volume.add_argument("--seed", type=int, required=True)
    volume.add_argument(
        "--max-draws",
        type=int,
        default=None,
        help="Plafond de tirages (par défaut: 100 × samples).",
    )

    fixed = kinds.add_parser("fixed-points", help="Dynamique des points fixes (d = 2).")
    fixed.add_argument("--epsilon", type=float, default=0.01)
    fixed.add_argument("--steps", type=int, default=5000)
    fixed.add_argument("--starts", type=int, default=10)
    fixed.add_argument("--seed", type=int, required=True)
    _add_output(fixed)

    conjecture = kinds.add_parser(
        "conjecture",
        help="Balayage de la conjecture des profils de normes.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    conjecture.add_argument("--n", type=int, required=True)
    conjecture.add_argument("--d", type=int, required=True)
    conjecture.add_argument("--samples", type=int, required=True)
    conjecture.add_argument("--seed", type=int, required=True)
    conjecture.add_argument(
        "--reading",
        type=str,
        default="joint",
        choices=list(READINGS),
        help="""Lecture de la conjecture :
- 'joint': un même ordre de P domine tous les k (par défaut).
- 'per_k': la domination est testée k par k.""",
    )
    conjecture.add_argument(
        "--vector-method",
        action="append",
        choices=POVM_METHODS,
        default=None,
        help="Méthode de tirage des POVMs (répétable; par défaut: toutes).",
    )
    conjecture.add_argument(
        "--matrix-method",
        action="append",
        choices=BISTOCHASTIC_METHODS,
        default=None,
        help="Méthode de tirage des matrices (répétable; par défaut: toutes).",
    )
    conjecture.add_argument("--epsilon", type=float, default=0.01)
    _add_output(conjecture)

    monotone = kinds.add_parser("monotone", help="Trajectoire du monotone E_ρ.")
    monotone.add_argument("--povm", type=str, required=True)
    monotone.add_argument("--matrix", type=str, required=True)
    monotone.add_argument("--state", type=str, required=True)
    monotone.add_argument("--steps", type=int, required=True)
    _add_output(monotone)

    closure = kinds.add_parser(
        "closure", help="Fréquence de fermeture du produit bistochastique."
    )
    closure.add_argument("--n", type=int, required=True)
    closure.add_argument("--d", type=int, required=True)
    closure.add_argument("--samples", type=int, required=True)
    closure.add_argument("--seed", type=int, required=True)
    closure.add_argument(
        "--method",
        type=str,
        default=BistochasticMethod.FEASIBILITY_COMPLETED.value,
        choices=BISTOCHASTIC_METHODS,
    )


def build_parser() -> argparse.ArgumentParser:
    """Construit l'analyseur complet avec ses sous-commandes."""
    parser = argparse.ArgumentParser(
        prog="pyblockpovm",
        description="Boîte à outils des POVMs et des matrices stochastiques par blocs.",
        formatter_class=argparse.RawTextHelpFormatter,
    )

    parser.add_argument(
        "--workers",
        type=int,
        default=1,
        help="""Nombre de tranches Monte-Carlo, exécutées dans un pool de
processus si supérieur à 1 (par défaut: 1).""",
    )

    parser.add_argument(
        "--timeout",
        type=float,
        default=None,
        help="Timeout en secondes pour la commande (par défaut: aucun).",
    )

    parser.add_argument(
        "-d",
        "--details",
        action="store_true",
        help="Affiche une barre de progression pour les expériences longues.",
    )

    parser.add_argument(
        "-v",
        "--version",
        action="version",
        version="%(prog)s 0.1.0",
        help="Affiche la version du programme et quitte.",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    validate = subparsers.add_parser("validate", help="Valide un document JSON.")
    validate.add_argument("kind", choices=["povm", "block", "density"])
    validate.add_argument("file", type=str)
    validate.add_argument("--tol", type=float, default=DEFAULT_TOL)

    product = subparsers.add_parser("product", help="Produit par blocs A*B.")
    product.add_argument("left", type=str)
    product.add_argument("right", type=str)
    product.add_argument("--dual", action="store_true", help="Utilise le produit dual *†.")
    _add_output(product)

    majorize = subparsers.add_parser(
        "majorize",
        help="Teste P ≻ Q (opérateurs, ou distributions avec --state).",
    )
    majorize.add_argument("p", type=str)
    majorize.add_argument("q", type=str)
    majorize.add_argument("--state", type=str, default=None)
    majorize.add_argument("--tol", type=float, default=DEFAULT_TOL)

    compat = subparsers.add_parser("compat", help="Décide la compatibilité de P et Q.")
    compat.add_argument("p", type=str)
    compat.add_argument("q", type=str)
    compat.add_argument("--budget", type=int, default=COMPAT_BUDGET)
    compat.add_argument("--tol", type=float, default=COMPAT_TOL)
    compat.add_argument(
        "--out", type=str, default=None, help="Fichier où écrire la mesure mère trouvée."
    )

    sample = subparsers.add_parser(
        "sample",
        help="Tire un document aléatoire.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    sample.add_argument("kind", choices=["povm", "bistochastic", "density", "pure"])
    sample.add_argument("--n", type=int, default=2)
    sample.add_argument("--d", type=int, required=True)
    sample.add_argument(
        "--method",
        type=str,
        default=None,
        choices=POVM_METHODS + BISTOCHASTIC_METHODS,
        help="""Méthode de tirage :
- povm : ginibre_renormalized (par défaut), near_extremal, near_uniform.
- bistochastic : feasibility_completed (par défaut), near_identity,
  near_flat, circulant.""",
    )
    sample.add_argument("--epsilon", type=float, default=0.01)
    sample.add_argument("--seed", type=int, required=True)
    _add_output(sample)

    _add_experiment_parsers(subparsers)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Analyse les arguments de la ligne de commande.

    Args:
        argv (Optional[Sequence[str]]): Les arguments; `sys.argv[1:]` si `None`.

    Returns:
        argparse.Namespace: Les arguments analysés (`args.command`, puis
        `args.experiment` pour la sous-commande `experiment`).
    """
    return build_parser().parse_args(argv)
