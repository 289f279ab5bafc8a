"""
Module définissant le contexte d'exécution des expériences.
"""

import asyncio
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional


@dataclass
class ExperimentContext:
    """Encapsule les paramètres et ressources partagés par une expérience.

    Cette `dataclass` transporte de manière cohérente le nombre de
    travailleurs et les objets partagés (pool de processus, file de
    progression) entre la CLI, l'orchestrateur et les boucles Monte-Carlo.

    Attributes:
        workers (int): Nombre de tranches indépendantes d'une boucle
            Monte-Carlo. Avec une graine fixée, le résultat dépend de ce
            nombre mais pas de l'exécuteur.
        executor (Optional[ProcessPoolExecutor]): Le pool de processus des
            tranches. Si `None`, les tranches s'exécutent dans le thread
            principal.
        progress_queue (Optional[asyncio.Queue]): File asynchrone recevant un
            entier par tranche terminée, pour la barre de progression.
    """

    workers: int = 1
    executor: Optional[ProcessPoolExecutor] = None
    progress_queue: Optional[asyncio.Queue] = None
