"""
Module de la barre de progression des expériences.

Les tranches Monte-Carlo déposent un entier dans une `asyncio.Queue` à
chaque fin de tranche; l'orchestrateur dépose `DONE` lorsque la commande se
termine, y compris sur erreur.
"""

import asyncio
from typing import Union

from tqdm.asyncio import tqdm

DONE = "done"
POLL_TIMEOUT = 1.0

Message = Union[int, str]


async def progress_bar_manager(
    queue: "asyncio.Queue[Message]",
    total: int,
    description: str,
    unit: str = " tranches",
) -> int:
    """Affiche une barre `tqdm` alimentée par `queue`.

    Args:
        queue (asyncio.Queue): Messages entiers (tranches terminées) ou `DONE`.
        total (int): Nombre de tranches attendues.
        description (str): Libellé de la barre.
        unit (str): Unité affichée.

    Returns:
        int: Le nombre de tranches effectivement signalées.
    """
    received = 0
    with tqdm(total=total, desc=description, unit=unit) as pbar:
        while True:
            try:
                message = await asyncio.wait_for(queue.get(), timeout=POLL_TIMEOUT)
            except asyncio.TimeoutError:
                # Une tranche peut durer plus longtemps que le délai
                continue
            queue.task_done()
            if message == DONE:
                pbar.n = pbar.total
                pbar.refresh()
                break
            if isinstance(message, int):
                received += message
                pbar.update(message)
    return received
