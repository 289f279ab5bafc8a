"""
Module de répartition des tranches de calcul Monte-Carlo.

`run_chunks` exécute une fonction de premier niveau sur une liste de charges
utiles, soit directement, soit dans le `ProcessPoolExecutor` du contexte, et
rend les résultats dans l'ordre des charges utiles.
"""

import asyncio
from typing import Any, Callable, List, Sequence, TypeVar

from .context import ExperimentContext

T = TypeVar("T")


def split_count(total: int, parts: int) -> List[int]:
    """Répartit `total` en `parts` entiers dont les tailles diffèrent d'au plus 1."""
    if parts < 1:
        raise ValueError(f"Le nombre de tranches doit être ≥ 1, reçu {parts}.")
    base, extra = divmod(total, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


async def _run_one(
    context: ExperimentContext, func: Callable[[Any], T], payload: Any
) -> T:
    if context.executor is None:
        result = func(payload)
    else:
        loop = asyncio.get_running_loop()
        result = await loop.run_in_executor(context.executor, func, payload)
    if context.progress_queue is not None:
        await context.progress_queue.put(1)
    return result


async def run_chunks(
    context: ExperimentContext, func: Callable[[Any], T], payloads: Sequence[Any]
) -> List[T]:
    """Exécute `func` sur chaque charge utile et fusionne dans l'ordre.

    `func` doit être une fonction de premier niveau pour être sérialisable
    (picklable) par `multiprocessing`.

    Args:
        context (ExperimentContext): Le contexte portant l'exécuteur et la
            file de progression.
        func (Callable): La fonction CPU-bound d'une tranche.
        payloads (Sequence[Any]): Les arguments, un par tranche.

    Returns:
        List[T]: Les résultats, dans l'ordre de `payloads`.
    """
    if context.executor is None:
        return [await _run_one(context, func, payload) for payload in payloads]
    async with asyncio.TaskGroup() as tg:
        tasks = [tg.create_task(_run_one(context, func, p)) for p in payloads]
    return [task.result() for task in tasks]
