"""
Tests unitaires pour le module `pyblockpovm.cli.progress`.
"""

import asyncio
from unittest.mock import MagicMock, patch

import pytest
from pyblockpovm.cli.progress import DONE, progress_bar_manager


@pytest.mark.asyncio
@patch('pyblockpovm.cli.progress.tqdm')
async def test_progress_bar_manager_normal_flow(mock_tqdm):
    """
    Vérifie que le gestionnaire de barre de progression met à jour
    correctement la barre et se termine avec le message 'done'.
    """
    queue = asyncio.Queue()
    mock_pbar = MagicMock()
    mock_pbar.n = 0
    mock_pbar.total = 4
    mock_tqdm.return_value.__enter__.return_value = mock_pbar

    manager_task = asyncio.create_task(progress_bar_manager(queue, 4, "experiment:volume"))
    await queue.put(1)
    await queue.put(2)
    await queue.put(DONE)
    received = await manager_task

    mock_tqdm.assert_called_once_with(total=4, desc="experiment:volume", unit=" tranches")
    assert mock_pbar.update.call_count == 2
    mock_pbar.update.assert_any_call(1)
    mock_pbar.update.assert_any_call(2)
    assert received == 3

    # Vérifie que la barre est bien mise à 100% à la fin
    assert mock_pbar.n == mock_pbar.total
    mock_pbar.refresh.assert_called_once()


@pytest.mark.asyncio
@patch('pyblockpovm.cli.progress.POLL_TIMEOUT', 0.01)
@patch('pyblockpovm.cli.progress.tqdm')
async def test_progress_bar_manager_waits_past_timeout(mock_tqdm):
    """
    Vérifie qu'une tranche plus longue que le délai d'attente ne termine pas
    la barre : seul 'done' y met fin.
    """
    queue = asyncio.Queue()
    mock_pbar = MagicMock()
    mock_tqdm.return_value.__enter__.return_value = mock_pbar

    manager_task = asyncio.create_task(progress_bar_manager(queue, 2, "Timeout Test"))
    await queue.put(1)
    await asyncio.sleep(0.05)
    assert not manager_task.done()

    await queue.put(DONE)
    assert await manager_task == 1
    mock_pbar.update.assert_called_once_with(1)


@pytest.mark.asyncio
@patch('pyblockpovm.cli.progress.tqdm')
async def test_progress_bar_manager_cancelled(mock_tqdm):
    """
    Vérifie que le gestionnaire peut être annulé sans message 'done'.
    """
    queue = asyncio.Queue()
    mock_tqdm.return_value.__enter__.return_value = MagicMock()
    mock_tqdm.return_value.__exit__.return_value = False

    manager_task = asyncio.create_task(progress_bar_manager(queue, 2, "Annulation"))
    await asyncio.sleep(0)
    manager_task.cancel()
    with pytest.raises(asyncio.CancelledError):
        await manager_task


@pytest.mark.asyncio
@patch('pyblockpovm.cli.progress.tqdm')
async def test_progress_bar_manager_exception(mock_tqdm):
    """
    Vérifie qu'une exception provenant de la file est propagée.
    """
    queue = asyncio.Queue()
    queue.get = MagicMock(side_effect=ValueError("Test Exception"))
    mock_pbar = MagicMock()
    mock_tqdm.return_value.__enter__.return_value = mock_pbar
    mock_tqdm.return_value.__exit__.return_value = False

    with pytest.raises(ValueError):
        await progress_bar_manager(queue, 100, "Exception Test")
    mock_pbar.update.assert_not_called()
