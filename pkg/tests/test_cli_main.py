"""
Tests unitaires pour le module `pyblockpovm.cli.main`.
"""

from unittest.mock import MagicMock, patch

import pytest
from pyblockpovm.cli.main import main


@patch('pyblockpovm.cli.main.main_async', new_callable=MagicMock)
@patch('pyblockpovm.cli.main.asyncio.run', return_value=1)
def test_main_exit_code(mock_asyncio_run, mock_main_async):
    """
    Vérifie que `main` lance `asyncio.run` et quitte avec le code retourné.
    """
    with pytest.raises(SystemExit) as excinfo:
        main()
    mock_asyncio_run.assert_called_once()
    mock_main_async.assert_called_once_with()
    assert excinfo.value.code == 1


@patch('pyblockpovm.cli.main.main_async', new_callable=MagicMock)
@patch('pyblockpovm.cli.main.asyncio.run', side_effect=KeyboardInterrupt)
def test_main_keyboard_interrupt(mock_asyncio_run, mock_main_async, capsys):
    """
    Vérifie que `main` gère correctement une `KeyboardInterrupt` et affiche
    le message approprié.
    """
    with pytest.raises(SystemExit) as excinfo:
        main()
    mock_asyncio_run.assert_called_once()
    assert excinfo.value.code == 130
    captured = capsys.readouterr()
    assert "\nProgramme interrompu par l'utilisateur." in captured.out
