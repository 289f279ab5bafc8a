"""
Tests unitaires pour le module `pyblockpovm.cli.args`.
"""

import sys
from unittest.mock import patch

import pytest
from pyblockpovm.cli.args import parse_args


@pytest.fixture
def setup_sys_argv():
    """
    Fixture pour mocker `sys.argv` avant chaque test.
    Ceci est nécessaire pour isoler les tests de la ligne de commande réelle.
    """
    original_argv = sys.argv
    yield
    sys.argv = original_argv


def test_parse_args_global_defaults(setup_sys_argv):
    """
    Vérifie les valeurs par défaut des options globales.
    """
    with patch.object(sys, 'argv', ['pyblockpovm', 'validate', 'povm', 'p.json']):
        args = parse_args()
        assert args.command == "validate"
        assert args.kind == "povm"
        assert args.file == "p.json"
        assert args.workers == 1
        assert args.timeout is None
        assert not args.details


def test_parse_args_fixed_points_defaults(setup_sys_argv):
    """
    Vérifie les valeurs par défaut de `experiment fixed-points`.
    """
    with patch.object(sys, 'argv', ['pyblockpovm', 'experiment', 'fixed-points', '--seed', '7']):
        args = parse_args()
        assert args.experiment == "fixed-points"
        assert args.epsilon == 0.01
        assert args.steps == 5000
        assert args.starts == 10
        assert args.seed == 7
        assert args.out is None


def test_parse_args_all_options(setup_sys_argv):
    """
    Vérifie que tous les arguments fournis sont correctement interprétés.
    """
    with patch.object(sys, 'argv', [
        'pyblockpovm',
        '--workers', '4',
        '--timeout', '5.5',
        '--details',
        'experiment', 'conjecture',
        '--n', '3',
        '--d', '2',
        '--samples', '100',
        '--seed', '1',
        '--reading', 'per_k',
        '--vector-method', 'near_extremal',
        '--vector-method', 'near_uniform',
        '--matrix-method', 'circulant',
    ]):
        args = parse_args()
        assert args.workers == 4
        assert args.timeout == 5.5
        assert args.details
        assert args.reading == "per_k"
        assert args.vector_method == ["near_extremal", "near_uniform"]
        assert args.matrix_method == ["circulant"]


def test_parse_args_explicit_argv():
    args = parse_args(['compat', 'p.json', 'q.json', '--budget', '50'])
    assert args.budget == 50
    assert args.tol == pytest.approx(1e-8)


@pytest.mark.parametrize("argv", [
    ['pyblockpovm', 'validate', 'matrix', 'x.json'],
    ['pyblockpovm', 'experiment', 'conjecture', '--n', '2', '--d', '2',
     '--samples', '1', '--seed', '0', '--reading', 'some_k'],
    ['pyblockpovm', 'sample', 'povm', '--d', '2', '--seed', '0', '--method', 'sdp'],
    ['pyblockpovm'],
])
def test_parse_args_invalid(setup_sys_argv, argv):
    """
    Vérifie qu'un choix invalide ou une sous-commande manquante lève une erreur.
    """
    with patch.object(sys, 'argv', argv):
        with pytest.raises(SystemExit) as excinfo:
            parse_args()
        assert excinfo.value.code == 2


def test_parse_args_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        parse_args(['--version'])
    assert excinfo.value.code == 0
    assert "pyblockpovm 0.1.0" in capsys.readouterr().out
