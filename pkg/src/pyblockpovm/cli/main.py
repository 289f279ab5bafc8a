"""
Point d'entrée principal pour l'interface en ligne de commande (CLI).

Ce module lance la logique applicative asynchrone et transmet son code de
sortie au système.
"""

import asyncio
import sys

from pyblockpovm.app import main_async

EXIT_INTERRUPTED = 130


def main() -> None:
    """Point d'entrée synchrone de la commande `pyblockpovm`.

    Démarre `main_async` avec `asyncio.run()` puis quitte avec le code
    retourné. Une interruption clavier produit un message et le code 130.
    """
    try:
        code = asyncio.run(main_async())
    except KeyboardInterrupt:
        print("\nProgramme interrompu par l'utilisateur.")
        code = EXIT_INTERRUPTED
    sys.exit(code)


if __name__ == "__main__":
    main()
