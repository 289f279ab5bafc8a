"""
Module principal d'orchestration de l'application pyblockpovm.

Ce module relie la ligne de commande à la bibliothèque : il charge les
documents JSON, crée le contexte d'exécution (pool de processus, file de
progression), exécute la commande demandée et traduit le résultat ou
l'erreur en code de sortie :

    0 : succès, ou propriété vérifiée;
    1 : validation ou propriété en défaut (détail JSON sur stdout);
    2 : erreur d'usage;
    3 : échec numérique, verdict inconnu ou erreur inattendue.
"""

import asyncio
import contextlib
import json
import sys
from argparse import Namespace
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, Optional, Sequence

from .cli.args import parse_args
from .cli.progress import DONE, progress_bar_manager
from .core import codec
from .core.compatibility import CompatStatus, decide_compatibility
from .core.context import ExperimentContext
from .core.dynamics import blockwise_product, dual_blockwise_product
from .core.errors import NumericFailureError, PovmError, PovmInputError
from .core.experiments import (
    ConjectureSweepConfig,
    closure_frequency,
    conjecture_sweep,
    fixed_point_experiment,
    fixed_point_summary,
    monotone_to_csv,
    monotone_trajectory,
    report_to_json,
    trajectories_to_csv,
    volume_ratio_mc,
)
from .core.majorization import (
    bistochastic_from_majorization,
    classical_majorizes,
    operator_majorizes,
    sortable_order,
    state_weighted_chain,
)
from .core.povm import (
    BlockMatrix,
    DensityMatrix,
    Povm,
    analytic_volume_ratio,
    validate_block,
    validate_povm,
)
from .core.sampling import (
    BistochasticMethod,
    PovmMethod,
    SeededRng,
    random_bistochastic,
    random_density,
    random_povm,
    random_pure,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

COMPAT_EXIT_CODES = {
    CompatStatus.FEASIBLE: EXIT_OK,
    CompatStatus.INFEASIBLE: EXIT_VIOLATION,
    CompatStatus.UNKNOWN: EXIT_NUMERIC,
}

Handler = Callable[[Namespace, ExperimentContext], Awaitable[int]]


async def _run_cpu_bound_task(func: Callable[..., Any], *args: Any) -> Any:
    """Exécute une fonction bloquante hors de la boucle d'événements.

    Le `None` en premier argument utilise le `ThreadPoolExecutor` par défaut.
    """
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, func, *args)


def _emit(text: str, out: Optional[str]) -> None:
    """Écrit `text` dans `out`, ou sur la sortie standard."""
    if out is None:
        print(text)
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _emit_json(data: Dict[str, Any], out: Optional[str] = None) -> None:
    _emit(report_to_json(data), out)


def _load(path: str, expected: type, tol: Optional[float] = None) -> Any:
    document = codec.load_document(path) if tol is None else codec.load_document(path, tol)
    if not isinstance(document, expected):
        raise PovmInputError(
            f"{path} : {expected.__name__} attendu, {type(document).__name__} reçu."
        )
    return document


def _as_block(document: Any) -> BlockMatrix:
    return document.as_block() if isinstance(document, Povm) else document


# --- Commandes ---


async def _cmd_validate(args: Namespace, context: ExperimentContext) -> int:
    with open(args.file, encoding="utf-8") as handle:
        data = json.load(handle)
    if args.kind == "povm":
        povm = validate_povm([codec.matrix_from_json(e) for e in data["effects"]], args.tol)
        summary = {"valid": True, "kind": "povm", "n": povm.n, "d": povm.d}
    elif args.kind == "block":
        rows = [[codec.matrix_from_json(b) for b in row] for row in data["blocks"]]
        block = validate_block(rows, args.tol)
        summary = {
            "valid": True,
            "kind": block.kind(args.tol).value,
            "rows": block.rows,
            "cols": block.cols,
            "d": block.d,
        }
    else:
        rho = codec.density_from_dict(data)
        summary = {"valid": True, "kind": "density", "d": rho.d}
    _emit_json(summary)
    return EXIT_OK


async def _cmd_product(args: Namespace, context: ExperimentContext) -> int:
    left = codec.load_document(args.left)
    right = codec.load_document(args.right)
    product = dual_blockwise_product if args.dual else blockwise_product
    result = product(_as_block(left), _as_block(right))
    document = Povm(result.blocks[:, 0]) if isinstance(right, Povm) else result
    _emit(codec.dumps(document), args.out)
    return EXIT_OK


async def _cmd_majorize(args: Namespace, context: ExperimentContext) -> int:
    p = _load(args.p, Povm)
    q = _load(args.q, Povm)
    if args.state is not None:
        rho = _load(args.state, DensityMatrix)
        p_dist = p.probabilities(rho)
        q_dist = q.probabilities(rho)
        holds = classical_majorizes(p_dist, q_dist)
        chain = state_weighted_chain(p, rho, args.tol)
        report: Dict[str, Any] = {
            "mode": "state",
            "holds": holds,
            "p": p_dist.tolist(),
            "q": q_dist.tolist(),
            "state_weighted_chain": None if chain is None else list(chain),
        }
        if holds:
            report["bistochastic"] = bistochastic_from_majorization(p_dist, q_dist).tolist()
        _emit_json(report)
        return EXIT_OK if holds else EXIT_VIOLATION
    order = sortable_order(p, args.tol)
    if order is None:
        _emit_json({"mode": "operator", "holds": False, "sortable": False})
        return EXIT_VIOLATION
    verdict = operator_majorizes(p.permuted(order), q, args.tol)
    _emit_json(
        {
            "mode": "operator",
            "holds": verdict.holds,
            "sortable": True,
            "order": list(order),
            "k_values": list(verdict.k_values),
            "equality_residual": verdict.equality_residual,
        }
    )
    return EXIT_OK if verdict.holds else EXIT_VIOLATION


async def _cmd_compat(args: Namespace, context: ExperimentContext) -> int:
    p = _load(args.p, Povm)
    q = _load(args.q, Povm)
    verdict = await _run_cpu_bound_task(decide_compatibility, p, q, args.budget, args.tol)
    report: Dict[str, Any] = {
        "status": verdict.status.value,
        "iterations": verdict.iterations,
        "residual": verdict.residual,
    }
    if verdict.certificate is not None:
        report["certificate"] = {
            **asdict(verdict.certificate),
            "description": verdict.certificate.describe(),
        }
    if verdict.witness is not None and args.out is not None:
        codec.save_document(BlockMatrix(verdict.witness.blocks), args.out)
        report["witness"] = args.out
    if verdict.status is CompatStatus.UNKNOWN:
        print(
            f"ERREUR: budget de {args.budget} itérations épuisé "
            f"(résidu {verdict.residual:.3e}).",
            file=sys.stderr,
        )
    _emit_json(report)
    return COMPAT_EXIT_CODES[verdict.status]


async def _cmd_sample(args: Namespace, context: ExperimentContext) -> int:
    rng = SeededRng(args.seed)
    if args.kind == "povm":
        method = PovmMethod(args.method or PovmMethod.GINIBRE_RENORMALIZED)
        document = random_povm(args.n, args.d, method, rng, args.epsilon)
    elif args.kind == "bistochastic":
        method = BistochasticMethod(args.method or BistochasticMethod.FEASIBILITY_COMPLETED)
        document = random_bistochastic(args.n, args.d, method, rng, args.epsilon)
    elif args.kind == "density":
        document = random_density(args.d, rng)
    else:
        document = random_pure(args.d, rng)
    _emit(codec.dumps(document), args.out)
    return EXIT_OK


async def _cmd_volume(args: Namespace, context: ExperimentContext) -> int:
    estimate = await volume_ratio_mc(context, args.samples, args.seed, args.max_draws)
    _emit_json({**asdict(estimate), "analytic": analytic_volume_ratio()})
    return EXIT_OK


async def _cmd_fixed_points(args: Namespace, context: ExperimentContext) -> int:
    runs = await _run_cpu_bound_task(
        fixed_point_experiment, args.epsilon, args.steps, args.starts, args.seed
    )
    summary = fixed_point_summary(runs)
    _emit(trajectories_to_csv(runs), args.out)
    if args.out is not None:
        _emit_json(summary)
    return EXIT_OK if summary["converged"] else EXIT_VIOLATION


async def _cmd_conjecture(args: Namespace, context: ExperimentContext) -> int:
    config = ConjectureSweepConfig(
        n=args.n,
        d=args.d,
        samples=args.samples,
        seed=args.seed,
        reading=args.reading,
        epsilon=args.epsilon,
    )
    if args.vector_method:
        config.vector_methods = tuple(args.vector_method)
    if args.matrix_method:
        config.matrix_methods = tuple(args.matrix_method)
    report = await conjecture_sweep(context, config)
    _emit(report_to_json(report.to_dict()), args.out)
    return EXIT_OK if report.holds else EXIT_VIOLATION


async def _cmd_monotone(args: Namespace, context: ExperimentContext) -> int:
    p0 = _load(args.povm, Povm)
    matrix = _load(args.matrix, BlockMatrix)
    rho = _load(args.state, DensityMatrix)
    trajectory = monotone_trajectory(p0, matrix, rho, args.steps)
    if trajectory.stopped_at is not None:
        print(
            f"Arrêt à l'étape {trajectory.stopped_at} : la POVM n'est plus triable.",
            file=sys.stderr,
        )
    _emit(monotone_to_csv(trajectory), args.out)
    return EXIT_OK if trajectory.monotone else EXIT_VIOLATION


async def _cmd_closure(args: Namespace, context: ExperimentContext) -> int:
    estimate = await closure_frequency(
        context, args.n, args.d, args.samples, args.seed, args.method
    )
    _emit_json(asdict(estimate))
    return EXIT_OK


# Le registre des commandes : clé = commande, ou "experiment:<nom>".
COMMAND_REGISTRY: Dict[str, Handler] = {
    "validate": _cmd_validate,
    "product": _cmd_product,
    "majorize": _cmd_majorize,
    "compat": _cmd_compat,
    "sample": _cmd_sample,
    "experiment:volume": _cmd_volume,
    "experiment:fixed-points": _cmd_fixed_points,
    "experiment:conjecture": _cmd_conjecture,
    "experiment:monotone": _cmd_monotone,
    "experiment:closure": _cmd_closure,
}

# Commandes découpées en tranches, qui alimentent la barre de progression.
CHUNKED_COMMANDS = {"experiment:volume", "experiment:conjecture", "experiment:closure"}


def command_key(args: Namespace) -> str:
    """Clé de `COMMAND_REGISTRY` correspondant aux arguments analysés."""
    if args.command == "experiment":
        return f"experiment:{args.experiment}"
    return args.command


async def _run_with_progress_shutdown(
    handler: Handler, args: Namespace, context: ExperimentContext
) -> int:
    """Exécute une commande et garantit l'envoi de `DONE` à la barre de progression."""
    try:
        return await handler(args, context)
    finally:
        if context.progress_queue is not None:
            await context.progress_queue.put(DONE)


async def run_command(args: Namespace, context: ExperimentContext) -> int:
    """Exécute la commande, avec barre de progression et timeout éventuels.

    Returns:
        int: Le code de sortie de la commande.
    """
    key = command_key(args)
    handler = COMMAND_REGISTRY[key]
    async with asyncio.timeout(args.timeout):
        if context.progress_queue is None or key not in CHUNKED_COMMANDS:
            return await handler(args, context)
        try:
            async with asyncio.TaskGroup() as tg:
                tg.create_task(
                    progress_bar_manager(context.progress_queue, context.workers, key)
                )
                task = tg.create_task(_run_with_progress_shutdown(handler, args, context))
        except BaseExceptionGroup as group:
            # Seule la commande peut échouer
            raise group.exceptions[0] from None
        return task.result()


def _report_error(error: PovmError) -> None:
    print(f"ERREUR: {error}", file=sys.stderr)
    print(json.dumps(error.to_dict(), indent=2))


async def main_async(argv: Optional[Sequence[str]] = None) -> int:
    """Point d'entrée asynchrone de l'application.

    1.  Analyse les arguments (argparse sort lui-même avec le code 2).
    2.  Crée le `ProcessPoolExecutor` si `--workers` > 1.
    3.  Crée l'`ExperimentContext` partagé.
    4.  Exécute la commande et traduit les erreurs en code de sortie.

    Returns:
        int: Le code de sortie.
    """
    args = parse_args(argv)
    if args.workers < 1:
        print("ERREUR: --workers doit être ≥ 1.", file=sys.stderr)
        return EXIT_USAGE

    # Le 'with' s'assure que le pool de processus est correctement fermé à la fin.
    with contextlib.ExitStack() as stack:
        executor = None
        if args.workers > 1:
            executor = stack.enter_context(ProcessPoolExecutor(max_workers=args.workers))
        context = ExperimentContext(
            workers=args.workers,
            executor=executor,
            progress_queue=asyncio.Queue() if args.details else None,
        )
        try:
            return await run_command(args, context)
        except PovmInputError as error:
            _report_error(error)
            return EXIT_VIOLATION
        except NumericFailureError as error:
            _report_error(error)
            return EXIT_NUMERIC
        except TimeoutError:
            print(
                f"ERREUR: la commande a dépassé le timeout de {args.timeout}s.",
                file=sys.stderr,
            )
            return EXIT_NUMERIC
        except (ValueError, KeyError, OSError) as error:
            print(f"ERREUR: {error}", file=sys.stderr)
            return EXIT_USAGE
        except Exception as error:
            print(f"ERREUR inattendue: {error}", file=sys.stderr)
            return EXIT_NUMERIC
