"""
Module des expériences reproductibles.

Regroupe l'estimation Monte-Carlo du volume relatif de Δ₂,₂, la dynamique
des points fixes à deux issues, le balayage de la conjecture des profils de
normes, les trajectoires du monotone entropique et la fréquence de
fermeture du produit bistochastique. Les boucles Monte-Carlo sont découpées
en tranches de graines dérivées et réparties par `parallel.run_chunks`.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .context import ExperimentContext
from .dynamics import (
    blockwise_product,
    evolve,
    star_first_effect,
    xi_combination,
)
from .errors import (
    CombinatorialLimitError,
    EstimateUndefinedError,
    PovmInputError,
    UnsupportedDimensionError,
)
from .linalg import commutator, dagger, eigvals_h, hermitian, hs_norm, identity
from .majorization import (
    CONJECTURE_MAX_N,
    READINGS,
    conjecture_check,
    entropy_monotone,
    sortable_order,
    xi_shrinks_cone_radius,
)
from .parallel import run_chunks, split_count
from .povm import BlockMatrix, DensityMatrix, Povm, pauli_matrices, validate_effect
from .sampling import (
    BistochasticMethod,
    PovmMethod,
    SeededRng,
    derive_seed,
    ginibre_effect,
    random_bistochastic,
    random_povm,
)

VOLUME_BATCH = 65536
DRAWS_PER_SAMPLE = 100
FIXED_POINT_TOL = 1e-6
CLOSURE_TOL = 1e-8
MONOTONE_TOL = 1e-9

_PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)
_MINUS = np.array([1.0, -1.0]) / math.sqrt(2.0)


class Product(str, Enum):
    STAR = "star"
    STAR_DUAL = "star_dual"


@dataclass(frozen=True)
class McEstimate:
    """Estimation de Bernoulli.

    Attributes:
        mean (float): Fréquence observée.
        std_error (float): √(mean·(1−mean)/samples).
        samples (int): Nombre d'essais retenus.
        seed (int): Graine maîtresse.
        draws (int): Nombre total de tirages, rejets compris.
    """

    mean: float
    std_error: float
    samples: int
    seed: int
    draws: int = 0

    @classmethod
    def from_counts(cls, hits: int, samples: int, seed: int, draws: int = 0) -> "McEstimate":
        if samples <= 0:
            raise EstimateUndefinedError("Aucun essai retenu : estimation indéfinie.")
        mean = hits / samples
        return cls(mean, math.sqrt(mean * (1.0 - mean) / samples), samples, seed, draws)


# --- Volume de Δ₂,₂ ---


def _volume_chunk(payload: Tuple[int, int, int]) -> Tuple[int, int, int]:
    """Tranche de tirages (t, τ⃗) uniformes sur [0, 2] × [−2, 2]³.

    Returns:
        Tuple[int, int, int]: (tirages dans le cône |τ⃗| ≤ t, dont dans Δ₂,₂,
        tirages effectués).
    """
    seed, target, max_draws = payload
    rng = SeededRng(seed)
    cone_hits = delta_hits = draws = 0
    while cone_hits < target and draws < max_draws:
        size = min(VOLUME_BATCH, max_draws - draws)
        t = rng.uniform(size, 0.0, 2.0)
        radius = np.linalg.norm(rng.uniform((size, 3), -2.0, 2.0), axis=1)
        cone = radius <= t
        inside = cone & (radius <= 2.0 - t)
        positions = np.nonzero(cone)[0]
        missing = target - cone_hits
        if positions.size >= missing:
            last = positions[missing - 1]
            delta_hits += int(np.count_nonzero(inside[: last + 1]))
            cone_hits = target
            draws += int(last) + 1
            break
        cone_hits += int(positions.size)
        delta_hits += int(np.count_nonzero(inside))
        draws += size
    return cone_hits, delta_hits, draws


async def volume_ratio_mc(
    context: ExperimentContext,
    samples: int,
    seed: int,
    max_draws: Optional[int] = None,
) -> McEstimate:
    """Estime la fraction du cône PSD de trace ≤ 2 occupée par Δ₂,₂ (attendu 1/8).

    Avec P = (t·1 + τ⃗·σ⃗)/2, P ≥ 0 équivaut à |τ⃗| ≤ t et P ≤ 1 à
    |τ⃗| ≤ 2 − t; le jacobien du changement de coordonnées est constant.

    Args:
        context (ExperimentContext): Répartition des tranches.
        samples (int): Nombre de tirages à retenir dans le cône.
        seed (int): Graine maîtresse; la tranche k utilise derive_seed(seed, k).
        max_draws (Optional[int]): Plafond de tirages (100·samples par défaut).

    Returns:
        McEstimate: La fréquence de Δ₂,₂ parmi les tirages retenus.

    Raises:
        EstimateUndefinedError: Si aucun tirage n'atteint le cône.
    """
    if samples < 1:
        raise ValueError(f"samples doit être ≥ 1, reçu {samples}.")
    max_draws = DRAWS_PER_SAMPLE * samples if max_draws is None else max_draws
    targets = split_count(samples, context.workers)
    budgets = split_count(max_draws, context.workers)
    payloads = [
        (derive_seed(seed, k), target, budget)
        for k, (target, budget) in enumerate(zip(targets, budgets))
    ]
    results = await run_chunks(context, _volume_chunk, payloads)
    cone_hits = sum(r[0] for r in results)
    delta_hits = sum(r[1] for r in results)
    draws = sum(r[2] for r in results)
    if cone_hits == 0:
        raise EstimateUndefinedError(
            f"Aucun tirage dans le cône après {draws} essais : estimation indéfinie."
        )
    return McEstimate.from_counts(delta_hits, cone_hits, seed, draws)


# --- Points fixes à deux issues ---


@dataclass(frozen=True)
class TrajectoryStep:
    iteration: int
    t: float
    tau: float
    tau_sigma_z: float
    offdiag_plusminus: float


@dataclass(frozen=True)
class Trajectory:
    """Suite des coordonnées de P_k, premier effet après k étapes."""

    steps: Tuple[TrajectoryStep, ...]
    final: np.ndarray = field(compare=False, repr=False)

    @property
    def last(self) -> TrajectoryStep:
        return self.steps[-1]


@dataclass(frozen=True)
class FixedPointRun:
    """Une trajectoire de l'expérience des points fixes et ses diagnostics."""

    start: int
    product: Product
    trace: float
    trajectory: Trajectory
    commutator_norm: float

    @property
    def converged(self) -> bool:
        return self.trajectory.last.offdiag_plusminus <= FIXED_POINT_TOL


def qubit_coordinates(effect: np.ndarray, iteration: int = 0) -> TrajectoryStep:
    """Coordonnées d'un effet 2×2 : trace, λ₊ − λ₋, tr(σ_Z P) et |⟨+|P|−⟩|."""
    values = eigvals_h(effect)
    sigma_z = pauli_matrices()[2]
    return TrajectoryStep(
        iteration=iteration,
        t=float(np.real(np.trace(effect))),
        tau=float(values[-1] - values[0]),
        tau_sigma_z=float(np.real(np.trace(sigma_z @ effect))),
        offdiag_plusminus=float(abs(_PLUS @ effect @ _MINUS)),
    )


def noisy_identity_effect(epsilon: float) -> np.ndarray:
    """Effet 1 − 2ε|−⟩⟨−| de l'identité bruitée.

    Raises:
        ValueError: Si ε ∉ [0, 1/2].
    """
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"ε doit être dans [0, 1/2], reçu {epsilon}.")
    return hermitian(identity(2) - 2.0 * epsilon * np.outer(_MINUS, _MINUS))


def commuting_ansatz(
    a: float, b: float, unitary: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Paire (B, P) = (U diag(1, 1−a) U†, U diag((1+b)/2, 1/2) U†).

    Les supports de 1 − B et de P − 1/2 sont orthogonaux : P est un point
    fixe exact des deux produits.
    """
    if not 0.0 <= a <= 1.0 or not -1.0 <= b <= 1.0:
        raise ValueError(f"Paramètres hors domaine : a={a} ∈ [0, 1], b={b} ∈ [−1, 1].")
    u = identity(2) if unitary is None else np.asarray(unitary, dtype=np.complex128)
    effect_b = u @ np.diag([1.0, 1.0 - a]) @ dagger(u)
    effect_p = u @ np.diag([(1.0 + b) / 2.0, 0.5]) @ dagger(u)
    return hermitian(effect_b), hermitian(effect_p)


def fixed_point_run(
    effect_b: np.ndarray,
    effect_p0: np.ndarray,
    steps: int,
    product: Product | str = Product.STAR,
) -> Trajectory:
    """Itère P_{k+1} = premier effet de ((B,1−B),(1−B,B)) ⋆ (P_k, 1−P_k).

    Args:
        effect_b (np.ndarray): L'effet B (2×2).
        effect_p0 (np.ndarray): L'effet initial P_0 (2×2).
        steps (int): Nombre d'itérations.
        product (Product | str): `star` (premier effet Ξ(P, B)) ou
            `star_dual` (Ξ(B, P)).

    Returns:
        Trajectory: Les steps + 1 coordonnées, itération 0 comprise.

    Raises:
        UnsupportedDimensionError: Si d ≠ 2.
        EffectRangeError: Si B ou P_0 sort de [0, 1].
    """
    b = validate_effect(effect_b)
    p = validate_effect(effect_p0)
    if b.shape != (2, 2) or p.shape != (2, 2):
        raise UnsupportedDimensionError("La dynamique des points fixes requiert d = 2.")
    if steps < 0:
        raise ValueError(f"steps doit être ≥ 0, reçu {steps}.")
    step = star_first_effect if Product(product) is Product.STAR else xi_combination
    records = [qubit_coordinates(p, 0)]
    for k in range(1, steps + 1):
        # Ξ reste dans [0, 1] à l'arrondi près
        p = step(b, _clip_effect(p))
        records.append(qubit_coordinates(p, k))
    return Trajectory(tuple(records), p)


def _clip_effect(effect: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(effect)
    return hermitian((vectors * np.clip(values, 0.0, 1.0)) @ dagger(vectors))


def fixed_point_experiment(
    epsilon: float, steps: int, starts: int, seed: int
) -> List[FixedPointRun]:
    """Lance les deux produits depuis `starts` effets initiaux de traces étagées.

    Le départ k a la trace (k + 1/2)/starts et est tiré de Ginibre avec la
    graine derive_seed(seed, k).
    """
    if starts < 1:
        raise ValueError(f"starts doit être ≥ 1, reçu {starts}.")
    effect_b = noisy_identity_effect(epsilon)
    runs = []
    for k in range(starts):
        trace = (k + 0.5) / starts
        start = ginibre_effect(2, SeededRng(derive_seed(seed, k)), trace=trace)
        for product in Product:
            trajectory = fixed_point_run(effect_b, start, steps, product)
            runs.append(
                FixedPointRun(
                    start=k,
                    product=product,
                    trace=trace,
                    trajectory=trajectory,
                    commutator_norm=hs_norm(commutator(effect_b, trajectory.final)),
                )
            )
    return runs


# --- Balayage de la conjecture ---


@dataclass
class ConjectureSweepConfig:
    """Paramètres d'un balayage.

    Les méthodes sont appariées en produit cartésien et l'échantillon k
    utilise la paire k modulo le nombre de paires.
    """

    n: int
    d: int
    samples: int
    seed: int = 0
    vector_methods: Tuple[str, ...] = tuple(m.value for m in PovmMethod)
    matrix_methods: Tuple[str, ...] = tuple(m.value for m in BistochasticMethod)
    reading: str = "joint"
    epsilon: float = 0.01
    tol: float = 1e-8

    def pairings(self) -> List[Tuple[str, str]]:
        return [(v, m) for v in self.vector_methods for m in self.matrix_methods]


@dataclass(frozen=True)
class SweepViolation:
    sample: int
    seed: int
    vector_method: str
    matrix_method: str
    ordering_q: Tuple[int, ...]
    margin: float


@dataclass
class ConjectureSweepReport:
    """Rapport du balayage, avec les graines de rejeu des violations."""

    config: ConjectureSweepConfig
    total: int = 0
    violations: List[SweepViolation] = field(default_factory=list)
    breakdown: Dict[str, Dict[str, int]] = field(default_factory=dict)
    worst_margin: float = math.inf
    shrinkage_checked: int = 0
    shrinkage_failures: List[int] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations and not self.shrinkage_failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": asdict(self.config),
            "total": self.total,
            "holds": self.holds,
            "worst_margin": self.worst_margin,
            "violations": [asdict(v) for v in self.violations],
            "breakdown": self.breakdown,
            "shrinkage_checked": self.shrinkage_checked,
            "shrinkage_failures": self.shrinkage_failures,
        }


def _sample_pair(
    config: ConjectureSweepConfig, sample: int
) -> Tuple[int, str, str, Povm, BlockMatrix]:
    pairings = config.pairings()
    vector_method, matrix_method = pairings[sample % len(pairings)]
    seed = derive_seed(config.seed, sample)
    rng = SeededRng(seed)
    p = random_povm(config.n, config.d, vector_method, rng, config.epsilon)
    b = random_bistochastic(config.n, config.d, matrix_method, rng, config.epsilon)
    return seed, vector_method, matrix_method, p, b


def _conjecture_chunk(
    payload: Tuple[ConjectureSweepConfig, int, int],
) -> List[Dict[str, Any]]:
    """Évalue les échantillons [start, stop) d'un balayage."""
    config, start, stop = payload
    records = []
    for sample in range(start, stop):
        seed, vector_method, matrix_method, p, b = _sample_pair(config, sample)
        verdict = conjecture_check(p, evolve(b, p), config.tol, config.reading)
        shrinks = None
        if config.n == 2:
            shrinks = xi_shrinks_cone_radius(b.blocks[0, 0], p.effects[0])
        records.append(
            {
                "sample": sample,
                "seed": seed,
                "vector_method": vector_method,
                "matrix_method": matrix_method,
                "verdict": verdict,
                "shrinks": shrinks,
            }
        )
    return records


async def conjecture_sweep(
    context: ExperimentContext, config: ConjectureSweepConfig
) -> ConjectureSweepReport:
    """Tire des paires (P, B), calcule Q = B*P et teste la conjecture.

    Pour n = 2, chaque échantillon vérifie aussi la contraction
    ‖Ξ(B₁₁, P₁) − 1/2‖₂ ≤ ‖P₁ − 1/2‖₂. Une violation est un résultat
    rapporté, pas une erreur.

    Raises:
        CombinatorialLimitError: Si n > 6.
    """
    if config.n > CONJECTURE_MAX_N:
        raise CombinatorialLimitError(config.n, CONJECTURE_MAX_N)
    if config.reading not in READINGS:
        raise ValueError(f"Lecture inconnue '{config.reading}', attendue parmi {READINGS}.")
    if config.samples < 1:
        raise ValueError(f"samples doit être ≥ 1, reçu {config.samples}.")
    bounds = np.cumsum([0] + split_count(config.samples, context.workers))
    payloads = [
        (config, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    ]
    report = ConjectureSweepReport(config)
    for chunk in await run_chunks(context, _conjecture_chunk, payloads):
        for record in chunk:
            verdict = record["verdict"]
            key = f"{record['vector_method']}/{record['matrix_method']}"
            entry = report.breakdown.setdefault(key, {"samples": 0, "violations": 0})
            entry["samples"] += 1
            report.total += 1
            report.worst_margin = min(report.worst_margin, verdict.worst_margin)
            for violation in verdict.violations:
                entry["violations"] += 1
                report.violations.append(
                    SweepViolation(
                        sample=record["sample"],
                        seed=record["seed"],
                        vector_method=record["vector_method"],
                        matrix_method=record["matrix_method"],
                        ordering_q=violation.ordering_q,
                        margin=violation.margin,
                    )
                )
            if record["shrinks"] is not None:
                report.shrinkage_checked += 1
                if not record["shrinks"]:
                    report.shrinkage_failures.append(record["sample"])
    return report


# --- Monotone entropique ---


@dataclass(frozen=True)
class MonotoneTrajectory:
    """Valeurs de E_ρ le long de P, B*P, B*(B*P), ...

    Attributes:
        values (Tuple[float, ...]): E_ρ sur le préfixe où P_k est triable.
        stopped_at (Optional[int]): Première étape non triable, le cas échéant.
        monotone (bool): Vrai si E_ρ(P_k) ≤ E_ρ(P_{k+1}) + 1e-9 sur tout le
            préfixe.
    """

    values: Tuple[float, ...]
    stopped_at: Optional[int]
    monotone: bool


def _non_decreasing(values: Sequence[float], tol: float) -> bool:
    return all(
        a == -math.inf or a <= b + tol for a, b in zip(values[:-1], values[1:])
    )


def monotone_trajectory(
    p0: Povm,
    matrix: BlockMatrix,
    rho: DensityMatrix,
    steps: int,
    tol: float = MONOTONE_TOL,
) -> MonotoneTrajectory:
    """Suit E_ρ le long de l'itération P_{k+1} = B*P_k.

    La suite s'arrête à la première étape non triable; cet arrêt est un
    résultat et non une erreur.

    Raises:
        PovmInputError: Si B n'est pas bistochastique ou P_0 pas triable.
    """
    if not matrix.is_bistochastic(CLOSURE_TOL):
        raise PovmInputError("La matrice doit être bistochastique par blocs.")
    if sortable_order(p0) is None:
        raise PovmInputError("La POVM initiale doit être triable.")
    current = p0
    values = [entropy_monotone(current, rho)]
    stopped_at = None
    for step in range(1, steps + 1):
        current = evolve(matrix, current)
        if sortable_order(current) is None:
            stopped_at = step
            break
        values.append(entropy_monotone(current, rho))
    return MonotoneTrajectory(tuple(values), stopped_at, _non_decreasing(values, tol))


# --- Fermeture du produit bistochastique ---


def _closure_chunk(payload: Tuple[int, int, str, int, int, int]) -> int:
    n, d, method, seed, start, stop = payload
    hits = 0
    for sample in range(start, stop):
        rng = SeededRng(derive_seed(seed, sample))
        left = random_bistochastic(n, d, method, rng)
        right = random_bistochastic(n, d, method, rng)
        hits += blockwise_product(left, right).is_bistochastic(CLOSURE_TOL)
    return hits


async def closure_frequency(
    context: ExperimentContext,
    n: int,
    d: int,
    samples: int,
    seed: int,
    method: BistochasticMethod | str = BistochasticMethod.FEASIBILITY_COMPLETED,
) -> McEstimate:
    """Fréquence à laquelle A*B reste bistochastique pour A, B bistochastiques.

    A*B est toujours stochastique; seules ses sommes de lignes peuvent
    s'écarter de l'identité. Le résultat est rapporté, pas asserté.
    """
    if samples < 1:
        raise ValueError(f"samples doit être ≥ 1, reçu {samples}.")
    method = BistochasticMethod(method).value
    bounds = np.cumsum([0] + split_count(samples, context.workers))
    payloads = [
        (n, d, method, seed, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    hits = sum(await run_chunks(context, _closure_chunk, payloads))
    return McEstimate.from_counts(hits, samples, seed, samples)


# --- Sorties ---

TRAJECTORY_COLUMNS = (
    "start",
    "product",
    "trace",
    "iteration",
    "t",
    "tau",
    "tau_sigma_z",
    "offdiag_plusminus",
)
MONOTONE_COLUMNS = ("step", "entropy")


def _write_rows(columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buffer.getvalue()


def trajectories_to_csv(runs: Sequence[FixedPointRun]) -> str:
    """Table CSV des trajectoires, une ligne par itération."""
    rows = [
        {
            "start": run.start,
            "product": run.product.value,
            "trace": run.trace,
            **asdict(step),
        }
        for run in runs
        for step in run.trajectory.steps
    ]
    return _write_rows(TRAJECTORY_COLUMNS, rows)


def monotone_to_csv(trajectory: MonotoneTrajectory) -> str:
    """Table CSV (step, entropy) du préfixe triable."""
    rows = [{"step": k, "entropy": v} for k, v in enumerate(trajectory.values)]
    return _write_rows(MONOTONE_COLUMNS, rows)


def report_to_json(report: Dict[str, Any]) -> str:
    """Sérialise un rapport avec un ordre de clés fixe."""
    return json.dumps(report, indent=2, sort_keys=True)


def fixed_point_summary(runs: Sequence[FixedPointRun]) -> Dict[str, Any]:
    """Résumé JSON : convergence et commutateur final de chaque trajectoire."""
    return {
        "runs": [
            {
                "start": run.start,
                "product": run.product.value,
                "trace": run.trace,
                "converged": run.converged,
                "offdiag_plusminus": run.trajectory.last.offdiag_plusminus,
                "commutator_norm": run.commutator_norm,
            }
            for run in runs
        ],
        "converged": all(run.converged for run in runs),
    }
