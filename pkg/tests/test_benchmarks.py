"""
Suite de tests de performance (benchmarks) des opérations coûteuses.
"""

from pyblockpovm.core.compatibility import decide_compatibility
from pyblockpovm.core.dynamics import blockwise_product
from pyblockpovm.core.experiments import _volume_chunk
from pyblockpovm.core.sampling import PovmMethod, SeededRng, random_povm, random_stochastic

# Taille des grilles des benchmarks. Assez grande pour être significative,
# mais assez petite pour ne pas prendre trop de temps.
BENCHMARK_N = 4
BENCHMARK_D = 3


def test_benchmark_blockwise_product(benchmark):
    """Benchmark du produit par blocs de deux matrices stochastiques."""
    rng = SeededRng(1)
    left = random_stochastic(BENCHMARK_N, BENCHMARK_D, rng)
    right = random_stochastic(BENCHMARK_N, BENCHMARK_D, rng)
    benchmark(blockwise_product, left, right)


def test_benchmark_decide_compatibility(benchmark):
    """Benchmark de la décision de compatibilité d'une paire aléatoire."""
    rng = SeededRng(2)
    p = random_povm(BENCHMARK_N, 2, PovmMethod.GINIBRE_RENORMALIZED, rng)
    q = random_povm(BENCHMARK_N, 2, PovmMethod.NEAR_UNIFORM, rng)
    benchmark(decide_compatibility, p, q, 500)


def test_benchmark_volume_chunk(benchmark):
    """Benchmark d'une tranche Monte-Carlo du volume de Δ₂,₂."""
    benchmark(_volume_chunk, (3, 10_000, 1_000_000))
