import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eigengestures import SynthConfig, preprocess_corpus, svd, synthesize_corpus

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def small_corpus():
    """4 types x 5 realisations, rank 3, light noise."""
    return synthesize_corpus(
        SynthConfig(n_types=4, n_realisations=5, true_rank=3, noise_sigma=0.02, seed=11)
    )


@pytest.fixture(scope="session")
def small_run(small_corpus):
    """Preprocessed matrix, tensor, and decomposition of the small corpus."""
    matrix, tensor = preprocess_corpus(small_corpus)
    return matrix, tensor, svd(matrix)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)
