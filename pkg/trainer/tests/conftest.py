import os

import pytest

from uavtrainer.ingest import ingest_dataset
from uavtrainer.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Ingested 10+2-flight corpus shared across the module tests."""
    root = tmp_path_factory.mktemp("small")
    raw = os.path.join(root, "raw")
    corpus = os.path.join(root, "corpus")
    generate_corpus(raw, SynthConfig(n_triangular=10, n_random=2, seed=501))
    ingest_dataset(raw, corpus)
    return corpus
