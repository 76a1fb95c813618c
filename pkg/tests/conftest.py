import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from burstlm import corpus, lm, synth


def small_corpus_documents(seed: int = 11, n_documents: int = 30):
    """Bursty toy corpus used across the model and evaluation tests."""
    spec = synth.zipf_corpus_spec(
        vocab_size=40,
        n_tokens=300,
        n_documents=n_documents,
        doc_length=(120, 200),
        seed=seed,
        burstiness=2.5,
        n_collocations=4,
    )
    return synth.generate(spec)


@pytest.fixture(scope="session")
def toy_counts():
    documents = small_corpus_documents()
    vocabulary = corpus.build_vocabulary(documents)
    return corpus.count_events(documents, vocabulary)


@pytest.fixture(scope="session")
def toy_model(toy_counts):
    return lm.fit_model(toy_counts, n_tokens=300)
