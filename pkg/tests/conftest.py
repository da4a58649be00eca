import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from refitlab import EmbeddingModel, Vocabulary

# ---------------------------------------------------------------------------
# model builders
# ---------------------------------------------------------------------------


def build_model(words, vectors, source=None):
    return EmbeddingModel(Vocabulary(words), np.asarray(vectors), source=source)


def make_random_model(seed, n_words, dims, duplicate_every=0):
    """Random float32 model whose vocabulary order is decorrelated from
    lexicographic order; optionally plants exact duplicate rows so ties and
    their lexicographic resolution get exercised."""
    rng = np.random.default_rng(seed)
    tokens = [f"w{i:04d}" for i in range(n_words)]
    rng.shuffle(tokens)
    vectors = rng.standard_normal((n_words, dims)).astype(np.float32)
    if duplicate_every:
        for i in range(duplicate_every, n_words, duplicate_every):
            vectors[i] = vectors[i - duplicate_every]
    return build_model(tokens, vectors)


def make_cluster_model(seed=7, n_words=1000, dims=50, n_clusters=8, spread=0.3):
    """Synthetic model with planted clusters: every word sits near one of
    n_clusters well-separated centers."""
    rng = np.random.default_rng(seed)
    centers = 4.0 * rng.standard_normal((n_clusters, dims))
    words, rows = [], []
    for i in range(n_words):
        c = i % n_clusters
        words.append(f"c{c}_w{i:04d}")
        rows.append(centers[c] + spread * rng.standard_normal(dims))
    return build_model(words, np.asarray(rows, dtype=np.float32))


SCIENCE_CLUSTERS = {
    "hard_science": [
        "physics", "science", "astronomy", "biology", "biochemistry",
        "biophysics", "zoology", "chemistry", "geology", "paleontology",
    ],
    "soft_science": [
        "anthropology", "sociology", "psychology", "linguistics",
        "history", "mathematics",
    ],
    "medical": ["nurse", "registered_nurse", "doctor", "medic", "surgeon"],
    "people": ["he", "she", "king", "queen"],
    "filler": [f"filler{i:02d}" for i in range(15)],
}


def make_science_model(seed=42, dims=16, spread=0.6):
    """Small deterministic model with themed clusters; used by the service
    tests and as the workbench fixture."""
    rng = np.random.default_rng(seed)
    words, rows = [], []
    for cluster in SCIENCE_CLUSTERS.values():
        center = 3.0 * rng.standard_normal(dims)
        for word in cluster:
            words.append(word)
            rows.append(center + spread * rng.standard_normal(dims))
    return build_model(words, np.asarray(rows, dtype=np.float32))


def word2vec_binary_bytes(words, matrix):
    """Hand-built word2vec binary payload (independent of save_model)."""
    matrix = np.asarray(matrix, dtype="<f4")
    out = bytearray()
    out += f"{len(words)} {matrix.shape[1]}\n".encode("ascii")
    for word, row in zip(words, matrix):
        out += word.encode("utf-8") + b" " + row.tobytes() + b"\n"
    return bytes(out)


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def toy_abc():
    """The 3-word toy: a=[1,0], b=[0.9,0.1], c=[0,1]."""
    return build_model(["a", "b", "c"], [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])


@pytest.fixture
def king_queen_bytes():
    return word2vec_binary_bytes(["king", "queen"], [[1, 0, 0], [0, 1, 0]])


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "setup" and report.skipped:
        _acceptance_outcomes[name] = "SKIP"
    elif report.when == "call":
        _acceptance_outcomes[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_outcomes.items():
        terminalreporter.write_line(f"{outcome:4s}  {name}")
