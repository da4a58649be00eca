"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary. The Google News reproduction
is skipped unless the public vectors are on disk (see _google_news_path).
"""

import os
import threading
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from refitlab import (
    ZeroVectorError,
    ActionLog,
    Query,
    RefitParams,
    RefitRequest,
    ServiceConfig,
    build_refit_graph,
    build_state,
    cosine,
    create_app,
    distance_matrix,
    load_word2vec_binary,
    load_word2vec_text,
    refit,
    refit_step,
    replay,
    save_model,
    search,
    undo,
)
from refitlab import refitting as refit_engine
from conftest import make_cluster_model, make_random_model, make_science_model
from oracles import oracle_fixed_point, oracle_refit_sweep, oracle_search

MODES = ("single", "additive", "subtractive", "analogy")
TERMS_PER_MODE = {"single": 1, "additive": 2, "subtractive": 2, "analogy": 3}


def test_codec_round_trip():
    # 100 seeded random models (<=500 words, <=64 dims): binary save/load is
    # bit-exact, text round-trip within 1e-6 per component; under 10 s
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    for case in range(100):
        n_words = int(rng.integers(1, 501))
        dims = int(rng.integers(1, 65))
        model = make_random_model(case, n_words, dims)
        binary = load_word2vec_binary(save_model(model, "binary"))
        assert binary.vocab == model.vocab
        assert binary.raw.tobytes() == model.raw.tobytes()
        text = load_word2vec_text(save_model(model, "text"))
        assert text.vocab == model.vocab
        err = np.max(
            np.abs(text.raw.astype(np.float64) - model.raw.astype(np.float64))
        )
        assert err <= 1e-6
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"codec round-trip took {elapsed:.1f}s"


def test_search_oracle_equivalence():
    # 200 random (model, query) cases across all four modes against the naive
    # all-pairs oracle: identical ranked token lists including lexicographic
    # tie-breaks (duplicate rows are planted to force exact ties); under 30 s
    started = time.monotonic()
    rng = np.random.default_rng(77)
    for case in range(200):
        n_words = int(rng.integers(5, 201))
        dims = int(rng.integers(2, 33))
        duplicate_every = int(rng.choice([0, 3, 5]))
        model = make_random_model(10_000 + case, n_words, dims, duplicate_every)
        words = model.vocab.words
        mode = MODES[case % 4]
        ids = rng.choice(n_words, size=TERMS_PER_MODE[mode], replace=False)
        terms = tuple(words[i] for i in ids)
        k = int(rng.integers(1, n_words + 3))
        exclude = bool(case % 2)
        try:
            results = search(model, Query(mode, terms, k=k, exclude_inputs=exclude))
        except ZeroVectorError:
            # planted duplicates can cancel a subtractive composite exactly;
            # the oracle must agree the composite is the zero vector
            raw64 = model.raw.astype(np.float64)
            ids64 = [model.vocab.index[t] for t in terms]
            assert not np.any(raw64[ids64[0]] - raw64[ids64[1]])
            continue
        expected = oracle_search(model, mode, terms, k, exclude)
        assert [t for t, _ in results.hits] == [t for t, _ in expected], (
            f"case {case}: mode={mode} terms={terms} k={k} exclude={exclude}"
        )
        for (_, got), (_, want) in zip(results.hits, expected):
            assert abs(got - want) <= 1e-12
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"search oracle equivalence took {elapsed:.1f}s"


def _random_step_instance(rng, seed, mode):
    n_words = int(rng.integers(4, 21))
    dims = int(rng.integers(1, 9))
    model = make_random_model(seed, n_words, dims)
    words = model.vocab.words
    size = int(rng.integers(2, min(6, n_words)))
    chosen = [words[i] for i in rng.choice(n_words, size=size, replace=False)]
    scheme = "inverse_degree" if rng.integers(2) else "uniform"
    alpha = float(rng.uniform(0.0, 2.0))
    params = RefitParams(alpha=alpha, beta_scheme=scheme)
    if mode == "targeted":
        request = RefitRequest("targeted", tuple(chosen[1:]), target=chosen[0], params=params)
    else:
        request = RefitRequest("roundrobin", tuple(chosen), params=params)
    return model, request


def test_refit_step_oracle():
    # one Gauss-Seidel sweep on 25 targeted and 25 round-robin instances
    # (<=20 words, <=8 dims) matches the literal update formula to 1e-12
    rng = np.random.default_rng(5150)
    for case in range(50):
        mode = "targeted" if case < 25 else "roundrobin"
        model, request = _random_step_instance(rng, 20_000 + case, mode)
        graph = build_refit_graph(model, request)
        node_ids = sorted({i for i, _, _ in graph.edges} | {j for _, j, _ in graph.edges})
        vectors = {i: model.raw[i].astype(np.float64) for i in node_ids}
        originals = {i: vectors[i].copy() for i in graph.update_ids}
        expected = oracle_refit_sweep(
            vectors, originals, graph.edges, graph.update_ids, request.params.alpha
        )
        refit_step(vectors, originals, graph.edges, graph.update_ids, request.params.alpha)
        for i in graph.update_ids:
            assert np.max(np.abs(vectors[i] - expected[i])) <= 1e-12, f"case {case}"


def test_monotone_descent_and_targeted_fixed_point():
    # 100 random refit requests: the objective trace never increases (1e-9
    # per step); targeted runs converge to the closed-form minimizer
    # (alpha q_hat + sum beta q_j) / (alpha + sum beta) within 1e-9
    rng = np.random.default_rng(31337)
    for case in range(100):
        mode = "targeted" if case % 2 else "roundrobin"
        model, request = _random_step_instance(rng, 30_000 + case, mode)
        pristine = model.raw.copy()
        report = refit(model, request)
        trace = report.objective_trace
        assert all(
            trace[i + 1] <= trace[i] + 1e-9 for i in range(len(trace) - 1)
        ), f"case {case}: trace increased"
        if mode != "targeted":
            continue
        target_id = model.resolve(request.target)
        group_ids = [model.resolve(t) for t in request.group]
        # anchors stay fixed in targeted mode
        for g in group_ids:
            assert np.array_equal(model.raw[g], pristine[g])
        beta = (
            1.0 / len(group_ids)
            if request.params.beta_scheme == "inverse_degree"
            else 1.0
        )
        fixed_point = oracle_fixed_point(
            pristine[target_id].astype(np.float64),
            [pristine[g].astype(np.float64) for g in group_ids],
            [beta] * len(group_ids),
            request.params.alpha,
        )
        # iterate at float64 (the stored row adds only float32 rounding)
        graph = build_refit_graph(model, request)
        vectors = {i: pristine[i].astype(np.float64) for i in
                   sorted({i for i, _, _ in graph.edges} | {j for _, j, _ in graph.edges})}
        originals = {i: vectors[i].copy() for i in graph.update_ids}
        for _ in range(request.params.iterations):
            refit_step(vectors, originals, graph.edges, graph.update_ids, request.params.alpha)
        assert np.max(np.abs(vectors[target_id] - fixed_point)) <= 1e-9, f"case {case}"


def test_undo_replay_bit_exact():
    # random sequences of <=5 refits: undoing them all restores the initial
    # matrix bit-exactly; replaying the log reproduces the final matrix
    rng = np.random.default_rng(90210)
    for sequence in range(10):
        model = make_random_model(40_000 + sequence, 40, 6)
        pristine = load_word2vec_binary(save_model(model, "binary"))
        initial_bytes = model.raw.tobytes()
        log = ActionLog()
        for _ in range(int(rng.integers(1, 6))):
            mode = "targeted" if rng.integers(2) else "roundrobin"
            _, request = _random_step_instance(rng, 0, mode)
            # rebuild the request against this model's vocabulary
            words = model.vocab.words
            size = int(rng.integers(2, 6))
            chosen = [words[i] for i in rng.choice(len(words), size=size, replace=False)]
            if mode == "targeted":
                request = RefitRequest("targeted", tuple(chosen[1:]), target=chosen[0])
            else:
                request = RefitRequest("roundrobin", tuple(chosen))
            refit(model, request, log=log)
        final_bytes = model.raw.tobytes()
        replay(pristine, log)
        assert pristine.raw.tobytes() == final_bytes, f"sequence {sequence}: replay diverged"
        while len(log):
            undo(model, log)
        assert model.raw.tobytes() == initial_bytes, f"sequence {sequence}: undo diverged"


def test_refit_direction_on_planted_clusters():
    # 1000-word synthetic model with planted clusters: round-robin over six
    # cluster-straddling terms strictly raises all 15 pairwise cosines;
    # targeted refit strictly raises cosine(target, g) for every group member
    model = make_cluster_model(seed=7, n_words=1000, dims=50, n_clusters=8)
    straddling = [f"c{c}_w{c:04d}" for c in range(6)]
    before = {
        (a, b): cosine(model.get_vector(a), model.get_vector(b))
        for a, b in combinations(straddling, 2)
    }
    report = refit(model, RefitRequest("roundrobin", tuple(straddling)))
    assert len(report.pairs) == 15
    for a, b, cos_before, cos_after in report.pairs:
        assert cos_before == pytest.approx(before[(a, b)], abs=1e-12)
        assert cos_after > cos_before, f"pair ({a}, {b}) did not move closer"

    fresh = make_cluster_model(seed=7, n_words=1000, dims=50, n_clusters=8)
    target = "c6_w0006"
    group = tuple(f"c{c}_w{c:04d}" for c in range(5))
    report = refit(fresh, RefitRequest("targeted", group, target=target))
    assert report.moved == (target,)
    for _, g, cos_before, cos_after in report.pairs:
        assert cos_after > cos_before, f"target did not move toward {g}"


# ---------------------------------------------------------------------------
# optional: reproduction against the public Google News vectors
# ---------------------------------------------------------------------------


def _google_news_path():
    for env in ("REFITLAB_GOOGLE_NEWS", "GOOGLE_NEWS_VECTORS", "GOOGLE_NEWS_PATH"):
        value = os.environ.get(env)
        if value and Path(value).exists():
            return value
    for candidate in (
        Path("GoogleNews-vectors-negative300.bin"),
        Path.home() / "GoogleNews-vectors-negative300.bin",
        Path("/data/GoogleNews-vectors-negative300.bin"),
    ):
        if candidate.exists():
            return str(candidate)
    return None


GOOGLE_NEWS = _google_news_path()


@pytest.mark.skipif(GOOGLE_NEWS is None, reason="Google News vectors not on disk")
def test_google_news_reproduction():
    model = load_word2vec_binary(GOOGLE_NEWS)
    assert model.dims == 300
    assert "registered_nurse" in model.vocab

    results = search(model, Query("additive", ("he", "nurse"), k=5))
    expected = [
        ("doctor", 0.6049),
        ("registered_nurse", 0.5889),
        ("x_ray_technician", 0.5814),
        ("medic", 0.5507),
        ("candy_striper", 0.5330),
    ]
    assert [t for t, _ in results.hits] == [t for t, _ in expected]
    for (_, got), (_, want) in zip(results.hits, expected):
        assert got == pytest.approx(want, abs=0.0005)

    analogy = search(model, Query("analogy", ("sassy", "she", "he"), k=5))
    assert {t for t, _ in analogy.hits} == {"swaggering", "cocky", "suave", "brash", "genial"}

    table2_before = {
        "science": 0.5929,
        "astronomy": 0.5644,
        "biophysics": 0.5623,
        "biology": 0.5387,
        "biochemistry": 0.5305,
    }
    for term, want in table2_before.items():
        got = cosine(model.get_vector("physics"), model.get_vector(term))
        assert got == pytest.approx(want, abs=0.0005), term


# ---------------------------------------------------------------------------
# service contract
# ---------------------------------------------------------------------------


def test_service_contract(tmp_path, monkeypatch):
    # the full /v1 endpoint suite against a toy model: revision monotonicity,
    # conflict on concurrent refit, all-or-nothing on induced errors, and the
    # error-code totality table
    model_path = tmp_path / "toy.bin"
    model_path.write_bytes(save_model(make_science_model(), "binary"))
    config = ServiceConfig(
        model_path=str(model_path),
        log_path=str(tmp_path / "actions.jsonl"),
        checkpoint_dir=str(tmp_path / "checkpoints"),
    )
    state = build_state(config)
    client = TestClient(create_app(state), raise_server_exceptions=False)

    revisions = []

    def note_revision():
        revisions.append(client.get("/v1/model/info").json()["revision"])

    # info
    info = client.get("/v1/model/info").json()
    assert info["vocab_size"] == len(state.model) and info["dims"] == 16
    note_revision()

    # search (all modes, alias included) embeds the revision
    for params in (
        {"mode": "single", "terms": "physics", "k": 5},
        {"mode": "add", "terms": "he,nurse", "k": 5},
        {"mode": "subtractive", "terms": "king,queen", "k": 5},
        {"mode": "analogy", "terms": "king,he,she", "k": 5},
    ):
        body = client.get("/v1/search", params=params).json()
        assert body["revision"] == revisions[-1]
        assert body["hits"]

    # identical queries at a fixed revision are byte-identical
    args = {"params": {"mode": "single", "terms": "science", "k": 10}}
    assert client.get("/v1/search", **args).content == client.get("/v1/search", **args).content

    # refit mutates: revision strictly increases, report is complete
    report = client.post(
        "/v1/refit",
        json={"mode": "roundrobin", "terms": ["physics", "science", "astronomy"]},
    ).json()
    note_revision()
    assert revisions[-1] > revisions[-2]
    assert report["revisions"]["after"] == revisions[-1]
    assert len(report["pairs"]) == 3 and report["objective_trace"]

    # viz endpoints
    graph = client.get(
        "/v1/viz/graph", params={"mode": "single", "terms": "science", "k": 5, "depth": 1}
    ).json()
    assert len(graph["nodes"]) == 6 and len(graph["links"]) == 5
    matrix = client.get("/v1/viz/matrix", params={"tokens": "physics,science"}).json()
    assert matrix["matrix"][0][0] == 1.0
    assert matrix["matrix"][0][1] == pytest.approx(matrix["matrix"][1][0], abs=1e-12)
    points = client.get(
        "/v1/viz/projection", params={"tokens": "physics,science,queen"}
    ).json()["points"]
    assert len(points) == 3

    # all-or-nothing: a failing refit leaves revision and results untouched
    search_before = client.get("/v1/search", **args)
    bad = client.post("/v1/refit", json={"mode": "roundrobin", "terms": ["physics", "zzz_nope"]})
    assert bad.status_code == 404
    note_revision()
    assert revisions[-1] == revisions[-2]
    assert client.get("/v1/search", **args).content == search_before.content

    # conflict on concurrent refit
    real_refit = refit_engine.refit
    started, release = threading.Event(), threading.Event()

    def slow_refit(model, request, log=None):
        started.set()
        release.wait(timeout=10)
        return real_refit(model, request, log=log)

    monkeypatch.setattr(refit_engine, "refit", slow_refit)
    outcome = []
    thread = threading.Thread(
        target=lambda: outcome.append(
            client.post("/v1/refit", json={"mode": "roundrobin", "terms": ["king", "queen"]})
        )
    )
    thread.start()
    assert started.wait(timeout=10)
    conflicted = client.post(
        "/v1/refit", json={"mode": "roundrobin", "terms": ["he", "she"]}
    )
    release.set()
    thread.join(timeout=10)
    monkeypatch.setattr(refit_engine, "refit", real_refit)
    assert conflicted.status_code == 409
    assert conflicted.json()["error"]["code"] == "conflict"
    assert outcome[0].status_code == 200
    note_revision()

    # history and undo
    entries = client.get("/v1/history").json()["entries"]
    assert len(entries) == len(state.log)
    undone = client.post("/v1/history/undo")
    assert undone.status_code == 200
    note_revision()
    assert revisions[-1] > revisions[-2]

    # checkpoint save round-trips
    saved = client.post("/v1/model/save", json={"format": "binary", "name": "ckpt.bin"})
    assert saved.status_code == 200
    reloaded = load_word2vec_binary(saved.json()["path"])
    assert reloaded.raw.tobytes() == state.model.raw.tobytes()

    # error-code totality: every induced failure maps to its one stable code
    taxonomy = [
        ("GET", "/v1/search", {"params": {"mode": "single", "terms": "zzz_nope"}}, 404, "unknown_token"),
        ("GET", "/v1/search", {"params": {"mode": "single", "terms": "he,nurse"}}, 400, "bad_query"),
        ("GET", "/v1/search", {"params": {"mode": "subtractive", "terms": "he,he"}}, 422, "zero_vector"),
        ("GET", "/v1/search", {"params": {"mode": "single", "terms": "he", "k": 0}}, 400, "bad_query"),
        ("GET", "/v1/viz/graph", {"params": {"mode": "single", "terms": "he", "depth": 9}}, 400, "bad_query"),
        ("GET", "/v1/viz/projection", {"params": {"tokens": "he"}}, 400, "bad_query"),
        ("GET", "/v1/viz/matrix", {"params": {"tokens": "zzz_nope"}}, 404, "unknown_token"),
        ("POST", "/v1/refit", {"json": {"mode": "targeted", "target": "he", "terms": ["he"]}}, 400, "bad_request"),
        ("POST", "/v1/refit", {"json": {"mode": "roundrobin", "terms": ["he", "she"], "params": {"iterations": 0}}}, 400, "bad_request"),
        ("POST", "/v1/refit", {"json": {"mode": "nope", "terms": ["he", "she"]}}, 400, "bad_request"),
        ("POST", "/v1/model/save", {"json": {"format": "binary", "name": "../x"}}, 400, "bad_request"),
        ("POST", "/v1/model/save", {"json": {"format": "csv", "name": "x"}}, 400, "bad_request"),
    ]
    for method, path, kwargs, status, code in taxonomy:
        response = client.request(method, path, **kwargs)
        assert response.status_code == status, (path, kwargs, response.text)
        assert response.json()["error"]["code"] == code
    # undo on the now-empty-after-drain log
    while len(state.log):
        client.post("/v1/history/undo")
    empty_undo = client.post("/v1/history/undo")
    assert empty_undo.status_code == 409
    assert empty_undo.json()["error"]["code"] == "conflict"
