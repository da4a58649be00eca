"""Read-side vector algebra: the four query modes, cosine ranking, viz data.

Every operation here is pure with respect to a model revision. Scans run over
the model's float64 unit-norm cache in one contiguous pass (a single BLAS
matrix-vector product for the whole vocabulary), then select the top k with
exact tie handling: descending score, ascending token.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidQueryError, ZeroVectorError
from .model import EmbeddingModel, display_token

MODES = ("single", "additive", "subtractive", "analogy")

# mode -> (min terms, max terms); None means unbounded
_TERM_COUNTS = {
    "single": (1, 1),
    "additive": (2, None),
    "subtractive": (2, 2),
    "analogy": (3, 3),
}

QUERY_NODE_ID = "__query__"

_MAX_GRAPH_DEPTH = 2


@dataclass(frozen=True)
class Query:
    """One similarity query: a mode, its terms, and result shaping.

    Term counts per mode: single takes one term, additive two or more,
    subtractive exactly two (a - b), analogy exactly three ordered as
    (a, b, c) meaning a - b + c.
    """

    mode: str
    terms: tuple[str, ...]
    k: int = 10
    exclude_inputs: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidQueryError(f"unknown query mode: {self.mode!r}")
        object.__setattr__(self, "terms", tuple(self.terms))
        lo, hi = _TERM_COUNTS[self.mode]
        n = len(self.terms)
        if n < lo or (hi is not None and n > hi):
            bound = f"exactly {lo}" if hi == lo else f"at least {lo}"
            raise InvalidQueryError(
                f"{self.mode} query takes {bound} term(s), got {n}"
            )
        if self.k < 1:
            raise InvalidQueryError(f"k must be at least 1, got {self.k}")


@dataclass(frozen=True)
class RankedResults:
    """Ordered (token, cosine score) hits for a query at a fixed revision."""

    query: Query
    revision: int
    hits: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Projection:
    """2-D coordinates for a token set at a fixed revision."""

    revision: int
    points: tuple[tuple[str, float, float], ...]


@dataclass(frozen=True)
class CosineMatrix:
    """Pairwise cosine matrix for a token list at a fixed revision."""

    revision: int
    tokens: tuple[str, ...]
    matrix: np.ndarray


def cosine(u, v) -> float:
    """u.v / (|u| |v|) at 64-bit precision."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine of an all-zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def _composite(model: EmbeddingModel, query: Query, ids: Sequence[int]) -> np.ndarray:
    rows = model.raw[list(ids)].astype(np.float64)
    if query.mode == "single":
        return rows[0]
    if query.mode == "additive":
        return rows.mean(axis=0)
    if query.mode == "subtractive":
        return rows[0] - rows[1]
    # analogy a - b + c, grouped so b == c cancels exactly
    return rows[0] + (rows[2] - rows[1])


def query_vector(model: EmbeddingModel, query: Query) -> np.ndarray:
    """The composite vector a query searches with (float64, unnormalized)."""
    with model.read_lock():
        ids = [model.resolve(t) for t in query.terms]
        return _composite(model, query, ids)


def _top_ids(
    scores: np.ndarray, words: Sequence[str], k: int, exclude: set[int]
) -> list[int]:
    """Top-k row ids by (score desc, token asc), with exact tie handling."""
    n = scores.shape[0]
    if exclude:
        scores = scores.copy()
        scores[np.fromiter(exclude, dtype=np.intp)] = -np.inf
    k_eff = min(k, n - len(exclude))
    if k_eff <= 0:
        return []
    if k_eff < n:
        part = np.argpartition(-scores, k_eff - 1)[:k_eff]
        threshold = scores[part].min()
        # pull in every row tied with the boundary so the lexicographic
        # tie-break sees the full tie group
        candidates = np.flatnonzero(scores >= threshold)
    else:
        candidates = np.arange(n)
    ranked = sorted(candidates.tolist(), key=lambda i: (-scores[i], words[i]))
    return ranked[:k_eff]


def _search_locked(model: EmbeddingModel, query: Query) -> RankedResults:
    ids = [model.resolve(t) for t in query.terms]
    q = _composite(model, query, ids)
    qnorm = np.linalg.norm(q)
    if qnorm == 0.0:
        raise ZeroVectorError("composite query vector is all-zero")
    # einsum, not BLAS matvec: its per-row accumulation is position-independent,
    # so bit-identical rows score bit-equal and the lexicographic tie-break is
    # deterministic
    scores = np.einsum("ij,j->i", model.unit, q / qnorm)
    exclude = set(ids) if query.exclude_inputs else set()
    top = _top_ids(scores, model.vocab.words, query.k, exclude)
    hits = tuple((model.vocab.words[i], float(scores[i])) for i in top)
    return RankedResults(query=query, revision=model.revision, hits=hits)


def search(model: EmbeddingModel, query: Query) -> RankedResults:
    """Exhaustive cosine scan; deterministic for a fixed (query, revision)."""
    with model.read_lock():
        return _search_locked(model, query)


def _query_label(query: Query) -> str:
    labels = [display_token(t) for t in query.terms]
    if query.mode == "single":
        return labels[0]
    if query.mode == "additive":
        return " + ".join(labels)
    if query.mode == "subtractive":
        return f"{labels[0]} - {labels[1]}"
    return f"{labels[0]} - {labels[1]} + {labels[2]}"


def neighbor_graph(
    model: EmbeddingModel, query: Query, k: int | None = None, depth: int = 1
) -> dict:
    """Graph data around a query: depth 1 is a star to the k hits, depth 2
    expands each hit's own k nearest (deduplicated).

    Returns the JSON-shaped document the workbench consumes:
    ``{"revision", "nodes": [{"id", "label"}], "links": [{"source", "target",
    "weight"}]}`` where weights are pairwise cosines.
    """
    if depth not in range(1, _MAX_GRAPH_DEPTH + 1):
        raise InvalidQueryError(f"depth must be 1 or 2, got {depth}")
    if k is not None and k != query.k:
        query = replace(query, k=k)
    with model.read_lock():
        base = _search_locked(model, query)
        query_id = QUERY_NODE_ID
        while query_id in model.vocab:
            query_id = "_" + query_id
        nodes = [{"id": query_id, "label": _query_label(query)}]
        links = []
        seen = {query_id}
        for token, score in base.hits:
            nodes.append({"id": token, "label": display_token(token)})
            seen.add(token)
            links.append({"source": query_id, "target": token, "weight": score})
        if depth == 2:
            edge_seen = {(link["source"], link["target"]) for link in links}
            for token, _ in base.hits:
                sub = _search_locked(
                    model, Query("single", (token,), k=query.k, exclude_inputs=True)
                )
                for neighbor, weight in sub.hits:
                    if neighbor not in seen:
                        nodes.append({"id": neighbor, "label": display_token(neighbor)})
                        seen.add(neighbor)
                    if (token, neighbor) not in edge_seen:
                        edge_seen.add((token, neighbor))
                        links.append(
                            {"source": token, "target": neighbor, "weight": weight}
                        )
        return {"revision": base.revision, "nodes": nodes, "links": links}


def project_2d(model: EmbeddingModel, tokens: Iterable[str]) -> Projection:
    """Deterministic 2-D projection of a token set onto its top-2 principal
    components (rows centered; component signs fixed so each axis's
    largest-magnitude coordinate is positive)."""
    with model.read_lock():
        ids: list[int] = []
        for token in tokens:
            i = model.resolve(token)
            if i not in ids:
                ids.append(i)
        if len(ids) < 2:
            raise InvalidQueryError("projection needs at least 2 distinct tokens")
        X = model.raw[ids].astype(np.float64)
        Xc = X - X.mean(axis=0)
        _, _, vt = np.linalg.svd(Xc, full_matrices=False)
        comps = vt[: min(2, vt.shape[0])]
        for c in range(comps.shape[0]):
            j = int(np.argmax(np.abs(comps[c])))
            if comps[c, j] < 0:
                comps[c] = -comps[c]
        coords = Xc @ comps.T
        if coords.shape[1] < 2:
            coords = np.hstack([coords, np.zeros((coords.shape[0], 1))])
        points = tuple(
            (model.vocab.words[i], float(coords[n, 0]), float(coords[n, 1]))
            for n, i in enumerate(ids)
        )
        return Projection(revision=model.revision, points=points)


def distance_matrix(model: EmbeddingModel, tokens: Iterable[str]) -> CosineMatrix:
    """Symmetric pairwise-cosine matrix (heatmap data); diagonal is exactly 1."""
    with model.read_lock():
        toks = list(tokens)
        if not toks:
            raise InvalidQueryError("distance matrix needs at least 1 token")
        ids = [model.resolve(t) for t in toks]
        rows = model.unit[ids]
        matrix = rows @ rows.T
        np.fill_diagonal(matrix, 1.0)
        stored = tuple(model.vocab.words[i] for i in ids)
        return CosineMatrix(revision=model.revision, tokens=stored, matrix=matrix)
