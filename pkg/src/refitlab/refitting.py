"""Interactive refitting: pull selected vectors together on a live model.

Two modes. Targeted builds a star graph and moves only the target toward a
fixed anchor group; round-robin builds a complete graph on the group and moves
every member. Both minimize the quadratic objective

    sum_{i in U} alpha * |q_i - q_hat_i|^2  +  sum_{(i,j) in E} beta_ij * |q_i - q_j|^2

by Gauss-Seidel coordinate descent: each sweep visits the update set in
ascending vocabulary order and lands each vector exactly on its closed-form
coordinate minimizer, so the objective never increases. The anchor q_hat is
the vector as of the start of the refit action, which makes successive
interactive refits compose.

Applied refits mutate the model atomically (one revision bump), append to an
action log with the displaced original rows, and can be undone bit-exactly or
replayed from the log.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, MutableMapping, Sequence

import numpy as np

from .errors import (
    EmptyLogError,
    InvalidRequestError,
    LineageMismatchError,
    ZeroDenominatorError,
)
from .model import EmbeddingModel
from .queries import cosine

MODES = ("targeted", "roundrobin")
BETA_SCHEMES = ("inverse_degree", "uniform")


@dataclass(frozen=True)
class RefitParams:
    """Hyperparameters of the refit objective.

    alpha anchors each updated vector to its original; beta_scheme sets the
    edge weights (inverse_degree gives 1/deg(i), uniform gives 1); iterations
    caps the sweep count; convergence_epsilon stops early once an iteration
    improves the objective by less than epsilon.
    """

    alpha: float = 1.0
    beta_scheme: str = "inverse_degree"
    iterations: int = 10
    convergence_epsilon: float = 1e-6

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidRequestError(f"alpha must be non-negative, got {self.alpha}")
        if self.beta_scheme not in BETA_SCHEMES:
            raise InvalidRequestError(f"unknown beta scheme: {self.beta_scheme!r}")
        if self.iterations < 1:
            raise InvalidRequestError(
                f"iterations must be at least 1, got {self.iterations}"
            )
        if self.convergence_epsilon < 0:
            raise InvalidRequestError(
                f"convergence epsilon must be non-negative, got {self.convergence_epsilon}"
            )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta_scheme": self.beta_scheme,
            "iterations": self.iterations,
            "convergence_epsilon": self.convergence_epsilon,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RefitParams":
        known = {f: data[f] for f in ("alpha", "beta_scheme", "iterations", "convergence_epsilon") if f in data}
        unknown = set(data) - set(known)
        if unknown:
            raise InvalidRequestError(f"unknown refit parameter(s): {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class RefitRequest:
    """One user refit action: a mode, the term group, and (targeted only) a target."""

    mode: str
    group: tuple[str, ...]
    target: str | None = None
    params: RefitParams = field(default_factory=RefitParams)

    def __post_init__(self):
        object.__setattr__(self, "group", tuple(self.group))
        if self.mode not in MODES:
            raise InvalidRequestError(f"unknown refit mode: {self.mode!r}")
        if len(set(self.group)) != len(self.group):
            raise InvalidRequestError("group contains duplicate terms")
        if self.mode == "targeted":
            if not self.target:
                raise InvalidRequestError("targeted refit requires a target term")
            if not self.group:
                raise InvalidRequestError("targeted refit requires at least 1 group term")
            if self.target in self.group:
                raise InvalidRequestError(
                    f"target {self.target!r} must not appear in the group"
                )
        else:
            if self.target is not None:
                raise InvalidRequestError("round-robin refit takes no target term")
            if len(self.group) < 2:
                raise InvalidRequestError(
                    "round-robin refit requires at least 2 group terms"
                )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "target": self.target,
            "group": list(self.group),
            "params": self.params.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RefitRequest":
        return cls(
            mode=data["mode"],
            group=tuple(data["group"]),
            target=data.get("target"),
            params=RefitParams.from_dict(data.get("params", {})),
        )


@dataclass(frozen=True)
class RefitGraph:
    """Resolved refit topology: weighted edges and the set of rows to update."""

    update_ids: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]


@dataclass(frozen=True)
class RefitReport:
    """Before/after accounting for one refit action."""

    request: RefitRequest
    revisions: tuple[int, int]
    pairs: tuple[tuple[str, str, float, float], ...]
    objective_trace: tuple[float, ...]
    moved: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "request": self.request.to_dict(),
            "revisions": {"before": self.revisions[0], "after": self.revisions[1]},
            "pairs": [
                {"a": a, "b": b, "before": before, "after": after}
                for a, b, before, after in self.pairs
            ],
            "objective_trace": list(self.objective_trace),
            "moved": list(self.moved),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RefitReport":
        return cls(
            request=RefitRequest.from_dict(data["request"]),
            revisions=(data["revisions"]["before"], data["revisions"]["after"]),
            pairs=tuple(
                (p["a"], p["b"], p["before"], p["after"]) for p in data["pairs"]
            ),
            objective_trace=tuple(data["objective_trace"]),
            moved=tuple(data["moved"]),
        )


def build_refit_graph(model: EmbeddingModel, request: RefitRequest) -> RefitGraph:
    """Resolve tokens and lay out the refit graph.

    Targeted: a star from the target to each group term; only the target is
    updated and inverse-degree weights are 1/len(group). Round-robin: the
    complete graph on the group; every member is updated and inverse-degree
    weights are 1/(n-1).
    """
    group_ids = [model.resolve(t) for t in request.group]
    if len(set(group_ids)) != len(group_ids):
        raise InvalidRequestError("group terms resolve to duplicate vocabulary rows")
    if request.mode == "targeted":
        target_id = model.resolve(request.target)
        if target_id in group_ids:
            raise InvalidRequestError(
                f"target {request.target!r} resolves into the group"
            )
        beta = 1.0 / len(group_ids) if request.params.beta_scheme == "inverse_degree" else 1.0
        edges = tuple((target_id, g, beta) for g in group_ids)
        return RefitGraph(update_ids=(target_id,), edges=edges)
    beta = 1.0 / (len(group_ids) - 1) if request.params.beta_scheme == "inverse_degree" else 1.0
    edges = tuple((a, b, beta) for a, b in combinations(group_ids, 2))
    return RefitGraph(update_ids=tuple(sorted(group_ids)), edges=edges)


def objective(
    vectors, originals: Mapping[int, np.ndarray],
    edges: Iterable[tuple[int, int, float]], alpha: float,
) -> float:
    """Evaluate the refit objective at 64-bit precision.

    ``vectors`` is anything indexable by row id (a dict of rows or a matrix);
    ``originals`` holds the anchor q_hat for every updated row.
    """
    total = 0.0
    for i, anchor in originals.items():
        d = np.asarray(vectors[i], dtype=np.float64) - anchor
        total += alpha * float(d @ d)
    for i, j, beta in edges:
        d = np.asarray(vectors[i], dtype=np.float64) - np.asarray(
            vectors[j], dtype=np.float64
        )
        total += beta * float(d @ d)
    return total


def refit_step(
    vectors: MutableMapping[int, np.ndarray],
    originals: Mapping[int, np.ndarray],
    edges: Iterable[tuple[int, int, float]],
    update_ids: Sequence[int],
    alpha: float,
) -> dict[int, np.ndarray]:
    """One Gauss-Seidel sweep over the update set in ascending row order.

    Each visited row is set to (alpha * q_hat + sum beta_ij q_j) / (alpha +
    sum beta_ij) in place, so later rows in the sweep see earlier updates.
    Returns the rows written this sweep.
    """
    adjacency: dict[int, list[tuple[int, float]]] = {int(i): [] for i in update_ids}
    for i, j, beta in edges:
        if i in adjacency:
            adjacency[i].append((j, beta))
        if j in adjacency:
            adjacency[j].append((i, beta))
    updated: dict[int, np.ndarray] = {}
    for i in sorted(adjacency):
        neighbors = adjacency[i]
        beta_sum = sum(beta for _, beta in neighbors)
        denominator = alpha + beta_sum
        if denominator <= 0.0:
            raise ZeroDenominatorError(
                f"row {i} has alpha = 0 and no incident edges; update undefined"
            )
        acc = alpha * np.asarray(originals[i], dtype=np.float64)
        for j, beta in neighbors:
            acc = acc + beta * np.asarray(vectors[j], dtype=np.float64)
        new = acc / denominator
        vectors[i] = new
        updated[i] = new
    return updated


@dataclass
class ActionEntry:
    """One logged refit: timestamp, the request, its report, and the original
    float32 rows of every moved token (the undo record)."""

    ts: str
    request: RefitRequest
    report: RefitReport
    displaced: dict[str, np.ndarray]

    def to_dict(self) -> dict:
        return {
            "ts": self.ts,
            "request": self.request.to_dict(),
            "report": self.report.to_dict(),
            "displaced": {
                token: [float(v) for v in row] for token, row in self.displaced.items()
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ActionEntry":
        return cls(
            ts=data["ts"],
            request=RefitRequest.from_dict(data["request"]),
            report=RefitReport.from_dict(data["report"]),
            displaced={
                token: np.asarray(row, dtype=np.float32)
                for token, row in data["displaced"].items()
            },
        )


class ActionLog:
    """Append-only record of refit actions, optionally mirrored to a
    JSON-lines file (one object per action; undo trims the last line so the
    file always replays to the live model)."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.entries: list[ActionEntry] = []
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self.entries.append(ActionEntry.from_dict(json.loads(line)))

    def _rewrite(self):
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(json.dumps(entry.to_dict()) + "\n")
        os.replace(tmp, self.path)

    def append(self, entry: ActionEntry):
        self.entries.append(entry)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_dict()) + "\n")

    def pop(self) -> ActionEntry:
        if not self.entries:
            raise EmptyLogError("action log is empty")
        entry = self.entries.pop()
        if self.path is not None:
            self._rewrite()
        return entry

    def peek(self) -> ActionEntry:
        if not self.entries:
            raise EmptyLogError("action log is empty")
        return self.entries[-1]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _pair_ids(request: RefitRequest, model: EmbeddingModel) -> list[tuple[int, int]]:
    group_ids = [model.resolve(t) for t in request.group]
    if request.mode == "targeted":
        target_id = model.resolve(request.target)
        return [(target_id, g) for g in group_ids]
    return list(combinations(group_ids, 2))


def refit(
    model: EmbeddingModel, request: RefitRequest, log: ActionLog | None = None
) -> RefitReport:
    """Run one refit action against the live model.

    Iterates Gauss-Seidel sweeps at float64 until the iteration cap or until
    an iteration improves the objective by less than epsilon, then writes the
    final vectors (rounded to float32) in a single atomic revision bump. On
    any error the model is unchanged. Appends to ``log`` when given.
    """
    graph = build_refit_graph(model, request)
    params = request.params
    pair_ids = _pair_ids(request, model)

    with model.read_lock():
        revision_before = model.revision
        node_ids = sorted({i for i, _, _ in graph.edges} | {j for _, j, _ in graph.edges})
        work = {i: model.raw[i].astype(np.float64) for i in node_ids}
        before32 = {i: model.raw[i].copy() for i in graph.update_ids}

    originals = {i: work[i].copy() for i in graph.update_ids}
    before_cos = {(a, b): cosine(work[a], work[b]) for a, b in pair_ids}

    trace = [objective(work, originals, graph.edges, params.alpha)]
    for _ in range(params.iterations):
        refit_step(work, originals, graph.edges, graph.update_ids, params.alpha)
        trace.append(objective(work, originals, graph.edges, params.alpha))
        if trace[-2] - trace[-1] < params.convergence_epsilon:
            break

    stored32 = {i: work[i].astype(np.float32) for i in graph.update_ids}
    moved_ids = [
        i for i in graph.update_ids if stored32[i].tobytes() != before32[i].tobytes()
    ]
    revision_after = model.update_vectors({i: stored32[i] for i in moved_ids})

    with model.read_lock():
        after_cos = {
            (a, b): cosine(
                model.raw[a].astype(np.float64), model.raw[b].astype(np.float64)
            )
            for a, b in pair_ids
        }

    words = model.vocab.words
    report = RefitReport(
        request=request,
        revisions=(revision_before, revision_after),
        pairs=tuple(
            (words[a], words[b], before_cos[(a, b)], after_cos[(a, b)])
            for a, b in pair_ids
        ),
        objective_trace=tuple(trace),
        moved=tuple(words[i] for i in moved_ids),
    )
    if log is not None:
        log.append(
            ActionEntry(
                ts=datetime.now(timezone.utc).isoformat(),
                request=request,
                report=report,
                displaced={words[i]: before32[i] for i in moved_ids},
            )
        )
    return report


def undo(model: EmbeddingModel, log: ActionLog) -> int:
    """Restore the last action's moved vectors bit-exactly and pop the entry.

    Returns the new revision id.
    """
    entry = log.peek()
    revision = model.update_vectors(dict(entry.displaced))
    log.pop()
    return revision


def replay(model: EmbeddingModel, log: ActionLog) -> EmbeddingModel:
    """Reapply every logged action, in order, to the given model.

    Before each action the displaced rows recorded in the entry must match the
    model bit-for-bit; a mismatch means the log was recorded against a
    different model lineage.
    """
    for n, entry in enumerate(log.entries):
        for token, row in entry.displaced.items():
            try:
                i = model.resolve(token)
            except Exception as exc:
                raise LineageMismatchError(
                    f"entry {n}: token {token!r} not in this model"
                ) from exc
            if model.raw[i].tobytes() != np.asarray(row, dtype=np.float32).tobytes():
                raise LineageMismatchError(
                    f"entry {n}: vector for {token!r} does not match the log"
                )
        refit(model, entry.request, log=None)
    return model
