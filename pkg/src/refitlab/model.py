"""word2vec model store: vocabulary, the live vector matrix, and file codecs.

The model keeps two aligned matrices. ``raw`` holds the float32 vectors exactly
as loaded from disk (and exactly as they will be written back), ``unit`` holds a
float64 unit-normalized copy that the similarity scan reads. All similarity and
refit arithmetic runs at 64-bit precision; vectors are rounded to float32 only
when stored. Mutations go through :meth:`EmbeddingModel.update_vector` /
:meth:`EmbeddingModel.update_vectors`, which refresh the affected ``unit`` rows
and bump ``revision`` atomically under the writer side of a readers/writer
lock, so a reader can never observe a raw row and a unit row from different
revisions.
"""

from __future__ import annotations

import io
import os
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    FormatError,
    UnknownTokenError,
    ZeroVectorError,
)

# ASCII separators only: exotic unicode spaces are legal token bytes.
_FORBIDDEN_TOKEN_CHARS = set(" \t\n\r\v\f")

_HEADER_LIMIT = 1024  # bytes; a sane header never comes close


def normalize_token(token: str) -> str:
    """Map a user-facing term to vocabulary form (spaces become underscores)."""
    return token.replace(" ", "_")


def display_token(token: str) -> str:
    """Map a vocabulary token to display form (underscores become spaces)."""
    return token.replace("_", " ")


class Vocabulary:
    """Ordered, duplicate-free token list with a token -> row-id index."""

    __slots__ = ("words", "index")

    def __init__(self, words: Sequence[str]):
        self.words: list[str] = list(words)
        index: dict[str, int] = {}
        for i, word in enumerate(self.words):
            if not word:
                raise FormatError(f"empty token at row {i}")
            if _FORBIDDEN_TOKEN_CHARS.intersection(word):
                raise FormatError(f"token contains whitespace at row {i}: {word!r}")
            if word in index:
                raise FormatError(f"duplicate token: {word!r}")
            index[word] = i
        self.index = index

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    def __repr__(self) -> str:
        return f"Vocabulary({len(self.words)} tokens)"


class _RWLock:
    """Readers/writer lock with writer preference.

    Any number of readers may hold the lock together; a writer waits for
    readers to drain and blocks new ones. Not reentrant: internal code paths
    acquire it exactly once.
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writers_waiting = 0
        self._writing = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writing or self._writers_waiting:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            self._writers_waiting += 1
            try:
                while self._writing or self._readers:
                    self._cond.wait()
            finally:
                self._writers_waiting -= 1
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class EmbeddingModel:
    """Mutable vocabulary-indexed matrix of word vectors with a unit-norm cache.

    ``revision`` increases by exactly one per mutation batch; reads taken at a
    fixed revision are immutable. The unit cache is refreshed eagerly inside
    the same exclusive section as the raw write, keeping the search hot path
    branch-free.
    """

    def __init__(self, vocab: Vocabulary, vectors: np.ndarray, source: str | None = None):
        arr = np.asarray(vectors)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] != len(vocab):
            raise DimensionMismatchError(
                f"{len(vocab)} tokens but {arr.shape[0]} vector rows"
            )
        if arr.shape[1] < 1:
            raise FormatError("vector dimensionality must be at least 1")
        raw = np.ascontiguousarray(arr, dtype=np.float32)
        zero_rows = np.flatnonzero(~raw.any(axis=1))
        if zero_rows.size:
            raise ZeroVectorError(
                f"all-zero vector for token {vocab.words[int(zero_rows[0])]!r}"
            )
        self.vocab = vocab
        self.source = source
        self.revision = 0
        self._raw = raw
        self._unit = raw.astype(np.float64)
        self._unit /= np.linalg.norm(self._unit, axis=1, keepdims=True)
        self._unit_valid = np.ones(len(vocab), dtype=bool)
        self._lock = _RWLock()

    # -- introspection ----------------------------------------------------

    @property
    def dims(self) -> int:
        return self._raw.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    @property
    def raw(self) -> np.ndarray:
        """Read-only view of the live float32 matrix."""
        view = self._raw.view()
        view.flags.writeable = False
        return view

    @property
    def unit(self) -> np.ndarray:
        """Read-only view of the float64 unit-normalized cache."""
        view = self._unit.view()
        view.flags.writeable = False
        return view

    @property
    def unit_valid(self) -> np.ndarray:
        view = self._unit_valid.view()
        view.flags.writeable = False
        return view

    def read_lock(self):
        """Shared lock for scan-consistent reads (raw/unit/revision together)."""
        return self._lock.read()

    # -- token resolution --------------------------------------------------

    def resolve(self, token: str) -> int:
        """Resolve a user-facing term to its row id.

        Spaces map to underscores first; exact match wins, then a lower-cased
        retry. Raises UnknownTokenError carrying the original token.
        """
        key = normalize_token(token)
        idx = self.vocab.index.get(key)
        if idx is None:
            idx = self.vocab.index.get(key.lower())
        if idx is None:
            raise UnknownTokenError(token)
        return idx

    def get_vector(self, token: str) -> np.ndarray:
        """Copy of the raw (unnormalized) float32 row for ``token``."""
        return self._raw[self.resolve(token)].copy()

    # -- mutation -----------------------------------------------------------

    def update_vector(self, token: str, vector) -> int:
        """Replace one vector; returns the new revision id."""
        return self.update_vectors({token: vector})

    def update_vectors(self, updates: Mapping) -> int:
        """Replace a batch of vectors atomically with a single revision bump.

        Keys may be tokens or row ids. Every row is validated before any row
        is written, so a failed batch leaves the model untouched. An empty
        batch still bumps the revision (callers use it to fence actions).
        """
        staged: dict[int, np.ndarray] = {}
        for key, vec in updates.items():
            row_id = int(key) if isinstance(key, (int, np.integer)) else self.resolve(key)
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dims,):
                raise DimensionMismatchError(
                    f"expected {self.dims} components, got shape {arr.shape}"
                )
            row = arr.astype(np.float32)
            if not row.any():
                raise ZeroVectorError(
                    f"refusing to store an all-zero vector for row {row_id}"
                )
            staged[row_id] = row
        with self._lock.write():
            for row_id, row in staged.items():
                self._unit_valid[row_id] = False
                self._raw[row_id] = row
                r64 = row.astype(np.float64)
                self._unit[row_id] = r64 / np.linalg.norm(r64)
                self._unit_valid[row_id] = True
            self.revision += 1
            return self.revision


# ---------------------------------------------------------------------------
# Codecs
# ---------------------------------------------------------------------------


class _Cursor:
    """Chunked reader over a byte stream: fast token scans, exact payload reads."""

    def __init__(self, fh, chunk_size: int = 1 << 20):
        self._fh = fh
        self._chunk = chunk_size
        self._buf = b""
        self._pos = 0

    def _refill(self) -> bool:
        self._buf = self._fh.read(self._chunk)
        self._pos = 0
        return bool(self._buf)

    def read_exact(self, n: int) -> bytes:
        """Read exactly n bytes; returns fewer only at end of stream."""
        parts = []
        need = n
        while need:
            avail = len(self._buf) - self._pos
            if avail == 0:
                if not self._refill():
                    break
                continue
            take = min(avail, need)
            parts.append(self._buf[self._pos : self._pos + take])
            self._pos += take
            need -= take
        return b"".join(parts)

    def read_header_line(self) -> bytes | None:
        out = bytearray()
        while len(out) <= _HEADER_LIMIT:
            if self._pos >= len(self._buf):
                if not self._refill():
                    return None
            nl = self._buf.find(b"\n", self._pos)
            if nl == -1:
                out += self._buf[self._pos :]
                self._pos = len(self._buf)
            else:
                out += self._buf[self._pos : nl]
                self._pos = nl + 1
                return bytes(out)
        raise FormatError("header line too long")

    def read_token(self) -> bytes | None:
        """Read token bytes up to the separating space.

        Leading newlines (the optional terminator of the previous row) are
        skipped; a newline after the first token byte is a format violation.
        Returns None at a clean end of stream.
        """
        out = bytearray()
        while True:
            if self._pos >= len(self._buf):
                if not self._refill():
                    if out:
                        raise FormatError("truncated payload: stream ended inside a token")
                    return None
            sp = self._buf.find(b" ", self._pos)
            nl = self._buf.find(b"\n", self._pos)
            if nl != -1 and (sp == -1 or nl < sp):
                if out or nl > self._pos:
                    raise FormatError("token contains whitespace")
                self._pos = nl + 1  # row-terminating LF from the previous vector
                continue
            if sp == -1:
                out += self._buf[self._pos :]
                self._pos = len(self._buf)
                continue
            out += self._buf[self._pos : sp]
            self._pos = sp + 1
            if not out:
                raise FormatError("empty token")
            return bytes(out)


def _as_reader(source):
    """Accept a path, bytes, or binary file-like; returns (file-like, owns)."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), True
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(bytes(source)), True
    return source, False


def _parse_header(line: bytes) -> tuple[int, int]:
    try:
        fields = line.decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise FormatError("header is not ASCII") from exc
    if len(fields) != 2:
        raise FormatError(f"malformed header: {line!r}")
    try:
        count, dims = int(fields[0]), int(fields[1])
    except ValueError as exc:
        raise FormatError(f"malformed header: {line!r}") from exc
    if count < 1 or dims < 1:
        raise FormatError(f"vocab count and dims must be positive, got {count} x {dims}")
    return count, dims


def load_word2vec_binary(source, max_rows: int | None = None) -> EmbeddingModel:
    """Load a model from the word2vec binary format.

    Layout: ASCII header ``<count> <dims>\\n``, then per word the token bytes
    terminated by a single space followed by dims little-endian float32
    values; an optional LF after each vector is tolerated.

    ``max_rows`` keeps only the leading rows of the file (the format orders
    the vocabulary by corpus frequency, so a prefix is a frequency cut).
    """
    fh, owns = _as_reader(source)
    try:
        cursor = _Cursor(fh)
        header = cursor.read_header_line()
        if header is None:
            raise FormatError("missing header")
        count, dims = _parse_header(header)
        rows = count if max_rows is None else min(count, max_rows)
        raw = np.empty((rows, dims), dtype="<f4")
        words: list[str] = []
        payload_len = 4 * dims
        for i in range(rows):
            token_bytes = cursor.read_token()
            if token_bytes is None:
                raise FormatError(
                    f"truncated payload: header promised {count} words, got {i}"
                )
            try:
                words.append(token_bytes.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise FormatError(f"token at row {i} is not valid UTF-8") from exc
            payload = cursor.read_exact(payload_len)
            if len(payload) != payload_len:
                raise FormatError(f"truncated payload: vector for row {i} is incomplete")
            raw[i] = np.frombuffer(payload, dtype="<f4", count=dims)
        name = source if isinstance(source, (str, os.PathLike)) else None
        return EmbeddingModel(Vocabulary(words), raw, source=str(name) if name else None)
    finally:
        if owns:
            fh.close()


def load_word2vec_text(source, max_rows: int | None = None) -> EmbeddingModel:
    """Load a model from the word2vec text format.

    Each line is ``<token> <v1> ... <vd>``. A first line holding exactly two
    integers is treated as the optional ``<count> <dims>`` header.
    """
    fh, owns = _as_reader(source)
    try:
        data = fh.read()
    finally:
        if owns:
            fh.close()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("text model is not valid UTF-8") from exc

    lines = text.split("\n")
    while lines and lines[-1].strip() == "":
        lines.pop()
    if not lines:
        raise FormatError("empty model file")

    count: int | None = None
    dims: int | None = None
    first = lines[0].split()
    if len(first) == 2:
        try:
            count, dims = int(first[0]), int(first[1])
        except ValueError:
            count = dims = None
        else:
            if count < 1 or dims < 1:
                raise FormatError(
                    f"vocab count and dims must be positive, got {count} x {dims}"
                )
            lines = lines[1:]

    if count is not None and len(lines) < count:
        raise FormatError(
            f"truncated payload: header promised {count} words, got {len(lines)}"
        )
    rows = len(lines) if count is None else count
    if max_rows is not None:
        rows = min(rows, max_rows)

    words: list[str] = []
    vectors: list[np.ndarray] = []
    for i in range(rows):
        fields = lines[i].split()
        if not fields:
            raise FormatError(f"blank line at row {i}")
        token, values = fields[0], fields[1:]
        if dims is None:
            dims = len(values)
            if dims < 1:
                raise FormatError(f"row {i} has no vector components")
        if len(values) != dims:
            raise FormatError(
                f"inconsistent column count at row {i}: expected {dims}, got {len(values)}"
            )
        try:
            row = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"non-numeric field at row {i}") from exc
        words.append(token)
        vectors.append(row.astype(np.float32))
    name = source if isinstance(source, (str, os.PathLike)) else None
    return EmbeddingModel(
        Vocabulary(words), np.stack(vectors), source=str(name) if name else None
    )


def save_model(model: EmbeddingModel, format: str = "binary") -> bytes:
    """Serialize the model at its current revision.

    Binary round-trips bit-exactly; text uses 9 significant digits, which
    round-trips float32 exactly as well.
    """
    if format not in ("binary", "text"):
        raise FormatError(f"unknown model format: {format!r}")
    with model.read_lock():
        words = model.vocab.words
        raw = model.raw
        if format == "binary":
            out = io.BytesIO()
            out.write(f"{len(words)} {model.dims}\n".encode("ascii"))
            for token, row in zip(words, raw):
                out.write(token.encode("utf-8"))
                out.write(b" ")
                out.write(row.astype("<f4", copy=False).tobytes())
                out.write(b"\n")
            return out.getvalue()
        lines = [f"{len(words)} {model.dims}"]
        for token, row in zip(words, raw):
            lines.append(token + " " + " ".join(f"{float(v):.9g}" for v in row))
        return ("\n".join(lines) + "\n").encode("utf-8")


def save_model_file(model: EmbeddingModel, path, format: str = "binary") -> Path:
    """Write :func:`save_model` output to ``path`` and return it."""
    path = Path(path)
    path.write_bytes(save_model(model, format))
    return path
