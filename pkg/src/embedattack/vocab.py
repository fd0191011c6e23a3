"""Vocabulary, embedding matrix, contextual embedding index, and the
nearest-neighbor queries built on them.

All types here are immutable after construction and safe to share across
attack workers; every query is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySpace,
    IdOutOfRange,
    InconsistentDimension,
    MalformedFile,
)
from .validation import as_matrix, as_vector, require_finite


@dataclass(frozen=True)
class Vocabulary:
    """Dense token <-> id map. Id 0 is always the reserved unknown token."""

    tokens: tuple[str, ...]
    id_of: dict[str, int] = field(repr=False)
    unk_id: int = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.id_of

    def id(self, token: str) -> int:
        """Id of ``token``, falling back to the unknown id."""
        return self.id_of.get(token, self.unk_id)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def content_hash(self) -> int:
        """FNV-1a hash over the token list; pairs models and datasets
        with the exact vocabulary they were built against."""
        h = 0xCBF29CE484222325
        for tok in self.tokens:
            for byte in tok.encode("utf-8") + b"\n":
                h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        return h


def make_vocabulary(tokens: Sequence[str]) -> Vocabulary:
    """Build a Vocabulary from an ordered token list (element 0 = unknown)."""
    if not tokens:
        raise MalformedFile("vocabulary is empty: no unknown token declared")
    id_of: dict[str, int] = {}
    for i, tok in enumerate(tokens):
        if not tok or tok.split() != [tok]:
            raise MalformedFile(f"bad token at line {i}: {tok!r}")
        if tok in id_of:
            raise MalformedFile(f"duplicate token {tok!r} at line {i}")
        id_of[tok] = i
    return Vocabulary(tokens=tuple(tokens), id_of=id_of, unk_id=0)


def load_vocabulary(path) -> Vocabulary:
    """Read a vocabulary file: one token per line, line 0 is the unknown token."""
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh]
    while tokens and tokens[-1] == "":
        tokens.pop()
    return make_vocabulary(tokens)


def save_vocabulary(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in vocab.tokens:
            fh.write(tok + "\n")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row i is the embedding of token id i."""

    rows: np.ndarray  # (|V|, dim) float64

    def __post_init__(self):
        rows = as_matrix(self.rows, name="embedding rows").copy()
        require_finite(rows, "embedding rows")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


def embed_sequence(ids: Sequence[int], matrix: EmbeddingMatrix) -> np.ndarray:
    """Map token ids to their embedding rows. Returns an (n, dim) array;
    an empty id list yields a (0, dim) array."""
    arr = np.asarray(ids, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= len(matrix)):
        raise IdOutOfRange(f"id outside [0, {len(matrix)})")
    return matrix.rows[arr].astype(np.float64, copy=True)


def load_embedding_matrix(path, vocab: Vocabulary) -> EmbeddingMatrix:
    """Read an embedding file: header "<|V|> <dim>", then one
    "<token> <f1> ... <fdim>" line per vocabulary entry, in vocabulary order."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MalformedFile("embedding header must be '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MalformedFile(f"bad embedding header: {exc}") from exc
        if count != len(vocab):
            raise MalformedFile(
                f"embedding count {count} != vocabulary size {len(vocab)}"
            )
        if dim < 1:
            raise MalformedFile("embedding dim must be positive")
        rows = np.empty((count, dim), dtype=np.float64)
        for i in range(count):
            parts = fh.readline().split()
            if len(parts) != dim + 1:
                raise MalformedFile(f"embedding line {i} has {len(parts)} fields")
            if parts[0] != vocab.tokens[i]:
                raise MalformedFile(
                    f"embedding line {i} token {parts[0]!r} != vocab {vocab.tokens[i]!r}"
                )
            try:
                rows[i] = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise MalformedFile(f"bad float on embedding line {i}") from exc
    if not np.isfinite(rows).all():
        raise MalformedFile("embedding file contains non-finite values")
    return EmbeddingMatrix(rows=rows)


def save_embedding_matrix(matrix: EmbeddingMatrix, vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vocab)} {matrix.dim}\n")
        for tok, row in zip(vocab.tokens, matrix.rows):
            fh.write(tok + " " + " ".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class NeighborHit:
    token_id: int
    distance: float


@dataclass(frozen=True)
class ContextualIndex:
    """Bank of (token id, context vector) entries searched by KNN.

    Entries keep their input order; ``source_ids`` carries an optional
    per-entry tag (-1 when absent). ``dropped_count`` reports how many
    records were discarded at build time for naming tokens outside the
    vocabulary.
    """

    dim: int
    token_ids: np.ndarray  # (N,) int64
    vectors: np.ndarray  # (N, dim) float64
    source_ids: np.ndarray  # (N,) int64, -1 where untagged
    dropped_count: int = 0

    def __post_init__(self):
        for name in ("token_ids", "vectors", "source_ids"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return self.token_ids.shape[0]


def build_index(
    records: Iterable[tuple[str, Sequence[float], int | None]],
    vocab: Vocabulary,
) -> ContextualIndex:
    """Assemble a ContextualIndex from (token, vector, source tag) records.

    Records whose token is not in ``vocab`` are dropped and counted; the
    survivors keep their input order. Mixed vector dimensions raise
    InconsistentDimension.
    """
    token_ids: list[int] = []
    vectors: list[np.ndarray] = []
    source_ids: list[int] = []
    dropped = 0
    dim: int | None = None
    for token, vec, source in records:
        arr = as_vector(vec, name="index vector")
        require_finite(arr, "index vector")
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise InconsistentDimension(
                f"index vector of dim {arr.shape[0]} after dim {dim}"
            )
        if token not in vocab:
            dropped += 1
            continue
        token_ids.append(vocab.id_of[token])
        vectors.append(arr)
        source_ids.append(-1 if source is None else int(source))
    if dim is None:
        dim = 0
    stacked = (
        np.stack(vectors) if vectors else np.empty((0, dim), dtype=np.float64)
    )
    return ContextualIndex(
        dim=dim,
        token_ids=np.asarray(token_ids, dtype=np.int64),
        vectors=stacked,
        source_ids=np.asarray(source_ids, dtype=np.int64),
        dropped_count=dropped,
    )


def load_index(path, vocab: Vocabulary) -> ContextualIndex:
    """Read an index file: header "<dim>", then
    "<token> <source_id> <f1> ... <fdim>" lines."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 1:
            raise MalformedFile("index header must be '<dim>'")
        try:
            dim = int(header[0])
        except ValueError as exc:
            raise MalformedFile(f"bad index header: {exc}") from exc
        if dim < 1:
            raise MalformedFile("index dim must be positive")

        def records():
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 2:
                    raise MalformedFile(f"index line {lineno} has {len(parts)} fields")
                try:
                    source = int(parts[1])
                    vec = [float(p) for p in parts[2:]]
                except ValueError as exc:
                    raise MalformedFile(f"bad value on index line {lineno}") from exc
                yield parts[0], vec, (None if source < 0 else source)

        index = build_index(records(), vocab)
    if len(index) and index.dim != dim:
        raise MalformedFile("index body dimension disagrees with header")
    if len(index) == 0:
        index = ContextualIndex(
            dim=dim,
            token_ids=index.token_ids,
            vectors=np.empty((0, dim), dtype=np.float64),
            source_ids=index.source_ids,
            dropped_count=index.dropped_count,
        )
    return index


def save_index(index: ContextualIndex, vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{index.dim}\n")
        for tid, src, vec in zip(index.token_ids, index.source_ids, index.vectors):
            fh.write(
                f"{vocab.tokens[tid]} {src} "
                + " ".join(repr(float(v)) for v in vec)
                + "\n"
            )


def knn_query(index: ContextualIndex, query, k: int) -> list[NeighborHit]:
    """The min(k, |index|) entries closest to ``query`` in Euclidean
    distance, sorted ascending; ties keep input-entry order."""
    if k < 1:
        raise ValueError("k must be positive")
    q = as_vector(query, dim=index.dim if len(index) else None, name="query")
    if len(index) == 0:
        return []
    if q.shape[0] != index.dim:
        raise DimensionMismatch(f"query dim {q.shape[0]} != index dim {index.dim}")
    diffs = index.vectors - q
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    order = np.argsort(dists, kind="stable")[: min(k, len(index))]
    return [
        NeighborHit(token_id=int(index.token_ids[i]), distance=float(dists[i]))
        for i in order
    ]


def distances_to_rows(point: np.ndarray, rows: np.ndarray, p: int) -> np.ndarray:
    """p-norm distance from ``point`` to every row of ``rows`` (p in {1, 2})."""
    diffs = rows - point
    if p == 1:
        return np.abs(diffs).sum(axis=1)
    if p == 2:
        return np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    raise ValueError(f"norm order must be 1 or 2, got {p}")


def nearest_token_in_space(perturbed, space, matrix: EmbeddingMatrix, p: int = 2) -> int:
    """Token of ``space`` whose embedding row is p-norm closest to the
    perturbed vector; ties resolve to the lowest token id.

    ``space`` may be a SearchSpace or any iterable of token ids.
    """
    ids = getattr(space, "candidate_ids", space)
    ids = np.asarray(sorted(int(i) for i in ids), dtype=np.int64)
    if ids.size == 0:
        raise EmptySpace("search space holds no candidates")
    if ids.min() < 0 or ids.max() >= len(matrix):
        raise IdOutOfRange("search space id outside the vocabulary")
    point = as_vector(perturbed, dim=matrix.dim, name="perturbed embedding")
    dists = distances_to_rows(point, matrix.rows[ids], p)
    return int(ids[int(np.argmin(dists))])
