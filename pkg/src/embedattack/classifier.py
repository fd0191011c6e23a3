"""A small differentiable text classifier: token embeddings, mean pooling,
one ReLU hidden layer, linear logits. Gradients are computed by hand so the
attack can differentiate through the model w.r.t. its input embeddings.

All arithmetic is float64; training is deterministic under a fixed seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    EmptyInput,
    LabelOutOfRange,
    MalformedDistribution,
    MalformedFile,
    NotFitted,
    ShapeMismatch,
)
from .optim import Adam
from .validation import as_matrix, as_token_ids
from .vocab import EmbeddingMatrix, Vocabulary

MODEL_MAGIC = b"SEMCLF1\n"


@dataclass
class ForwardTrace:
    """Intermediates cached by a forward pass, consumed by backprop."""

    embeddings: np.ndarray  # (n, d)
    pooled: np.ndarray  # (d,)
    hidden_pre: np.ndarray  # (h,)
    hidden_post: np.ndarray  # (h,)
    logits: np.ndarray  # (C,)


class MeanEmbeddingClassifier(BaseEstimator):
    """sklearn-style estimator over variable-length token-id sequences.

    ``fit(X, y)`` trains with mini-batch Adam on cross-entropy;
    ``fit_soft(X, probs)`` distills from teacher probability vectors.
    Parameters (including the embedding table) live in float64 arrays and
    are fitted lazily: the first fit call initializes them from ``seed``,
    later calls continue from the current values, so fitting for zero
    epochs leaves the model unchanged.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        num_classes: int = 2,
        embed_dim: int = 64,
        hidden_dim: int = 128,
        learning_rate: float = 0.01,
        epochs: int = 30,
        batch_size: int = 32,
        seed: int = 0,
        init_scale: float = 1.0,
        embedding_init: EmbeddingMatrix | None = None,
    ):
        self.vocab = vocab
        self.num_classes = num_classes
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.init_scale = init_scale
        self.embedding_init = embedding_init

    # -- parameters ------------------------------------------------------

    @property
    def is_fitted(self) -> bool:
        return hasattr(self, "embedding_")

    def _require_fitted(self):
        if not self.is_fitted:
            raise NotFitted("model has no parameters yet; call fit or init_params")

    def init_params(self) -> "MeanEmbeddingClassifier":
        """Seeded uniform init in +-init_scale/sqrt(fan_in) per layer."""
        rng = np.random.default_rng(self.seed)
        d, h, c = self.embed_dim, self.hidden_dim, self.num_classes
        if self.embedding_init is not None:
            if self.embedding_init.dim != d or len(self.embedding_init) != len(self.vocab):
                raise ShapeMismatch("embedding_init shape disagrees with model dims")
            emb = self.embedding_init.rows.copy()
        else:
            emb = rng.uniform(-1, 1, size=(len(self.vocab), d)) * (
                self.init_scale / np.sqrt(d)
            )
        self.embedding_ = emb
        self.w1_ = rng.uniform(-1, 1, size=(d, h)) * (self.init_scale / np.sqrt(d))
        self.b1_ = np.zeros(h)
        self.w2_ = rng.uniform(-1, 1, size=(h, c)) * (self.init_scale / np.sqrt(h))
        self.b2_ = np.zeros(c)
        self.vocab_hash_ = self.vocab.content_hash()
        self._rng = rng
        return self

    def _params(self) -> list[np.ndarray]:
        return [self.embedding_, self.w1_, self.b1_, self.w2_, self.b2_]

    @property
    def embedding_matrix(self) -> EmbeddingMatrix:
        """The model-owned matrix used by both pooling and the attack's
        token projection."""
        self._require_fitted()
        return EmbeddingMatrix(rows=self.embedding_.copy())

    # -- forward / backward ----------------------------------------------

    def forward(self, ids) -> np.ndarray:
        """Logits for a token-id sequence."""
        self._require_fitted()
        ids = as_token_ids(ids, len(self.vocab), allow_empty=False)
        logits, _ = self.forward_from_embeddings(self.embedding_[ids])
        return logits

    def forward_from_embeddings(self, embs) -> tuple[np.ndarray, ForwardTrace]:
        """Logits plus the cached trace, from explicit per-token embeddings.

        Agrees exactly with ``forward`` when the embeddings are the model's
        own rows for the same ids.
        """
        self._require_fitted()
        embs = as_matrix(embs, cols=self.embed_dim, name="input embeddings")
        if embs.shape[0] == 0:
            raise EmptyInput("cannot classify an empty sequence")
        pooled = embs.mean(axis=0)
        hidden_pre = pooled @ self.w1_ + self.b1_
        hidden_post = np.maximum(hidden_pre, 0.0)
        logits = hidden_post @ self.w2_ + self.b2_
        return logits, ForwardTrace(embs, pooled, hidden_pre, hidden_post, logits)

    def grad_wrt_embeddings(self, trace: ForwardTrace, logits_grad) -> np.ndarray:
        """Reverse-mode gradient of <logits_grad, logits> w.r.t. each input
        embedding; mean pooling spreads it equally across positions."""
        self._require_fitted()
        gz = np.asarray(logits_grad, dtype=np.float64)
        if gz.shape != (self.num_classes,):
            raise ShapeMismatch(
                f"logits gradient shape {gz.shape} != ({self.num_classes},)"
            )
        g_hidden = (self.w2_ @ gz) * (trace.hidden_pre > 0)
        g_pooled = self.w1_ @ g_hidden
        n = trace.embeddings.shape[0]
        return np.tile(g_pooled / n, (n, 1))

    def _accumulate_grads(
        self, acc: list[np.ndarray], trace: ForwardTrace, gz: np.ndarray, ids: np.ndarray
    ) -> None:
        """Add one sentence's parameter gradients into the batch accumulators."""
        g_hidden = (self.w2_ @ gz) * (trace.hidden_pre > 0)
        np.add.at(acc[0], ids, self.grad_wrt_embeddings(trace, gz))
        acc[1] += np.outer(trace.pooled, g_hidden)
        acc[2] += g_hidden
        acc[3] += np.outer(trace.hidden_post, gz)
        acc[4] += gz

    def predict(self, ids) -> int:
        """argmax of the logits; ties resolve to the lowest class index."""
        return int(np.argmax(self.forward(ids)))

    def predict_many(self, sequences) -> np.ndarray:
        return np.array([self.predict(ids) for ids in sequences], dtype=np.int64)

    def score(self, X, y) -> float:
        y = np.asarray(y)
        return float((self.predict_many(X) == y).mean())

    # -- training ----------------------------------------------------------

    def fit(self, X, y) -> "MeanEmbeddingClassifier":
        """Minimize cross-entropy on (token-id sequences, labels)."""
        y = np.asarray(y, dtype=np.int64)
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise LabelOutOfRange(
                f"label outside [0, {self.num_classes}): {y[(y < 0) | (y >= self.num_classes)][0]}"
            )
        targets = np.zeros((len(y), self.num_classes))
        targets[np.arange(len(y)), y] = 1.0
        return self.fit_soft(X, targets)

    def fit_soft(self, X, target_probs) -> "MeanEmbeddingClassifier":
        """Minimize soft cross-entropy -sum(p_target * log softmax(z)).

        With one-hot targets this is exactly ``fit``'s objective, step for
        step. Teacher rows must sum to 1 within 1e-6.
        """
        probs = as_matrix(target_probs, name="target distributions")
        if probs.shape[0] != len(X):
            raise MalformedDistribution("one distribution per sentence required")
        if probs.shape[1] != self.num_classes:
            raise MalformedDistribution(
                f"distribution length {probs.shape[1]} != num_classes {self.num_classes}"
            )
        if probs.size and np.abs(probs.sum(axis=1) - 1.0).max() > 1e-6:
            raise MalformedDistribution("distributions must sum to 1 within 1e-6")
        sequences = [
            as_token_ids(ids, len(self.vocab), allow_empty=False) for ids in X
        ]
        if not self.is_fitted:
            self.init_params()
        if not hasattr(self, "loss_curve_"):
            self.loss_curve_ = []
        opt = Adam(self._params(), lr=self.learning_rate)
        order_rng = np.random.default_rng(self._rng.integers(2**63))
        n = len(sequences)
        for _ in range(self.epochs):
            order = order_rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                grads = [np.zeros_like(p) for p in self._params()]
                batch_loss = 0.0
                for idx in batch:
                    ids = sequences[idx]
                    logits, trace = self.forward_from_embeddings(self.embedding_[ids])
                    log_probs = _log_softmax(logits)
                    batch_loss += -float(probs[idx] @ log_probs)
                    gz = np.exp(log_probs) - probs[idx]
                    self._accumulate_grads(grads, trace, gz, ids)
                for g in grads:
                    g /= len(batch)
                opt.step(grads)
                epoch_loss += batch_loss
            self.loss_curve_.append(epoch_loss / max(n, 1))
        return self

    def distill_from(self, X, teacher_probs) -> float:
        """Train on teacher soft labels; returns argmax agreement with the
        teacher over the training sentences."""
        self.fit_soft(X, teacher_probs)
        teacher_lab = np.argmax(np.asarray(teacher_probs, dtype=np.float64), axis=1)
        student_lab = self.predict_many(X)
        agreement = float((student_lab == teacher_lab).mean()) if len(X) else 0.0
        self.distill_agreement_ = agreement
        return agreement

    def predict_proba_one(self, ids) -> np.ndarray:
        return np.exp(_log_softmax(self.forward(ids)))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    return shifted - np.log(np.exp(shifted).sum())


# -- model file I/O ---------------------------------------------------------


def save_model(model: MeanEmbeddingClassifier, path) -> None:
    """Little-endian binary model file: magic, int64 header
    (|V|, embed_dim, hidden_dim, num_classes, seed, vocab_hash), then the
    flat float64 parameter arrays."""
    model._require_fitted()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(
            struct.pack(
                "<5qQ",
                len(model.vocab),
                model.embed_dim,
                model.hidden_dim,
                model.num_classes,
                model.seed,
                model.vocab_hash_,
            )
        )
        for arr in model._params():
            fh.write(arr.astype("<f8").tobytes())


def load_model(path, vocab: Vocabulary) -> MeanEmbeddingClassifier:
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise MalformedFile(f"not a model file (magic {magic!r})")
        header = fh.read(struct.calcsize("<5qQ"))
        if len(header) != struct.calcsize("<5qQ"):
            raise MalformedFile("truncated model header")
        vsize, d, h, c, seed, vhash = struct.unpack("<5qQ", header)
        if vsize != len(vocab):
            raise MalformedFile(
                f"model vocabulary size {vsize} != supplied vocabulary {len(vocab)}"
            )
        if vhash != vocab.content_hash():
            raise MalformedFile("model was built against a different vocabulary")
        model = MeanEmbeddingClassifier(
            vocab=vocab, num_classes=c, embed_dim=d, hidden_dim=h, seed=seed
        )
        shapes = [(vsize, d), (d, h), (h,), (h, c), (c,)]
        arrays = []
        for shape in shapes:
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise MalformedFile("truncated model parameters")
            arrays.append(np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
        if fh.read(1):
            raise MalformedFile("trailing bytes after model parameters")
    model.embedding_, model.w1_, model.b1_, model.w2_, model.b2_ = arrays
    model.vocab_hash_ = vhash
    model._rng = np.random.default_rng(seed)
    if not all(np.isfinite(a).all() for a in arrays):
        raise MalformedFile("model parameters contain non-finite values")
    return model


def save_teacher_outputs(probs: np.ndarray, path) -> None:
    """One "<sentence_index>\\t<p0>,...,<pC-1>" line per corpus sentence."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(probs):
            fh.write(f"{i}\t" + ",".join(repr(float(p)) for p in row) + "\n")


def load_teacher_outputs(path, n_sentences: int, num_classes: int) -> np.ndarray:
    probs = np.full((n_sentences, num_classes), np.nan)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedFile(f"teacher line {lineno}: expected index<TAB>probs")
            try:
                idx = int(parts[0])
                row = [float(p) for p in parts[1].split(",")]
            except ValueError as exc:
                raise MalformedFile(f"teacher line {lineno}: {exc}") from exc
            if not 0 <= idx < n_sentences:
                raise MalformedFile(f"teacher line {lineno}: index {idx} out of range")
            if len(row) != num_classes:
                raise MalformedDistribution(
                    f"teacher line {lineno}: {len(row)} probabilities, expected {num_classes}"
                )
            probs[idx] = row
    if np.isnan(probs).any():
        raise MalformedFile("teacher outputs missing for some sentences")
    if np.abs(probs.sum(axis=1) - 1.0).max() > 1e-6:
        raise MalformedDistribution("teacher distributions must sum to 1 within 1e-6")
    return probs
