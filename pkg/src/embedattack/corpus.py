"""Corpus records, the two tokenizer modes, and the side-channel file of
per-position contextual query vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentDimension, LabelOutOfRange, MalformedFile
from .vocab import Vocabulary


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    label: int
    attack_mask: tuple[bool, ...] | None = None
    side_ref: int | None = None

    def __post_init__(self):
        if self.attack_mask is not None and len(self.attack_mask) != len(self.tokens):
            raise MalformedFile(
                f"mask length {len(self.attack_mask)} != {len(self.tokens)} tokens"
            )


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def validate_labels(self, num_classes: int) -> None:
        for i, s in enumerate(self.sentences):
            if not 0 <= s.label < num_classes:
                raise LabelOutOfRange(
                    f"sentence {i} label {s.label} outside [0, {num_classes})"
                )


def tokenize(text: str, mode: str) -> list[str]:
    """"whitespace": lowercased space-separated tokens (English-style);
    "char": every non-space character is a token (Chinese-style)."""
    if mode == "whitespace":
        return text.lower().split()
    if mode == "char":
        return [ch for ch in text if not ch.isspace()]
    raise ValueError(f"unknown tokenizer mode {mode!r}")


def load_corpus(path, mode: str = "whitespace") -> Corpus:
    """Tab-separated records: text, integer label, then optionally a 0/1
    attack-mask string ("-" for none) and a side-vector block id."""
    sentences: list[Sentence] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2 or len(parts) > 4:
                raise MalformedFile(f"corpus line {lineno}: expected 2-4 fields")
            tokens = tuple(tokenize(parts[0], mode))
            if not tokens:
                raise MalformedFile(f"corpus line {lineno}: empty sentence")
            try:
                label = int(parts[1])
            except ValueError as exc:
                raise MalformedFile(f"corpus line {lineno}: bad label") from exc
            if label < 0:
                raise MalformedFile(f"corpus line {lineno}: negative label")
            mask = None
            if len(parts) >= 3 and parts[2] != "-":
                if set(parts[2]) - {"0", "1"}:
                    raise MalformedFile(f"corpus line {lineno}: mask must be 0/1")
                if len(parts[2]) != len(tokens):
                    raise MalformedFile(
                        f"corpus line {lineno}: mask length {len(parts[2])} "
                        f"!= {len(tokens)} tokens"
                    )
                mask = tuple(ch == "1" for ch in parts[2])
            side_ref = None
            if len(parts) == 4 and parts[3] != "-":
                try:
                    side_ref = int(parts[3])
                except ValueError as exc:
                    raise MalformedFile(
                        f"corpus line {lineno}: bad side reference"
                    ) from exc
            sentences.append(
                Sentence(tokens=tokens, label=label, attack_mask=mask, side_ref=side_ref)
            )
    return Corpus(sentences=tuple(sentences))


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus.sentences:
            mask = (
                "-"
                if s.attack_mask is None
                else "".join("1" if b else "0" for b in s.attack_mask)
            )
            ref = "-" if s.side_ref is None else str(s.side_ref)
            fh.write("\t".join([" ".join(s.tokens), str(s.label), mask, ref]) + "\n")


def ids_for_sentence(sentence: Sentence, vocab: Vocabulary) -> np.ndarray:
    return np.array([vocab.id(tok) for tok in sentence.tokens], dtype=np.int64)


def load_side_vectors(path) -> dict[int, dict[int, np.ndarray]]:
    """Side vector file: "<block_id> <position> <f1> ... <fd>" lines,
    grouped as {block_id: {position: vector}}."""
    out: dict[int, dict[int, np.ndarray]] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise MalformedFile(f"side-vector line {lineno}: too few fields")
            try:
                block = int(parts[0])
                pos = int(parts[1])
                vec = np.array([float(p) for p in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise MalformedFile(f"side-vector line {lineno}: {exc}") from exc
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise InconsistentDimension(
                    f"side-vector line {lineno}: dim {vec.shape[0]} after {dim}"
                )
            out.setdefault(block, {})[pos] = vec
    return out
