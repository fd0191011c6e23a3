"""Shared test fixtures: brute-force oracles and the synthetic
keyword-separable corpus with its clustered perturbation resources."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from embedattack import make_vocabulary
from embedattack.corpus import Corpus, Sentence
from embedattack.vocab import Vocabulary


# -- independent oracles ------------------------------------------------------


def brute_knn(entries: list[tuple[int, list[float]]], query: list[float], k: int):
    """Plain-python KNN oracle: full sort by (distance, entry position)."""
    scored = []
    for pos, (tid, vec) in enumerate(entries):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(vec, query)))
        scored.append((d, pos, tid))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(tid, d) for d, _, tid in scored[: min(k, len(scored))]]


def brute_nearest(point, ids, rows, p):
    """Exhaustive projection oracle: min distance, ties to lowest id."""
    best_id, best_d = None, None
    for tid in sorted(ids):
        row = rows[tid]
        if p == 1:
            d = sum(abs(a - b) for a, b in zip(point, row))
        else:
            d = math.sqrt(sum((a - b) ** 2 for a, b in zip(point, row)))
        if best_d is None or d < best_d:
            best_id, best_d = tid, d
    return best_id


def brute_contextual(entries, query, k, eps, original_id):
    """Sort-and-count oracle for the contextual candidate filter."""
    hits = brute_knn(entries, query, k)
    counts: dict[int, int] = {}
    for tid, _ in hits:
        counts[tid] = counts.get(tid, 0) + 1
    keep = {tid for tid, c in counts.items() if c >= eps and tid != original_id}
    keep.add(original_id)
    return sorted(keep)


def single_substitution_exists(model, ids, label) -> bool:
    """Exhaustive oracle: does any single-token substitution flip the
    prediction away from ``label``? Direct numpy forward, no attack code."""
    emb = model.embedding_
    rows = emb[np.asarray(ids)]
    total = rows.sum(axis=0)
    n = len(ids)
    for i in range(n):
        pooled = (total - rows[i] + emb) / n  # one row per candidate token
        hidden = np.maximum(pooled @ model.w1_ + model.b1_, 0.0)
        logits = hidden @ model.w2_ + model.b2_
        if (np.argmax(logits, axis=1) != label).any():
            return True
    return False


# -- synthetic keyword-separable corpus ---------------------------------------

ESCAPE_GROUPS = ("typo", "knowledge", "contextual")


@dataclass
class SyntheticSetup:
    """A 2-class corpus where each sentence carries exactly one class
    keyword among filler tokens. Keyword pairs are split into three escape
    groups: each group's cross-class substitution is reachable through
    exactly one perturbation function."""

    vocab: Vocabulary
    corpus: Corpus
    pair_of_sentence: list[int]
    class0_kw: list[str]
    class1_kw: list[str]
    group_of_pair: list[str]
    index_dim: int = 8
    cluster_centers: np.ndarray = field(default=None)

    def sequences_and_labels(self):
        X = [
            np.array([self.vocab.id(t) for t in s.tokens], dtype=np.int64)
            for s in self.corpus.sentences
        ]
        y = [s.label for s in self.corpus.sentences]
        return X, y


def build_synthetic(
    n_sentences=200,
    vocab_size=500,
    n_pairs=30,
    min_len=6,
    max_len=12,
    seed=11,
) -> SyntheticSetup:
    """Sentences come in twins sharing the same filler context and differing
    only in the class keyword, so fillers are exactly class-neutral and a
    bag-of-words rule on the keywords is the unique separator."""
    assert n_sentences % 2 == 0
    rng = np.random.default_rng(seed)
    class0 = [f"k{i:02d}x" for i in range(n_pairs)]
    groups = [ESCAPE_GROUPS[i % 3] for i in range(n_pairs)]
    class1 = [
        f"k{i:02d}y" if groups[i] == "typo" else f"q{i:02d}z" for i in range(n_pairs)
    ]
    n_fillers = vocab_size - 1 - 2 * n_pairs
    fillers = [f"f{j:03d}" for j in range(n_fillers)]
    vocab = make_vocabulary(["<unk>"] + class0 + class1 + fillers)

    sentences = []
    pair_of_sentence = []
    dim = 8
    for _ in range(n_sentences // 2):
        pair = int(rng.integers(n_pairs))
        length = int(rng.integers(min_len, max_len + 1))
        context = [fillers[int(j)] for j in rng.integers(n_fillers, size=length - 1)]
        slot = int(rng.integers(length))
        for label in (0, 1):
            kw = class1[pair] if label else class0[pair]
            toks = context[:slot] + [kw] + context[slot:]
            sentences.append(
                Sentence(
                    tokens=tuple(toks),
                    label=label,
                    attack_mask=None,
                    side_ref=len(sentences),
                )
            )
            pair_of_sentence.append(pair)

    centers = rng.normal(size=(n_pairs, dim)) * 10.0
    return SyntheticSetup(
        vocab=vocab,
        corpus=Corpus(sentences=tuple(sentences)),
        pair_of_sentence=pair_of_sentence,
        class0_kw=class0,
        class1_kw=class1,
        group_of_pair=groups,
        index_dim=dim,
        cluster_centers=centers,
    )


def write_corpus_file(setup: SyntheticSetup, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, s in enumerate(setup.corpus.sentences):
            fh.write("\t".join([" ".join(s.tokens), str(s.label), "-", str(i)]) + "\n")


def write_vocab_file(setup: SyntheticSetup, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in setup.vocab.tokens:
            fh.write(tok + "\n")


def write_typo_rules_file(path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("[rules]\nenabled = sub_visual\nhomophone_cap = 5\n")
        fh.write("[visual_subs]\nx = y\ny = x\n")


def write_synonym_kb_file(setup: SyntheticSetup, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, group in enumerate(setup.group_of_pair):
            if group != "knowledge":
                continue
            a, b = setup.class0_kw[i], setup.class1_kw[i]
            fh.write(f"{a}\tVERB:{b}\n")
            fh.write(f"{b}\tVERB:{a}\n")


def write_index_file(setup: SyntheticSetup, path, copies=10, jitter=0.01) -> None:
    rng = np.random.default_rng(7)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{setup.index_dim}\n")
        for i, group in enumerate(setup.group_of_pair):
            if group != "contextual":
                continue
            center = setup.cluster_centers[i]
            for tok in (setup.class0_kw[i], setup.class1_kw[i]):
                for c in range(copies):
                    vec = center + rng.normal(size=setup.index_dim) * jitter
                    fh.write(
                        f"{tok} {i} " + " ".join(repr(float(v)) for v in vec) + "\n"
                    )


def write_side_vector_file(setup: SyntheticSetup, path) -> None:
    """One query vector per contextual-group keyword position, pointing at
    that pair's cluster center."""
    with open(path, "w", encoding="utf-8") as fh:
        for s_idx, sentence in enumerate(setup.corpus.sentences):
            pair = setup.pair_of_sentence[s_idx]
            if setup.group_of_pair[pair] != "contextual":
                continue
            kw = (
                setup.class1_kw[pair]
                if sentence.label
                else setup.class0_kw[pair]
            )
            for pos, tok in enumerate(sentence.tokens):
                if tok == kw:
                    vec = setup.cluster_centers[pair]
                    fh.write(
                        f"{s_idx} {pos} " + " ".join(repr(float(v)) for v in vec) + "\n"
                    )
                    break


def write_campaign_config(
    path,
    workdir,
    functions="typo knowledge contextual",
    goal="untargeted",
    target_class=None,
    m=100,
    parallelism=1,
    k=20,
    eps=8,
    epochs=30,
    num_classes=2,
    seed=1111,
    extra_attack="",
) -> None:
    target_line = f"target_class = {target_class}\n" if target_class is not None else ""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"""[resources]
vocab = {workdir}/vocab.txt
typo_rules = {workdir}/typo.ini
synonym_kb = {workdir}/kb.tsv
contextual_index = {workdir}/index.txt
side_vectors = {workdir}/side.txt

[perturb]
functions = {functions}
k = {k}
eps = {eps}
static_fallback = false

[attack]
goal = {goal}
{target_line}c = 100
kappa = 1
m = {m}
p = 2
alpha = 0.1
early_exit = false
seed = {seed}
{extra_attack}
[train]
learning_rate = 0.01
epochs = {epochs}
batch_size = 32
seed = 0
init_scale = 1.0
embed_dim = 64
hidden_dim = 128
num_classes = {num_classes}

[campaign]
corpus = {workdir}/corpus.tsv
tokenizer = whitespace
parallelism = {parallelism}
"""
        )


def write_all_resources(setup: SyntheticSetup, workdir) -> None:
    os.makedirs(workdir, exist_ok=True)
    write_vocab_file(setup, os.path.join(workdir, "vocab.txt"))
    write_corpus_file(setup, os.path.join(workdir, "corpus.tsv"))
    write_typo_rules_file(os.path.join(workdir, "typo.ini"))
    write_synonym_kb_file(setup, os.path.join(workdir, "kb.tsv"))
    write_index_file(setup, os.path.join(workdir, "index.txt"))
    write_side_vector_file(setup, os.path.join(workdir, "side.txt"))
