"""Campaign orchestration: build per-sentence search spaces, fan the attacks
out to a bounded worker pool, and assemble the adversarial dataset, metrics
report, and per-record table.

Attacks are pure and deterministic, and results are collected in input
order, so any parallelism degree produces byte-identical output files.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attack import AttackResult, EmbeddingSpaceAttack
from .classifier import MeanEmbeddingClassifier
from .config import CampaignConfig
from .corpus import Corpus, Sentence, ids_for_sentence
from .errors import ConfigError, DimensionMismatch, MalformedFile
from .evaluation import (
    AdvDataset,
    AdvRecord,
    MetricsReport,
    evaluate_dataset,
    space_stats,
)
from .spaces import (
    SearchSpace,
    SpaceBuilder,
    load_synonym_kb,
    load_typo_rules,
    union_spaces,
)
from .vocab import Vocabulary, load_index


def build_space_builder(
    cfg: CampaignConfig, vocab: Vocabulary, model: MeanEmbeddingClassifier | None
) -> SpaceBuilder | None:
    """Load the enabled perturbation resources; None in full-vocabulary mode.

    ``model`` supplies the embedding matrix backing the contextual
    function's static fallback; audits that never touch embeddings may
    pass None.
    """
    if cfg.full_vocab_spaces:
        return None
    typo_rules = load_typo_rules(cfg.typo_rules_path) if "typo" in cfg.functions else None
    kb = load_synonym_kb(cfg.synonym_kb_path) if "knowledge" in cfg.functions else None
    index = load_index(cfg.index_path, vocab) if "contextual" in cfg.functions else None
    return SpaceBuilder(
        vocab=vocab,
        matrix=model.embedding_matrix if model is not None else None,
        typo_rules=typo_rules,
        synonym_kb=kb,
        index=index,
        functions=cfg.functions,
        mode="char" if cfg.tokenizer == "char" else "whitespace",
        k=cfg.k,
        min_count=cfg.eps,
        static_fallback=cfg.static_fallback,
    )


def check_side_vectors(
    side_vectors: dict[int, dict[int, np.ndarray]] | None,
    builder: SpaceBuilder | None,
) -> None:
    if not side_vectors or builder is None or builder.index is None:
        return
    if len(builder.index) == 0:
        return
    for block in side_vectors.values():
        for vec in block.values():
            if vec.shape[0] != builder.index.dim:
                raise DimensionMismatch(
                    f"side vector dim {vec.shape[0]} != index dim {builder.index.dim}"
                )
            return  # dims are uniform per load_side_vectors; one check suffices


def _effective_mask(sentence: Sentence, ids: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """Corpus mask AND in-vocabulary: unknown tokens are unattackable."""
    mask = np.array(
        [tok in vocab for tok in sentence.tokens], dtype=bool
    )
    if sentence.attack_mask is not None:
        mask &= np.asarray(sentence.attack_mask, dtype=bool)
    return mask


def spaces_for_sentence(
    sentence: Sentence,
    ids: np.ndarray,
    mask: np.ndarray,
    vocab: Vocabulary,
    builder: SpaceBuilder | None,
    side_vectors: dict[int, dict[int, np.ndarray]] | None,
) -> list[SearchSpace]:
    if builder is None:
        every = np.arange(len(vocab), dtype=np.int64)
        return [
            SearchSpace(original_id=int(t), candidate_ids=every)
            if mask[i]
            else SearchSpace(original_id=int(t), candidate_ids=np.array([t]))
            for i, t in enumerate(ids)
        ]
    qvecs = None
    if side_vectors is not None and sentence.side_ref is not None:
        qvecs = side_vectors.get(sentence.side_ref)
        if qvecs is not None and max(qvecs) >= len(ids):
            raise MalformedFile(
                f"side vector position {max(qvecs)} outside a "
                f"{len(ids)}-token sentence"
            )
    return builder.spaces_for_sentence(
        list(sentence.tokens), query_vectors=qvecs, attack_mask=list(mask)
    )


@dataclass
class SentenceOutcome:
    index: int
    record: AdvRecord
    result: AttackResult
    candidate_total: int = 0  # sum of |S|-1 over attackable positions
    attackable: int = 0


def run_campaign(
    cfg: CampaignConfig,
    model: MeanEmbeddingClassifier,
    corpus: Corpus,
    builder: SpaceBuilder | None,
    side_vectors: dict[int, dict[int, np.ndarray]] | None = None,
    log="stderr",
) -> tuple[AdvDataset, list[SentenceOutcome], list[int]]:
    """Attack every eligible corpus sentence; returns the dataset, the
    per-sentence outcomes, and the indices of rejected sentences (targeted
    campaigns reject samples whose label already equals the target)."""
    corpus.validate_labels(model.num_classes)
    if log == "stderr":
        log = sys.stderr
    attack: EmbeddingSpaceAttack = cfg.attack
    targeted = attack.goal == "targeted"
    rejected: list[int] = []
    jobs: list[tuple[int, Sentence]] = []
    for i, sentence in enumerate(corpus.sentences):
        if targeted and sentence.label == attack.target_class:
            rejected.append(i)
            if log is not None:
                print(
                    f"sentence {i}: label equals target class "
                    f"{attack.target_class}; skipped",
                    file=log,
                )
            continue
        jobs.append((i, sentence))

    vocab = model.vocab

    def attack_one(job: tuple[int, Sentence]) -> SentenceOutcome:
        i, sentence = job
        ids = ids_for_sentence(sentence, vocab)
        mask = _effective_mask(sentence, ids, vocab)
        spaces = spaces_for_sentence(sentence, ids, mask, vocab, builder, side_vectors)
        result = attack.run(model, ids, sentence.label, spaces, attack_mask=mask)
        record = AdvRecord(
            original_ids=tuple(int(t) for t in ids),
            adversarial_ids=tuple(int(t) for t in result.adversarial_ids),
            truth=sentence.label,
            target=attack.target_class if targeted else None,
            success=result.success,
            perturbed_positions=tuple(result.perturbed_positions),
            attack_mask=tuple(bool(b) for b in mask),
        )
        attackable = int(mask.sum())
        candidate_total = sum(len(spaces[j]) - 1 for j in np.flatnonzero(mask))
        return SentenceOutcome(
            index=i,
            record=record,
            result=result,
            candidate_total=candidate_total,
            attackable=attackable,
        )

    if cfg.parallelism == 1:
        outcomes = [attack_one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            outcomes = list(pool.map(attack_one, jobs))

    dataset = AdvDataset(vocab=vocab, records=tuple(o.record for o in outcomes))
    return dataset, outcomes, rejected


def campaign_report(
    dataset: AdvDataset,
    model: MeanEmbeddingClassifier,
    cfg: CampaignConfig,
    outcomes: list[SentenceOutcome] | None = None,
) -> MetricsReport:
    report = evaluate_dataset(dataset, model)
    if outcomes:
        attackable = sum(o.attackable for o in outcomes)
        candidates = sum(o.candidate_total for o in outcomes)
        report.mean_space_sizes["union"] = (
            candidates / attackable if attackable else 0.0
        )
    return report


def report_lines(report: MetricsReport, cfg: CampaignConfig) -> list[str]:
    """Report body plus the attack settings it was produced under.

    The parallelism degree is deliberately omitted: it must not affect
    any output byte.
    """
    atk = cfg.attack
    lines = report.lines()
    lines += [
        f"goal: {atk.goal}",
        f"c: {repr(float(atk.const))}",
        f"kappa: {repr(float(atk.confidence))}",
        f"m: {atk.max_iter}",
        f"p: {atk.norm}",
        f"alpha: {repr(float(atk.step_size))}",
        f"seed: {atk.seed}",
        f"functions: {' '.join(cfg.functions)}",
        f"k: {cfg.k}",
        f"eps: {cfg.eps}",
    ]
    if atk.goal == "targeted":
        lines.append(f"target_class: {atk.target_class}")
    return lines


def audit_spaces(
    cfg: CampaignConfig,
    corpus: Corpus,
    vocab: Vocabulary,
    builder: SpaceBuilder,
    side_vectors: dict[int, dict[int, np.ndarray]] | None = None,
) -> dict[str, float]:
    """Mean non-identity candidate counts per function and for the union,
    over the attackable positions of the corpus."""
    if builder is None:
        raise ConfigError("space audit needs perturbation functions, not full_vocab")
    per_fn: dict[str, list[SearchSpace]] = {name: [] for name in builder.functions}
    per_fn["union"] = []
    for sentence in corpus.sentences:
        ids = ids_for_sentence(sentence, vocab)
        mask = _effective_mask(sentence, ids, vocab)
        qvecs = None
        if side_vectors is not None and sentence.side_ref is not None:
            qvecs = side_vectors.get(sentence.side_ref)
        qvecs = qvecs or {}
        for i, tok in enumerate(sentence.tokens):
            if not mask[i]:
                continue
            spaces = builder.per_function(tok, qvecs.get(i))
            for name, space in spaces.items():
                per_fn[name].append(space)
            per_fn["union"].append(union_spaces(list(spaces.values())))
    return space_stats(per_fn)
