"""Command-line front end.

Subcommands: train, distill, attack, transfer, audit-spaces.
Exit codes: 0 success, 2 usage/config/input error, 3 runtime data error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .campaign import (
    audit_spaces,
    build_space_builder,
    campaign_report,
    check_side_vectors,
    report_lines,
    run_campaign,
)
from .classifier import (
    MeanEmbeddingClassifier,
    load_model,
    load_teacher_outputs,
    save_model,
    save_teacher_outputs,
)
from .config import CampaignConfig, load_config
from .corpus import ids_for_sentence, load_corpus, load_side_vectors
from .errors import (
    ConfigError,
    EmbedAttackError,
    InconsistentDimension,
    MalformedDistribution,
    MalformedFile,
    VocabMismatch,
)
from .evaluation import (
    load_adv_dataset,
    save_adv_dataset,
    save_record_table,
    save_report,
    transfer_eval,
)
from .vocab import load_embedding_matrix, load_vocabulary

USAGE_ERROR = 2
DATA_ERROR = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedattack",
        description=(
            "Embedding-space adversarial attacks on a built-in text "
            "classifier, constrained to semantic search spaces."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train the classifier and save it")
    train.add_argument("--config", required=True)
    train.add_argument("--out", required=True, help="model file to write")

    distill = sub.add_parser(
        "distill", help="train a student on a teacher model's soft labels"
    )
    distill.add_argument("--config", required=True)
    distill.add_argument("--teacher", required=True, help="teacher model file")
    distill.add_argument(
        "--teacher-out", required=True, help="teacher probability file to write"
    )
    distill.add_argument("--out", required=True, help="student model file to write")

    attack = sub.add_parser("attack", help="run an attack campaign")
    attack.add_argument("--config", required=True)
    attack.add_argument("--model", required=True, help="victim model file")
    attack.add_argument("--out-dataset", default=None)
    attack.add_argument("--out-report", default=None)
    attack.add_argument("--out-table", default=None)

    transfer = sub.add_parser(
        "transfer", help="rescore a saved adversarial dataset against a model"
    )
    transfer.add_argument("--dataset", required=True)
    transfer.add_argument("--model", required=True)
    transfer.add_argument("--vocab", required=True)
    transfer.add_argument("--out", required=True, help="report file to write")

    audit = sub.add_parser(
        "audit-spaces", help="report mean search-space sizes over a corpus"
    )
    audit.add_argument("--config", required=True)
    audit.add_argument("--out", required=True, help="report file to write")
    audit.add_argument(
        "--model",
        default=None,
        help="optional model file backing the contextual static fallback",
    )

    return parser


def _load_train_inputs(args):
    cfg = load_config(args.config)
    cfg.validate(require_corpus=True)
    vocab = load_vocabulary(cfg.vocab_path)
    corpus = load_corpus(cfg.corpus_path, cfg.tokenizer)
    corpus.validate_labels(cfg.train.num_classes)
    embedding = (
        load_embedding_matrix(cfg.embedding_path, vocab)
        if cfg.embedding_path
        else None
    )
    return cfg, vocab, corpus, embedding


def _make_model(cfg: CampaignConfig, vocab, embedding, seed=None, **overrides):
    tr = cfg.train
    return MeanEmbeddingClassifier(
        vocab=vocab,
        num_classes=tr.num_classes,
        embed_dim=tr.embed_dim,
        hidden_dim=tr.hidden_dim,
        learning_rate=float(overrides.get("learning_rate", tr.learning_rate)),
        epochs=int(overrides.get("epochs", tr.epochs)),
        batch_size=int(overrides.get("batch_size", tr.batch_size)),
        seed=tr.seed if seed is None else seed,
        init_scale=tr.init_scale,
        embedding_init=embedding,
    )


def cmd_train(args) -> int:
    cfg, vocab, corpus, embedding = _load_train_inputs(args)
    X = [ids_for_sentence(s, vocab) for s in corpus.sentences]
    y = [s.label for s in corpus.sentences]
    model = _make_model(cfg, vocab, embedding)
    model.fit(X, y)
    save_model(model, args.out)
    accuracy = model.score(X, y)
    print(f"train_accuracy: {repr(accuracy)}")
    print(f"model: {args.out}")
    return 0


def cmd_distill(args) -> int:
    cfg, vocab, corpus, embedding = _load_train_inputs(args)
    teacher = load_model(args.teacher, vocab)
    if teacher.num_classes != cfg.train.num_classes:
        raise ConfigError(
            f"teacher has {teacher.num_classes} classes, config says "
            f"{cfg.train.num_classes}"
        )
    X = [ids_for_sentence(s, vocab) for s in corpus.sentences]
    probs = np.stack([teacher.predict_proba_one(ids) for ids in X])
    save_teacher_outputs(probs, args.teacher_out)

    over = cfg.distill_overrides
    student_seed = int(over["seed"]) if "seed" in over else cfg.train.seed + 1
    student = _make_model(cfg, vocab, embedding, seed=student_seed, **over)
    loaded = load_teacher_outputs(args.teacher_out, len(X), teacher.num_classes)
    agreement = student.distill_from(X, loaded)
    save_model(student, args.out)
    print(f"teacher_agreement: {repr(agreement)}")
    print(f"model: {args.out}")
    return 0


def cmd_attack(args) -> int:
    cfg = load_config(args.config)
    if args.out_dataset:
        cfg.out_dataset = args.out_dataset
    if args.out_report:
        cfg.out_report = args.out_report
    if args.out_table:
        cfg.out_table = args.out_table
    cfg.validate(require_corpus=True)
    if not cfg.out_dataset or not cfg.out_report:
        raise ConfigError("attack needs --out-dataset and --out-report (or config)")
    vocab = load_vocabulary(cfg.vocab_path)
    model = load_model(args.model, vocab)
    corpus = load_corpus(cfg.corpus_path, cfg.tokenizer)
    corpus.validate_labels(model.num_classes)
    builder = build_space_builder(cfg, vocab, model)
    side_vectors = (
        load_side_vectors(cfg.side_vectors_path) if cfg.side_vectors_path else None
    )
    check_side_vectors(side_vectors, builder)

    dataset, outcomes, rejected = run_campaign(
        cfg, model, corpus, builder, side_vectors
    )
    report = campaign_report(dataset, model, cfg, outcomes)
    save_adv_dataset(dataset, cfg.out_dataset)
    with open(cfg.out_report, "w", encoding="utf-8") as fh:
        for line in report_lines(report, cfg):
            fh.write(line + "\n")
    if cfg.out_table:
        save_record_table(dataset, model, cfg.out_table)
    print(f"records: {len(dataset)}")
    print(f"rejected: {len(rejected)}")
    print(f"usr: {repr(report.usr)}")
    if report.tsr is not None:
        print(f"tsr: {repr(report.tsr)}")
    return 0


def cmd_transfer(args) -> int:
    vocab = load_vocabulary(args.vocab)
    dataset = load_adv_dataset(args.dataset, vocab)
    model = load_model(args.model, vocab)
    report = transfer_eval(dataset, model)
    save_report(report, args.out)
    print(f"usr: {repr(report.usr)}")
    if report.tsr is not None:
        print(f"tsr: {repr(report.tsr)}")
    return 0


def cmd_audit_spaces(args) -> int:
    cfg = load_config(args.config)
    cfg.validate(require_corpus=True)
    if cfg.full_vocab_spaces:
        raise ConfigError("space audit needs perturbation functions, not full_vocab")
    vocab = load_vocabulary(cfg.vocab_path)
    corpus = load_corpus(cfg.corpus_path, cfg.tokenizer)
    # without a model the contextual function audits side-channel queries only
    model = load_model(args.model, vocab) if args.model else None
    builder = build_space_builder(cfg, vocab, model)
    side_vectors = (
        load_side_vectors(cfg.side_vectors_path) if cfg.side_vectors_path else None
    )
    check_side_vectors(side_vectors, builder)
    stats = audit_spaces(cfg, corpus, vocab, builder, side_vectors)
    with open(args.out, "w", encoding="utf-8") as fh:
        for name in sorted(stats):
            fh.write(f"mean_candidates_{name}: {repr(stats[name])}\n")
    for name in sorted(stats):
        print(f"mean_candidates_{name}: {repr(stats[name])}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "distill": cmd_distill,
    "attack": cmd_attack,
    "transfer": cmd_transfer,
    "audit-spaces": cmd_audit_spaces,
}

# Unreadable or malformed inputs are usage errors (2); inputs that parse but
# trip the engine on inconsistent data are runtime data errors (3).
_USAGE_ERRORS = (
    ConfigError,
    MalformedFile,
    MalformedDistribution,
    VocabMismatch,
    InconsistentDimension,
    FileNotFoundError,
    IsADirectoryError,
    OSError,
)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except EmbedAttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
