"""Attack-success metrics, perturbation statistics, search-space statistics,
and zero-query transfer of a fixed adversarial dataset to another model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataset, MalformedFile, MissingTarget, VocabMismatch
from .spaces import SearchSpace
from .vocab import Vocabulary


@dataclass(frozen=True)
class AdvRecord:
    """One attacked sample: the original and adversarial id sequences."""

    original_ids: tuple[int, ...]
    adversarial_ids: tuple[int, ...]
    truth: int
    target: int | None = None
    success: bool | None = None
    perturbed_positions: tuple[int, ...] = ()
    attack_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        if len(self.original_ids) != len(self.adversarial_ids):
            raise MalformedFile("original and adversarial lengths differ")
        if self.target is not None and self.target == self.truth:
            raise MalformedFile("target label equals the true label")


@dataclass(frozen=True)
class AdvDataset:
    vocab: Vocabulary
    records: tuple[AdvRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


def tsr(dataset: AdvDataset, model) -> float:
    """Fraction of records the model classifies as their target class."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot score an empty adversarial dataset")
    hits = 0
    for rec in dataset.records:
        if rec.target is None:
            raise MissingTarget("record without a target label in a targeted metric")
        hits += int(model.predict(list(rec.adversarial_ids)) == rec.target)
    return hits / len(dataset)


def usr(dataset: AdvDataset, model) -> float:
    """Fraction of records the model classifies as anything but the truth."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot score an empty adversarial dataset")
    hits = sum(
        int(model.predict(list(rec.adversarial_ids)) != rec.truth)
        for rec in dataset.records
    )
    return hits / len(dataset)


def perturbation_rate(record: AdvRecord) -> float:
    """Substituted fraction of the attackable positions (all positions when
    the record carries no mask)."""
    if record.attack_mask is not None:
        denom = sum(map(int, record.attack_mask))
    else:
        denom = len(record.original_ids)
    if denom == 0:
        return 0.0
    return len(record.perturbed_positions) / denom


@dataclass
class MetricsReport:
    """Success rates plus cost statistics; ``counts`` carries the raw
    numerators/denominators for auditability."""

    usr: float
    tsr: float | None = None
    mean_perturbation_rate_untargeted: float | None = None
    mean_perturbation_rate_targeted: float | None = None
    mean_space_sizes: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"records: {self.counts.get('records', 0)}"]
        for key in sorted(self.counts):
            if key != "records":
                out.append(f"{key}: {self.counts[key]}")
        out.append(f"usr: {_fmt(self.usr)}")
        out.append(f"tsr: {_fmt(self.tsr)}")
        out.append(
            "mean_perturbation_rate_untargeted: "
            f"{_fmt(self.mean_perturbation_rate_untargeted)}"
        )
        out.append(
            "mean_perturbation_rate_targeted: "
            f"{_fmt(self.mean_perturbation_rate_targeted)}"
        )
        for name in sorted(self.mean_space_sizes):
            out.append(f"mean_candidates_{name}: {_fmt(self.mean_space_sizes[name])}")
        return out


def _fmt(value) -> str:
    return "-" if value is None else repr(float(value))


def evaluate_dataset(dataset: AdvDataset, model) -> MetricsReport:
    """Whitebox-style report: recomputed success rates against ``model``
    plus mean perturbation rates over the successful records.

    Untargeted success means the prediction left the true class; targeted
    success means it reached the target. Perturbation-rate means are taken
    over successful records only, separately per goal, so failed attacks do
    not dilute the cost statistic.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot report on an empty adversarial dataset")
    preds = [model.predict(list(rec.adversarial_ids)) for rec in dataset.records]
    unt_hits = [p != r.truth for p, r in zip(preds, dataset.records)]
    has_targets = all(r.target is not None for r in dataset.records)
    report = MetricsReport(usr=float(np.mean(unt_hits)))
    report.counts["records"] = len(dataset)
    report.counts["untargeted_successes"] = int(np.sum(unt_hits))
    rates_u = [
        perturbation_rate(rec)
        for rec, hit in zip(dataset.records, unt_hits)
        if hit
    ]
    if rates_u:
        report.mean_perturbation_rate_untargeted = float(np.mean(rates_u))
    if has_targets:
        tgt_hits = [p == r.target for p, r in zip(preds, dataset.records)]
        report.tsr = float(np.mean(tgt_hits))
        report.counts["targeted_successes"] = int(np.sum(tgt_hits))
        rates_t = [
            perturbation_rate(rec)
            for rec, hit in zip(dataset.records, tgt_hits)
            if hit
        ]
        if rates_t:
            report.mean_perturbation_rate_targeted = float(np.mean(rates_t))
    return report


def transfer_eval(dataset: AdvDataset, other_model) -> MetricsReport:
    """Zero-query transfer: rescore the fixed adversarial texts against a
    model that was never queried while they were generated."""
    other_hash = getattr(other_model, "vocab_hash_", None)
    if other_hash is not None and other_hash != dataset.vocab.content_hash():
        raise VocabMismatch("model and dataset use different vocabularies")
    return evaluate_dataset(dataset, other_model)


def space_stats(spaces_per_function: dict[str, list[SearchSpace]]) -> dict[str, float]:
    """Mean non-identity candidate count, per function name."""
    out: dict[str, float] = {}
    for name, spaces in spaces_per_function.items():
        if not spaces:
            out[name] = 0.0
        else:
            out[name] = float(np.mean([len(s) - 1 for s in spaces]))
    return out


# -- dataset file I/O ---------------------------------------------------------


def save_adv_dataset(dataset: AdvDataset, path) -> None:
    """Tab-separated records: original tokens, adversarial tokens, truth,
    target ("-" when absent), perturbed indices ("-" when none)."""
    vocab = dataset.vocab
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            orig = " ".join(vocab.tokens[i] for i in rec.original_ids)
            adv = " ".join(vocab.tokens[i] for i in rec.adversarial_ids)
            tgt = "-" if rec.target is None else str(rec.target)
            pert = (
                ",".join(str(i) for i in rec.perturbed_positions)
                if rec.perturbed_positions
                else "-"
            )
            fh.write("\t".join([orig, adv, str(rec.truth), tgt, pert]) + "\n")


def load_adv_dataset(path, vocab: Vocabulary) -> AdvDataset:
    """Inverse of save_adv_dataset. Every token must resolve in ``vocab``;
    a miss means the file was generated against a different vocabulary."""
    records: list[AdvRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise MalformedFile(f"dataset line {lineno}: expected 5 fields")
            orig_tok, adv_tok, truth_s, tgt_s, pert_s = parts

            def to_ids(text: str) -> tuple[int, ...]:
                ids = []
                for tok in text.split():
                    if tok not in vocab:
                        raise VocabMismatch(
                            f"dataset line {lineno}: token {tok!r} not in vocabulary"
                        )
                    ids.append(vocab.id_of[tok])
                return tuple(ids)

            try:
                truth = int(truth_s)
                target = None if tgt_s == "-" else int(tgt_s)
                perturbed = (
                    ()
                    if pert_s == "-"
                    else tuple(int(i) for i in pert_s.split(","))
                )
            except ValueError as exc:
                raise MalformedFile(f"dataset line {lineno}: {exc}") from exc
            records.append(
                AdvRecord(
                    original_ids=to_ids(orig_tok),
                    adversarial_ids=to_ids(adv_tok),
                    truth=truth,
                    target=target,
                    perturbed_positions=perturbed,
                )
            )
    return AdvDataset(vocab=vocab, records=tuple(records))


def save_report(report: MetricsReport, path) -> None:
    """Key-value text document."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in report.lines():
            fh.write(line + "\n")


def save_record_table(dataset: AdvDataset, model, path) -> None:
    """Machine-readable per-record table (CSV)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "index,prediction,truth,target,untargeted_success,"
            "n_perturbed,n_attackable,perturbation_rate\n"
        )
        for i, rec in enumerate(dataset.records):
            pred = model.predict(list(rec.adversarial_ids))
            if rec.attack_mask is not None:
                n_att = sum(map(int, rec.attack_mask))
            else:
                n_att = len(rec.original_ids)
            fh.write(
                ",".join(
                    [
                        str(i),
                        str(pred),
                        str(rec.truth),
                        "-" if rec.target is None else str(rec.target),
                        str(int(pred != rec.truth)),
                        str(len(rec.perturbed_positions)),
                        str(n_att),
                        repr(perturbation_rate(rec)),
                    ]
                )
                + "\n"
            )
