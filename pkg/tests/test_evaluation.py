import numpy as np
import pytest

from embedattack import (
    AdvDataset,
    AdvRecord,
    make_vocabulary,
    perturbation_rate,
    space_stats,
    transfer_eval,
    tsr,
    usr,
)
from embedattack.errors import EmptyDataset, MissingTarget, VocabMismatch
from embedattack.evaluation import (
    evaluate_dataset,
    load_adv_dataset,
    save_adv_dataset,
    save_record_table,
    save_report,
)
from embedattack.spaces import SearchSpace, singleton_space


class StubModel:
    """predict() via a fixed table keyed on the id tuple."""

    def __init__(self, table, default=0, vocab=None):
        self.table = {tuple(k): v for k, v in table.items()}
        self.default = default
        if vocab is not None:
            self.vocab_hash_ = vocab.content_hash()

    def predict(self, ids):
        return self.table.get(tuple(ids), self.default)


class ConstantModel:
    def __init__(self, label, vocab=None):
        self.label = label
        if vocab is not None:
            self.vocab_hash_ = vocab.content_hash()

    def predict(self, ids):
        return self.label


def vocab5():
    return make_vocabulary(["<unk>", "a", "b", "c", "d"])


def record(orig, adv, truth, target=None, perturbed=(), mask=None):
    return AdvRecord(
        original_ids=tuple(orig),
        adversarial_ids=tuple(adv),
        truth=truth,
        target=target,
        perturbed_positions=tuple(perturbed),
        attack_mask=mask,
    )


def test_tsr_counts_target_hits():
    vocab = vocab5()
    recs = [record([1], [2], 0, target=1) for _ in range(3)]
    ds = AdvDataset(vocab=vocab, records=tuple(recs))
    model = StubModel({(2,): 1})
    # oracle: explicit per-record loop
    expected = sum(model.predict(r.adversarial_ids) == r.target for r in recs) / 3
    assert tsr(ds, model) == expected == 1.0
    mixed = AdvDataset(
        vocab=vocab,
        records=(
            record([1], [2], 0, target=1),
            record([1], [3], 0, target=1),
            record([1], [4], 0, target=1),
        ),
    )
    model = StubModel({(2,): 1, (3,): 1, (4,): 0})
    assert tsr(mixed, model) == pytest.approx(2 / 3)


def test_tsr_requires_targets_and_records():
    vocab = vocab5()
    with pytest.raises(EmptyDataset):
        tsr(AdvDataset(vocab=vocab, records=()), ConstantModel(0))
    ds = AdvDataset(vocab=vocab, records=(record([1], [1], 0),))
    with pytest.raises(MissingTarget):
        tsr(ds, ConstantModel(0))


def test_usr_counts_escapes():
    vocab = vocab5()
    ds = AdvDataset(
        vocab=vocab,
        records=(
            record([1], [2], 0),
            record([1], [3], 0),
            record([1], [4], 0),
        ),
    )
    model = StubModel({(2,): 0, (3,): 1, (4,): 2})
    assert usr(ds, model) == pytest.approx(2 / 3)


def test_usr_zero_when_unperturbed_and_correct():
    vocab = vocab5()
    ds = AdvDataset(
        vocab=vocab, records=tuple(record([1, 2], [1, 2], 0) for _ in range(4))
    )
    assert usr(ds, ConstantModel(0)) == 0.0


def test_tsr_le_usr_on_random_datasets():
    rng = np.random.default_rng(0)
    vocab = vocab5()
    for _ in range(100):
        n = int(rng.integers(1, 30))
        recs = []
        table = {}
        for i in range(n):
            truth = int(rng.integers(3))
            target = int((truth + 1 + rng.integers(2)) % 3)
            adv = (int(rng.integers(1, 5)), i)
            table[adv] = int(rng.integers(3))
            recs.append(record([1, i], adv, truth, target=target))
        ds = AdvDataset(vocab=vocab, records=tuple(recs))
        model = StubModel(table)
        # independent loop oracle
        t_hits = sum(model.predict(r.adversarial_ids) == r.target for r in recs)
        u_hits = sum(model.predict(r.adversarial_ids) != r.truth for r in recs)
        assert abs(tsr(ds, model) - t_hits / n) <= 1e-12
        assert abs(usr(ds, model) - u_hits / n) <= 1e-12
        assert tsr(ds, model) <= usr(ds, model)


def test_perturbation_rate():
    assert perturbation_rate(record(range(20), range(20), 0, perturbed=(3,))) == 0.05
    assert perturbation_rate(record([1, 2], [1, 2], 0)) == 0.0
    masked = record(
        range(10),
        range(10),
        0,
        perturbed=(0, 1),
        mask=tuple([True] * 8 + [False] * 2),
    )
    assert perturbation_rate(masked) == 0.25


def test_transfer_eval_identical_model_reproduces_report():
    vocab = vocab5()
    ds = AdvDataset(
        vocab=vocab,
        records=(
            record([1], [2], 0, target=1),
            record([1], [3], 1, target=2),
        ),
    )
    model = StubModel({(2,): 1, (3,): 1}, vocab=vocab)
    direct = evaluate_dataset(ds, model)
    transferred = transfer_eval(ds, model)
    assert transferred.usr == direct.usr
    assert transferred.tsr == direct.tsr


def test_transfer_eval_constant_model_closed_form():
    vocab = vocab5()
    truths = [0, 1, 2, 1, 0, 2, 2]
    ds = AdvDataset(
        vocab=vocab,
        records=tuple(record([1], [2], t) for t in truths),
    )
    t = 2
    model = ConstantModel(t, vocab=vocab)
    expected = sum(1 for y in truths if y != t) / len(truths)
    assert transfer_eval(ds, model).usr == pytest.approx(expected)


def test_transfer_eval_vocab_mismatch():
    vocab = vocab5()
    other = make_vocabulary(["<unk>", "z"])
    ds = AdvDataset(vocab=vocab, records=(record([1], [1], 0),))
    with pytest.raises(VocabMismatch):
        transfer_eval(ds, ConstantModel(0, vocab=other))


def test_transfer_eval_is_pure():
    vocab = vocab5()
    ds = AdvDataset(vocab=vocab, records=(record([1], [2], 0),))
    model = ConstantModel(1, vocab=vocab)
    a = transfer_eval(ds, model)
    b = transfer_eval(ds, model)
    assert a.usr == b.usr and a.counts == b.counts


def test_space_stats():
    assert space_stats({"typo": [singleton_space(1), singleton_space(2)]}) == {
        "typo": 0.0
    }
    spaces = [
        SearchSpace(original_id=0, candidate_ids=np.arange(4)),
        SearchSpace(original_id=0, candidate_ids=np.arange(6)),
    ]
    assert space_stats({"union": spaces}) == {"union": 4.0}


def test_space_stats_union_dominates():
    rng = np.random.default_rng(1)
    singles, unions = [], []
    for _ in range(50):
        ids = set(int(i) for i in rng.integers(0, 30, size=rng.integers(1, 6)))
        ids.add(0)
        extra = set(int(i) for i in rng.integers(0, 30, size=rng.integers(0, 6)))
        singles.append(SearchSpace(original_id=0, candidate_ids=np.array(sorted(ids))))
        unions.append(
            SearchSpace(original_id=0, candidate_ids=np.array(sorted(ids | extra)))
        )
    stats = space_stats({"single": singles, "union": unions})
    assert stats["union"] >= stats["single"]


def test_dataset_file_roundtrip(tmp_path):
    vocab = vocab5()
    ds = AdvDataset(
        vocab=vocab,
        records=(
            record([1, 2, 3], [1, 4, 3], 0, target=1, perturbed=(1,)),
            record([2, 2], [2, 2], 1),
        ),
    )
    save_adv_dataset(ds, tmp_path / "adv.tsv")
    again = load_adv_dataset(tmp_path / "adv.tsv", vocab)
    assert len(again) == 2
    assert again.records[0].original_ids == (1, 2, 3)
    assert again.records[0].adversarial_ids == (1, 4, 3)
    assert again.records[0].target == 1
    assert again.records[0].perturbed_positions == (1,)
    assert again.records[1].target is None
    assert again.records[1].perturbed_positions == ()


def test_dataset_load_foreign_token(tmp_path):
    vocab = vocab5()
    (tmp_path / "adv.tsv").write_text("a zz\ta zz\t0\t-\t-\n", encoding="utf-8")
    with pytest.raises(VocabMismatch):
        load_adv_dataset(tmp_path / "adv.tsv", vocab)


def test_report_and_table_written_deterministically(tmp_path):
    vocab = vocab5()
    ds = AdvDataset(
        vocab=vocab,
        records=(record([1], [2], 0, target=1, perturbed=(0,)),),
    )
    model = StubModel({(2,): 1}, vocab=vocab)
    rep = evaluate_dataset(ds, model)
    for run in range(2):
        save_report(rep, tmp_path / f"r{run}.txt")
        save_record_table(ds, model, tmp_path / f"t{run}.csv")
    assert (tmp_path / "r0.txt").read_bytes() == (tmp_path / "r1.txt").read_bytes()
    assert (tmp_path / "t0.csv").read_bytes() == (tmp_path / "t1.csv").read_bytes()
    text = (tmp_path / "r0.txt").read_text()
    assert "usr: 1.0" in text
    assert "tsr: 1.0" in text


def test_record_rejects_target_equal_truth():
    with pytest.raises(Exception):
        record([1], [1], 0, target=0)
