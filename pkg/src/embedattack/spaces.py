"""Per-position candidate search spaces: typo, knowledge-base, and
contextual perturbation functions plus their union.

Every space always contains the original token, so the identity
substitution stays available to the attack's projection step.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MalformedFile, NoFunctionEnabled
from .validation import as_vector
from .vocab import ContextualIndex, EmbeddingMatrix, Vocabulary, knn_query

CHAR_RULES = ("insert", "delete", "swap", "sub_keyboard", "sub_visual")
FUNCTION_NAMES = ("typo", "knowledge", "contextual")
POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV")


@dataclass(frozen=True)
class SearchSpace:
    """Candidate token ids for one position; always includes the original."""

    original_id: int
    candidate_ids: np.ndarray  # sorted unique int64

    def __post_init__(self):
        ids = np.unique(np.asarray(self.candidate_ids, dtype=np.int64))
        if self.original_id not in ids:
            ids = np.unique(np.append(ids, np.int64(self.original_id)))
        ids.setflags(write=False)
        object.__setattr__(self, "candidate_ids", ids)

    def __len__(self) -> int:
        return int(self.candidate_ids.shape[0])

    def __contains__(self, token_id: int) -> bool:
        i = int(np.searchsorted(self.candidate_ids, token_id))
        return i < len(self) and self.candidate_ids[i] == token_id

    @property
    def is_singleton(self) -> bool:
        return len(self) == 1


def singleton_space(token_id: int) -> SearchSpace:
    return SearchSpace(original_id=token_id, candidate_ids=np.array([token_id]))


def union_spaces(spaces: list[SearchSpace]) -> SearchSpace:
    if not spaces:
        raise NoFunctionEnabled("cannot union zero spaces")
    original = spaces[0].original_id
    merged = np.unique(np.concatenate([s.candidate_ids for s in spaces]))
    return SearchSpace(original_id=original, candidate_ids=merged)


@dataclass(frozen=True)
class TypoRuleSet:
    """Character-level edit rules plus token-level homophone/glyph tables."""

    keyboard_neighbors: dict[str, tuple[str, ...]] = field(default_factory=dict)
    visual_subs: dict[str, tuple[str, ...]] = field(default_factory=dict)
    enabled_rules: tuple[str, ...] = CHAR_RULES
    homophone_table: dict[str, tuple[str, ...]] = field(default_factory=dict)
    glyph_table: dict[str, tuple[str, ...]] = field(default_factory=dict)
    homophone_cap: int = 5

    def __post_init__(self):
        for rule in self.enabled_rules:
            if rule not in CHAR_RULES:
                raise MalformedFile(f"unknown typo rule {rule!r}")
        if self.homophone_cap < 1:
            raise MalformedFile("homophone_cap must be positive")
        for table in (self.keyboard_neighbors, self.visual_subs):
            for ch, subs in table.items():
                if ch in subs:
                    raise MalformedFile(f"substitution maps {ch!r} to itself")


def load_typo_rules(path) -> TypoRuleSet:
    """Read a typo rules file (INI sections: rules, keyboard_neighbors,
    visual_subs, homophones, glyphs)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise MalformedFile(f"bad typo rules file: {exc}") from exc

    def table(section: str) -> dict[str, tuple[str, ...]]:
        if not parser.has_section(section):
            return {}
        return {
            key: tuple(value.split())
            for key, value in parser.items(section)
        }

    enabled = tuple(CHAR_RULES)
    cap = 5
    if parser.has_section("rules"):
        if parser.has_option("rules", "enabled"):
            enabled = tuple(parser.get("rules", "enabled").split())
        if parser.has_option("rules", "homophone_cap"):
            cap = parser.getint("rules", "homophone_cap")
    return TypoRuleSet(
        keyboard_neighbors=table("keyboard_neighbors"),
        visual_subs=table("visual_subs"),
        enabled_rules=enabled,
        homophone_table=table("homophones"),
        glyph_table=table("glyphs"),
        homophone_cap=cap,
    )


def _char_edits(token: str, rules: TypoRuleSet) -> set[str]:
    out: set[str] = set()
    n = len(token)
    if "insert" in rules.enabled_rules:
        for i in range(n):
            for nb in rules.keyboard_neighbors.get(token[i], ()):
                out.add(token[:i] + nb + token[i:])
    if "delete" in rules.enabled_rules and n > 1:
        for i in range(n):
            out.add(token[:i] + token[i + 1 :])
    if "swap" in rules.enabled_rules:
        for i in range(n - 1):
            out.add(token[:i] + token[i + 1] + token[i] + token[i + 2 :])
    if "sub_keyboard" in rules.enabled_rules:
        for i in range(n):
            for nb in rules.keyboard_neighbors.get(token[i], ()):
                out.add(token[:i] + nb + token[i + 1 :])
    if "sub_visual" in rules.enabled_rules:
        for i in range(n):
            for nb in rules.visual_subs.get(token[i], ()):
                out.add(token[:i] + nb + token[i + 1 :])
    out.discard("")
    return out


def typo_candidates(token: str, rules: TypoRuleSet, vocab: Vocabulary) -> SearchSpace:
    """Single-character edit variants of ``token`` that exist in the
    vocabulary, plus the original."""
    if not token:
        raise ValueError("token must be nonempty")
    original = vocab.id(token)
    hits = [vocab.id_of[cand] for cand in _char_edits(token, rules) if cand in vocab]
    return SearchSpace(original_id=original, candidate_ids=np.array(hits + [original]))


def homophone_glyph_candidates(
    token: str, rules: TypoRuleSet, vocab: Vocabulary
) -> SearchSpace:
    """Same-pronunciation and similar-glyph variants (character mode).

    The homophone list is truncated to the first ``homophone_cap`` entries
    before the vocabulary filter; glyph hits are uncapped.
    """
    original = vocab.id(token)
    cands: list[str] = list(rules.glyph_table.get(token, ()))
    cands += list(rules.homophone_table.get(token, ())[: rules.homophone_cap])
    hits = [vocab.id_of[c] for c in cands if c in vocab]
    return SearchSpace(original_id=original, candidate_ids=np.array(hits + [original]))


@dataclass(frozen=True)
class SynonymKB:
    """lemma -> synsets; each synset is a tuple of (synonym, pos) pairs."""

    entries: dict[str, tuple[tuple[tuple[str, str], ...], ...]]

    def __post_init__(self):
        for lemma, synsets in self.entries.items():
            for synset in synsets:
                seen = set()
                for syn, pos in synset:
                    if pos not in POS_TAGS:
                        raise MalformedFile(
                            f"pos tag {pos!r} for {lemma!r} not in {POS_TAGS}"
                        )
                    if (syn, pos) in seen:
                        raise MalformedFile(
                            f"duplicate synonym ({syn!r}, {pos!r}) under {lemma!r}"
                        )
                    seen.add((syn, pos))


def load_synonym_kb(path) -> SynonymKB:
    """Read a synonym KB file: one "<lemma>\\t<pos>:<syn1>,<syn2>|<pos>:<syn3>"
    record per line; "|" separates synsets."""
    entries: dict[str, tuple] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedFile(f"KB line {lineno}: expected lemma<TAB>synsets")
            lemma, body = parts
            if lemma in entries:
                raise MalformedFile(f"KB line {lineno}: duplicate lemma {lemma!r}")
            synsets = []
            for chunk in body.split("|"):
                if ":" not in chunk:
                    raise MalformedFile(f"KB line {lineno}: synset missing ':'")
                pos, syns = chunk.split(":", 1)
                members = tuple(
                    (s.strip(), pos) for s in syns.split(",") if s.strip()
                )
                if not members:
                    raise MalformedFile(f"KB line {lineno}: empty synset")
                synsets.append(members)
            entries[lemma] = tuple(synsets)
    return SynonymKB(entries=entries)


def knowledge_candidates(
    token: str, kb: SynonymKB, vocab: Vocabulary
) -> SearchSpace:
    """Synonyms of ``token`` whose part-of-speech tag is the modal tag
    across the token's synsets (all tied tags kept), filtered to the
    vocabulary, plus the original."""
    original = vocab.id(token)
    synsets = kb.entries.get(token)
    if not synsets:
        return singleton_space(original)
    pairs = [pair for synset in synsets for pair in synset]
    counts: dict[str, int] = {}
    for _, pos in pairs:
        counts[pos] = counts.get(pos, 0) + 1
    top = max(counts.values())
    keep_pos = {pos for pos, c in counts.items() if c == top}
    hits = [
        vocab.id_of[syn]
        for syn, pos in pairs
        if pos in keep_pos and syn in vocab
    ]
    return SearchSpace(original_id=original, candidate_ids=np.array(hits + [original]))


def contextual_candidates(
    query,
    original_id: int,
    index: ContextualIndex,
    k: int,
    min_count: int,
) -> SearchSpace:
    """Tokens appearing at least ``min_count`` times among the k index
    entries nearest to ``query``; the original is membership-exempt."""
    if k < 1 or min_count < 1:
        raise ValueError("k and min_count must be positive")
    q = as_vector(query, name="contextual query")
    if len(index) and q.shape[0] != index.dim:
        raise DimensionMismatch(
            f"query dim {q.shape[0]} != index dim {index.dim}"
        )
    hits = knn_query(index, q, k)
    counts: dict[int, int] = {}
    for hit in hits:
        counts[hit.token_id] = counts.get(hit.token_id, 0) + 1
    ids = [tid for tid, c in counts.items() if c >= min_count and tid != original_id]
    return SearchSpace(
        original_id=original_id, candidate_ids=np.array(ids + [original_id])
    )


@dataclass
class SpaceBuilder:
    """Combines the enabled perturbation functions into one search space
    per token (their set union).

    ``mode`` selects the typo flavor: "whitespace" applies character
    edits, "char" applies homophone/glyph tables. A contextual query
    vector may be supplied per call; without one, the builder falls back
    to the token's static embedding row when ``static_fallback`` is set
    and the dimensions agree, otherwise the contextual function is
    skipped for that position.
    """

    vocab: Vocabulary
    matrix: EmbeddingMatrix | None = None
    typo_rules: TypoRuleSet | None = None
    synonym_kb: SynonymKB | None = None
    index: ContextualIndex | None = None
    functions: tuple[str, ...] = FUNCTION_NAMES
    mode: str = "whitespace"
    k: int = 700
    min_count: int = 8
    static_fallback: bool = True

    def __post_init__(self):
        if not self.functions:
            raise NoFunctionEnabled("no perturbation function enabled")
        for fn in self.functions:
            if fn not in FUNCTION_NAMES:
                raise NoFunctionEnabled(f"unknown perturbation function {fn!r}")
        if "typo" in self.functions and self.typo_rules is None:
            raise MalformedFile("typo function enabled without typo rules")
        if "knowledge" in self.functions and self.synonym_kb is None:
            raise MalformedFile("knowledge function enabled without a synonym KB")
        if "contextual" in self.functions and self.index is None:
            raise MalformedFile("contextual function enabled without an index")

    def _contextual_query(self, token_id: int, query_vector) -> np.ndarray | None:
        if query_vector is not None:
            return as_vector(query_vector, name="contextual query")
        if not self.static_fallback or self.matrix is None:
            return None
        if self.index is not None and len(self.index) and self.index.dim != self.matrix.dim:
            return None
        return self.matrix.rows[token_id]

    def per_function(self, token: str, query_vector=None) -> dict[str, SearchSpace]:
        """One space per enabled function (before the union)."""
        token_id = self.vocab.id(token)
        if token not in self.vocab:
            # no semantic space is definable for out-of-vocabulary tokens
            return {fn: singleton_space(token_id) for fn in self.functions}
        out: dict[str, SearchSpace] = {}
        for fn in self.functions:
            if fn == "typo":
                if self.mode == "char":
                    out[fn] = homophone_glyph_candidates(
                        token, self.typo_rules, self.vocab
                    )
                else:
                    out[fn] = typo_candidates(token, self.typo_rules, self.vocab)
            elif fn == "knowledge":
                out[fn] = knowledge_candidates(token, self.synonym_kb, self.vocab)
            else:
                query = self._contextual_query(token_id, query_vector)
                if query is None:
                    out[fn] = singleton_space(token_id)
                else:
                    out[fn] = contextual_candidates(
                        query, token_id, self.index, self.k, self.min_count
                    )
        return out

    def combined_space(self, token: str, query_vector=None) -> SearchSpace:
        """Set union of the enabled functions' candidates."""
        return union_spaces(list(self.per_function(token, query_vector).values()))

    def spaces_for_sentence(
        self,
        tokens: list[str],
        query_vectors: dict[int, np.ndarray] | None = None,
        attack_mask: list[bool] | None = None,
    ) -> list[SearchSpace]:
        """Combined space per position; masked-off positions get the
        singleton of their original token."""
        query_vectors = query_vectors or {}
        out = []
        for i, token in enumerate(tokens):
            if attack_mask is not None and not attack_mask[i]:
                out.append(singleton_space(self.vocab.id(token)))
            else:
                out.append(self.combined_space(token, query_vectors.get(i)))
        return out
