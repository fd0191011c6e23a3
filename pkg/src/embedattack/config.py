"""Campaign configuration: one INI file holding resource paths, perturbation
settings, attack hyperparameters (by their conventional names: c, kappa, m,
p, alpha, k, eps), and training settings."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .attack import EmbeddingSpaceAttack
from .errors import ConfigError
from .spaces import FUNCTION_NAMES

FULL_VOCAB = "full_vocab"


@dataclass
class TrainSettings:
    learning_rate: float = 0.01
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 1.0
    embed_dim: int = 64
    hidden_dim: int = 128
    num_classes: int = 2

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("train.learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("train.epochs must be nonnegative")
        if min(self.batch_size, self.embed_dim, self.hidden_dim) < 1:
            raise ConfigError("train dims and batch_size must be positive")
        if self.num_classes < 2:
            raise ConfigError("train.num_classes must be at least 2")
        if self.init_scale <= 0:
            raise ConfigError("train.init_scale must be positive")


@dataclass
class CampaignConfig:
    # resource paths
    vocab_path: str = ""
    embedding_path: str | None = None
    typo_rules_path: str | None = None
    synonym_kb_path: str | None = None
    index_path: str | None = None
    side_vectors_path: str | None = None
    # perturbation settings
    functions: tuple[str, ...] = FUNCTION_NAMES
    k: int = 700
    eps: int = 8
    static_fallback: bool = True
    # attack hyperparameters (c, kappa, m, p, alpha in the config file)
    attack: EmbeddingSpaceAttack = field(default_factory=EmbeddingSpaceAttack)
    # training
    train: TrainSettings = field(default_factory=TrainSettings)
    distill_overrides: dict = field(default_factory=dict)
    # campaign
    corpus_path: str = ""
    tokenizer: str = "whitespace"
    parallelism: int = 1
    out_dataset: str | None = None
    out_report: str | None = None
    out_table: str | None = None

    @property
    def full_vocab_spaces(self) -> bool:
        return self.functions == (FULL_VOCAB,)

    def validate(self, require_corpus: bool = True) -> None:
        """Reject invalid settings before anything is written."""
        if not self.vocab_path:
            raise ConfigError("resources.vocab is required")
        if self.k < 1 or self.eps < 1 or self.k < self.eps:
            raise ConfigError("perturb must satisfy k >= eps >= 1")
        if not self.functions:
            raise ConfigError("perturb.functions must not be empty")
        if not self.full_vocab_spaces:
            for fn in self.functions:
                if fn not in FUNCTION_NAMES:
                    raise ConfigError(f"unknown perturbation function {fn!r}")
            if "typo" in self.functions and not self.typo_rules_path:
                raise ConfigError("typo function enabled without resources.typo_rules")
            if "knowledge" in self.functions and not self.synonym_kb_path:
                raise ConfigError(
                    "knowledge function enabled without resources.synonym_kb"
                )
            if "contextual" in self.functions and not self.index_path:
                raise ConfigError(
                    "contextual function enabled without resources.contextual_index"
                )
        try:
            self.attack.validate(num_classes=self.train.num_classes)
        except ValueError as exc:
            raise ConfigError(f"attack: {exc}") from exc
        self.train.validate()
        if self.tokenizer not in ("whitespace", "char"):
            raise ConfigError("campaign.tokenizer must be whitespace or char")
        if self.parallelism < 1:
            raise ConfigError("campaign.parallelism must be positive")
        if require_corpus and not self.corpus_path:
            raise ConfigError("campaign.corpus is required")
        paths = [self.vocab_path]
        if require_corpus:
            paths.append(self.corpus_path)
        paths += [
            p
            for p in (
                self.embedding_path,
                self.typo_rules_path,
                self.synonym_kb_path,
                self.index_path,
                self.side_vectors_path,
            )
            if p
        ]
        for p in paths:
            if not os.path.exists(p):
                raise ConfigError(f"referenced file does not exist: {p}")


def load_config(path) -> CampaignConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"bad config file: {exc}") from exc

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    cfg = CampaignConfig()
    try:
        if parser.has_section("resources"):
            res = parser["resources"]
            cfg.vocab_path = resolve(res.get("vocab", "")) or ""
            cfg.embedding_path = resolve(res.get("embedding"))
            cfg.typo_rules_path = resolve(res.get("typo_rules"))
            cfg.synonym_kb_path = resolve(res.get("synonym_kb"))
            cfg.index_path = resolve(res.get("contextual_index"))
            cfg.side_vectors_path = resolve(res.get("side_vectors"))
        if parser.has_section("perturb"):
            per = parser["perturb"]
            if "functions" in per:
                cfg.functions = tuple(per.get("functions").split())
            cfg.k = per.getint("k", cfg.k)
            cfg.eps = per.getint("eps", cfg.eps)
            cfg.static_fallback = per.getboolean("static_fallback", cfg.static_fallback)
        if parser.has_section("attack"):
            atk = parser["attack"]
            cfg.attack = EmbeddingSpaceAttack(
                const=atk.getfloat("c", 100.0),
                confidence=atk.getfloat("kappa", 1.0),
                max_iter=atk.getint("m", 100),
                norm=atk.getint("p", 2),
                step_size=atk.getfloat("alpha", 0.1),
                goal=atk.get("goal", "untargeted"),
                target_class=(
                    atk.getint("target_class") if "target_class" in atk else None
                ),
                early_exit=atk.getboolean("early_exit", False),
                seed=atk.getint("seed", 1111),
            )
        if parser.has_section("train"):
            tr = parser["train"]
            cfg.train = TrainSettings(
                learning_rate=tr.getfloat("learning_rate", 0.01),
                epochs=tr.getint("epochs", 30),
                batch_size=tr.getint("batch_size", 32),
                seed=tr.getint("seed", 0),
                init_scale=tr.getfloat("init_scale", 1.0),
                embed_dim=tr.getint("embed_dim", 64),
                hidden_dim=tr.getint("hidden_dim", 128),
                num_classes=tr.getint("num_classes", 2),
            )
        if parser.has_section("distill"):
            cfg.distill_overrides = {
                key: parser.get("distill", key) for key in parser["distill"]
            }
        if parser.has_section("campaign"):
            cam = parser["campaign"]
            cfg.corpus_path = resolve(cam.get("corpus", "")) or ""
            cfg.tokenizer = cam.get("tokenizer", "whitespace")
            cfg.parallelism = cam.getint("parallelism", 1)
            cfg.out_dataset = resolve(cam.get("out_dataset"))
            cfg.out_report = resolve(cam.get("out_report"))
            cfg.out_table = resolve(cam.get("out_table"))
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg
