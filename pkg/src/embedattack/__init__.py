"""Embedding-space adversarial attacks on text classifiers, constrained to
semantic search spaces (typo, knowledge-base, and contextual neighbors)."""

from .attack import (
    AttackResult,
    EmbeddingSpaceAttack,
    attack_loss,
    targeted_objective,
    untargeted_objective,
)
from .classifier import (
    ForwardTrace,
    MeanEmbeddingClassifier,
    load_model,
    save_model,
)
from .errors import EmbedAttackError
from .evaluation import (
    AdvDataset,
    AdvRecord,
    MetricsReport,
    perturbation_rate,
    space_stats,
    transfer_eval,
    tsr,
    usr,
)
from .spaces import (
    SearchSpace,
    SpaceBuilder,
    SynonymKB,
    TypoRuleSet,
    contextual_candidates,
    homophone_glyph_candidates,
    knowledge_candidates,
    typo_candidates,
    union_spaces,
)
from .vocab import (
    ContextualIndex,
    EmbeddingMatrix,
    NeighborHit,
    Vocabulary,
    build_index,
    embed_sequence,
    knn_query,
    load_vocabulary,
    make_vocabulary,
    nearest_token_in_space,
)

__version__ = "0.1.0"

__all__ = [
    "AdvDataset",
    "AdvRecord",
    "AttackResult",
    "ContextualIndex",
    "EmbedAttackError",
    "EmbeddingMatrix",
    "EmbeddingSpaceAttack",
    "ForwardTrace",
    "MeanEmbeddingClassifier",
    "MetricsReport",
    "NeighborHit",
    "SearchSpace",
    "SpaceBuilder",
    "SynonymKB",
    "TypoRuleSet",
    "Vocabulary",
    "attack_loss",
    "build_index",
    "contextual_candidates",
    "embed_sequence",
    "homophone_glyph_candidates",
    "knn_query",
    "knowledge_candidates",
    "load_model",
    "load_vocabulary",
    "make_vocabulary",
    "nearest_token_in_space",
    "perturbation_rate",
    "save_model",
    "space_stats",
    "targeted_objective",
    "transfer_eval",
    "tsr",
    "typo_candidates",
    "union_spaces",
    "untargeted_objective",
    "usr",
]
