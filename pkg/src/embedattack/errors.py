"""Exception hierarchy shared by all embedattack modules."""


class EmbedAttackError(Exception):
    """Base class for every error raised by this package."""


class MalformedFile(EmbedAttackError):
    """A resource file violates its declared format."""


class IdOutOfRange(EmbedAttackError):
    """A token id does not address a row of the paired vocabulary."""


class DimensionMismatch(EmbedAttackError):
    """A vector's dimension disagrees with the structure it is used against."""


class InconsistentDimension(EmbedAttackError):
    """Records in one stream carry vectors of different dimensions."""


class EmptySpace(EmbedAttackError):
    """A search space holds no candidates."""


class NoFunctionEnabled(EmbedAttackError):
    """A combined space was requested with every perturbation function disabled."""


class EmptyInput(EmbedAttackError):
    """An operation that needs at least one token received none."""


class ShapeMismatch(EmbedAttackError):
    """An array argument has the wrong shape for the model it is paired with."""


class LabelOutOfRange(EmbedAttackError):
    """A corpus label is not a valid class index."""


class MalformedDistribution(EmbedAttackError):
    """A probability vector has the wrong length or does not sum to one."""


class SingleClass(EmbedAttackError):
    """An attack objective needs at least two classes."""


class MaskSpaceConflict(EmbedAttackError):
    """An attackable position was paired with an empty search space."""


class TargetEqualsTruth(EmbedAttackError):
    """A targeted attack was asked to reach the sample's own label."""


class MissingTarget(EmbedAttackError):
    """A targeted metric was requested on records without target labels."""


class EmptyDataset(EmbedAttackError):
    """A metric was requested on a dataset with no records."""


class VocabMismatch(EmbedAttackError):
    """Two components paired at runtime were built against different vocabularies."""


class NotFitted(EmbedAttackError):
    """A model operation was called before the model had parameters."""


class ConfigError(EmbedAttackError):
    """A configuration file is missing, unreadable, or fails validation."""
