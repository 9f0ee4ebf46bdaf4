"""Exception hierarchy for the morphagree pipeline."""


class MorphagreeError(Exception):
    """Base class for all errors raised by this package."""


# --- treebank parsing ---

class MalformedLineError(MorphagreeError):
    """A token line does not have the 10 tab-separated CoNLL-U columns."""


class InvalidIdError(MorphagreeError):
    """A simple token id is not a positive integer, or ids are not 1..n."""


class InvalidHeadError(MorphagreeError):
    """A head index cannot be resolved within its sentence."""


class EncodingError(MorphagreeError):
    """Input bytes are not valid UTF-8."""


class MalformedFeatsError(MorphagreeError):
    """A FEATS entry lacks '=' or repeats a feature name."""


# --- datasets and statistics ---

class EmptyMarginalsError(MorphagreeError):
    """No token in the treebank carries the requested feature."""


class EmptyDatasetError(MorphagreeError):
    """A tree cannot be fitted on a dataset with no instances."""


class EmptyCountsError(MorphagreeError):
    """Entropy estimation was asked for an empty count table."""


# --- rule sets ---

class VerdictMismatchError(MorphagreeError):
    """Leaf verdicts do not cover the tree's leaves exactly once."""


class NoMatchingRuleError(MorphagreeError):
    """A triple matched no rule (or more than one); the rule set is corrupt."""


# --- evaluation ---

class FeatureMismatchError(MorphagreeError):
    """Inputs refer to different morphological features."""


class EmptyAnnotationsError(MorphagreeError):
    """An annotation file or record list is empty."""


class NoEvaluableTriplesError(MorphagreeError):
    """No requested triple occurs in the test data."""


class LengthMismatchError(MorphagreeError):
    """Paired score vectors differ in length or are too short."""


class ZeroVarianceError(MorphagreeError):
    """A correlation input vector is constant."""


# --- synthesis ---

class InvalidGrammarError(MorphagreeError):
    """A planted grammar violates its own declarations."""
