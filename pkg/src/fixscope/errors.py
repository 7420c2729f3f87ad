"""Exception hierarchy shared across the toolkit."""


class FixscopeError(Exception):
    """Base class for all domain errors (CLI maps these to exit code 1)."""


class ParseError(FixscopeError):
    """Syntax error in MiniLang source, with 1-based line/column."""

    def __init__(self, message: str, line: int, column: int, offset: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column
        self.offset = offset


class FormatError(FixscopeError):
    """Malformed serialized tree or corpus document; names the offending path."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{message} (at {path})")
        self.path = path


class InvalidMapping(FixscopeError):
    """Mapping violates injectivity or type-equality invariants."""


class ApplyError(FixscopeError):
    """Edit script could not be applied; carries the failing action index."""

    def __init__(self, message: str, action_index: int):
        super().__init__(f"action {action_index}: {message}")
        self.action_index = action_index


class EmptyPool(FixscopeError):
    """shortest_script called with an empty correct-solution pool."""


class SchemeMismatch(FixscopeError):
    """Vocabulary was built under a different equality scheme."""


class DimensionMismatch(FixscopeError):
    """Vector dimension does not match the autoencoder's vocabulary size."""


class ConfigError(FixscopeError):
    """Non-positive or otherwise unusable hyperparameter."""


class UnknownCluster(FixscopeError):
    """Referenced cluster id does not exist in the model."""


class UnlabeledModel(FixscopeError):
    """Classification requested but no cluster carries a label."""


class KTooLarge(FixscopeError):
    """kNN asked for more neighbors than there are labeled training scripts."""


class EmptyPredictionSet(FixscopeError):
    """PR curve requested over zero predictions."""


class OperatorInapplicable(FixscopeError):
    """No template in the pool admits the requested mutation operator."""


class VersionMismatch(FixscopeError):
    """Model file carries an unsupported format_version."""


class CorruptModel(FixscopeError):
    """Model file failed to parse or its digest does not match."""
