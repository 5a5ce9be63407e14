"""Exception hierarchy shared across the package."""


class ComfairError(Exception):
    """Base class for all package errors."""


class ConfigError(ComfairError):
    """Invalid configuration (CLI exit code 2)."""


class DataError(ComfairError):
    """Invalid or inconsistent input data (CLI exit code 3)."""


# -- graph loading / validation ------------------------------------------------

class MalformedLine(DataError):
    def __init__(self, path, lineno, text):
        super().__init__(f"{path}:{lineno}: malformed line: {text!r}")
        self.lineno = lineno


class NodeIdOutOfRange(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NonBinarySensitive(DataError):
    pass


# -- splitting -----------------------------------------------------------------

class FractionSumInvalid(ConfigError):
    pass


class ClassTooSmall(DataError):
    pass


# -- clustering ----------------------------------------------------------------

class KTooLarge(ConfigError):
    pass


# -- embedding -----------------------------------------------------------------

class NoNeighbors(ComfairError):
    """Current walk node has no neighbors; caller truncates the walk."""


class EmptyCorpus(DataError):
    pass


# -- coreset -------------------------------------------------------------------

class EmptyTrainingSplit(DataError):
    pass


# -- gnn -----------------------------------------------------------------------

class EmptyMask(DataError):
    pass


# -- audit ---------------------------------------------------------------------

class EmptyScope(DataError):
    pass


class SingleClassScope(DataError):
    pass


class MissingGroup(DataError):
    pass


class MissingPositives(DataError):
    def __init__(self, group):
        super().__init__(f"sensitive group {group} has no positive-label nodes")
        self.group = group
