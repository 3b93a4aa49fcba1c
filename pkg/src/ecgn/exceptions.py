"""Exception types raised by the library."""


class EcgnError(ValueError):
    """Base class for all library errors."""


class InvalidEdge(EcgnError):
    """Edge endpoint outside the valid node-id range."""


class EmptyCluster(EcgnError):
    """A cluster or node set that must be non-empty is empty."""


class TooFewNodes(EcgnError):
    """Graph has fewer nodes than the requested number of clusters."""


class ShapeError(EcgnError):
    """Array shapes do not line up with the graph or each other."""


class EmptyMask(EcgnError):
    """A node mask that must select at least one node selects none."""


class ClassEmpty(EcgnError):
    """No training nodes carry the requested class label."""


class SingletonClass(EcgnError):
    """A class has a single training node, so no same-class neighbor exists."""


class CapExceeded(EcgnError):
    """Requested synthetic-node count violates the oversampling cap."""


class NothingToAugment(EcgnError):
    """Every candidate seed was skipped; no synthetic node can be generated."""


class MissingClusterParams(EcgnError):
    """Weight transfer requested but no shape-compatible cluster params given."""


class InfeasibleSplit(EcgnError):
    """Requested train/val/test counts cannot be satisfied by the dataset."""


class ConfigError(EcgnError):
    """Experiment configuration is malformed or inconsistent."""


class ParseError(EcgnError):
    """A raw dataset file has a malformed line."""

    def __init__(self, message, line_number=None, path=None):
        self.line_number = line_number
        self.path = path
        where = ""
        if path is not None:
            where += f" in {path}"
        if line_number is not None:
            where += f" at line {line_number}"
        super().__init__(message + where)
