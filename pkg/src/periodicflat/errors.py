"""Exception types shared across the package."""


class MeshError(ValueError):
    """Invalid mesh data: bad indices, non-manifold edges, degenerate faces."""


class TopologyError(MeshError):
    """Mesh topology does not match what an operation requires."""


class PathError(MeshError):
    """A cut path is malformed or cannot be constructed."""


class NumericalError(RuntimeError):
    """A numerical step failed to reach its required accuracy."""


class SingularSystemError(NumericalError):
    """Factorization hit a pivot too small to trust.

    ``pivot_index`` is the offending row/column when it could be identified.
    """

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index
