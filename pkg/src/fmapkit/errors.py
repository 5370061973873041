"""Exception types shared across the toolkit.

Everything raised on purpose derives from FmapError so callers (and the CLI)
can distinguish data problems from genuine bugs.
"""


class FmapError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FmapError):
    """Malformed or unsupported input file."""


class DegenerateMesh(FmapError):
    """Mesh violates a geometric sanity bound (zero-area face, unused vertex)."""


class IndexOutOfRange(FmapError):
    """A vertex/triangle/landmark index points outside the mesh."""


class DisconnectedMesh(FmapError):
    """A geodesic query needed a path between disconnected components."""


class LengthMismatch(FmapError):
    """Two sequences that must align (pred/gt maps, times/energies) do not."""


class InvalidK(FmapError):
    """Requested basis size is not in [1, n]."""


class SolverFailure(FmapError):
    """The dense eigensolver failed or the mesh exceeds the dense-size cap."""


class AllEigenvaluesExcluded(FmapError):
    """Every eigenvalue fell under the spectral cutoff (WKS on a flat spectrum)."""


class MissingFeatures(FmapError):
    """An operation needed descriptor values that were not supplied."""


class ZeroFeatures(FmapError):
    """A measure is undefined because the feature matrix is identically zero."""


class RankDeficient(FmapError):
    """Unregularized map estimation hit a singular descriptor Gram matrix."""


class NonFiniteEnergy(FmapError):
    """An optimization energy evaluated to NaN or infinity."""
