"""Exception types raised by the reconstruction pipeline."""


class ReconstructionError(Exception):
    """Base class for recoverable pipeline failures."""


class RankDeficient(ReconstructionError):
    """Matrix is (numerically) singular where an invertible one is required."""


class BranchCut(ReconstructionError):
    """An eigenvalue sits on the negative real axis; principal root undefined."""


class SortingAmbiguity(ReconstructionError):
    """Two eigenvalues compete for the same target phase within tolerance."""


class DisconnectedSupport(ReconstructionError):
    """Bipartite support of the phase equations is disconnected."""


class ZeroFirstColumnEntry(ReconstructionError):
    """Output-phase stripping is ill-defined: a first-column entry vanishes."""


class CombinationDivergence(ReconstructionError):
    """The two intensity-mode estimates disagree beyond the allowed norm."""


class DimensionMismatch(ReconstructionError):
    """Operands have incompatible shapes."""


class IndexOutOfRange(ReconstructionError):
    """Layer index outside 1..K."""


class PlanMismatch(ReconstructionError):
    """Tomography records do not match the measurement plan."""


class ZeroMatrix(ReconstructionError):
    """A fidelity argument has vanishing norm."""


class ValidationError(ReconstructionError):
    """An experiment configuration field violates its invariant."""
