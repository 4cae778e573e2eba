"""Analysis toolkit for linear-threshold rate networks.

    tau dx/dt = -x + [W x + d]_0^m

Submodules: ``linalg`` (matrix kernels), ``model`` (network data and
switching regions), ``matclass`` (P / totally Hurwitz / totally L-stable /
absolute Schur / norm tests), ``dynamics`` (simulation and probes),
``equilibria`` (enumeration and uniqueness tests), ``inhibition``
(selective inhibition design), ``wilsoncowan`` (two-population reduction),
``ensemble`` (random-network statistics), ``netfile`` (JSON I/O),
``svg`` (figures) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (AssumptionViolated, LimitExceeded, LtnetError, NetworkFileError,
                     RangeConditionError, ShapeError, StepSizeError)
from .linalg import Verdict
from .model import NetworkSpec, SwitchingIndex, threshold, vector_field
from .matclass import certify
from .equilibria import enumerate_equilibria

__all__ = [
    "AssumptionViolated", "LimitExceeded", "LtnetError", "NetworkFileError",
    "RangeConditionError", "ShapeError", "StepSizeError", "Verdict", "NetworkSpec",
    "SwitchingIndex", "threshold", "vector_field", "certify", "enumerate_equilibria",
]
