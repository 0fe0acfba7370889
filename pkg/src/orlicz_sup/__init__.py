"""Tail bounds for suprema of deviations of stochastic processes in Orlicz spaces.

The package combines Orlicz N-function utilities, majorizing-measure chaining
integrals, the Ornstein-Uhlenbeck specialization and a Monte Carlo harness
that checks the bounds against simulated paths.
"""

from .errors import (AdmissibilityError, CapabilityError, DivergenceError, DomainOverflowError,
                     InvalidParameterError, OrliczError, SingularEndpointError)
from .nfunc import NFunction, conjugate, generalized_inverse, make_catalog_function
from .orlicz_norms import MeasureGrid, SampleSet
from .ou_model import OUModel

__version__ = "0.1.0"
