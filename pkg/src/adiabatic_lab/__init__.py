"""Numerical laboratory for slowly driven contraction semigroups."""

__version__ = "0.1.0"

from .cheb import ChebGrid
from .errors import (AdiabaticLabError, ConfigInvalid, DegenerateHamiltonian,
                     IllConditioned, NoDetailedBalance, NoGap,
                     NonSemisimpleKernel, NotAState, OdeStepFailure,
                     Reducible, SmoothnessLoss, StepUnderflow)
from .generator_path import GeneratorPath
from .operator_core import (HypothesisReport, SpectralSplit,
                            check_contraction_generator, norm_value,
                            reduced_inverse_apply, spectral_split, unvec, vec)
from .propagator import Trajectory, evolve, evolve_backward_adjoint
from .slow_manifold import (Expansion, adiabatic_invariant_defect,
                            decoupling_error, expand, remainder)
from .transport import (ProjectionPath, TransportOperator, dual_transport,
                        transport_discrete, transport_ode)

__all__ = [
    "AdiabaticLabError", "ChebGrid", "ConfigInvalid", "DegenerateHamiltonian",
    "Expansion", "GeneratorPath", "HypothesisReport", "IllConditioned",
    "NoDetailedBalance", "NoGap", "NonSemisimpleKernel", "NotAState",
    "OdeStepFailure", "ProjectionPath", "Reducible", "SmoothnessLoss",
    "SpectralSplit", "StepUnderflow", "Trajectory", "TransportOperator",
    "adiabatic_invariant_defect", "check_contraction_generator",
    "decoupling_error", "dual_transport", "evolve", "evolve_backward_adjoint",
    "expand", "norm_value", "reduced_inverse_apply", "remainder",
    "spectral_split", "transport_discrete", "transport_ode", "unvec", "vec",
]
