"""Exception types shared across the package."""


class AdiabaticLabError(Exception):
    """Base class for all package-specific errors."""


class NoGap(AdiabaticLabError):
    """The nonzero spectrum of a generator comes too close to zero."""


class NonSemisimpleKernel(AdiabaticLabError):
    """The zero eigenvalue cluster carries a nonvanishing nilpotent part."""


class IllConditioned(AdiabaticLabError):
    """The spectral basis is too ill-conditioned to trust the split."""


class OdeStepFailure(AdiabaticLabError):
    """A transport ODE solve failed (step control underflow)."""


class StepUnderflow(AdiabaticLabError):
    """The propagator could not resolve the fast scale within budget."""


class SmoothnessLoss(AdiabaticLabError):
    """Sampled path is not resolved by the collocation grid."""


class DegenerateHamiltonian(AdiabaticLabError):
    """Eigenvalues of H(s) collide where simple spectrum is required."""


class Reducible(AdiabaticLabError):
    """Markov generator has no unique (strictly positive) stationary state."""


class NoDetailedBalance(AdiabaticLabError):
    """Rates do not satisfy the detailed balance symmetry."""


class NotAState(AdiabaticLabError):
    """Matrix is not a valid density matrix within tolerance."""


class ConfigInvalid(AdiabaticLabError):
    """Experiment configuration failed schema validation."""
