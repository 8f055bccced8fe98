"""Exception and warning types shared across the package.

The CLI maps these onto process exit codes, so new error types should
subclass one of the families below rather than raising bare ValueError
for domain failures.
"""


class MzweakError(Exception):
    """Base class for all domain errors raised by this package."""


class NotPSDError(MzweakError):
    """Matrix is not positive semidefinite within tolerance."""


class NotHermitianError(MzweakError):
    """Matrix is not Hermitian within tolerance."""


class OrthogonalSelectionError(MzweakError):
    """Pre- and post-selection states are (numerically) orthogonal."""


class DegenerateScanError(MzweakError):
    """Phase scan carries no usable intensity (max + min below threshold)."""


class TooFewExtremaError(MzweakError):
    """Profile does not contain enough peaks/dips for an envelope fit."""


class NonConvergenceError(MzweakError):
    """Iterative fit did not meet its convergence tolerance."""


class DegenerateProfileError(MzweakError):
    """Profile dynamic range is too small relative to its noise floor."""


class ZeroPostSelectionError(MzweakError):
    """Post-selection annihilates the state; pointer distribution undefined."""


class AmplificationRegionWarning(UserWarning):
    """Reference visibility is tiny; the inferred weak value divides by noise.

    The value is still returned: near-orthogonal selection is where the
    interferometric route is interesting, the warning only flags that the
    division is ill-conditioned.
    """
