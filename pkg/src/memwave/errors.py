"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/config problems -> 2,
numerical failures -> 3.  Verification failures are reported, not raised.
"""


class UsageError(ValueError):
    """A caller violated a documented precondition (bad shapes, bad config,
    inadmissible control, grid mismatch, unknown family name)."""


class NumericalInstabilityError(RuntimeError):
    """A marching scheme produced a non-finite value.  The message names the
    first offending grid node."""


class IllConditionedError(RuntimeError):
    """A linear solve hit a (near-)singular system: vanishing Volterra
    diagonal or a dense system with condition estimate beyond threshold."""


class AssemblyError(RuntimeError):
    """Data-driven operator assembly produced an inconsistent object, e.g. a
    connecting kernel whose asymmetry exceeds the scheme tolerance."""
