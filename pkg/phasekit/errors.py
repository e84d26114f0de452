# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.


class PhaseKitError(Exception):
    """Base class of every error raised by phasekit."""


class InvalidInputError(PhaseKitError, ValueError):
    pass


class UnsupportedInputError(PhaseKitError, TypeError):
    """An operation was handed a source it cannot work with, e.g. a bare density
    where a wave function is required."""


class DegenerateProjectionError(PhaseKitError, ValueError):
    pass


class ResourceError(PhaseKitError, RuntimeError):
    """A requested state would need more modes than the configured cap."""


class ResolutionError(PhaseKitError, RuntimeError):
    """A grid or quadrature was too coarse to resolve the requested quantity."""


class ConvergenceError(PhaseKitError, RuntimeError):
    pass


class VerificationError(PhaseKitError, AssertionError):
    pass
