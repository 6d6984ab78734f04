# bidprice/exceptions.py
"""
Custom exceptions for the bid-price toolkit.
"""


class BidPriceError(Exception):
    """Base class for every error raised by the toolkit."""
    pass


class NetworkModelError(BidPriceError):
    """Raised for malformed networks or invalid breakpoint requests."""
    pass


class LinearProgramError(BidPriceError):
    """Raised when a linear program is malformed."""
    pass


class SolverError(BidPriceError):
    """Raised when a solver breaks down or violates its certificate."""
    pass


class MaskingError(BidPriceError):
    """Raised for inconsistent masking inputs."""
    pass


class KeyGenerationError(MaskingError):
    """Raised when random keys cannot be sampled with full rank."""
    pass


class RecoveryError(MaskingError):
    """Raised when original solutions cannot be recovered."""
    pass


class AttackError(BidPriceError):
    """Raised when a reconstruction audit hits a singular leaked matrix."""
    pass


class SparsityError(BidPriceError):
    """Raised when the sparsity model does not yield a usable pattern."""
    pass


class WireFormatError(BidPriceError):
    """Raised for malformed payload bytes."""
    pass


class ChannelError(BidPriceError):
    """Raised on message loss, duplication or transport failure."""
    pass


class ProtocolError(BidPriceError):
    """Raised when the multi-party protocol has to abort."""
    pass


class SimulationError(BidPriceError):
    """Raised for invalid simulation input or broken booking state."""
    pass


class ManifestError(BidPriceError):
    """Raised when an output directory cannot take a new run manifest."""
    pass
