"""Exception types shared across the package."""


class AadganError(Exception):
    """Base class for all package-specific errors."""


class BadMagic(AadganError):
    """File does not start with the expected magic bytes or version."""


class DimMismatch(AadganError):
    """Declared dimensions disagree with the payload length."""


class IoFailure(AadganError):
    """Underlying file read or write failed."""


class NonFiniteInput(AadganError):
    """Input tensor contains NaN or infinity."""


class RoiOutOfBounds(AadganError):
    """ROI rectangle does not lie fully inside the parent image."""


class EmptyDataset(AadganError):
    """Dataset contains no samples."""


class InvalidGeometry(AadganError):
    """Requested image/ROI geometry is impossible."""


class InvalidConfig(AadganError):
    """Configuration value or document is invalid."""


class ShapeMismatch(AadganError):
    """Tensor shapes are incompatible with the operation."""


class NonFiniteLoss(AadganError):
    """A training loss became NaN or infinite."""


class ConfigGeometryMismatch(AadganError):
    """Model configuration is incompatible with the dataset geometry."""


class ImageTooSmall(AadganError):
    """Image is smaller than the minimum size the operation supports."""
