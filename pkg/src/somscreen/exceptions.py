"""Exception types shared across the package."""


class DegenerateDataError(ValueError):
    """Raised when data has too little spread for an eigen-based computation."""


class EmptySegmentationError(ValueError):
    """Raised when a segmentation mask contains no foreground pixels."""


class ModelFormatError(ValueError):
    """Raised when a model file does not conform to the SOMODEL v1 layout."""


class ConfigError(ValueError):
    """Raised for unparsable or unknown pipeline configuration entries."""
