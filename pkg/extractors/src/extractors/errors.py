class ExtractorError(Exception):
    """Base class for extractor failures."""


class WeightsError(ExtractorError):
    """Model weights missing or unloadable."""
