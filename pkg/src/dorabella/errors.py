class DataFormatError(ValueError):
    """Input data does not follow one of the documented file or token formats."""


class InvariantError(RuntimeError):
    """An internal consistency check failed."""
