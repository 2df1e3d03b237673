class DomainError(ValueError):
    """Argument outside the domain where a model is defined."""


class AmbiguityError(RuntimeError):
    """A numerical answer is not unique (degenerate null space, overlapping peaks)."""


class MissingPeakError(RuntimeError):
    """Requested multi-photon orders were not found in a spectrum."""

    def __init__(self, message, found_orders=()):
        super().__init__(message)
        self.found_orders = tuple(found_orders)


class ConfigError(ValueError):
    """Malformed configuration or data file."""
