"""Exception types shared across the package."""


class DatasetError(ValueError):
    """Schema violation or malformed input file; message names row/column."""


class ConfigError(ValueError):
    """Invalid run configuration (bad paths, parameters out of range)."""


class OracleCapError(RuntimeError):
    """Enumeration refused: the clean-set count exceeds the configured cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(
            f"enumeration of {count} clean sets exceeds cap {cap}; "
            "raise the cap or reduce |T|/n/q"
        )


class SoundnessError(AssertionError):
    """A certified instance was falsified by the oracle. This is a bug."""
