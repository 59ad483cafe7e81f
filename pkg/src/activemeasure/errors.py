"""Exception taxonomy shared across the package."""


class ActiveMeasureError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ActiveMeasureError):
    """Bad configuration: unknown environment, malformed config file or key."""


class ContractError(ActiveMeasureError):
    """A caller violated an API precondition (bad action, finished session, ...)."""


class CheckpointError(ActiveMeasureError):
    """Checkpoint file missing, corrupt, or incompatible with the requested use."""


class DataFormatError(ActiveMeasureError):
    """Malformed data file (metrics / trace / summary CSV)."""
