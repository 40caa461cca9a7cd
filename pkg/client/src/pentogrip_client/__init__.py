"""Remote reset/step environment over the pentogrip wire protocol."""

from .client import (
    ACTION_NAMES,
    N_ACTIONS,
    DesyncError,
    Observation,
    RemoteEnv,
    RemoteError,
)

__version__ = "1.0.0"

__all__ = [
    "ACTION_NAMES",
    "N_ACTIONS",
    "DesyncError",
    "Observation",
    "RemoteEnv",
    "RemoteError",
    "__version__",
]
