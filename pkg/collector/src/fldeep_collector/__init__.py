"""Record Keras training runs as analyzable bundle directories."""

from .shim import (
    DEFAULT_LIBRARY_WATCHLIST,
    NORMALIZED_BAND,
    CollectorError,
    CollectorSession,
    attach,
    probe_dataset,
    probe_deploy,
    probe_env,
)

__all__ = [
    "DEFAULT_LIBRARY_WATCHLIST",
    "NORMALIZED_BAND",
    "CollectorError",
    "CollectorSession",
    "attach",
    "probe_dataset",
    "probe_deploy",
    "probe_env",
]
