"""Python bindings for the cascade-photon repeater simulation core."""

from ._core import *  # noqa: F401,F403
from ._core import CascadeError, DomainError, FitError, NumericalError, ResourceError, run_cli

__all__ = [name for name in dir() if not name.startswith("_")]
