"""Cobb angle toolkit: landmark parsing, CACM/CAM angle reports, losses, metrics."""

from ._cobbkit import *  # noqa: F401,F403

__version__ = "0.1.0"
