"""ISAC radar target recognition: frame synthesis, delay-Doppler features and CNN detector."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "1.0.0"
