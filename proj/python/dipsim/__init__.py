"""Dipolar-coupled spin-1/2 ensembles under multiple-pulse echo sequences."""

from ._dipsim import *  # noqa: F401,F403
from ._dipsim import __version__  # noqa: F401
