"""Density matrix, condensate fraction and spatial statistics of quantum bright solitons."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
