"""Elastic flows of open planar curves in a cone."""

from ._coneflow import *  # noqa: F401,F403
from ._coneflow import __doc__, engine_version  # noqa: F401

__version__ = engine_version
