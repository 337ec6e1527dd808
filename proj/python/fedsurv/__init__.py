"""Federated survival analysis: jackknife pseudo values, Kaplan-Meier
partial matrices, and pseudo-value regression training."""

from fedsurv._core import *  # noqa: F401,F403
from fedsurv._core import __version__  # noqa: F401
