# Copyright (C) 2026 The reenact authors
# SPDX-License-Identifier: Apache-2.0
#
"""One-shot face reenactment with an FPN generator."""

from ._reenact import *  # noqa: F401,F403
from ._reenact import __doc__  # noqa: F401

__version__ = "0.1.0"
