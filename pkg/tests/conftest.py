"""Shared test plumbing.

Keeps the tests directory importable (for the `_oracle` helper module)
regardless of the pytest import mode in use.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
