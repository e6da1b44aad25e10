from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from support import layer, open_policy  # noqa: E402


@pytest.fixture
def stack():
    """Fresh policy layer over an open, permissive test policy."""
    return layer(open_policy())
