"""Make the scriptbox package importable when it isn't installed."""
from __future__ import annotations

import sys
from pathlib import Path

SANDBOX_SRC = Path(__file__).resolve().parent.parent / "src"

try:
    import scriptbox  # noqa: F401
except ImportError:
    sys.path.insert(0, str(SANDBOX_SRC))
