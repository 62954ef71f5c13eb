from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
SANDBOX_SRC = REPO_ROOT / "sandbox" / "src"

# The script-execution worker ships as its own package. Make it importable and
# spawnable as ``python -m scriptbox`` even when only this package has been
# installed into the environment.
try:
    import scriptbox  # noqa: F401
except ImportError:
    sys.path.insert(0, str(SANDBOX_SRC))
    existing = os.environ.get("PYTHONPATH")
    os.environ["PYTHONPATH"] = (
        f"{SANDBOX_SRC}{os.pathsep}{existing}" if existing else str(SANDBOX_SRC)
    )


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return Path(__file__).resolve().parent / "fixtures"
