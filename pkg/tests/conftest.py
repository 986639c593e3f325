import os
from pathlib import Path

import pytest

# Repo-local cache so expensive map computations survive test reruns.
CACHE_DIR = Path(__file__).resolve().parent.parent / ".cache"
os.environ.setdefault("KURASYNC_CACHE", str(CACHE_DIR))


@pytest.fixture(scope="session")
def cache_dir() -> Path:
    CACHE_DIR.mkdir(exist_ok=True)
    return CACHE_DIR
