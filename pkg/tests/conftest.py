import os
import pathlib

# repo-shipped gamma cache: tests read precomputed tables and write any new
# ones next to them, so reruns are cheap
_REPO_CACHE = pathlib.Path(__file__).resolve().parent.parent / "data" / "gamma"
os.environ.setdefault("BHPERT_CACHE_DIR", str(_REPO_CACHE))

import pytest  # noqa: E402
from hypothesis import settings  # noqa: E402

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def cache_dir() -> str:
    return os.environ["BHPERT_CACHE_DIR"]
