import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=30, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", autouse=True)
def reference_cache(tmp_path_factory):
    """Reference trajectories are cached per session unless OSCIDIFF_CACHE is set."""
    if os.environ.get("OSCIDIFF_CACHE"):
        yield os.environ["OSCIDIFF_CACHE"]
        return
    path = str(tmp_path_factory.mktemp("oscidiff-cache"))
    os.environ["OSCIDIFF_CACHE"] = path
    yield path
    del os.environ["OSCIDIFF_CACHE"]
