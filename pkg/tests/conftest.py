import pytest


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Session-wide dataset cache so expensive builds happen once."""
    return str(tmp_path_factory.mktemp("dataset-cache"))
