import pytest

from lai._kernels import available_backends, get_backend


@pytest.fixture(params=available_backends())
def kernels(request):
    """Run a test once per built kernel backend."""
    return get_backend(request.param)
