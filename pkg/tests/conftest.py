import random

import pytest

from flagless import ed25519


def _kernel_names() -> list[str]:
    return sorted(ed25519.available_backends())


@pytest.fixture(params=_kernel_names())
def kernel(request):
    """Group-arithmetic kernel under test (pure always, compiled if built)."""
    return ed25519.available_backends()[request.param]


@pytest.fixture(params=_kernel_names())
def backend(request, monkeypatch):
    """Route the whole package through one specific kernel."""
    monkeypatch.setattr(
        ed25519, "_kernel", ed25519.available_backends()[request.param]
    )
    return request.param


@pytest.fixture
def rng():
    return random.Random(0xF1A6)
