import numpy as np
import pytest

from ricemele import ModelParams


@pytest.fixture
def fig1_params():
    """Ideal chain used for the edge-state demonstrations (no ports)."""
    return ModelParams(p=10, V=37.5, t1=120.0, t2=150.0, tQ=62.5, VQ=-37.5)


@pytest.fixture
def fitted_params():
    """Device parameters extracted from the measured spectra, lossy ports."""
    return ModelParams(
        p=4, V=40.0, t1=230.0, t2=280.0, tQ=130.0, VQ=-40.0, VM=590.0,
        sigmaL=-18j, sigmaR=-18j,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
