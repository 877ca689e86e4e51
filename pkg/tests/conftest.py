import numpy as np
import pytest

import hscube as hs


@pytest.fixture(scope="session")
def bk7_model():
    return hs.bk7()


@pytest.fixture(scope="session")
def two_peak_truth_slice(bk7_model):
    """Clean 48x48 slice of the smooth two-peak object near 598 nm."""
    spec = hs.two_peak_spec(48, 48, bk7_model)
    wl = hs.default_wavelengths(30)
    truth = hs.generate_truth(spec, bk7_model, (48, 48), wl)
    band = int(np.argmin(np.abs(wl - 598.0)))
    return truth.band(band)


@pytest.fixture(scope="session")
def two_peak_slice(two_peak_truth_slice):
    """(clean, noisy, sigma) triple for single-image filter tests."""
    sigma = 1.3
    rng = np.random.default_rng(7)
    noise = (sigma / np.sqrt(2)) * (
        rng.normal(size=two_peak_truth_slice.shape)
        + 1j * rng.normal(size=two_peak_truth_slice.shape)
    )
    return two_peak_truth_slice, two_peak_truth_slice + noise, sigma
