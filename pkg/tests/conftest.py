import numpy as np
import pytest

from scmasim.codebook import Codebook, default_codebook, derive_factor_graph


@pytest.fixture(scope="session")
def cb():
    return default_codebook()


@pytest.fixture(scope="session")
def fg(cb):
    return derive_factor_graph(cb)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bpsk_codebook():
    """Degenerate single-layer, single-resource antipodal codebook."""
    symbols = np.array([[[1.0 + 0.0j]], [[-1.0 + 0.0j]]]).reshape(1, 2, 1)
    return Codebook(J=1, K=1, M=2, N=1, symbols=symbols)


def random_frames(rng, cb, count, n0, model="awgn"):
    """Draw symbols and a received batch: returns (sym, gains, y)."""
    from scmasim.channel import sample_channel, transmit

    sym = rng.integers(0, cb.M, size=(count, cb.J))
    cw = cb.symbols[np.arange(cb.J)[None, :], sym]
    real = sample_channel(model, cb, n0, rng, batch_shape=(count,))
    y = transmit(cw, real, rng)
    return sym, real.gains, y
