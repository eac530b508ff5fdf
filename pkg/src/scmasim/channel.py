"""Channel realizations and the received superposition signal.

Received vectors are plain complex ndarrays of length K (or (..., K) for a
batch of frames).  Noise is circularly-symmetric complex Gaussian with
total variance n0 per resource, i.e. the likelihood density is
exp(-|y - s|^2 / n0) / (pi * n0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, derive_factor_graph

CHANNEL_MODELS = ("awgn", "rayleigh_iid")


@dataclass(frozen=True)
class ChannelRealization:
    """Per-frame complex gains plus the operating noise variance.

    gains has shape (..., K, J); leading axes index frames in a batch.
    For the AWGN model every gain is 1; for rayleigh_iid each gain on an
    occupied (layer, resource) edge is i.i.d. CN(0, 1) and gains off the
    graph are zero.
    """

    gains: np.ndarray
    n0: float
    model_tag: str


def sample_channel(
    model: str,
    cb: Codebook,
    n0: float,
    rng: np.random.Generator | None = None,
    batch_shape: tuple[int, ...] = (),
) -> ChannelRealization:
    """Draw one channel realization (or a batch) for the given model."""
    if n0 <= 0:
        raise ValueError(f"noise variance must be positive, got {n0}")
    shape = tuple(batch_shape) + (cb.K, cb.J)
    if model == "awgn":
        gains = np.ones(shape, dtype=complex)
    elif model == "rayleigh_iid":
        if rng is None:
            raise ValueError("rayleigh_iid requires a random generator")
        gains = (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        ) / np.sqrt(2.0)
        # zero out gains on unoccupied (resource, layer) pairs
        fg = derive_factor_graph(cb)
        mask = np.zeros((cb.K, cb.J), dtype=bool)
        for j, k in fg.edges:
            mask[k, j] = True
        gains = np.where(mask, gains, 0.0)
    else:
        raise ValueError(f"unknown channel model {model!r}; expected one of {CHANNEL_MODELS}")
    return ChannelRealization(gains=gains, n0=float(n0), model_tag=model)


def transmit(
    codewords: np.ndarray,
    realization: ChannelRealization,
    rng: np.random.Generator | None = None,
    add_noise: bool = True,
) -> np.ndarray:
    """Superpose the layers' faded codewords and add per-resource noise.

    codewords has shape (..., J, K): one codeword per layer.  Returns the
    received vector(s) of shape (..., K).  add_noise=False is a test hook
    for a noiseless channel.
    """
    codewords = np.asarray(codewords, dtype=complex)
    gains = realization.gains
    if codewords.shape[-1] != gains.shape[-2] or codewords.shape[-2] != gains.shape[-1]:
        raise ValueError(
            f"codewords shape {codewords.shape} does not match gains shape {gains.shape}"
        )
    y = np.einsum("...kj,...jk->...k", gains, codewords)
    if add_noise:
        if rng is None:
            raise ValueError("noisy transmission requires a random generator")
        noise = (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        ) * np.sqrt(realization.n0 / 2.0)
        y = y + noise
    return y


def n0_from_ebn0(ebn0_db: float, cb: Codebook, code_rate: float = 1.0) -> float:
    """Noise variance for a per-user Eb/N0 operating point.

    With unit per-layer symbol energy, the energy per information bit is
    1 / (D * code_rate), so N0 = 1 / (D * code_rate * 10^(Eb/N0 / 10)).
    """
    if not 0.0 < code_rate <= 1.0:
        raise ValueError(f"code rate must be in (0, 1], got {code_rate}")
    es_per_bit = 1.0 / (cb.D * code_rate)
    return es_per_bit / (10.0 ** (ebn0_db / 10.0))
