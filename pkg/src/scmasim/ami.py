"""Average mutual information of the multiuser channel, measured from LLRs.

Two ingredients: an exact per-bit MAP LLR obtained by exhaustive enumeration,
and a histogram estimator of the mutual information between a transmitted
bit and its LLR.  The system-level figure scales the per-layer sum of
bitwise informations by the overloading factor.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codebook import Codebook
from .mpa import joint_log_posterior

HISTOGRAM_BINS = 200
LLR_RANGE = (-40.0, 40.0)


@dataclass(frozen=True)
class LlrRecord:
    """One demapped-bit observation: the LLR and what was actually sent."""

    snr_db: float
    layer: int
    bit_pos: int
    bit: int
    llr: float


@dataclass(frozen=True)
class LlrSamples:
    """Column-oriented batch of LlrRecords (arrays share one length)."""

    snr_db: np.ndarray
    layer: np.ndarray
    bit_pos: np.ndarray
    bit: np.ndarray
    llr: np.ndarray

    def __len__(self) -> int:
        return len(self.llr)

    def __iter__(self):
        for i in range(len(self)):
            yield LlrRecord(
                float(self.snr_db[i]),
                int(self.layer[i]),
                int(self.bit_pos[i]),
                int(self.bit[i]),
                float(self.llr[i]),
            )

    @classmethod
    def from_records(cls, records) -> "LlrSamples":
        rows = list(records)
        return cls(
            snr_db=np.array([r.snr_db for r in rows], dtype=float),
            layer=np.array([r.layer for r in rows], dtype=np.int64),
            bit_pos=np.array([r.bit_pos for r in rows], dtype=np.int64),
            bit=np.array([r.bit for r in rows], dtype=np.int64),
            llr=np.array([r.llr for r in rows], dtype=float),
        )

    @classmethod
    def concatenate(cls, parts) -> "LlrSamples":
        parts = list(parts)
        return cls(
            snr_db=np.concatenate([p.snr_db for p in parts]),
            layer=np.concatenate([p.layer for p in parts]),
            bit_pos=np.concatenate([p.bit_pos for p in parts]),
            bit=np.concatenate([p.bit for p in parts]),
            llr=np.concatenate([p.llr for p in parts]),
        )


def mi_from_llrs(
    llr: np.ndarray,
    bits: np.ndarray,
    bin_count: int = HISTOGRAM_BINS,
    llr_range: tuple[float, float] = LLR_RANGE,
) -> float:
    """Mutual information I(B; lambda) in bits from one LLR stream.

    Builds per-bit-value histograms over the clipped range and evaluates the
    discrete mutual information of the (bin, bit) joint mass with empirical
    bit priors; empty cells follow the 0*log(0)=0 convention.  Requires both
    bit values to be present.
    """
    llr = np.clip(np.asarray(llr, dtype=float), llr_range[0], llr_range[1])
    bits = np.asarray(bits)
    if llr.shape != bits.shape or llr.ndim != 1:
        raise ValueError("llr and bits must be 1-D arrays of equal length")
    counts = np.empty((2, bin_count))
    for b in (0, 1):
        cls = llr[bits == b]
        if cls.size == 0:
            raise ValueError(f"no samples with bit value {b}")
        counts[b] = np.histogram(cls, bins=bin_count, range=llr_range)[0]
    joint = counts / counts.sum()
    p_bit = joint.sum(axis=1, keepdims=True)
    p_bin = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    ratio = np.ones_like(joint)
    ratio[mask] = joint[mask] / (p_bit * p_bin)[mask]
    return float(np.sum(joint[mask] * np.log2(ratio[mask])))


def estimate_ami_histogram(samples, bin_count: int = HISTOGRAM_BINS) -> dict:
    """Per-(layer, bit_pos) mutual information from a sample collection.

    Accepts an LlrSamples batch or any iterable of LlrRecord.  Returns
    {(layer, bit_pos): I_bits}.
    """
    if not isinstance(samples, LlrSamples):
        samples = LlrSamples.from_records(samples)
    if len(samples) == 0:
        raise ValueError("no samples")
    per_bit = {}
    keys = sorted(set(zip(samples.layer.tolist(), samples.bit_pos.tolist())))
    for layer, d in keys:
        sel = (samples.layer == layer) & (samples.bit_pos == d)
        per_bit[(layer, d)] = mi_from_llrs(samples.llr[sel], samples.bit[sel], bin_count)
    return per_bit


@dataclass(frozen=True)
class AmiResult:
    """System mutual-information summary.

    per_bit: {(layer, bit_pos): I}; per_layer_sum: {layer: sum over bits};
    scma_ami: overloading factor times the layer-averaged sum, bits per
    resource use.
    """

    per_bit: dict
    per_layer_sum: dict
    scma_ami: float
    sample_count: int
    bin_count: int


def scma_ami(
    per_bit: dict,
    cb: Codebook,
    sample_count: int = 0,
    bin_count: int = HISTOGRAM_BINS,
) -> AmiResult:
    """Aggregate per-bit informations into the overloaded-system figure."""
    expected = {(j, d) for j in range(cb.J) for d in range(cb.D)}
    if set(per_bit) != expected:
        missing = expected - set(per_bit)
        extra = set(per_bit) - expected
        raise ValueError(f"per_bit table incomplete: missing={missing} extra={extra}")
    per_layer = {j: float(sum(per_bit[(j, d)] for d in range(cb.D))) for j in range(cb.J)}
    mu = cb.J / cb.K
    avg = float(np.mean(list(per_layer.values())))
    return AmiResult(
        per_bit=dict(per_bit),
        per_layer_sum=per_layer,
        scma_ami=mu * avg,
        sample_count=sample_count,
        bin_count=bin_count,
    )


def map_bit_llr(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    layer: int,
    d: int,
    priors: np.ndarray | None = None,
) -> np.ndarray:
    """Exact MAP LLR of bit d of one layer by full enumeration.

    Partitions the M^J joint posterior by bit d (most significant first) of
    the target layer's codeword label; positive output favors bit 0.
    y is (K,) or (B, K); returns a float or a (B,) array, unclipped.
    """
    if not 0 <= layer < cb.J:
        raise ValueError(f"layer {layer} out of range")
    if not 0 <= d < cb.D:
        raise ValueError(f"bit position {d} out of range")
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    if single:
        y = y[None, :]
        gains = np.asarray(gains, dtype=complex)[None, ...]
    else:
        gains = np.asarray(gains, dtype=complex)
    loglik = joint_log_posterior(y, gains, n0, cb, priors)
    loglik = np.moveaxis(loglik, layer + 1, 1).reshape(y.shape[0], cb.M, -1)
    bit = (np.arange(cb.M) >> (cb.D - 1 - d)) & 1
    lam = logsumexp(loglik[:, bit == 0, :], axis=(1, 2)) - logsumexp(
        loglik[:, bit == 1, :], axis=(1, 2)
    )
    if single:
        return float(lam[0])
    return lam


def write_llr_csv(samples: LlrSamples, path) -> None:
    """Dump samples as CSV with columns snr_db,layer,bit_pos,bit,lambda."""

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "layer", "bit_pos", "bit", "lambda"])
        for i in range(len(samples)):
            w.writerow(
                [
                    repr(float(samples.snr_db[i])),
                    int(samples.layer[i]),
                    int(samples.bit_pos[i]),
                    int(samples.bit[i]),
                    repr(float(samples.llr[i])),
                ]
            )

    if isinstance(path, io.TextIOBase):
        emit(path)
    else:
        with open(path, "w", newline="") as fh:
            emit(fh)


def read_llr_csv(path) -> LlrSamples:
    def parse(fh):
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["snr_db", "layer", "bit_pos", "bit", "lambda"]:
            raise ValueError(f"unexpected LLR CSV header: {header}")
        cols = list(zip(*list(reader)))
        if not cols:
            empty_i = np.empty(0, dtype=np.int64)
            return LlrSamples(np.empty(0), empty_i, empty_i, empty_i, np.empty(0))
        return LlrSamples(
            snr_db=np.array(cols[0], dtype=float),
            layer=np.array(cols[1], dtype=np.int64),
            bit_pos=np.array(cols[2], dtype=np.int64),
            bit=np.array(cols[3], dtype=np.int64),
            llr=np.array(cols[4], dtype=float),
        )

    if isinstance(path, io.TextIOBase):
        return parse(path)
    with open(path, newline="") as fh:
        return parse(fh)
