"""Sparse code multiple access simulation toolkit.

Uplink multiuser detection on sparse codebooks: probability-domain and
log-domain sum-product detectors (with early symbol decisions and max-star
approximations), bitwise mutual information estimation, a regular LDPC
coding chain, and a seeded Monte-Carlo sweep harness.
"""

from .ami import (
    AmiResult,
    LlrRecord,
    LlrSamples,
    estimate_ami_histogram,
    map_bit_llr,
    mi_from_llrs,
    read_llr_csv,
    scma_ami,
    write_llr_csv,
)
from .channel import CHANNEL_MODELS, ChannelRealization, n0_from_ebn0, sample_channel, transmit
from .codebook import (
    Codebook,
    FactorGraph,
    bits_to_index,
    default_codebook,
    derive_factor_graph,
    encode_symbol,
    index_to_bits,
    load_codebook,
    parse_codebook,
    validate_codebook_document,
)
from .ldpc import (
    BP_MAX_ITERS,
    Interleaver,
    ParityCheckCode,
    decode_bp,
    dump_code,
    encode,
    generate_regular_code,
    load_code,
)
from .logmpa import LLR_CLIP, LogDetectionResult, bit_llrs, detect_log
from .maxstar import (
    G1_PARAMS,
    G2_PARAMS,
    CorrectionCurve,
    correction_op_count,
    exact_correction,
    fit_correction_curve,
    g1_correction,
    g2_correction,
    logsum,
    maxstar,
)
from .mpa import (
    DEFAULT_ITERATIONS,
    DetectionResult,
    DetectorStats,
    detect_mpa,
    detect_mpa_early,
    joint_log_posterior,
    map_detect_bruteforce,
)
from .sim import (
    SIM_VARIANTS,
    ResultRecord,
    SimConfig,
    read_results_csv,
    run_ami,
    run_ber,
    worker_count,
    write_results_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AmiResult",
    "BP_MAX_ITERS",
    "CHANNEL_MODELS",
    "ChannelRealization",
    "Codebook",
    "CorrectionCurve",
    "DEFAULT_ITERATIONS",
    "DetectionResult",
    "DetectorStats",
    "FactorGraph",
    "G1_PARAMS",
    "G2_PARAMS",
    "Interleaver",
    "LLR_CLIP",
    "LlrRecord",
    "LlrSamples",
    "LogDetectionResult",
    "ParityCheckCode",
    "ResultRecord",
    "SIM_VARIANTS",
    "SimConfig",
    "bits_to_index",
    "bit_llrs",
    "correction_op_count",
    "decode_bp",
    "default_codebook",
    "derive_factor_graph",
    "detect_log",
    "detect_mpa",
    "detect_mpa_early",
    "dump_code",
    "encode",
    "encode_symbol",
    "estimate_ami_histogram",
    "exact_correction",
    "fit_correction_curve",
    "g1_correction",
    "g2_correction",
    "generate_regular_code",
    "index_to_bits",
    "joint_log_posterior",
    "load_code",
    "load_codebook",
    "logsum",
    "map_bit_llr",
    "map_detect_bruteforce",
    "maxstar",
    "mi_from_llrs",
    "n0_from_ebn0",
    "parse_codebook",
    "read_llr_csv",
    "read_results_csv",
    "run_ami",
    "run_ber",
    "sample_channel",
    "scma_ami",
    "transmit",
    "validate_codebook_document",
    "worker_count",
    "write_llr_csv",
    "write_results_csv",
]
