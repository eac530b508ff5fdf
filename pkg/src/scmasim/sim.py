"""Seeded Monte-Carlo link simulation: BER and AMI sweeps with op counters.

Work is split into blocks (coded runs) or frame chunks (uncoded and AMI
runs), each seeded by SeedSequence(seed, spawn_key=(point, index)) so results
never depend on scheduling.  A bounded thread pool (SCMASIM_WORKERS, default
1) may compute blocks concurrently; accumulation always walks results in
block order and discards anything after the early-stop trigger, which keeps
the output byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import functools
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ami import LlrSamples, estimate_ami_histogram, scma_ami, write_llr_csv
from .channel import CHANNEL_MODELS, n0_from_ebn0, sample_channel, transmit
from .codebook import default_codebook, derive_factor_graph, load_codebook
from .ldpc import BP_MAX_ITERS, Interleaver, decode_bp, encode, generate_regular_code
from .logmpa import bit_llrs, detect_log
from .mpa import DEFAULT_ITERATIONS, detect_mpa, detect_mpa_early

SIM_VARIANTS = ("mpa", "mpa_early", "log_exact", "log_maxlog", "log_g1", "log_g2")
WORKERS_ENV_VAR = "SCMASIM_WORKERS"
CHUNK_FRAMES = 2000
BER_SCHEMA = "scmasim-ber-v1"
AMI_SCHEMA = "scmasim-ami-v1"
_SCHEMAS = {"ber": BER_SCHEMA, "ami": AMI_SCHEMA}


@dataclass(frozen=True)
class SimConfig:
    """One sweep: a detector variant run over an SNR grid.

    snr_grid_db is per-user Eb/N0 in dB; noise variance comes from
    n0_from_ebn0 with the code rate folded in when coded.  noiseless is a
    test hook that skips the additive noise while detectors still assume the
    grid's N0.
    """

    snr_grid_db: tuple
    variant: str = "log_exact"
    channel_model: str = "awgn"
    codebook_path: str | None = None
    early_alpha: float = 0.7
    iterations: int = DEFAULT_ITERATIONS
    max_frames: int = 10_000
    max_blocks: int = 200
    target_bit_errors: int = 100
    coded: bool = False
    code_length: int = 9216
    code_col_degree: int = 3
    code_row_degree: int = 6
    code_seed: int = 101
    interleaver_seed: int = 202
    bp_max_iters: int = BP_MAX_ITERS
    noiseless: bool = False
    seed: int = 0
    output_path: str | None = None
    llr_output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must be nonempty")
        if self.variant not in SIM_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {SIM_VARIANTS}")
        if self.channel_model not in CHANNEL_MODELS:
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.variant == "mpa_early" and not 0.5 < self.early_alpha <= 1.0:
            raise ValueError(f"early_alpha must be in (0.5, 1], got {self.early_alpha}")
        if self.max_frames < 1 or self.max_blocks < 1:
            raise ValueError("max_frames and max_blocks must be >= 1")
        if self.target_bit_errors < 1:
            raise ValueError("target_bit_errors must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class ResultRecord:
    """One SNR point of a sweep; kind selects the ber or ami reading."""

    snr_db: float
    variant: str
    kind: str
    value: float
    bit_count: int
    event_count: int
    fn_term_evaluations: int
    exp_op_count: int
    wall_seconds: float

    @property
    def ber(self) -> float:
        return self.value

    @property
    def ami(self) -> float:
        return self.value

    @property
    def error_count(self) -> int:
        return self.event_count

    @property
    def sample_count(self) -> int:
        return self.event_count


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}") from None


def _map_ordered(fn, args, workers):
    if workers <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


def _load_system(config: SimConfig):
    if config.codebook_path is not None:
        cb = load_codebook(config.codebook_path)
    else:
        cb = default_codebook()
    return cb, derive_factor_graph(cb)


def _pack_msb(bits: np.ndarray) -> np.ndarray:
    """(..., D) 0/1 array to codeword indices, MSB first."""
    idx = np.zeros(bits.shape[:-1], dtype=np.int64)
    for d in range(bits.shape[-1]):
        idx = (idx << 1) | bits[..., d].astype(np.int64)
    return idx


def _unpack_msb(idx: np.ndarray, width: int) -> np.ndarray:
    return np.stack(
        [(idx >> (width - 1 - d)) & 1 for d in range(width)], axis=-1
    ).astype(np.uint8)


def _detect_frames(config: SimConfig, y, gains, n0, cb, fg):
    """Run the configured variant; returns (hard symbols, bit LLRs, stats)."""
    v = config.variant
    if v in ("mpa", "mpa_early"):
        if v == "mpa":
            res = detect_mpa(y, gains, n0, cb, iters=config.iterations, fg=fg)
        else:
            res = detect_mpa_early(
                y, gains, n0, cb, iters=config.iterations, alpha=config.early_alpha, fg=fg
            )
        totals = np.log(np.maximum(res.marginals, 1e-300))
        lam = bit_llrs(totals, cb, variant="exact")
        return res.hard_symbols, lam, res.stats
    star = v.removeprefix("log_")
    res = detect_log(y, gains, n0, cb, iters=config.iterations, variant=star, fg=fg)
    lam = bit_llrs(res.llr_totals, cb, variant=star)
    return res.hard_symbols, lam, res.stats


def _simulate_frames(config, cb, fg, n0, rng, frames, want_bits=False):
    """Random uncoded frames through channel and detector."""
    bits = rng.integers(0, 2, size=(frames, cb.J, cb.D), dtype=np.int64)
    sym = _pack_msb(bits)
    codewords = cb.symbols[np.arange(cb.J)[None, :], sym]
    realization = sample_channel(config.channel_model, cb, n0, rng, batch_shape=(frames,))
    y = transmit(codewords, realization, rng, add_noise=not config.noiseless)
    hard, lam, stats = _detect_frames(config, y, realization.gains, n0, cb, fg)
    if want_bits:
        return bits, hard, lam, stats
    errors = int((_unpack_msb(hard, cb.D) != bits).sum())
    return frames * cb.J * cb.D, errors, stats


def _uncoded_chunk_sizes(max_frames: int) -> list:
    full, rem = divmod(max_frames, CHUNK_FRAMES)
    return [CHUNK_FRAMES] * full + ([rem] if rem else [])


def _rng_for(config, point_idx, block_idx):
    ss = np.random.SeedSequence(config.seed, spawn_key=(point_idx, block_idx))
    return np.random.default_rng(ss)


def _coded_block(config, cb, fg, code, interleaver, n0, point_idx, block_idx):
    """One codeword per user through the full chain; returns (bits, errors, stats)."""
    rng = _rng_for(config, point_idx, block_idx)
    frames = code.n // cb.D
    u = rng.integers(0, 2, size=(cb.J, code.k), dtype=np.int64)
    coded_bits = interleaver.interleave(encode(code, u))
    sym = _pack_msb(coded_bits.reshape(cb.J, frames, cb.D))
    codewords = cb.symbols[np.arange(cb.J)[None, :], sym.T]
    realization = sample_channel(config.channel_model, cb, n0, rng, batch_shape=(frames,))
    y = transmit(codewords, realization, rng, add_noise=not config.noiseless)
    _, lam, stats = _detect_frames(config, y, realization.gains, n0, cb, fg)
    streams = interleaver.deinterleave(lam.transpose(1, 0, 2).reshape(cb.J, code.n))
    decoded, _, _ = decode_bp(streams, code, config.bp_max_iters)
    errors = int((code.extract_info(decoded) != u).sum())
    return cb.J * code.k, errors, stats


def _run_ber_point(config, cb, fg, code, interleaver, point_idx, snr_db, workers):
    rate = code.rate if config.coded else 1.0
    n0 = n0_from_ebn0(snr_db, cb, code_rate=rate)

    if config.coded:
        tasks = list(range(config.max_blocks))

        def work(b):
            return _coded_block(config, cb, fg, code, interleaver, n0, point_idx, b)

    else:
        sizes = _uncoded_chunk_sizes(config.max_frames)
        tasks = list(enumerate(sizes))

        def work(task):
            b, frames = task
            rng = _rng_for(config, point_idx, b)
            return _simulate_frames(config, cb, fg, n0, rng, frames)

    bits = errors = terms = exps = 0
    pos = 0
    while pos < len(tasks):
        wave = tasks[pos : pos + workers]
        pos += len(wave)
        stop = False
        for nbits, nerr, stats in _map_ordered(work, wave, workers):
            bits += nbits
            errors += nerr
            terms += stats.fn_term_evaluations
            exps += stats.exp_op_count
            if errors >= config.target_bit_errors:
                stop = True
                break
        if stop:
            break
    return bits, errors, terms, exps


@functools.lru_cache(maxsize=4)
def _cached_code(n, col_degree, row_degree, seed):
    # construction plus Gauss-Jordan takes ~1 s at n=9216; reuse across sweeps
    return generate_regular_code(n, col_degree, row_degree, seed=seed)


def run_ber(config: SimConfig) -> list:
    """BER sweep over the SNR grid; optionally writes the results CSV."""
    cb, fg = _load_system(config)
    code = interleaver = None
    if config.coded:
        code = _cached_code(
            config.code_length,
            config.code_col_degree,
            config.code_row_degree,
            config.code_seed,
        )
        if code.n % cb.D != 0:
            raise ValueError("code length must be a multiple of bits per symbol")
        interleaver = Interleaver.random(code.n, config.interleaver_seed)
    workers = worker_count()

    records = []
    for p, snr_db in enumerate(config.snr_grid_db):
        t0 = time.perf_counter()
        bits, errors, terms, exps = _run_ber_point(
            config, cb, fg, code, interleaver, p, snr_db, workers
        )
        records.append(
            ResultRecord(
                snr_db=snr_db,
                variant=config.variant,
                kind="ber",
                value=errors / bits if bits else 0.0,
                bit_count=bits,
                event_count=errors,
                fn_term_evaluations=terms,
                exp_op_count=exps,
                wall_seconds=time.perf_counter() - t0,
            )
        )
    if config.output_path:
        write_results_csv(records, config.output_path)
    return records


def _ami_chunk(config, cb, fg, n0, snr_db, point_idx, block_idx, frames):
    rng = _rng_for(config, point_idx, block_idx)
    bits, _, lam, stats = _simulate_frames(config, cb, fg, n0, rng, frames, want_bits=True)
    F = bits.shape[0]
    layer = np.broadcast_to(np.arange(cb.J)[None, :, None], bits.shape)
    bit_pos = np.broadcast_to(np.arange(cb.D)[None, None, :], bits.shape)
    samples = LlrSamples(
        snr_db=np.full(bits.size, snr_db),
        layer=layer.reshape(-1).astype(np.int64),
        bit_pos=bit_pos.reshape(-1).astype(np.int64),
        bit=bits.reshape(-1).astype(np.int64),
        llr=lam.reshape(-1),
    )
    return samples, stats


def run_ami(config: SimConfig) -> list:
    """AMI sweep; coding is ignored since the estimator uses raw bit LLRs."""
    cb, fg = _load_system(config)
    workers = worker_count()
    records = []
    all_samples = []
    for p, snr_db in enumerate(config.snr_grid_db):
        t0 = time.perf_counter()
        n0 = n0_from_ebn0(snr_db, cb, code_rate=1.0)
        sizes = _uncoded_chunk_sizes(config.max_frames)

        def work(task):
            b, frames = task
            return _ami_chunk(config, cb, fg, n0, snr_db, p, b, frames)

        outs = _map_ordered(work, list(enumerate(sizes)), workers)
        samples = LlrSamples.concatenate([s for s, _ in outs])
        terms = sum(st.fn_term_evaluations for _, st in outs)
        exps = sum(st.exp_op_count for _, st in outs)
        per_bit = estimate_ami_histogram(samples)
        result = scma_ami(per_bit, cb, sample_count=len(samples))
        records.append(
            ResultRecord(
                snr_db=snr_db,
                variant=config.variant,
                kind="ami",
                value=result.scma_ami,
                bit_count=len(samples),
                event_count=len(samples),
                fn_term_evaluations=terms,
                exp_op_count=exps,
                wall_seconds=time.perf_counter() - t0,
            )
        )
        if config.llr_output_path:
            all_samples.append(samples)
    if config.output_path:
        write_results_csv(records, config.output_path)
    if config.llr_output_path:
        write_llr_csv(LlrSamples.concatenate(all_samples), config.llr_output_path)
    return records


def write_results_csv(records, path) -> None:
    """Versioned CSV; float cells use repr so reruns are byte-comparable."""
    kinds = {r.kind for r in records}
    if len(kinds) != 1:
        raise ValueError(f"records mix kinds {sorted(kinds)}")
    kind = kinds.pop()
    if kind not in _SCHEMAS:
        raise ValueError(f"unknown record kind {kind!r}")
    event_col = "error_count" if kind == "ber" else "sample_count"
    own = not isinstance(path, io.TextIOBase)
    fh = open(path, "w", newline="") if own else path
    try:
        fh.write(f"# schema={_SCHEMAS[kind]}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["snr_db", "variant", kind, "bit_count", event_col,
             "fn_term_evaluations", "exp_op_count", "wall_seconds"]
        )
        for r in records:
            writer.writerow(
                [repr(r.snr_db), r.variant, repr(r.value), r.bit_count, r.event_count,
                 r.fn_term_evaluations, r.exp_op_count, repr(r.wall_seconds)]
            )
    finally:
        if own:
            fh.close()


def read_results_csv(path) -> list:
    with open(path, newline="") as fh:
        schema_line = fh.readline().strip()
        if not schema_line.startswith("# schema="):
            raise ValueError(f"missing schema line in {path}")
        schema = schema_line.removeprefix("# schema=")
        kind = {v: k for k, v in _SCHEMAS.items()}.get(schema)
        if kind is None:
            raise ValueError(f"unsupported schema {schema!r}")
        reader = csv.reader(fh)
        header = next(reader)
        records = []
        for row in reader:
            records.append(
                ResultRecord(
                    snr_db=float(row[0]),
                    variant=row[1],
                    kind=kind,
                    value=float(row[2]),
                    bit_count=int(row[3]),
                    event_count=int(row[4]),
                    fn_term_evaluations=int(row[5]),
                    exp_op_count=int(row[6]),
                    wall_seconds=float(row[7]),
                )
            )
    return records
