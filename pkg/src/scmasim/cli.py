"""Command-line front end.

Four subcommands: `ber` and `ami` run seeded Monte-Carlo sweeps and emit
CSV, `fit` re-derives the max-star correction-curve constants and checks
them against the built-in table, `validate` lints a codebook JSON file.

Sweep settings come from an optional JSON config file whose keys mirror
SimConfig field names; command-line flags override file values.  Exit code
0 means success, 1 means a check failed (validation errors, fit outside
tolerance), 2 means the invocation itself was unusable.
"""

from __future__ import annotations

import argparse
import json
import sys

from .codebook import load_codebook, validate_codebook_document
from .maxstar import G1_PARAMS, G2_PARAMS, fit_correction_curve
from .mpa import DEFAULT_ITERATIONS
from .sim import SimConfig, run_ami, run_ber

FIT_REFERENCE = {"g1": G1_PARAMS, "g2": G2_PARAMS}
FIT_TOLERANCE = 0.02


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with SimConfig fields")
    p.add_argument("--snr", help="comma-separated SNR grid in dB")
    p.add_argument("--variant", help="detector variant, e.g. log_exact")
    p.add_argument("--channel", dest="channel_model", help="awgn or rayleigh_iid")
    p.add_argument("--codebook", dest="codebook_path", help="codebook JSON path")
    p.add_argument("--alpha", dest="early_alpha", type=float,
                   help="early-decision threshold for mpa_early")
    p.add_argument("--iterations", type=int, help=f"detector iterations (default {DEFAULT_ITERATIONS})")
    p.add_argument("--max-frames", dest="max_frames", type=int)
    p.add_argument("--max-blocks", dest="max_blocks", type=int)
    p.add_argument("--target-bit-errors", dest="target_bit_errors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", dest="output_path", help="results CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scmasim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ber = sub.add_parser("ber", help="Monte-Carlo bit error rate sweep")
    _add_sweep_flags(ber)
    ber.add_argument("--coded", action="store_true", default=None,
                     help="run the rate-1/2 LDPC chain")
    ber.add_argument("--uncoded", action="store_true", help="force coding off")
    ber.add_argument("--code-length", dest="code_length", type=int)
    ber.add_argument("--code-seed", dest="code_seed", type=int)
    ber.add_argument("--interleaver-seed", dest="interleaver_seed", type=int)

    ami = sub.add_parser("ami", help="average mutual information sweep")
    _add_sweep_flags(ami)
    ami.add_argument("--llr-output", dest="llr_output_path",
                     help="also dump raw per-bit LLR samples to this CSV")

    fit = sub.add_parser("fit", help="re-derive max-star correction constants")
    fit.add_argument("--kind", choices=("g1", "g2"), required=True)
    fit.add_argument("--tolerance", type=float, default=FIT_TOLERANCE,
                     help="max per-parameter deviation from the built-in table")

    val = sub.add_parser("validate", help="lint a codebook JSON file")
    val.add_argument("codebook", help="path to the codebook JSON")
    return parser


_SWEEP_KEYS = (
    "snr_grid_db", "variant", "channel_model", "codebook_path", "early_alpha",
    "iterations", "max_frames", "max_blocks", "target_bit_errors", "coded",
    "code_length", "code_col_degree", "code_row_degree", "code_seed",
    "interleaver_seed", "bp_max_iters", "noiseless", "seed", "output_path",
    "llr_output_path",
)


def _sweep_config(args: argparse.Namespace) -> SimConfig:
    fields: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        unknown = sorted(set(doc) - set(_SWEEP_KEYS))
        if unknown:
            raise ValueError(f"unknown config keys in {args.config}: {', '.join(unknown)}")
        fields.update(doc)
    for key in _SWEEP_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    if args.snr is not None:
        fields["snr_grid_db"] = tuple(float(s) for s in args.snr.split(","))
    if getattr(args, "uncoded", False):
        fields["coded"] = False
    fields.setdefault("snr_grid_db", (4.0, 8.0, 12.0))
    return SimConfig(**fields)


def cmd_ber(args: argparse.Namespace) -> int:
    records = run_ber(_sweep_config(args))
    for r in records:
        print(f"snr={r.snr_db:g} dB  variant={r.variant}  ber={r.ber:.4e}  "
              f"bits={r.bit_count}  errors={r.error_count}  "
              f"fn_terms={r.fn_term_evaluations}  exp_ops={r.exp_op_count}")
    return 0


def cmd_ami(args: argparse.Namespace) -> int:
    records = run_ami(_sweep_config(args))
    for r in records:
        print(f"snr={r.snr_db:g} dB  variant={r.variant}  ami={r.ami:.4f}  "
              f"samples={r.sample_count}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    curve = fit_correction_curve(args.kind)
    names = ("a", "b", "c", "d") if args.kind == "g1" else ("a", "b")
    shown = "  ".join(f"{n}={v:.6f}" for n, v in zip(names, curve.params))
    print(f"{args.kind}: {shown}  mse={curve.mse:.4e}")
    reference = FIT_REFERENCE[args.kind]
    worst = max(abs(p - r) for p, r in zip(curve.params, reference))
    print(f"{args.kind}: max deviation from built-in constants {worst:.4f}")
    if worst > args.tolerance:
        print(f"fit outside tolerance {args.tolerance}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    with open(args.codebook, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    problems = validate_codebook_document(doc)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return 1
    cb = load_codebook(args.codebook)
    print(f"ok: J={cb.J} K={cb.K} M={cb.M} N={cb.N} "
          f"overloading={cb.J / cb.K:.2f}")
    return 0


_COMMANDS = {"ber": cmd_ber, "ami": cmd_ami, "fit": cmd_fit, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
