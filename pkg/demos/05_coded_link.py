"""Coded link: rate-1/2 LDPC over the six-user channel at the waterfall.

Each block encodes one 4608-bit message per user, interleaves it, maps bit
pairs to codewords, detects after the multiple-access channel, and feeds
the demapped LLRs to a belief-propagation decoder.  Around 6 dB per-user
Eb/N0 the coded error rate collapses; the max-log detector's information
loss shows up as a right shift of that cliff.

Runs a few minutes (each point decodes 30 codeword blocks).
"""

import time

from scmasim import SimConfig, run_ber

GRID = (5.8, 6.0, 6.2, 6.4)
BLOCKS = 30

print(f"rate-1/2 (3,6) LDPC, n=9216, {BLOCKS} blocks per point, AWGN\n")
print(f"{'Eb/N0 dB':>9s} {'exact BER':>12s} {'max-log BER':>12s}")

results = {}
for variant in ("log_exact", "log_maxlog"):
    t0 = time.perf_counter()
    recs = run_ber(SimConfig(
        snr_grid_db=GRID, variant=variant, coded=True,
        max_blocks=BLOCKS, target_bit_errors=10**9, seed=5,
    ))
    results[variant] = recs
    print(f"  [{variant}: {time.perf_counter() - t0:.0f}s]")

for i, snr in enumerate(GRID):
    e = results["log_exact"][i]
    m = results["log_maxlog"][i]
    print(f"{snr:9.1f} {e.ber:12.3e} {m.ber:12.3e}")

print("\nBoth runs decode the same noise realizations (same seed), so every")
print("difference is the detector's doing.  At the top of the cliff the")
print("max-log link leaves residual errors the exact fold already cleared;")
print("a small nudge in transmit power buys back the same block quality.")
