"""Mutual-information sweep: what the max-log shortcut costs in dB.

For each detector the demapped bit LLRs are histogrammed against the bits
actually sent, giving the per-bit mutual information; scaled by the 150%
overloading this becomes the system rate per resource (3 bits at most).
The exact and fitted-correction curves sit on top of each other while the
max-log curve needs measurably more SNR for the same information.

Runs about half a minute.
"""

import numpy as np

from scmasim import SimConfig, run_ami

GRID = tuple(np.round(np.arange(-1.0, 2.1, 0.5), 1))
FRAMES = 10_000


def crossing(points, level):
    for (s0, a0), (s1, a1) in zip(points, points[1:]):
        if a0 <= level <= a1:
            return s0 + (level - a0) * (s1 - s0) / (a1 - a0)
    return float("nan")


curves = {}
for variant in ("log_exact", "log_maxlog", "log_g1"):
    recs = run_ami(SimConfig(snr_grid_db=GRID, variant=variant,
                             max_frames=FRAMES, seed=42))
    curves[variant] = [(r.snr_db, r.ami) for r in recs]

print(f"{FRAMES} frames per point, AWGN, bits per resource element\n")
print(f"{'Eb/N0 dB':>9s} {'exact':>8s} {'max-log':>8s} {'g1 fit':>8s}")
for i, snr in enumerate(GRID):
    vals = [curves[v][i][1] for v in ("log_exact", "log_maxlog", "log_g1")]
    print(f"{snr:9.1f} {vals[0]:8.4f} {vals[1]:8.4f} {vals[2]:8.4f}")

level = 1.5
c_exact = crossing(curves["log_exact"], level)
c_maxlog = crossing(curves["log_maxlog"], level)
c_g1 = crossing(curves["log_g1"], level)
print(f"\nSNR where the curve reaches {level} bits:")
print(f"  exact   {c_exact:6.3f} dB")
print(f"  g1 fit  {c_g1:6.3f} dB   ({c_g1 - c_exact:+.3f} vs exact)")
print(f"  max-log {c_maxlog:6.3f} dB   ({c_maxlog - c_exact:+.3f} vs exact)")
print("\nThe horizontal offset of the max-log curve is the information the")
print("dropped correction terms throw away; the one-line fitted correction")
print("recovers essentially all of it.")
