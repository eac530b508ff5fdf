"""Message passing versus exact MAP on the full six-user system.

The joint posterior over all layers has M^J = 4096 configurations, small
enough to enumerate, so the iterative detector can be checked against the
truth.  Two regimes are shown.  The shipped codebook assigns each occupied
resource its own sign bit, so the joint posterior factorizes per resource
and message passing lands on the exact marginals after a single round, on
cycles or not.  A deliberately entangled codebook (every bit rides on every
occupied resource) breaks that factorization, and the loopy graph then only
approximates the marginals, converging over a few iterations.
"""

import numpy as np

from scmasim import (
    Codebook,
    default_codebook,
    derive_factor_graph,
    detect_mpa,
    map_detect_bruteforce,
    n0_from_ebn0,
    sample_channel,
    transmit,
)

FRAMES = 1000
EBN0_DB = 8.0


def compare(cb, title):
    fg = derive_factor_graph(cb)
    rng = np.random.default_rng(101)
    n0 = n0_from_ebn0(EBN0_DB, cb)
    sym = rng.integers(0, cb.M, size=(FRAMES, cb.J))
    cw = cb.symbols[np.arange(cb.J)[None, :], sym]
    real = sample_channel("awgn", cb, n0, rng, batch_shape=(FRAMES,))
    y = transmit(cw, real, rng)
    exact_marg, exact_hard = map_detect_bruteforce(y, real.gains, n0, cb)

    print(f"{title}: {FRAMES} frames at Eb/N0 = {EBN0_DB:g} dB")
    print("iters  worst marginal gap   mean gap     hard-decision matches")
    for iters in (1, 2, 3, 4, 6):
        res = detect_mpa(y, real.gains, n0, cb, iters=iters, fg=fg)
        gap = np.abs(res.marginals - exact_marg)
        agree = np.mean(res.hard_symbols == exact_hard)
        print(f"{iters:5d}  {gap.max():18.2e}   {gap.mean():.2e}   {agree:20.4%}")
    res = detect_mpa(y, real.gains, n0, cb, fg=fg)
    print(f"symbol error rate: message passing {np.mean(res.hard_symbols != sym):.4f}, "
          f"exact MAP {np.mean(exact_hard != sym):.4f}\n")


def entangled_codebook():
    """Same sparsity pattern, but the full 2-bit label modulates each
    occupied resource as a rotated QPSK point, so the two resources of a
    layer are no longer independent given the bits."""
    base = default_codebook()
    fg = derive_factor_graph(base)
    symbols = np.zeros_like(base.symbols)
    for j, ks in enumerate(fg.vn_neighbors):
        for slot, k in enumerate(ks):
            rank = fg.fn_neighbors[k].index(j)
            for m in range(base.M):
                angle = 2 * np.pi * m / base.M + np.pi * rank / 6 + np.pi * slot / 4
                symbols[j, m, k] = np.exp(1j * angle) / np.sqrt(2.0)
    return Codebook(J=base.J, K=base.K, M=base.M, N=base.N, symbols=symbols)


compare(default_codebook(), "shipped codebook (one sign bit per resource)")
compare(entangled_codebook(), "entangled codebook (label rides on both resources)")

print("With per-resource sign bits the resources decouple: one round of")
print("messages already carries all the evidence, which is why the shipped")
print("design is so friendly to early decisions.  Entangling the label re-")
print("introduces genuine loopy behavior: the marginals stay approximate,")
print("while the hard decisions still settle after a few iterations.")
