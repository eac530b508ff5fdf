"""Tour of the shipped codebook and its factor graph.

Six layers share four complex resources; every layer occupies two of them,
so each resource is contested by three layers and the system carries 150%
of the traffic an orthogonal assignment would allow.
"""

import numpy as np

from scmasim import default_codebook, derive_factor_graph, encode_symbol

cb = default_codebook()
fg = derive_factor_graph(cb)

print(f"layers J={cb.J}  resources K={cb.K}  codewords M={cb.M}  "
      f"nonzeros per codeword N={cb.N}  bits per symbol D={cb.D}")
print(f"overloading factor J/K = {cb.J / cb.K:.2f}\n")

print("layer supports (which resources each layer occupies):")
for j, support in enumerate(fg.vn_neighbors):
    print(f"  layer {j}: resources {tuple(support)}")

print("\nresource occupancy (who collides where):")
for k, occupants in enumerate(fg.fn_neighbors):
    print(f"  resource {k}: layers {tuple(occupants)}  (degree {len(occupants)})")

print("\nevery layer transmits unit average energy:")
for j in range(cb.J):
    energy = np.mean(np.abs(cb.symbols[j]) ** 2, axis=0).sum()
    print(f"  layer {j}: E = {energy:.6f}")

print("\ncodewords of layer 0 (rows are the four 2-bit labels):")
for m in range(cb.M):
    bits = ((m >> 1) & 1, m & 1)
    row = "  ".join(f"{v.real:+.3f}{v.imag:+.3f}j" for v in cb.symbols[0, m])
    assert np.allclose(encode_symbol(cb, 0, bits), cb.symbols[0, m])
    print(f"  bits {bits}: [{row}]")

print("\nEach occupied resource carries one bit of the label (sign), and the")
print("layers colliding on a resource are rotated against each other so the")
print("detector can tell them apart.")
