"""SCMA codebooks and the bipartite layer/resource graph they induce.

A codebook assigns each of J layers (users) a set of M sparse K-dimensional
complex codewords.  All codewords of one layer share the same support of
size N < K, so the layer-to-resource occupancy forms a bipartite graph:
variable nodes are layers, function nodes are resources.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

ENERGY_TOL = 1e-9

DEFAULT_CODEBOOK_RESOURCE = "codebook_j6k4m4.json"


@dataclass(frozen=True)
class Codebook:
    """Immutable set of per-layer sparse constellations.

    Attributes
    ----------
    J, K, M, N : int
        Layer count, resource count, codewords per layer, nonzeros per
        codeword.
    symbols : ndarray, shape (J, M, K), complex
        symbols[j, m] is the m-th codeword of layer j.  The array is
        read-only; layers are normalized to unit average symbol energy
        unless loaded with normalize=False.
    """

    J: int
    K: int
    M: int
    N: int
    symbols: np.ndarray

    @property
    def D(self) -> int:
        """Bits per symbol, log2(M)."""
        return self.M.bit_length() - 1

    def support(self, j: int) -> tuple[int, ...]:
        """Resource indices where layer j's codewords are nonzero."""
        occupied = np.any(np.abs(self.symbols[j]) > 0, axis=0)
        return tuple(int(k) for k in np.nonzero(occupied)[0])

    def codeword(self, j: int, m: int) -> np.ndarray:
        return self.symbols[j, m]


@dataclass(frozen=True)
class FactorGraph:
    """Bipartite adjacency between layers (VNs) and resources (FNs)."""

    edges: tuple[tuple[int, int], ...]
    vn_neighbors: tuple[tuple[int, ...], ...]
    fn_neighbors: tuple[tuple[int, ...], ...]
    d_v: tuple[int, ...]
    d_f: tuple[int, ...]
    overloading: float

    def edge_index(self) -> dict[tuple[int, int], int]:
        """Map (layer, resource) -> position in the edge list."""
        return {e: i for i, e in enumerate(self.edges)}


def validate_codebook_document(doc: dict) -> list[str]:
    """Check a parsed codebook document against the file schema.

    Returns a list of human-readable violations (empty when valid).
    """
    problems = []
    for key in ("J", "K", "M", "N", "layers"):
        if key not in doc:
            problems.append(f"missing field {key!r}")
    if problems:
        return problems

    J, K, M, N = doc["J"], doc["K"], doc["M"], doc["N"]
    for name, val in (("J", J), ("K", K), ("M", M), ("N", N)):
        if not isinstance(val, int) or val < 1:
            problems.append(f"{name} must be a positive integer, got {val!r}")
    if problems:
        return problems

    if M & (M - 1) != 0:
        problems.append(f"M={M} is not a power of two")
    if not N < K and K > 1:
        problems.append(f"N={N} must be smaller than K={K}")
    if N > K:
        problems.append(f"N={N} exceeds K={K}")

    layers = doc["layers"]
    if len(layers) != J:
        problems.append(f"expected {J} layers, found {len(layers)}")
        return problems
    for j, layer in enumerate(layers):
        if len(layer) != M:
            problems.append(f"layer {j}: expected {M} codewords, found {len(layer)}")
            continue
        support = None
        rows = []
        for m, word in enumerate(layer):
            if len(word) != K:
                problems.append(f"layer {j} codeword {m}: length {len(word)} != K={K}")
                continue
            try:
                vec = np.array([complex(re, im) for re, im in word])
            except (TypeError, ValueError):
                problems.append(f"layer {j} codeword {m}: entries must be [re, im] pairs")
                continue
            rows.append(vec)
            sup = frozenset(np.nonzero(np.abs(vec) > 0)[0].tolist())
            if len(sup) != N:
                problems.append(
                    f"layer {j} codeword {m}: {len(sup)} nonzero entries, expected N={N}"
                )
            if support is None:
                support = sup
            elif sup != support:
                problems.append(f"layer {j}: codeword {m} support differs from codeword 0")
        if len(rows) == M:
            arr = np.array(rows)
            for a in range(M):
                for b in range(a + 1, M):
                    if np.array_equal(arr[a], arr[b]):
                        problems.append(f"layer {j}: codewords {a} and {b} are identical")
    return problems


def parse_codebook(document, normalize: bool = True) -> Codebook:
    """Build a Codebook from a JSON document (text, dict, or file object).

    Complex entries are [re, im] pairs of floats.  With normalize=True
    (default) each layer is rescaled to unit average symbol energy; with
    normalize=False values are taken verbatim.

    Raises ValueError on a malformed document or invariant violation.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValueError(f"codebook document is not valid JSON: {exc}") from exc
    elif isinstance(document, dict):
        doc = document
    else:
        doc = json.load(document)

    problems = validate_codebook_document(doc)
    if problems:
        raise ValueError("invalid codebook: " + "; ".join(problems))

    J, K, M, N = doc["J"], doc["K"], doc["M"], doc["N"]
    symbols = np.zeros((J, M, K), dtype=complex)
    for j, layer in enumerate(doc["layers"]):
        for m, word in enumerate(layer):
            symbols[j, m] = [complex(re, im) for re, im in word]

    if normalize:
        for j in range(J):
            energy = np.mean(np.sum(np.abs(symbols[j]) ** 2, axis=1))
            symbols[j] /= math.sqrt(energy)

    symbols.setflags(write=False)
    return Codebook(J=J, K=K, M=M, N=N, symbols=symbols)


def load_codebook(path, normalize: bool = True) -> Codebook:
    """Load a codebook from a JSON file path."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_codebook(fh.read(), normalize=normalize)


def default_codebook() -> Codebook:
    """The packaged 6-layer, 4-resource, 4-ary codebook (N=2, d_f=3)."""
    text = (
        resources.files("scmasim")
        .joinpath("data", DEFAULT_CODEBOOK_RESOURCE)
        .read_text()
    )
    return parse_codebook(text)


def derive_factor_graph(cb: Codebook) -> FactorGraph:
    """Derive the layer/resource adjacency from codeword supports.

    Deterministic and idempotent; degrees are computed from the supports
    rather than trusted from any stated constants.  Emits a warning when
    the configuration is not overloaded (J/K <= 1).
    """
    supports = [cb.support(j) for j in range(cb.J)]
    edges = tuple((j, k) for j in range(cb.J) for k in supports[j])
    vn = tuple(supports[j] for j in range(cb.J))
    fn = tuple(
        tuple(j for j in range(cb.J) if k in supports[j]) for k in range(cb.K)
    )
    mu = cb.J / cb.K
    if mu <= 1.0:
        warnings.warn(
            f"configuration is not overloaded: J/K = {mu:.3g} <= 1", stacklevel=2
        )
    return FactorGraph(
        edges=edges,
        vn_neighbors=vn,
        fn_neighbors=fn,
        d_v=tuple(len(s) for s in vn),
        d_f=tuple(len(s) for s in fn),
        overloading=mu,
    )


def bits_to_index(bits) -> int:
    """Interpret a bit sequence as an MSB-first codeword index."""
    m = 0
    for b in bits:
        m = (m << 1) | int(b)
    return m


def index_to_bits(m: int, width: int) -> tuple[int, ...]:
    """MSB-first bit label of codeword index m."""
    return tuple((m >> (width - 1 - d)) & 1 for d in range(width))


def encode_symbol(cb: Codebook, layer: int, bits) -> np.ndarray:
    """Map a D-bit group to layer `layer`'s codeword (MSB-first labeling)."""
    if not 0 <= layer < cb.J:
        raise ValueError(f"layer index {layer} out of range [0, {cb.J})")
    bits = tuple(int(b) for b in bits)
    if len(bits) != cb.D:
        raise ValueError(f"expected {cb.D} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0/1, got {bits}")
    return cb.symbols[layer, bits_to_index(bits)]
