"""Regular LDPC coding: pseudo-random construction, encoding, BP decoding.

The construction matches variable sockets to check sockets through a random
permutation, then repairs parallel edges and 4-cycles by swapping socket
assignments.  Rank-deficient outcomes are rejected so the rate is exactly
(n - m)/n.  Encoding is systematic: information bits occupy the non-pivot
columns of the reduced parity-check matrix and parities solve H c = 0.

LLR sign convention throughout: positive means bit 0, matching the demapper.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

BP_MAX_ITERS = 50
_PHI_MIN = 1e-9  # magnitude floor before phi(x) = -ln tanh(x/2)


@dataclass(frozen=True)
class ParityCheckCode:
    """Sparse parity-check structure plus the derived systematic encoder.

    check_neighbors[c] lists the variable indices of check c.  pivot and
    info positions partition the n columns; encode_table[j] holds the packed
    parity pattern information bit j toggles.
    """

    n: int
    k: int
    check_neighbors: tuple[tuple[int, ...], ...]
    pivot_positions: np.ndarray
    info_positions: np.ndarray
    encode_table: np.ndarray

    @property
    def m(self) -> int:
        return len(self.check_neighbors)

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def _edges(self):
        edge_var = np.concatenate([np.array(cn, dtype=np.int64) for cn in self.check_neighbors])
        check_ptr = np.zeros(self.m, dtype=np.int64)
        degs = np.array([len(cn) for cn in self.check_neighbors], dtype=np.int64)
        check_ptr[1:] = np.cumsum(degs)[:-1]
        check_of_edge = np.repeat(np.arange(self.m, dtype=np.int64), degs)
        var_order = np.argsort(edge_var, kind="stable")
        var_degs = np.bincount(edge_var, minlength=self.n)
        var_ptr = np.zeros(self.n, dtype=np.int64)
        var_ptr[1:] = np.cumsum(var_degs)[:-1]
        var_of_sorted = edge_var[var_order]
        return edge_var, check_ptr, check_of_edge, var_order, var_ptr, var_of_sorted

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self._edges[0], minlength=self.n)

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """Parity of each check, shape (..., m); all-zero means codeword."""
        edge_var, check_ptr = self._edges[0], self._edges[1]
        vals = np.asarray(bits)[..., edge_var].astype(np.int64)
        return np.add.reduceat(vals, check_ptr, axis=-1) % 2

    def extract_info(self, codeword: np.ndarray) -> np.ndarray:
        return np.asarray(codeword)[..., self.info_positions]


def _pack_bits(rows_cols: list[tuple[int, ...]], n: int) -> np.ndarray:
    words = (n + 63) // 64
    mat = np.zeros((len(rows_cols), words), dtype=np.uint64)
    for r, cols in enumerate(rows_cols):
        idx = np.asarray(cols, dtype=np.int64)
        np.bitwise_xor.at(mat[r], idx // 64, np.uint64(1) << (idx % 64).astype(np.uint64))
    return mat


def _unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, bitorder="little")[:n]


def _reduce_parity_matrix(check_neighbors, n):
    """Packed Gauss-Jordan; returns (reduced rows, pivot column list)."""
    mat = _pack_bits(check_neighbors, n)
    m = mat.shape[0]
    piv_cols = []
    r = 0
    for c in range(n):
        w, b = divmod(c, 64)
        bit = np.uint64(1) << np.uint64(b)
        below = np.nonzero(mat[r:, w] & bit)[0]
        if below.size == 0:
            continue
        p = r + below[0]
        if p != r:
            mat[[r, p]] = mat[[p, r]]
        hits = np.nonzero(mat[:, w] & bit)[0]
        hits = hits[hits != r]
        if hits.size:
            mat[hits] ^= mat[r]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    return mat, piv_cols


def _build_encoder(check_neighbors, n):
    """Systematic encoder from the reduced matrix; None if rank-deficient."""
    m = len(check_neighbors)
    reduced, piv_cols = _reduce_parity_matrix(check_neighbors, n)
    rank = len(piv_cols)
    if rank < m:
        return None
    pivots = np.array(piv_cols, dtype=np.int64)
    info = np.setdiff1d(np.arange(n, dtype=np.int64), pivots)
    # parity p_i = sum_j reduced[i, info_j] * u_j; store per info bit packed
    words = (m + 63) // 64
    table = np.zeros((len(info), words), dtype=np.uint64)
    for jj, col in enumerate(info):
        w, b = divmod(int(col), 64)
        rows = np.nonzero(reduced[:, w] & (np.uint64(1) << np.uint64(b)))[0]
        np.bitwise_xor.at(
            table[jj], rows // 64, np.uint64(1) << (rows % 64).astype(np.uint64)
        )
    return pivots, info, table


def generate_regular_code(
    n: int,
    col_degree: int = 3,
    row_degree: int = 6,
    seed: int = 0,
    max_retries: int = 20,
    repair_passes: int = 200,
) -> ParityCheckCode:
    """Pseudo-random (col_degree, row_degree)-regular code, deterministic per seed.

    Retries reseed the permutations; failure to reach a 4-cycle-free,
    full-rank structure within the retry budget raises RuntimeError.
    """
    if (n * col_degree) % row_degree != 0:
        raise ValueError(f"n*col_degree = {n * col_degree} not divisible by row_degree {row_degree}")
    m = n * col_degree // row_degree
    rng = np.random.default_rng(seed)

    for _ in range(max_retries):
        edge_var = _repair_edge_matching(n, m, col_degree, row_degree, rng, repair_passes)
        if edge_var is None:
            continue
        check_neighbors = tuple(
            tuple(sorted(int(v) for v in edge_var[c * row_degree : (c + 1) * row_degree]))
            for c in range(m)
        )
        enc = _build_encoder(check_neighbors, n)
        if enc is None:
            continue
        pivots, info, table = enc
        return ParityCheckCode(
            n=n,
            k=len(info),
            check_neighbors=check_neighbors,
            pivot_positions=pivots,
            info_positions=info,
            encode_table=table,
        )
    raise RuntimeError(
        f"could not build a 4-cycle-free full-rank ({col_degree},{row_degree}) code "
        f"with n={n} after {max_retries} attempts"
    )


def _repair_edge_matching(n, m, col_degree, row_degree, rng, passes):
    """Socket permutation repaired until girth >= 6; None on failure.

    Check socket c*row_degree+t carries edge_var[...]; offending sockets
    (parallel edge or shared variable pair between two checks) get swapped
    with random sockets until no conflicts remain.
    """
    edge_var = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), col_degree))
    n_sockets = edge_var.size

    for _ in range(passes):
        offenders = []
        pair_owner = {}
        for c in range(m):
            vs = edge_var[c * row_degree : (c + 1) * row_degree]
            svs = np.sort(vs)
            if (svs[1:] == svs[:-1]).any():
                dup = svs[np.nonzero(svs[1:] == svs[:-1])[0][0]]
                slot = c * row_degree + int(np.nonzero(vs == dup)[0][0])
                offenders.append(slot)
                continue
            clean = True
            for i in range(row_degree):
                for j in range(i + 1, row_degree):
                    key = (svs[i], svs[j])
                    if key in pair_owner:
                        slot = c * row_degree + int(np.nonzero(vs == svs[i])[0][0])
                        offenders.append(slot)
                        clean = False
                        break
                if not clean:
                    break
            if clean:
                for i in range(row_degree):
                    for j in range(i + 1, row_degree):
                        pair_owner[(svs[i], svs[j])] = c
        if not offenders:
            return edge_var
        for slot in offenders:
            other = int(rng.integers(n_sockets))
            edge_var[slot], edge_var[other] = edge_var[other], edge_var[slot]
    return None


def encode(code: ParityCheckCode, u: np.ndarray) -> np.ndarray:
    """Systematic encode; u is (k,) or (B, k) of 0/1, returns (..., n)."""
    u = np.asarray(u)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    if u.shape[-1] != code.k:
        raise ValueError(f"expected {code.k} information bits, got {u.shape[-1]}")
    out = np.zeros((u.shape[0], code.n), dtype=np.uint8)
    for b in range(u.shape[0]):
        mask = u[b] != 0
        if mask.any():
            parity_words = np.bitwise_xor.reduce(code.encode_table[mask], axis=0)
        else:
            parity_words = np.zeros(code.encode_table.shape[1], dtype=np.uint64)
        out[b, code.info_positions] = u[b]
        out[b, code.pivot_positions] = _unpack_bits(parity_words, code.m)
    return out[0] if single else out


def _phi(x: np.ndarray) -> np.ndarray:
    return -np.log(np.tanh(np.maximum(x, _PHI_MIN) / 2.0))


def decode_bp(
    llrs: np.ndarray,
    code: ParityCheckCode,
    max_iters: int = BP_MAX_ITERS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Belief-propagation decode with syndrome early exit.

    llrs is (n,) or (B, n), positive favoring bit 0.  Returns
    (bits, converged, iterations); a cleared converged flag reports honest
    non-convergence and bits then hold the final-iteration hard decision.
    """
    llrs = np.asarray(llrs, dtype=float)
    single = llrs.ndim == 1
    if single:
        llrs = llrs[None, :]
    if llrs.shape[-1] != code.n:
        raise ValueError(f"expected {code.n} LLRs, got {llrs.shape[-1]}")
    B = llrs.shape[0]
    edge_var, check_ptr, check_of_edge, var_order, var_ptr, var_of_sorted = code._edges

    l_vc = llrs[:, edge_var].copy()
    l_cv = np.zeros_like(l_vc)
    bits = (llrs < 0).astype(np.uint8)
    done = np.zeros(B, dtype=bool)
    iters_used = np.full(B, max_iters, dtype=np.int64)
    out_bits = bits.copy()

    for it in range(1, max_iters + 1):
        signs = np.where(l_vc < 0, -1.0, 1.0)
        mags = _phi(np.abs(l_vc))
        sign_prod = np.multiply.reduceat(signs, check_ptr, axis=-1)
        mag_sum = np.add.reduceat(mags, check_ptr, axis=-1)
        l_cv = (
            sign_prod[:, check_of_edge] * signs * _phi(mag_sum[:, check_of_edge] - mags)
        )
        incoming = np.add.reduceat(l_cv[:, var_order], var_ptr, axis=-1)
        totals = llrs + incoming
        l_vc = totals[:, edge_var] - l_cv
        bits = (totals < 0).astype(np.uint8)

        parities = code.syndrome(bits)
        ok = ~parities.any(axis=-1)
        newly = ok & ~done
        if newly.any():
            out_bits[newly] = bits[newly]
            iters_used[newly] = it
            done |= newly
        if done.all():
            break

    out_bits[~done] = bits[~done]
    if single:
        return out_bits[0], done[0], int(iters_used[0])
    return out_bits, done, iters_used


@dataclass(frozen=True)
class Interleaver:
    """Seeded random bijection on codeword positions."""

    permutation: np.ndarray
    seed: int

    @classmethod
    def random(cls, n: int, seed: int) -> "Interleaver":
        return cls(permutation=np.random.default_rng(seed).permutation(n), seed=seed)

    def interleave(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[..., self.permutation]

    def deinterleave(self, y: np.ndarray) -> np.ndarray:
        out = np.empty_like(np.asarray(y))
        out[..., self.permutation] = y
        return out


def dump_code(code: ParityCheckCode, path) -> None:
    """Sparse text dump: header, then one line per check with its variables."""
    with open(path, "w") as fh:
        fh.write(f"n {code.n}\n")
        for c, cols in enumerate(code.check_neighbors):
            fh.write(" ".join(str(v) for v in (c, *cols)) + "\n")


def load_code(path) -> ParityCheckCode:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "n":
            raise ValueError("missing 'n <block length>' header")
        n = int(header[1])
        rows = {}
        for line in fh:
            parts = [int(tok) for tok in line.split()]
            if parts:
                rows[parts[0]] = tuple(parts[1:])
    check_neighbors = tuple(rows[c] for c in sorted(rows))
    enc = _build_encoder(check_neighbors, n)
    if enc is None:
        raise ValueError("parity-check matrix is rank-deficient; cannot build encoder")
    pivots, info, table = enc
    return ParityCheckCode(
        n=n,
        k=len(info),
        check_neighbors=check_neighbors,
        pivot_positions=pivots,
        info_positions=info,
        encode_table=table,
    )
