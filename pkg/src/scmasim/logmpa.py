"""Log-domain message-passing detection with pluggable max-star variants.

Messages live on a reference-point scale: every table stores
L(x_jm) = log(q(x_jm)/q(x_j1)), so the m=0 entry is identically zero and no
normalization is ever needed.  Likelihood constants cancel in the reference
subtraction.  The "exact" variant is numerically equivalent to the
probability-domain detector; "maxlog", "g1" and "g2" trade accuracy for
transcendental-free reductions.

Counters follow the same model as the probability-domain module:
fn_term_evaluations counts enumerated combination terms per frame and
exp_op_count counts transcendental evaluations, which for log-domain
detection means the pairwise corrections of exact max-star folds (zero for
the other variants).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, FactorGraph, derive_factor_graph
from .maxstar import VARIANTS, maxstar
from .mpa import DEFAULT_ITERATIONS, DetectorStats, residual_sq_tables

LLR_CLIP = 40.0
NEG_HUGE = -1e30  # log-domain stand-in for probability zero; keeps entries finite


@dataclass
class LogMessageState:
    """Mutable per-frame log-ratio message tables.

    l_v, l_u: (B, E, M) layer-to-resource and resource-to-layer tables,
    m=0 column pinned at 0.  prior_ratio: (B, J, M) log(P(x_jm)/P(x_j1)).
    """

    l_v: np.ndarray
    l_u: np.ndarray
    prior_ratio: np.ndarray
    variant: str
    frozen: np.ndarray
    decided: np.ndarray
    decided_at: np.ndarray
    edge_of: dict[tuple[int, int], int]


@dataclass(frozen=True)
class LogDetectionResult:
    """Log-domain detector output.

    llr_totals: (..., J, M) final L_j tables (reference entry 0).
    marginals: exp-normalized posteriors of llr_totals.
    hard_symbols / decided_at / stats: as in the probability-domain result.
    """

    llr_totals: np.ndarray
    marginals: np.ndarray
    hard_symbols: np.ndarray
    decided_at: np.ndarray
    stats: DetectorStats


def _log_priors_ratio(priors, batch: int, J: int, M: int) -> np.ndarray:
    if priors is None:
        return np.zeros((batch, J, M))
    p = np.asarray(priors, dtype=float)
    if np.any(p < 0):
        raise ValueError("priors must be nonnegative")
    if p.shape == (J, M):
        p = np.broadcast_to(p, (batch, J, M))
    elif p.shape != (batch, J, M):
        raise ValueError(f"priors shape {p.shape} incompatible with ({batch}, {J}, {M})")
    with np.errstate(divide="ignore"):
        lp = np.log(p)
    lp = np.maximum(lp, NEG_HUGE)
    return lp - lp[..., :1]


def new_log_state(
    cb: Codebook,
    fg: FactorGraph,
    batch: int,
    priors: np.ndarray | None = None,
    variant: str = "exact",
) -> LogMessageState:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    E = len(fg.edges)
    ratio = _log_priors_ratio(priors, batch, cb.J, cb.M)
    l_v = np.empty((batch, E, cb.M))
    for e, (j, _k) in enumerate(fg.edges):
        l_v[:, e, :] = ratio[:, j, :]
    return LogMessageState(
        l_v=l_v,
        l_u=np.zeros((batch, E, cb.M)),
        prior_ratio=ratio,
        variant=variant,
        frozen=np.zeros((batch, cb.J), dtype=bool),
        decided=np.full((batch, cb.J), -1, dtype=np.int64),
        decided_at=np.full((batch, cb.J), -1, dtype=np.int64),
        edge_of=fg.edge_index(),
    )


def vn_update_log(state: LogMessageState, fg: FactorGraph, j: int, k: int) -> np.ndarray:
    """L_{j->k} = prior log-ratio plus incoming L_{l->j} for l != k."""
    e = state.edge_of[(j, k)]
    total = state.prior_ratio[:, j, :].copy()
    for l in fg.vn_neighbors[j]:
        if l == k:
            continue
        total += state.l_u[:, state.edge_of[(j, l)], :]
    live = ~state.frozen[:, j]
    state.l_v[live, e, :] = total[live]
    return state.l_v[:, e, :]


def fn_update_log(
    state: LogMessageState,
    fg: FactorGraph,
    k: int,
    j: int,
    base_tables: list[np.ndarray],
) -> tuple[np.ndarray, int, int]:
    """L_{k->j}(x_jm) = fold of C terms over interferer combinations.

    C combines the scaled squared distance with the interferers' current
    messages; the fold runs in combination-index order and the m=0 column is
    subtracted so the reference convention is preserved.  Returns the stored
    table plus (terms, corrections) counted per the module docstring.
    """
    e = state.edge_of[(j, k)]
    js = fg.fn_neighbors[k]
    d = len(js)
    p = js.index(j)
    B, M = state.l_v.shape[0], state.l_v.shape[-1]

    c = base_tables[k]
    unfrozen_others = np.zeros(B, dtype=np.int64)
    for i, other in enumerate(js):
        if i == p:
            continue
        axes = [1] * d
        axes[i] = M
        c = c + state.l_v[:, state.edge_of[(other, k)], :].reshape((B,) + tuple(axes))
        unfrozen_others += ~state.frozen[:, other]

    c = np.moveaxis(c, p + 1, 1).reshape(B, M, -1)
    acc = c[:, :, 0]
    for n in range(1, c.shape[-1]):
        acc = maxstar(acc, c[:, :, n], state.variant)
    new_l = acc - acc[:, :1]

    live = ~state.frozen[:, j]
    state.l_u[live, e, :] = new_l[live]
    terms = int((live * M * M**unfrozen_others).sum())
    if state.variant == "exact":
        corrections = int((live * M * np.maximum(M**unfrozen_others - 1, 0)).sum())
    else:
        corrections = 0
    return state.l_u[:, e, :], terms, corrections


def finalize_log(state: LogMessageState, fg: FactorGraph) -> np.ndarray:
    """Final totals L_j: prior log-ratio plus every incoming resource message."""
    B, J, M = state.prior_ratio.shape
    totals = state.prior_ratio.copy()
    for j in range(J):
        for k in fg.vn_neighbors[j]:
            totals[:, j, :] += state.l_u[:, state.edge_of[(j, k)], :]
    return totals


def _softmax(l_totals: np.ndarray) -> np.ndarray:
    ex = np.exp(l_totals - l_totals.max(axis=-1, keepdims=True))
    return ex / ex.sum(axis=-1, keepdims=True)


def _freeze_confident_log(
    state: LogMessageState, fg: FactorGraph, alpha: float, t: int
) -> None:
    probs = _softmax(finalize_log(state, fg))
    newly = (probs.max(axis=-1) > alpha) & ~state.frozen
    if not newly.any():
        return
    sym = probs.argmax(axis=-1)
    state.decided[newly] = sym[newly]
    state.decided_at[newly] = t
    state.frozen |= newly
    M = state.prior_ratio.shape[-1]
    onehot = np.where(np.arange(M) == sym[..., None], 0.0, NEG_HUGE)
    for j in range(state.prior_ratio.shape[1]):
        rows = newly[:, j]
        if not rows.any():
            continue
        for k in fg.vn_neighbors[j]:
            state.l_v[rows, state.edge_of[(j, k)], :] = onehot[rows, j, :]


def detect_log(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None = None,
    iters: int = DEFAULT_ITERATIONS,
    variant: str = "exact",
    early_alpha: float | None = None,
    fg: FactorGraph | None = None,
) -> LogDetectionResult:
    """Flooding-schedule log-domain detection.

    early_alpha is an extension switch: when set, layers freeze once their
    tentative exp-normalized posterior exceeds the threshold, mirroring the
    probability-domain early-decision detector.  It defaults to off.
    """
    if iters < 1:
        raise ValueError(f"iteration count must be >= 1, got {iters}")
    if early_alpha is not None and not 0.0 < early_alpha <= 1.0:
        raise ValueError(f"early_alpha must be in (0, 1], got {early_alpha}")
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    if single:
        y = y[None, :]
        gains = np.asarray(gains, dtype=complex)[None, ...]
    else:
        gains = np.asarray(gains, dtype=complex)
    B = y.shape[0]
    if fg is None:
        fg = derive_factor_graph(cb)

    state = new_log_state(cb, fg, B, priors, variant)
    base_tables = [-r2 / n0 for r2 in residual_sq_tables(y, gains, cb, fg)]

    terms_total = 0
    corrections_total = 0
    for t in range(1, iters + 1):
        for j, k in fg.edges:
            vn_update_log(state, fg, j, k)
        for j, k in fg.edges:
            _, terms, corr = fn_update_log(state, fg, k, j, base_tables)
            terms_total += terms
            corrections_total += corr
        if early_alpha is not None:
            _freeze_confident_log(state, fg, early_alpha, t)

    totals = finalize_log(state, fg)
    marginals = _softmax(totals)
    hard = totals.argmax(axis=-1)
    stats = DetectorStats(
        fn_term_evaluations=terms_total,
        exp_op_count=corrections_total,
        iterations=iters,
    )
    if single:
        return LogDetectionResult(totals[0], marginals[0], hard[0], state.decided_at[0], stats)
    return LogDetectionResult(totals, marginals, hard, state.decided_at, stats)


def bit_llrs(
    l_totals: np.ndarray,
    cb: Codebook,
    variant: str = "exact",
    clip: float = LLR_CLIP,
) -> np.ndarray:
    """Demap per-layer totals to per-bit LLRs.

    l_totals has shape (..., M); the result (..., D) holds
    lambda_d = logsum over labels with bit d = 0 minus logsum over labels
    with bit d = 1, bits read most significant first, positive favoring
    bit 0.  Values are clipped to +-clip for downstream stages.
    """
    l = np.asarray(l_totals, dtype=float)
    M, D = cb.M, cb.D
    if l.shape[-1] != M:
        raise ValueError(f"expected trailing axis {M}, got {l.shape[-1]}")
    out = np.empty(l.shape[:-1] + (D,))
    labels = np.arange(M)
    for d in range(D):
        bit = (labels >> (D - 1 - d)) & 1
        set0 = np.nonzero(bit == 0)[0]
        set1 = np.nonzero(bit == 1)[0]
        acc0 = l[..., set0[0]]
        for m in set0[1:]:
            acc0 = maxstar(acc0, l[..., m], variant)
        acc1 = l[..., set1[0]]
        for m in set1[1:]:
            acc1 = maxstar(acc1, l[..., m], variant)
        out[..., d] = acc0 - acc1
    return np.clip(out, -clip, clip)
