"""Probability-domain sum-product detection on the layer/resource graph.

Implements the flooding-schedule message-passing detector, an early-decision
variant that freezes confident layers mid-run, and an exhaustive per-layer
MAP oracle used for validation.

Every entry point accepts either a single frame (y of shape (K,)) or a batch
(y of shape (B, K)); message tables carry a leading batch axis internally and
results are squeezed back for single-frame calls.

Operation counters report the arithmetic of the per-frame update equations:
``fn_term_evaluations`` counts the additive terms a resource-node update
enumerates (M per target codeword times M per undecided interferer), summed
over all performed updates, and ``exp_op_count`` counts scalar Gaussian
likelihood evaluations.  The vectorized implementation shares likelihood
tables across iterations and may compute masked batch lanes, so wall-clock
cost is not proportional to the counters; the counters exist to compare
algorithms, not array layouts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codebook import Codebook, FactorGraph, derive_factor_graph

MESSAGE_FLOOR = 1e-300  # guards 0/0 in normalization after likelihood underflow
DEFAULT_ITERATIONS = 6
BRUTEFORCE_LIMIT = 2**20


@dataclass
class MessageState:
    """Mutable per-frame message tables for one detector run.

    v and u have shape (B, E, M) where E is the edge count: v[b, e] is the
    layer-to-resource message along edge e, u[b, e] the reverse message.
    priors has shape (B, J, M).  frozen/decided/decided_at track early
    decisions and stay all-False/-1 for the standard detector.
    """

    v: np.ndarray
    u: np.ndarray
    priors: np.ndarray
    frozen: np.ndarray
    decided: np.ndarray
    decided_at: np.ndarray
    edge_of: dict[tuple[int, int], int]


@dataclass(frozen=True)
class DetectorStats:
    fn_term_evaluations: int
    exp_op_count: int
    iterations: int


@dataclass(frozen=True)
class DetectionResult:
    """Posterior summary for a detector run.

    marginals: (..., J, M) per-layer posteriors, rows sum to 1.
    hard_symbols: (..., J) argmax codeword indices (lowest index on ties).
    decided_at: (..., J) 1-based iteration of early decision, -1 if never.
    stats: operation counts aggregated over the whole batch.
    """

    marginals: np.ndarray
    hard_symbols: np.ndarray
    decided_at: np.ndarray
    stats: DetectorStats


def new_message_state(
    cb: Codebook,
    fg: FactorGraph,
    batch: int,
    priors: np.ndarray | None = None,
) -> MessageState:
    """Fresh state: u literally all-ones, v equal to the priors."""
    E = len(fg.edges)
    p = _broadcast_priors(priors, batch, cb.J, cb.M)
    v = np.empty((batch, E, cb.M))
    for e, (j, _k) in enumerate(fg.edges):
        v[:, e, :] = p[:, j, :]
    return MessageState(
        v=v,
        u=np.ones((batch, E, cb.M)),
        priors=p,
        frozen=np.zeros((batch, cb.J), dtype=bool),
        decided=np.full((batch, cb.J), -1, dtype=np.int64),
        decided_at=np.full((batch, cb.J), -1, dtype=np.int64),
        edge_of=fg.edge_index(),
    )


def _broadcast_priors(priors, batch: int, J: int, M: int) -> np.ndarray:
    if priors is None:
        return np.full((batch, J, M), 1.0 / M)
    p = np.asarray(priors, dtype=float)
    if np.any(p < 0):
        raise ValueError("priors must be nonnegative")
    if p.shape == (J, M):
        return np.broadcast_to(p, (batch, J, M)).copy()
    if p.shape == (batch, J, M):
        return p.copy()
    raise ValueError(f"priors shape {p.shape} incompatible with ({batch}, {J}, {M})")


def residual_sq_tables(
    y: np.ndarray, gains: np.ndarray, cb: Codebook, fg: FactorGraph
) -> list[np.ndarray]:
    """Squared distance grids, one per resource.

    Entry k has shape (B,) + (M,)*d_f(k); axis i of the grid indexes the
    codeword of fn_neighbors[k][i].  Value: |y_k - sum_i h_k,ji x_ji,mi[k]|^2.
    """
    B = y.shape[0]
    tables = []
    for k in range(cb.K):
        js = fg.fn_neighbors[k]
        d = len(js)
        s = np.zeros((B,) + (cb.M,) * d, dtype=complex)
        for i, j in enumerate(js):
            axes = [1] * d
            axes[i] = cb.M
            s = s + gains[:, k, j].reshape((B,) + (1,) * d) * cb.symbols[j, :, k].reshape(
                (1,) + tuple(axes)
            )
        resid = y[:, k].reshape((B,) + (1,) * d) - s
        tables.append(resid.real**2 + resid.imag**2)
    return tables


def likelihood_tables(
    y: np.ndarray, gains: np.ndarray, n0: float, cb: Codebook, fg: FactorGraph
) -> list[np.ndarray]:
    """Gaussian likelihood grids exp(-d^2/N0)/(pi N0), one per resource."""
    return [
        np.exp(-r2 / n0) / (np.pi * n0)
        for r2 in residual_sq_tables(y, gains, cb, fg)
    ]


def vn_update(state: MessageState, fg: FactorGraph, j: int, k: int) -> np.ndarray:
    """Recompute the layer-to-resource message V_{j->k}.

    V is the prior times the product of resource-to-layer messages from all
    neighbors except k, floored and normalized over codewords.  Frozen batch
    lanes keep their one-hot message.  Returns the stored (B, M) table.
    """
    e = state.edge_of[(j, k)]
    prod = state.priors[:, j, :].copy()
    for l in fg.vn_neighbors[j]:
        if l == k:
            continue
        prod *= state.u[:, state.edge_of[(j, l)], :]
    prod = np.maximum(prod, MESSAGE_FLOOR)
    prod /= prod.sum(axis=-1, keepdims=True)
    live = ~state.frozen[:, j]
    state.v[live, e, :] = prod[live]
    return state.v[:, e, :]


def fn_update(
    state: MessageState,
    fg: FactorGraph,
    k: int,
    j: int,
    likelihoods: list[np.ndarray],
) -> tuple[np.ndarray, int]:
    """Recompute the resource-to-layer message U_{k->j}.

    Marginalizes the resource's likelihood grid against the current
    layer-to-resource messages of every other neighbor; the result is left
    unnormalized (the VN side normalizes).  Lanes whose target layer is
    frozen are skipped and keep the stale message.  Returns the stored
    (B, M) table and the number of terms the update evaluates per the
    counting model in the module docstring.
    """
    e = state.edge_of[(j, k)]
    js = fg.fn_neighbors[k]
    d = len(js)
    p = js.index(j)
    B, M = state.v.shape[0], state.v.shape[-1]

    acc = likelihoods[k]
    unfrozen_others = np.zeros(B, dtype=np.int64)
    for i, other in enumerate(js):
        if i == p:
            continue
        axes = [1] * d
        axes[i] = M
        acc = acc * state.v[:, state.edge_of[(other, k)], :].reshape((B,) + tuple(axes))
        unfrozen_others += ~state.frozen[:, other]
    sum_axes = tuple(a + 1 for a in range(d) if a != p)
    new_u = acc.sum(axis=sum_axes) if sum_axes else acc

    live = ~state.frozen[:, j]
    state.u[live, e, :] = new_u[live]
    terms = int((live * M * M**unfrozen_others).sum())
    return state.u[:, e, :], terms


def _layer_totals(state: MessageState, fg: FactorGraph) -> np.ndarray:
    """Full (non-extrinsic) per-layer posteriors from the current u tables."""
    B, J, M = state.priors.shape
    totals = state.priors.copy()
    for j in range(J):
        for k in fg.vn_neighbors[j]:
            totals[:, j, :] *= state.u[:, state.edge_of[(j, k)], :]
    totals = np.maximum(totals, MESSAGE_FLOOR)
    totals /= totals.sum(axis=-1, keepdims=True)
    return totals


def _freeze_confident(state: MessageState, fg: FactorGraph, alpha: float, t: int) -> None:
    """Irrevocably decide layers whose full posterior mass exceeds alpha.

    A frozen layer's outgoing messages become one-hot at the argmax
    (lowest index on ties) and are never updated again.  Its incoming
    messages also stop updating, so the reported marginal stays the soft
    posterior the layer had when it froze rather than collapsing to a
    certainty the run never established.
    """
    totals = _layer_totals(state, fg)
    newly = (totals.max(axis=-1) > alpha) & ~state.frozen
    if not newly.any():
        return
    sym = totals.argmax(axis=-1)
    state.decided[newly] = sym[newly]
    state.frozen |= newly
    onehot = np.eye(state.priors.shape[-1])[sym]
    for j in range(state.priors.shape[1]):
        rows = newly[:, j]
        if not rows.any():
            continue
        for k in fg.vn_neighbors[j]:
            state.v[rows, state.edge_of[(j, k)], :] = onehot[rows, j, :]
    state.decided_at[newly] = t


def _run_mpa(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None,
    iters: int,
    alpha: float | None,
    fg: FactorGraph | None,
) -> DetectionResult:
    if iters < 1:
        raise ValueError(f"iteration count must be >= 1, got {iters}")
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

    state = new_message_state(cb, fg, B, priors)
    tables = likelihood_tables(y, gains, n0, cb, fg)
    exp_ops = B * sum(t[0].size for t in tables)

    terms_total = 0
    for t in range(1, iters + 1):
        for j, k in fg.edges:
            vn_update(state, fg, j, k)
        for j, k in fg.edges:
            _, terms = fn_update(state, fg, k, j, tables)
            terms_total += terms
        if alpha is not None:
            _freeze_confident(state, fg, alpha, t)

    marginals = _layer_totals(state, fg)
    hard = marginals.argmax(axis=-1)
    decided_at = state.decided_at
    stats = DetectorStats(
        fn_term_evaluations=terms_total, exp_op_count=exp_ops, iterations=iters
    )
    if single:
        return DetectionResult(marginals[0], hard[0], decided_at[0], stats)
    return DetectionResult(marginals, hard, decided_at, stats)


def detect_mpa(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None = None,
    iters: int = DEFAULT_ITERATIONS,
    fg: FactorGraph | None = None,
) -> DetectionResult:
    """Sum-product detection with a flooding schedule.

    Each iteration updates every layer-to-resource message from the previous
    iteration's reverse messages, then every reverse message; marginals come
    from the final reverse tables.  y is (K,) or (B, K), gains (..., K, J).
    """
    return _run_mpa(y, gains, n0, cb, priors, iters, None, fg)


def detect_mpa_early(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None = None,
    iters: int = DEFAULT_ITERATIONS,
    alpha: float = 0.7,
    fg: FactorGraph | None = None,
) -> DetectionResult:
    """Sum-product detection that freezes layers once they look certain.

    After each iteration's resource-node phase the full per-layer posterior
    is formed; any undecided layer whose peak exceeds alpha is decided on
    the spot.  Decisions are irrevocable: the layer's messages turn one-hot,
    messages toward it stop updating, and subsequent resource-node updates
    effectively marginalize over fewer interferer combinations (counted by
    fn_term_evaluations).  The reported marginal for a frozen layer is its
    posterior at the freeze iteration, so downstream soft decoding still
    sees calibrated beliefs.  alpha > 0.5 guarantees a unique peak; the
    lowest index wins ties at exactly 0.5.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return _run_mpa(y, gains, n0, cb, priors, iters, alpha, fg)


def joint_log_posterior(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None = None,
) -> np.ndarray:
    """Unnormalized joint log posterior over all M^J codeword combinations.

    Returns shape (B,) + (M,)*J; axis j+1 indexes layer j's codeword.
    Inputs must carry an explicit batch axis.  Guarded to M^J <= 2^20.
    """
    if cb.M**cb.J > BRUTEFORCE_LIMIT:
        raise ValueError(f"M^J = {cb.M**cb.J} exceeds enumeration limit {BRUTEFORCE_LIMIT}")
    B = y.shape[0]
    p = _broadcast_priors(priors, B, cb.J, cb.M)

    grid = (cb.M,) * cb.J
    loglik = np.zeros((B,) + grid)
    for k in range(cb.K):
        s = np.zeros((B,) + grid, dtype=complex)
        for j in range(cb.J):
            axes = [1] * cb.J
            axes[j] = cb.M
            s = s + gains[:, k, j].reshape((B,) + (1,) * cb.J) * cb.symbols[j, :, k].reshape(
                (1,) + tuple(axes)
            )
        resid = y[:, k].reshape((B,) + (1,) * cb.J) - s
        loglik -= (resid.real**2 + resid.imag**2) / n0
    with np.errstate(divide="ignore"):
        for j in range(cb.J):
            axes = [1] * cb.J
            axes[j] = cb.M
            loglik += np.maximum(np.log(p[:, j, :]), -1e300).reshape((B, *axes))
    return loglik


def map_detect_bruteforce(
    y: np.ndarray,
    gains: np.ndarray,
    n0: float,
    cb: Codebook,
    priors: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact posteriors by enumerating all M^J layer-symbol combinations.

    Returns (marginals, map_symbols): per-layer exact marginal posteriors of
    shape (..., J, M) and the jointly most likely codeword indices of shape
    (..., J).  Guarded to M^J <= 2^20 grid points.
    """
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    if single:
        y = y[None, :]
        gains = np.asarray(gains, dtype=complex)[None, ...]
    else:
        gains = np.asarray(gains, dtype=complex)
    B = y.shape[0]
    grid = (cb.M,) * cb.J
    loglik = joint_log_posterior(y, gains, n0, cb, priors)

    marginals = np.empty((B, cb.J, cb.M))
    for j in range(cb.J):
        other = tuple(a + 1 for a in range(cb.J) if a != j)
        lm = logsumexp(loglik, axis=other)
        lm -= logsumexp(lm, axis=-1, keepdims=True)
        marginals[:, j, :] = np.exp(lm)

    flat_map = loglik.reshape(B, -1).argmax(axis=-1)
    map_symbols = np.stack(np.unravel_index(flat_map, grid), axis=-1)
    if single:
        return marginals[0], map_symbols[0]
    return marginals, map_symbols
