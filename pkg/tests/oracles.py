"""Independent reference implementations for pinning expected values.

Everything here trades speed for transparency: plain Python loops,
itertools enumeration, and classical quadrature.  Nothing below shares
array plumbing with the package, so agreement is meaningful evidence.
"""

import itertools
import math

import numpy as np


def logsumexp_direct(values):
    """log(sum(exp(v))) via explicit max-shifted scalar summation."""
    vs = [float(v) for v in values]
    m = max(vs)
    return m + math.log(sum(math.exp(v - m) for v in vs))


def enumerate_marginals(y, gains, n0, symbols, priors=None):
    """Exact per-layer posteriors by scalar enumeration of all codeword tuples.

    symbols is the (J, M, K) complex array of a codebook; y is one frame of
    K complex samples; gains is (K, J).  Returns a (J, M) marginal array and
    the jointly most likely tuple of codeword indices.
    """
    symbols = np.asarray(symbols)
    J, M, K = symbols.shape
    if priors is None:
        priors = [[1.0 / M] * M for _ in range(J)]
    logpost = {}
    for combo in itertools.product(range(M), repeat=J):
        ll = 0.0
        for k in range(K):
            s = 0j
            for j in range(J):
                s += complex(gains[k][j]) * complex(symbols[j, combo[j], k])
            ll -= abs(complex(y[k]) - s) ** 2 / n0
        for j in range(J):
            ll += math.log(priors[j][combo[j]]) if priors[j][combo[j]] > 0 else -1e300
        logpost[combo] = ll

    marginals = np.zeros((J, M))
    for j in range(J):
        for m in range(M):
            sel = [lp for combo, lp in logpost.items() if combo[j] == m]
            marginals[j, m] = math.exp(logsumexp_direct(sel) if sel else -1e300)
    marginals /= marginals.sum(axis=1, keepdims=True)
    best = max(logpost, key=logpost.get)
    return marginals, best


def fn_message_direct(y_k, h_row, n0, target_symbols, other_tables, other_messages):
    """Resource-to-layer message by explicit Cartesian summation.

    target_symbols: (M,) complex values of the target layer at this resource.
    other_tables: list of (M,) complex value arrays, one per interferer.
    other_messages: list of (M,) probability vectors aligned with the tables.
    h_row: complex gains, target first then interferers in table order.
    Returns the unnormalized (M,) message.
    """
    M = len(target_symbols)
    out = []
    for m in range(M):
        total = 0.0
        for combo in itertools.product(range(M), repeat=len(other_tables)):
            s = h_row[0] * complex(target_symbols[m])
            w = 1.0
            for i, mi in enumerate(combo):
                s += h_row[1 + i] * complex(other_tables[i][mi])
                w *= float(other_messages[i][mi])
            total += w * math.exp(-abs(complex(y_k) - s) ** 2 / n0) / (math.pi * n0)
        out.append(total)
    return np.array(out)


def bpsk_awgn_capacity(esn0_db, nodes=151):
    """BI-AWGN capacity in bits via Gauss-Hermite quadrature.

    Antipodal unit-energy signaling on a complex AWGN channel with total
    noise variance N0: the matched-filter LLR is Gaussian with mean 4/N0
    and variance 8/N0, and C = 1 - E[log2(1 + exp(-L))].
    """
    n0 = 10.0 ** (-esn0_db / 10.0)
    mean = 4.0 / n0
    sigma = math.sqrt(8.0 / n0)
    t, w = np.polynomial.hermite.hermgauss(nodes)
    l_vals = mean + sigma * math.sqrt(2.0) * t
    return float(1.0 - np.sum(w * np.log2(1.0 + np.exp(-l_vals))) / math.sqrt(math.pi))


def random_sparse_system(rng, max_layers=3, max_resources=4, M=4):
    """Random small codebook for topology sweeps: (symbols, supports).

    Each layer gets a random support of size 1 or 2 and distinct random
    complex codewords normalized to unit average energy.
    """
    J = int(rng.integers(1, max_layers + 1))
    K = int(rng.integers(2, max_resources + 1))
    symbols = np.zeros((J, M, K), dtype=complex)
    supports = []
    for j in range(J):
        n_j = int(rng.integers(1, min(2, K) + 1))
        support = sorted(rng.choice(K, size=n_j, replace=False).tolist())
        supports.append(tuple(support))
        while True:
            vals = rng.standard_normal((M, n_j)) + 1j * rng.standard_normal((M, n_j))
            if all(
                np.abs(vals[a] - vals[b]).max() > 1e-6
                for a in range(M)
                for b in range(a + 1, M)
            ):
                break
        vals /= np.sqrt(np.mean(np.sum(np.abs(vals) ** 2, axis=1)))
        for i, k in enumerate(support):
            symbols[j, :, k] = vals[:, i]
    return symbols, supports


def is_forest(supports, K):
    """True if the bipartite layer/resource graph has no cycle."""
    parent = list(range(len(supports) + K))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j, support in enumerate(supports):
        for k in support:
            ra, rb = find(j), find(len(supports) + k)
            if ra == rb:
                return False
            parent[ra] = rb
    return True


def graph_depth(supports, K):
    """Longest shortest-path distance in the bipartite graph (its diameter)."""
    J = len(supports)
    adj = {("v", j): [("f", k) for k in supports[j]] for j in range(J)}
    for k in range(K):
        adj[("f", k)] = [("v", j) for j in range(J) if k in supports[j]]
    best = 0
    for start in adj:
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for node in frontier:
                for peer in adj[node]:
                    if peer not in dist:
                        dist[peer] = dist[node] + 1
                        nxt.append(peer)
            frontier = nxt
        best = max(best, max(dist.values()))
    return best
