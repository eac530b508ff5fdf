import numpy as np
import pytest

from scmasim.channel import n0_from_ebn0, sample_channel, transmit
from scmasim.codebook import Codebook, derive_factor_graph
from scmasim.mpa import (
    MESSAGE_FLOOR,
    detect_mpa,
    detect_mpa_early,
    fn_update,
    joint_log_posterior,
    likelihood_tables,
    map_detect_bruteforce,
    new_message_state,
    vn_update,
)

from conftest import random_frames
from oracles import enumerate_marginals, fn_message_direct, graph_depth, random_sparse_system


def small_instance(rng, cb, n0=0.5, model="rayleigh_iid"):
    sym = rng.integers(0, cb.M, size=cb.J)
    cw = cb.symbols[np.arange(cb.J), sym]
    real = sample_channel(model, cb, n0, rng)
    y = transmit(cw, real, rng)
    return sym, real.gains, y


# ---------------------------------------------------------------- messages


def test_vn_update_uniform_stays_uniform(cb, fg):
    state = new_message_state(cb, fg, batch=1)
    out = vn_update(state, fg, *fg.edges[0])
    assert np.allclose(out, 1.0 / cb.M)


def test_vn_update_extrinsic_exclusion(cb, fg, rng):
    # d_v = 2: the message toward k ignores U on the (j, k) edge entirely
    j, k = fg.edges[0]
    state = new_message_state(cb, fg, batch=1)
    other = [l for l in fg.vn_neighbors[j] if l != k][0]
    msg = np.array([0.7, 0.1, 0.1, 0.1])
    state.u[0, state.edge_of[(j, other)], :] = msg
    state.u[0, state.edge_of[(j, k)], :] = rng.random(cb.M)  # must not matter
    out = vn_update(state, fg, j, k).copy()
    assert np.allclose(out[0], msg)
    state.u[0, state.edge_of[(j, k)], :] = rng.random(cb.M)
    assert np.allclose(vn_update(state, fg, j, k), out)


def test_vn_update_normalizes(cb, fg, rng):
    state = new_message_state(cb, fg, batch=3)
    state.u[:] = rng.random(state.u.shape) * 5
    for j, k in fg.edges:
        out = vn_update(state, fg, j, k)
        assert np.allclose(out.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(out >= 0)


def test_vn_update_survives_underflow(cb, fg):
    state = new_message_state(cb, fg, batch=1)
    state.u[:] = 0.0
    out = vn_update(state, fg, *fg.edges[0])
    assert np.allclose(out.sum(axis=-1), 1.0)
    assert np.all(out >= MESSAGE_FLOOR)


def test_fn_update_no_interferers_is_likelihood():
    # single layer on one resource: empty Cartesian product
    symbols = np.array([[1.0 + 0j], [-1.0 + 0j], [1j], [-1j]]).reshape(1, 4, 1)
    cb1 = Codebook(J=1, K=1, M=4, N=1, symbols=symbols)
    with pytest.warns(UserWarning):
        g1 = derive_factor_graph(cb1)
    y = np.array([[0.3 - 0.2j]])
    gains = np.ones((1, 1, 1), dtype=complex)
    n0 = 0.7
    state = new_message_state(cb1, g1, batch=1)
    tables = likelihood_tables(y, gains, n0, cb1, g1)
    out, terms = fn_update(state, g1, 0, 0, tables)
    expected = np.exp(-np.abs(y[0, 0] - symbols[0, :, 0]) ** 2 / n0) / (np.pi * n0)
    assert np.allclose(out[0], expected, rtol=1e-12)
    assert terms == cb1.M


def test_fn_update_onehot_interferers_single_term(cb, fg, rng):
    sym, gains, y = small_instance(rng, cb, model="awgn")
    n0 = 0.5
    state = new_message_state(cb, fg, batch=1)
    k = 0
    js = fg.fn_neighbors[k]
    target = js[0]
    pick = {j: int(rng.integers(cb.M)) for j in js[1:]}
    for j in js[1:]:
        onehot = np.zeros(cb.M)
        onehot[pick[j]] = 1.0
        state.v[0, state.edge_of[(j, k)], :] = onehot
    tables = likelihood_tables(y[None, :], gains[None, ...], n0, cb, fg)
    out, _ = fn_update(state, fg, k, target, tables)
    interference = sum(gains[k, j] * cb.symbols[j, pick[j], k] for j in js[1:])
    expected = (
        np.exp(-np.abs(y[k] - gains[k, target] * cb.symbols[target, :, k] - interference) ** 2 / n0)
        / (np.pi * n0)
    )
    assert np.allclose(out[0], expected, rtol=1e-10)


def test_fn_update_matches_cartesian_oracle(cb, fg, rng):
    sym, gains, y = small_instance(rng, cb)
    n0 = 0.8
    state = new_message_state(cb, fg, batch=1)
    state.v[0] = rng.random(state.v[0].shape)
    state.v[0] /= state.v[0].sum(axis=-1, keepdims=True)
    tables = likelihood_tables(y[None, :], gains[None, ...], n0, cb, fg)
    for k in range(cb.K):
        js = fg.fn_neighbors[k]
        for j in js:
            others = [i for i in js if i != j]
            out, terms = fn_update(state, fg, k, j, tables)
            direct = fn_message_direct(
                y[k],
                [gains[k, j]] + [gains[k, i] for i in others],
                n0,
                cb.symbols[j, :, k],
                [cb.symbols[i, :, k] for i in others],
                [state.v[0, state.edge_of[(i, k)], :] for i in others],
            )
            assert np.allclose(out[0], direct, rtol=1e-12)
            assert terms == cb.M ** len(js)


# ---------------------------------------------------------------- detection


def test_disconnected_pair_equals_single_user_map(rng):
    layers = np.zeros((2, 4, 4), dtype=complex)
    pts = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
    layers[0, :, 0] = pts
    layers[1, :, 2] = pts * np.exp(1j * 0.4)
    cb2 = Codebook(J=2, K=4, M=4, N=1, symbols=layers)
    with pytest.warns(UserWarning):
        g2 = derive_factor_graph(cb2)
    sym = rng.integers(0, 4, size=2)
    real = sample_channel("awgn", cb2, 0.6)
    y = transmit(layers[np.arange(2), sym], real, rng)
    res = detect_mpa(y, real.gains, 0.6, cb2, iters=1, fg=g2)
    oracle, _ = enumerate_marginals(y, real.gains, 0.6, layers)
    assert np.allclose(res.marginals, oracle, atol=1e-9)


@pytest.mark.filterwarnings("ignore:configuration is not overloaded")
def test_tree_marginals_match_bruteforce(rng):
    checked = 0
    while checked < 25:
        symbols, supports = random_sparse_system(rng)
        from oracles import is_forest

        if not is_forest(supports, symbols.shape[2]):
            continue
        J, M, K = symbols.shape[0], symbols.shape[1], symbols.shape[2]
        cbx = Codebook(J=J, K=K, M=M, N=1, symbols=symbols)
        gx = derive_factor_graph(cbx)
        sym = rng.integers(0, M, size=J)
        real = sample_channel("rayleigh_iid", cbx, 0.5, rng)
        y = transmit(symbols[np.arange(J), sym], real, rng)
        depth = graph_depth(supports, K)
        res = detect_mpa(y, real.gains, 0.5, cbx, iters=max(depth, 1), fg=gx)
        ref, _ = map_detect_bruteforce(y, real.gains, 0.5, cbx)
        assert np.abs(res.marginals - ref).max() < 1e-9
        checked += 1


def test_noiseless_recovery(cb, fg, rng):
    sym = rng.integers(0, cb.M, size=(50, cb.J))
    cw = cb.symbols[np.arange(cb.J)[None, :], sym]
    real = sample_channel("awgn", cb, 0.01, batch_shape=(50,))
    y = transmit(cw, real, add_noise=False)
    res = detect_mpa(y, real.gains, 0.01, cb, fg=fg)
    assert np.array_equal(res.hard_symbols, sym)


def test_batched_equals_frame_loop(cb, fg, rng):
    n0 = n0_from_ebn0(6.0, cb)
    sym, gains, y = random_frames(rng, cb, 17, n0)
    batch = detect_mpa(y, gains, n0, cb, fg=fg)
    for b in range(17):
        single = detect_mpa(y[b], gains[b], n0, cb, fg=fg)
        assert np.allclose(single.marginals, batch.marginals[b], atol=1e-12)
        assert np.array_equal(single.hard_symbols, batch.hard_symbols[b])


def test_marginals_shape_and_normalization(cb, fg, rng):
    n0 = 0.4
    _, gains, y = random_frames(rng, cb, 5, n0)
    res = detect_mpa(y, gains, n0, cb, fg=fg)
    assert res.marginals.shape == (5, cb.J, cb.M)
    assert np.allclose(res.marginals.sum(axis=-1), 1.0, atol=1e-12)
    assert np.array_equal(res.hard_symbols, res.marginals.argmax(axis=-1))
    assert np.all(res.decided_at == -1)


def test_nonuniform_priors_shift_posterior(cb, fg, rng):
    n0 = 2.0
    _, gains, y = random_frames(rng, cb, 1, n0)
    priors = np.full((cb.J, cb.M), 0.25)
    priors[0] = (0.97, 0.01, 0.01, 0.01)
    res_flat = detect_mpa(y, gains, n0, cb, fg=fg)
    res_tilt = detect_mpa(y, gains, n0, cb, priors=priors, fg=fg)
    assert res_tilt.marginals[0, 0, 0] > res_flat.marginals[0, 0, 0]


def test_relabeling_equivariance(cb, fg, rng):
    n0 = 0.5
    _, gains, y = random_frames(rng, cb, 4, n0)
    perm = np.array([3, 0, 4, 1, 5, 2])
    cbp = Codebook(J=cb.J, K=cb.K, M=cb.M, N=cb.N, symbols=cb.symbols[perm])
    res = detect_mpa(y, gains, n0, cb, fg=fg)
    resp = detect_mpa(y, gains[:, :, perm], n0, cbp)
    assert np.allclose(resp.marginals, res.marginals[:, perm, :], atol=1e-12)


def test_iterations_validation(cb, rng):
    _, gains, y = random_frames(rng, cb, 1, 0.5)
    with pytest.raises(ValueError):
        detect_mpa(y, gains, 0.5, cb, iters=0)


# ---------------------------------------------------------------- early decision


def test_early_alpha_one_matches_plain(cb, fg, rng):
    n0 = n0_from_ebn0(5.0, cb)
    _, gains, y = random_frames(rng, cb, 40, n0)
    plain = detect_mpa(y, gains, n0, cb, fg=fg)
    early = detect_mpa_early(y, gains, n0, cb, alpha=1.0, fg=fg)
    assert np.array_equal(plain.hard_symbols, early.hard_symbols)
    assert np.allclose(plain.marginals, early.marginals, atol=1e-12)
    assert np.all(early.decided_at == -1)
    assert early.stats.fn_term_evaluations == plain.stats.fn_term_evaluations


def test_early_low_noise_decides_first_iteration(cb, fg, rng):
    sym = rng.integers(0, cb.M, size=(30, cb.J))
    cw = cb.symbols[np.arange(cb.J)[None, :], sym]
    real = sample_channel("awgn", cb, 1e-3, batch_shape=(30,))
    y = transmit(cw, real, add_noise=False)
    res = detect_mpa_early(y, real.gains, 1e-3, cb, alpha=0.51, fg=fg)
    assert np.all(res.decided_at == 1)
    assert np.array_equal(res.hard_symbols, sym)
    frames = y.shape[0]
    plain_budget = frames * res.stats.iterations * sum(
        cb.M ** len(js) * len(js) for js in fg.fn_neighbors
    )
    assert res.stats.fn_term_evaluations < plain_budget
    # everything froze at t=1, so only the first iteration paid full price
    assert res.stats.fn_term_evaluations == plain_budget // res.stats.iterations


def test_early_frozen_marginals_keep_freeze_time_posterior(cb, fg, rng):
    # frozen layers report the soft belief they had when they froze: the
    # peak clears alpha, sits on the decided symbol, and the row still sums
    # to one instead of collapsing to certainty
    n0 = n0_from_ebn0(10.0, cb)
    _, gains, y = random_frames(rng, cb, 30, n0)
    res = detect_mpa_early(y, gains, n0, cb, alpha=0.7, fg=fg)
    frozen = res.decided_at >= 1
    assert frozen.any()
    peak = res.marginals.max(axis=-1)
    assert np.all(peak[frozen] > 0.7)
    assert not np.allclose(peak[frozen], 1.0)
    assert np.allclose(res.marginals.sum(axis=-1), 1.0)


def test_early_messages_toward_frozen_not_recomputed(cb, fg, rng):
    # freeze everything immediately in a noiseless run, then check that u
    # tables toward frozen layers keep their iteration-1 contents
    sym = rng.integers(0, cb.M, size=(1, cb.J))
    cw = cb.symbols[np.arange(cb.J)[None, :], sym]
    real = sample_channel("awgn", cb, 1e-3, batch_shape=(1,))
    y = transmit(cw, real, add_noise=False)
    state = new_message_state(cb, fg, 1)
    tables = likelihood_tables(y, real.gains, 1e-3, cb, fg)
    from scmasim.mpa import _freeze_confident

    snapshots = []
    for t in (1, 2, 3):
        for j, k in fg.edges:
            vn_update(state, fg, j, k)
        for j, k in fg.edges:
            fn_update(state, fg, k, j, tables)
        _freeze_confident(state, fg, 0.51, t)
        snapshots.append(state.u.copy())
    assert state.frozen.all()
    assert np.array_equal(snapshots[1], snapshots[2])


def test_early_counter_reduction_at_high_snr(cb, fg, rng):
    n0 = n0_from_ebn0(12.0, cb)
    _, gains, y = random_frames(rng, cb, 60, n0)
    plain = detect_mpa(y, gains, n0, cb, fg=fg)
    early = detect_mpa_early(y, gains, n0, cb, alpha=0.7, fg=fg)
    assert early.stats.fn_term_evaluations < plain.stats.fn_term_evaluations


def test_early_alpha_validation(cb, rng):
    _, gains, y = random_frames(rng, cb, 1, 0.5)
    with pytest.raises(ValueError):
        detect_mpa_early(y, gains, 0.5, cb, alpha=0.0)
    with pytest.raises(ValueError):
        detect_mpa_early(y, gains, 0.5, cb, alpha=1.2)


# ---------------------------------------------------------------- oracle


def test_bruteforce_single_layer_is_normalized_likelihood(rng):
    symbols = np.array([[1.0 + 0j], [-1.0 + 0j], [1j], [-1j]]).reshape(1, 4, 1) \
        / np.sqrt(1.0)
    cb1 = Codebook(J=1, K=1, M=4, N=1, symbols=symbols)
    y = np.array([0.2 + 0.1j])
    gains = np.ones((1, 1), dtype=complex)
    marg, best = map_detect_bruteforce(y, gains, 0.5, cb1)
    lik = np.exp(-np.abs(y[0] - symbols[0, :, 0]) ** 2 / 0.5)
    assert np.allclose(marg[0], lik / lik.sum(), atol=1e-12)
    assert best[0] == np.argmax(lik)


def test_bruteforce_full_system_normalized(cb, rng):
    _, gains, y = random_frames(rng, cb, 2, 0.5)
    marg, best = map_detect_bruteforce(y, gains, 0.5, cb)
    assert marg.shape == (2, cb.J, cb.M)
    assert np.allclose(marg.sum(axis=-1), 1.0, atol=1e-9)
    assert best.shape == (2, cb.J)


def test_bruteforce_matches_scalar_enumeration(cb, rng):
    _, gains, y = random_frames(rng, cb, 1, 0.9, model="rayleigh_iid")
    marg, best = map_detect_bruteforce(y[0], gains[0], 0.9, cb)
    oracle_marg, oracle_best = enumerate_marginals(y[0], gains[0], 0.9, cb.symbols)
    assert np.abs(marg - oracle_marg).max() < 1e-9
    assert tuple(best) == oracle_best


def test_bruteforce_guard():
    symbols = np.zeros((11, 4, 4), dtype=complex)
    symbols[:, :, 0] = 1.0
    big = Codebook(J=11, K=4, M=4, N=1, symbols=symbols)
    with pytest.raises(ValueError):
        joint_log_posterior(np.zeros((1, 4), dtype=complex), np.ones((1, 4, 11)), 1.0, big)
