import numpy as np
import pytest

from nrlab.ldpc import (ERASED, ParameterError, bec, bsc, build_regular_graph, encode,
                        extract_info, gf2_rref, graph_from_checks, load_graph, save_graph,
                        to_systematic, transmit, trit_word)
from nrlab.rng import derive_seed, trial_rng


def test_small_graph_shape():
    g = build_regular_graph(100, 5, 100, seed=1)
    assert g.m == 5
    assert g.check_adj.shape == (5, 100)
    g.check_invariants()


@pytest.mark.parametrize("n,dv,dc", [(7, 3, 4), (10, 1, 5), (10, 4, 4), (0, 2, 4)])
def test_bad_parameters(n, dv, dc):
    with pytest.raises(ParameterError):
        build_regular_graph(n, dv, dc)


def test_large_graph_invariants():
    g = build_regular_graph(100_000, 5, 100, seed=3)
    g.check_invariants()
    assert np.array_equal(np.bincount(g.var_adj.reshape(-1), minlength=g.m),
                          np.full(g.m, 100))
    assert np.array_equal(np.bincount(g.check_adj.reshape(-1), minlength=g.n),
                          np.full(g.n, 5))


def test_graph_is_deterministic_in_seed():
    a = build_regular_graph(2000, 5, 100, seed=7)
    b = build_regular_graph(2000, 5, 100, seed=7)
    c = build_regular_graph(2000, 5, 100, seed=8)
    assert np.array_equal(a.var_adj, b.var_adj)
    assert not np.array_equal(a.var_adj, c.var_adj)


def test_graph_save_load(tmp_path):
    g = build_regular_graph(400, 4, 20, seed=2)
    save_graph(g, tmp_path / "g.txt")
    h = load_graph(tmp_path / "g.txt")
    assert np.array_equal(g.check_adj, h.check_adj)
    assert np.array_equal(g.var_adj, h.var_adj)
    assert (h.n, h.m, h.dv, h.dc, h.seed) == (400, 80, 4, 20, 2)


def _single_check():
    return graph_from_checks([[0, 1, 2], [0, 1, 2]], 3)


def test_single_check_code():
    # two copies of the same check keep the graph regular (dv=2, dc=3), rank 1
    code = to_systematic(_single_check())
    assert code.k == 2 and code.rank == 1
    for a in (0, 1):
        for b in (0, 1):
            w = encode(code, [a, b])
            assert w[code.info_positions].tolist() == [a, b]
            assert w.sum() % 2 == 0


def test_gf2_rref_rank():
    H = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    rows, piv = gf2_rref(H)
    assert rows.shape[0] == 2 and piv.tolist() == [0, 1]


@pytest.fixture(scope="module")
def code2000():
    return to_systematic(build_regular_graph(2000, 5, 100, seed=0))


def test_zero_info_encodes_to_zero(code2000):
    assert not encode(code2000, np.zeros(code2000.k, np.uint8)).any()


def test_encode_has_zero_syndrome(code2000, rng):
    for _ in range(5):
        info = rng.integers(0, 2, code2000.k, dtype=np.uint8)
        w = encode(code2000, info)
        assert not code2000.graph.syndrome(w).any()
        assert np.array_equal(extract_info(code2000, w), info)


def test_single_flip_breaks_a_check(code2000, rng):
    w = encode(code2000, rng.integers(0, 2, code2000.k, dtype=np.uint8))
    for pos in rng.choice(code2000.n, 20, replace=False):
        x = w.copy()
        x[pos] ^= 1
        assert code2000.graph.syndrome(x).any()


def test_encode_is_linear(code2000, rng):
    a = rng.integers(0, 2, code2000.k, dtype=np.uint8)
    b = rng.integers(0, 2, code2000.k, dtype=np.uint8)
    assert np.array_equal(encode(code2000, a ^ b), encode(code2000, a) ^ encode(code2000, b))


def test_encode_length_error(code2000):
    with pytest.raises(ValueError):
        encode(code2000, np.zeros(code2000.k - 1, np.uint8))


def test_transmit_limits(rng):
    w = rng.integers(0, 2, 1000, dtype=np.uint8)
    assert np.array_equal(transmit(w, bec(0.0), 1), w)
    assert np.all(transmit(w, bec(1.0), 1) == ERASED)
    assert np.array_equal(transmit(w, bsc(0.0), 1), w)


def test_transmit_erasure_statistics():
    n = 10 ** 6
    out = transmit(np.zeros(n, np.uint8), bec(0.2), seed=5)
    frac = np.count_nonzero(out == ERASED) / n
    assert abs(frac - 0.2) < 3 * np.sqrt(0.2 * 0.8 / n)
    flips = transmit(np.zeros(n, np.uint8), bsc(0.01), seed=5)
    assert abs(flips.mean() - 0.01) < 3 * np.sqrt(0.01 * 0.99 / n)


def test_transmit_reproducible():
    w = np.zeros(5000, np.uint8)
    assert np.array_equal(transmit(w, bec(0.3), 9), transmit(w, bec(0.3), 9))


@pytest.mark.parametrize("kind,rate", [("bec", 1.5), ("bsc", 0.6), ("awgn", 0.1)])
def test_bad_channel(kind, rate):
    from nrlab.ldpc import ChannelSpec
    with pytest.raises(ParameterError):
        ChannelSpec(kind, rate)


def test_trit_word():
    assert trit_word([0, 1, 2]).tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        trit_word([0, 3])


def test_derive_seed_contract():
    assert derive_seed(1, "a", 0) == derive_seed(1, "a", 0)
    seeds = {derive_seed(1, "a", t) for t in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(1, "a", 0) != derive_seed(2, "a", 0)
    assert derive_seed(1, "a", 0) != derive_seed(1, "b", 0)
    assert 0 <= derive_seed(2 ** 64 - 1, "x", 2 ** 64 - 1) < 2 ** 64
    assert trial_rng(3, "s", 4).random() == trial_rng(3, "s", 4).random()
