import numpy as np
import pytest

from nrlab import data
from nrlab.lexicon import ColocationPair, Lexicon
from nrlab.ldpc import ERASED
from nrlab.lzw import FramingError, LzwDictionary, compress, indices_to_bits
from nrlab.nr_text import (CandidateSet, NrReport, WindowParams, _longest_valid, _token_sets,
                           colocation_filter, enumerate_candidates, get_model, length_filter,
                           merge_windows, nr_decode)

# 0 " ", 1 ".", 2 "cat", 3 "qqq": "cat" and "qqq" differ only in the last bit
TINY = LzwDictionary(2, (b" ", b".", b"cat", b"qqq"), 2)
TINY_LEX = Lexicon(frozenset({b"cat"}))


def bits(indices, ell):
    return indices_to_bits(np.array(indices), ell)


def window(indices, ell, erase=()):
    w = bits(indices, ell)
    w[list(erase)] = ERASED
    return w


def cset(start, rows, ell, t=0):
    rows = np.array(rows, dtype=np.int64)
    er = np.zeros(rows.shape[1] * ell, bool)
    er[:t] = True
    return CandidateSet(start, rows.shape[1], rows, er, ell)


def test_no_erasure_single_candidate():
    s = enumerate_candidates(bits([0, 2, 0], 2), TINY, TINY_LEX, t_cap=4)
    assert s.as_set() == {(0, 2, 0)} and s.t == 0


def test_one_erased_bit_keeps_the_word():
    s = enumerate_candidates(window([0, 2, 0], 2, [3]), TINY, TINY_LEX, t_cap=4)
    assert s.as_set() == {(0, 2, 0)}
    assert s.assignments.tolist() == [[0]]


def test_edge_tokens_are_exempt():
    # "qqq" at the window edge may be a fragment of a longer word
    s = enumerate_candidates(window([0, 2], 2, [3]), TINY, TINY_LEX, t_cap=4)
    assert s.as_set() == {(0, 2), (0, 3)}


def test_t_cap():
    w = window([0, 2, 0], 2, [0, 1, 3])
    assert not enumerate_candidates(w, TINY, TINY_LEX, t_cap=3).capped
    s = enumerate_candidates(w, TINY, TINY_LEX, t_cap=2)
    assert s.capped and len(s) == 0


def test_framing_error():
    with pytest.raises(FramingError):
        enumerate_candidates(np.zeros(3, np.uint8), TINY, TINY_LEX, 4)


def test_merge_examples():
    w = window([0, 2, 0], 2, [])
    empty = CandidateSet(1, 2, np.zeros((0, 2), np.int64), np.zeros(4, bool), 2)
    assert len(merge_windows(cset(0, [[0, 2]], 2), empty, w, TINY, TINY_LEX)) == 0
    one = merge_windows(cset(0, [[0, 2]], 2), cset(1, [[2, 0]], 2), w, TINY, TINY_LEX)
    assert one.as_set() == {(0, 2, 0)}
    # two candidates on each side, one overlap-consistent pair
    s = merge_windows(cset(0, [[0, 2], [0, 3]], 2), cset(1, [[2, 0], [1, 0]], 2), w,
                      TINY, TINY_LEX)
    assert s.as_set() == {(0, 2, 0)}


def test_merge_checks_the_bridge_token():
    # "qqq" becomes interior only in the merged window
    w = window([0, 3, 0], 2, [])
    s = merge_windows(cset(0, [[0, 3]], 2), cset(1, [[3, 0]], 2), w, TINY, TINY_LEX)
    assert len(s) == 0


def test_merge_propagates_cap():
    capped = CandidateSet(1, 2, np.zeros((0, 2), np.int64), np.zeros(4, bool), 2, capped=True)
    s = merge_windows(cset(0, [[0, 2]], 2), capped, window([0, 2, 0], 2), TINY, TINY_LEX)
    assert s.capped


def test_merge_matches_brute_force():
    # random sub-window sets over a dictionary where every join passes the bridge
    d = LzwDictionary(2, (b"a", b"b", b"c", b"d"), 4)
    lex = Lexicon(frozenset({b"a"}))
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = {tuple(r) for r in rng.integers(0, 4, (6, 3)).tolist()}
        b = {tuple(r) for r in rng.integers(0, 4, (6, 3)).tolist()}
        b |= {x[1:] + (0,) for x in list(a)[:2]}
        s1, s2 = cset(0, sorted(a), 2), cset(1, sorted(b), 2)
        got = merge_windows(s1, s2, np.zeros(8, np.uint8), d, lex).as_set()
        want = {x + (y[-1],) for x in a for y in b if x[1:] == y[:-1]}
        assert got == want


LONG = LzwDictionary(3, (b" ", b"information", b"theory", b"cats", b"dogs", b"x", b"y", b"z"), 1)
LONG_LEX = Lexicon(frozenset({b"information", b"theory", b"cats", b"dogs"}),
                   frozenset({b"information theory"}))


def test_length_filter_keeps_long_token():
    s = cset(0, [[0, 1, 0, 2, 0], [0, 3, 0, 4, 0]], 3)
    out = length_filter(s, LONG_LEX, 12, LONG)
    assert out.as_set() == {(0, 1, 0, 2, 0)}


def test_length_filter_unchanged_cases():
    short = cset(0, [[0, 3, 0, 4, 0], [0, 4, 0, 3, 0]], 3)
    assert length_filter(short, LONG_LEX, 12, LONG).as_set() == short.as_set()
    shared = cset(0, [[0, 1, 0, 3, 0], [0, 1, 0, 4, 0]], 3)
    assert length_filter(shared, LONG_LEX, 11, LONG).as_set() == shared.as_set()


# 0 " ", 1 "dog", 2 "dot", 3 "bark"
DOG = LzwDictionary(2, (b" ", b"dog", b"dot", b"bark"), 1)
DOG_WORDS = frozenset({b"dog", b"dot", b"bark"})
DOG_LEX = Lexicon(DOG_WORDS, colocations={(b"bark", b"dog"): ColocationPair(b"bark", b"dog", 9, 5.0)})


def _dog_sets(a_rows):
    return [cset(0, a_rows, 2, t=1), cset(3, [[0, 3, 0]], 2)]


def test_colocation_prunes_partner():
    out = colocation_filter(_dog_sets([[0, 1, 0], [0, 2, 0]]), DOG_LEX, 1, DOG, n_max=3)
    assert out[0].as_set() == {(0, 1, 0)}
    assert out[1].as_set() == {(0, 3, 0)}


def test_colocation_no_pairs_unchanged():
    sets = _dog_sets([[0, 1, 0], [0, 2, 0]])
    out = colocation_filter(sets, Lexicon(DOG_WORDS), 1, DOG, n_max=3)
    assert [s.as_set() for s in out] == [s.as_set() for s in sets]


def test_colocation_everywhere_no_pruning():
    # both candidates hold an interior "dog"; they differ in an edge fragment
    sets = [cset(0, [[0, 1, 0, 0], [0, 1, 0, 2]], 2, t=1), cset(4, [[0, 3, 0, 0]], 2)]
    out = colocation_filter(sets, DOG_LEX, 1, DOG, n_max=4)
    assert out[0].as_set() == sets[0].as_set()


def test_colocation_score_floor_and_set_limit():
    sets = _dog_sets([[0, 1, 0], [0, 2, 0]])
    assert len(colocation_filter(sets, DOG_LEX, 1, DOG, 3, min_score=6.0)[0]) == 2
    assert len(colocation_filter(sets, DOG_LEX, 1, DOG, 3, max_set=1)[0]) == 2


def test_window_params_validation():
    with pytest.raises(ValueError):
        WindowParams(n_min=6, n_max=6)
    with pytest.raises(ValueError):
        WindowParams(t_cap=0)


def test_report_without_erasures():
    r = NrReport(100, 0, 0, 0)
    assert r.delta_hat is None and r.rho_hat is None and r.e_nr is None


# ---------------------------------------------------------------------------
# desk corpus


@pytest.fixture(scope="module")
def desk_sample(desk_dict):
    c = compress(data.desk_heldout()[:6000], desk_dict)
    return c.bits


def test_decode_no_erasures(desk_sample, desk_dict, desk_lex):
    out, rep = nr_decode(desk_sample, desk_dict, desk_lex, truth=desk_sample)
    assert np.array_equal(out, desk_sample)
    assert rep.erasures == 0 and rep.delta_hat is None


def test_decode_touches_only_erasures(desk_sample, desk_dict, desk_lex):
    rng = np.random.default_rng(4)
    w = desk_sample.copy()
    w[rng.random(w.size) < 0.05] = ERASED
    out, rep = nr_decode(w, desk_dict, desk_lex, truth=desk_sample)
    keep = w != ERASED
    assert np.array_equal(out[keep], w[keep])
    assert rep.recovered == int(np.count_nonzero(w != out))
    assert rep.recovered_ok + rep.recovered_bad == rep.recovered
    assert rep.delta_hat < 1 and rep.rho_hat < 1e-2


def test_decode_is_deterministic(desk_sample, desk_dict, desk_lex):
    w = desk_sample.copy()
    w[np.random.default_rng(5).random(w.size) < 0.1] = ERASED
    a, _ = nr_decode(w, desk_dict, desk_lex)
    b, _ = nr_decode(w, desk_dict, desk_lex)
    assert np.array_equal(a, b)


def test_joined_windows_match_brute_force(desk_sample, desk_dict, desk_lex):
    rng = np.random.default_rng(6)
    w = desk_sample.copy()
    w[rng.random(w.size) < 0.03] = ERASED
    ell = desk_dict.ell
    _, _, tr = nr_decode(w, desk_dict, desk_lex, trace=True)
    checked = 0
    for s in tr.joined:
        if s.capped or s.t > 8:
            continue
        ref = enumerate_candidates(w[s.start * ell:(s.start + s.size) * ell], desk_dict,
                                   desk_lex, 20, s.start)
        assert ref.as_set() == s.as_set()
        checked += 1
    assert checked > 100


def test_kernels_match_reference(desk_sample, desk_dict, desk_lex):
    m = get_model(desk_dict, desk_lex)
    idx = compress(data.desk_heldout()[:3000], desk_dict).indices
    rows = np.lib.stride_tricks.sliding_window_view(idx, 6).copy()
    rng = np.random.default_rng(7)
    rows = np.vstack([rows, rng.integers(0, desk_dict.size, (500, 6))])
    s = CandidateSet(0, 6, rows, np.zeros(6 * desk_dict.ell, bool), desk_dict.ell)
    # longest valid word or phrase
    want = [_longest_valid(m, r, desk_lex.phrases) for r in rows.tolist()]
    assert m.longest_valid(rows).tolist() == want
    # token ids against the string token sets
    ptr, ids = m.token_ids(rows)
    for i, toks in enumerate(_token_sets(m, s, desk_lex.phrases)):
        ref = {m.vocab_id(t) for t in toks if t in desk_lex.words or t in desk_lex.phrases}
        assert set(ids[ptr[i]:ptr[i + 1]].tolist()) == ref
    # bridge check against the text predicate on rows whose inner parts are valid
    for r in rows[:400].tolist():
        inner_ok = m.text_valid(b"".join(desk_dict.patterns[c] for c in r[:-1])) and \
            m.text_valid(b"".join(desk_dict.patterns[c] for c in r[1:]))
        if inner_ok:
            full = m.text_valid(b"".join(desk_dict.patterns[c] for c in r))
            assert bool(m.bridge_ok(np.array([r]))[0]) == full
