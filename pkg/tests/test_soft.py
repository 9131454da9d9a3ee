import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrlab.decoders import GenDecoderConfig, bp_decode, generalized_decode, peel_decode
from nrlab.lexicon import Lexicon
from nrlab.ldpc import (ERASED, ParameterError, bec, bsc, build_regular_graph, encode,
                        to_systematic, transmit)
from nrlab.lzw import build_dictionary
from nrlab.soft import (AlignmentError, LlrVector, LuckySegmentOracle, SoftEstimate,
                        SoftEstimatorSpec, bsc_nr_ldpc, channel_llr, combine_llrs,
                        iterative_nr_ldpc, q_to_llr, sequential_nr_ldpc)


def test_q_to_llr_values():
    v = q_to_llr(SoftEstimate([0.5, 0.1, 0.0, 1.0]))
    assert v[0] == 0.0
    assert v[1] == pytest.approx(math.log(9), rel=1e-12)
    assert v[2] == pytest.approx(13.8155, abs=1e-4)
    assert v[3] == pytest.approx(-v[2])


def test_soft_estimate_validation():
    with pytest.raises(ValueError):
        SoftEstimate([0.5, 1.2])
    with pytest.raises(ParameterError):
        q_to_llr(SoftEstimate([0.5]), q_floor=0.0)


def test_channel_llr():
    v = channel_llr(np.array([0, 1], np.uint8), 0.01).values
    assert v[0] == pytest.approx(math.log(99), rel=1e-12) and v[1] == -v[0]
    assert abs(channel_llr(np.zeros(1, np.uint8), 0.4999999).values[0]) < 1e-5
    for p in (0.0, 0.5, 0.7):
        with pytest.raises(ParameterError):
            channel_llr(np.zeros(3, np.uint8), p)


def test_llr_vector_clamps():
    assert LlrVector([100.0, -100.0], 30.0).values.tolist() == [30.0, -30.0]
    with pytest.raises(ValueError):
        LlrVector([np.inf])


def test_combine_examples():
    ch = LlrVector(np.array([2.0, 1.0, -1.0, 4.0]))
    assert np.array_equal(combine_llrs(ch, np.zeros(2), 2, 4).values, ch.values)
    z = combine_llrs(LlrVector(np.zeros(4)), np.array([3.0, -2.0]), 2, 4).values
    assert z.tolist() == [3.0, -2.0, 0.0, 0.0]
    assert combine_llrs(ch, np.array([-5.0, 0.0]), 2, 4).values[0] == -3.0
    with pytest.raises(ValueError):
        combine_llrs(ch, np.zeros(3), 2, 4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-40, 40), min_size=6, max_size=6),
       st.lists(st.floats(-40, 40), min_size=3, max_size=3))
def test_combine_properties(ch, soft):
    ch, soft = np.array(ch), np.array(soft)
    pos = np.array([4, 0, 2])
    out = combine_llrs(LlrVector(ch), soft, 3, 6, pos).values
    want = np.clip(np.clip(ch, -30, 30) + np.bincount(pos, soft, 6), -30, 30)
    np.testing.assert_allclose(out, want)
    assert np.all(np.abs(out) <= 30)


@pytest.fixture(scope="module")
def code():
    return to_systematic(build_regular_graph(2000, 5, 100, seed=0))


def test_estimator_kinds():
    t = np.array([0, 1, 1, 0], np.uint8)
    assert np.all(SoftEstimatorSpec().estimate(t).q == 0.5)
    assert SoftEstimatorSpec("oracle", 0.9).estimate(t).q.tolist() == pytest.approx([0.1, 0.9, 0.9, 0.1])
    assert np.all(SoftEstimatorSpec("oracle", 0.5).estimate(t).q == 0.5)
    with pytest.raises(ParameterError):
        SoftEstimatorSpec("oracle", 0.3)
    with pytest.raises(ParameterError):
        SoftEstimatorSpec("dnn")


def test_uninformative_is_channel_only_bp(code, rng):
    p = 0.02
    for trial in range(5):
        truth = encode(code, rng.integers(0, 2, code.k, dtype=np.uint8))
        rx = transmit(truth, bsc(p), seed=trial)
        info = truth[code.info_positions]
        a = bp_decode(code.graph, channel_llr(rx, p).values, truth=truth)
        for spec in (SoftEstimatorSpec(), SoftEstimatorSpec("oracle", 0.5)):
            b = bsc_nr_ldpc(rx, code, spec, p, info, truth=truth)
            assert np.array_equal(a.word, b.word) and a.iterations_used == b.iterations_used


def test_oracle_estimator_helps(code):
    p, wins_a, wins_b = 0.03, 0, 0
    for trial in range(20):
        rng = np.random.default_rng(trial)
        truth = encode(code, rng.integers(0, 2, code.k, dtype=np.uint8))
        rx = transmit(truth, bsc(p), seed=trial)
        info = truth[code.info_positions]
        wins_a += bsc_nr_ldpc(rx, code, SoftEstimatorSpec(), p, info).converged
        wins_b += bsc_nr_ldpc(rx, code, SoftEstimatorSpec("oracle", 0.99), p, info).converged
    assert wins_b >= wins_a and wins_b == 20


# ---------------------------------------------------------------------------
# erasure pipelines


SEG = 20


@pytest.fixture(scope="module")
def code_seg(code):
    assert code.k % SEG == 0
    return code


def test_iterative_p0_is_peeling(code_seg):
    c = code_seg
    for seed in range(5):
        w = transmit(np.zeros(c.n, np.uint8), bec(0.04), seed=seed)
        oracle = LuckySegmentOracle(np.zeros(c.k, np.uint8), SEG, 0.0, seed)
        a = iterative_nr_ldpc(w, c, oracle, SEG, 4, record=True)
        b = peel_decode(c.graph, w, record=True)
        assert np.array_equal(a.word, b.word) and a.converged == b.converged
        assert a.history[-1] == b.history[-1]


def test_iterative_full_budget_fixes_info_first(code_seg):
    c = code_seg
    rng = np.random.default_rng(3)
    truth = encode(c, rng.integers(0, 2, c.k, dtype=np.uint8))
    w = transmit(truth, bec(0.3), seed=1)
    oracle = LuckySegmentOracle(truth[c.info_positions], SEG, 1.0, 0)
    out = iterative_nr_ldpc(w, c, oracle, SEG, SEG, truth=truth, record=True)
    assert out.converged and out.residual_errors == 0
    erased_info = (w[c.info_positions] == ERASED).reshape(-1, SEG).any(axis=1).sum()
    assert out.oracle_calls == erased_info
    # after iteration 1 only parity positions can still be erased
    assert out.history[1] * c.n <= np.count_nonzero(w[c.parity_positions] == ERASED)


def test_oracle_called_once_per_segment(code_seg):
    c = code_seg
    w = transmit(np.zeros(c.n, np.uint8), bec(0.3), seed=2)
    oracle = LuckySegmentOracle(np.zeros(c.k, np.uint8), SEG, 0.5, 1)
    out = iterative_nr_ldpc(w, c, oracle, SEG, 6)
    assert oracle.calls.max() <= 1 and oracle.calls.sum() == out.oracle_calls


def test_alignment_errors(code_seg):
    c = code_seg
    w = np.zeros(c.n, np.uint8)
    with pytest.raises(AlignmentError):
        iterative_nr_ldpc(w, c, lambda s, b: None, 7 if c.k % 7 else 9, 2)
    with pytest.raises(AlignmentError):
        LuckySegmentOracle(np.zeros(10, np.uint8), 8, 0.5)
    with pytest.raises(ParameterError):
        iterative_nr_ldpc(w, c, lambda s, b: None, SEG, SEG + 1)


def test_sequential_with_empty_lexicon(code):
    d = build_dictionary(b"abcd " * 50, 8, alphabet=b"abcd ")
    lex = Lexicon(frozenset({b"zzz"}))
    truth = np.zeros(code.n, np.uint8)
    w = transmit(truth, bec(0.02), seed=0)
    out = sequential_nr_ldpc(w, code, d, lex, truth=truth)
    ref = generalized_decode(code.graph, w, w != ERASED, GenDecoderConfig(), truth=truth)
    assert out.converged and out.residual_errors == 0
    assert np.array_equal(out.word, ref.word)
