"""Soft information and the NR + LDPC decoding pipelines.

Natural-redundancy knowledge enters LDPC decoding in two ways: as prior
LLRs on the information bits (soft estimates combined with the channel) or
as hard erasure recovery before or between decoding rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .decoders import LLR_CLAMP, DecodeOutcome, GenDecoderConfig, bp_decode, generalized_decode
from .ldpc import ERASED, ParameterError, SystematicCode
from .nr_text import NrReport, WindowParams, nr_decode

Q_FLOOR = 1e-6


class AlignmentError(ValueError):
    """Information length is not a whole number of segments."""


@dataclass(frozen=True)
class SoftEstimate:
    q: np.ndarray          # P(bit = 1) per information bit

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 1 or np.any(~np.isfinite(q)) or np.any((q < 0) | (q > 1)):
            raise ValueError("q must be a vector of probabilities")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class LlrVector:
    values: np.ndarray
    clamp: float = LLR_CLAMP

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if np.any(~np.isfinite(v)):
            raise ValueError("non-finite LLR")
        object.__setattr__(self, "values", np.clip(v, -self.clamp, self.clamp))

    def __len__(self):
        return self.values.size


def q_to_llr(est: SoftEstimate, q_floor: float = Q_FLOOR) -> np.ndarray:
    """log((1 - q) / q) with q clamped to [q_floor, 1 - q_floor]."""
    if not 0.0 < q_floor < 0.5:
        raise ParameterError(f"q_floor={q_floor} outside (0, 0.5)")
    q = np.clip(est.q, q_floor, 1.0 - q_floor)
    return np.log1p(-q) - np.log(q)


def channel_llr(word, p: float, clamp: float = LLR_CLAMP) -> LlrVector:
    """BSC LLRs: log((1-p)/p) for a received 0, its negative for a 1."""
    if not 0.0 < p < 0.5:
        raise ParameterError(f"BSC crossover {p} outside (0, 0.5)")
    w = np.asarray(word, dtype=np.uint8)
    if np.any(w > 1):
        raise ValueError("BSC word must be 0/1")
    mag = np.log1p(-p) - np.log(p)
    return LlrVector(np.where(w == 0, mag, -mag), clamp)


def combine_llrs(channel: LlrVector, dnn, k: int, n: int, info_positions=None) -> LlrVector:
    """Add the soft-source LLRs onto the information positions (the first k
    unless ``info_positions`` says otherwise); clamp after the sum."""
    dnn = np.asarray(dnn, dtype=np.float64)
    if len(channel) != n or dnn.size != k or k > n:
        raise ValueError(f"length mismatch: channel {len(channel)}, soft {dnn.size}, k={k}, n={n}")
    pos = np.arange(k) if info_positions is None else np.asarray(info_positions)
    if pos.size != k:
        raise ValueError("info_positions must have k entries")
    out = channel.values.copy()
    out[pos] += dnn
    return LlrVector(out, channel.clamp)


@dataclass(frozen=True)
class SoftEstimatorSpec:
    """Stand-in soft source.  ``uninformative`` gives q = 1/2 everywhere;
    ``oracle`` gives q = a on true ones and 1 - a on true zeros."""

    kind: str = "uninformative"
    accuracy: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uninformative", "oracle"):
            raise ParameterError(f"unknown estimator kind {self.kind!r}")
        if not 0.5 <= self.accuracy <= 1.0:
            raise ParameterError(f"accuracy {self.accuracy} outside [0.5, 1]")

    def estimate(self, truth_info) -> SoftEstimate:
        t = np.asarray(truth_info, dtype=np.uint8)
        if self.kind == "uninformative":
            return SoftEstimate(np.full(t.size, 0.5))
        a = self.accuracy
        return SoftEstimate(np.where(t == 1, a, 1.0 - a))


def bsc_nr_ldpc(received, code: SystematicCode, est_spec: SoftEstimatorSpec, p: float,
                truth_info, max_iters: int = 50, clamp: float = LLR_CLAMP,
                q_floor: float = Q_FLOOR, truth=None) -> DecodeOutcome:
    """Channel LLRs + soft-source LLRs on the information bits, then BP."""
    ch = channel_llr(received, p, clamp)
    est = est_spec.estimate(truth_info)
    if est.q.size != code.k:
        raise ValueError(f"estimate has {est.q.size} entries, k = {code.k}")
    init = combine_llrs(ch, q_to_llr(est, q_floor), code.k, code.n, code.info_positions)
    return bp_decode(code.graph, init.values, max_iters, truth, clamp)


# ---------------------------------------------------------------------------
# erasure pipelines


@dataclass
class PipelineOutcome(DecodeOutcome):
    nr_report: NrReport | None = None
    oracle_calls: int = 0
    stages: list = field(default_factory=list)


def sequential_nr_ldpc(word, code: SystematicCode, d, lex,
                       wparams: WindowParams = WindowParams(),
                       gcfg: GenDecoderConfig = GenDecoderConfig(), truth=None) -> PipelineOutcome:
    """NR decoding of the information bits, then the generalized decoder on
    the whole word with the channel's non-erased bits fixed.

    The information bits are LZW codewords in order; a trailing partial
    codeword (k not a multiple of ell) is left to the LDPC stage.
    """
    w = np.array(word, dtype=np.uint8)
    if w.size != code.n:
        raise ValueError(f"word length {w.size} != n = {code.n}")
    fixed = w != ERASED
    info_pos = code.info_positions
    usable = (code.k // d.ell) * d.ell
    info = w[info_pos[:usable]]
    info_truth = None if truth is None else np.asarray(truth, dtype=np.uint8)[info_pos[:usable]]
    rep = None
    if usable:
        fixed_info, rep = nr_decode(info, d, lex, wparams, truth=info_truth)
        w[info_pos[:usable]] = fixed_info
    out = generalized_decode(code.graph, w, fixed, gcfg, truth=truth)
    return PipelineOutcome(out.word, out.iterations_used, out.converged, out.residual_erasures,
                           out.residual_errors, out.history, nr_report=rep)


class LuckySegmentOracle:
    """Segment-level NR model: each segment is fixable with probability p,
    decided independently on the first (and only) attempt; a fixable
    segment is restored to its true bits."""

    def __init__(self, truth_info, l: int, p: float, seed=0):
        self.truth = np.asarray(truth_info, dtype=np.uint8)
        if self.truth.size % l:
            raise AlignmentError(f"k={self.truth.size} is not a multiple of l={l}")
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"p={p} outside [0, 1]")
        self.l = l
        self.lucky = np.random.default_rng(seed).random(self.truth.size // l) < p
        self.calls = np.zeros(self.lucky.size, dtype=np.int64)

    def __call__(self, seg: int, bits: np.ndarray):
        self.calls[seg] += 1
        if self.lucky[seg]:
            return self.truth[seg * self.l:(seg + 1) * self.l].copy()
        return None


def iterative_nr_ldpc(word, code: SystematicCode, segment_oracle: Callable, l: int,
                      l_theta: int, max_iters: int = 1000, truth=None,
                      record: bool = False) -> PipelineOutcome:
    """Alternate one peeling round with one NR pass over l-bit information
    segments.  A segment is handed to ``segment_oracle(index, bits)`` once,
    the first time its erasure count is at most ``l_theta``; a returned bit
    array replaces the segment, None leaves it.  Stops at zero erasures or
    when a full iteration changes nothing."""
    w = np.array(word, dtype=np.uint8)
    if w.size != code.n:
        raise ValueError(f"word length {w.size} != n = {code.n}")
    if l < 1 or code.k % l:
        raise AlignmentError(f"k={code.k} is not a multiple of l={l}")
    if not 0 <= l_theta <= l:
        raise ParameterError(f"l_theta={l_theta} outside [0, l={l}]")
    graph = code.graph
    seg_pos = code.info_positions.reshape(-1, l)
    tried = np.zeros(seg_pos.shape[0], dtype=bool)
    erasures = int(np.count_nonzero(w == ERASED))
    history = [erasures / graph.n] if record else []
    calls = iters = 0
    while erasures and iters < max_iters:
        iters += 1
        resolved = kernels.peel_round(w, graph.check_edges, graph.dv)
        cnt = (w[seg_pos] == ERASED).sum(axis=1)
        fixed_now = 0
        for s in np.flatnonzero(~tried & (cnt <= l_theta) & (cnt > 0)).tolist():
            tried[s] = True
            calls += 1
            bits = segment_oracle(s, w[seg_pos[s]].copy())
            if bits is not None:
                bits = np.asarray(bits, dtype=np.uint8)
                if bits.size != l or np.any(bits > 1):
                    raise ValueError("segment oracle must return l bits")
                fixed_now += int(cnt[s])
                w[seg_pos[s]] = bits
        erasures -= resolved + fixed_now
        if record:
            history.append(erasures / graph.n)
        if resolved == 0 and fixed_now == 0:
            break
    res = None
    if truth is not None:
        t = np.asarray(truth, dtype=np.uint8)
        res = int(np.count_nonzero((w != ERASED) & (w != t)))
    return PipelineOutcome(w, iters, erasures == 0, erasures, res, history, oracle_calls=calls)
