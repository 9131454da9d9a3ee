"""LDPC decoders: peeling (BEC), generalized error/erasure, sum-product BP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ldpc import ERASED, ParameterError, TannerGraph

LLR_CLAMP = kernels.LLR_CLAMP


@dataclass(frozen=True)
class GenDecoderConfig:
    pi: int = 1
    tau: int = 4
    max_iters: int = 100

    def validate(self, dv: int) -> None:
        if not 1 <= self.pi <= dv - 1:
            raise ParameterError(f"pi={self.pi} outside [1, dv-1={dv - 1}]")
        if not 1 <= self.tau <= dv - 1:
            raise ParameterError(f"tau={self.tau} outside [1, dv-1={dv - 1}]")
        if self.max_iters < 0:
            raise ParameterError("max_iters must be non-negative")


@dataclass
class DecodeOutcome:
    word: np.ndarray
    iterations_used: int
    converged: bool
    residual_erasures: int
    residual_errors: int | None = None
    history: list = field(default_factory=list)


def _residual_errors(word, truth):
    if truth is None:
        return None
    truth = np.asarray(truth, dtype=np.uint8)
    return int(np.count_nonzero((word != ERASED) & (word != truth)))


def peel_decode(graph: TannerGraph, word, max_iters: int = 1000, truth=None,
                record: bool = False) -> DecodeOutcome:
    """Synchronous peeling; stops at zero erasures or a round without progress.

    With ``record`` the history holds the erased fraction after every round
    (entry 0 is the input).
    """
    w = np.array(word, dtype=np.uint8)
    if w.size != graph.n:
        raise ValueError(f"word length {w.size} != n = {graph.n}")
    history = [np.count_nonzero(w == ERASED) / graph.n] if record else []
    iters = 0
    erasures = int(np.count_nonzero(w == ERASED))
    while erasures and iters < max_iters:
        resolved = kernels.peel_round(w, graph.check_edges, graph.dv)
        if resolved == 0:
            break
        iters += 1
        erasures -= resolved
        if record:
            history.append(erasures / graph.n)
    return DecodeOutcome(w, iters, erasures == 0, erasures, _residual_errors(w, truth), history)


def generalized_decode(graph: TannerGraph, word, fixed, cfg: GenDecoderConfig,
                       truth=None, record: bool = False) -> DecodeOutcome:
    """Error/erasure message passing with thresholds pi (fill) and tau (flip).

    Messages are extrinsic per edge and recomputed every iteration from the
    node's input symbol.  ``fixed`` marks the channel-verified bits, which are
    never changed.  With ``record`` (and ``truth``) the history holds, per
    iteration, the fraction of variable-to-check messages that are
    (wrong, erased).
    """
    cfg.validate(graph.dv)
    init = np.array(word, dtype=np.uint8)
    if init.size != graph.n:
        raise ValueError(f"word length {init.size} != n = {graph.n}")
    fixed = np.asarray(fixed, dtype=bool)
    if np.any(fixed & (init == ERASED)):
        raise ValueError("a fixed position is erased")
    dv = graph.dv
    v2c = np.repeat(init, dv)
    truth_e = None if truth is None else np.repeat(np.asarray(truth, dtype=np.uint8), dv)
    history = []
    if record and truth_e is not None:
        history.append(_msg_stats(v2c, truth_e))
    c2v = None
    iters = 0
    for _ in range(cfg.max_iters):
        new, c2v = kernels.gen_iteration(init, fixed, v2c, graph.check_edges, dv, cfg.pi, cfg.tau)
        iters += 1
        if record and truth_e is not None:
            history.append(_msg_stats(new, truth_e))
        if np.array_equal(new, v2c):
            break
        v2c = new
    if c2v is None:
        out = init.copy()
    else:
        out = kernels.gen_decide(init, fixed, c2v, dv, cfg.pi, cfg.tau)
    erasures = int(np.count_nonzero(out == ERASED))
    converged = erasures == 0 and not graph.syndrome(out).any()
    return DecodeOutcome(out, iters, converged, erasures, _residual_errors(out, truth), history)


def _msg_stats(msgs, truth_e):
    er = msgs == ERASED
    return (float(np.count_nonzero(~er & (msgs != truth_e)) / msgs.size),
            float(np.count_nonzero(er) / msgs.size))


def bp_decode(graph: TannerGraph, init_llrs, max_iters: int = 50, truth=None,
              clamp: float = LLR_CLAMP) -> DecodeOutcome:
    """Flooding sum-product decoding; LLR > 0 favours 0, ties decide 0."""
    llr = np.asarray(init_llrs, dtype=np.float64)
    if llr.size != graph.n:
        raise ValueError(f"LLR vector length {llr.size} != n = {graph.n}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("non-finite input LLR")
    llr = np.clip(llr, -clamp, clamp)
    hard = (llr < 0).astype(np.uint8)
    iters = 0
    ok = not graph.syndrome(hard).any()
    v2c = np.repeat(llr, graph.dv)
    while not ok and iters < max_iters:
        v2c, total = kernels.bp_iteration(llr, v2c, graph.check_edges, graph.dv, clamp)
        iters += 1
        hard = (total < 0).astype(np.uint8)
        ok = not graph.syndrome(hard).any()
    return DecodeOutcome(hard, iters, ok, 0, _residual_errors(hard, truth))
