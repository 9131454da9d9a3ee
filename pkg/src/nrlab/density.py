"""Density evolution for NR-assisted LDPC decoding.

Three engines live here:

* classic BEC density evolution for a regular (dv, dc) ensemble,
* the error/erasure recursion for the sequential scheme (NR stage followed by
  the generalized decoder), tracking (alpha_t, beta_t),
* the segment recursion for the iterative scheme, where one peeling round
  alternates with an NR pass over l-bit information segments.

plus a bisection threshold search and the noise-entropy bookkeeping used to
summarise an NR decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SEQ_TOL = 1e-10
SEQ_T_MAX = 2000
ITER_T_MAX = 10_000
BISECT_TOL = 1e-4
STAGNATION_RTOL = 1e-12


class ThresholdSearchError(ValueError):
    """The bracket handed to :func:`erasure_threshold` is not a bracket."""


# ---------------------------------------------------------------------------
# binomial helpers


def binomial_table(n_max: int) -> np.ndarray:
    """C[i, k] for 0 <= k <= i <= n_max in float64 (zero above the diagonal).

    Rows are filled with the multiplicative recurrence
    C(i, k) = C(i, k-1) * (i - k + 1) / k.
    """
    table = np.zeros((n_max + 1, n_max + 1))
    for i in range(n_max + 1):
        c = 1.0
        table[i, 0] = 1.0
        for k in range(1, i + 1):
            c = c * (i - k + 1) / k
            table[i, k] = c
    return table


def binomial_transition(d: float, table: np.ndarray) -> np.ndarray:
    """T[i, k] = C(i, k) d^k (1 - d)^(i - k): each of i erasures survives w.p. d."""
    size = table.shape[0]
    idx = np.arange(size)
    diff = idx[:, None] - idx[None, :]
    lower = diff >= 0
    dpow = np.power(d, idx)
    epow = np.power(1.0 - d, np.where(lower, diff, 0))
    return np.where(lower, table * dpow[None, :] * epow, 0.0)


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


# ---------------------------------------------------------------------------
# classic BEC


def classic_de_step(x: float, eps0: float, dv: int, dc: int) -> float:
    """One round of x -> eps0 (1 - (1 - x)^(dc-1))^(dv-1)."""
    return eps0 * (1.0 - (1.0 - x) ** (dc - 1)) ** (dv - 1)


def classic_de_trajectory(eps0: float, dv: int, dc: int, rounds: int) -> np.ndarray:
    """Variable-to-check erasure probabilities x_0 = eps0, x_1, ..., x_rounds."""
    out = np.empty(rounds + 1)
    out[0] = x = eps0
    for t in range(1, rounds + 1):
        x = classic_de_step(x, eps0, dv, dc)
        out[t] = x
    return out


def classic_node_erasure(eps0: float, dv: int, dc: int, rounds: int) -> np.ndarray:
    """Fraction of variable nodes still erased after each synchronous peeling round.

    A node survives round t when all dv of its checks saw another erasure in
    round t-1, so the node fraction uses the full degree dv rather than the
    extrinsic dv-1 of the message recursion.
    """
    x = classic_de_trajectory(eps0, dv, dc, rounds)
    out = np.empty(rounds + 1)
    out[0] = eps0
    out[1:] = eps0 * (1.0 - (1.0 - x[:-1]) ** (dc - 1)) ** dv
    return out


def classic_de_run(eps0: float, dv: int, dc: int, tol: float = SEQ_TOL,
                   t_max: int = ITER_T_MAX) -> bool:
    x = eps0
    if x < tol:
        return True
    for _ in range(t_max):
        nx = classic_de_step(x, eps0, dv, dc)
        if nx < tol:
            return True
        if abs(x - nx) <= STAGNATION_RTOL * x:
            return False
        x = nx
    return False


# ---------------------------------------------------------------------------
# sequential scheme: NR stage then the generalized error/erasure decoder


@dataclass(frozen=True)
class SeqDEParams:
    dv: int
    dc: int
    pi: int
    tau: int
    eps0: float
    p0: float
    gamma0: float

    def __post_init__(self):
        for name in ("eps0", "p0", "gamma0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not 1 <= self.pi <= self.dv - 1:
            raise ValueError(f"pi={self.pi} outside [1, dv-1]")
        if not 1 <= self.tau <= self.dv - 1:
            raise ValueError(f"tau={self.tau} outside [1, dv-1]")
        if self.dv < 2 or self.dc < 2:
            raise ValueError("degrees must be at least 2")

    @property
    def alpha0(self) -> float:
        return self.eps0 * (1.0 - self.p0) * self.gamma0

    @property
    def beta0(self) -> float:
        return self.eps0 * self.p0

    @property
    def kappa0(self) -> float:
        return self.eps0 * (1.0 - self.p0) * (1.0 - self.gamma0)

    def with_eps0(self, eps0: float) -> "SeqDEParams":
        return SeqDEParams(self.dv, self.dc, self.pi, self.tau, eps0, self.p0, self.gamma0)


@dataclass(frozen=True)
class SeqDEState:
    """alpha/beta after t iterations, plus the message statistics they induce."""

    t: int
    alpha: float
    beta: float
    kappa0: float
    A: float
    B: float
    C: float
    D: float
    mu: float
    nu: float


def _seq_messages(alpha: float, beta: float, prm: SeqDEParams):
    dv1 = prm.dv - 1
    good = (1.0 - beta) ** (prm.dc - 1)
    signed = (1.0 - beta - 2.0 * alpha) ** (prm.dc - 1)
    A = 0.5 * (good - signed)
    B = 0.5 * (good + signed)
    E = max(1.0 - A - B, 0.0)
    C = 1.0 - (1.0 - A) ** dv1
    C += sum(math.comb(dv1, i) * B ** i * E ** (dv1 - i) for i in range(prm.tau))
    D = sum(math.comb(dv1, j) * A ** j * E ** (dv1 - j) for j in range(prm.tau, dv1 + 1))
    mu = sum(math.comb(dv1, m) * A ** m * E ** (dv1 - m) for m in range(prm.pi, dv1 + 1))
    nu = sum(math.comb(dv1, m) * B ** m * E ** (dv1 - m) for m in range(prm.pi, dv1 + 1))
    return A, B, C, D, mu, nu


def _seq_state(t: int, alpha: float, beta: float, prm: SeqDEParams) -> SeqDEState:
    A, B, C, D, mu, nu = _seq_messages(alpha, beta, prm)
    return SeqDEState(t, alpha, beta, prm.kappa0, A, B, C, D, mu, nu)


def seq_de_initial(prm: SeqDEParams) -> SeqDEState:
    return _seq_state(0, prm.alpha0, prm.beta0, prm)


def seq_de_step(state: SeqDEState, prm: SeqDEParams) -> SeqDEState:
    alpha = prm.alpha0 * state.C + prm.kappa0 * state.D + prm.beta0 * state.mu
    beta = prm.beta0 * (1.0 - state.mu - state.nu)
    return _seq_state(state.t + 1, alpha, max(beta, 0.0), prm)


@dataclass
class DERun:
    trajectory: list
    success: bool


def seq_de_run(prm: SeqDEParams, tol: float = SEQ_TOL, t_max: int = SEQ_T_MAX) -> DERun:
    if tol <= 0:
        raise ValueError("tol must be positive")
    state = seq_de_initial(prm)
    traj = [state]
    if state.alpha + state.beta < tol:
        return DERun(traj, True)
    for _ in range(t_max):
        nxt = seq_de_step(state, prm)
        traj.append(nxt)
        total = nxt.alpha + nxt.beta
        if total < tol:
            return DERun(traj, True)
        prev = state.alpha + state.beta
        if abs(prev - total) <= STAGNATION_RTOL * prev:
            return DERun(traj, False)
        state = nxt
    return DERun(traj, False)


def map_info_erasure_rate(p0_info: float, R: float) -> float:
    """Overall retention p0 when only the R-fraction of information bits sees NR."""
    if not (0.0 <= p0_info <= 1.0 and 0.0 <= R <= 1.0):
        raise ValueError("p0_info and R must lie in [0, 1]")
    return R * p0_info + (1.0 - R)


# ---------------------------------------------------------------------------
# iterative scheme: segment model


@dataclass(frozen=True)
class IterDEParams:
    dv: int
    dc: int
    l: int
    l_theta: int
    p: float
    eps0: float
    R: float | None = None

    def __post_init__(self):
        if self.R is None:
            object.__setattr__(self, "R", 1.0 - self.dv / self.dc)
        if not 0 <= self.l_theta <= self.l:
            raise ValueError(f"l_theta={self.l_theta} outside [0, l={self.l}]")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if not 0.0 <= self.eps0 <= 1.0:
            raise ValueError(f"eps0={self.eps0} outside [0, 1]")
        if self.l < 1:
            raise ValueError("segment length must be positive")

    def with_eps0(self, eps0: float) -> "IterDEParams":
        return IterDEParams(self.dv, self.dc, self.l, self.l_theta, self.p, eps0, self.R)

    def with_p(self, p: float) -> "IterDEParams":
        return IterDEParams(self.dv, self.dc, self.l, self.l_theta, p, self.eps0, self.R)


@dataclass(frozen=True)
class IterDEState:
    t: int
    eps: float
    eps_prime: float
    q: float
    d: float
    f: np.ndarray | None
    q_product: float
    d_product: float
    terminated: bool = False


def iter_de_initial(prm: IterDEParams) -> IterDEState:
    # t = 0: channel output, q_0 = 1, nothing decoded yet
    return IterDEState(0, prm.eps0, prm.eps0, 1.0, 1.0, None, 1.0, 1.0)


@dataclass
class _IterCache:
    table: np.ndarray
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        self.weights = np.arange(self.table.shape[0]) / (self.table.shape[0] - 1)


_CACHE: dict[int, _IterCache] = {}


def _cache(l: int) -> _IterCache:
    if l not in _CACHE:
        _CACHE[l] = _IterCache(binomial_table(l))
    return _CACHE[l]


def iter_de_step(state: IterDEState, prm: IterDEParams) -> IterDEState:
    """Advance the segment recursion by one LDPC round plus one NR pass."""
    if state.terminated:
        return state
    t = state.t + 1
    c = _cache(prm.l)
    lt = prm.l_theta
    eps_prev = state.eps
    eps_prime = state.q_product * prm.eps0 * (1.0 - (1.0 - eps_prev) ** (prm.dc - 1)) ** (prm.dv - 1)
    if eps_prime <= 0.0 or eps_prev <= 0.0:
        return IterDEState(t, 0.0, 0.0, 0.0, 0.0, state.f, state.q_product, 0.0, True)
    d = eps_prime / eps_prev
    if t == 1:
        # a segment's erasure count after the first LDPC round is Binomial(l, eps'_1)
        f = c.table[prm.l] * np.power(eps_prime, np.arange(prm.l + 1)) \
            * np.power(1.0 - eps_prime, prm.l - np.arange(prm.l + 1))
    else:
        f = state.f @ binomial_transition(d, c.table)
    f = f.copy()
    f[0] = f[: lt + 1].sum()
    f[1: lt + 1] = 0.0
    d_product = state.d_product * d
    eps = ((1.0 - prm.R) + prm.R * (1.0 - prm.p)) * prm.eps0 * d_product \
        + prm.R * prm.p * float(c.weights[lt + 1:] @ f[lt + 1:])
    q = eps / eps_prime
    stalled = abs(1.0 - d) <= STAGNATION_RTOL
    return IterDEState(t, eps, eps_prime, q, d, f, state.q_product * q, d_product,
                       terminated=stalled or eps <= 0.0)


@dataclass
class IterDERun:
    trajectory: list
    success: bool


def iter_de_run(prm: IterDEParams, tol: float = SEQ_TOL, t_max: int = ITER_T_MAX) -> IterDERun:
    state = iter_de_initial(prm)
    traj = [state]
    if prm.eps0 < tol:
        return IterDERun(traj, True)
    for _ in range(t_max):
        nxt = iter_de_step(state, prm)
        traj.append(nxt)
        if nxt.eps < tol:
            return IterDERun(traj, True)
        if nxt.terminated or abs(state.eps - nxt.eps) <= STAGNATION_RTOL * state.eps:
            return IterDERun(traj, False)
        state = nxt
    return IterDERun(traj, False)


# ---------------------------------------------------------------------------
# threshold search


@dataclass(frozen=True)
class ThresholdResult:
    eps_star: float
    bracket: tuple[float, float]
    evaluations: int


def erasure_threshold(runner: Callable[[float], bool], lo: float, hi: float,
                      tol: float = BISECT_TOL) -> ThresholdResult:
    """Bisect for the largest channel erasure rate at which ``runner`` succeeds."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not runner(lo):
        raise ThresholdSearchError(f"decoding fails at the low end {lo}")
    if runner(hi):
        raise ThresholdSearchError(f"decoding succeeds at the high end {hi}")
    evals = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        evals += 1
        if runner(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), evals)


def classic_threshold(dv: int, dc: int, tol: float = BISECT_TOL) -> ThresholdResult:
    return erasure_threshold(lambda e: classic_de_run(e, dv, dc), 1e-6, 1.0, tol)


def seq_threshold(prm: SeqDEParams, lo: float = 1e-6, hi: float = 1.0,
                  tol: float = BISECT_TOL) -> ThresholdResult:
    return erasure_threshold(lambda e: seq_de_run(prm.with_eps0(e)).success, lo, hi, tol)


def iter_threshold(prm: IterDEParams, lo: float = 1e-6, hi: float = 1.0,
                   tol: float = BISECT_TOL) -> ThresholdResult:
    return erasure_threshold(lambda e: iter_de_run(prm.with_eps0(e)).success, lo, hi, tol)


# ---------------------------------------------------------------------------
# noise bookkeeping for an NR decoder


def noise_entropy(eps: float, delta: float, rho: float) -> float:
    """Residual noise entropy per bit after NR decoding of a BEC(eps) output.

    ``delta`` is the fraction of erasures left erased, ``rho`` the fraction
    decoded to the wrong value.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta={delta} outside [0, 1]")
    if rho < 0.0 or rho > 1.0 - delta + 1e-15:
        raise ValueError(f"rho={rho} outside [0, 1 - delta]")
    if delta >= 1.0:
        return eps * delta
    return eps * (delta + (1.0 - delta) * binary_entropy(min(rho / (1.0 - delta), 1.0)))


def noise_reduction(eps: float, e_nr: float) -> float:
    if eps <= 0.0:
        raise ValueError("noise reduction undefined for eps = 0")
    return (eps - e_nr) / eps


# ---------------------------------------------------------------------------
# Monte Carlo of the segment model


@dataclass
class SegmentSimResult:
    """Per-iteration empirical rates averaged over trials; index 0 is the channel.

    ``eps`` and ``eps_prime`` are erased variable-to-check message fractions
    after the NR pass and after the LDPC round, the quantities the recursion
    tracks.  ``bit_eps`` is the fraction of bits still unknown after the NR
    pass (what a peeling decoder would report).
    """

    eps: np.ndarray
    eps_prime: np.ndarray
    bit_eps: np.ndarray
    iterations: int
    converged: bool
    trials: int = 1


SEGMENT_COUNT_MODES = ("message", "bit")


def _segment_trial(prm, graph, k, rng, t_max, count_mode):
    from . import kernels

    n, dv = graph.n, prm.dv
    active = rng.random(n) < prm.eps0      # channel erasures not cleared by NR
    lucky = rng.random(k // prm.l) < prm.p
    v2c = np.repeat(active, dv)
    unknown = active.copy()
    eps, eps_prime, bit_eps = [v2c.mean()], [v2c.mean()], [unknown.mean()]
    for _ in range(t_max):
        if not v2c.any():
            break
        v2c, unknown = kernels.bec_flood(active, v2c, graph.check_edges, dv)
        eps_prime.append(v2c.mean())
        if count_mode == "message":
            # each bit's erasure seen through one outgoing message; edges are
            # placed at random so the first slot is as good as any
            state = v2c.reshape(n, dv)[:k, 0]
        else:
            state = unknown[:k]
        cnt = state.reshape(-1, prm.l).sum(axis=1)
        fix = lucky & (cnt <= prm.l_theta)
        cleared = np.zeros(n, dtype=bool)
        cleared[:k] = np.repeat(fix, prm.l)
        active &= ~cleared
        unknown &= ~cleared
        v2c &= np.repeat(active, dv)
        eps.append(v2c.mean())
        bit_eps.append(unknown.mean())
    return np.array(eps), np.array(eps_prime), np.array(bit_eps)


def segment_model_simulate(prm: IterDEParams, n: int, seed: int = 0, t_max: int = 50,
                           graph=None, trials: int = 1,
                           count_mode: str = "message") -> SegmentSimResult:
    """Monte Carlo of the abstract iterative NR-LDPC model on the all-zero codeword.

    The first k = R n variables are information bits cut into k / l segments,
    each lucky with probability p.  An iteration is one flooding round of
    erasure messages (peeling, seen edge by edge), then every lucky segment
    with at most l_theta erasures is cleared together with the outgoing
    messages of its bits.  ``count_mode="message"`` counts a bit as erased
    while its outgoing message is, matching the survival model of the
    recursion; ``"bit"`` counts bits the peeling decoder has not recovered.
    Trials share the graph and average rates over independent channels.
    """
    from .ldpc import ParameterError, build_regular_graph
    from .rng import trial_rng

    if count_mode not in SEGMENT_COUNT_MODES:
        raise ParameterError(f"count_mode must be one of {SEGMENT_COUNT_MODES}")
    if trials < 1 or t_max < 0:
        raise ParameterError("trials must be >= 1 and t_max >= 0")
    k = prm.R * n
    if abs(k - round(k)) > 1e-6 or round(k) % prm.l or round(k) == 0:
        raise ParameterError(f"k = R*n = {k:g} does not split into whole {prm.l}-bit segments")
    k = int(round(k))
    if graph is None:
        graph = build_regular_graph(n, prm.dv, prm.dc, seed)
    elif graph.n != n or graph.dv != prm.dv or graph.dc != prm.dc:
        raise ParameterError("graph does not match (n, dv, dc)")
    runs = [_segment_trial(prm, graph, k, trial_rng(seed, "segment-model", i), t_max, count_mode)
            for i in range(trials)]
    length = max(len(r[0]) for r in runs)

    def mean(j):
        # a finished trial stays at its final value
        return np.mean([np.pad(r[j], (0, length - len(r[j])), mode="edge") for r in runs], axis=0)

    eps = mean(0)
    return SegmentSimResult(eps, mean(1), mean(2), length - 1, bool(eps[-1] == 0), trials)
