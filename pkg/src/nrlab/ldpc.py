"""Regular LDPC codes: Tanner graph construction, systematic encoding, channels.

Words are numpy ``uint8`` arrays.  Hard words hold 0/1; noisy words
("trit words") additionally use :data:`ERASED` for an erased position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import as_generator

ERASED = 2


class ParameterError(ValueError):
    pass


def trit_word(symbols) -> np.ndarray:
    """Validate and copy a sequence over {0, 1, ERASED}."""
    w = np.array(symbols, dtype=np.uint8).reshape(-1)
    if w.size and w.max() > ERASED:
        raise ValueError("trit words only hold 0, 1 and ERASED")
    return w


def erasure_mask(word: np.ndarray) -> np.ndarray:
    return np.asarray(word) == ERASED


# ---------------------------------------------------------------------------
# Tanner graph


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Regular bipartite graph.

    Edges are numbered variable-major: edge ``v * dv + j`` joins variable
    ``v`` to check ``var_adj[v, j]``.  ``check_edges[c]`` lists the edge ids
    at check ``c`` and ``check_adj[c]`` the matching variables.
    """

    n: int
    m: int
    dv: int
    dc: int
    var_adj: np.ndarray
    check_adj: np.ndarray
    check_edges: np.ndarray
    seed: int = 0
    four_cycles: int = field(default=-1, compare=False)

    @property
    def n_edges(self) -> int:
        return self.n * self.dv

    @property
    def edge_var(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), self.dv)

    @property
    def edge_check(self) -> np.ndarray:
        return self.var_adj.reshape(-1)

    def parity_matrix(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        H[self.var_adj.reshape(-1), np.repeat(np.arange(self.n), self.dv)] = 1
        return H

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        return np.bitwise_xor.reduce(bits[self.check_adj], axis=1)

    def check_invariants(self) -> None:
        if self.n * self.dv != self.m * self.dc:
            raise AssertionError("n*dv != m*dc")
        if self.var_adj.shape != (self.n, self.dv) or self.check_adj.shape != (self.m, self.dc):
            raise AssertionError("adjacency shapes are not regular")
        if np.any(np.diff(np.sort(self.var_adj, axis=1), axis=1) == 0):
            raise AssertionError("a variable has a repeated check")
        if np.any(np.diff(np.sort(self.check_adj, axis=1), axis=1) == 0):
            raise AssertionError("a check has a repeated variable")
        ev = self.check_edges // self.dv
        if not np.array_equal(ev, self.check_adj):
            raise AssertionError("check_edges and check_adj disagree")
        owner = self.var_adj.reshape(-1)[self.check_edges]
        if not np.all(owner == np.arange(self.m)[:, None]):
            raise AssertionError("var_adj and check_adj are not mutually consistent")


def _from_edge_checks(n, m, dv, dc, edge_check, seed, four_cycles=-1) -> TannerGraph:
    var_adj = np.sort(edge_check.reshape(n, dv), axis=1).astype(np.int32)
    flat = var_adj.reshape(-1).astype(np.int64)
    order = np.argsort(flat, kind="stable")
    check_edges = order.reshape(m, dc)
    check_adj = (check_edges // dv).astype(np.int32)
    return TannerGraph(n, m, dv, dc, var_adj, check_adj, check_edges, seed, four_cycles)


def _duplicate_edges(edge_check: np.ndarray, dv: int) -> np.ndarray:
    rows = edge_check.reshape(-1, dv)
    order = np.argsort(rows, axis=1, kind="stable")
    srt = np.take_along_axis(rows, order, axis=1)
    dup = np.zeros_like(rows, dtype=bool)
    hit = srt[:, 1:] == srt[:, :-1]
    np.put_along_axis(dup, order[:, 1:], hit, axis=1)
    return np.flatnonzero(dup.reshape(-1))


def _four_cycle_edges(edge_check: np.ndarray, n: int, dv: int, m: int):
    """Count check pairs shared by two or more variables; return (count, edges)."""
    rows = np.sort(edge_check.reshape(n, dv), axis=1).astype(np.int64)
    ia, ib = np.triu_indices(dv, 1)
    keys = (rows[:, ia] * m + rows[:, ib]).reshape(-1)
    uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    shared = counts[inv] > 1
    n_cycles = int(np.sum(counts * (counts - 1) // 2))
    if not shared.any():
        return 0, np.empty(0, dtype=np.int64)
    pair = np.flatnonzero(shared)
    var = pair // len(ia)
    # one offending edge per (variable, pair): the one to the first check of the pair
    col = ia[pair % len(ia)]
    # var_adj was sorted above; map back to edge ids in the unsorted row
    srt_order = np.argsort(edge_check.reshape(n, dv), axis=1, kind="stable")
    edge = var * dv + srt_order[var, col]
    return n_cycles, np.unique(edge)


def _swap_repair(edge_check, bad, dv, rng):
    """Swap the check end of each bad edge with a random edge, keeping degrees.

    Swaps touching the same variable twice in one batch are dropped so every
    accepted swap is checked against the state it is applied to.
    """
    E = edge_check.size
    e = bad.astype(np.int64)
    f = rng.integers(0, E, size=e.size)
    ve, vf = e // dv, f // dv
    ce, cf = edge_check[e], edge_check[f]
    rows = edge_check.reshape(-1, dv)
    ok = (ve != vf) & (ce != cf)
    ok &= ~np.any(rows[ve] == cf[:, None], axis=1)
    ok &= ~np.any(rows[vf] == ce[:, None], axis=1)
    e, f, ve, vf, ce, cf = e[ok], f[ok], ve[ok], vf[ok], ce[ok], cf[ok]
    touched = np.concatenate([ve, vf])
    _, first, counts = np.unique(touched, return_index=True, return_counts=True)
    once = np.zeros(touched.size, dtype=bool)
    once[first[counts == 1]] = True
    keep = once[: e.size] & once[e.size:]
    edge_check[e[keep]] = cf[keep]
    edge_check[f[keep]] = ce[keep]


def build_regular_graph(n: int, dv: int, dc: int, seed: int = 0,
                        cycle_passes: int = 100) -> TannerGraph:
    """Random regular (dv, dc) graph by socket permutation.

    Parallel edges are always repaired; up to ``cycle_passes`` swap passes
    try to reduce 4-cycles, stopping as soon as a pass fails to lower the
    count.
    """
    if dv < 2:
        raise ParameterError("dv must be at least 2")
    if dc <= dv:
        raise ParameterError("dc must exceed dv")
    if n <= 0 or (n * dv) % dc:
        raise ParameterError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    m = n * dv // dc
    if dv > m:
        raise ParameterError(f"dv = {dv} exceeds the number of checks m = {m}")
    rng = as_generator(seed)
    edge_check = np.repeat(np.arange(m, dtype=np.int64), dc)
    rng.shuffle(edge_check)

    for _ in range(100_000):
        bad = _duplicate_edges(edge_check, dv)
        if bad.size == 0:
            break
        _swap_repair(edge_check, bad, dv, rng)
    else:
        raise RuntimeError("could not remove parallel edges")

    count, bad = _four_cycle_edges(edge_check, n, dv, m)
    for _ in range(cycle_passes):
        if count == 0:
            break
        trial = edge_check.copy()
        _swap_repair(trial, bad, dv, rng)
        new_count, new_bad = _four_cycle_edges(trial, n, dv, m)
        if new_count >= count:
            break
        edge_check, count, bad = trial, new_count, new_bad

    return _from_edge_checks(n, m, dv, dc, edge_check, seed, count)


def graph_from_checks(check_lists, n: int, seed: int = 0) -> TannerGraph:
    """Build a regular graph from explicit per-check variable lists."""
    check_lists = [list(map(int, c)) for c in check_lists]
    m = len(check_lists)
    dc = len(check_lists[0])
    if any(len(c) != dc for c in check_lists):
        raise ParameterError("check degrees are not regular")
    per_var = [[] for _ in range(n)]
    for c, vs in enumerate(check_lists):
        for v in vs:
            per_var[v].append(c)
    dv = len(per_var[0])
    if any(len(p) != dv for p in per_var):
        raise ParameterError("variable degrees are not regular")
    edge_check = np.array([c for p in per_var for c in p], dtype=np.int64)
    g = _from_edge_checks(n, m, dv, dc, edge_check, seed)
    g.check_invariants()
    return g


_HEADER = re.compile(r"TANNER v1 n=(\d+) m=(\d+) dv=(\d+) dc=(\d+) seed=(-?\d+)")


def save_graph(graph: TannerGraph, path) -> None:
    lines = [f"TANNER v1 n={graph.n} m={graph.m} dv={graph.dv} dc={graph.dc} seed={graph.seed}"]
    lines += [" ".join(map(str, row)) for row in graph.check_adj.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_graph(path) -> TannerGraph:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    mo = _HEADER.fullmatch(text[0].strip())
    if not mo:
        raise ValueError(f"bad graph header: {text[0]!r}")
    n, m, dv, dc, seed = map(int, mo.groups())
    checks = [list(map(int, line.split())) for line in text[1:1 + m]]
    g = graph_from_checks(checks, n, seed)
    if (g.m, g.dv, g.dc) != (m, dv, dc):
        raise ValueError("graph body disagrees with header")
    return g


# ---------------------------------------------------------------------------
# systematic encoding


@dataclass(frozen=True, eq=False)
class SystematicCode:
    """Systematic view of a Tanner graph.

    ``col_perm[:k]`` are the information positions and ``col_perm[k:]`` the
    parity positions; parity bit ``i`` equals ``parity_map[i] . info`` mod 2.
    """

    graph: TannerGraph
    k: int
    col_perm: np.ndarray
    parity_map: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def info_positions(self) -> np.ndarray:
        return self.col_perm[: self.k]

    @property
    def parity_positions(self) -> np.ndarray:
        return self.col_perm[self.k:]


def gf2_rref(H: np.ndarray):
    """Row-reduce a binary matrix; return (reduced rows, pivot columns)."""
    A = (np.asarray(H, dtype=np.uint8) & 1).copy()
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(A[r:, c]) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        if others.size:
            A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], np.array(pivots, dtype=np.int64)


def to_systematic(graph: TannerGraph) -> SystematicCode:
    reduced, pivots = gf2_rref(graph.parity_matrix())
    rank = len(pivots)
    is_pivot = np.zeros(graph.n, dtype=bool)
    is_pivot[pivots] = True
    info = np.flatnonzero(~is_pivot)
    col_perm = np.concatenate([info, pivots])
    parity_map = reduced[:, info]
    return SystematicCode(graph, graph.n - rank, col_perm, parity_map, rank)


def encode(code: SystematicCode, info) -> np.ndarray:
    info = np.asarray(info, dtype=np.uint8).reshape(-1)
    if info.size != code.k:
        raise ValueError(f"information word has length {info.size}, expected {code.k}")
    word = np.zeros(code.n, dtype=np.uint8)
    word[code.info_positions] = info
    parity = (code.parity_map.astype(np.int64) @ info.astype(np.int64)) & 1
    word[code.parity_positions] = parity.astype(np.uint8)
    return word


def extract_info(code: SystematicCode, word: np.ndarray) -> np.ndarray:
    return np.asarray(word)[code.info_positions]


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    rate: float

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind == "bec":
            if not 0.0 <= self.rate <= 1.0:
                raise ParameterError(f"BEC erasure rate {self.rate} outside [0, 1]")
        elif kind == "bsc":
            if not 0.0 <= self.rate <= 0.5:
                raise ParameterError(f"BSC crossover {self.rate} outside [0, 0.5]")
        else:
            raise ParameterError(f"unknown channel {self.kind!r}")


def bec(eps: float) -> ChannelSpec:
    return ChannelSpec("bec", eps)


def bsc(p: float) -> ChannelSpec:
    return ChannelSpec("bsc", p)


def transmit(word, ch: ChannelSpec, seed=None) -> np.ndarray:
    word = np.asarray(word, dtype=np.uint8)
    rng = as_generator(seed)
    hit = rng.random(word.size) < ch.rate
    if ch.kind == "bec":
        return np.where(hit, np.uint8(ERASED), word).astype(np.uint8)
    return (word ^ hit.astype(np.uint8)).astype(np.uint8)
