"""Sliding-window natural-redundancy erasure decoder for LZW-compressed text.

Windows span whole ell-bit codewords.  A filling of a window's erased bits
is a candidate when the decompressed text has only valid whole words; tokens
touching either window edge may be fragments and are exempt.  Candidate
sets for windows of n_min..n_max codewords are built bottom-up: a window of
k codewords joins the candidates of its two (k-1)-codeword sub-windows on
their overlap and then only has to check the one token that neither
sub-window saw whole (the "bridge" running from the first into the last
codeword).  The n_max windows are then thinned by the length and
co-location filters, and a bit is decoded when every n_max window that pins
it down agrees.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .density import noise_entropy, noise_reduction
from .ldpc import ERASED
from .lexicon import Lexicon, merge_phrases
from .lzw import FramingError, LzwDictionary
from . import nr_kernels as nk

_TOKEN = re.compile(rb"[a-z0-9]+")


@dataclass(frozen=True)
class WindowParams:
    n_min: int = 2
    n_max: int = 6
    t_cap: int = 20
    long_len: int = 12
    coloc_span: int = 3
    numbers_valid: bool = True     # all-digit tokens count as words
    max_candidates: int = 4096     # merged windows with more survivors abstain
    coloc_min_score: float = 7.0   # weaker co-locations are ignored by the filter
    coloc_max_set: int = 256       # larger windows skip the co-location filter

    def __post_init__(self):
        if not 1 <= self.n_min < self.n_max:
            raise ValueError(f"need 1 <= n_min < n_max, got {self.n_min}, {self.n_max}")
        if self.t_cap < 1:
            raise ValueError("t_cap must be >= 1")
        if self.long_len < 1 or self.coloc_span < 0:
            raise ValueError("long_len must be >= 1 and coloc_span >= 0")
        if self.max_candidates < 1 or self.coloc_max_set < 1:
            raise ValueError("max_candidates and coloc_max_set must be >= 1")


@dataclass
class CandidateSet:
    """Surviving fillings of one window.

    ``indices`` holds one row of k codeword indices per candidate;
    ``erased`` marks the window's erased bit positions (length k * ell).
    """

    start: int
    size: int
    indices: np.ndarray
    erased: np.ndarray
    ell: int
    capped: bool = False

    def __len__(self):
        return 0 if self.capped else self.indices.shape[0]

    @property
    def t(self) -> int:
        return int(self.erased.sum())

    def bits(self) -> np.ndarray:
        shifts = np.arange(self.ell - 1, -1, -1)
        b = (self.indices[:, :, None] >> shifts) & 1
        return b.reshape(self.indices.shape[0], -1).astype(np.uint8)

    @property
    def assignments(self) -> np.ndarray:
        """(N, t) fillings of the erased positions."""
        return self.bits()[:, self.erased]

    def as_set(self) -> set:
        return {tuple(r) for r in self.indices.tolist()}


# ---------------------------------------------------------------------------
# validity model


class NrModel:
    """Per-pattern token structure and validity checks for a
    (dictionary, lexicon) pair.  Patterns are flattened to symbol codes and
    the word and phrase sets to tries so the hot checks run compiled."""

    def __init__(self, d: LzwDictionary, lex: Lexicon, numbers_valid: bool = True):
        self.d, self.lex, self.numbers_valid = d, lex, numbers_valid
        self.words = lex.words
        lower = [p.lower() for p in d.patterns]
        self.lower = lower
        n = len(lower)
        self.all_alnum = np.zeros(n, dtype=bool)
        self.mid_ok = np.ones(n, dtype=bool)
        self.lead_len = np.zeros(n, dtype=np.int64)
        self.trail_len = np.zeros(n, dtype=np.int64)
        for i, p in enumerate(lower):
            toks = [(m.start(), m.end(), m.group()) for m in _TOKEN.finditer(p)]
            full = bool(toks) and toks[0][0] == 0 and toks[0][1] == len(p)
            self.all_alnum[i] = full
            if toks and toks[0][0] == 0:
                self.lead_len[i] = toks[0][1]
            if toks and toks[-1][1] == len(p):
                self.trail_len[i] = len(p) - toks[-1][0]
            if not full:
                self.mid_ok[i] = all(self.valid(tok) for s, e, tok in toks
                                     if s > 0 and e < len(p))
        sym = nk.symbol_table()
        self.pat_ptr = np.zeros(n + 1, dtype=np.int64)
        self.pat_ptr[1:] = np.cumsum([len(p) for p in lower])
        self.pat_sym = sym[np.frombuffer(b"".join(lower), dtype=np.uint8)]
        self.word_trie = nk.Trie(lex.words, sym)
        self.phrase_trie = nk.Trie(lex.phrases, sym)

    def valid(self, tok: bytes) -> bool:
        if not tok:
            return True
        if tok in self.words:
            return True
        return self.numbers_valid and tok.isdigit()

    def text_valid(self, text: bytes) -> bool:
        """Reference predicate: every token not touching an edge is valid."""
        text = text.lower()
        n = len(text)
        for m in _TOKEN.finditer(text):
            if m.start() > 0 and m.end() < n and not self.valid(m.group()):
                return False
        return True

    def bridge_ok(self, rows: np.ndarray) -> np.ndarray:
        """Validity of the token running from the first into the last
        codeword of each row; rows whose middle codewords are not all
        alphanumeric, or whose token touches an edge, pass."""
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        t = self.word_trie
        return nk.bridge_filter(rows, self.pat_ptr, self.pat_sym, self.all_alnum,
                                self.lead_len, self.trail_len, t.trans, t.terminal, self.numbers_valid)

    def join(self, s1: np.ndarray, s2: np.ndarray, cap: int | None = None):
        """Rows r with r[:-1] in s1, r[1:] in s2 and a valid bridge token.
        Returns (rows, capped); capped when more than ``cap`` rows survive."""
        order, lo, cnt = _join_plan(s1, s2)
        t = self.word_trie
        cap = np.iinfo(np.int64).max - 1 if cap is None else int(cap)
        return nk.join_bridge(np.ascontiguousarray(s1, dtype=np.int64),
                              np.ascontiguousarray(s2, dtype=np.int64), order, lo, cnt, cap,
                              self.pat_ptr, self.pat_sym, self.all_alnum, self.lead_len,
                              self.trail_len, t.trans, t.terminal,
                              self.numbers_valid)

    def token_ids(self, rows: np.ndarray):
        """Interior words and greedily merged phrases of each row as integer
        ids, CSR (row_ptr, ids); see ``vocab_id``."""
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        w, p = self.word_trie, self.phrase_trie
        return nk.token_ids(rows, self.pat_ptr, self.pat_sym, w.trans, w.terminal, p.trans,
                            p.terminal, w.size)

    def vocab_id(self, tok: bytes) -> int:
        if b" " in tok:
            return self.word_trie.size + self.phrase_trie.node_of[tok]
        return self.word_trie.node_of[tok]

    def partner_table(self, min_score: float):
        """CSR (ptr, partner ids) of the co-location graph over token ids."""
        cache = self.__dict__.setdefault("_partner_tables", {})
        if min_score not in cache:
            pairs = [(self.vocab_id(a), self.vocab_id(b))
                     for (a, b), pr in self.lex.colocations.items() if pr.score >= min_score]
            n = self.word_trie.size + self.phrase_trie.size
            src = np.array([a for a, b in pairs] + [b for a, b in pairs], dtype=np.int64)
            dst = np.array([b for a, b in pairs] + [a for a, b in pairs], dtype=np.int64)
            order = np.argsort(src, kind="stable")
            ptr = np.zeros(n + 1, dtype=np.int64)
            ptr[1:] = np.cumsum(np.bincount(src, minlength=n))
            cache[min_score] = (ptr, dst[order])
        return cache[min_score]

    def longest_valid(self, rows: np.ndarray, min_len: int = 0) -> np.ndarray:
        """Length of the longest valid interior word or phrase of each row
        among those of at least ``min_len`` characters (0 if none)."""
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        w, p = self.word_trie, self.phrase_trie
        return nk.longest_valid(rows, self.pat_ptr, self.pat_sym, w.trans, w.terminal, p.trans,
                                p.terminal, self.numbers_valid, min_len)

    def interior_tokens(self, row) -> list:
        text = b"".join(self.lower[c] for c in row)
        n = len(text)
        return [m.group() for m in _TOKEN.finditer(text) if m.start() > 0 and m.end() < n]


_MODELS = {}


def get_model(d: LzwDictionary, lex: Lexicon, numbers_valid: bool = True) -> NrModel:
    key = (id(d), id(lex), numbers_valid)
    m = _MODELS.get(key)
    if m is None or m.d is not d or m.lex is not lex:
        if len(_MODELS) > 8:
            _MODELS.clear()
        m = _MODELS[key] = NrModel(d, lex, numbers_valid)
    return m


# ---------------------------------------------------------------------------
# per-codeword fillings


def _codeword_fillings(window_bits: np.ndarray, ell: int):
    """For each codeword of a trit slice: array of all 2^t index fillings."""
    w = np.asarray(window_bits, dtype=np.uint8).reshape(-1, ell)
    weights = (1 << np.arange(ell - 1, -1, -1)).astype(np.int64)
    out = []
    for row in w:
        er = row == ERASED
        base = int((np.where(er, 0, row).astype(np.int64) * weights).sum())
        pos = weights[er]
        t = pos.size
        if t == 0:
            out.append(np.array([base], dtype=np.int64))
            continue
        combos = (np.arange(1 << t, dtype=np.int64)[:, None] >> np.arange(t - 1, -1, -1)) & 1
        out.append(base + combos @ pos)
    return out


# ---------------------------------------------------------------------------
# public window operations


def enumerate_candidates(window_bits, d: LzwDictionary, lex: Lexicon, t_cap: int,
                         start: int = 0, numbers_valid: bool = True) -> CandidateSet:
    """Brute force: try all 2^t fillings of the window, keep the valid ones."""
    w = np.asarray(window_bits, dtype=np.uint8)
    if w.size % d.ell or w.size == 0:
        raise FramingError(f"window of {w.size} bits is not a positive multiple of ell={d.ell}")
    k = w.size // d.ell
    erased = w == ERASED
    t = int(erased.sum())
    if t > t_cap:
        return CandidateSet(start, k, np.zeros((0, k), dtype=np.int64), erased, d.ell, capped=True)
    model = get_model(d, lex, numbers_valid)
    per = _codeword_fillings(w, d.ell)
    grids = np.meshgrid(*per, indexing="ij")
    rows = np.stack([g.reshape(-1) for g in grids], axis=1)
    pats = d.patterns
    keep = [model.text_valid(b"".join(pats[c] for c in r)) for r in rows.tolist()]
    return CandidateSet(start, k, rows[np.array(keep, dtype=bool)], erased, d.ell)


def _join_plan(s1: np.ndarray, s2: np.ndarray):
    """Match s1 rows to s2 rows agreeing on the overlap s1[:, 1:] == s2[:, :-1].
    Row i of s1 pairs with s2[order[lo[i]:lo[i] + cnt[i]]]."""
    n1, n2 = s1.shape[0], s2.shape[0]
    if s1.shape[1] == 1 or n1 == 0 or n2 == 0:
        cnt = np.full(n1, n2 if s1.shape[1] == 1 else 0, dtype=np.int64)
        return np.arange(n2, dtype=np.int64), np.zeros(n1, dtype=np.int64), cnt
    ov1, ov2 = s1[:, 1:], s2[:, :-1]
    bits = int(max(ov1.max(), ov2.max())).bit_length()
    if bits * ov1.shape[1] <= 62:
        # pack the overlap into one integer key per row
        g1 = np.zeros(n1, dtype=np.int64)
        g2 = np.zeros(n2, dtype=np.int64)
        for c in range(ov1.shape[1]):
            g1 = (g1 << bits) | ov1[:, c]
            g2 = (g2 << bits) | ov2[:, c]
    else:
        _, inv = np.unique(np.vstack([ov1, ov2]), axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        g1, g2 = inv[:n1], inv[n1:]
    order = np.argsort(g2, kind="stable")
    g2s = g2[order]
    lo = np.searchsorted(g2s, g1, side="left")
    hi = np.searchsorted(g2s, g1, side="right")
    return order.astype(np.int64), lo.astype(np.int64), (hi - lo).astype(np.int64)


def merge_windows(s1: CandidateSet, s2: CandidateSet, window_bits, d: LzwDictionary,
                  lex: Lexicon, numbers_valid: bool = True,
                  max_candidates: int | None = None) -> CandidateSet:
    """Candidates of a k-codeword window from its two (k-1)-codeword sub-windows."""
    w = np.asarray(window_bits, dtype=np.uint8)
    erased = w == ERASED
    k = s1.size + 1
    if s2.size != s1.size or s2.start != s1.start + 1:
        raise ValueError("s1 and s2 must be the overlapping halves of one window")
    if s1.capped or s2.capped:
        return CandidateSet(s1.start, k, np.zeros((0, k), dtype=np.int64), erased, d.ell, True)
    model = get_model(d, lex, numbers_valid)
    rows, capped = model.join(s1.indices, s2.indices, max_candidates)
    return CandidateSet(s1.start, k, rows, erased, d.ell, capped)


def _longest_valid(model: NrModel, row, phrases) -> int:
    toks = model.interior_tokens(row)
    best = max((len(t) for t in toks if model.valid(t)), default=0)
    for i in range(len(toks) - 1):
        ph = toks[i] + b" " + toks[i + 1]
        if ph in phrases:
            best = max(best, len(ph))
    return best


def length_filter(s: CandidateSet, lex: Lexicon, long_len: int, d: LzwDictionary,
                  numbers_valid: bool = True) -> CandidateSet:
    """Keep only candidates with a long valid word or phrase, if any has one."""
    if s.capped or len(s) < 2:
        return s
    model = get_model(d, lex, numbers_valid)
    longest = model.longest_valid(s.indices, long_len)
    has = longest >= long_len
    if not has.any() or has.all():
        return s
    return CandidateSet(s.start, s.size, s.indices[has], s.erased, s.ell, False)


def _token_sets(model: NrModel, s: CandidateSet, phrases):
    out = []
    for r in s.indices.tolist():
        toks = model.interior_tokens(r)
        # words and phrases as they would appear in the phrase-merged stream
        out.append(frozenset(toks) | frozenset(merge_phrases(toks, phrases)))
    return out


class _ColocPass:
    """Co-location pruning over windows fed in increasing start order.

    Window i is paired with the windows starting i + j * step, j = 1..span,
    in that order; pruning of a later window is seen by its own pairings.
    A window is final once it has been processed, so callers may drop it.
    """

    def __init__(self, model, span, step, min_score, max_set):
        self.model = model
        self.ptr, self.dst = model.partner_table(min_score)
        self.span, self.step, self.max_set = span, step, max_set
        self.sets = {}
        self.tokens = {}

    @property
    def active(self) -> bool:
        return self.dst.size > 0 and self.span >= 1

    def _eligible(self, s):
        return not s.capped and 0 < len(s) <= self.max_set

    def _toks(self, i):
        if i not in self.tokens:
            self.tokens[i] = self.model.token_ids(self.sets[i].indices)
        return self.tokens[i]

    def _near(self, ids):
        u = np.unique(ids)
        lo, hi = self.ptr[u], self.ptr[u + 1]
        n = hi - lo
        if not n.sum():
            return n[:0]
        idx = np.repeat(lo - np.cumsum(n) + n, n) + np.arange(n.sum())
        return self.dst[idx]

    @staticmethod
    def _rows_hitting(toks, near):
        row_ptr, ids = toks
        hit = np.zeros(row_ptr.size - 1, dtype=bool)
        if near.size and ids.size:
            rows = np.repeat(np.arange(row_ptr.size - 1), np.diff(row_ptr))
            hit[rows[np.isin(ids, near)]] = True
        return hit

    def _prune(self, i, keep):
        s = self.sets[i]
        self.sets[i] = CandidateSet(s.start, s.size, s.indices[keep], s.erased, s.ell)
        self.tokens.pop(i, None)

    def process(self, i) -> CandidateSet:
        if not self.active or not self._eligible(self.sets[i]):
            return self.sets[i]
        for j in range(1, self.span + 1):
            i2 = i + j * self.step
            s, s2 = self.sets[i], self.sets.get(i2)
            if s2 is None or not self._eligible(s2) or (len(s) < 2 and len(s2) < 2):
                continue
            ta, tb = self._toks(i), self._toks(i2)
            pa = self._rows_hitting(ta, self._near(tb[1]))
            if not pa.any():
                continue
            pb = self._rows_hitting(tb, self._near(ta[1]))
            if not pa.all():
                self._prune(i, pa)
            if not pb.all():
                self._prune(i2, pb)
        return self.sets[i]

    def pop(self, i) -> CandidateSet:
        self.tokens.pop(i, None)
        return self.sets.pop(i)


def colocation_filter(window_sets: list, lex: Lexicon, coloc_span: int, d: LzwDictionary,
                      n_max: int | None = None, numbers_valid: bool = True,
                      min_score: float = -math.inf, max_set: int | None = None) -> list:
    """Prune candidates using co-locations between nearby windows.

    Windows are paired with the windows starting j * n_max codewords later,
    j = 1..coloc_span (non-overlapping neighbours).  When some candidate pair
    of the two windows contains a stored co-location, each window keeps only
    the candidates that take part in one.  Only pairs scoring at least
    ``min_score`` count, and windows with more than ``max_set`` candidates
    are left out.
    """
    sets = list(window_sets)
    if not sets:
        return sets
    step = n_max if n_max is not None else sets[0].size
    cp = _ColocPass(get_model(d, lex, numbers_valid), coloc_span, step, min_score,
                    max_set if max_set is not None else math.inf)
    if not cp.active:
        return sets
    order = sorted(range(len(sets)), key=lambda i: sets[i].start)
    for i in order:
        cp.sets[sets[i].start] = sets[i]
    for i in order:
        cp.process(sets[i].start)
    return [cp.sets[s.start] for s in sets]


# ---------------------------------------------------------------------------
# full decoder


@dataclass
class NrReport:
    bits: int
    erasures: int
    recovered_ok: int | None = None
    recovered_bad: int | None = None
    recovered: int = 0
    windows: int = 0
    capped_windows: int = 0

    @property
    def eps_hat(self):
        return self.erasures / self.bits if self.bits else None

    @property
    def delta_hat(self):
        if not self.erasures:
            return None
        return (self.erasures - self.recovered) / self.erasures

    @property
    def rho_hat(self):
        if not self.erasures or self.recovered_bad is None:
            return None
        return self.recovered_bad / self.erasures

    @property
    def e_nr(self):
        if self.rho_hat is None:
            return None
        return noise_entropy(self.eps_hat, self.delta_hat, self.rho_hat)

    @property
    def reduction(self):
        e = self.e_nr
        return None if e is None else noise_reduction(self.eps_hat, e)

    CSV_HEADER = "eps,delta_hat,rho_hat,e_nr,reduction,bits,erasures,recovered_ok,recovered_bad"

    def csv_row(self, eps=None) -> list:
        eps = self.eps_hat if eps is None else eps
        return [eps, self.delta_hat, self.rho_hat, self.e_nr, self.reduction, self.bits,
                self.erasures, self.recovered_ok, self.recovered_bad]


@dataclass
class NrTrace:
    """Intermediate results kept by ``nr_decode(..., trace=True)``."""

    joined: list = field(default_factory=list)     # n_max sets before the filters
    final: list = field(default_factory=list)      # n_max sets after the filters


def _level_one(noisy_cw: np.ndarray, model: NrModel) -> np.ndarray:
    """Fillings of one codeword whose interior tokens are all valid."""
    c = _codeword_fillings(noisy_cw, noisy_cw.size)[0]
    return c[model.mid_ok[c]].reshape(-1, 1)


def nr_decode(noisy, d: LzwDictionary, lex: Lexicon, params: WindowParams = WindowParams(),
              truth=None, trace: bool = False):
    """Decode erasures in ``noisy`` (uint8 trits over whole codewords).

    Returns (decoded word, NrReport) or, with ``trace``, also an NrTrace.
    Non-erased bits are never changed.

    Windows are built as a wavefront: when codeword j arrives, the window of
    each size ending at j is joined from the two windows one size smaller, so
    only two windows per size are alive at a time.  Windows of n_max
    codewords go through the length filter, wait for their co-location
    neighbours, then vote.
    """
    w = np.asarray(noisy, dtype=np.uint8)
    ell = d.ell
    if w.size % ell:
        raise FramingError(f"{w.size} bits is not a multiple of ell={ell}")
    model = get_model(d, lex, params.numbers_valid)
    C = w.size // ell
    er = (w == ERASED).reshape(C, ell)
    t_cw = er.sum(axis=1)
    out = w.copy()
    rep = NrReport(int(w.size), int(er.sum()))
    tr = NrTrace()
    n_max = params.n_max
    if C >= n_max and rep.erasures:
        csum = np.concatenate([[0], np.cumsum(t_cw)])
        votes = np.zeros(w.size, dtype=np.int32)
        ones = np.zeros(w.size, dtype=np.int32)
        cp = _ColocPass(model, params.coloc_span, n_max, params.coloc_min_score,
                        params.coloc_max_set)
        wait = n_max * params.coloc_span if cp.active else 0
        pending = deque()

        def vote(s):
            rep.windows += 1
            if s.capped:
                rep.capped_windows += 1
                return
            if len(s) == 0:
                return
            idx = s.indices
            spread = np.bitwise_or.reduce(idx ^ idx[0], axis=0)    # bits some rows differ on
            shifts = np.arange(ell - 1, -1, -1)
            agree = (((spread[:, None] >> shifts) & 1) == 0).reshape(-1) & s.erased
            pos = np.flatnonzero(agree)
            first = ((idx[0][:, None] >> shifts) & 1).reshape(-1)
            lo = s.start * ell
            votes[lo + pos] += 1
            ones[lo + pos] += first[pos]

        def settle(upto):
            while pending and pending[0] <= upto:
                i = pending.popleft()
                cp.process(i)
                s = cp.pop(i)
                if trace:
                    tr.final.append(s)
                vote(s)

        prev = [None] * (n_max + 1)
        rows_w = w.reshape(C, ell)
        for j in range(C):
            cur = [None] * (n_max + 1)
            cur[1] = _level_one(rows_w[j], model)
            for size in range(2, n_max + 1):
                st = j - size + 1
                if st < 0:
                    break
                left, right = prev[size - 1], cur[size - 1]
                rows = None
                if left is not None and right is not None and not (
                        size <= params.n_min and csum[st + size] - csum[st] > params.t_cap):
                    rows, capped = model.join(left, right, params.max_candidates)
                    if capped:
                        rows = None
                cur[size] = rows
            prev = cur
            st = j - n_max + 1
            if st < 0 or csum[st + n_max] == csum[st]:
                continue
            erased = er[st:st + n_max].reshape(-1)
            rows = cur[n_max]
            if rows is None:
                s = CandidateSet(st, n_max, np.zeros((0, n_max), dtype=np.int64), erased, ell, True)
            else:
                s = CandidateSet(st, n_max, rows, erased, ell)
            if trace:
                tr.joined.append(s)
            s = length_filter(s, lex, params.long_len, d, params.numbers_valid)
            cp.sets[st] = s
            pending.append(st)
            settle(st - wait)
        settle(C)

        dec = (votes > 0) & ((ones == 0) | (ones == votes)) & (w == ERASED)
        out[dec] = (ones[dec] > 0).astype(np.uint8)
        rep.recovered = int(dec.sum())
        if truth is not None:
            truth = np.asarray(truth, dtype=np.uint8)
            bad = int(np.count_nonzero(out[dec] != truth[dec]))
            rep.recovered_bad = bad
            rep.recovered_ok = rep.recovered - bad
    elif truth is not None:
        rep.recovered_ok = rep.recovered_bad = 0
    if trace:
        return out, rep, tr
    return out, rep
