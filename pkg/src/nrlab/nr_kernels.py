"""Compiled scans for the NR text decoder.

Text is handled as symbol codes: a-z -> 0..25, 0-9 -> 26..35, space -> 36
(phrase separator), anything else -> -1 (token break).  Word and phrase sets
are flattened into dense-transition tries so the validity of a token spread over
several dictionary patterns is a plain walk.  Without numba the same loops
run as Python (correct, slow).
"""

import numpy as np

from ._accel import njit

N_SYM = 37
SPACE = 36
DIGIT0 = 26


def symbol_table() -> np.ndarray:
    tab = np.full(256, -1, dtype=np.int8)
    for i, ch in enumerate(b"abcdefghijklmnopqrstuvwxyz"):
        tab[ch] = i
        tab[ch - 32] = i          # upper case
    for i, ch in enumerate(b"0123456789"):
        tab[ch] = DIGIT0 + i
    return tab


class Trie:
    """Trie over symbol codes, node 0 the root; trans[v, s] is the child of
    node v on symbol s, or -1."""

    def __init__(self, strings, sym=None):
        sym = symbol_table() if sym is None else sym
        prefixes = {b""}
        words = set()
        for s in strings:
            if not s:
                continue
            words.add(s)
            for i in range(1, len(s) + 1):
                prefixes.add(s[:i])
        order = sorted(prefixes, key=lambda p: (len(p), p))
        node_of = {p: i for i, p in enumerate(order)}
        n = len(order)
        parent = np.array([node_of[p[:-1]] if p else -1 for p in order], dtype=np.int64)
        last = np.array([(SPACE if p[-1] == 32 else sym[p[-1]]) if p else -1 for p in order],
                        dtype=np.int64)
        if n > 1 and (last[1:] < 0).any():
            raise ValueError("trie strings must be lowercase alphanumeric (space between words)")
        self.terminal = np.zeros(n, dtype=np.bool_)
        self.terminal[[node_of[w] for w in words]] = True
        self.node_of = {w: node_of[w] for w in words}
        self.size = n
        self.trans = np.full((n, N_SYM), -1, dtype=np.int32)
        self.trans[parent[1:], last[1:]] = np.arange(1, n, dtype=np.int32)


@njit(cache=True)
def _step(node, s, trans):
    if node < 0 or s < 0:
        return -1
    return trans[node, s]


@njit(cache=True)
def _walk(node, syms, lo, hi, trans):
    for i in range(lo, hi):
        node = _step(node, syms[i], trans)
        if node < 0:
            return -1
    return node


@njit(cache=True)
def _all_digits(syms, lo, hi):
    for i in range(lo, hi):
        if syms[i] < DIGIT0:
            return False
    return True


@njit(cache=True)
def _bridge_row(row, pat_ptr, pat_sym, all_alnum, lead_len, trail_len,
                trans, terminal, numbers_valid):
    k = row.shape[0]
    first = row[0]
    last = row[k - 1]
    if all_alnum[first] or all_alnum[last]:
        return True
    for j in range(1, k - 1):
        if not all_alnum[row[j]]:
            return True
    tl = trail_len[first]
    ll = lead_len[last]
    if k == 2 and tl == 0 and ll == 0:
        return True
    lo = pat_ptr[first + 1] - tl
    node = _walk(0, pat_sym, lo, pat_ptr[first + 1], trans)
    digits = _all_digits(pat_sym, lo, pat_ptr[first + 1])
    for j in range(1, k - 1):
        c = row[j]
        if node >= 0:
            node = _walk(node, pat_sym, pat_ptr[c], pat_ptr[c + 1], trans)
        if digits:
            digits = _all_digits(pat_sym, pat_ptr[c], pat_ptr[c + 1])
    if node >= 0:
        node = _walk(node, pat_sym, pat_ptr[last], pat_ptr[last] + ll, trans)
    if digits:
        digits = _all_digits(pat_sym, pat_ptr[last], pat_ptr[last] + ll)
    if node >= 0 and terminal[node]:
        return True
    return numbers_valid and digits


@njit(cache=True)
def bridge_filter(rows, pat_ptr, pat_sym, all_alnum, lead_len, trail_len,
                  trans, terminal, numbers_valid):
    """For each row of codeword indices, validity of the token that runs from
    the trailing letters of the first codeword through every middle codeword
    into the leading letters of the last one.  Rows where that token touches
    a window edge, or where a middle codeword contains a break, pass."""
    n = rows.shape[0]
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        ok[i] = _bridge_row(rows[i], pat_ptr, pat_sym, all_alnum, lead_len, trail_len,
                            trans, terminal, numbers_valid)
    return ok


@njit(cache=True)
def join_bridge(s1, s2, order, lo, cnt, cap, pat_ptr, pat_sym, all_alnum, lead_len,
                trail_len, trans, terminal, numbers_valid):
    """Rows s1[i] + s2[order[q], -1] for q in lo[i]..lo[i]+cnt[i] that pass the
    bridge check.  Stops early and returns (empty, True) once more than
    ``cap`` rows survive."""
    n1, k1 = s1.shape
    k = k1 + 1
    total = 0
    for i in range(n1):
        total += cnt[i]
    out = np.empty((min(total, cap + 1), k), dtype=np.int64)
    row = np.empty(k, dtype=np.int64)
    m = 0
    for i in range(n1):
        for j in range(k1):
            row[j] = s1[i, j]
        for q in range(lo[i], lo[i] + cnt[i]):
            row[k1] = s2[order[q], k1 - 1]
            if _bridge_row(row, pat_ptr, pat_sym, all_alnum, lead_len, trail_len,
                           trans, terminal, numbers_valid):
                if m == cap:
                    return out[:0], True
                out[m] = row
                m += 1
    return out[:m], False


@njit(cache=True)
def longest_valid(rows, pat_ptr, pat_sym, wtrans, wterm,
                  ptrans, pterm, numbers_valid, min_len):
    """Length of the longest valid interior word or phrase in each row,
    counting only those of at least ``min_len`` characters (0 if none)."""
    n, k = rows.shape
    out = np.zeros(n, dtype=np.int64)
    buf = np.empty(k * 64, dtype=np.int8)
    starts = np.empty(k * 64, dtype=np.int64)
    ends = np.empty(k * 64, dtype=np.int64)
    for i in range(n):
        m = 0
        for j in range(k):
            c = rows[i, j]
            for q in range(pat_ptr[c], pat_ptr[c + 1]):
                if m == buf.size:
                    buf = np.concatenate((buf, np.empty(buf.size, dtype=np.int8)))
                buf[m] = pat_sym[q]
                m += 1
        # interior tokens
        nt = 0
        q = 0
        while q < m:
            if buf[q] < 0:
                q += 1
                continue
            s = q
            while q < m and buf[q] >= 0:
                q += 1
            if s > 0 and q < m:
                if nt == starts.size:
                    starts = np.concatenate((starts, np.empty(starts.size, dtype=np.int64)))
                    ends = np.concatenate((ends, np.empty(ends.size, dtype=np.int64)))
                starts[nt] = s
                ends[nt] = q
                nt += 1
        best = 0
        for t in range(nt):
            ln = ends[t] - starts[t]
            if ln <= best or ln < min_len:
                continue
            node = _walk(0, buf, starts[t], ends[t], wtrans)
            if (node >= 0 and wterm[node]) or (numbers_valid and _all_digits(buf, starts[t], ends[t])):
                best = ln
        for t in range(nt - 1):
            ln = ends[t] - starts[t] + 1 + ends[t + 1] - starts[t + 1]
            if ln <= best or ln < min_len:
                continue
            node = _walk(0, buf, starts[t], ends[t], ptrans)
            node = _step(node, SPACE, ptrans)
            node = _walk(node, buf, starts[t + 1], ends[t + 1], ptrans) if node >= 0 else -1
            if node >= 0 and pterm[node]:
                best = ln
        out[i] = best
    return out


@njit(cache=True)
def token_ids(rows, pat_ptr, pat_sym, wtrans, wterm,
              ptrans, pterm, phrase_offset):
    """Interior tokens of each row as ids, CSR (row_ptr, ids).  A word is its
    word-trie node, a phrase (greedy left-to-right merge of adjacent
    interior tokens) is phrase_offset + its phrase-trie node.  Tokens that
    are not words are left out, as no co-location can involve them."""
    n, k = rows.shape
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    ids = np.empty(n * 8, dtype=np.int64)
    buf = np.empty(k * 64, dtype=np.int8)
    starts = np.empty(k * 64, dtype=np.int64)
    ends = np.empty(k * 64, dtype=np.int64)
    m_ids = 0
    for i in range(n):
        m = 0
        for j in range(k):
            c = rows[i, j]
            for q in range(pat_ptr[c], pat_ptr[c + 1]):
                if m == buf.size:
                    buf = np.concatenate((buf, np.empty(buf.size, dtype=np.int8)))
                buf[m] = pat_sym[q]
                m += 1
        nt = 0
        q = 0
        while q < m:
            if buf[q] < 0:
                q += 1
                continue
            s = q
            while q < m and buf[q] >= 0:
                q += 1
            if s > 0 and q < m:
                if nt == starts.size:
                    starts = np.concatenate((starts, np.empty(starts.size, dtype=np.int64)))
                    ends = np.concatenate((ends, np.empty(ends.size, dtype=np.int64)))
                starts[nt] = s
                ends[nt] = q
                nt += 1
        if m_ids + 2 * nt > ids.size:
            ids = np.concatenate((ids, np.empty(ids.size + 2 * nt, dtype=np.int64)))
        for t in range(nt):
            node = _walk(0, buf, starts[t], ends[t], wtrans)
            if node >= 0 and wterm[node]:
                ids[m_ids] = node
                m_ids += 1
        t = 0
        while t < nt - 1:
            node = _walk(0, buf, starts[t], ends[t], ptrans)
            node = _step(node, SPACE, ptrans)
            if node >= 0:
                node = _walk(node, buf, starts[t + 1], ends[t + 1], ptrans)
            if node >= 0 and pterm[node]:
                ids[m_ids] = phrase_offset + node
                m_ids += 1
                t += 2
            else:
                t += 1
        row_ptr[i + 1] = m_ids
    return row_ptr, ids[:m_ids]
