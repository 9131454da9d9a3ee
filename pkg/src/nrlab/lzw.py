"""Fixed-dictionary LZW coding.

A dictionary holds exactly 2**ell byte patterns: the single characters of the
alphabet first (sorted), then the most used longer phrases found by running
LZW phrase growth over a training corpus.  Text is parsed greedily into the
longest matching patterns and each pattern becomes an ell-bit codeword
(most significant bit first).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LzwError(ValueError):
    pass


class CapacityError(LzwError):
    """2**ell cannot hold the alphabet."""


class LzwInputError(LzwError):
    """Empty corpus or a character outside the alphabet."""


class FramingError(LzwError):
    """Bit length not a multiple of ell, or an out-of-range codeword."""


MIN_ELL = 1


@dataclass(frozen=True, eq=False)
class LzwDictionary:
    ell: int
    patterns: tuple
    alphabet_size: int
    index_of: dict = field(repr=False, default=None)
    max_len: int = 0
    prefix_closed: bool = False

    def __post_init__(self):
        if self.index_of is None:
            index_of = {p: i for i, p in enumerate(self.patterns)}
            object.__setattr__(self, "index_of", index_of)
            object.__setattr__(self, "max_len", max(len(p) for p in self.patterns))
            object.__setattr__(self, "prefix_closed",
                               all(p[:-1] in index_of for p in self.patterns if len(p) > 1))
        self.check_invariants()

    @property
    def size(self) -> int:
        return len(self.patterns)

    @property
    def alphabet(self) -> bytes:
        return b"".join(self.patterns[: self.alphabet_size])

    def check_invariants(self) -> None:
        if self.ell < MIN_ELL:
            raise CapacityError(f"ell={self.ell} below the minimum {MIN_ELL}")
        if len(self.patterns) != 1 << self.ell:
            raise LzwError(f"{len(self.patterns)} patterns, expected 2**{self.ell}")
        if len(self.index_of) != len(self.patterns):
            raise LzwError("duplicate patterns")
        if any(not p for p in self.patterns):
            raise LzwError("empty pattern")
        if any(len(p) != 1 for p in self.patterns[: self.alphabet_size]):
            raise LzwError("alphabet entries must be single characters")

    def __eq__(self, other):
        return (isinstance(other, LzwDictionary) and self.ell == other.ell
                and self.alphabet_size == other.alphabet_size and self.patterns == other.patterns)

    __hash__ = None


@dataclass(frozen=True)
class CompressedText:
    bits: np.ndarray        # uint8 0/1, length codeword_count * ell
    codeword_count: int
    source_length: int

    @property
    def indices(self) -> np.ndarray:
        ell = self.bits.size // self.codeword_count if self.codeword_count else 0
        return bits_to_indices(self.bits, ell) if ell else np.zeros(0, dtype=np.int64)

    def bits_per_char(self) -> float:
        return self.bits.size / self.source_length if self.source_length else 0.0


def _as_bytes(data) -> bytes:
    if isinstance(data, str):
        return data.encode("latin-1")
    return bytes(data)


def build_dictionary(corpus, ell: int, alphabet=None) -> LzwDictionary:
    """Grow LZW phrases over ``corpus`` and freeze the 2**ell most used ones.

    The usage count of a phrase is the number of times the LZW parse walked
    through it (as a prefix of a longer match or as the match itself).  A
    prefix is never used less often than its extensions and is created
    before them, so ranking by (-count, creation order) keeps the kept set
    prefix-closed and greedy parsing reduces to a trie walk.
    """
    corpus = _as_bytes(corpus)
    if not corpus:
        raise LzwInputError("empty corpus")
    seen = sorted(set(corpus))
    alpha = seen if alphabet is None else sorted(set(_as_bytes(alphabet)))
    capacity = 1 << ell
    if ell < MIN_ELL or capacity < len(alpha):
        raise CapacityError(f"2**{ell} entries cannot hold an alphabet of {len(alpha)}")
    stray = set(seen) - set(alpha)
    if stray:
        raise LzwInputError(f"corpus characters outside the alphabet: {sorted(stray)[:10]}")

    singles = [bytes([c]) for c in alpha]
    count = {}                 # phrase (len >= 2) -> usage count
    order = {}                 # phrase -> creation rank
    known = set(singles)
    w = corpus[:1]
    for i in range(1, len(corpus)):
        wc = w + corpus[i:i + 1]
        if wc in known:
            w = wc
            count[w] += 1
        else:
            known.add(wc)
            count[wc] = 0
            order[wc] = len(order)
            w = corpus[i:i + 1]

    room = capacity - len(singles)
    ranked = sorted(count, key=lambda p: (-count[p], order[p]))[:room]
    if len(ranked) < room:
        # corpus too small to fill the table: pad with unused but distinct
        # two-character strings so the size invariant holds
        have = set(ranked)
        for a in alpha:
            for b in alpha:
                if len(ranked) == room:
                    break
                p = bytes([a, b])
                if p not in have:
                    ranked.append(p)
                    have.add(p)
        k = 3
        while len(ranked) < room:
            p = bytes([alpha[0]]) * k
            if p not in have:
                ranked.append(p)
                have.add(p)
            k += 1
    return LzwDictionary(ell, tuple(singles + ranked), len(singles))


def parse(text, d: LzwDictionary) -> list:
    """Greedy longest-match codeword indices for ``text``."""
    text = _as_bytes(text)
    index_of = d.index_of
    closed = d.prefix_closed
    out = []
    i, n = 0, len(text)
    while i < n:
        if text[i:i + 1] not in index_of:
            raise LzwInputError(f"character {text[i]!r} at offset {i} is not in the alphabet")
        if closed:
            j = i + 1
            stop = min(n, i + d.max_len)
            while j < stop and text[i:j + 1] in index_of:
                j += 1
        else:
            j = min(n, i + d.max_len)
            while text[i:j] not in index_of:
                j -= 1
        out.append(index_of[text[i:j]])
        i = j
    return out


def indices_to_bits(indices, ell: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(ell - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)


def bits_to_indices(bits, ell: int) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    if b.size % ell:
        raise FramingError(f"{b.size} bits is not a multiple of ell={ell}")
    weights = np.int64(1) << np.arange(ell - 1, -1, -1, dtype=np.int64)
    return b.reshape(-1, ell) @ weights


def compress(text, d: LzwDictionary) -> CompressedText:
    text = _as_bytes(text)
    idx = parse(text, d)
    return CompressedText(indices_to_bits(idx, d.ell), len(idx), len(text))


def decompress(bits, d: LzwDictionary) -> bytes:
    if isinstance(bits, CompressedText):
        bits = bits.bits
    b = np.asarray(bits)
    if b.size and not np.all((b == 0) | (b == 1)):
        raise FramingError("bits must be 0/1")
    idx = bits_to_indices(b, d.ell)
    pats = d.patterns
    return b"".join(pats[i] for i in idx.tolist())


# ---------------------------------------------------------------------------
# dictionary file


def save_dictionary(d: LzwDictionary, path) -> None:
    lines = [f"LZWDICT v1 ell={d.ell} count={d.size} alphabet={d.alphabet_size}"]
    lines += [f"{i}\t{p.hex()}" for i, p in enumerate(d.patterns)]
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def load_dictionary(path) -> LzwDictionary:
    text = Path(path).read_bytes().decode("utf-8")
    lines = text.split("\n")
    head = lines[0].split()
    try:
        if head[:2] != ["LZWDICT", "v1"]:
            raise ValueError
        fields = dict(kv.split("=", 1) for kv in head[2:])
        ell, count, asize = int(fields["ell"]), int(fields["count"]), int(fields["alphabet"])
    except (ValueError, KeyError, IndexError):
        raise LzwError(f"bad dictionary header: {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln]
    if len(body) != count:
        raise LzwError(f"header says {count} entries, file has {len(body)}")
    pats = []
    for i, ln in enumerate(body):
        num, _, hexpat = ln.partition("\t")
        if int(num) != i:
            raise LzwError(f"entry {i} out of order")
        pats.append(bytes.fromhex(hexpat))
    return LzwDictionary(ell, tuple(pats), asize)
