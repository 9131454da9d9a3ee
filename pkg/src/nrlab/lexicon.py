"""Word, phrase and co-location models mined from a training corpus.

Tokens are lowercase alphanumeric runs.  Words are tokens seen at least
``min_count`` times, phrases are adjacent word pairs with a high pointwise
mutual information (PMI, log2), and co-locations are pairs of words or
phrases that co-occur within ``context_window`` tokens more often than
chance.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TOKEN_RE = re.compile(rb"[a-z0-9]+")

MIN_COUNT = 5
PMI_THRESHOLD = 3.0
CONTEXT_WINDOW = 20
BASE_VOCAB_SIZE = 100_000


class LexiconError(ValueError):
    pass


def tokenize(text) -> list:
    if isinstance(text, str):
        text = text.encode("latin-1", "replace")
    return TOKEN_RE.findall(bytes(text).lower())


@dataclass(frozen=True)
class ColocationPair:
    token_a: bytes
    token_b: bytes
    count: int
    score: float


@dataclass(eq=False)
class Lexicon:
    words: frozenset
    phrases: frozenset = frozenset()
    colocations: dict = field(default_factory=dict)    # (a, b) with a <= b -> ColocationPair
    max_word_len: int = 0
    partners: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.words = frozenset(self.words)
        self.phrases = frozenset(self.phrases)
        if not self.max_word_len and self.words:
            self.max_word_len = max(map(len, self.words))
        if not self.partners:
            part = {}
            for a, b in self.colocations:
                part.setdefault(a, set()).add(b)
                part.setdefault(b, set()).add(a)
            self.partners = {k: frozenset(v) for k, v in part.items()}

    def partner_map(self, min_score: float = -math.inf) -> dict:
        """token -> co-located tokens, using pairs scoring at least ``min_score``."""
        if min_score == -math.inf:
            return self.partners
        cache = self.__dict__.setdefault("_partner_cache", {})
        if min_score not in cache:
            part = {}
            for (a, b), pair in self.colocations.items():
                if pair.score >= min_score:
                    part.setdefault(a, set()).add(b)
                    part.setdefault(b, set()).add(a)
            cache[min_score] = {k: frozenset(v) for k, v in part.items()}
        return cache[min_score]

    def check_invariants(self) -> None:
        if not self.words:
            raise LexiconError("empty word set")
        for ph in self.phrases:
            parts = ph.split(b" ")
            if len(parts) < 2 or any(p not in self.words for p in parts):
                raise LexiconError(f"phrase {ph!r} has unknown words")
        vocab = self.words | self.phrases
        for (a, b), pair in self.colocations.items():
            if a > b or a not in vocab or b not in vocab:
                raise LexiconError(f"bad co-location key {(a, b)!r}")

    def __eq__(self, other):
        return (isinstance(other, Lexicon) and self.words == other.words
                and self.phrases == other.phrases and self.colocations == other.colocations)

    __hash__ = None


def is_valid_word(token, lex: Lexicon) -> bool:
    if isinstance(token, str):
        token = token.encode("latin-1", "replace")
    return bool(token) and token in lex.words


def colocation_score(a, b, lex: Lexicon):
    """Stored PMI of the unordered pair, or None."""
    a = a.encode() if isinstance(a, str) else a
    b = b.encode() if isinstance(b, str) else b
    key = (a, b) if a <= b else (b, a)
    pair = lex.colocations.get(key)
    return None if pair is None else pair.score


def merge_phrases(tokens: list, phrases) -> list:
    """Greedy left-to-right merge of adjacent tokens forming a known phrase."""
    out = []
    i, n = 0, len(tokens)
    while i < n:
        if i + 1 < n:
            cand = tokens[i] + b" " + tokens[i + 1]
            if cand in phrases:
                out.append(cand)
                i += 2
                continue
        out.append(tokens[i])
        i += 1
    return out


def _pmi(n_ab, n_a, n_b, n_tokens, n_pairs):
    return math.log2(n_ab * n_tokens * n_tokens / (n_pairs * n_a * n_b))


def base_vocabulary(n: int = BASE_VOCAB_SIZE) -> frozenset:
    """The ``n`` most frequent English words (alphanumeric only) from wordfreq."""
    from wordfreq import top_n_list

    out = set()
    for w in top_n_list("en", n, wordlist="large"):
        b = w.encode("ascii", "ignore")
        if b and TOKEN_RE.fullmatch(b):
            out.add(b)
    return frozenset(out)


def build_lexicon(corpus, min_count: int = MIN_COUNT, pmi_threshold: float = PMI_THRESHOLD,
                  context_window: int = CONTEXT_WINDOW, base_words=None) -> Lexicon:
    """Mine a lexicon; raises LexiconError on an empty corpus or when no word
    reaches ``min_count``.

    ``base_words`` (lowercase alphanumeric tokens) are added to the word set
    as is; phrases and co-locations are still mined from ``corpus`` alone.

    Bigram PMI uses unigram probabilities c(a)/N and the bigram probability
    c(ab)/(N-1).  Co-location PMI treats each unordered pair within the window
    as two ordered pairs: P(a, b) = n_ab / (2 * pairs), with pairs the number
    of (i, j) positions at distance 1..window in the phrase-merged stream.
    """
    if min_count < 1 or context_window < 1:
        raise LexiconError("min_count and context_window must be positive")
    tokens = tokenize(corpus)
    if not tokens:
        raise LexiconError("corpus has no tokens")
    uniq, inv, counts = np.unique(np.array(tokens, dtype=object), return_inverse=True,
                                  return_counts=True)
    uniq = [bytes(u) for u in uniq]
    words = frozenset(u for u, c in zip(uniq, counts) if c >= min_count)
    if not words:
        raise LexiconError(f"no token occurs {min_count} times")

    # phrases: adjacent pairs of words
    n = len(tokens)
    ids = inv.astype(np.int64)
    V = len(uniq)
    big = ids[:-1] * V + ids[1:]
    bu, bc = np.unique(big, return_counts=True)
    phrases = set()
    for code, c in zip(bu.tolist(), bc.tolist()):
        if c < min_count:
            continue
        a, b = divmod(code, V)
        if uniq[a] not in words or uniq[b] not in words:
            continue
        if _pmi(c, counts[a], counts[b], n, n - 1) >= pmi_threshold:
            phrases.add(uniq[a] + b" " + uniq[b])

    # co-locations over the phrase-merged stream
    stream = merge_phrases(tokens, phrases)
    vocab = sorted(words | phrases)
    vid = {t: i for i, t in enumerate(vocab)}
    sid = np.array([vid.get(t, -1) for t in stream], dtype=np.int64)
    m = sid.size
    scount = np.bincount(sid[sid >= 0], minlength=len(vocab))
    n_pairs = sum(max(m - o, 0) for o in range(1, context_window + 1))
    codes = []
    for o in range(1, min(context_window, m - 1) + 1):
        a, b = sid[:-o], sid[o:]
        keep = (a >= 0) & (b >= 0) & (a != b)
        lo = np.minimum(a[keep], b[keep])
        hi = np.maximum(a[keep], b[keep])
        codes.append(lo * len(vocab) + hi)
    colocs = {}
    if codes:
        cu, cc = np.unique(np.concatenate(codes), return_counts=True)
        sel = cc >= min_count
        for code, c in zip(cu[sel].tolist(), cc[sel].tolist()):
            a, b = divmod(code, len(vocab))
            score = _pmi(c, scount[a], scount[b], m, 2 * n_pairs)
            if score >= pmi_threshold:
                colocs[(vocab[a], vocab[b])] = ColocationPair(vocab[a], vocab[b], c, score)
    if base_words is not None:
        extra = {w.encode("ascii") if isinstance(w, str) else bytes(w) for w in base_words}
        bad = [w for w in extra if not TOKEN_RE.fullmatch(w)]
        if bad:
            raise LexiconError(f"base words must be lowercase alphanumeric, got {bad[:3]!r}")
        words = words | extra
    return Lexicon(words, frozenset(phrases), colocs)


# ---------------------------------------------------------------------------
# file format


def save_lexicon(lex: Lexicon, path) -> None:
    lines = ["#WORDS"] + [w.decode("latin-1") for w in sorted(lex.words)]
    lines += ["#PHRASES"] + [p.decode("latin-1") for p in sorted(lex.phrases)]
    lines += ["#COLOC"]
    for (a, b) in sorted(lex.colocations):
        pair = lex.colocations[(a, b)]
        lines.append(f"{a.decode('latin-1')}\t{b.decode('latin-1')}\t{pair.count}\t{pair.score!r}")
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def load_lexicon(path) -> Lexicon:
    section = None
    words, phrases, colocs = set(), set(), {}
    for raw in Path(path).read_bytes().decode("utf-8").split("\n"):
        if raw in ("#WORDS", "#PHRASES", "#COLOC"):
            section = raw
            continue
        if not raw:
            continue
        line = raw.encode("latin-1")
        if section == "#WORDS":
            words.add(line)
        elif section == "#PHRASES":
            phrases.add(line)
        elif section == "#COLOC":
            try:
                a, b, c, s = line.split(b"\t")
                colocs[(a, b)] = ColocationPair(a, b, int(c), float(s))
            except ValueError:
                raise LexiconError(f"bad co-location line {raw!r}") from None
        else:
            raise LexiconError(f"line outside a section: {raw!r}")
    lex = Lexicon(frozenset(words), frozenset(phrases), colocs)
    lex.check_invariants()
    return lex
