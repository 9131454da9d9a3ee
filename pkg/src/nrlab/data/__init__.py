"""Bundled desk corpus: cleaned English encyclopedia text, split by article
into a training part (dictionary and lexicon mining) and a held-out part
(decoder evaluation)."""

from __future__ import annotations

import bz2
from functools import lru_cache
from importlib import resources

DESK_ALPHABET = bytes(range(32, 127)) + b"\n"
DESK_ELL = 14


def _read(name: str) -> bytes:
    return bz2.decompress(resources.files(__name__).joinpath(name).read_bytes())


@lru_cache(maxsize=None)
def desk_train() -> bytes:
    return _read("desk_train.txt.bz2")


@lru_cache(maxsize=None)
def desk_heldout() -> bytes:
    return _read("desk_heldout.txt.bz2")


@lru_cache(maxsize=4)
def desk_dictionary(ell: int = DESK_ELL):
    from ..lzw import build_dictionary

    return build_dictionary(desk_train(), ell, alphabet=DESK_ALPHABET)


@lru_cache(maxsize=2)
def desk_lexicon(base_vocab: bool = True):
    """Lexicon mined from the training part; with ``base_vocab`` the word set
    also holds a general English vocabulary (the training part alone leaves
    about a fifth of held-out tokens unknown)."""
    from ..lexicon import base_vocabulary, build_lexicon

    return build_lexicon(desk_train(), base_words=base_vocabulary() if base_vocab else None)
