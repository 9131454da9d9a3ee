"""Turn a MediaWiki XML dump into the plain-ASCII desk corpus bundled with nrlab.

Usage: python scripts/prepare_corpus.py <out_dir> <file> [<file> ...]

Files ending in .xml or .xml.bz2 are MediaWiki dumps; anything else is
plain text.

Pages are stripped of markup and reduced to printable ASCII.  Every fourth
page goes to the training part (dictionary and lexicon), the rest to the
held-out part (evaluation).  Extra plain-text files are appended to the
training part only.
"""

import bz2
import html
import re
import sys
import unicodedata
from pathlib import Path

PAGE = re.compile(r"<page>(.*?)</page>", re.S)
TITLE = re.compile(r"<title>(.*?)</title>", re.S)
TEXT = re.compile(r"<text[^>]*>(.*?)</text>", re.S)
NS = re.compile(r"<ns>(\d+)</ns>")


def strip_nested(s, open_, close):
    out, depth, i = [], 0, 0
    while i < len(s):
        if s.startswith(open_, i):
            depth += 1
            i += len(open_)
        elif depth and s.startswith(close, i):
            depth -= 1
            i += len(close)
        else:
            if not depth:
                out.append(s[i])
            i += 1
    return "".join(out)


def clean_wikitext(s: str) -> str:
    s = html.unescape(s)
    s = re.sub(r"<!--.*?-->", "", s, flags=re.S)
    s = re.sub(r"<ref[^>/]*/>", "", s)
    s = re.sub(r"<ref[^>]*>.*?</ref>", "", s, flags=re.S)
    s = strip_nested(s, "{{", "}}")
    s = strip_nested(s, "{|", "|}")
    s = re.sub(r"\[\[(?:File|Image|Category|[a-z\-]{2,12}):[^\[\]]*(?:\[\[[^\]]*\]\][^\[\]]*)*\]\]", "", s)
    s = re.sub(r"\[\[([^\]|]*\|)?([^\]]*)\]\]", r"\2", s)
    s = re.sub(r"\[https?://\S+ ([^\]]*)\]", r"\1", s)
    s = re.sub(r"\[?https?://\S+\]?", "", s)
    s = re.sub(r"<[^>]+>", "", s)
    s = re.sub(r"'{2,}", "", s)
    s = re.sub(r"^=+\s*(.*?)\s*=+\s*$", r"\1", s, flags=re.M)
    s = re.sub(r"^[*#:;]+\s*", "", s, flags=re.M)
    s = unicodedata.normalize("NFKD", s).encode("ascii", "ignore").decode()
    s = "".join(ch for ch in s if ch == "\n" or 32 <= ord(ch) < 127)
    lines = [re.sub(r"[ \t]+", " ", ln).strip() for ln in s.split("\n")]
    # keep prose-like lines only
    lines = [ln for ln in lines if len(ln) > 12 and not ln.startswith(("|", "!"))]
    return "\n".join(lines)


def main(argv):
    out = Path(argv[1])
    parts = ([], [])
    page_no = 0
    for src in map(Path, argv[2:]):
        data = (bz2.open if src.suffix == ".bz2" else open)(src, "rb").read()
        raw = data.decode("utf-8", "replace")
        if not src.name.endswith((".xml", ".xml.bz2")):
            text = unicodedata.normalize("NFKD", raw).encode("ascii", "ignore").decode()
            parts[0].append("\n".join(ln.strip() for ln in text.splitlines() if ln.strip()))
            continue
        for page in PAGE.findall(raw):
            ns = NS.search(page)
            text = TEXT.search(page)
            if (ns and ns.group(1) != "0") or not text or "#REDIRECT" in text.group(1)[:20].upper():
                continue
            body = clean_wikitext(text.group(1))
            if body:
                parts[0 if page_no % 4 == 0 else 1].append(body)
                page_no += 1
    out.mkdir(parents=True, exist_ok=True)
    for name, docs in zip(("desk_train", "desk_heldout"), parts):
        data = ("\n".join(docs) + "\n").encode("ascii")
        (out / f"{name}.txt.bz2").write_bytes(bz2.compress(data, 9))
        print(name, len(docs), "documents", len(data), "bytes")


if __name__ == "__main__":
    main(sys.argv)
