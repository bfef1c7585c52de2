"""Rule-based sentence boundary detection.

A boundary is a terminal punctuation mark (. ! ?), optionally followed by
closing quotes or brackets, that is followed by whitespace and then a
capitalized word, a digit, or an opening quote (or by end of text). For
periods, the word immediately before the mark must not be a known
abbreviation or a single letter (initials). Records with explicit sentence
boundaries bypass this splitter entirely.
"""
from __future__ import annotations

_TERMINALS = ".!?"
_CLOSERS = "\"'’”)]»"
_OPENERS = "\"'‘“([«"

# Lowercase, trailing period stripped. Dotted forms keep internal dots.
ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof rev gen sen rep gov sgt col capt lt cmdr adm hon
    sr jr st ave blvd rd mt ft
    vs etc al inc ltd co corp dept univ assn bros
    e.g i.e cf approx est min max no nos fig figs eq eqs sec secs ch chs
    jan feb mar apr jun jul aug sep sept oct nov dec
    u.s u.k u.n e.u a.m p.m a.d b.c ph.d m.d b.a m.a d.c
    """.split()
)


def _word_before(text: str, pos: int) -> str:
    """The non-space run ending just before text[pos], lowercased."""
    start = pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:pos].lower()


def _is_boundary(text: str, mark: int) -> bool:
    ch = text[mark]
    after = mark + 1
    while after < len(text) and text[after] in _CLOSERS:
        after += 1
    if after >= len(text):
        return True
    if not text[after].isspace():
        return False
    follower = after
    while follower < len(text) and text[follower].isspace():
        follower += 1
    if follower >= len(text):
        return True
    nxt = text[follower]
    if not (nxt.isupper() or nxt.isdigit() or nxt in _OPENERS):
        return False
    if ch == ".":
        word = _word_before(text, mark).lstrip("(\"'‘“[")
        if word in ABBREVIATIONS:
            return False
        if len(word) == 1 and word.isalpha():
            return False
    return True


def _boundary_positions(text: str) -> list[int]:
    cuts = []
    i = 0
    while i < len(text):
        if text[i] in _TERMINALS and _is_boundary(text, i):
            end = i + 1
            while end < len(text) and text[end] in _CLOSERS:
                end += 1
            cuts.append(end)
            i = end
        else:
            i += 1
    return cuts


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Sentence intervals (half-open, whitespace-trimmed).

    The intervals are sorted, non-overlapping, and jointly cover every
    non-whitespace character of the text.
    """
    segments: list[tuple[int, int]] = []
    start = 0
    for cut in _boundary_positions(text) + [len(text)]:
        if cut <= start:
            continue
        lo, hi = start, cut
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            segments.append((lo, hi))
        start = cut
    return segments


def sentence_texts(text: str) -> list[str]:
    return [text[s:e] for s, e in split_sentences(text)]
