"""Tokenization, content-word filtering, n-grams, and span index algebra.

Tokenization rule table (pinned; bit-exact across runs and platforms):

1. Split on Unicode whitespace.
2. Within each chunk, peel leading and trailing punctuation/symbol
   characters one at a time as single-character tokens.
3. Hyphenated words stay whole ("state-of-the-art" is one token).
4. Contractions split at the clitic: "don't" -> "do" + "n't";
   "agency's" -> "agency" + "'s". Recognized clitics: n't, 's, 'm, 'd,
   'll, 're, 've (straight or curly apostrophe). Other internal
   apostrophes stay put ("o'clock" is one token).
5. Surfaces are stored verbatim; lowercasing happens only in comparisons.

Content-word filtering drops tokens whose lowercased surface is in the
shipped stopword list (data/stopwords_v1.txt) or consists of punctuation
and symbol characters only. No stemming, no lemmatization, anywhere.
"""
from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence

from .errors import UsageError, ValidationError

STOPWORDS_FILE = "stopwords_v1.txt"

_APOSTROPHES = ("'", "’")
_CLITICS = ("'s", "'m", "'d", "'ll", "'re", "'ve")


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizedText:
    """A text with its token surfaces and character ranges.

    Token ranges are half-open, non-overlapping, strictly increasing, and
    slicing `raw` by a range reproduces the surface verbatim.
    """

    raw: str
    tokens: tuple[Token, ...]
    owner: Optional[str] = None

    def __post_init__(self):
        prev_end = 0
        for tok in self.tokens:
            if not 0 <= tok.start < tok.end <= len(self.raw):
                raise ValidationError(
                    f"token range ({tok.start}, {tok.end}) outside text of length {len(self.raw)}"
                )
            if tok.start < prev_end:
                raise ValidationError(
                    f"token range ({tok.start}, {tok.end}) overlaps its predecessor"
                )
            if self.raw[tok.start : tok.end] != tok.surface:
                raise ValidationError(f"token surface {tok.surface!r} does not match raw slice")
            prev_end = tok.end

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [tok.surface for tok in self.tokens]


@dataclass(frozen=True)
class SpanFragments:
    """A possibly incontiguous span: sorted, disjoint half-open intervals.

    `owner` identifies which text the character offsets index into.
    """

    fragments: tuple[tuple[int, int], ...]
    owner: Optional[str] = None

    def __post_init__(self):
        if not self.fragments:
            raise ValidationError(f"span of {self.owner!r} has no fragments")
        prev_end = None
        for start, end in self.fragments:
            if start < 0 or end <= start:
                raise ValidationError(
                    f"fragment ({start}, {end}) of {self.owner!r} is empty or negative"
                )
            if prev_end is not None and start < prev_end:
                raise ValidationError(
                    f"fragment ({start}, {end}) of {self.owner!r} overlaps its predecessor"
                )
            prev_end = end

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]], owner: Optional[str] = None) -> "SpanFragments":
        """Build from unordered (start, end) pairs, sorting by start."""
        frags = tuple(sorted((int(s), int(e)) for s, e in pairs))
        return cls(fragments=frags, owner=owner)

    def validate_within(self, text_length: int) -> None:
        for start, end in self.fragments:
            if end > text_length:
                raise ValidationError(
                    f"fragment ({start}, {end}) of {self.owner!r} exceeds text length {text_length}"
                )

    @property
    def start(self) -> int:
        return self.fragments[0][0]

    @property
    def end(self) -> int:
        return self.fragments[-1][1]


@dataclass(frozen=True)
class TokenIndexSet:
    """Token positions of a span within one tokenized text."""

    indices: frozenset[int]
    content_only: bool
    owner: Optional[str] = field(default=None, compare=False)


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def is_punctuation(surface: str) -> bool:
    """True when every character is punctuation or a symbol."""
    return bool(surface) and all(_is_punct_char(ch) for ch in surface)


def _split_core(core: str, offset: int) -> list[Token]:
    """Apply the contraction rules to a punctuation-free-edged chunk."""
    lower = core.lower()
    for apo in _APOSTROPHES:
        nt = "n" + apo + "t"
        if len(core) > 3 and lower.endswith(nt):
            cut = len(core) - 3
            return [Token(core[:cut], offset, offset + cut), Token(core[cut:], offset + cut, offset + len(core))]
    for clitic in _CLITICS:
        for apo in _APOSTROPHES:
            suffix = apo + clitic[1:]
            if len(core) > len(suffix) and lower.endswith(suffix):
                cut = len(core) - len(suffix)
                return [
                    Token(core[:cut], offset, offset + cut),
                    Token(core[cut:], offset + cut, offset + len(core)),
                ]
    return [Token(core, offset, offset + len(core))]


def _split_chunk(chunk: str, offset: int) -> list[Token]:
    left = 0
    right = len(chunk)
    leading: list[Token] = []
    trailing: list[Token] = []
    while left < right and _is_punct_char(chunk[left]):
        leading.append(Token(chunk[left], offset + left, offset + left + 1))
        left += 1
    while right > left and _is_punct_char(chunk[right - 1]):
        trailing.append(Token(chunk[right - 1], offset + right - 1, offset + right))
        right -= 1
    trailing.reverse()
    middle = _split_core(chunk[left:right], offset + left) if left < right else []
    return leading + middle + trailing


def tokenize(text: str, owner: Optional[str] = None) -> TokenizedText:
    """Tokenize per the module rule table. Empty text yields zero tokens."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.extend(_split_chunk(text[i:j], i))
        i = j
    return TokenizedText(raw=text, tokens=tuple(tokens), owner=owner)


# Tokenization is pure; topics re-tokenize the same documents many times.
cached_tokenize = lru_cache(maxsize=2048)(tokenize)


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """The pinned lowercase stopword list shipped with the package."""
    data = resources.files("alignkit").joinpath("data", STOPWORDS_FILE).read_text("utf-8")
    return frozenset(line for line in data.splitlines() if line)


def is_content_word(surface: str, stopword_set: Optional[frozenset[str]] = None) -> bool:
    words = stopwords() if stopword_set is None else stopword_set
    return not is_punctuation(surface) and surface.lower() not in words


def token_indices(
    span: SpanFragments,
    text: TokenizedText,
    content_only: bool = False,
    stopword_set: Optional[frozenset[str]] = None,
) -> TokenIndexSet:
    """Indices of tokens whose character range overlaps any span fragment.

    With content_only, stopword and pure-punctuation tokens are dropped.
    """
    if text.owner is not None and span.owner != text.owner:
        raise UsageError(f"span indexes {span.owner!r} but text is {text.owner!r}")
    span.validate_within(len(text.raw))
    hits: set[int] = set()
    for start, end in span.fragments:
        for idx, tok in enumerate(text.tokens):
            if tok.start < end and start < tok.end:
                hits.add(idx)
            elif tok.start >= end:
                break
    if content_only:
        hits = {i for i in hits if is_content_word(text.tokens[i].surface, stopword_set)}
    return TokenIndexSet(indices=frozenset(hits), content_only=content_only, owner=text.owner or span.owner)


def iou(a: TokenIndexSet, b: TokenIndexSet) -> float:
    """Intersection-over-union of two token index sets.

    Both empty -> 1.0 (two contentless spans are vacuously identical);
    exactly one empty -> 0.0.
    """
    if a.owner != b.owner:
        raise UsageError(f"index sets reference different texts: {a.owner!r} vs {b.owner!r}")
    if not a.indices and not b.indices:
        return 1.0
    union = a.indices | b.indices
    if not union:
        return 1.0
    return len(a.indices & b.indices) / len(union)


def ngrams(surfaces: Sequence[str], n: int) -> Counter:
    """Lowercased sliding-window n-grams as a multiset."""
    if n < 1:
        raise UsageError(f"n-gram order must be >= 1, got {n}")
    lowered = [s.lower() for s in surfaces]
    if len(lowered) < n:
        return Counter()
    return Counter(tuple(lowered[i : i + n]) for i in range(len(lowered) - n + 1))


def ngram_coverage(target: Counter, source: Counter) -> float:
    """Percentage of target n-grams that also appear in source (clipped).

    Returns a value in [0, 100]; an empty target yields 0.
    """
    total = sum(target.values())
    if total == 0:
        return 0.0
    covered = sum(min(count, source[gram]) for gram, count in target.items())
    return 100.0 * covered / total


def merge_fragments(fragments: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    """Union of intervals merged into maximal half-open intervals.

    Touching intervals merge: (0, 4) and (4, 8) become (0, 8).
    """
    ordered = sorted((int(s), int(e)) for s, e in fragments)
    merged: list[tuple[int, int]] = []
    for start, end in ordered:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return tuple(merged)


def render_span(text: str, fragments: Iterable[Sequence[int]]) -> str:
    """Slice each fragment from the source and join with single spaces."""
    return " ".join(text[int(s) : int(e)] for s, e in fragments)
