"""Deterministic tokenization, sentence segmentation, syllable counting,
and vocabulary construction shared by every downstream module.

Word tokens are lowercased at tokenization time; original casing survives
only in ``Document.body`` so the adversarial transforms can still see it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DataError

UNK = "<unk>"

# Letters/digits form words; apostrophes are word-internal only, so a lone
# quote stays punctuation.
_WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*", re.UNICODE)

_VOWELS = set("aeiouy")

# Trailing-word guards for sentence splitting, all lowercase with the
# final period included.
_ABBREVIATIONS = {
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.",
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "fig.", "al.", "no.",
}

_TERMINATORS = ".!?"


@dataclass(frozen=True)
class Token:
    surface: str
    is_word: bool

    def __post_init__(self) -> None:
        if not self.surface:
            raise DataError("token surface must be non-empty")


def token_spans(text: str) -> list[tuple[int, int, bool]]:
    """Return (start, end, is_word) spans covering every token in *text*.

    Word spans come from the word regex; every other non-space character
    is its own punctuation span. Spans are disjoint and ordered.
    """
    spans: list[tuple[int, int, bool]] = []
    pos = 0
    for m in _WORD_RE.finditer(text):
        for i in range(pos, m.start()):
            if not text[i].isspace():
                spans.append((i, i + 1, False))
        spans.append((m.start(), m.end(), True))
        pos = m.end()
    for i in range(pos, len(text)):
        if not text[i].isspace():
            spans.append((i, i + 1, False))
    return spans


def tokenize(text: str) -> list[Token]:
    """Segment *text* into lowercased word tokens and punctuation tokens."""
    return [
        Token(surface=text[a:b].lower(), is_word=w)
        for a, b, w in token_spans(text)
    ]


def word_tokens(text: str) -> list[str]:
    """Lowercased word surfaces only, in order."""
    return [t.surface for t in tokenize(text) if t.is_word]


def split_sentences(text: str) -> list[str]:
    """Split on ``.``, ``!``, ``?`` followed by space-or-end, guarding a
    small abbreviation list. Delimiters are retained; no empty sentences.
    """
    sentences: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        if i + 1 < len(text) and not text[i + 1].isspace():
            continue
        if ch == ".":
            # Walk back to the preceding whitespace to recover the word the
            # period is attached to, dots included ("e.g." ends two chunks).
            j = i
            while j > 0 and not text[j - 1].isspace():
                j -= 1
            if text[j : i + 1].lower() in _ABBREVIATIONS:
                continue
        chunk = text[start : i + 1].strip()
        if chunk:
            sentences.append(chunk)
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def count_syllables(word: str) -> int:
    """Heuristic syllable count: maximal vowel groups (a,e,i,o,u,y), minus
    one for a terminal silent 'e' when more than one group, floor 1.
    """
    w = word.lower()
    groups = 0
    in_group = False
    for ch in w:
        if ch in _VOWELS:
            if not in_group:
                groups += 1
                in_group = True
        else:
            in_group = False
    if groups > 1 and w.endswith("e"):
        groups -= 1
    return max(groups, 1)


@dataclass(frozen=True)
class Vocabulary:
    """Token surface -> contiguous integer id, with corpus frequencies.

    Ids are a bijection onto [0, size); UNK is always present, last.
    ``frequencies[UNK]`` aggregates every occurrence below min_count.
    """

    word_to_id: dict[str, int]
    frequencies: dict[str, int]
    unk_id: int = field(init=False)

    def __post_init__(self) -> None:
        ids = sorted(self.word_to_id.values())
        if ids != list(range(len(self.word_to_id))):
            raise DataError("vocabulary ids must be contiguous from 0")
        if UNK not in self.word_to_id:
            raise DataError("vocabulary must contain UNK")
        object.__setattr__(self, "unk_id", self.word_to_id[UNK])

    @property
    def size(self) -> int:
        return len(self.word_to_id)

    def id_of(self, surface: str) -> int:
        """Id of *surface*, or the UNK id when out of vocabulary."""
        return self.word_to_id.get(surface, self.unk_id)

    def __contains__(self, surface: str) -> bool:
        return surface in self.word_to_id and surface != UNK

    def surfaces(self) -> list[str]:
        """All surfaces ordered by id."""
        out = [""] * self.size
        for w, i in self.word_to_id.items():
            out[i] = w
        return out


def is_word_surface(surface: str) -> bool:
    """True when the surface came from a word token (has an alnum char)."""
    return any(ch.isalnum() for ch in surface)


def build_vocab(texts: list[str], min_count: int = 1) -> Vocabulary:
    """Count every token surface in *texts*; surfaces with frequency >=
    min_count get ids ordered by (frequency desc, surface asc), all others
    fold into UNK. Punctuation marks are counted as ordinary surfaces.
    """
    if min_count < 1:
        raise DataError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            counts[tok.surface] = counts.get(tok.surface, 0) + 1
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (w for w, c in counts.items() if c >= min_count),
        key=lambda w: (-counts[w], w),
    )
    word_to_id = {w: i for i, w in enumerate(kept)}
    word_to_id[UNK] = len(kept)
    frequencies = {w: counts[w] for w in kept}
    frequencies[UNK] = sum(c for w, c in counts.items() if w not in word_to_id)
    return Vocabulary(word_to_id=word_to_id, frequencies=frequencies)
