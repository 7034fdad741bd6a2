"""Deterministic rule-based sentence segmentation.

Splits on terminal punctuation (. ! ?) followed by optional closing quotes or
brackets, whitespace, and an uppercase letter, digit, or opening quote. A
fixed abbreviation stop-list suppresses false boundaries after common titles
and Latin abbreviations. Conservative by design: ambiguous cases stay joined.
"""

from __future__ import annotations

from dataclasses import dataclass

TERMINALS = ".!?"
CLOSERS = "\"'”’)]}"
OPENERS = "\"'“‘([{"

#: Lowercased tokens (letters and internal dots) that never end a sentence.
ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr",
        "vs", "etc", "cf", "al", "approx",
        "fig", "figs", "eq", "eqs", "sec", "ch", "pp",
        "e.g", "i.e", "u.s", "u.k", "a.m", "p.m",
    }
)


@dataclass(frozen=True)
class SentenceSpan:
    """Half-open [start, end) character span of one sentence."""

    start: int
    end: int
    text: str


def _is_abbreviation(text: str, dot_index: int) -> bool:
    m = dot_index - 1
    while m >= 0 and (text[m].isalpha() or text[m] == "."):
        m -= 1
    token = text[m + 1 : dot_index].strip(".")
    return token.lower() in ABBREVIATIONS


def _boundary_after(text: str, i: int) -> int | None:
    """If a sentence boundary sits at terminal text[i], return the exclusive
    end of the sentence (past any closing quotes); otherwise None."""
    n = len(text)
    if text[i] == "." and i + 1 < n and text[i + 1] == ".":
        return None  # interior dot of an ellipsis run
    j = i + 1
    while j < n and text[j] in CLOSERS:
        j += 1
    if j < n and not text[j].isspace():
        return None  # mid-token punctuation: 3.14, example.com, v1.2
    if text[i] == "." and _is_abbreviation(text, i):
        return None
    k = j
    while k < n and text[k].isspace():
        k += 1
    if k == n:
        return j
    nxt = text[k]
    if nxt.isupper() or nxt.isdigit() or nxt in OPENERS:
        return j
    return None


def segment_sentences(text: str) -> list[SentenceSpan]:
    """Split text into ordered, disjoint sentence spans.

    Spans cover every non-whitespace character; whitespace between sentences
    is excluded. Empty or all-whitespace input yields an empty list.
    """
    spans: list[SentenceSpan] = []
    n = len(text)
    start = 0
    while start < n and text[start].isspace():
        start += 1
    i = start
    while i < n:
        if text[i] in TERMINALS:
            end = _boundary_after(text, i)
            if end is not None:
                spans.append(SentenceSpan(start, end, text[start:end]))
                start = end
                while start < n and text[start].isspace():
                    start += 1
                i = start
                continue
        i += 1
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append(SentenceSpan(start, end, text[start:end]))
    return spans
