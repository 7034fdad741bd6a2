"""Citation extraction for the five provider response formats.

Marker providers (OpenAI, xAI, Perplexity) attach citations to positions in
the response body; the cited sentence is the last two sentences ending at the
marker. Block providers (Anthropic, Google) return the cited text directly;
the cited sentence is the last two sentences of the block.

Expected ``citation_payload`` shapes:

* OpenAI / xAI: ``{"annotations": [{"url": ..., "start_index": int,
  "end_index": int}]}`` with indices into ``body_text``; the marker anchor is
  ``start_index``.
* Perplexity: ``{"citations": ["url1", ...]}`` with literal ``[N]`` markers in
  ``body_text`` (1-based into the array).
* Anthropic: ``{"citations": [{"cited_text": ..., "url": ...}]}``.
* Google: ``{"grounding_chunks": [{"uri": ...}], "grounding_supports":
  [{"segment_text": ..., "chunk_indices": [int, ...]}]}``; one pair per
  (support, chunk index).

Malformed entries are skipped and counted, never aborting a batch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

from .sentences import segment_sentences
from .urls import InvalidUrlError, canonicalize_url

SENTENCE_WINDOW = 2

_PERPLEXITY_MARKER = re.compile(r"\[(\d+)\]")


class Provider(str, Enum):
    OPENAI = "OpenAI"
    XAI = "xAI"
    PERPLEXITY = "Perplexity"
    ANTHROPIC = "Anthropic"
    GOOGLE = "Google"

    @property
    def kind(self) -> str:
        return "marker" if self in _MARKER_PROVIDERS else "block"


_MARKER_PROVIDERS = frozenset({Provider.OPENAI, Provider.XAI, Provider.PERPLEXITY})


class MalformedPayloadError(ValueError):
    """A citation entry is structurally unusable (bad index, missing URL)."""


@dataclass(frozen=True)
class RawResponse:
    response_id: str
    provider: Provider
    body_text: str
    citation_payload: dict[str, Any]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.response_id:
            raise ValueError("response_id must be nonempty")


@dataclass(frozen=True)
class NormalizedCitation:
    response_id: str
    ordinal: int
    cited_sentence: str
    source_url: str


@dataclass
class ExtractionResult:
    citations: list[NormalizedCitation]
    malformed: int = 0


def _last_sentences(text: str, limit: int = SENTENCE_WINDOW) -> str:
    """The trailing ``limit`` sentences of text, or all of it if shorter."""
    spans = segment_sentences(text)
    if not spans:
        return ""
    window = spans[-limit:]
    return text[window[0].start : window[-1].end]


def window_before_marker(body_text: str, position: int) -> str:
    """Cited sentence for a marker at character ``position``: the last two
    sentences of the text preceding the marker (fewer if unavailable)."""
    if position < 0 or position > len(body_text):
        raise MalformedPayloadError(f"marker position {position} outside body")
    return _last_sentences(body_text[:position])


def _require_url(value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedPayloadError("missing URL")
    try:
        return canonicalize_url(value)
    except InvalidUrlError as exc:
        raise MalformedPayloadError(str(exc)) from exc


# Extractors yield (cited_sentence, url) per well-formed entry and None per
# malformed entry; a container-level shape problem raises instead.


def _iter_annotation_pairs(raw: RawResponse) -> Iterator[tuple[str, str] | None]:
    annotations = raw.citation_payload.get("annotations")
    if not isinstance(annotations, list):
        raise MalformedPayloadError("payload missing annotations list")
    keyed = []
    for ann in annotations:
        start = ann.get("start_index") if isinstance(ann, dict) else None
        keyed.append((start if isinstance(start, int) else -1, ann))
    keyed.sort(key=lambda item: item[0])
    for start, ann in keyed:
        try:
            if start < 0:
                raise MalformedPayloadError("annotation missing start_index")
            yield window_before_marker(raw.body_text, start), _require_url(ann.get("url"))
        except MalformedPayloadError:
            yield None


def _iter_perplexity_pairs(raw: RawResponse) -> Iterator[tuple[str, str] | None]:
    urls = raw.citation_payload.get("citations")
    if not isinstance(urls, list):
        raise MalformedPayloadError("payload missing citations array")
    for match in _PERPLEXITY_MARKER.finditer(raw.body_text):
        index = int(match.group(1))
        try:
            if index < 1 or index > len(urls):
                raise MalformedPayloadError(f"marker [{index}] outside citations array")
            yield window_before_marker(raw.body_text, match.start()), _require_url(urls[index - 1])
        except MalformedPayloadError:
            yield None


def _iter_anthropic_pairs(raw: RawResponse) -> Iterator[tuple[str, str] | None]:
    blocks = raw.citation_payload.get("citations")
    if not isinstance(blocks, list):
        raise MalformedPayloadError("payload missing citations list")
    for block in blocks:
        try:
            if not isinstance(block, dict) or not isinstance(block.get("cited_text"), str):
                raise MalformedPayloadError("citation block missing cited_text")
            yield _last_sentences(block["cited_text"]), _require_url(block.get("url"))
        except MalformedPayloadError:
            yield None


def _iter_google_pairs(raw: RawResponse) -> Iterator[tuple[str, str] | None]:
    chunks = raw.citation_payload.get("grounding_chunks")
    supports = raw.citation_payload.get("grounding_supports")
    if not isinstance(chunks, list) or not isinstance(supports, list):
        raise MalformedPayloadError("payload missing grounding chunks/supports")
    for support in supports:
        if not isinstance(support, dict) or not isinstance(support.get("segment_text"), str):
            yield None
            continue
        indices = support.get("chunk_indices")
        if not isinstance(indices, list) or not indices:
            yield None
            continue
        sentence = _last_sentences(support["segment_text"])
        for index in indices:
            try:
                if not isinstance(index, int) or index < 0 or index >= len(chunks):
                    raise MalformedPayloadError(f"chunk index {index} out of range")
                chunk = chunks[index]
                if not isinstance(chunk, dict):
                    raise MalformedPayloadError("grounding chunk is not an object")
                yield sentence, _require_url(chunk.get("uri"))
            except MalformedPayloadError:
                yield None


_EXTRACTORS = {
    Provider.OPENAI: _iter_annotation_pairs,
    Provider.XAI: _iter_annotation_pairs,
    Provider.PERPLEXITY: _iter_perplexity_pairs,
    Provider.ANTHROPIC: _iter_anthropic_pairs,
    Provider.GOOGLE: _iter_google_pairs,
}


def extract_citations(raw: RawResponse) -> ExtractionResult:
    """Normalize every citation in a response to (cited_sentence, source_url).

    Output order follows appearance order (marker position for marker
    providers, payload order for block providers). Malformed entries and
    entries with an empty sentence window are dropped and counted; a payload
    whose container shape is wrong yields no citations and one malformed
    count. Deterministic for a fixed input.
    """
    try:
        entries = list(_EXTRACTORS[Provider(raw.provider)](raw))
    except MalformedPayloadError:
        return ExtractionResult(citations=[], malformed=1)
    citations: list[NormalizedCitation] = []
    malformed = 0
    for entry in entries:
        if entry is None:
            malformed += 1
            continue
        sentence, url = entry
        if not sentence:
            malformed += 1
            continue
        citations.append(
            NormalizedCitation(
                response_id=raw.response_id,
                ordinal=len(citations),
                cited_sentence=sentence,
                source_url=url,
            )
        )
    return ExtractionResult(citations=citations, malformed=malformed)


def parse_raw_response(row: dict[str, Any], forced_provider: str | None = None) -> RawResponse:
    """Build a RawResponse from one line-delimited input record."""
    provider = Provider(forced_provider or row["provider"])
    metadata = {
        key: row[key]
        for key in ("query_id", "model_short", "site", "category", "query")
        if key in row
    }
    return RawResponse(
        response_id=str(row["response_id"]),
        provider=provider,
        body_text=row.get("body_text", "") or "",
        citation_payload=row.get("citation_payload") or {},
        metadata=metadata,
    )
