import json

from hypothesis import given
from hypothesis import strategies as st

from citeaudit.extract import (
    ExtractionResult,
    NormalizedCitation,
    Provider,
    RawResponse,
    extract_citations,
    parse_raw_response,
    window_before_marker,
)

U1 = "https://one.example/a"
U2 = "https://two.example/b"

_BODY = "Solar output varies by region. Panels degrade over time. See the report."
# annotation anchors: end of second sentence, end of body
_AFTER_TWO = _BODY.index(" See")  # 57 -> marker right after "time."
_AT_END = len(_BODY)
_AFTER_ONE = _BODY.index(" Panels")


def _sentences(result: ExtractionResult) -> list[str]:
    return [c.cited_sentence for c in result.citations]


def _urls(result: ExtractionResult) -> list[str]:
    return [c.source_url for c in result.citations]


class TestMarkerProviders:
    def test_openai_two_sentence_window(self):
        raw = RawResponse(
            "r1",
            Provider.OPENAI,
            _BODY,
            {"annotations": [{"url": U1, "start_index": _AFTER_TWO, "end_index": _AFTER_TWO + 1}]},
        )
        result = extract_citations(raw)
        assert _sentences(result) == ["Solar output varies by region. Panels degrade over time."]
        assert _urls(result) == [U1]
        assert result.malformed == 0

    def test_openai_marker_at_end_of_body(self):
        raw = RawResponse(
            "r1",
            Provider.OPENAI,
            _BODY,
            {"annotations": [{"url": U1, "start_index": _AT_END, "end_index": _AT_END}]},
        )
        assert _sentences(extract_citations(raw)) == [
            "Panels degrade over time. See the report."
        ]

    def test_window_shrinks_when_fewer_than_two_sentences(self):
        raw = RawResponse(
            "r1",
            Provider.XAI,
            _BODY,
            {"annotations": [{"url": U1, "start_index": _AFTER_ONE, "end_index": _AFTER_ONE}]},
        )
        assert _sentences(extract_citations(raw)) == ["Solar output varies by region."]

    def test_xai_markers_emitted_in_position_order(self):
        raw = RawResponse(
            "r1",
            Provider.XAI,
            _BODY,
            {
                "annotations": [
                    {"url": U2, "start_index": _AT_END, "end_index": _AT_END},
                    {"url": U1, "start_index": _AFTER_ONE, "end_index": _AFTER_ONE},
                ]
            },
        )
        result = extract_citations(raw)
        assert _urls(result) == [U1, U2]
        assert [c.ordinal for c in result.citations] == [0, 1]

    def test_perplexity_bracket_markers(self):
        raw = RawResponse(
            "r1",
            Provider.PERPLEXITY,
            "S1. S2.[1] S3.",
            {"citations": [U1]},
        )
        result = extract_citations(raw)
        assert _sentences(result) == ["S1. S2."]
        assert _urls(result) == [U1]

    def test_perplexity_multiple_markers(self):
        body = "S1. S2.[1] S3. And S4 is longer here.[2]"
        raw = RawResponse("r1", Provider.PERPLEXITY, body, {"citations": [U1, U2]})
        result = extract_citations(raw)
        # The second window includes the first marker's text verbatim: the
        # prefix "S2.[1] S3." parses as one sentence because ".[" is not a
        # sentence boundary.
        assert _sentences(result) == ["S1. S2.", "S2.[1] S3. And S4 is longer here."]
        assert _urls(result) == [U1, U2]

    def test_marker_index_out_of_range_skipped_and_counted(self):
        raw = RawResponse(
            "r1", Provider.PERPLEXITY, "S1. S2.[1] S3.[3]", {"citations": [U1]}
        )
        result = extract_citations(raw)
        assert _sentences(result) == ["S1. S2."]
        assert result.malformed == 1

    def test_zero_markers_yield_empty_list(self):
        raw = RawResponse("r1", Provider.PERPLEXITY, "No citations here at all.", {"citations": []})
        result = extract_citations(raw)
        assert result.citations == [] and result.malformed == 0

    def test_openai_empty_annotations(self):
        raw = RawResponse("r1", Provider.OPENAI, _BODY, {"annotations": []})
        assert extract_citations(raw).citations == []


class TestBlockProviders:
    def test_anthropic_last_two_from_block(self):
        raw = RawResponse(
            "r2",
            Provider.ANTHROPIC,
            "body text is never consulted",
            {"citations": [{"cited_text": "X. Y. Z.", "url": U1}]},
        )
        result = extract_citations(raw)
        assert _sentences(result) == ["Y. Z."]

    def test_anthropic_whole_block_when_shorter(self):
        raw = RawResponse(
            "r2",
            Provider.ANTHROPIC,
            "",
            {"citations": [{"cited_text": "Single sentence only.", "url": U1}]},
        )
        assert _sentences(extract_citations(raw)) == ["Single sentence only."]

    def test_anthropic_never_consults_body_text(self):
        block = {"citations": [{"cited_text": "Block sentence one. Block two.", "url": U1}]}
        a = extract_citations(RawResponse("r", Provider.ANTHROPIC, "AAA. BBB.", block))
        b = extract_citations(RawResponse("r", Provider.ANTHROPIC, "totally different", block))
        assert _sentences(a) == _sentences(b) == ["Block sentence one. Block two."]

    def test_google_support_times_chunks(self):
        raw = RawResponse(
            "r3",
            Provider.GOOGLE,
            "",
            {
                "grounding_chunks": [{"uri": U1}, {"uri": U2}],
                "grounding_supports": [
                    {
                        "segment_text": "Alpha beta. Gamma delta. Epsilon zeta.",
                        "chunk_indices": [0, 1],
                    }
                ],
            },
        )
        result = extract_citations(raw)
        assert _sentences(result) == ["Gamma delta. Epsilon zeta."] * 2
        assert _urls(result) == [U1, U2]

    def test_google_chunk_index_out_of_range(self):
        raw = RawResponse(
            "r3",
            Provider.GOOGLE,
            "",
            {
                "grounding_chunks": [{"uri": U1}],
                "grounding_supports": [
                    {"segment_text": "Alpha beta gamma.", "chunk_indices": [0, 5]}
                ],
            },
        )
        result = extract_citations(raw)
        assert _urls(result) == [U1]
        assert result.malformed == 1

    def test_block_with_missing_url_skipped(self):
        raw = RawResponse(
            "r2",
            Provider.ANTHROPIC,
            "",
            {"citations": [{"cited_text": "Valid text here."}, {"cited_text": "Keep me. Sure.", "url": U2}]},
        )
        result = extract_citations(raw)
        assert _urls(result) == [U2]
        assert result.malformed == 1


def test_provider_kinds():
    assert Provider.OPENAI.kind == "marker"
    assert Provider.XAI.kind == "marker"
    assert Provider.PERPLEXITY.kind == "marker"
    assert Provider.ANTHROPIC.kind == "block"
    assert Provider.GOOGLE.kind == "block"


def test_count_conservation_markers():
    body = "One two three. Four five six.[1] Seven eight.[2] Nine ten.[1]"
    raw = RawResponse("r", Provider.PERPLEXITY, body, {"citations": [U1, U2]})
    result = extract_citations(raw)
    assert len(result.citations) + result.malformed == 3
    assert result.malformed == 0


def test_urls_are_canonicalized_during_extraction():
    raw = RawResponse(
        "r",
        Provider.ANTHROPIC,
        "",
        {"citations": [{"cited_text": "Some cited sentence here.", "url": "https://EX.com/a?utm_source=openai&id=1"}]},
    )
    assert _urls(extract_citations(raw)) == ["https://ex.com/a?id=1"]


def test_container_shape_failure_counts_once():
    raw = RawResponse("r", Provider.GOOGLE, "", {"grounding_chunks": "nope"})
    result = extract_citations(raw)
    assert result.citations == [] and result.malformed == 1


def test_extraction_deterministic():
    raw = RawResponse(
        "r",
        Provider.OPENAI,
        _BODY,
        {"annotations": [{"url": U1, "start_index": _AFTER_TWO, "end_index": _AFTER_TWO}]},
    )
    assert extract_citations(raw) == extract_citations(raw)


def test_parse_raw_response_carries_metadata_and_forced_provider():
    row = {
        "response_id": "r9",
        "provider": "OpenAI",
        "body_text": "Hello there. Bye now.",
        "citation_payload": {"annotations": []},
        "query_id": "Q1",
        "model_short": "m",
        "query": "what is up?",
    }
    raw = parse_raw_response(row)
    assert raw.provider is Provider.OPENAI
    assert raw.metadata["query_id"] == "Q1"
    forced = parse_raw_response(row, forced_provider="xAI")
    assert forced.provider is Provider.XAI


@given(st.integers(min_value=0, max_value=len(_BODY)))
def test_window_never_exceeds_two_sentences(position):
    window = window_before_marker(_BODY, position)
    # the window text must be a suffix-aligned slice of the prefix
    assert window == "" or _BODY[:position].rstrip().endswith(window.rstrip())


def test_round_trip_through_jsonl_row():
    citation = NormalizedCitation("r", 0, "A sentence.", U1)
    row = json.loads(json.dumps(citation.__dict__))
    assert NormalizedCitation(**row) == citation
