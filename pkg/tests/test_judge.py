import json
from pathlib import Path

import httpx
import pytest

from citeaudit.judge import (
    BackendUnavailableError,
    HttpJudgeBackend,
    InsufficientAnnotatorsError,
    InvalidLabelError,
    MalformedOutputError,
    MockJudgeBackend,
    MockRule,
    RateLimiter,
    classify,
    judge_corpus,
    majority_vote,
    parse_verdict,
    validate_against_humans,
)
from citeaudit.prompts import (
    SYSTEM_PROMPTS,
    JudgeTask,
    MissingInputError,
    build_prompt,
    output_schema,
)

PROMPT_DIR = Path(__file__).parent / "data" / "prompts"
SNAPSHOTS = {
    JudgeTask.QI: "qi_system.txt",
    JudgeTask.SP: "sp_system.txt",
    JudgeTask.SD: "sd_system.txt",
    JudgeTask.ST: "st_system.txt",
    JudgeTask.ASF: "asf_system.txt",
}


class TestPrompts:
    @pytest.mark.parametrize("task", list(JudgeTask))
    def test_system_prompt_matches_snapshot_byte_for_byte(self, task):
        snapshot = (PROMPT_DIR / SNAPSHOTS[task]).read_bytes()
        assert SYSTEM_PROMPTS[task].encode("utf-8") == snapshot

    def test_qi_system_prompt_opening(self):
        system, user = build_prompt(JudgeTask.QI, {"query": "How much Vitamin A is in 1g of Fish Oil?"})
        assert system.startswith("You are a query intent classifier.")
        assert user == "<query>\nHow much Vitamin A is in 1g of Fish Oil?\n</query>"

    def test_asf_user_prompt_block_order(self):
        _, user = build_prompt(
            JudgeTask.ASF, {"cited_sentence": "claim", "source_content": "content"}
        )
        assert user.index("<cited_sentence>") < user.index("<source_content>")
        assert user == (
            "<cited_sentence>\nclaim\n</cited_sentence>\n\n"
            "<source_content>\ncontent\n</source_content>"
        )

    def test_sd_system_prompt_contains_medical_label(self):
        system, _ = build_prompt(JudgeTask.SD, {"source_url": "u", "source_content": "c"})
        assert "SD1 Medical/Health." in system

    def test_missing_input_raises(self):
        with pytest.raises(MissingInputError):
            build_prompt(JudgeTask.ASF, {"cited_sentence": "only one"})

    def test_output_schema_fields(self):
        schema = output_schema(JudgeTask.ST)
        assert schema["required"] == ["type_reasoning", "source_type"]
        assert schema["properties"]["source_type"]["enum"] == [
            "ST1", "ST2", "ST3", "ST4", "ST5", "ST6",
        ]


class TestParseVerdict:
    def test_direct_parse(self):
        verdict = parse_verdict('{"intent_reasoning": "because", "intent": "QI2"}', JudgeTask.QI)
        assert verdict.label == "QI2" and verdict.reasoning == "because"
        assert not verdict.unevaluable

    def test_asf_verdict_field(self):
        verdict = parse_verdict('{"asf_reasoning": "r", "verdict": "ASF5"}', JudgeTask.ASF)
        assert verdict.label == "ASF5"

    def test_invalid_label(self):
        with pytest.raises(InvalidLabelError):
            parse_verdict('{"intent_reasoning": "r", "intent": "QI7"}', JudgeTask.QI)

    def test_malformed_json(self):
        with pytest.raises(MalformedOutputError):
            parse_verdict("not json at all", JudgeTask.QI)

    def test_missing_label_field(self):
        with pytest.raises(MalformedOutputError):
            parse_verdict('{"intent_reasoning": "r"}', JudgeTask.QI)


class _ScriptedBackend:
    """Returns queued payloads in order, repeating the last one."""

    def __init__(self, payloads):
        self.payloads = list(payloads)
        self.calls = 0

    def complete(self, system_prompt, user_prompt, output_schema):
        self.calls += 1
        if len(self.payloads) > 1:
            return self.payloads.pop(0)
        return self.payloads[0]


class TestClassify:
    def test_mock_rule_hit(self):
        backend = MockJudgeBackend([MockRule("Vitamin", '{"intent_reasoning": "r", "intent": "QI1"}')])
        verdict = classify(JudgeTask.QI, {"query": "How much Vitamin A..."}, backend)
        assert verdict.label == "QI1" and verdict.attempts == 1

    def test_retry_then_success(self):
        backend = _ScriptedBackend(
            ["garbage", "also garbage", '{"intent_reasoning": "r", "intent": "QI3"}']
        )
        verdict = classify(JudgeTask.QI, {"query": "q"}, backend, retry_budget=3)
        assert verdict.label == "QI3" and verdict.attempts == 3

    def test_retry_exhaustion_is_unevaluable(self):
        backend = _ScriptedBackend(["garbage"])
        verdict = classify(JudgeTask.QI, {"query": "q"}, backend, retry_budget=3)
        assert verdict.unevaluable and verdict.label is None and verdict.attempts == 3
        assert backend.calls == 3

    def test_every_verdict_is_label_or_unevaluable(self):
        backend = MockJudgeBackend()
        for query in ("a", "b", "c", "d"):
            verdict = classify(JudgeTask.QI, {"query": query}, backend)
            assert (verdict.label is None) == verdict.unevaluable

    def test_content_truncated_to_cap(self):
        seen = {}

        class Spy:
            def complete(self, system_prompt, user_prompt, output_schema):
                seen["user"] = user_prompt
                return '{"purpose_reasoning": "r", "purpose": "SP2"}'

        verdict = classify(
            JudgeTask.SP,
            {"source_url": "https://e.x/", "source_content": "y" * 60_000},
            Spy(),
            content_cap=50_000,
        )
        assert verdict.truncated
        assert "y" * 50_000 in seen["user"]
        assert "y" * 50_001 not in seen["user"]

    def test_mock_default_is_deterministic(self):
        backend = MockJudgeBackend()
        first = classify(JudgeTask.SD, {"source_url": "u", "source_content": "c"}, backend)
        second = classify(JudgeTask.SD, {"source_url": "u", "source_content": "c"}, backend)
        assert first.label == second.label


class TestHttpBackend:
    def _backend(self, handler):
        transport = httpx.MockTransport(handler)
        client = httpx.Client(transport=transport)
        return HttpJudgeBackend("https://judge.example/v1/chat/completions", client=client)

    def test_round_trip(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["temperature"] == 0
            assert body["max_tokens"] == 4096
            assert body["response_format"]["type"] == "json_schema"
            content = '{"intent_reasoning": "r", "intent": "QI4"}'
            return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

        backend = self._backend(handler)
        verdict = classify(JudgeTask.QI, {"query": "compare a and b"}, backend)
        assert verdict.label == "QI4"

    def test_transport_error_surfaces(self):
        def handler(request):
            return httpx.Response(503, text="overloaded")

        backend = self._backend(handler)
        with pytest.raises(BackendUnavailableError):
            classify(JudgeTask.QI, {"query": "q"}, backend)


def test_rate_limiter_spaces_requests():
    import time

    limiter = RateLimiter(per_minute=6000)  # 100/s -> 10 ms spacing
    started = time.monotonic()
    for _ in range(12):
        limiter.acquire()
    elapsed = time.monotonic() - started
    # First call is free; the remaining 11 wait ~10 ms each.
    assert elapsed >= 0.09


class TestJudgeCorpus:
    def test_call_accounting(self):
        backend = MockJudgeBackend()
        result = judge_corpus(
            queries={"q1": "what?", "q2": "how?"},
            sources={"s1": "content one", "s2": "content two", "s3": "content three"},
            pairs={"c1": ("claim a", "s1"), "c2": ("claim b", "s2")},
            backend=backend,
        )
        assert result.calls_issued == {
            "query_level": 2,
            "source_level": 9,
            "pair_level": 2,
            "total": 13,
        }
        assert backend.calls == 13
        assert set(result.query_labels) == {"q1", "q2"}
        assert set(result.source_labels) == {"s1", "s2", "s3"}

    def test_deterministic_across_runs(self):
        def run():
            return judge_corpus(
                queries={"q": "question"},
                sources={"s": "source body"},
                pairs={"c": ("cited", "s")},
                backend=MockJudgeBackend(),
            )

        a, b = run(), run()
        assert a.query_labels == b.query_labels
        assert a.fidelity_labels == b.fidelity_labels
        assert {k: vars(v) for k, v in a.source_labels.items()} == {
            k: vars(v) for k, v in b.source_labels.items()
        }


class TestValidation:
    def test_majority_vote(self):
        assert majority_vote(["A", "A", "B"]) == "A"
        assert majority_vote(["A", "B", "C"]) is None
        assert majority_vote(["A", "B"]) is None

    def test_perfect_agreement(self):
        labels = ["A", "B", "A", "C", "B", "A"]
        rows = [[label] * 3 for label in labels]
        report = validate_against_humans(labels, rows)
        assert report.kappa_consensus == 1.0
        assert report.annotator_alpha == pytest.approx(1.0)
        assert report.raw_agreement == 1.0
        assert report.balanced_accuracy == 1.0
        assert report.n_ties_excluded == 0

    def test_hand_computed_kappa_fixture(self):
        # 90 agreements / 10 disagreements with balanced two-class marginals:
        # p_o = 0.9, p_e = 0.5, kappa = 0.8.
        gold = ["A"] * 45 + ["B"] * 45 + ["A"] * 5 + ["B"] * 5
        judge = ["A"] * 45 + ["B"] * 45 + ["B"] * 5 + ["A"] * 5
        rows = [[g] * 3 for g in gold]
        report = validate_against_humans(judge, rows)
        assert report.kappa_consensus == pytest.approx(0.8)
        assert report.raw_agreement == pytest.approx(0.9)

    def test_ties_excluded_and_counted(self):
        judge = ["A", "B", "C"]
        rows = [["A", "A", "B"], ["A", "B", "C"], ["C", "C", "A"]]
        report = validate_against_humans(judge, rows)
        assert report.n_ties_excluded == 1
        assert report.n_used == 2

    def test_insufficient_annotators(self):
        with pytest.raises(InsufficientAnnotatorsError):
            validate_against_humans(["A"], [["A"]])
