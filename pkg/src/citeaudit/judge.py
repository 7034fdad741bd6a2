"""Judge orchestration: prompt dispatch, verdict parsing, retries, validation.

A backend is anything with ``complete(system_prompt, user_prompt,
output_schema) -> str``; the HTTP client and the deterministic mock satisfy
the same contract, so pipelines are testable offline. Classification runs at
temperature 0 with a 4,096-token output limit and strict JSON output.

Every classification ends in exactly one of two states: a valid taxonomy
label, or unevaluable (malformed/invalid output surviving the retry budget).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx

from . import stats
from .prompts import (
    TASK_LABELS,
    TASK_OUTPUT_FIELDS,
    JudgeTask,
    build_prompt,
    output_schema,
)

DEFAULT_RETRY_BUDGET = 3
DEFAULT_MAX_OUTPUT_TOKENS = 4096
DEFAULT_JUDGE_MODEL = "gpt-4o-mini-2024-07-18"  # configuration, not code
API_KEY_ENV_VAR = "CITEAUDIT_JUDGE_API_KEY"


class MalformedOutputError(ValueError):
    """Backend payload is not parseable strict JSON with required fields."""


class InvalidLabelError(ValueError):
    """Backend returned a label outside the task's taxonomy."""


class BackendUnavailableError(RuntimeError):
    """Transport-level failure talking to the judge backend."""


@dataclass
class JudgeVerdict:
    task: JudgeTask
    label: str | None
    reasoning: str
    raw_payload: str
    unevaluable: bool = False
    attempts: int = 1
    truncated: bool = False


class JudgeBackend(Protocol):
    def complete(self, system_prompt: str, user_prompt: str, output_schema: dict) -> str: ...


class RateLimiter:
    """Token bucket holding at most one token: requests are evenly spaced at
    ``per_minute`` / 60 per second, blocking callers until a token is free."""

    def __init__(self, per_minute: float) -> None:
        if per_minute <= 0:
            raise ValueError("per_minute must be positive")
        self._capacity = 1.0
        self._tokens = 1.0
        self._rate = per_minute / 60.0
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._stamp) * self._rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                needed = (1.0 - self._tokens) / self._rate
            time.sleep(needed)


class HttpJudgeBackend:
    """Chat-completions style HTTPS backend with structured output."""

    def __init__(
        self,
        endpoint: str,
        model: str = DEFAULT_JUDGE_MODEL,
        api_key: str | None = None,
        timeout: float = 120.0,
        rate_limit_per_minute: float | None = None,
        max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
        client: httpx.Client | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR)
        self.max_output_tokens = max_output_tokens
        self._limiter = RateLimiter(rate_limit_per_minute) if rate_limit_per_minute else None
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, system_prompt: str, user_prompt: str, output_schema: dict) -> str:
        if self._limiter is not None:
            self._limiter.acquire()
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": 0,
            "max_tokens": self.max_output_tokens,
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": "classification", "strict": True, "schema": output_schema},
            },
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(self.endpoint, json=body, headers=headers)
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailableError(str(exc)) from exc


@dataclass
class MockRule:
    contains: str
    payload: str


class MockJudgeBackend:
    """Deterministic offline backend.

    Rules match on a substring of the user prompt; the first match wins and
    its payload is returned verbatim (valid or garbage, so retry paths are
    testable). Without a match, a valid payload is synthesized with a label
    chosen by a stable hash of the prompt pair.
    """

    def __init__(self, rules: Sequence[MockRule] = ()) -> None:
        self.rules = list(rules)
        self.calls = 0

    @classmethod
    def from_rule_file(cls, path: str) -> "MockJudgeBackend":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        rules = []
        for entry in raw:
            payload = entry["payload"]
            if not isinstance(payload, str):
                payload = json.dumps(payload)
            rules.append(MockRule(contains=entry["contains"], payload=payload))
        return cls(rules)

    def complete(self, system_prompt: str, user_prompt: str, output_schema: dict) -> str:
        self.calls += 1
        for rule in self.rules:
            if rule.contains in user_prompt:
                return rule.payload
        labels = output_schema["properties"][_label_field(output_schema)]["enum"]
        digest = hashlib.sha256(user_prompt.encode("utf-8")).digest()
        label = labels[digest[0] % len(labels)]
        reasoning_field = _reasoning_field(output_schema)
        return json.dumps(
            {reasoning_field: "deterministic mock verdict", _label_field(output_schema): label}
        )


def _label_field(schema: dict) -> str:
    for name, spec in schema["properties"].items():
        if "enum" in spec:
            return name
    raise KeyError("schema has no enum field")


def _reasoning_field(schema: dict) -> str:
    for name, spec in schema["properties"].items():
        if "enum" not in spec:
            return name
    raise KeyError("schema has no reasoning field")


def parse_verdict(raw_payload: str, task: JudgeTask) -> JudgeVerdict:
    """Parse a strict-JSON verdict; validates label membership for the task."""
    reasoning_field, label_field = TASK_OUTPUT_FIELDS[task]
    try:
        data = json.loads(raw_payload)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedOutputError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedOutputError("payload is not a JSON object")
    if label_field not in data:
        raise MalformedOutputError(f"missing field {label_field!r}")
    label = data[label_field]
    if not isinstance(label, str) or label not in TASK_LABELS[task]:
        raise InvalidLabelError(f"{label!r} is not a valid {task.value} label")
    reasoning = data.get(reasoning_field, "")
    if not isinstance(reasoning, str):
        raise MalformedOutputError(f"field {reasoning_field!r} is not a string")
    return JudgeVerdict(task=task, label=label, reasoning=reasoning, raw_payload=raw_payload)


def classify(
    task: JudgeTask,
    inputs: dict[str, str],
    backend: JudgeBackend,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    content_cap: int = 50_000,
) -> JudgeVerdict:
    """Run one classification with retries on malformed/invalid output.

    ``source_content`` is truncated head-only to the crawl content cap before
    prompting; the verdict records whether truncation happened. Exhausting
    the retry budget yields an unevaluable verdict rather than an error;
    transport failures (BackendUnavailableError) surface to the caller.
    """
    prepared = dict(inputs)
    truncated = False
    content = prepared.get("source_content")
    if isinstance(content, str) and len(content) > content_cap:
        prepared["source_content"] = content[:content_cap]
        truncated = True

    system_prompt, user_prompt = build_prompt(task, prepared)
    schema = output_schema(task)
    raw = ""
    for attempt in range(1, retry_budget + 1):
        raw = backend.complete(system_prompt, user_prompt, schema)
        try:
            verdict = parse_verdict(raw, task)
        except (MalformedOutputError, InvalidLabelError):
            continue
        verdict.attempts = attempt
        verdict.truncated = truncated
        return verdict
    return JudgeVerdict(
        task=task,
        label=None,
        reasoning="",
        raw_payload=raw,
        unevaluable=True,
        attempts=retry_budget,
        truncated=truncated,
    )


@dataclass
class SourceLabels:
    purpose: str | None
    domain: str | None
    source_type: str | None
    unevaluable: bool


@dataclass
class CorpusJudgeResult:
    query_labels: dict[str, str | None]
    source_labels: dict[str, SourceLabels]
    fidelity_labels: dict[str, str | None]
    calls_issued: dict[str, int] = field(default_factory=dict)


def judge_corpus(
    queries: dict[str, str],
    sources: dict[str, str],
    pairs: dict[str, tuple[str, str]],
    backend: JudgeBackend,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    content_cap: int = 50_000,
) -> CorpusJudgeResult:
    """Classify a corpus with the canonical call accounting: one query-level
    task per query, three source-level tasks per source, one pair-level task
    per citation.

    ``queries`` maps query_id -> query text; ``sources`` maps url_id ->
    source content; ``pairs`` maps cit_id -> (cited_sentence, url_id).
    Deterministic iteration (sorted keys) so mock runs are reproducible.
    """
    query_labels: dict[str, str | None] = {}
    for query_id in sorted(queries):
        verdict = classify(JudgeTask.QI, {"query": queries[query_id]}, backend, retry_budget, content_cap)
        query_labels[query_id] = verdict.label

    source_labels: dict[str, SourceLabels] = {}
    for url_id in sorted(sources):
        content = sources[url_id]
        inputs = {"source_url": url_id, "source_content": content}
        sp = classify(JudgeTask.SP, inputs, backend, retry_budget, content_cap)
        sd = classify(JudgeTask.SD, inputs, backend, retry_budget, content_cap)
        st = classify(JudgeTask.ST, inputs, backend, retry_budget, content_cap)
        source_labels[url_id] = SourceLabels(
            purpose=sp.label,
            domain=sd.label,
            source_type=st.label,
            unevaluable=sp.unevaluable or sd.unevaluable or st.unevaluable,
        )

    fidelity_labels: dict[str, str | None] = {}
    for cit_id in sorted(pairs):
        cited_sentence, url_id = pairs[cit_id]
        verdict = classify(
            JudgeTask.ASF,
            {"cited_sentence": cited_sentence, "source_content": sources.get(url_id, "")},
            backend,
            retry_budget,
            content_cap,
        )
        fidelity_labels[cit_id] = verdict.label

    calls = {
        "query_level": len(queries),
        "source_level": 3 * len(sources),
        "pair_level": len(pairs),
        "total": len(queries) + 3 * len(sources) + len(pairs),
    }
    return CorpusJudgeResult(query_labels, source_labels, fidelity_labels, calls)


class InsufficientAnnotatorsError(ValueError):
    """Human validation needs at least two annotators."""


@dataclass
class JudgeReliability:
    n_items: int
    n_used: int
    n_ties_excluded: int
    raw_agreement: float
    kappa_consensus: float
    kappa_pairwise_mean: float
    balanced_accuracy: float
    annotator_alpha: float

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_used": self.n_used,
            "n_ties_excluded": self.n_ties_excluded,
            "raw_agreement": self.raw_agreement,
            "kappa_consensus": self.kappa_consensus,
            "kappa_pairwise_mean": self.kappa_pairwise_mean,
            "balanced_accuracy": self.balanced_accuracy,
            "annotator_alpha": self.annotator_alpha,
        }


def majority_vote(labels: Sequence[str]) -> str | None:
    """Strict-majority label, or None on ties."""
    counts: dict[str, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    winners = [label for label, count in counts.items() if count == best]
    if len(winners) != 1 or best * 2 <= len(labels):
        return None
    return winners[0]


def balanced_accuracy(gold: Sequence[str], predicted: Sequence[str]) -> float:
    """Mean per-class recall over classes present in the gold labels."""
    classes = sorted(set(gold))
    recalls = []
    for cls in classes:
        indices = [i for i, g in enumerate(gold) if g == cls]
        hits = sum(1 for i in indices if predicted[i] == cls)
        recalls.append(hits / len(indices))
    return sum(recalls) / len(recalls)


def validate_against_humans(
    judge_labels: Sequence[str],
    annotator_labels: Sequence[Sequence[str]],
) -> JudgeReliability:
    """Score the judge against human annotators.

    ``annotator_labels`` holds one row per item with one label per annotator.
    Items whose majority vote ties are excluded from consensus metrics and
    counted. Pairwise kappas use all items.
    """
    if not annotator_labels or len(annotator_labels[0]) < 2:
        raise InsufficientAnnotatorsError("need at least 2 annotators")
    if len(judge_labels) != len(annotator_labels):
        raise ValueError("judge and annotator row counts differ")
    n_annotators = len(annotator_labels[0])
    if any(len(row) != n_annotators for row in annotator_labels):
        raise ValueError("ragged annotator table")

    gold: list[str] = []
    judged: list[str] = []
    ties = 0
    for judge_label, row in zip(judge_labels, annotator_labels):
        vote = majority_vote(row)
        if vote is None:
            ties += 1
            continue
        gold.append(vote)
        judged.append(judge_label)
    if not gold:
        raise ValueError("no items with a majority-vote label")

    pairwise = [
        stats.cohen_kappa(judge_labels, [row[k] for row in annotator_labels])
        for k in range(n_annotators)
    ]
    alpha = stats.krippendorff_alpha([list(row) for row in annotator_labels])

    return JudgeReliability(
        n_items=len(judge_labels),
        n_used=len(gold),
        n_ties_excluded=ties,
        raw_agreement=sum(1 for g, j in zip(gold, judged) if g == j) / len(gold),
        kappa_consensus=stats.cohen_kappa(gold, judged),
        kappa_pairwise_mean=sum(pairwise) / len(pairwise),
        balanced_accuracy=balanced_accuracy(gold, judged),
        annotator_alpha=alpha,
    )
