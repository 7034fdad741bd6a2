"""Staged evaluability filters reducing crawled citations to the scored pool.

Four filters apply in a fixed order: code/table content, judge-unevaluable,
too short (under 20 characters), under 5 words. Each citation is counted at
the first stage that removes it; the stages are pure predicates, so the
final set is order-independent even though per-stage counts are not.

Character counts are Unicode code points over the raw cited sentence,
punctuation and whitespace included.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

MIN_SENTENCE_CHARS = 20
MIN_SENTENCE_WORDS = 5


class FilterStage(str, Enum):
    CODE_OR_TABLE = "CodeOrTable"
    JUDGE_UNEVALUABLE = "JudgeUnevaluable"
    TOO_SHORT = "TooShort"
    UNDER_FIVE_WORDS = "UnderFiveWords"


STAGE_ORDER: tuple[FilterStage, ...] = (
    FilterStage.CODE_OR_TABLE,
    FilterStage.JUDGE_UNEVALUABLE,
    FilterStage.TOO_SHORT,
    FilterStage.UNDER_FIVE_WORDS,
)


@dataclass(frozen=True)
class FilterCandidate:
    cited_sentence: str
    code_or_table: bool = False
    judge_unevaluable: bool = False


@dataclass
class AttritionReport:
    initial: int
    removed: dict[FilterStage, int] = field(
        default_factory=lambda: {stage: 0 for stage in STAGE_ORDER}
    )
    final: int = 0
    code_table_source: str = "judge"  # or "heuristic" for offline runs

    def check(self) -> None:
        if self.initial - sum(self.removed.values()) != self.final:
            raise AssertionError("attrition counts do not conserve")
        if self.initial < 0 or self.final < 0 or any(v < 0 for v in self.removed.values()):
            raise AssertionError("negative attrition count")

    def chain(self, later: "AttritionReport") -> "AttritionReport":
        """Combine with a report produced from this report's survivors."""
        if later.initial != self.final:
            raise ValueError("chained report must start from this report's final count")
        combined = AttritionReport(
            initial=self.initial,
            removed={stage: self.removed[stage] + later.removed[stage] for stage in STAGE_ORDER},
            final=later.final,
            code_table_source=self.code_table_source,
        )
        combined.check()
        return combined

    def to_dict(self) -> dict:
        return {
            "initial": self.initial,
            "removed": {stage.value: self.removed[stage] for stage in STAGE_ORDER},
            "final": self.final,
            "code_table_source": self.code_table_source,
        }


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())


def removal_stage(candidate: FilterCandidate) -> FilterStage | None:
    """First stage (in canonical order) that removes the candidate, if any."""
    if candidate.code_or_table:
        return FilterStage.CODE_OR_TABLE
    if candidate.judge_unevaluable:
        return FilterStage.JUDGE_UNEVALUABLE
    if len(candidate.cited_sentence) < MIN_SENTENCE_CHARS:
        return FilterStage.TOO_SHORT
    if word_count(candidate.cited_sentence) < MIN_SENTENCE_WORDS:
        return FilterStage.UNDER_FIVE_WORDS
    return None


def apply_filters(
    candidates: list[FilterCandidate] | tuple[FilterCandidate, ...],
    code_table_source: str = "judge",
) -> tuple[list[int], AttritionReport]:
    """Apply all four stages; returns (kept indices, attrition report)."""
    kept: list[int] = []
    report = AttritionReport(initial=len(candidates), code_table_source=code_table_source)
    for index, candidate in enumerate(candidates):
        stage = removal_stage(candidate)
        if stage is None:
            kept.append(index)
        else:
            report.removed[stage] += 1
    report.final = len(kept)
    report.check()
    return kept, report


_FENCE = re.compile(r"```|~~~")
_CODE_CHARS = re.compile(r"[{}()\[\];=<>|\\]")


def looks_like_code_or_table(text: str) -> bool:
    """Heuristic fallback for offline runs without judge-provided flags:
    fenced blocks, pipe-delimited table rows, or heavy code punctuation."""
    if _FENCE.search(text):
        return True
    if text.count("|") >= 3:
        return True
    stripped = text.strip()
    if not stripped:
        return False
    code_chars = len(_CODE_CHARS.findall(stripped))
    return code_chars / len(stripped) > 0.12 and code_chars >= 6
