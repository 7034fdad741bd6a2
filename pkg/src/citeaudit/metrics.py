"""Citation, response, and pool level quality metrics.

A citation carries three 1-5 scores: alignment (intent x purpose matrix),
suitability (domain x type matrix), and fidelity (verdict ordinal). A score
at or below its threshold (default 2 on every dimension) is a failure; a
citation failing all three at once is a critical instance. Response-level
aggregates average scores and flag whether any citation fails; pool reports
add marginal rates, the 7-region failure overlap decomposition, the observed
versus independence-expected critical rate, the high-stakes domain split
with Fisher odds ratio, citation-density bins, and per-model / per-provider
tables. Threshold sensitivity re-runs the critical-instance count under the
seven +-1 threshold variants and compares model rankings with Kendall tau.

All operations are pure; means are computed as sum/len so results are
bit-reproducible against a naive recomputation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import stats
from .taxonomy import (
    ALIGNMENT_MATRIX,
    SUITABILITY_MATRIX,
    DomainLabel,
    FidelityLabel,
    IntentLabel,
    PurposeLabel,
    ScoreMatrix,
    TypeLabel,
    is_ymyl,
)


class EmptyResponseError(ValueError):
    """Zero-citation responses are excluded from aggregation."""


@dataclass(frozen=True)
class Thresholds:
    """Maximum failing score per dimension (score <= threshold fails)."""

    ipa_max_fail: int = 2
    asf_max_fail: int = 2
    ss_max_fail: int = 2

    def __post_init__(self) -> None:
        for name in ("ipa_max_fail", "asf_max_fail", "ss_max_fail"):
            value = getattr(self, name)
            if not (1 <= value <= 3):
                raise ValueError(f"{name} must be in 1..3, got {value}")


#: The seven +-1 perturbation variants, baseline first.
THRESHOLD_VARIANTS: dict[str, Thresholds] = {
    "baseline": Thresholds(2, 2, 2),
    "as_loose": Thresholds(2, 3, 2),
    "as_strict": Thresholds(2, 1, 2),
    "ipa_loose": Thresholds(3, 2, 2),
    "ss_loose": Thresholds(2, 2, 3),
    "ss_strict": Thresholds(2, 2, 1),
    "ipa_strict": Thresholds(1, 2, 2),
}


@dataclass(frozen=True)
class CitationLabels:
    qi: IntentLabel
    sp: PurposeLabel
    sd: DomainLabel
    st: TypeLabel
    asf: FidelityLabel


@dataclass(frozen=True)
class CitationScores:
    ipa: int
    ss: int
    asf: int
    fail_ipa: bool
    fail_ss: bool
    fail_asf: bool
    critvm: bool


@dataclass(frozen=True)
class PoolRecord:
    """One scored-pool row: labels plus the grouping metadata reports need."""

    labels: CitationLabels
    response_key: str
    model: str = "unknown"
    provider: str = "unknown"


def score_citation(
    labels: CitationLabels,
    thresholds: Thresholds = Thresholds(),
    alignment_matrix: ScoreMatrix = ALIGNMENT_MATRIX,
    suitability_matrix: ScoreMatrix = SUITABILITY_MATRIX,
) -> CitationScores:
    ipa = alignment_matrix.score(labels.qi.value, labels.sp.value)
    ss = suitability_matrix.score(labels.sd.value, labels.st.value)
    asf = labels.asf.ordinal
    fail_ipa = ipa <= thresholds.ipa_max_fail
    fail_ss = ss <= thresholds.ss_max_fail
    fail_asf = asf <= thresholds.asf_max_fail
    return CitationScores(
        ipa=ipa,
        ss=ss,
        asf=asf,
        fail_ipa=fail_ipa,
        fail_ss=fail_ss,
        fail_asf=fail_asf,
        critvm=fail_ipa and fail_ss and fail_asf,
    )


@dataclass(frozen=True)
class ResponseAggregate:
    query_id: str
    model: str
    n: int
    r_ipa: float
    r_ss: float
    afr: float
    sfr: float
    ffr: float
    r_afr: bool
    r_sfr: bool
    r_ffr: bool
    any_exposure: bool


def aggregate_response(
    scores: Sequence[CitationScores], query_id: str = "", model: str = ""
) -> ResponseAggregate:
    """Roll one response's citation scores up to means, rates, and flags."""
    n = len(scores)
    if n == 0:
        raise EmptyResponseError("response has no citations")
    afr = sum(1 for s in scores if s.fail_ipa) / n
    sfr = sum(1 for s in scores if s.fail_ss) / n
    ffr = sum(1 for s in scores if s.fail_asf) / n
    return ResponseAggregate(
        query_id=query_id,
        model=model,
        n=n,
        r_ipa=sum(s.ipa for s in scores) / n,
        r_ss=sum(s.ss for s in scores) / n,
        afr=afr,
        sfr=sfr,
        ffr=ffr,
        r_afr=afr > 0,
        r_sfr=sfr > 0,
        r_ffr=ffr > 0,
        any_exposure=any(s.fail_ipa or s.fail_ss or s.fail_asf for s in scores),
    )


#: (label, low, high-inclusive or None for open-ended) citation-density bins.
DEFAULT_DENSITY_BINS: tuple[tuple[str, int, int | None], ...] = (
    ("1-5", 1, 5),
    ("6-10", 6, 10),
    ("11-15", 11, 15),
    ("16-20", 16, 20),
    ("20+", 21, None),
)

VENN_REGIONS = (
    "ipa_only",
    "asf_only",
    "ss_only",
    "ipa_asf",
    "ipa_ss",
    "asf_ss",
    "all_three",
)


def _venn_region(s: CitationScores) -> str | None:
    key = (s.fail_ipa, s.fail_asf, s.fail_ss)
    return {
        (True, False, False): "ipa_only",
        (False, True, False): "asf_only",
        (False, False, True): "ss_only",
        (True, True, False): "ipa_asf",
        (True, False, True): "ipa_ss",
        (False, True, True): "asf_ss",
        (True, True, True): "all_three",
    }.get(key)


@dataclass
class GroupBreakdown:
    n: int = 0
    fail_ipa: int = 0
    fail_ss: int = 0
    fail_asf: int = 0
    critvm: int = 0
    sum_ipa: int = 0
    sum_ss: int = 0
    sum_asf: int = 0

    def add(self, s: CitationScores) -> None:
        self.n += 1
        self.fail_ipa += s.fail_ipa
        self.fail_ss += s.fail_ss
        self.fail_asf += s.fail_asf
        self.critvm += s.critvm
        self.sum_ipa += s.ipa
        self.sum_ss += s.ss
        self.sum_asf += s.asf

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "afr": self.fail_ipa / self.n,
            "sfr": self.fail_ss / self.n,
            "ffr": self.fail_asf / self.n,
            "critvm_count": self.critvm,
            "critvm_rate": self.critvm / self.n,
            "mean_ipa": self.sum_ipa / self.n,
            "mean_ss": self.sum_ss / self.n,
            "mean_asf": self.sum_asf / self.n,
        }


@dataclass
class PoolReport:
    n_citations: int
    afr: float
    sfr: float
    ffr: float
    mean_ipa: float
    mean_ss: float
    mean_asf: float
    critvm_count: int
    critvm_rate: float
    expected_critvm_rate: float
    venn_counts: dict[str, int]
    venn_shares: dict[str, float]
    ymyl: dict
    density_bins: list[dict]
    per_model: dict[str, dict]
    per_provider: dict[str, dict]
    n_responses: int
    response_exposure: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "n_citations": self.n_citations,
            "marginals": {"afr": self.afr, "sfr": self.sfr, "ffr": self.ffr},
            "means": {"ipa": self.mean_ipa, "ss": self.mean_ss, "asf": self.mean_asf},
            "critvm": {
                "count": self.critvm_count,
                "rate": self.critvm_rate,
                "expected_rate": self.expected_critvm_rate,
            },
            "venn_counts": self.venn_counts,
            "venn_shares": self.venn_shares,
            "ymyl": self.ymyl,
            "density_bins": self.density_bins,
            "per_model": self.per_model,
            "per_provider": self.per_provider,
            "n_responses": self.n_responses,
            "response_exposure": self.response_exposure,
        }


def pool_report(
    records: Sequence[PoolRecord],
    thresholds: Thresholds = Thresholds(),
    density_bins: tuple[tuple[str, int, int | None], ...] = DEFAULT_DENSITY_BINS,
    alignment_matrix: ScoreMatrix = ALIGNMENT_MATRIX,
    suitability_matrix: ScoreMatrix = SUITABILITY_MATRIX,
) -> PoolReport:
    """Compute every pool-level metric over scored citations."""
    if not records:
        raise ValueError("empty pool")
    n = len(records)

    scored = [
        score_citation(r.labels, thresholds, alignment_matrix, suitability_matrix)
        for r in records
    ]

    fail_ipa = sum(1 for s in scored if s.fail_ipa)
    fail_ss = sum(1 for s in scored if s.fail_ss)
    fail_asf = sum(1 for s in scored if s.fail_asf)
    critvm_count = sum(1 for s in scored if s.critvm)
    afr, sfr, ffr = fail_ipa / n, fail_ss / n, fail_asf / n

    venn_counts = {region: 0 for region in VENN_REGIONS}
    for s in scored:
        region = _venn_region(s)
        if region is not None:
            venn_counts[region] += 1
    venn_shares = {region: venn_counts[region] / n for region in VENN_REGIONS}

    # High-stakes domain split with Fisher's exact odds ratio on
    # (fail, pass) x (ymyl, non-ymyl).
    ymyl_n = ymyl_fail = other_n = other_fail = 0
    for record, s in zip(records, scored):
        if is_ymyl(record.labels.sd):
            ymyl_n += 1
            ymyl_fail += s.fail_ss
        else:
            other_n += 1
            other_fail += s.fail_ss
    ymyl_report: dict = {
        "ymyl_n": ymyl_n,
        "ymyl_sfr": ymyl_fail / ymyl_n if ymyl_n else None,
        "non_ymyl_n": other_n,
        "non_ymyl_sfr": other_fail / other_n if other_n else None,
    }
    if ymyl_n and other_n and 0 < ymyl_fail and 0 < other_fail:
        fisher = stats.fisher_or(
            [[ymyl_fail, ymyl_n - ymyl_fail], [other_fail, other_n - other_fail]]
        )
        ymyl_report.update(
            odds_ratio=fisher.odds_ratio,
            p_value=fisher.p_value,
            p_method=fisher.method,
        )

    # Per-response grouping for exposure and density bins.
    responses: dict[str, list[CitationScores]] = {}
    for record, s in zip(records, scored):
        responses.setdefault(record.response_key, []).append(s)
    aggregates = [
        aggregate_response(scores_list, query_id=key)
        for key, scores_list in sorted(responses.items())
    ]
    n_resp = len(aggregates)
    response_exposure = {
        "r_afr": sum(a.r_afr for a in aggregates) / n_resp,
        "r_sfr": sum(a.r_sfr for a in aggregates) / n_resp,
        "r_ffr": sum(a.r_ffr for a in aggregates) / n_resp,
        "any": sum(a.any_exposure for a in aggregates) / n_resp,
    }

    bins = []
    for label, low, high in density_bins:
        members = [
            lst
            for lst in responses.values()
            if len(lst) >= low and (high is None or len(lst) <= high)
        ]
        citations = sum(len(lst) for lst in members)
        row: dict = {"bin": label, "n_responses": len(members), "n_citations": citations}
        if citations:
            # Citation-level rates within the bin.
            row.update(
                ffr=sum(s.fail_asf for lst in members for s in lst) / citations,
                sfr=sum(s.fail_ss for lst in members for s in lst) / citations,
                afr=sum(s.fail_ipa for lst in members for s in lst) / citations,
            )
        bins.append(row)

    per_model: dict[str, GroupBreakdown] = {}
    per_provider: dict[str, GroupBreakdown] = {}
    for record, s in zip(records, scored):
        per_model.setdefault(record.model, GroupBreakdown()).add(s)
        per_provider.setdefault(record.provider, GroupBreakdown()).add(s)

    return PoolReport(
        n_citations=n,
        afr=afr,
        sfr=sfr,
        ffr=ffr,
        mean_ipa=sum(s.ipa for s in scored) / n,
        mean_ss=sum(s.ss for s in scored) / n,
        mean_asf=sum(s.asf for s in scored) / n,
        critvm_count=critvm_count,
        critvm_rate=critvm_count / n,
        expected_critvm_rate=afr * ffr * sfr,
        venn_counts=venn_counts,
        venn_shares=venn_shares,
        ymyl=ymyl_report,
        density_bins=bins,
        per_model={k: v.to_dict() for k, v in sorted(per_model.items())},
        per_provider={k: v.to_dict() for k, v in sorted(per_provider.items())},
        n_responses=n_resp,
        response_exposure=response_exposure,
    )


@dataclass(frozen=True)
class VariantResult:
    name: str
    thresholds: Thresholds
    critvm_count: int
    critvm_rate: float
    model_ranking: tuple[str, ...]
    tau_vs_baseline: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "thresholds": {
                "ipa": self.thresholds.ipa_max_fail,
                "asf": self.thresholds.asf_max_fail,
                "ss": self.thresholds.ss_max_fail,
            },
            "critvm_count": self.critvm_count,
            "critvm_rate": self.critvm_rate,
            "model_ranking": list(self.model_ranking),
            "tau_vs_baseline": self.tau_vs_baseline,
        }


def _model_critvm_rates(
    records: Sequence[PoolRecord],
    thresholds: Thresholds,
    alignment_matrix: ScoreMatrix,
    suitability_matrix: ScoreMatrix,
) -> tuple[dict[str, float], int]:
    counts: dict[str, list[int]] = {}
    total = 0
    for record in records:
        s = score_citation(record.labels, thresholds, alignment_matrix, suitability_matrix)
        row = counts.setdefault(record.model, [0, 0])
        row[0] += s.critvm
        row[1] += 1
        total += s.critvm
    return {model: c / t for model, (c, t) in counts.items()}, total


def threshold_sensitivity(
    records: Sequence[PoolRecord],
    variants: Mapping[str, Thresholds] | None = None,
    alignment_matrix: ScoreMatrix = ALIGNMENT_MATRIX,
    suitability_matrix: ScoreMatrix = SUITABILITY_MATRIX,
) -> list[VariantResult]:
    """Critical-instance counts and model-ranking stability per variant.

    Models are ranked by ascending critical-instance rate; tau is Kendall
    tau-b between each variant's ranks and the baseline ranks over the
    common model set.
    """
    if not records:
        raise ValueError("empty pool")
    variant_map = dict(variants) if variants is not None else dict(THRESHOLD_VARIANTS)
    if "baseline" not in variant_map:
        raise ValueError("variant list must include a 'baseline' entry")

    models = sorted({r.model for r in records})
    baseline_rates, _ = _model_critvm_rates(
        records, variant_map["baseline"], alignment_matrix, suitability_matrix
    )
    baseline_vector = [baseline_rates[m] for m in models]
    n_citations = len(records)

    results = []
    for name, thresholds in variant_map.items():
        rates, critvm_count = _model_critvm_rates(
            records, thresholds, alignment_matrix, suitability_matrix
        )
        vector = [rates[m] for m in models]
        if len(models) <= 1:
            tau = 1.0
        else:
            try:
                tau = stats.kendall_tau(baseline_vector, vector)
            except stats.ZeroVarianceError:
                # A fully tied rate vector carries no ranking information:
                # two degenerate vectors agree trivially; otherwise undefined.
                constant_a = len(set(baseline_vector)) == 1
                constant_b = len(set(vector)) == 1
                tau = 1.0 if (constant_a and constant_b) else float("nan")
        ranking = tuple(sorted(models, key=lambda m: (rates[m], m)))
        results.append(
            VariantResult(
                name=name,
                thresholds=thresholds,
                critvm_count=critvm_count,
                critvm_rate=critvm_count / n_citations,
                model_ranking=ranking,
                tau_vs_baseline=tau,
            )
        )
    return results
