"""Pipeline configuration, stage sequencing, and the content-hash manifest.

Stages run in a fixed order (extract, crawl, filter, judge, score, aggregate,
stats); any in-order subset can be requested. Each stage reads the newest
upstream artifact available in the run directory (or a config-provided seed
file), writes its own artifacts, and appends a manifest entry carrying the
content hashes of its inputs, outputs, and the relevant config subtree.
Re-running a stage whose hashes all match is a no-op, which makes large judge
runs resumable.

Configuration is a single YAML key-value tree; the judge API credential comes
from the environment only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import yaml

from . import reports
from .crawl import Crawler, CrawlConfig, offline_outcomes
from .extract import extract_citations, parse_raw_response
from .filters import FilterCandidate, FilterStage, AttritionReport, apply_filters, looks_like_code_or_table
from .judge import (
    DEFAULT_JUDGE_MODEL,
    DEFAULT_RETRY_BUDGET,
    HttpJudgeBackend,
    JudgeBackend,
    MockJudgeBackend,
    judge_corpus,
)
from .metrics import (
    THRESHOLD_VARIANTS,
    CitationLabels,
    PoolRecord,
    Thresholds,
    aggregate_response,
    pool_report,
    score_citation,
    threshold_sensitivity,
)
from .taxonomy import (
    ALIGNMENT_MATRIX,
    SUITABILITY_MATRIX,
    DomainLabel,
    FidelityLabel,
    IntentLabel,
    PurposeLabel,
    ScoreMatrix,
    TypeLabel,
    load_alignment_override,
    load_suitability_override,
)
from .urls import canonicalize_url

STAGES = ("extract", "crawl", "filter", "judge", "score", "aggregate", "stats")


class ConfigInvalidError(ValueError):
    """Pipeline configuration failed validation."""


class StageInputMissingError(FileNotFoundError):
    """A stage's upstream artifact is neither in the run dir nor configured."""


@dataclass
class PipelineConfig:
    run_id: str = "run"
    out_dir: Path = Path("runs/run")
    strict: bool = False
    inputs: dict[str, str] = field(default_factory=dict)
    extract: dict[str, Any] = field(default_factory=dict)
    crawl: dict[str, Any] = field(default_factory=dict)
    judge: dict[str, Any] = field(default_factory=dict)
    thresholds: Thresholds = Thresholds()
    matrices: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh) or {}
        return cls.from_dict(tree, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, tree: dict, base_dir: Path | None = None) -> "PipelineConfig":
        if not isinstance(tree, dict):
            raise ConfigInvalidError("config root must be a mapping")
        base = base_dir or Path(".")

        def resolve(value: str) -> str:
            p = Path(value)
            return str(p if p.is_absolute() else base / p)

        inputs = {k: resolve(v) for k, v in (tree.get("inputs") or {}).items()}
        thresholds_tree = tree.get("thresholds") or {}
        try:
            thresholds = Thresholds(
                ipa_max_fail=int(thresholds_tree.get("ipa", 2)),
                asf_max_fail=int(thresholds_tree.get("asf", 2)),
                ss_max_fail=int(thresholds_tree.get("ss", 2)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(f"bad thresholds: {exc}") from exc

        matrices = dict(tree.get("matrices") or {})
        for key in ("alignment_override", "suitability_override"):
            if matrices.get(key):
                matrices[key] = resolve(matrices[key])

        judge_tree = dict(tree.get("judge") or {})
        backend = judge_tree.get("backend", "mock")
        if backend not in ("mock", "http"):
            raise ConfigInvalidError(f"judge.backend must be mock or http, got {backend!r}")
        if backend == "http" and not judge_tree.get("endpoint"):
            raise ConfigInvalidError("judge.backend=http requires judge.endpoint")
        if judge_tree.get("mock_rules"):
            judge_tree["mock_rules"] = resolve(judge_tree["mock_rules"])

        out_dir = Path(resolve(tree.get("out_dir", "runs/" + str(tree.get("run_id", "run")))))
        config = cls(
            run_id=str(tree.get("run_id", "run")),
            out_dir=out_dir,
            strict=bool(tree.get("strict", False)),
            inputs=inputs,
            extract=dict(tree.get("extract") or {}),
            crawl=dict(tree.get("crawl") or {}),
            judge=judge_tree,
            thresholds=thresholds,
            matrices=matrices,
        )
        config.validate()
        return config

    def validate(self) -> None:
        try:
            self.crawl_config()
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(f"bad crawl config: {exc}") from exc
        for key, path in self.inputs.items():
            if not Path(path).exists():
                raise ConfigInvalidError(f"inputs.{key} does not exist: {path}")
        for key in ("alignment_override", "suitability_override"):
            path = self.matrices.get(key)
            if path and not Path(path).exists():
                raise ConfigInvalidError(f"matrices.{key} does not exist: {path}")

    def crawl_config(self) -> CrawlConfig:
        known = {
            k: v
            for k, v in self.crawl.items()
            if k
            in (
                "redirect_timeout",
                "fetch_timeout",
                "global_concurrency",
                "content_cap",
                "min_content_length",
                "per_domain_delay",
                "user_agent",
            )
        }
        return CrawlConfig(**known)

    def load_matrices(self) -> tuple[ScoreMatrix, ScoreMatrix]:
        alignment = ALIGNMENT_MATRIX
        suitability = SUITABILITY_MATRIX
        if self.matrices.get("alignment_override"):
            alignment = load_alignment_override(
                Path(self.matrices["alignment_override"]).read_text(encoding="utf-8")
            )
        if self.matrices.get("suitability_override"):
            suitability = load_suitability_override(
                Path(self.matrices["suitability_override"]).read_text(encoding="utf-8")
            )
        return alignment, suitability

    def build_judge_backend(self) -> JudgeBackend:
        if self.judge.get("backend", "mock") == "http":
            return HttpJudgeBackend(
                endpoint=self.judge["endpoint"],
                model=self.judge.get("model", DEFAULT_JUDGE_MODEL),
                rate_limit_per_minute=self.judge.get("rate_limit_per_minute"),
            )
        rules_path = self.judge.get("mock_rules")
        if rules_path:
            return MockJudgeBackend.from_rule_file(rules_path)
        return MockJudgeBackend()


# -- manifest -----------------------------------------------------------------


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        while chunk := fh.read(65536):
            digest.update(chunk)
    return digest.hexdigest()


def _fingerprint(payload: Any) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    ).hexdigest()


class Manifest:
    def __init__(self, path: Path) -> None:
        self.path = path
        self.entries: list[dict] = []
        if path.exists():
            self.entries = json.loads(path.read_text(encoding="utf-8")).get("entries", [])

    def latest(self, stage: str) -> dict | None:
        for entry in reversed(self.entries):
            if entry["stage"] == stage:
                return entry
        return None

    def is_current(self, stage: str, input_hashes: dict[str, str], config_fp: str) -> bool:
        entry = self.latest(stage)
        if entry is None:
            return False
        if entry["inputs"] != input_hashes or entry["config"] != config_fp:
            return False
        for info in entry["outputs"].values():
            path = Path(info["path"])
            if not path.exists() or _sha256_file(path) != info["sha256"]:
                return False
        return True

    def append(self, stage: str, input_hashes: dict[str, str], outputs: dict[str, Path], config_fp: str) -> None:
        self.entries.append(
            {
                "stage": stage,
                "inputs": input_hashes,
                "outputs": {
                    name: {"path": str(path), "sha256": _sha256_file(path)}
                    for name, path in outputs.items()
                },
                "config": config_fp,
                "completed_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }
        )
        self.path.write_text(
            json.dumps({"entries": self.entries}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


# -- jsonl helpers ------------------------------------------------------------


def read_jsonl(path: Path) -> list[dict]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_jsonl(path: Path, rows: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


# -- stage implementations ----------------------------------------------------

_META_KEYS = ("query_id", "model_short", "provider", "site", "category", "query")


class PipelineRun:
    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = Manifest(self.out_dir / "manifest.json")

    # input resolution ------------------------------------------------------

    def _artifact(self, name: str) -> Path:
        return self.out_dir / name

    def _require(self, stage: str, *candidates: str, config_input: str | None = None) -> Path:
        for name in candidates:
            path = self._artifact(name)
            if path.exists():
                return path
        if config_input and self.config.inputs.get(config_input):
            return Path(self.config.inputs[config_input])
        raise StageInputMissingError(
            f"stage {stage!r} needs one of {candidates} in {self.out_dir}"
            + (f" or inputs.{config_input}" if config_input else "")
        )

    # stages ----------------------------------------------------------------

    def stage_extract(self) -> dict[str, Path]:
        source = self._require("extract", "responses.jsonl", config_input="responses")
        rows = read_jsonl(source)
        out_rows = []
        report = {
            "responses": 0,
            "zero_citation_responses": 0,
            "malformed_entries": 0,
            "citations": 0,
            # duplicate (sentence, URL) pairs within one response are all
            # emitted; nothing is collapsed at extraction time
            "duplicate_policy": "emit-all",
        }
        forced = self.config.extract.get("provider")
        for row in rows:
            raw = parse_raw_response(row, forced_provider=forced)
            result = extract_citations(raw)
            report["responses"] += 1
            report["malformed_entries"] += result.malformed
            if not result.citations:
                report["zero_citation_responses"] += 1
            for citation in result.citations:
                out = {
                    "response_id": citation.response_id,
                    "ordinal": citation.ordinal,
                    "cited_sentence": citation.cited_sentence,
                    "source_url": citation.source_url,
                }
                out.update({k: raw.metadata[k] for k in _META_KEYS if k in raw.metadata})
                out_rows.append(out)
                report["citations"] += 1
        citations_path = self._artifact("citations.jsonl")
        write_jsonl(citations_path, out_rows)
        report_path = self._artifact("extract_report.json")
        reports.dump_json(report_path, report)
        return {"citations": citations_path, "extract_report": report_path}

    def stage_crawl(self) -> dict[str, Path]:
        crawl_config = self.config.crawl_config()
        offline = self.config.inputs.get("sources") if self.config.crawl.get("offline") else None
        if offline:
            mapping = {row["url"]: row.get("content", "") for row in read_jsonl(Path(offline))}
            outcomes, report = offline_outcomes(mapping, crawl_config)
        else:
            urls_file = self.config.inputs.get("urls")
            if urls_file:
                urls = [u.strip() for u in Path(urls_file).read_text(encoding="utf-8").splitlines() if u.strip()]
            else:
                citations = read_jsonl(self._require("crawl", "citations.jsonl"))
                seen: dict[str, None] = {}
                for row in citations:
                    seen.setdefault(canonicalize_url(row["source_url"]), None)
                urls = list(seen)
            crawler = Crawler(crawl_config)
            outcomes, report = crawler.crawl_batch(urls)
        outcome_rows = [
            {
                "url_id": o.url_id,
                "url": o.url,
                "final_url": o.final_url,
                "status": o.status,
                "failure": o.failure.value if o.failure else None,
                "content": o.content,
                "content_length": o.content_length,
                "fetched_at": o.fetched_at,
                "phantom": o.phantom,
                "detail": o.detail,
            }
            for o in outcomes
        ]
        outcomes_path = self._artifact("crawl_outcomes.jsonl")
        write_jsonl(outcomes_path, outcome_rows)
        report_path = self._artifact("crawl_report.json")
        reports.dump_json(report_path, report.to_dict())
        return {"crawl_outcomes": outcomes_path, "crawl_report": report_path}

    def stage_filter(self) -> dict[str, Path]:
        citations_path = self._require("filter", "citations.jsonl", config_input="citations")
        rows = read_jsonl(citations_path)
        candidates = [
            FilterCandidate(
                cited_sentence=row["cited_sentence"],
                code_or_table=bool(
                    row.get("code_or_table", looks_like_code_or_table(row["cited_sentence"]))
                ),
                judge_unevaluable=bool(row.get("judge_unevaluable", False)),
            )
            for row in rows
        ]
        source = "judge" if rows and "code_or_table" in rows[0] else "heuristic"
        kept, attrition = apply_filters(candidates, code_table_source=source)
        evaluable = [rows[i] for i in kept]
        evaluable_path = self._artifact("evaluable.jsonl")
        write_jsonl(evaluable_path, evaluable)
        attrition_path = self._artifact("attrition.json")
        reports.dump_json(attrition_path, attrition.to_dict())
        return {"evaluable": evaluable_path, "attrition": attrition_path}

    def _load_sources(self, stage: str) -> dict[str, dict]:
        """url -> {url_id, content} from crawl outcomes or the seed file."""
        outcomes_path = self._artifact("crawl_outcomes.jsonl")
        if outcomes_path.exists():
            sources = {}
            for row in read_jsonl(outcomes_path):
                if row["status"] == "Success":
                    sources[row["url"]] = {"url_id": row["url_id"], "content": row["content"]}
            return sources
        seed = self.config.inputs.get("sources")
        if seed:
            sources = {}
            for row in read_jsonl(Path(seed)):
                url = row["url"]
                sources[url] = {
                    "url_id": row.get("url_id") or "U" + hashlib.sha256(url.encode()).hexdigest()[:12],
                    "content": row.get("content", ""),
                }
            return sources
        raise StageInputMissingError(
            f"stage {stage!r} needs crawl_outcomes.jsonl or inputs.sources"
        )

    def stage_judge(self) -> dict[str, Path]:
        citations_path = self._require("judge", "evaluable.jsonl", "citations.jsonl")
        rows = read_jsonl(citations_path)
        allow_missing = bool(self.config.judge.get("allow_missing_content", False))
        try:
            sources = self._load_sources("judge")
        except StageInputMissingError:
            if not allow_missing:
                raise
            sources = {}

        backend = self.config.build_judge_backend()
        retry_budget = int(self.config.judge.get("retry_budget", DEFAULT_RETRY_BUDGET))
        content_cap = self.config.crawl_config().content_cap

        queries: dict[str, str] = {}
        pair_inputs: dict[str, tuple[str, str]] = {}
        source_contents: dict[str, str] = {}
        url_ids: dict[str, str] = {}
        for index, row in enumerate(rows):
            query_key = str(row.get("query_id") or row["response_id"])
            queries.setdefault(query_key, str(row.get("query") or query_key))
            url = row["source_url"]
            info = sources.get(url)
            url_id = info["url_id"] if info else "U" + hashlib.sha256(url.encode()).hexdigest()[:12]
            url_ids[url] = url_id
            source_contents.setdefault(url_id, info["content"] if info else "")
            pair_inputs[f"{index:08d}"] = (row["cited_sentence"], url_id)

        result = judge_corpus(
            queries, source_contents, pair_inputs, backend, retry_budget, content_cap
        )

        labeled = []
        for index, row in enumerate(rows):
            query_key = str(row.get("query_id") or row["response_id"])
            url = row["source_url"]
            url_id = url_ids[url]
            source = result.source_labels[url_id]
            asf_label = result.fidelity_labels[f"{index:08d}"]
            qi_label = result.query_labels[query_key]
            out = dict(row)
            out.update(
                url_id=url_id,
                clen=len(source_contents[url_id]),
                QI_label=qi_label,
                SP_label=source.purpose,
                SD_label=source.domain,
                ST_label=source.source_type,
                ASF_label=asf_label,
                judge_unevaluable=(
                    qi_label is None or source.unevaluable or asf_label is None
                ),
            )
            labeled.append(out)

        # Unevaluable verdicts leave the pool at the JudgeUnevaluable stage.
        candidates = [
            FilterCandidate(
                cited_sentence=row["cited_sentence"],
                judge_unevaluable=row["judge_unevaluable"],
            )
            for row in labeled
        ]
        kept, judge_attrition = apply_filters(candidates)
        prior_path = self._artifact("attrition.json")
        if prior_path.exists():
            prior = json.loads(prior_path.read_text(encoding="utf-8"))
            chained = AttritionReport(
                initial=prior["initial"],
                removed={
                    FilterStage(stage): prior["removed"][stage] + judge_attrition.removed[FilterStage(stage)]
                    for stage in prior["removed"]
                },
                final=judge_attrition.final,
                code_table_source=prior.get("code_table_source", "heuristic"),
            )
            chained.check()
            final_attrition = chained
        else:
            final_attrition = judge_attrition

        labeled_path = self._artifact("labeled.jsonl")
        write_jsonl(labeled_path, [labeled[i] for i in kept])
        report_path = self._artifact("judge_report.json")
        reports.dump_json(
            report_path,
            {
                "calls_issued": result.calls_issued,
                "attrition": final_attrition.to_dict(),
                "unevaluable_removed": judge_attrition.removed[FilterStage.JUDGE_UNEVALUABLE],
            },
        )
        return {"labeled": labeled_path, "judge_report": report_path}

    def stage_score(self) -> dict[str, Path]:
        labeled_path = self._require("score", "labeled.jsonl", config_input="labeled")
        rows = read_jsonl(labeled_path)
        alignment, suitability = self.config.load_matrices()
        thresholds = self.config.thresholds
        out_rows = []
        for index, row in enumerate(rows, start=1):
            labels = CitationLabels(
                qi=IntentLabel(row["QI_label"]),
                sp=PurposeLabel(row["SP_label"]),
                sd=DomainLabel(row["SD_label"]),
                st=TypeLabel(row["ST_label"]),
                asf=FidelityLabel(row["ASF_label"]),
            )
            scores = score_citation(labels, thresholds, alignment, suitability)
            out = dict(row)
            out.update(
                cit_id=index,
                cited_len=len(row["cited_sentence"]),
                crawl_yn="Y",
                ipam_score=scores.ipa,
                ssm_score=scores.ss,
                asf_score=scores.asf,
                fail_ipa=scores.fail_ipa,
                fail_ss=scores.fail_ss,
                fail_asf=scores.fail_asf,
                critvm=scores.critvm,
            )
            out_rows.append(out)
        scored_path = self._artifact("scored.jsonl")
        write_jsonl(scored_path, out_rows)
        return {"scored": scored_path}

    def _pool_records(self, rows: list[dict]) -> list[PoolRecord]:
        return [
            PoolRecord(
                labels=CitationLabels(
                    qi=IntentLabel(row["QI_label"]),
                    sp=PurposeLabel(row["SP_label"]),
                    sd=DomainLabel(row["SD_label"]),
                    st=TypeLabel(row["ST_label"]),
                    asf=FidelityLabel(row["ASF_label"]),
                ),
                response_key=str(row.get("query_id") or row["response_id"])
                + "::"
                + str(row.get("model_short", "")),
                model=str(row.get("model_short", "unknown")),
                provider=str(row.get("provider", "unknown")),
            )
            for row in rows
        ]

    def stage_aggregate(self) -> dict[str, Path]:
        scored_path = self._require("aggregate", "scored.jsonl", config_input="scored")
        rows = read_jsonl(scored_path)
        alignment, suitability = self.config.load_matrices()
        records = self._pool_records(rows)
        pool = pool_report(
            records,
            self.config.thresholds,
            alignment_matrix=alignment,
            suitability_matrix=suitability,
        )

        grouped: dict[str, list[dict]] = {}
        for row in rows:
            key = str(row.get("query_id") or row["response_id"]) + "::" + str(row.get("model_short", ""))
            grouped.setdefault(key, []).append(row)
        response_rows = []
        for key in sorted(grouped):
            group = grouped[key]
            labels = [
                score_citation(
                    record.labels, self.config.thresholds, alignment, suitability
                )
                for record in self._pool_records(group)
            ]
            query_id, _, model = key.partition("::")
            aggregate = aggregate_response(labels, query_id=query_id, model=model)
            response_rows.append(
                {
                    "query_id": aggregate.query_id,
                    "model": aggregate.model,
                    "n": aggregate.n,
                    "r_ipa": aggregate.r_ipa,
                    "r_ss": aggregate.r_ss,
                    "afr": aggregate.afr,
                    "sfr": aggregate.sfr,
                    "ffr": aggregate.ffr,
                    "r_afr": aggregate.r_afr,
                    "r_sfr": aggregate.r_sfr,
                    "r_ffr": aggregate.r_ffr,
                    "any_exposure": aggregate.any_exposure,
                }
            )

        responses_path = self._artifact("responses.jsonl")
        write_jsonl(responses_path, response_rows)
        pool_path = self._artifact("pool_report.json")
        reports.dump_json(pool_path, pool.to_dict())
        summary_path = self._artifact("pool_summary.txt")
        summary_path.write_text(reports.pool_summary_text(pool), encoding="utf-8")
        table_paths = reports.write_pool_tables(pool, self.out_dir)
        outputs = {
            "responses": responses_path,
            "pool_report": pool_path,
            "pool_summary": summary_path,
        }
        outputs.update({path.stem: path for path in table_paths})
        return outputs

    def stage_stats(self) -> dict[str, Path]:
        scored_path = self._require("stats", "scored.jsonl", config_input="scored")
        rows = read_jsonl(scored_path)
        alignment, suitability = self.config.load_matrices()
        records = self._pool_records(rows)
        variants = dict(THRESHOLD_VARIANTS)
        variants["baseline"] = self.config.thresholds
        results = threshold_sensitivity(
            records,
            variants,
            alignment_matrix=alignment,
            suitability_matrix=suitability,
        )

        from . import stats as statslab

        by_provider: dict[str, dict[str, list[float]]] = {}
        for row, record in zip(rows, records):
            provider_models = by_provider.setdefault(record.provider, {})
            provider_models.setdefault(record.model, []).append(float(row["asf_score"]))
        decomposition = None
        if len(by_provider) >= 2:
            d = statslab.variance_decomposition(by_provider)
            decomposition = {
                "between_ss": d.between_ss,
                "between_pct": d.between_pct,
                "within_ss": d.within_ss,
                "within_pct": d.within_pct,
            }

        stats_path = self._artifact("stats_report.json")
        reports.dump_json(
            stats_path,
            {
                "threshold_variants": [v.to_dict() for v in results],
                "asf_variance_by_provider": decomposition,
            },
        )
        variants_path = reports.write_variant_table(results, self.out_dir)
        return {"stats_report": stats_path, "threshold_variants": variants_path}

    # dispatcher --------------------------------------------------------------

    def _stage_config(self, stage: str) -> Any:
        common = {"inputs": self.config.inputs, "strict": self.config.strict}
        per_stage: dict[str, Any] = {
            "extract": {"extract": self.config.extract},
            "crawl": {"crawl": self.config.crawl},
            "filter": {},
            "judge": {"judge": self.config.judge, "crawl": self.config.crawl},
            "score": {
                "thresholds": self.config.thresholds.__dict__,
                "matrices": self.config.matrices,
            },
            "aggregate": {
                "thresholds": self.config.thresholds.__dict__,
                "matrices": self.config.matrices,
            },
            "stats": {
                "thresholds": self.config.thresholds.__dict__,
                "matrices": self.config.matrices,
            },
        }
        return {**common, **per_stage[stage]}

    _STAGE_INPUT_FILES: dict[str, tuple[str, ...]] = {
        "extract": (),
        "crawl": ("citations.jsonl",),
        "filter": ("citations.jsonl",),
        "judge": ("evaluable.jsonl", "citations.jsonl", "crawl_outcomes.jsonl", "attrition.json"),
        "score": ("labeled.jsonl",),
        "aggregate": ("scored.jsonl",),
        "stats": ("scored.jsonl",),
    }

    _STAGE_CONFIG_INPUT: dict[str, tuple[str, ...]] = {
        "extract": ("responses",),
        "crawl": ("sources", "urls"),
        "filter": ("citations",),
        "judge": ("sources",),
        "score": ("labeled",),
        "aggregate": ("scored",),
        "stats": ("scored",),
    }

    def _input_hashes(self, stage: str) -> dict[str, str]:
        hashes = {}
        for name in self._STAGE_INPUT_FILES[stage]:
            path = self._artifact(name)
            if path.exists():
                hashes[name] = _sha256_file(path)
        for key in self._STAGE_CONFIG_INPUT[stage]:
            value = self.config.inputs.get(key)
            if value and Path(value).exists():
                hashes[f"inputs.{key}"] = _sha256_file(Path(value))
        return hashes

    def run(self, stages: list[str]) -> dict[str, bool]:
        """Run the requested stages in canonical order; returns a map of
        stage -> executed (False when skipped via the manifest cache)."""
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise ConfigInvalidError(f"unknown stages: {unknown}")
        ordered = [s for s in STAGES if s in stages]
        if len(set(stages)) != len(stages):
            raise ConfigInvalidError("duplicate stages requested")

        handlers: dict[str, Callable[[], dict[str, Path]]] = {
            "extract": self.stage_extract,
            "crawl": self.stage_crawl,
            "filter": self.stage_filter,
            "judge": self.stage_judge,
            "score": self.stage_score,
            "aggregate": self.stage_aggregate,
            "stats": self.stage_stats,
        }
        executed: dict[str, bool] = {}
        for stage in ordered:
            input_hashes = self._input_hashes(stage)
            config_fp = _fingerprint(self._stage_config(stage))
            if self.manifest.is_current(stage, input_hashes, config_fp):
                executed[stage] = False
                continue
            outputs = handlers[stage]()
            self.manifest.append(stage, input_hashes, outputs, config_fp)
            executed[stage] = True
        return executed


def run_pipeline(config: PipelineConfig, stages: list[str]) -> dict[str, bool]:
    return PipelineRun(config).run(stages)
