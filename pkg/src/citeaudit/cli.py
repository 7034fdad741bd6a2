"""Command-line interface sequencing the audit pipeline.

Exit codes: 0 success, 1 validation failure (schema, config, strict-mode
invariant violations), 2 stage error (missing inputs, crawl/judge
infrastructure failures).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import stats as statslab
from .crawl import Crawler
from .dataset import (
    MasterIoError,
    SchemaMismatchError,
    ValidationFailedError,
    read_master,
    replay,
)
from .judge import validate_against_humans
from .metrics import Thresholds
from .pipeline import (
    ConfigInvalidError,
    PipelineConfig,
    PipelineRun,
    StageInputMissingError,
)
from .reports import dump_json, pool_summary_text, write_pool_tables, write_variant_table
from .taxonomy import (
    ALIGNMENT_MATRIX,
    SUITABILITY_MATRIX,
    MatrixFormatError,
    load_alignment_override,
    load_suitability_override,
)

EXIT_VALIDATION = 1
EXIT_STAGE = 2

_VALIDATION_ERRORS = (
    ConfigInvalidError,
    SchemaMismatchError,
    ValidationFailedError,
    MatrixFormatError,
    ValueError,
)
_STAGE_ERRORS = (StageInputMissingError, MasterIoError, OSError, RuntimeError)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Pipeline config file (YAML).")
@click.option("--out-dir", type=click.Path(), default=None, help="Run directory override.")
@click.option("--strict", is_flag=True, default=False, help="Fail on any validation violation.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, out_dir: str | None, strict: bool) -> None:
    """Citation-quality audit pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["out_dir"] = out_dir
    ctx.obj["strict"] = strict


def _load_config(ctx: click.Context) -> PipelineConfig:
    config_path = ctx.obj.get("config_path")
    if config_path:
        config = PipelineConfig.from_file(config_path)
    else:
        config = PipelineConfig()
    if ctx.obj.get("out_dir"):
        config.out_dir = Path(ctx.obj["out_dir"])
    if ctx.obj.get("strict"):
        config.strict = True
    return config


def _run_stages(ctx: click.Context, stages: list[str]) -> None:
    try:
        config = _load_config(ctx)
        executed = PipelineRun(config).run(stages)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _STAGE_ERRORS as exc:
        click.echo(f"stage error: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    for stage, ran in executed.items():
        click.echo(f"{stage}: {'done' if ran else 'up-to-date (skipped)'}")


@main.command()
@click.option("--provider", type=str, default=None, help="Force provider format interpretation.")
@click.pass_context
def extract(ctx: click.Context, provider: str | None) -> None:
    """Parse provider responses into normalized citations."""
    if provider:
        ctx.obj["force_provider"] = provider
    try:
        config = _load_config(ctx)
        if provider:
            config.extract["provider"] = provider
        executed = PipelineRun(config).run(["extract"])
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _STAGE_ERRORS as exc:
        click.echo(f"stage error: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    click.echo(f"extract: {'done' if executed['extract'] else 'up-to-date (skipped)'}")


@main.command()
@click.option("--urls", "urls_file", type=click.Path(exists=True), default=None, help="URL list file (one canonical URL per line).")
@click.option("--out", "out_file", type=click.Path(), default=None, help="Outcome records path (jsonl).")
@click.option("--report", "report_file", type=click.Path(), default=None, help="Crawl report path (json).")
@click.option("--redirect-timeout", type=float, default=None)
@click.option("--fetch-timeout", type=float, default=None)
@click.option("--concurrency", type=int, default=None)
@click.option("--content-cap", type=int, default=None)
@click.option("--min-content-length", type=int, default=None)
@click.option("--per-domain-delay", type=float, default=None)
@click.option("--user-agent", type=str, default=None)
@click.option("--no-render", is_flag=True, default=False, help="Disable the rendered-retrieval stage (it is off unless a renderer is wired in).")
@click.pass_context
def crawl(ctx: click.Context, urls_file, out_file, report_file, redirect_timeout, fetch_timeout, concurrency, content_cap, min_content_length, per_domain_delay, user_agent, no_render) -> None:
    """Fetch cited URLs under politeness constraints."""
    overrides = {
        "redirect_timeout": redirect_timeout,
        "fetch_timeout": fetch_timeout,
        "global_concurrency": concurrency,
        "content_cap": content_cap,
        "min_content_length": min_content_length,
        "per_domain_delay": per_domain_delay,
        "user_agent": user_agent,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        config = _load_config(ctx)
        config.crawl.update(overrides)
        if urls_file:
            config.inputs["urls"] = urls_file
        if urls_file and out_file:
            crawl_config = config.crawl_config()
            urls = [u.strip() for u in Path(urls_file).read_text(encoding="utf-8").splitlines() if u.strip()]
            outcomes, report = Crawler(crawl_config).crawl_batch(urls)
            rows = []
            for o in outcomes:
                rows.append(
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
                )
            with open(out_file, "w", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            dump_json(Path(report_file or out_file + ".report.json"), report.to_dict())
            click.echo(f"crawl: {report.success} success / {report.failed} failed")
            return
        executed = PipelineRun(config).run(["crawl"])
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _STAGE_ERRORS as exc:
        click.echo(f"stage error: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    click.echo(f"crawl: {'done' if executed['crawl'] else 'up-to-date (skipped)'}")


@main.command("filter")
@click.pass_context
def filter_cmd(ctx: click.Context) -> None:
    """Apply the staged evaluability filters."""
    _run_stages(ctx, ["filter"])


@main.command()
@click.option("--backend", type=click.Choice(["mock", "http"]), default=None)
@click.option("--endpoint", type=str, default=None)
@click.option("--model", type=str, default=None)
@click.option("--rate-limit", type=float, default=None, help="Requests per minute.")
@click.option("--retry-budget", type=int, default=None)
@click.option("--mock-rules", type=click.Path(exists=True), default=None)
@click.pass_context
def judge(ctx: click.Context, backend, endpoint, model, rate_limit, retry_budget, mock_rules) -> None:
    """Classify queries, sources, and citation pairs with the judge."""
    try:
        config = _load_config(ctx)
        for key, value in (
            ("backend", backend),
            ("endpoint", endpoint),
            ("model", model),
            ("rate_limit_per_minute", rate_limit),
            ("retry_budget", retry_budget),
            ("mock_rules", mock_rules),
        ):
            if value is not None:
                config.judge[key] = value
        executed = PipelineRun(config).run(["judge"])
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _STAGE_ERRORS as exc:
        click.echo(f"stage error: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    click.echo(f"judge: {'done' if executed['judge'] else 'up-to-date (skipped)'}")


@main.command()
@click.pass_context
def score(ctx: click.Context) -> None:
    """Convert labels to matrix scores and failure flags."""
    _run_stages(ctx, ["score"])


@main.command()
@click.pass_context
def aggregate(ctx: click.Context) -> None:
    """Compute response- and pool-level reports."""
    _run_stages(ctx, ["aggregate"])


@main.command()
@click.argument("stages", type=str, default="extract,crawl,filter,judge,score,aggregate,stats")
@click.pass_context
def run(ctx: click.Context, stages: str) -> None:
    """Run a comma-separated stage list in canonical order."""
    requested = [s.strip() for s in stages.split(",") if s.strip()]
    _run_stages(ctx, requested)


@main.command()
@click.option("--master", "master_path", type=click.Path(exists=True), required=True, help="analysis-master table (.parquet/.jsonl/.csv/.tsv).")
@click.option("--thresholds", "thresholds_text", type=str, default="2,2,2", help="ipa,asf,ss failure thresholds.")
@click.pass_context
def replay_cmd(ctx: click.Context, master_path: str, thresholds_text: str) -> None:
    """Recompute all metrics deterministically from a released table."""
    try:
        parts = [int(p) for p in thresholds_text.split(",")]
        thresholds = Thresholds(*parts)
        config = _load_config(ctx)
        result = read_master(master_path, strict=config.strict)
        report = replay(result.records, thresholds, n_violations=len(result.violations))
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _STAGE_ERRORS as exc:
        click.echo(f"stage error: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    out_dir = Path(ctx.obj.get("out_dir") or "replay_reports")
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_json(out_dir / "replay_report.json", report.to_dict())
    (out_dir / "pool_summary.txt").write_text(pool_summary_text(report.pool), encoding="utf-8")
    write_pool_tables(report.pool, out_dir)
    write_variant_table(report.variants, out_dir)
    click.echo(pool_summary_text(report.pool))
    if report.n_violations:
        click.echo(f"rows with invariant violations: {report.n_violations}", err=True)
    click.echo(f"reports written to {out_dir}")


main.add_command(replay_cmd, name="replay")


def _read_table(path: str) -> list[dict]:
    delimiter = "\t" if path.endswith(".tsv") else ","
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh, delimiter=delimiter))


def _columns(rows: list[dict], names: list[str]) -> list[list[float]]:
    return [[float(row[name]) for row in rows] for name in names]


@main.command("stats")
@click.argument("statistic", type=click.Choice([
    "kappa", "alpha", "icc", "pearson", "ccc", "mad", "kruskal", "tau", "rho", "fisher", "variance",
]))
@click.argument("table", type=click.Path(exists=True))
@click.option("--columns", "columns_text", type=str, default=None, help="Comma-separated column names (pairwise stats and grids).")
@click.pass_context
def stats_cmd(ctx: click.Context, statistic: str, table: str, columns_text: str | None) -> None:
    """Compute one statistic over a delimited-text table.

    kappa/tau/rho/pearson/ccc/mad need two columns; alpha and icc treat the
    named columns (default: all) as raters over rows; kruskal groups a value
    column by a group column (--columns group,value); fisher reads a 2x2
    count table; variance needs provider,model,value columns.
    """
    try:
        rows = _read_table(table)
        if not rows:
            raise ValueError("empty table")
        names = [c.strip() for c in columns_text.split(",")] if columns_text else list(rows[0].keys())
        if statistic in ("kappa", "tau", "rho", "pearson", "ccc", "mad"):
            if len(names) != 2:
                raise ValueError(f"{statistic} needs exactly two columns")
            if statistic == "kappa":
                a = [row[names[0]] for row in rows]
                b = [row[names[1]] for row in rows]
                value = statslab.cohen_kappa(a, b)
            else:
                x, y = _columns(rows, names)
                value = {
                    "tau": statslab.kendall_tau,
                    "rho": statslab.spearman_rho,
                    "pearson": statslab.pearson_r,
                    "ccc": statslab.ccc,
                    "mad": statslab.mad,
                }[statistic](x, y)
            click.echo(f"{statistic} = {value:.6f}")
        elif statistic == "alpha":
            grid = [[row[name] if row[name] != "" else None for name in names] for row in rows]
            click.echo(f"alpha = {statslab.krippendorff_alpha(grid):.6f}")
        elif statistic == "icc":
            grid = [[float(row[name]) for name in names] for row in rows]
            result = statslab.icc_2k(grid)
            click.echo(
                f"icc(2,k) = {result.value:.6f}  ci95 = [{result.lower:.6f}, {result.upper:.6f}]"
            )
        elif statistic == "kruskal":
            if len(names) != 2:
                raise ValueError("kruskal needs --columns group,value")
            groups: dict[str, list[float]] = {}
            for row in rows:
                groups.setdefault(row[names[0]], []).append(float(row[names[1]]))
            result = statslab.kruskal_wallis(list(groups.values()))
            click.echo(
                f"H = {result.h:.6f}  p = {result.p_value:.6g}  eta2_H = {result.eta_squared:.6f}"
            )
        elif statistic == "fisher":
            if len(rows) < 2:
                raise ValueError("fisher needs a 2x2 count table")
            values = [[float(v) for v in row.values()] for row in rows[:2]]
            result = statslab.fisher_or([values[0][:2], values[1][:2]])
            click.echo(
                f"OR = {result.odds_ratio:.6f}  p = {result.p_value:.6g} ({result.method})"
            )
        elif statistic == "variance":
            if len(names) != 3:
                raise ValueError("variance needs --columns provider,model,value")
            groups2: dict[str, dict[str, list[float]]] = {}
            for row in rows:
                groups2.setdefault(row[names[0]], {}).setdefault(row[names[1]], []).append(
                    float(row[names[2]])
                )
            d = statslab.variance_decomposition(groups2)
            click.echo(
                f"between = {d.between_ss:.6f} ({d.between_pct:.1f}%)  "
                f"within = {d.within_ss:.6f} ({d.within_pct:.1f}%)"
            )
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


@main.command("validate-judge")
@click.option("--table", "table_path", type=click.Path(exists=True), required=True)
@click.option("--judge-col", type=str, default="judge")
@click.option("--annotator-cols", type=str, default=None, help="Comma-separated annotator columns (default: all but judge).")
@click.pass_context
def validate_judge(ctx: click.Context, table_path: str, judge_col: str, annotator_cols: str | None) -> None:
    """Score judge labels against human annotators."""
    try:
        rows = _read_table(table_path)
        if not rows:
            raise ValueError("empty table")
        annotators = (
            [c.strip() for c in annotator_cols.split(",")]
            if annotator_cols
            else [c for c in rows[0].keys() if c != judge_col]
        )
        judge_labels = [row[judge_col] for row in rows]
        annotator_labels = [[row[c] for c in annotators] for row in rows]
        report = validate_against_humans(judge_labels, annotator_labels)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    for key, value in report.to_dict().items():
        click.echo(f"{key}: {value:.4f}" if isinstance(value, float) else f"{key}: {value}")


@main.command()
@click.option("--alignment-override", type=click.Path(exists=True), default=None)
@click.option("--suitability-override", type=click.Path(exists=True), default=None)
@click.pass_context
def matrices(ctx: click.Context, alignment_override: str | None, suitability_override: str | None) -> None:
    """Print the two scoring matrices (optionally from override files)."""
    try:
        alignment = ALIGNMENT_MATRIX
        suitability = SUITABILITY_MATRIX
        if alignment_override:
            alignment = load_alignment_override(Path(alignment_override).read_text(encoding="utf-8"))
        if suitability_override:
            suitability = load_suitability_override(
                Path(suitability_override).read_text(encoding="utf-8")
            )
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo("Intent x Purpose alignment matrix:")
    click.echo(alignment.to_text())
    click.echo("Domain x Type suitability matrix:")
    click.echo(suitability.to_text())


if __name__ == "__main__":
    main()
