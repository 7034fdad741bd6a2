"""Report rendering: machine-readable JSON plus plot-ready delimited tables."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .metrics import PoolReport, VariantResult


def dump_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def write_tsv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(_cell(value) for value in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "Y" if value else "N"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_pool_tables(pool: PoolReport, out_dir: Path) -> list[Path]:
    """Write the pool report's table views; returns the written paths."""
    written = []

    def emit(name: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        path = out_dir / name
        write_tsv(path, header, rows)
        written.append(path)

    group_header = (
        "group", "n", "afr", "sfr", "ffr",
        "critvm_count", "critvm_rate", "mean_ipa", "mean_ss", "mean_asf",
    )

    def group_rows(table: dict[str, dict]) -> list[list]:
        return [
            [
                name, row["n"], row["afr"], row["sfr"], row["ffr"],
                row["critvm_count"], row["critvm_rate"],
                row["mean_ipa"], row["mean_ss"], row["mean_asf"],
            ]
            for name, row in table.items()
        ]

    emit("per_model.tsv", group_header, group_rows(pool.per_model))
    emit("per_provider.tsv", group_header, group_rows(pool.per_provider))
    emit(
        "venn.tsv",
        ("region", "count", "share"),
        [[region, pool.venn_counts[region], pool.venn_shares[region]] for region in pool.venn_counts],
    )
    emit(
        "density_bins.tsv",
        ("bin", "n_responses", "n_citations", "afr", "sfr", "ffr"),
        [
            [
                row["bin"], row["n_responses"], row["n_citations"],
                row.get("afr", ""), row.get("sfr", ""), row.get("ffr", ""),
            ]
            for row in pool.density_bins
        ],
    )
    ymyl = pool.ymyl
    emit(
        "ymyl.tsv",
        ("group", "n", "sfr"),
        [
            ["ymyl", ymyl["ymyl_n"], ymyl.get("ymyl_sfr", "")],
            ["non_ymyl", ymyl["non_ymyl_n"], ymyl.get("non_ymyl_sfr", "")],
        ],
    )
    return written


def write_variant_table(variants: Sequence[VariantResult], out_dir: Path) -> Path:
    path = out_dir / "threshold_variants.tsv"
    write_tsv(
        path,
        ("variant", "ipa_max", "asf_max", "ss_max", "critvm_count", "critvm_rate", "tau_vs_baseline"),
        [
            [
                v.name,
                v.thresholds.ipa_max_fail,
                v.thresholds.asf_max_fail,
                v.thresholds.ss_max_fail,
                v.critvm_count,
                v.critvm_rate,
                v.tau_vs_baseline,
            ]
            for v in variants
        ],
    )
    return path


def pool_summary_text(pool: PoolReport) -> str:
    """Human-readable pool summary."""
    lines = [
        f"Evaluable citations: {pool.n_citations}",
        f"Responses (>=1 citation): {pool.n_responses}",
        "",
        f"AFR {100 * pool.afr:.1f}%   SFR {100 * pool.sfr:.1f}%   FFR {100 * pool.ffr:.1f}%",
        f"Mean scores: IPA {pool.mean_ipa:.2f}  SS {pool.mean_ss:.2f}  ASF {pool.mean_asf:.2f}",
        "",
        f"Critical instances: {pool.critvm_count} ({100 * pool.critvm_rate:.2f}%)"
        f"  expected under independence {100 * pool.expected_critvm_rate:.2f}%",
        "",
        "Failure overlap (share of pool):",
    ]
    for region, share in pool.venn_shares.items():
        lines.append(f"  {region:>9}: {100 * share:.1f}%")
    ymyl = pool.ymyl
    if ymyl.get("ymyl_sfr") is not None and ymyl.get("non_ymyl_sfr") is not None:
        lines += [
            "",
            f"High-stakes domains: SFR {100 * ymyl['ymyl_sfr']:.1f}% (n={ymyl['ymyl_n']})"
            f" vs {100 * ymyl['non_ymyl_sfr']:.1f}% (n={ymyl['non_ymyl_n']})",
        ]
        if "odds_ratio" in ymyl:
            lines.append(
                f"  odds ratio {ymyl['odds_ratio']:.3f} (p={ymyl['p_value']:.3g}, {ymyl['p_method']})"
            )
    lines += [
        "",
        "Response-level exposure: "
        + "  ".join(f"{k}={100 * v:.1f}%" for k, v in pool.response_exposure.items()),
    ]
    return "\n".join(lines) + "\n"
