"""Statistical procedures for judge validation and pool analysis.

Implements agreement statistics (Cohen's kappa, Krippendorff's alpha,
ICC(2,k)), association measures (Pearson r, Lin's CCC, mean absolute
deviation, Kendall tau-b, Spearman rho), the Kruskal-Wallis test with the
eta-squared effect size, Fisher's exact odds ratio, and a two-way
between/within variance decomposition.

Formulas are written out directly; scipy supplies only special functions
(regularized incomplete beta/gamma) for tail probabilities and quantiles.
All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy import special


class DegenerateMarginalsError(ValueError):
    """Chance agreement is 1, so kappa is undefined."""


class NoVariationError(ValueError):
    """Expected disagreement is 0, so alpha is undefined."""


class ZeroRowVarianceError(ValueError):
    """Targets do not vary, so the ICC denominator collapses."""


class ZeroVarianceError(ValueError):
    """One input is constant; correlation is undefined."""


class AllTiedError(ValueError):
    """All observations share one value; ranks carry no information."""


class SingleGroupError(ValueError):
    """Variance decomposition needs at least two groups."""


# -- agreement ---------------------------------------------------------------


def cohen_kappa(a_labels: Sequence[Hashable], b_labels: Sequence[Hashable]) -> float:
    """Unweighted Cohen's kappa: (p_o - p_e) / (1 - p_e), with chance
    agreement p_e from the product of the two raters' marginals."""
    if len(a_labels) != len(b_labels):
        raise ValueError("label sequences differ in length")
    n = len(a_labels)
    if n == 0:
        raise ValueError("empty label sequences")
    p_o = sum(1 for a, b in zip(a_labels, b_labels) if a == b) / n
    categories = set(a_labels) | set(b_labels)
    p_e = sum(
        (sum(1 for a in a_labels if a == c) / n) * (sum(1 for b in b_labels if b == c) / n)
        for c in categories
    )
    if p_e >= 1.0 - 1e-15:
        raise DegenerateMarginalsError("chance agreement is 1")
    return (p_o - p_e) / (1.0 - p_e)


def krippendorff_alpha(
    grid: Sequence[Sequence[Hashable | None]], metric: str = "nominal"
) -> float:
    """Krippendorff's alpha, nominal metric, via the coincidence matrix.

    ``grid`` has one row per unit (target) and one column per rater; None
    marks a missing cell. Units with fewer than two ratings are skipped
    (pairable-values convention). alpha = 1 - D_o / D_e with
    D_o = (n - sum_c o_cc) / n and D_e = (n^2 - sum_c n_c^2) / (n (n - 1)).
    """
    if metric != "nominal":
        raise ValueError("only the nominal metric is implemented")
    if not grid or len(grid[0]) < 2:
        raise ValueError("need at least 2 raters")

    coincidence: dict[tuple[Hashable, Hashable], float] = {}
    totals: dict[Hashable, float] = {}
    n = 0.0
    for row in grid:
        values = [v for v in row if v is not None]
        m = len(values)
        if m < 2:
            continue
        weight = 1.0 / (m - 1)
        for i, vi in enumerate(values):
            for j, vj in enumerate(values):
                if i == j:
                    continue
                coincidence[(vi, vj)] = coincidence.get((vi, vj), 0.0) + weight
                totals[vi] = totals.get(vi, 0.0) + weight
                n += weight
    if n <= 1:
        raise ValueError("fewer than two pairable values")

    observed_agreement = sum(
        count for (vi, vj), count in coincidence.items() if vi == vj
    )
    d_o = (n - observed_agreement) / n
    d_e = (n * n - sum(t * t for t in totals.values())) / (n * (n - 1.0))
    if d_e <= 1e-15:
        raise NoVariationError("expected disagreement is 0")
    return 1.0 - d_o / d_e


@dataclass(frozen=True)
class IccResult:
    value: float
    lower: float
    upper: float
    ms_rows: float
    ms_cols: float
    ms_error: float

    def __float__(self) -> float:
        return self.value


def _f_ppf(q: float, d1: float, d2: float) -> float:
    """F-distribution quantile by bisection on the regularized incomplete
    beta: F_cdf(x) = I_{d1 x / (d1 x + d2)}(d1/2, d2/2)."""

    def cdf(x: float) -> float:
        if x <= 0:
            return 0.0
        return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))

    lo, hi = 0.0, 1.0
    while cdf(hi) < q:
        hi *= 2.0
        if hi > 1e12:
            return hi
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def icc_2k(grid: Sequence[Sequence[float]], confidence: float = 0.95) -> IccResult:
    """ICC(2,k): two-way mixed-effects intraclass correlation for absolute
    agreement of average measurements.

    With n targets (rows) and k raters (columns):
    ICC(2,k) = (MS_R - MS_E) / (MS_R + (MS_C - MS_E) / n).
    The confidence interval transforms the single-rater ICC(2,1) bounds
    (McGraw & Wong F approximation) through the Spearman-Brown step-up.
    """
    data = np.asarray(grid, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] < 2:
        raise ValueError("grid must be at least 2x2")
    if np.isnan(data).any():
        raise ValueError("grid must be complete")
    n, k = data.shape
    grand = data.mean()
    row_means = data.mean(axis=1)
    col_means = data.mean(axis=0)

    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ss_cols = n * float(((col_means - grand) ** 2).sum())
    ss_total = float(((data - grand) ** 2).sum())
    ss_error = ss_total - ss_rows - ss_cols

    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_error = ss_error / ((n - 1) * (k - 1))

    denom = ms_rows + (ms_cols - ms_error) / n
    if abs(denom) < 1e-30 or ms_rows <= 1e-30:
        raise ZeroRowVarianceError("no target variance")
    icc = (ms_rows - ms_error) / denom

    # ICC(2,1) and its CI, then step up to k raters.
    single_denom = ms_rows + (k - 1) * ms_error + k * (ms_cols - ms_error) / n
    icc1 = (ms_rows - ms_error) / single_denom
    alpha_level = 1.0 - confidence
    if ms_error <= 1e-30 or icc1 >= 1.0 - 1e-12:
        lower1 = upper1 = icc1
    else:
        a = k * icc1 / (n * (1.0 - icc1))
        b = 1.0 + k * icc1 * (n - 1.0) / (n * (1.0 - icc1))
        v_num = (a * ms_cols + b * ms_error) ** 2
        v_den = (a * ms_cols) ** 2 / (k - 1) + (b * ms_error) ** 2 / ((n - 1) * (k - 1))
        v = v_num / v_den
        f_l = _f_ppf(1.0 - alpha_level / 2.0, n - 1.0, v)
        f_u = _f_ppf(1.0 - alpha_level / 2.0, v, n - 1.0)
        lower1 = n * (ms_rows - f_l * ms_error) / (
            f_l * (k * ms_cols + (k * n - k - n) * ms_error) + n * ms_rows
        )
        upper1 = n * (f_u * ms_rows - ms_error) / (
            k * ms_cols + (k * n - k - n) * ms_error + n * f_u * ms_rows
        )

    def step_up(value: float) -> float:
        denominator = 1.0 + (k - 1.0) * value
        if abs(denominator) < 1e-30:
            return 1.0
        return k * value / denominator

    return IccResult(
        value=icc,
        lower=step_up(lower1),
        upper=step_up(upper1),
        ms_rows=ms_rows,
        ms_cols=ms_cols,
        ms_error=ms_error,
    )


# -- association -------------------------------------------------------------


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson product-moment correlation."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need equal-length sequences with n >= 2")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float((dx * dx).sum())
    sy = float((dy * dy).sum())
    if sx <= 1e-300 or sy <= 1e-300:
        raise ZeroVarianceError("constant input")
    return float((dx * dy).sum()) / math.sqrt(sx * sy)


def ccc(x: Sequence[float], y: Sequence[float]) -> float:
    """Lin's concordance correlation coefficient:
    2 rho sx sy / (sx^2 + sy^2 + (mx - my)^2), population variances."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need equal-length sequences with n >= 2")
    mx, my = float(xs.mean()), float(ys.mean())
    vx = float(((xs - mx) ** 2).mean())
    vy = float(((ys - my) ** 2).mean())
    if vx <= 1e-300 or vy <= 1e-300:
        raise ZeroVarianceError("constant input")
    covariance = float(((xs - mx) * (ys - my)).mean())
    return 2.0 * covariance / (vx + vy + (mx - my) ** 2)


def mad(x: Sequence[float], y: Sequence[float]) -> float:
    """Mean absolute deviation between paired values."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.size == 0:
        raise ValueError("need equal-length nonempty sequences")
    return float(np.abs(xs - ys).mean())


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="mergesort")
    ranks = np.empty(arr.size, dtype=float)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson on average ranks."""
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need equal-length sequences with n >= 2")
    return pearson_r(_average_ranks(x), _average_ranks(y))


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> float:
    """Kendall tau-b with tie correction:
    (C - D) / sqrt((n0 - n1)(n0 - n2)) where n0 = n(n-1)/2 and n1, n2 count
    tied pairs within each input."""
    if len(a) != len(b):
        raise ValueError("rankings must cover the same items")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two items")
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = (a[i] > a[j]) - (a[i] < a[j])
            db = (b[i] > b[j]) - (b[i] < b[j])
            if da == 0 and db == 0:
                ties_a += 1
                ties_b += 1
            elif da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif da == db:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom <= 0:
        raise ZeroVarianceError("all pairs tied in one ranking")
    return (concordant - discordant) / denom


# -- hypothesis tests --------------------------------------------------------


@dataclass(frozen=True)
class KruskalResult:
    h: float
    p_value: float
    eta_squared: float
    dof: int


def _chi2_sf(x: float, dof: int) -> float:
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KruskalResult:
    """Kruskal-Wallis rank test with tie correction.

    H = [12 / (N (N+1))] * sum_g n_g Rbar_g^2 - 3 (N + 1), divided by the
    tie factor 1 - sum(t^3 - t) / (N^3 - N). The effect size is
    eta_H^2 = (H - k + 1) / (N - k); p comes from the chi-square tail with
    k - 1 degrees of freedom.
    """
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need at least two nonempty groups")
    pooled: list[float] = [v for g in groups for v in g]
    n_total = len(pooled)
    k = len(groups)
    ranks = _average_ranks(pooled)

    h = 0.0
    offset = 0
    for group in groups:
        group_ranks = ranks[offset : offset + len(group)]
        offset += len(group)
        h += len(group) * (float(group_ranks.mean())) ** 2
    h = 12.0 / (n_total * (n_total + 1.0)) * h - 3.0 * (n_total + 1.0)

    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values())
    correction = 1.0 - tie_term / float(n_total**3 - n_total)
    if correction <= 1e-15:
        raise AllTiedError("all observations are identical")
    h /= correction

    eta = (h - k + 1.0) / (n_total - k)
    return KruskalResult(h=h, p_value=_chi2_sf(h, k - 1), eta_squared=eta, dof=k - 1)


@dataclass(frozen=True)
class FisherResult:
    odds_ratio: float
    p_value: float
    method: str  # "hypergeometric" | "normal-approximation"
    continuity_corrected: bool


_EXACT_FISHER_MAX_N = 10_000


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_or(table: Sequence[Sequence[float]]) -> FisherResult:
    """Odds ratio and two-sided Fisher p for a 2x2 table [[a, b], [c, d]].

    OR = ad / bc; a zero cell triggers the Haldane-Anscombe 0.5 correction
    (flagged). The p-value enumerates the hypergeometric distribution for
    totals up to 10,000 and switches to a normal approximation on log OR
    above that, with the method recorded.
    """
    (a, b), (c, d) = table
    if min(a, b, c, d) < 0:
        raise ValueError("counts must be nonnegative")
    a, b, c, d = int(a), int(b), int(c), int(d)

    corrected = 0 in (a, b, c, d)
    if corrected:
        af, bf, cf, df = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    else:
        af, bf, cf, df = float(a), float(b), float(c), float(d)
    odds_ratio = (af * df) / (bf * cf)

    n = a + b + c + d
    if n == 0:
        raise ValueError("empty table")
    if n <= _EXACT_FISHER_MAX_N:
        r1, c1 = a + b, a + c
        k_min = max(0, c1 - (c + d))
        k_max = min(r1, c1)
        log_norm = _log_choose(n, c1)
        log_pmfs = [
            _log_choose(r1, k) + _log_choose(n - r1, c1 - k) - log_norm
            for k in range(k_min, k_max + 1)
        ]
        observed = log_pmfs[a - k_min]
        threshold = observed + 1e-7
        p = sum(math.exp(lp) for lp in log_pmfs if lp <= threshold)
        return FisherResult(odds_ratio, min(1.0, p), "hypergeometric", corrected)

    se = math.sqrt(1.0 / af + 1.0 / bf + 1.0 / cf + 1.0 / df)
    z = abs(math.log(odds_ratio)) / se if se > 0 else 0.0
    p = math.erfc(z / math.sqrt(2.0))
    return FisherResult(odds_ratio, min(1.0, p), "normal-approximation", corrected)


# -- variance decomposition ---------------------------------------------------


@dataclass(frozen=True)
class VarianceDecomposition:
    between_ss: float
    between_pct: float
    within_ss: float
    within_pct: float


def variance_decomposition(
    groups: Mapping[str, Mapping[str, Sequence[float]]],
    weighted: bool = True,
) -> VarianceDecomposition:
    """Split score variance into between-group and within-group components.

    ``groups`` maps group (provider) -> member (model) -> observations.
    Between = sum_g n_g (mu_g - mu)^2; within = sum_g sum_m n_m (mu_m -
    mu_g)^2. With ``weighted=False`` every member mean counts once
    (n_m = 1) and group means average their members' means.
    """
    if len(groups) < 2:
        raise SingleGroupError("need at least two groups")

    member_stats: dict[str, list[tuple[float, float]]] = {}
    for group, members in groups.items():
        if not members:
            raise ValueError(f"group {group!r} has no members")
        rows = []
        for member, values in members.items():
            if len(values) == 0:
                raise ValueError(f"member {member!r} has no observations")
            weight = float(len(values)) if weighted else 1.0
            rows.append((weight, float(np.mean(np.asarray(values, dtype=float)))))
        member_stats[group] = rows

    group_rows = []
    for group, rows in member_stats.items():
        weight = sum(w for w, _ in rows)
        mean = sum(w * m for w, m in rows) / weight
        group_rows.append((weight, mean, rows))

    total_weight = sum(w for w, _, _ in group_rows)
    grand_mean = sum(w * m for w, m, _ in group_rows) / total_weight

    between = sum(w * (m - grand_mean) ** 2 for w, m, _ in group_rows)
    within = sum(
        wm * (mm - gm) ** 2 for _, gm, rows in group_rows for wm, mm in rows
    )
    total = between + within
    if total <= 0:
        return VarianceDecomposition(0.0, 0.0, 0.0, 0.0)
    return VarianceDecomposition(
        between_ss=between,
        between_pct=100.0 * between / total,
        within_ss=within,
        within_pct=100.0 * within / total,
    )
