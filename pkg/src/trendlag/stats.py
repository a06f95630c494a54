"""Statistical evaluation: upper-tail Welch's t-test and box-whisker summaries.

Per-stock accuracy samples from an experiment are compared against baseline
samples with an unequal-variance (Welch) t-test, reported upper-tailed at a
configurable significance level together with the lower bound of the
one-sided confidence interval for the mean difference ("min. diff.").
Box-and-whisker statistics use interpolated quartiles, 1.5-IQR whiskers,
and McGill notches for 95% median comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

DEFAULT_ALPHA = 0.001
NOTCH_CONSTANT = 1.57  # McGill et al. convention for 95% median-comparison notches


def t_distribution_upper_tail(t: float, dof: float) -> float:
    """P(T > t) for Student's t, via the regularized incomplete beta function."""
    if not dof > 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    t = float(t)
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = dof / (dof + t * t)
    half_tail = 0.5 * float(special.betainc(dof / 2.0, 0.5, x))
    return half_tail if t >= 0 else 1.0 - half_tail


def t_quantile(p: float, dof: float) -> float:
    """Inverse CDF of Student's t."""
    if not dof > 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile probability must lie in (0, 1), got {p}")
    return float(special.stdtrit(dof, p))


@dataclass(frozen=True)
class WelchResult:
    """Upper-tail Welch comparison of two accuracy samples."""

    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    min_difference: float  # lower bound of the one-sided CI for mean_a - mean_b
    alpha: float


def welch_upper_tail(
    sample_a: np.ndarray, sample_b: np.ndarray, alpha: float = DEFAULT_ALPHA
) -> WelchResult:
    """Welch's t-test of H1: mean(a) > mean(b), with unequal variances.

    t = (mean_a - mean_b) / sqrt(v_a/n_a + v_b/n_b) with unbiased sample
    variances; degrees of freedom by Welch-Satterthwaite; p is the upper
    tail; min_difference = (mean_a - mean_b) - t_{1-alpha,dof} * se.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least 2 observations")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    na, nb = a.size, b.size
    mean_diff = float(a.mean() - b.mean())
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    ea, eb = va / na, vb / nb
    se2 = ea + eb
    if se2 == 0.0:
        if mean_diff == 0.0:
            raise ValueError("t statistic undefined: zero variance and equal means")
        # degenerate but directional: infinite separation
        t_stat = math.inf if mean_diff > 0 else -math.inf
        dof = float(na + nb - 2)
        return WelchResult(
            t_statistic=t_stat,
            degrees_of_freedom=dof,
            p_value=0.0 if mean_diff > 0 else 1.0,
            min_difference=mean_diff,
            alpha=alpha,
        )
    se = math.sqrt(se2)
    t_stat = mean_diff / se
    dof = se2 * se2 / (ea * ea / (na - 1) + eb * eb / (nb - 1))
    p_value = t_distribution_upper_tail(t_stat, dof)
    min_difference = mean_diff - t_quantile(1.0 - alpha, dof) * se
    return WelchResult(
        t_statistic=t_stat,
        degrees_of_freedom=dof,
        p_value=p_value,
        min_difference=min_difference,
        alpha=alpha,
    )


@dataclass(frozen=True)
class BoxStats:
    """Notched box-and-whisker summary of one accuracy sample."""

    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    notch_half_width: float
    outliers: tuple[float, ...]


def box_stats(sample: np.ndarray) -> BoxStats:
    """Quartiles, 1.5-IQR whiskers, outliers, and the 95% median notch.

    Quartiles interpolate linearly between order statistics; whiskers are
    the extreme data points within 1.5 interquartile ranges of the box
    (falling back to the quartile itself if no point qualifies beyond it),
    and points past the fences are reported as outliers.
    """
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("box_stats expects a one-dimensional sample")
    if x.size < 5:
        raise ValueError(f"box_stats needs at least 5 values, got {x.size}")
    if not np.isfinite(x).all():
        raise ValueError("sample must be finite")
    q1, median, q3 = np.percentile(x, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    hi_fence = q3 + 1.5 * iqr
    lo_fence = q1 - 1.5 * iqr
    inside_hi = x[x <= hi_fence]
    inside_lo = x[x >= lo_fence]
    whisker_high = float(inside_hi.max()) if inside_hi.size and inside_hi.max() >= q3 else float(q3)
    whisker_low = float(inside_lo.min()) if inside_lo.size and inside_lo.min() <= q1 else float(q1)
    outliers = tuple(sorted(float(v) for v in x[(x < lo_fence) | (x > hi_fence)]))
    notch = NOTCH_CONSTANT * iqr / math.sqrt(x.size)
    return BoxStats(
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        whisker_low=whisker_low,
        whisker_high=whisker_high,
        notch_half_width=float(notch),
        outliers=outliers,
    )
