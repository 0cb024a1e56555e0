"""Default (JZS) Bayesian one-sample t-tests against a fixed baseline score.

The effect size delta = (mu - baseline) / sigma gets a Cauchy(0, r) prior
under H1; H0 is delta = 0. Given the observed t statistic, the likelihood of
delta is the noncentral t density with noncentrality ``delta * sqrt(n)``, so

    BF10 = int nct(t; n-1, delta sqrt(n)) Cauchy(delta; 0, r) d delta / t(t; n-1)

which is evaluated by adaptive quadrature. The one-sided BF+0 restricts the
prior to delta > 0 (renormalized), i.e. ``2 * int_0^inf (...)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, stats

DEFAULT_PRIOR_WIDTH = 1 / math.sqrt(2)
GRID_POINTS = 4001


@dataclass(frozen=True)
class BayesConfig:
    prior_width: float = DEFAULT_PRIOR_WIDTH
    direction: str = "greater"  # "greater" | "two_sided"
    robustness_widths: tuple[float, ...] = (0.5, DEFAULT_PRIOR_WIDTH, 1.0, math.sqrt(2))

    def __post_init__(self):
        if not self.prior_width > 0:
            raise ValueError("prior width must be positive")
        if self.direction not in ("greater", "two_sided"):
            raise ValueError("direction must be 'greater' or 'two_sided'")


@dataclass(frozen=True)
class BayesResult:
    bf10: float  # BF+0 when direction is "greater"
    median_d: float
    t_statistic: float
    n: int
    prior_width: float
    direction: str
    interpretation: str
    bf10_two_sided: float = field(default=float("nan"))
    posterior_positive_mass: float = field(default=float("nan"))
    log_bf10: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "bf10": self.bf10,
            "median_d": self.median_d,
            "t": self.t_statistic,
            "n": self.n,
            "prior_width": self.prior_width,
            "direction": self.direction,
            "interpretation": self.interpretation,
            "bf10_two_sided": self.bf10_two_sided,
            "posterior_positive_mass": self.posterior_positive_mass,
            "log_bf10": self.log_bf10,
        }


_BANDS = ((100.0, "extreme"), (30.0, "very strong"), (10.0, "strong"), (3.0, "moderate"), (1.0, "anecdotal"))


def evidence_band(bf10: float) -> str:
    """Label of the evidence category (>100 extreme, 30-100 very strong, 10-30 strong, ...)."""
    if bf10 == 1.0:
        return "no evidence"
    x, side = (bf10, "H1") if bf10 > 1 else (1.0 / bf10 if bf10 > 0 else math.inf, "H0")
    for lo, name in _BANDS:
        if x > lo:
            return f"{name} evidence for {side}"
    return f"anecdotal evidence for {side}"


def interpret(bf10: float) -> str:
    """Band label plus the likelihood-ratio reading of the raw Bayes factor."""
    if bf10 >= 1:
        ratio = f"data are {bf10:.2f} times more likely under H1 than under H0"
    else:
        inv = 1 / bf10 if bf10 > 0 else math.inf
        ratio = f"data are {inv:.2f} times more likely under H0 than under H1"
    return f"{evidence_band(bf10)} ({ratio})"


def t_statistic(scores: Sequence[float], baseline: float) -> tuple[float, int]:
    x = np.asarray(scores, dtype=float)
    x = x[np.isfinite(x)]
    n = x.size
    if n < 2:
        raise ValueError("need at least two scores")
    sd = x.std(ddof=1)
    # identical values can leave a rounding-level SD (e.g. 3 x 0.2)
    if sd == 0 or np.ptp(x) == 0:
        raise ValueError("t is undefined: scores have zero variance")
    return float((x.mean() - baseline) / (sd / math.sqrt(n))), int(n)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


def nct_logpdf(t: float, df: float, nc) -> np.ndarray:
    """Log density of the noncentral t distribution at ``t``, vectorized over ``nc``.

    Uses T = (Z + nc) / S with S = sqrt(chi2_df / df):

        p(t) = int_0^inf phi(t s - nc) s q(s) ds

    The log integrand is strictly concave in s with a closed-form mode, so
    Gauss-Legendre nodes spread over +-40 local SDs around the mode are
    accurate even far in the tails, where library implementations return NaN.
    """
    nc = np.atleast_1d(np.asarray(nc, dtype=float))
    a = t * t + df
    b = t * nc
    root = np.sqrt(b * b + 4.0 * df * a)
    # positive root of a s^2 - b s - df = 0, without cancellation when b < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        mode = np.where(b >= 0, (b + root) / (2.0 * a), 2.0 * df / (root - b))
    sd = 1.0 / np.sqrt(a + df / mode**2)
    lo = np.maximum(mode - 40.0 * sd, 0.0)
    hi = mode + 40.0 * sd
    half = 0.5 * (hi - lo)
    s = (lo + half)[:, None] + half[:, None] * _GL_NODES[None, :]
    log_q = (
        math.log(2.0 * df) + np.log(s) + (df / 2.0 - 1.0) * np.log(df * s * s)
        - df * s * s / 2.0 - (df / 2.0) * math.log(2.0) - math.lgamma(df / 2.0)
    )
    ell = -0.5 * (t * s - nc[:, None]) ** 2 - 0.5 * math.log(2 * math.pi) + np.log(s) + log_q
    peak = ell.max(axis=1, keepdims=True)
    total = (np.exp(ell - peak) * _GL_WEIGHTS[None, :]).sum(axis=1)
    return peak[:, 0] + np.log(total * half)


def _log_integrand(t: float, n: int, r: float):
    """delta -> log[p(t | delta) / p(t | 0) * Cauchy(delta; 0, r)]."""
    df = n - 1
    log_null = float(nct_logpdf(t, df, 0.0)[0])
    rn = math.sqrt(n)

    def f(delta):
        d = np.asarray(delta, dtype=float)
        flat = d.ravel()
        out = nct_logpdf(t, df, flat * rn) - log_null + stats.cauchy.logpdf(flat, 0.0, r)
        return out.reshape(d.shape)

    return f


def _breakpoints(t: float, n: int) -> list[float]:
    center = t / math.sqrt(n)
    width = math.sqrt((1.0 + t * t / (2.0 * (n - 1))) / n)
    pts = {0.0}
    for k in (-12, -6, -3, -1, 0, 1, 3, 6, 12):
        pts.add(center + k * width)
    return sorted(pts)


def _log_integral(log_fn, t: float, n: int, lo: float, hi: float, shift: float, power: int = 0) -> float:
    """log of int_lo^hi delta**power exp(log_fn(delta)) d delta, with exp scaled by ``shift``.

    Adaptive quadrature on pieces split at the likelihood bulk.
    """
    edges = [lo] + [p for p in _breakpoints(t, n) if lo < p < hi] + [hi]

    def fn(d):
        return d**power * math.exp(float(log_fn(d)) - shift)

    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, _ = integrate.quad(fn, a, b, epsabs=0.0, epsrel=1e-10, limit=200)
        total += val
    return math.log(total) + shift if total > 0 else -math.inf


def _shift(log_fn, t: float, n: int) -> float:
    pts = np.array(_breakpoints(t, n))
    return float(np.max(log_fn(pts)))


def log_bf10_quadrature(t: float, n: int, r: float = DEFAULT_PRIOR_WIDTH) -> tuple[float, float]:
    """log BF10 (two-sided) and log of its delta > 0 part, so log BF+0 = log 2 + second value."""
    lf = _log_integrand(t, n, r)
    shift = _shift(lf, t, n)
    log_neg = _log_integral(lf, t, n, -np.inf, 0.0, shift)
    log_pos = _log_integral(lf, t, n, 0.0, np.inf, shift)
    return float(np.logaddexp(log_neg, log_pos)), log_pos


def bf10_quadrature(t: float, n: int, r: float = DEFAULT_PRIOR_WIDTH) -> tuple[float, float]:
    """Two-sided BF10 and its part from delta > 0 (so BF+0 = 2 * positive part)."""
    log_two, log_pos = log_bf10_quadrature(t, n, r)
    return _exp(log_two), _exp(log_pos)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def posterior_grid(t: float, n: int, r: float, positive_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Normalized posterior density of delta on a dense grid spanning +-10 posterior SDs."""
    lf = _log_integrand(t, n, r)
    shift = _shift(lf, t, n)
    lo = -np.inf if not positive_only else 0.0
    log_z = _log_integral(lf, t, n, lo, np.inf, shift)
    m1 = _signed_moment(lf, t, n, lo, shift, 1) / math.exp(log_z - shift)
    m2 = math.exp(_log_integral(lf, t, n, lo, np.inf, shift, power=2) - log_z)
    sd = math.sqrt(max(m2 - m1 * m1, 1e-300))
    a, b = m1 - 10 * sd, m1 + 10 * sd
    if positive_only:
        a = max(a, 0.0)
    grid = np.linspace(a, b, GRID_POINTS)
    lp = lf(grid)
    p = np.exp(lp - lp.max())
    p /= integrate.trapezoid(p, grid)
    return grid, p


def _signed_moment(log_fn, t, n, lo, shift, power) -> float:
    """Scaled (by exp(-shift)) integral of delta**power * exp(log_fn) for odd powers."""
    edges = [lo] + [p for p in _breakpoints(t, n) if lo < p] + [np.inf]

    def fn(d):
        return d**power * math.exp(float(log_fn(d)) - shift)

    return sum(integrate.quad(fn, a, b, epsabs=0.0, epsrel=1e-10, limit=200)[0]
               for a, b in zip(edges, edges[1:]))


def posterior_median(grid: np.ndarray, density: np.ndarray) -> float:
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))))
    cdf /= cdf[-1]
    return float(np.interp(0.5, cdf, grid))


def jzs_one_sample(scores: Sequence[float], baseline: float, config: BayesConfig = BayesConfig()) -> BayesResult:
    """Bayes factor and posterior median effect size for mean(scores) vs. ``baseline``.

    With ``direction='greater'`` the reported factor is BF+0 and the median
    comes from the posterior restricted to delta > 0.
    """
    t, n = t_statistic(scores, baseline)
    r = config.prior_width
    log_two, log_pos = log_bf10_quadrature(t, n, r)
    mass = math.exp(log_pos - log_two)
    one_sided = config.direction == "greater"
    log_bf = math.log(2.0) + log_pos if one_sided else log_two
    bf = _exp(log_bf)
    grid, dens = posterior_grid(t, n, r, positive_only=one_sided)
    return BayesResult(
        bf10=float(bf),
        median_d=posterior_median(grid, dens),
        t_statistic=t,
        n=n,
        prior_width=r,
        direction=config.direction,
        interpretation=interpret(bf),
        bf10_two_sided=_exp(log_two),
        log_bf10=log_bf,
        posterior_positive_mass=float(mass),
    )


def robustness_sweep(scores: Sequence[float], baseline: float, widths: Sequence[float],
                     direction: str = "greater") -> list[tuple[float, float]]:
    return [
        (float(w), jzs_one_sample(scores, baseline, BayesConfig(float(w), direction)).bf10)
        for w in widths
    ]


TABLE_COLUMNS = ("model", "bf10", "median_d", "t", "n", "interpretation")


def write_comparison_csv(rows: Sequence[tuple[str, BayesResult]], path: str | Path) -> None:
    """Table of (model, BF10, median d) in the layout of a model-vs-baseline comparison."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for name, res in rows:
            w.writerow([name, f"{res.bf10:.6g}", f"{res.median_d:.4f}", f"{res.t_statistic:.4f}",
                        res.n, evidence_band(res.bf10)])
