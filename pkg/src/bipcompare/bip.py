"""The better-in-probability criterion P(rho_a > rho_b) > 1/2.

Empirical estimation from paired samples, plus exact values in the
market-line, frontier, Gaussian-pair and elliptical regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    AllTies,
    BadOrder,
    EqualDistributions,
    EqualMix,
    IdenticalProjection,
    InvalidInput,
    NegativeVariance,
)
from .frontier import FrontierDecomposition
from .market_model import AssetUniverse
from .sampling import PairedSample, RadialLaw

Z_95 = float(stats.norm.ppf(0.975))
NEGATIVE_VARIANCE_TOL = 1e-12
DEGENERATE_SIGMA = 1e-12

A_BETTER = "A_better"
B_BETTER = "B_better"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BipEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    tie_fraction: float
    n: int
    wins: int
    ties: int
    verdict: str

    @property
    def n_effective(self) -> int:
        """Rows that entered the estimate (ties excluded)."""
        return self.n - self.ties

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "confidence": 0.95,
            "interval": "wilson",
            "tie_fraction": self.tie_fraction,
            "n": self.n,
            "wins": self.wins,
            "ties": self.ties,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class AnalyticBip:
    p: float
    derivation: str

    def to_dict(self) -> dict:
        return {"p": self.p, "derivation": self.derivation}


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    if trials <= 0:
        raise InvalidInput("Wilson interval needs at least one trial")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def verdict_from_interval(ci_low: float, ci_high: float) -> str:
    if ci_low > 0.5:
        return A_BETTER
    if ci_high < 0.5:
        return B_BETTER
    return INCONCLUSIVE


def estimate_bip(s: PairedSample) -> BipEstimate:
    """Estimate P(rho_a > rho_b) with ties dropped from both counts.

    Raises :class:`AllTies` when no row separates the two portfolios.
    """
    a, b = s.a, s.b
    n = a.size
    if n < 1:
        raise InvalidInput("empty sample")
    wins = int(np.count_nonzero(a > b))
    ties = int(np.count_nonzero(a == b))
    m = n - ties
    if m == 0:
        raise AllTies(f"all {n} rows tie; P(rho_a > rho_b) is undefined on this sample")
    p_hat = wins / m
    lo, hi = wilson_interval(wins, m)
    # guard float rounding at the 0/1 ends
    lo, hi = min(lo, p_hat), max(hi, p_hat)
    return BipEstimate(
        p_hat=p_hat,
        ci_low=lo,
        ci_high=hi,
        tie_fraction=ties / n,
        n=n,
        wins=wins,
        ties=ties,
        verdict=verdict_from_interval(lo, hi),
    )


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def bip_market_line(m: float, v: float, r0: float, alpha_a: float, alpha_b: float) -> AnalyticBip:
    """P(rho_a > rho_b) for two market-line mixes of a lognormal market.

    Depends on the mixes only through the sign of alpha_b - alpha_a: the
    lower-mix portfolio wins exactly when the market return falls below r0.
    """
    if not v > 0:
        raise InvalidInput("v must be > 0")
    if not r0 > -1:
        raise InvalidInput("risk-free rate must exceed -1")
    if alpha_a == alpha_b:
        raise EqualMix("equal mix coefficients: the two returns coincide almost surely")
    p_market_below = float(stats.norm.cdf((math.log1p(r0) - m) / v))
    p = p_market_below if alpha_a < alpha_b else 1.0 - p_market_below
    return AnalyticBip(p, "market_line")


def bip_frontier(d: FrontierDecomposition, u: AssetUniverse, r1: float, r2: float) -> AnalyticBip:
    """P(rho_{r1} > rho_{r2}) for frontier portfolios under Gaussian returns.

    The difference of the two returns is (r1 - r2) times the return of the
    unit-mean fund ``h``, so the probability is P(h'rho > 0) = Phi(1/sigma_h)
    whatever the pair. The identity holds for any law; the Phi evaluation
    assumes jointly Gaussian asset returns.
    """
    if not r2 >= 0:
        raise InvalidInput("frontier targets must be >= 0")
    if not r1 > r2:
        raise BadOrder(f"need r1 > r2, got r1={r1!r}, r2={r2!r}")
    var_h = float(d.h @ u.covariance @ d.h)
    sigma_h = math.sqrt(max(var_h, 0.0))
    if sigma_h < DEGENERATE_SIGMA:
        return AnalyticBip(1.0, "frontier")
    return AnalyticBip(float(stats.norm.cdf(1.0 / sigma_h)), "frontier")


def bip_gaussian_pair(mean_a: float, mean_b: float, var_a: float, var_b: float, cov_ab: float) -> AnalyticBip:
    var_d = var_a + var_b - 2.0 * cov_ab
    if var_d < -NEGATIVE_VARIANCE_TOL:
        raise NegativeVariance(f"variance of the difference is {var_d:.3e}")
    gap = mean_a - mean_b
    if var_d <= 0.0:
        if gap == 0:
            raise EqualDistributions("zero-variance difference with equal means: returns coincide")
        return AnalyticBip(1.0 if gap > 0 else 0.0, "gaussian_pair")
    return AnalyticBip(float(stats.norm.cdf(gap / math.sqrt(var_d))), "gaussian_pair")


def bip_elliptical(
    mean: np.ndarray,
    mix: np.ndarray,
    w_a: np.ndarray,
    w_b: np.ndarray,
    radial: RadialLaw | None = None,
) -> AnalyticBip:
    """P(<w_a, rho> > <w_b, rho>) for rho = mean + mix @ X, X spherical.

    The difference is <xi, X> shifted by the expected-return gap. By
    spherical symmetry <xi, X> is |xi| times the one-dimensional marginal of
    X, so only the marginal CDF is needed; a zero gap gives exactly 1/2.
    """
    radial = radial or RadialLaw()
    mean = np.asarray(mean, dtype=float)
    mix = np.asarray(mix, dtype=float)
    diff = np.asarray(w_a, dtype=float) - np.asarray(w_b, dtype=float)
    if diff.shape != mean.shape:
        raise InvalidInput("weight vectors must match the mean vector")
    direction = mix.T @ diff
    scale = float(np.linalg.norm(direction))
    if scale <= DEGENERATE_SIGMA * max(1.0, float(np.linalg.norm(mix)) * float(np.linalg.norm(diff))):
        raise IdenticalProjection("the two portfolios have identical returns almost surely")
    gap = float(mean @ diff)
    if gap == 0.0:
        return AnalyticBip(0.5, "elliptical")
    x = gap / scale
    if radial.kind == "gaussian":
        p = stats.norm.cdf(x)
    else:
        p = stats.t.cdf(x, df=radial.nu)
    return AnalyticBip(float(p), "elliptical")
