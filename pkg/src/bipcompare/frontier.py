"""Closed-form minimum-variance frontier, two-fund decomposition, tangency
portfolio and market line.

All linear algebra goes through a Cholesky factorization of the covariance;
the inverse is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidInput, NoTangency, NumericalFailure
from .market_model import AssetUniverse, MarketLinePoint, PortfolioSpec

CONDITION_LIMIT = 1e6
IDENTITY_TOL = 1e-10
TANGENCY_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class FrontierScalars:
    A: float  # 1' S^-1 1
    B: float  # 1' S^-1 r
    C: float  # r' S^-1 r
    D: float  # AC - B^2

    @property
    def gmv_return(self) -> float:
        return self.B / self.A

    def variance(self, target: float) -> float:
        """Variance of the frontier portfolio with expected return ``target``."""
        return (self.A * target**2 - 2.0 * self.B * target + self.C) / self.D


@dataclass(frozen=True)
class FrontierDecomposition:
    """w(r) = g + h*r. ``g`` is fully invested with zero expected return;
    ``h`` is self-financing with unit expected return."""

    g: np.ndarray
    h: np.ndarray
    scalars: FrontierScalars
    covariance: np.ndarray

    @property
    def fund_one_variance(self) -> float:
        """Variance of the return of ``h`` (the fund with mean 1)."""
        return float(self.h @ self.covariance @ self.h)


@dataclass(frozen=True)
class TangencyPortfolio:
    weights: np.ndarray
    expected_return: float
    volatility: float
    risk_free_rate: float

    @property
    def sharpe(self) -> float:
        return (self.expected_return - self.risk_free_rate) / self.volatility


def _factor(cov: np.ndarray):
    cond = np.linalg.cond(cov)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NumericalFailure(
            f"covariance condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    return cho_factor(cov, lower=True)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def decompose(u: AssetUniverse) -> FrontierDecomposition:
    mu = u.expected_returns
    ones = np.ones(u.n_assets)
    fac = _factor(u.covariance)
    s_ones = cho_solve(fac, ones)
    s_mu = cho_solve(fac, mu)

    A = float(ones @ s_ones)
    B = float(ones @ s_mu)
    C = float(mu @ s_mu)
    D = A * C - B * B
    if not D > 0:
        raise NumericalFailure(f"frontier determinant D = {D:.3e} is not positive")

    g = (C * s_ones - B * s_mu) / D
    h = (A * s_mu - B * s_ones) / D

    # the four constraint identities, scaled by the size of the terms summed
    checks = (
        (ones @ g - 1.0, np.abs(g).sum()),
        (mu @ g, np.abs(mu * g).sum()),
        (ones @ h, np.abs(h).sum()),
        (mu @ h - 1.0, np.abs(mu * h).sum()),
    )
    for resid, scale in checks:
        if abs(resid) > IDENTITY_TOL * max(1.0, scale):
            raise NumericalFailure(f"frontier constraint residual {resid:.3e}")

    return FrontierDecomposition(
        g=_readonly(g),
        h=_readonly(h),
        scalars=FrontierScalars(A, B, C, D),
        covariance=u.covariance,
    )


def frontier_weights(d: FrontierDecomposition, target: float) -> PortfolioSpec:
    """Minimum-variance fully invested weights with expected return ``target``."""
    if not target >= 0:
        raise InvalidInput("frontier target return must be >= 0")
    return PortfolioSpec(weights=d.g + d.h * target)


def global_minimum_variance(d: FrontierDecomposition) -> PortfolioSpec:
    # Sigma^-1 1 / A, i.e. the frontier point at r = B/A
    s = d.scalars
    return PortfolioSpec(weights=d.g + d.h * s.gmv_return)


def tangency(u: AssetUniverse) -> TangencyPortfolio:
    """Market portfolio: weights proportional to Sigma^-1 (r - r0 1).

    If r0 lies above the GMV return the normalized portfolio sits on the
    lower branch of the frontier; it is returned all the same.
    """
    fac = _factor(u.covariance)
    excess = u.expected_returns - u.risk_free_rate
    z = cho_solve(fac, excess)
    denom = float(z.sum())
    if abs(denom) <= TANGENCY_DENOM_TOL:
        raise NoTangency(
            f"risk-free rate {u.risk_free_rate!r} equals the GMV return; no finite tangency portfolio"
        )
    w = z / denom
    r_m = float(u.expected_returns @ w)
    sigma_m = float(np.sqrt(w @ u.covariance @ w))
    return TangencyPortfolio(_readonly(w), r_m, sigma_m, float(u.risk_free_rate))


def market_line_point(t: TangencyPortfolio, r0: float, alpha: float) -> MarketLinePoint:
    """Point (1-alpha) r0 + alpha r_M on the market line. alpha > 1 is leverage."""
    if not alpha >= 0:
        raise InvalidInput("market line mix coefficient must be >= 0")
    return MarketLinePoint(
        alpha=float(alpha),
        expected_return=(1.0 - alpha) * r0 + alpha * t.expected_return,
        volatility=abs(alpha) * t.volatility,
    )


def frontier_curve(d: FrontierDecomposition, targets: np.ndarray) -> np.ndarray:
    """(sigma, r) samples of the frontier hyperbola, one row per target."""
    targets = np.asarray(targets, dtype=float)
    s = d.scalars
    var = (s.A * targets**2 - 2 * s.B * targets + s.C) / s.D
    return np.column_stack([np.sqrt(np.maximum(var, 0.0)), targets])
