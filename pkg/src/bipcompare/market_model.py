"""Market primitives: expected returns, covariance, risk-free rate, portfolios."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateReturns,
    DimensionMismatch,
    InvalidInput,
    NonSymmetric,
    NotPositiveDefinite,
)

SYMMETRY_TOL = 1e-12
PD_RELATIVE_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AssetUniverse:
    """Validated (r, Sigma, r0) triple. Build it through :func:`validate_universe`."""

    expected_returns: np.ndarray
    covariance: np.ndarray
    risk_free_rate: float
    asset_names: tuple[str, ...]

    @property
    def n_assets(self) -> int:
        return len(self.expected_returns)

    def with_risk_free_rate(self, r0: float) -> "AssetUniverse":
        return validate_universe(
            {
                "expected_returns": self.expected_returns,
                "covariance": self.covariance,
                "risk_free_rate": r0,
                "asset_names": list(self.asset_names),
            }
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "asset_names": list(self.asset_names),
            "expected_returns": self.expected_returns.tolist(),
            "covariance": self.covariance.tolist(),
            "risk_free_rate": float(self.risk_free_rate),
        }


@dataclass(frozen=True)
class PortfolioSpec:
    """A portfolio given by exactly one of: asset weights, a market-line mix
    coefficient, or a target return on the frontier."""

    weights: np.ndarray | None = None
    market_line_alpha: float | None = None
    frontier_target: float | None = None

    def __post_init__(self) -> None:
        given = [
            x is not None
            for x in (self.weights, self.market_line_alpha, self.frontier_target)
        ]
        if sum(given) != 1:
            raise InvalidInput("PortfolioSpec needs exactly one of weights, market_line_alpha, frontier_target")
        if self.weights is not None:
            w = _frozen(self.weights)
            if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
                raise InvalidInput("weights must be a non-empty finite vector")
            if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise InvalidInput(f"weights sum to {w.sum()!r}, not 1 (tolerance {WEIGHT_SUM_TOL})")
            object.__setattr__(self, "weights", w)
        if self.market_line_alpha is not None and not self.market_line_alpha >= 0:
            raise InvalidInput("market_line_alpha must be >= 0")
        if self.frontier_target is not None and not self.frontier_target >= 0:
            raise InvalidInput("frontier_target must be >= 0")

    @classmethod
    def from_weights(cls, weights: Sequence[float] | np.ndarray) -> "PortfolioSpec":
        return cls(weights=np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class MarketLinePoint:
    alpha: float
    expected_return: float
    volatility: float


def validate_universe(raw: Mapping[str, Any]) -> AssetUniverse:
    """Check a raw bundle and return an immutable :class:`AssetUniverse`.

    ``raw`` needs ``expected_returns``, ``covariance`` and ``risk_free_rate``;
    ``asset_names`` defaults to ``asset_1..asset_n``. Nothing is repaired:
    an asymmetric covariance is rejected, not symmetrized.
    """
    try:
        mu = np.asarray(raw["expected_returns"], dtype=float)
        cov = np.asarray(raw["covariance"], dtype=float)
        r0 = float(raw["risk_free_rate"])
    except KeyError as exc:
        raise InvalidInput(f"missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"non-numeric universe entry: {exc}") from None

    if mu.ndim != 1 or mu.size == 0:
        raise DimensionMismatch("expected_returns must be a non-empty vector")
    n = mu.size
    if cov.shape != (n, n):
        raise DimensionMismatch(f"covariance has shape {cov.shape}, expected {(n, n)}")
    names = raw.get("asset_names")
    if names is None:
        names = [f"asset_{i + 1}" for i in range(n)]
    names = tuple(str(s) for s in names)
    if len(names) != n:
        raise DimensionMismatch(f"{len(names)} asset names for {n} assets")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov)) and np.isfinite(r0)):
        raise InvalidInput("universe entries must be finite")
    if r0 <= -1.0:
        raise InvalidInput("risk_free_rate must exceed -1")

    asym = np.max(np.abs(cov - cov.T))
    if asym > SYMMETRY_TOL:
        raise NonSymmetric(f"covariance asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")
    eig = np.linalg.eigvalsh(cov)
    if not (eig[-1] > 0 and eig[0] > PD_RELATIVE_TOL * eig[-1]):
        raise NotPositiveDefinite(
            f"smallest eigenvalue {eig[0]:.3e} not above {PD_RELATIVE_TOL} x largest {eig[-1]:.3e}"
        )
    # r parallel to 1 collapses the frontier (D = 0)
    if n == 1 or np.ptp(mu) <= 1e-12 * max(1.0, np.max(np.abs(mu))):
        raise DegenerateReturns("expected returns are proportional to the all-ones vector")

    return AssetUniverse(_frozen(mu), _frozen(cov), r0, names)


def load_universe(path: str | Path) -> AssetUniverse:
    """Read a universe JSON file (asset_names, expected_returns, covariance, risk_free_rate)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read universe file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"universe file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidInput("universe file must hold a JSON object")
    if "asset_names" not in raw:
        raise InvalidInput("missing key 'asset_names'")
    return validate_universe(raw)


def portfolio_moments(u: AssetUniverse, p: PortfolioSpec | np.ndarray) -> tuple[float, float]:
    """Expected return r'w and volatility sqrt(w' Sigma w) of a weights portfolio."""
    w = p.weights if isinstance(p, PortfolioSpec) else np.asarray(p, dtype=float)
    if w is None:
        raise InvalidInput("portfolio_moments needs a weights portfolio")
    if w.shape != (u.n_assets,):
        raise DimensionMismatch(f"weights have shape {w.shape}, universe has {u.n_assets} assets")
    var = float(w @ u.covariance @ w)
    return float(u.expected_returns @ w), float(np.sqrt(max(var, 0.0)))
