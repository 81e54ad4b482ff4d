"""Classical criteria next to the probabilistic one.

Sharpe ratio, mean-variance certainty equivalent, value at risk and expected
return, plus the lognormal market construction where the market portfolio has
the higher mean but loses to the risk-free asset more than half the time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .bip import A_BETTER, B_BETTER, AnalyticBip, estimate_bip
from .errors import AllTies, InsufficientData, InvalidInput, SigmaZero
from .market_model import MarketLinePoint
from .sampling import PairedSample

DEFAULT_GAMMA = 1.0
DEFAULT_VAR_LEVEL = 0.05
TIE_RTOL = 1e-12
TIE_ATOL = 1e-15

PREFER_A = "a"
PREFER_B = "b"
TIE = "tie"
UNDEFINED = "undefined"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CriteriaPanel:
    expected_return: float
    volatility: float
    sharpe: float | None  # None when the sample volatility is zero
    ceq: float
    var_alpha: float
    gamma: float
    alpha: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def sharpe_ratio(returns: np.ndarray, r0: float) -> float:
    returns = np.asarray(returns, dtype=float)
    if returns.size < 2:
        raise InsufficientData("Sharpe ratio needs at least two observations")
    if np.ptp(returns) == 0.0:
        raise SigmaZero("zero sample volatility; Sharpe ratio undefined")
    return (float(np.mean(returns)) - r0) / float(np.std(returns, ddof=1))


def value_at_risk(returns: np.ndarray, alpha: float = DEFAULT_VAR_LEVEL) -> float:
    """Loss at the lower ``alpha`` quantile, reported as a positive number.

    Order statistics sit at plotting positions i/(n+1) with linear
    interpolation between them (clamped at the sample extremes).
    """
    if not 0 < alpha < 1:
        raise InvalidInput("VaR level must lie in (0, 1)")
    return -float(np.quantile(np.asarray(returns, dtype=float), alpha, method="weibull"))


def point_sharpe(point: MarketLinePoint, r0: float) -> float:
    """Sharpe ratio of an analytic market-line point."""
    if point.volatility == 0.0:
        raise SigmaZero("risk-free point has no Sharpe ratio")
    return (point.expected_return - r0) / point.volatility


def panel(
    returns: np.ndarray,
    r0: float,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = DEFAULT_VAR_LEVEL,
) -> CriteriaPanel:
    returns = np.asarray(returns, dtype=float)
    if returns.ndim != 1 or returns.size < 2:
        raise InsufficientData("criteria panel needs at least two returns")
    if not 0 < alpha < 1:
        raise InvalidInput("VaR level must lie in (0, 1)")
    mean = float(np.mean(returns))
    # constant series: mean rounding must not leak a spurious variance
    var = 0.0 if np.ptp(returns) == 0.0 else float(np.var(returns, ddof=1))
    try:
        sharpe = sharpe_ratio(returns, r0)
    except SigmaZero:
        sharpe = None
    return CriteriaPanel(
        expected_return=mean,
        volatility=math.sqrt(var),
        sharpe=sharpe,
        ceq=mean - 0.5 * gamma * var,
        var_alpha=value_at_risk(returns, alpha),
        gamma=float(gamma),
        alpha=float(alpha),
        n=int(returns.size),
    )


@dataclass(frozen=True)
class Counterexample:
    """Lognormal market with E[rho_M] > r0 and yet P(rho_M < r0) > 1/2."""

    m: float
    v: float
    r0: float
    delta: float
    p_low_alpha_wins: float
    excess_expected: float

    @property
    def log_gross_rf(self) -> float:
        return math.log1p(self.r0)

    def inequality_chain(self) -> dict:
        lo, mid, hi = self.m, self.log_gross_rf, self.m + 0.5 * self.v**2
        return {
            "m": lo,
            "ln(1+r0)": mid,
            "m + v^2/2": hi,
            "m < ln(1+r0)": lo < mid,
            "ln(1+r0) < m + v^2/2": mid < hi,
        }

    def holds(self) -> bool:
        chain = self.inequality_chain()
        return (
            chain["m < ln(1+r0)"]
            and chain["ln(1+r0) < m + v^2/2"]
            and self.p_low_alpha_wins > 0.5
            and self.excess_expected > 0
        )

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "v": self.v,
            "r0": self.r0,
            "delta": self.delta,
            "p_low_alpha_wins": self.p_low_alpha_wins,
            "p_market_beats_rf": 1.0 - self.p_low_alpha_wins,
            "market_expected_return": self.r0 + self.excess_expected,
            "excess_expected": self.excess_expected,
            "inequality_chain": self.inequality_chain(),
            "holds": self.holds(),
        }


def make_counterexample(r0: float, delta: float) -> Counterexample:
    """m = ln(1+r0) - delta, v = 2 sqrt(delta): margin delta on both sides of
    m < ln(1+r0) < m + v^2/2."""
    if not r0 > -1:
        raise InvalidInput("risk-free rate must exceed -1")
    if not delta > 0:
        raise InvalidInput("delta must be > 0")
    log_rf = math.log1p(r0)
    m = log_rf - delta
    v = 2.0 * math.sqrt(delta)
    # (ln(1+r0) - m)/v = delta / (2 sqrt(delta)) = sqrt(delta)/2
    p = float(stats.norm.cdf(math.sqrt(delta) / 2.0))
    # E[rho_M] - r0 = exp(m + v^2/2) - 1 - r0 = (1+r0)(e^delta - 1)
    excess = (1.0 + r0) * math.expm1(delta)
    return Counterexample(m=m, v=v, r0=r0, delta=delta, p_low_alpha_wins=p, excess_expected=excess)


def _prefer_higher(x: float | None, y: float | None) -> str:
    if x is None or y is None:
        return UNDEFINED
    if math.isclose(x, y, rel_tol=TIE_RTOL, abs_tol=TIE_ATOL):
        return TIE
    return PREFER_A if x > y else PREFER_B


@dataclass(frozen=True)
class DiscordanceReport:
    panel_a: CriteriaPanel
    panel_b: CriteriaPanel
    preferences: dict[str, str]
    bip_estimate: dict | None
    analytic: AnalyticBip | None
    flags: list[tuple[str, str]] = field(default_factory=list)

    @property
    def discordant(self) -> bool:
        return bool(self.flags)

    def to_dict(self) -> dict:
        return {
            "panel_a": self.panel_a.to_dict(),
            "panel_b": self.panel_b.to_dict(),
            "preferences": dict(self.preferences),
            "bip_estimate": self.bip_estimate,
            "analytic": self.analytic.to_dict() if self.analytic else None,
            "flags": [list(f) for f in self.flags],
            "discordant": self.discordant,
        }


def discordance_report(
    s: PairedSample,
    r0: float,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = DEFAULT_VAR_LEVEL,
    analytic: AnalyticBip | None = None,
) -> DiscordanceReport:
    """Which portfolio each criterion prefers, and which criteria disagree.

    Preferences are ``"a"``, ``"b"``, ``"tie"`` or ``"undefined"``; the
    probabilistic criterion may also be ``"inconclusive"``. The
    probabilistic verdict uses the sample Wilson interval; when an analytic
    value is supplied it replaces the sample verdict. A pair of criteria is
    flagged only when one prefers ``a`` and the other ``b``.
    """
    pa = panel(s.a, r0, gamma, alpha)
    pb = panel(s.b, r0, gamma, alpha)
    prefs = {
        "expected_return": _prefer_higher(pa.expected_return, pb.expected_return),
        "sharpe": _prefer_higher(pa.sharpe, pb.sharpe),
        "ceq": _prefer_higher(pa.ceq, pb.ceq),
        # smaller loss is better
        "var": _prefer_higher(-pa.var_alpha, -pb.var_alpha),
    }

    try:
        est = estimate_bip(s)
        est_dict = est.to_dict()
        bip_pref = {A_BETTER: PREFER_A, B_BETTER: PREFER_B}.get(est.verdict, INCONCLUSIVE)
    except AllTies:
        est_dict = None
        bip_pref = TIE
    if analytic is not None:
        bip_pref = _prefer_higher(analytic.p, 0.5)
    prefs["bip"] = bip_pref

    names = list(prefs)
    flags = [
        (x, y)
        for i, x in enumerate(names)
        for y in names[i + 1 :]
        if {prefs[x], prefs[y]} == {PREFER_A, PREFER_B}
    ]
    return DiscordanceReport(pa, pb, prefs, est_dict, analytic, flags)
