"""Compare portfolios by the probability that one out-earns the other."""

__version__ = "0.1.0"

from .bip import AnalyticBip, BipEstimate, bip_elliptical, bip_frontier, bip_gaussian_pair, bip_market_line, estimate_bip
from .comparators import CriteriaPanel, Counterexample, discordance_report, make_counterexample, panel
from .frontier import (
    FrontierDecomposition,
    FrontierScalars,
    TangencyPortfolio,
    decompose,
    frontier_weights,
    global_minimum_variance,
    market_line_point,
    tangency,
)
from .market_model import AssetUniverse, MarketLinePoint, PortfolioSpec, load_universe, portfolio_moments, validate_universe
from .sampling import (
    EllipticalRegime,
    GaussianRegime,
    GeneratorConfig,
    LognormalMarketRegime,
    PairedSample,
    RadialLaw,
    draw_asset_returns,
    draw_market_line_pair,
    project_portfolios,
)
