"""bipcompare command line.

Subcommands::

    bipcompare frontier UNIVERSE.json (--target R | --gmv | --tangency)
    bipcompare compare RETURNS.csv --weights-a 1,0 --weights-b 0,1 [--rf 0.0]
    bipcompare mc-verify --regime {marketline,frontier,elliptical} ...
    bipcompare counterexample --rf 0.05 --delta 0.01

Reports are JSON on stdout (or --out FILE). Exit status: 0 ok/PASS,
2 input error, 3 degenerate model, 4 undefined estimate, 5 verification FAIL.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bip import AnalyticBip, BipEstimate, binomial_se, bip_elliptical, bip_frontier, bip_market_line, estimate_bip
from .comparators import DEFAULT_GAMMA, DEFAULT_VAR_LEVEL, discordance_report, make_counterexample
from .errors import BipCompareError, DimensionMismatch, InvalidInput
from .frontier import decompose, frontier_curve, frontier_weights, global_minimum_variance, tangency
from .market_model import PortfolioSpec, load_universe, portfolio_moments
from .sampling import (
    RNG_INFO,
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

EXIT_OK = 0
EXIT_FAIL = 5
SE_BAND = 3.0
DEFAULT_SEED = 42
DEFAULT_DRAWS = 100_000


# ---------------------------------------------------------------- input parsing


def read_returns_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header row of asset names, then one row of simple returns per period."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InvalidInput(f"cannot read returns file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InvalidInput(f"returns file {path} is not UTF-8") from None
    if not rows:
        raise InvalidInput("returns file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if len(body) < 2:
        raise InvalidInput("returns file needs at least two data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InvalidInput(f"line {i}: {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                x = float(cell.strip())
            except ValueError:
                raise InvalidInput(f"line {i}: cannot parse {cell!r} as a number") from None
            if not math.isfinite(x):
                raise InvalidInput(f"line {i}: non-finite value {cell!r}")
            data[i - 2, j] = x
    return header, data


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise InvalidInput(f"cannot parse vector {text!r}; use comma-separated numbers") from None


def parse_matrix(text: str) -> np.ndarray:
    rows = [parse_vector(r) for r in text.split(";")]
    if len({r.size for r in rows}) != 1:
        raise InvalidInput("matrix rows must all have the same length")
    return np.vstack(rows)


def file_digest(path: str | Path) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _weights(text: str, n: int, label: str) -> np.ndarray:
    w = parse_vector(text)
    if w.size != n:
        raise DimensionMismatch(f"{label} has {w.size} entries for {n} assets")
    return PortfolioSpec.from_weights(w).weights


# ---------------------------------------------------------------- output


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def render_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _pretty_lines(obj: Any, prefix: str = "") -> list[str]:
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj):
            out += _pretty_lines(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        out = []
        for i, v in enumerate(obj):
            out += _pretty_lines(v, f"{prefix}[{i}]")
        return out
    if isinstance(obj, float):
        obj = f"{obj:.6g}"
    return [f"{prefix:<48} {obj}"]


def write_plot_data(path: str | Path, series: dict[str, np.ndarray]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for name, xy in series.items():
        for x, y in np.asarray(xy, dtype=float):
            w.writerow([name, repr(float(x)), repr(float(y))])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _base_report(command: str, inputs: dict) -> dict:
    return {"tool": "bipcompare", "version": __version__, "command": command, "inputs": inputs}


def _empirical_block(est, seed, n_draws) -> dict:
    block = est.to_dict()
    block.update({"seed": seed, "draws": n_draws, "rng": dict(RNG_INFO)})
    return block


# ---------------------------------------------------------------- commands


def cmd_frontier(args) -> tuple[dict, dict, int]:
    u = load_universe(args.universe)
    if args.rf is not None:
        u = u.with_risk_free_rate(args.rf)
    d = decompose(u)
    s = d.scalars
    inputs = {
        "universe_file": str(args.universe),
        "universe_digest": file_digest(args.universe),
        "risk_free_rate": u.risk_free_rate,
    }
    result: dict[str, Any] = {
        "scalars": {"A": s.A, "B": s.B, "C": s.C, "D": s.D, "gmv_return": s.gmv_return},
        "decomposition": {"g": d.g, "h": d.h, "fund_one_variance": d.fund_one_variance},
        "asset_names": list(u.asset_names),
    }
    hi = 1.5 * float(np.max(np.abs(u.expected_returns)))
    plot = {"frontier": frontier_curve(d, np.linspace(0.0, hi, 101))}

    if args.target is not None:
        inputs["target"] = args.target
        w = frontier_weights(d, args.target).weights
        kind = "target"
    elif args.gmv:
        w = global_minimum_variance(d).weights
        kind = "gmv"
    else:
        t = tangency(u)
        w = t.weights
        kind = "tangency"
        result["sharpe"] = t.sharpe
        alphas = np.linspace(0.0, 2.0, 41)
        plot["market_line"] = np.column_stack([alphas * t.volatility, (1 - alphas) * u.risk_free_rate + alphas * t.expected_return])
    er, vol = portfolio_moments(u, w)
    result.update({"portfolio": kind, "weights": w, "expected_return": er, "volatility": vol})
    inputs["mode"] = kind
    return {**_base_report("frontier", inputs), "result": result}, plot, EXIT_OK


def cmd_compare(args) -> tuple[dict, dict, int]:
    names, data = read_returns_csv(args.returns)
    w_a = _weights(args.weights_a, len(names), "--weights-a")
    w_b = _weights(args.weights_b, len(names), "--weights-b")
    rf = 0.0 if args.rf is None else args.rf
    sample = project_portfolios(data, w_a, w_b, regime_tag="returns_file")
    est = estimate_bip(sample)
    disc = discordance_report(sample, rf, args.gamma, args.alpha)
    inputs = {
        "returns_file": str(args.returns),
        "returns_digest": file_digest(args.returns),
        "asset_names": names,
        "periods": int(data.shape[0]),
        "weights_a": w_a,
        "weights_b": w_b,
        "risk_free_rate": rf,
        "gamma": args.gamma,
        "var_level": args.alpha,
    }
    report = {
        **_base_report("compare", inputs),
        "bip": est.to_dict(),
        "criteria": disc.to_dict(),
    }
    diff = np.sort(sample.a - sample.b)
    ecdf = np.column_stack([diff, np.arange(1, diff.size + 1) / diff.size])
    return report, {"difference_ecdf": ecdf}, EXIT_OK


def _running_p(sample: PairedSample, points: int = 100) -> np.ndarray:
    a, b = sample.a, sample.b
    wins = np.cumsum(a > b)
    nonties = np.cumsum(a != b)
    idx = np.unique(np.linspace(0, sample.n - 1, min(points, sample.n)).astype(int))
    ok = nonties[idx] > 0
    idx = idx[ok]
    return np.column_stack([idx + 1, wins[idx] / nonties[idx]])


def _mc_sample(args) -> tuple[dict, AnalyticBip, PairedSample, float, dict]:
    """Regime-specific inputs echo, analytic value, paired draws, r0, extra plot series."""
    seed, n = args.seed, args.draws
    plot: dict[str, np.ndarray] = {}
    if args.regime == "marketline":
        if args.m is None or args.v is None or args.rf is None:
            raise InvalidInput("marketline regime needs --m, --v and --rf")
        analytic = bip_market_line(args.m, args.v, args.rf, args.mix_a, args.mix_b)
        cfg = GeneratorConfig(seed, n, LognormalMarketRegime(args.m, args.v, args.rf))
        sample = draw_market_line_pair(cfg, args.mix_a, args.mix_b)
        inputs = {"m": args.m, "v": args.v, "risk_free_rate": args.rf, "mix_a": args.mix_a, "mix_b": args.mix_b}
        grid = np.array([x for x in np.linspace(0.0, 2.0, 41) if x != args.mix_b])
        plot["p_vs_alpha"] = np.column_stack(
            [grid, [bip_market_line(args.m, args.v, args.rf, x, args.mix_b).p for x in grid]]
        )
        return inputs, analytic, sample, args.rf, plot

    if args.regime == "frontier":
        if args.universe is None or args.r1 is None or args.r2 is None:
            raise InvalidInput("frontier regime needs --universe, --r1 and --r2")
        u = load_universe(args.universe)
        d = decompose(u)
        analytic = bip_frontier(d, u, args.r1, args.r2)
        w_a = frontier_weights(d, args.r1).weights
        w_b = frontier_weights(d, args.r2).weights
        returns = draw_asset_returns(GeneratorConfig(seed, n, GaussianRegime(u)))
        sample = project_portfolios(returns, w_a, w_b, seed, "gaussian_frontier")
        inputs = {
            "universe_file": str(args.universe),
            "universe_digest": file_digest(args.universe),
            "r1": args.r1,
            "r2": args.r2,
            "weights_a": w_a,
            "weights_b": w_b,
        }
        rf = u.risk_free_rate if args.rf is None else args.rf
        return inputs, analytic, sample, rf, plot

    # elliptical
    if args.mean is None or args.weights_a is None or args.weights_b is None:
        raise InvalidInput("elliptical regime needs --mean, --weights-a and --weights-b")
    mean = parse_vector(args.mean)
    mix = np.eye(mean.size) if args.mix_matrix is None else parse_matrix(args.mix_matrix)
    radial = RadialLaw("gaussian") if args.radial == "gaussian" else RadialLaw.student_t(args.nu)
    regime = EllipticalRegime(mean, mix, radial)
    w_a = _weights(args.weights_a, mean.size, "--weights-a")
    w_b = _weights(args.weights_b, mean.size, "--weights-b")
    analytic = bip_elliptical(regime.mean, regime.mix, w_a, w_b, radial)
    returns = draw_asset_returns(GeneratorConfig(seed, n, regime))
    sample = project_portfolios(returns, w_a, w_b, seed, f"elliptical({radial.tag()})")
    inputs = {
        "mean": mean,
        "mix_matrix": mix,
        "radial": radial.tag(),
        "weights_a": w_a,
        "weights_b": w_b,
    }
    return inputs, analytic, sample, 0.0 if args.rf is None else args.rf, plot


@dataclass(frozen=True)
class McCheck:
    inputs: dict
    analytic: AnalyticBip
    estimate: BipEstimate
    sample: PairedSample
    risk_free_rate: float
    binomial_se: float
    plot: dict

    @property
    def abs_error(self) -> float:
        return abs(self.estimate.p_hat - self.analytic.p)

    @property
    def passed(self) -> bool:
        if self.binomial_se > 0:
            return self.abs_error < SE_BAND * self.binomial_se
        return self.abs_error == 0.0


def mc_check(args) -> McCheck:
    """Simulate the chosen regime and compare p_hat with the analytic value."""
    inputs, analytic, sample, rf, plot = _mc_sample(args)
    inputs = {"regime": args.regime, **inputs, "seed": args.seed, "draws": args.draws}
    est = estimate_bip(sample)
    se = binomial_se(analytic.p, est.n_effective)
    return McCheck(inputs, analytic, est, sample, rf, se, plot)


def cmd_mc_verify(args) -> tuple[dict, dict, int]:
    chk = mc_check(args)
    inputs, analytic, sample, est, plot = chk.inputs, chk.analytic, chk.sample, chk.estimate, chk.plot
    se, err, passed = chk.binomial_se, chk.abs_error, chk.passed
    disc = discordance_report(sample, chk.risk_free_rate, args.gamma, args.alpha, analytic=analytic)
    report = {
        **_base_report("mc-verify", inputs),
        "analytic": analytic.to_dict(),
        "empirical": _empirical_block(est, args.seed, args.draws),
        "verification": {
            "binomial_se": se,
            "abs_error": err,
            "band_se": SE_BAND,
            "z_score": err / se if se > 0 else None,
            "status": "PASS" if passed else "FAIL",
        },
        "criteria": disc.to_dict(),
    }
    plot["running_p_hat"] = _running_p(sample)
    return report, plot, EXIT_OK if passed else EXIT_FAIL


def cmd_counterexample(args) -> tuple[dict, dict, int]:
    if args.rf is None:
        raise InvalidInput("counterexample needs --rf")
    ce = make_counterexample(args.rf, args.delta)
    cfg = GeneratorConfig(args.seed, args.draws, LognormalMarketRegime(ce.m, ce.v, ce.r0))
    rho_m = draw_asset_returns(cfg)[:, 0]
    n = rho_m.size
    p_mc = float(np.mean(rho_m < ce.r0))
    p_se = binomial_se(ce.p_low_alpha_wins, n)
    excess_mc = float(np.mean(rho_m)) - ce.r0
    excess_se = float(np.std(rho_m, ddof=1)) / math.sqrt(n)
    p_ok = abs(p_mc - ce.p_low_alpha_wins) < SE_BAND * p_se
    excess_ok = abs(excess_mc - ce.excess_expected) < SE_BAND * excess_se
    monte_carlo = {
        "draws": n,
        "seed": args.seed,
        "rng": dict(RNG_INFO),
        "p_market_below_rf": p_mc,
        "p_se": p_se,
        "p_within_band": p_ok,
        "excess_expected": excess_mc,
        "excess_se": excess_se,
        "excess_within_band": excess_ok,
        "band_se": SE_BAND,
    }
    report = {
        **_base_report("counterexample", {"risk_free_rate": args.rf, "delta": args.delta}),
        "analytic": {**ce.to_dict(), "derivation": "market_line"},
        "monte_carlo": monte_carlo,
    }
    deltas = np.geomspace(1e-4, 0.5, 60)
    ces = [make_counterexample(args.rf, x) for x in deltas]
    plot = {
        "p_low_alpha_wins_vs_delta": np.column_stack([deltas, [c.p_low_alpha_wins for c in ces]]),
        "excess_expected_vs_delta": np.column_stack([deltas, [c.excess_expected for c in ces]]),
    }
    return report, plot, EXIT_OK


# ---------------------------------------------------------------- argparse


def _seed(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= x < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return x


def _positive_int(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="RNG seed (default 42)")
    common.add_argument("--draws", type=_positive_int, default=DEFAULT_DRAWS, help="Monte Carlo draws (default 100000)")
    common.add_argument("--rf", type=float, default=None, help="risk-free rate per period")
    common.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="risk aversion for the certainty equivalent (default 1.0)")
    common.add_argument("--alpha", type=float, default=DEFAULT_VAR_LEVEL, help="VaR level (default 0.05)")
    common.add_argument("--out", metavar="FILE", help="write the JSON report to FILE instead of stdout")
    common.add_argument("--pretty", action="store_true", help="human-readable table on stderr")
    common.add_argument("--plot-data", metavar="FILE", help="write (series, x, y) CSV for external plotting")

    parser = argparse.ArgumentParser(prog="bipcompare", description="Better-in-probability portfolio comparison.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frontier", parents=[common], help="minimum-variance frontier, GMV and tangency portfolios")
    p.add_argument("universe", help="universe JSON file")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--target", type=float, help="target expected return (>= 0)")
    mode.add_argument("--gmv", action="store_true", help="global minimum-variance portfolio")
    mode.add_argument("--tangency", action="store_true", help="market (tangency) portfolio")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("compare", parents=[common], help="compare two portfolios on historical returns")
    p.add_argument("returns", help="CSV of per-period simple returns with a header row")
    p.add_argument("--weights-a", required=True, help="comma-separated weights, e.g. 1,0 (use --weights-a=-1,2 for a leading minus)")
    p.add_argument("--weights-b", required=True, help="comma-separated weights")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mc-verify", parents=[common], help="check an analytic probability by simulation")
    p.add_argument("--regime", choices=["marketline", "frontier", "elliptical"], required=True)
    g = p.add_argument_group("marketline")
    g.add_argument("--m", type=float, help="log-return location of the market")
    g.add_argument("--v", type=float, help="log-return volatility of the market")
    g.add_argument("--mix-a", type=float, default=0.0, help="market weight of portfolio a (default 0)")
    g.add_argument("--mix-b", type=float, default=1.0, help="market weight of portfolio b (default 1)")
    g = p.add_argument_group("frontier")
    g.add_argument("--universe", help="universe JSON file")
    g.add_argument("--r1", type=float, help="target return of portfolio a")
    g.add_argument("--r2", type=float, help="target return of portfolio b (< r1)")
    g = p.add_argument_group("elliptical")
    g.add_argument("--mean", help="comma-separated expected returns")
    g.add_argument("--mix-matrix", help="rows separated by ';', entries by ',' (default identity)")
    g.add_argument("--radial", choices=["gaussian", "student_t"], default="gaussian")
    g.add_argument("--nu", type=float, default=5.0, help="student_t degrees of freedom (> 2, default 5)")
    g.add_argument("--weights-a", help="comma-separated weights")
    g.add_argument("--weights-b", help="comma-separated weights")
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("counterexample", parents=[common], help="market beats r0 on average but loses more often")
    p.add_argument("--delta", type=float, required=True, help="margin on both sides of the inequality chain (> 0)")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, plot, status = args.func(args)
    except BipCompareError as exc:
        print(f"bipcompare: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    text = render_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.pretty:
        sys.stderr.write("\n".join(_pretty_lines(json.loads(text))) + "\n")
    if args.plot_data:
        write_plot_data(args.plot_data, plot)
    return status


if __name__ == "__main__":
    sys.exit(main())
