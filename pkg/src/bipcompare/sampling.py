"""Seeded return generators.

Draws are produced in fixed chunks of ``CHUNK_SIZE`` rows. Chunk ``k`` uses
its own PCG64 stream seeded from ``SeedSequence(seed, spawn_key=(k,))``, so
the output depends only on (seed, n_draws, regime) and never on how many
worker threads filled the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DimensionMismatch, InvalidInput, SingularMixMatrix
from .market_model import AssetUniverse

CHUNK_SIZE = 65536
THREADS_ENV = "BIPCOMPARE_THREADS"
RNG_INFO = {
    "bit_generator": "PCG64",
    "seeding": "SeedSequence(entropy=seed, spawn_key=(chunk,))",
    "chunk_size": CHUNK_SIZE,
    "scheme_version": 1,
    "numpy": np.__version__,
}
_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class RadialLaw:
    """Radial part of a spherical vector X = R*U. ``kind`` is ``"gaussian"``
    or ``"student_t"`` (needs ``nu > 2`` for a finite covariance)."""

    kind: str = "gaussian"
    nu: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            if self.nu is not None:
                raise InvalidInput("gaussian radial law takes no degrees of freedom")
        elif self.kind == "student_t":
            if self.nu is None or not self.nu > 2:
                raise InvalidInput("student_t radial law needs nu > 2 (finite covariance)")
        else:
            raise InvalidInput(f"unknown radial law {self.kind!r}")

    @classmethod
    def student_t(cls, nu: float) -> "RadialLaw":
        return cls("student_t", float(nu))

    @property
    def variance_factor(self) -> float:
        """Cov(X) = variance_factor * I."""
        return 1.0 if self.kind == "gaussian" else self.nu / (self.nu - 2.0)

    def tag(self) -> str:
        return "gaussian" if self.kind == "gaussian" else f"student_t(nu={self.nu:g})"


@dataclass(frozen=True)
class GaussianRegime:
    universe: AssetUniverse

    tag = "gaussian"


@dataclass(frozen=True)
class LognormalMarketRegime:
    """Market return exp(m + vZ) - 1 next to a risk-free rate r0."""

    m: float
    v: float
    r0: float

    tag = "lognormal_market"

    def __post_init__(self) -> None:
        if not self.v > 0:
            raise InvalidInput("lognormal volatility v must be > 0")
        if not self.r0 > -1:
            raise InvalidInput("risk-free rate must exceed -1")


@dataclass(frozen=True)
class EllipticalRegime:
    """Returns r + A X with X spherically symmetric."""

    mean: np.ndarray
    mix: np.ndarray
    radial: RadialLaw = field(default_factory=RadialLaw)

    tag = "elliptical"

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float)
        mix = np.array(self.mix, dtype=float)
        if mean.ndim != 1 or mix.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"mix matrix shape {mix.shape} does not match mean of length {mean.size}")
        sv = np.linalg.svd(mix, compute_uv=False)
        if not sv[0] > 0 or sv[-1] <= 1e-10 * sv[0]:
            raise SingularMixMatrix("mix matrix is not invertible")
        mean.setflags(write=False)
        mix.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "mix", mix)


Regime = Union[GaussianRegime, LognormalMarketRegime, EllipticalRegime]


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_draws: int
    regime: Regime

    def __post_init__(self) -> None:
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed <= _SEED_MAX):
            raise InvalidInput("seed must be a 64-bit unsigned integer")
        if not (isinstance(self.n_draws, (int, np.integer)) and self.n_draws >= 1):
            raise InvalidInput("n_draws must be a positive integer")


@dataclass(frozen=True)
class PairedSample:
    """Simultaneous returns of two portfolios, one row per draw."""

    draws: np.ndarray
    seed: int | None = None
    regime_tag: str = "unspecified"

    def __post_init__(self) -> None:
        d = np.array(self.draws, dtype=float)
        if d.ndim != 2 or d.shape[1] != 2:
            raise DimensionMismatch(f"paired sample must be N x 2, got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)

    @property
    def a(self) -> np.ndarray:
        return self.draws[:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.draws[:, 1]

    @property
    def n(self) -> int:
        return self.draws.shape[0]

    def swapped(self) -> "PairedSample":
        return PairedSample(self.draws[:, ::-1], self.seed, self.regime_tag)


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InvalidInput(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = min(4, os.cpu_count() or 1)
    return max(1, threads)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(chunk,))
    return np.random.Generator(np.random.PCG64(ss))


def _chunked(
    seed: int, n_draws: int, width: int, fill: Callable[[np.random.Generator, int], np.ndarray], threads: int | None
) -> np.ndarray:
    out = np.empty((n_draws, width))
    starts = range(0, n_draws, CHUNK_SIZE)

    def work(k_start):
        k, start = k_start
        rows = min(CHUNK_SIZE, n_draws - start)
        out[start : start + rows] = fill(_chunk_rng(seed, k), rows)

    jobs = list(enumerate(starts))
    workers = min(thread_count(threads), len(jobs))
    if workers == 1:
        for job in jobs:
            work(job)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, jobs))
    return out


def spherical_draws(rng: np.random.Generator, rows: int, dim: int, radial: RadialLaw) -> np.ndarray:
    """X = R*U: U uniform on the unit sphere, R from the radial law."""
    g = rng.standard_normal((rows, dim))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    radius = np.sqrt(rng.chisquare(dim, rows))
    if radial.kind == "student_t":
        radius = radius / np.sqrt(rng.chisquare(radial.nu, rows) / radial.nu)
    return u * radius[:, None]


def draw_asset_returns(cfg: GeneratorConfig, threads: int | None = None) -> np.ndarray:
    """N x n matrix of asset returns for ``cfg.regime``.

    The lognormal market regime yields a single column, the market return.
    """
    reg = cfg.regime
    if isinstance(reg, GaussianRegime):
        mu = reg.universe.expected_returns
        chol = np.linalg.cholesky(reg.universe.covariance)

        def fill(rng, rows):
            return mu + rng.standard_normal((rows, mu.size)) @ chol.T

        width = mu.size
    elif isinstance(reg, EllipticalRegime):
        mu, mix, radial = reg.mean, reg.mix, reg.radial

        def fill(rng, rows):
            return mu + spherical_draws(rng, rows, mu.size, radial) @ mix.T

        width = mu.size
    elif isinstance(reg, LognormalMarketRegime):

        def fill(rng, rows):
            return np.expm1(reg.m + reg.v * rng.standard_normal((rows, 1)))

        width = 1
    else:
        raise InvalidInput(f"unknown regime {reg!r}")
    return _chunked(cfg.seed, cfg.n_draws, width, fill, threads)


def draw_market_line_pair(
    cfg: GeneratorConfig, alpha_a: float, alpha_b: float, threads: int | None = None
) -> PairedSample:
    """Both market-line mixes applied to one shared market draw per row."""
    reg = cfg.regime
    if not isinstance(reg, LognormalMarketRegime):
        raise InvalidInput("draw_market_line_pair needs a lognormal_market regime")
    rho_m = draw_asset_returns(cfg, threads)[:, 0]
    r0 = reg.r0
    draws = np.column_stack(
        [(1.0 - alpha_a) * r0 + alpha_a * rho_m, (1.0 - alpha_b) * r0 + alpha_b * rho_m]
    )
    return PairedSample(draws, cfg.seed, f"lognormal_market(alpha_a={alpha_a:g}, alpha_b={alpha_b:g})")


def project_portfolios(
    returns: np.ndarray,
    w_a: np.ndarray,
    w_b: np.ndarray,
    seed: int | None = None,
    regime_tag: str = "projected",
) -> PairedSample:
    returns = np.asarray(returns, dtype=float)
    w_a = np.asarray(w_a, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    if returns.ndim != 2:
        raise DimensionMismatch("returns must be an N x n matrix")
    n = returns.shape[1]
    if w_a.shape != (n,) or w_b.shape != (n,):
        raise DimensionMismatch(f"weights of length {w_a.size}/{w_b.size} for {n} return columns")
    return PairedSample(np.column_stack([returns @ w_a, returns @ w_b]), seed, regime_tag)
