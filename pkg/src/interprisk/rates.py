"""Risk-rate calculations: closed forms, Monte-Carlo oracles, regime logic.

Covers the second moment of the soft-thresholded Gaussian, its Stein-type
lower bound, the expected maximum over k thresholded draws, a Monte-Carlo
estimate of the interpolation cost term, the three-regime classification of
the interpolation level delta, the resulting rate reports, and the exact
(rational-arithmetic) phase diagram over attack-radius exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import backend
from .gaussian import norm_pdf, upper_tail, upper_tail_inv
from .geometry import DEFAULT_GRID_CAP, NORM_CHOICES, GridTooLargeError, pnorm_dist

REGIME_LOW = "low"
REGIME_MODERATE = "moderate"
REGIME_HIGH = "high"

TERM_ATTACK = "attack"
TERM_ESTIMATION = "estimation"
TERM_INTERPOLATION = "interpolation"
TERM_NONCONVERGING = "interpolation-nonconverging"


@dataclass(frozen=True)
class RateParams:
    """Problem size for the rate formulas: n samples in d dimensions, attack
    radius r, smoothness beta, interpolation level delta, noise sigma."""

    n: int
    r: float
    beta: float
    d: int
    delta: float
    sigma: float
    p: float = math.inf

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError("r must be finite and nonnegative")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if self.p not in NORM_CHOICES:
            raise ValueError(f"norm p must be one of {NORM_CHOICES}")


def _default_c3() -> float:
    # tail probability (1 + c)/4 at c = 1/2
    return upper_tail_inv(0.375)


@dataclass(frozen=True)
class RegimeConstants:
    """Thresholds separating the high / moderate / low interpolation regimes.

    High: delta <= c3_coeff * sigma.  Low: delta >= low_coeff * sigma *
    sqrt(log n).  Moderate: in between.
    """

    c3_coeff: float = field(default_factory=_default_c3)
    low_coeff: float = 2.0


@dataclass(frozen=True)
class RateReport:
    attack_term: float
    estimation_term: float
    interpolation_term: float
    regime: str
    dominant: str

    @property
    def total(self) -> float:
        return self.attack_term + self.estimation_term + self.interpolation_term


def soft_threshold_second_moment(delta: float, sigma: float) -> float:
    """E (|xi| - delta)_+^2 for xi ~ N(0, sigma^2), in closed form."""
    if delta < 0.0 or sigma < 0.0:
        raise ValueError("delta and sigma must be nonnegative")
    if sigma == 0.0:
        return 0.0
    a = delta / sigma
    return 2.0 * (sigma**2 + delta**2) * upper_tail(a) - 2.0 * sigma * delta * norm_pdf(a)


def stein_lower_bound(delta: float, sigma: float) -> float:
    """Stein-identity lower bound sigma^2 * (4 * tail(delta/sigma) - 1).

    Equals the second moment exactly at delta = 0 and sits below it for
    delta > 0 (it goes negative once the tail drops under 1/4).
    """
    if delta < 0.0 or sigma < 0.0:
        raise ValueError("delta and sigma must be nonnegative")
    if sigma == 0.0:
        return 0.0
    return sigma**2 * (4.0 * upper_tail(delta / sigma) - 1.0)


class MaxMomentEstimate(NamedTuple):
    estimate: float
    std_error: float
    upper_bound: float


def expected_max_soft_threshold(
    k: int,
    delta: float,
    sigma: float,
    rng: np.random.Generator,
    n_mc: int = 100_000,
) -> MaxMomentEstimate:
    """Monte-Carlo E max_{i<=k} (|xi_i| - delta)_+^2 plus its analytic bound.

    The bound is (sqrt(2 sigma^2 log(2k)) - delta)_+^2 + sigma^2.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if n_mc < 2:
        raise ValueError("n_mc must be at least 2")
    maxima = np.empty(n_mc)
    rows_per_chunk = max(1, 4_000_000 // k)
    done = 0
    while done < n_mc:
        m = min(rows_per_chunk, n_mc - done)
        draws = sigma * rng.standard_normal((m, k))
        np.abs(draws, out=draws)
        draws -= delta
        np.maximum(draws, 0.0, out=draws)
        np.square(draws, out=draws)
        maxima[done : done + m] = draws.max(axis=1)
        done += m
    est = float(maxima.mean())
    se = float(maxima.std(ddof=1) / math.sqrt(n_mc))
    bound = max(math.sqrt(2.0 * sigma**2 * math.log(2.0 * k)) - delta, 0.0) ** 2 + sigma**2
    return MaxMomentEstimate(est, se, bound)


class CostEstimate(NamedTuple):
    estimate: float
    std_error: float


def mc_interpolation_cost(
    params: RateParams,
    rng: np.random.Generator,
    n_designs: int = 100,
    resolution: int = 10_000,
    size_cap: int = DEFAULT_GRID_CAP,
) -> CostEstimate:
    """Monte-Carlo interpolation cost over uniform designs on the unit cube.

    Estimates the mean over the cube of the largest thresholded squared noise
    among design points within distance r, averaged over `n_designs` fresh
    designs of n points with N(0, sigma^2) noise.
    """
    if n_designs < 1:
        raise ValueError("n_designs must be at least 1")
    d = params.d
    if float(resolution) ** d > size_cap:
        raise GridTooLargeError(
            f"cost grid of {resolution}^{d} nodes exceeds the cap of {size_cap}"
        )
    axis = np.linspace(0.0, 1.0, resolution)
    if d == 1:
        kern = backend.get_kernels()
        means = np.empty(n_designs)
        for rep in range(n_designs):
            xs = rng.uniform(0.0, 1.0, params.n)
            noise = params.sigma * rng.standard_normal(params.n)
            vals = np.maximum(np.abs(noise) - params.delta, 0.0) ** 2
            order = np.argsort(xs, kind="stable")
            means[rep] = kern.window_max_mean_1d(
                np.ascontiguousarray(xs[order]),
                np.ascontiguousarray(vals[order]),
                axis,
                float(params.r),
            )
    else:
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=1)
        chunk = max(1, 2_000_000 // max(params.n, 1))
        means = np.empty(n_designs)
        for rep in range(n_designs):
            xs = rng.uniform(0.0, 1.0, (params.n, d))
            noise = params.sigma * rng.standard_normal(params.n)
            vals = np.maximum(np.abs(noise) - params.delta, 0.0) ** 2
            acc = 0.0
            for start in range(0, grid.shape[0], chunk):
                g = grid[start : start + chunk]
                diff = np.abs(g[:, None, :] - xs[None, :, :])
                if params.p == math.inf:
                    dist = diff.max(axis=2)
                elif params.p == 2.0:
                    dist = np.sqrt((diff * diff).sum(axis=2))
                else:
                    dist = diff.sum(axis=2)
                masked = np.where(dist <= params.r, vals[None, :], 0.0)
                acc += masked.max(axis=1).sum()
            means[rep] = acc / grid.shape[0]
    est = float(means.mean())
    se = 0.0 if n_designs == 1 else float(means.std(ddof=1) / math.sqrt(n_designs))
    return CostEstimate(est, se)


def classify_regime(params: RateParams, constants: RegimeConstants | None = None) -> str:
    """Map the interpolation level delta to the high / moderate / low regime."""
    c = constants or RegimeConstants()
    if params.delta <= c.c3_coeff * params.sigma:
        return REGIME_HIGH
    if params.delta >= c.low_coeff * params.sigma * math.sqrt(math.log(params.n)):
        return REGIME_LOW
    return REGIME_MODERATE


def _interpolation_term(params: RateParams, regime: str) -> float:
    if regime == REGIME_LOW:
        return 0.0
    nrd = params.n * params.r**params.d
    if regime == REGIME_MODERATE:
        if params.sigma == 0.0:
            return 0.0
        return min(nrd, 1.0) * math.exp(-params.delta**2 / (2.0 * params.sigma**2))
    if nrd < 1.0:
        return nrd
    if nrd <= math.log(params.n):
        return 1.0
    return math.log(nrd)


def rate_report(params: RateParams, constants: RegimeConstants | None = None) -> RateReport:
    """The three rate components and which one dominates.

    Ties between components resolve in the order attack, estimation,
    interpolation.
    """
    regime = classify_regime(params, constants)
    attack = params.r ** (2.0 * min(1.0, params.beta))
    estimation = float(params.n) ** (-2.0 * params.beta / (2.0 * params.beta + params.d))
    interp = _interpolation_term(params, regime)
    terms = (
        (TERM_ATTACK, attack),
        (TERM_ESTIMATION, estimation),
        (TERM_INTERPOLATION, interp),
    )
    dominant = max(terms, key=lambda kv: kv[1])[0]
    return RateReport(attack, estimation, interp, regime, dominant)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def low_regime_boundary(beta, d) -> Fraction:
    """Attack exponent where the attack term overtakes estimation (low regime)."""
    b, dd = _frac(beta), _frac(d)
    return b / ((2 * b + dd) * min(Fraction(1), b))


def high_regime_boundary(beta, d) -> Fraction:
    """Attack exponent where the interpolation cost stops dominating (high regime)."""
    b, dd = _frac(beta), _frac(d)
    return (4 * b + dd) / (dd * (2 * b + dd))


@dataclass(frozen=True)
class PhaseCell:
    r_exponent: Fraction
    regime: str
    dominant_term: str
    boundary_flag: bool


def phase_diagram(beta, d, regime: str, r_exponents) -> list[PhaseCell]:
    """Dominant rate component per attack-radius exponent, in exact arithmetic.

    The attack radius is read as n**(-a) for each exponent a; all exponent
    comparisons use rational arithmetic, so boundary coincidences are flagged
    exactly.  In the high regime, exponents a <= 1/d leave the interpolation
    cost bounded away from zero and the cell is marked nonconverging.
    """
    if regime not in (REGIME_LOW, REGIME_HIGH):
        raise ValueError("phase diagram covers the 'low' and 'high' regimes")
    b, dd = _frac(beta), _frac(d)
    if b <= 0 or dd < 1:
        raise ValueError("need beta > 0 and d >= 1")
    exps = list(r_exponents)
    if not exps:
        raise ValueError("need at least one attack-radius exponent")
    e_est = 2 * b / (2 * b + dd)
    cells = []
    for a_raw in exps:
        a = _frac(a_raw)
        if a <= 0:
            raise ValueError("attack-radius exponents must be positive")
        e_att = 2 * a * min(Fraction(1), b)
        if regime == REGIME_LOW:
            # slower-decaying (smaller) exponent dominates; ties go to attack
            if e_att <= e_est:
                dominant = TERM_ATTACK
            else:
                dominant = TERM_ESTIMATION
            boundary = e_att == e_est
        else:
            inv_d = Fraction(1) / dd
            if a <= inv_d:
                dominant = TERM_NONCONVERGING
                boundary = a == inv_d
            else:
                e_int = a * dd - 1
                exps = (
                    (TERM_ATTACK, e_att),
                    (TERM_ESTIMATION, e_est),
                    (TERM_INTERPOLATION, e_int),
                )
                best = min(e for _, e in exps)
                winners = [t for t, e in exps if e == best]
                dominant = winners[0]
                boundary = len(winners) > 1
        cells.append(PhaseCell(a, regime, dominant, boundary))
    return cells


@dataclass(frozen=True)
class CurseRow:
    n: int
    r: float
    estimate: float
    std_error: float
    log_log_n: float


def curse_of_sample_size_curve(
    d: int,
    delta: float,
    sigma: float,
    n_list,
    rng: np.random.Generator,
    n_designs: int = 100,
    resolution: int = 10_000,
) -> list[CurseRow]:
    """Interpolation cost along r = (n / log n)^(-1/d) as n grows.

    With this radius the expected in-ball count is log n, so the high-regime
    cost scales like log log n: shrinking the attack radius this way does not
    stop the cost from growing with the sample size.
    """
    rows = []
    for n in n_list:
        n = int(n)
        if n < 2:
            raise ValueError("need n >= 2 for the shrinking-radius rule")
        r = (n / math.log(n)) ** (-1.0 / d)
        params = RateParams(n=n, r=r, beta=1.0, d=d, delta=delta, sigma=sigma)
        est, se = mc_interpolation_cost(
            params, rng, n_designs=n_designs, resolution=resolution
        )
        rows.append(CurseRow(n, r, est, se, math.log(math.log(n))))
    return rows
