"""Core geometric types: box domains, datasets, attack balls, seeded streams.

Everything downstream (estimators, attack search, the synthetic bench) builds
on the containers and the two ball primitives defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: norms supported for attack balls and neighbor queries
NORM_CHOICES = (1.0, 2.0, math.inf)

#: refuse exhaustive grids with more nodes than this
DEFAULT_GRID_CAP = 2_000_000


class GridTooLargeError(ValueError):
    """An exhaustive candidate grid would exceed the size cap.

    Callers are expected to fall back to randomized search.
    """


def as_points(x) -> np.ndarray:
    """Coerce to a float (m, d) point array; 1-d input is read as m points in d=1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"expected at most 2 dimensions, got shape {arr.shape}")
    return arr


def as_point(x, d: int | None = None) -> np.ndarray:
    """Coerce to a single float (d,) point."""
    arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if d is not None and arr.size != d:
        raise ValueError(f"expected a point with {d} coordinates, got {arr.size}")
    return arr


def pnorm_dist(points: np.ndarray, x: np.ndarray, p: float) -> np.ndarray:
    """Distances ||points_i - x||_p for p in {1, 2, inf}."""
    diff = np.abs(np.asarray(points, dtype=float) - np.asarray(x, dtype=float))
    if diff.ndim == 1:
        return diff
    if p == math.inf:
        return diff.max(axis=1)
    if p == 2.0:
        return np.sqrt((diff * diff).sum(axis=1))
    if p == 1.0:
        return diff.sum(axis=1)
    raise ValueError(f"unsupported norm p={p}")


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if lo.size != hi.size:
            raise ValueError("lower and upper must have the same length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("domain bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("each lower bound must be strictly below its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, half_width: float, d: int = 1) -> "BoxDomain":
        h = float(half_width)
        return cls(np.full(d, -h), np.full(d, h))

    @classmethod
    def unit_cube(cls, d: int) -> "BoxDomain":
        return cls(np.zeros(d), np.ones(d))

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def max_width(self) -> float:
        return float(self.width.max())

    def contains(self, points) -> np.ndarray:
        pts = as_points(points)
        if pts.shape[1] != self.d:
            raise ValueError("dimension mismatch with domain")
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def clip(self, points) -> np.ndarray:
        return np.clip(as_points(points), self.lower, self.upper)


@dataclass(frozen=True)
class Dataset:
    """Immutable regression sample (X, Y) living inside a box domain."""

    xs: np.ndarray
    ys: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        xs = as_points(self.xs)
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape[0] != ys.size:
            raise ValueError("xs and ys must have the same number of rows")
        if xs.shape[0] == 0:
            raise ValueError("dataset must contain at least one observation")
        if xs.shape[1] != self.domain.d:
            raise ValueError("xs dimension does not match the domain")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise ValueError("dataset values must be finite")
        if not np.all(self.domain.contains(xs)):
            raise ValueError("all design points must lie inside the domain")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Homoskedastic additive Gaussian noise with standard deviation sigma."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and nonnegative")


@dataclass(frozen=True)
class AttackSpec:
    """Perturbation budget: an l_p ball of radius r, discretized at `resolution`."""

    r: float
    p: float = math.inf
    resolution: int = 101

    def __post_init__(self):
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError("attack radius must be finite and nonnegative")
        if self.p not in NORM_CHOICES:
            raise ValueError(f"norm p must be one of {NORM_CHOICES}")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")


def stream_generator(base_seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible generator for the named substream `key`."""
    entropy = int(base_seed) & 0xFFFFFFFFFFFFFFFF
    ss = np.random.SeedSequence(entropy=entropy, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class SeededRng:
    """Named handle on a reproducible random stream.

    Streams with different `stream_index` (or different derived keys) are
    statistically independent; equal keys reproduce identical draws.
    """

    base_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        return stream_generator(self.base_seed, self.stream_index)

    def derive(self, *key: int) -> np.random.Generator:
        return stream_generator(self.base_seed, self.stream_index, *key)


def neighbor_indices(xs, x, radius: float, p: float = math.inf) -> np.ndarray:
    """Indices i with ||xs_i - x||_p <= radius, ascending.

    Parameters
    ----------
    xs : array_like, shape (n, d) or (n,)
        Candidate points.
    x : array_like
        Query point.
    radius : float
        Ball radius; radius=0 selects exact coincidences only.
    p : float
        Norm, one of 1, 2, inf.
    """
    pts = as_points(xs)
    q = as_point(x, pts.shape[1])
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    if p not in NORM_CHOICES:
        raise ValueError(f"norm p must be one of {NORM_CHOICES}")
    dist = pnorm_dist(pts, q, p)
    return np.nonzero(dist <= radius)[0].astype(np.int64)


def clipped_ball_grid(
    x,
    spec: AttackSpec,
    domain: BoxDomain,
    size_cap: int = DEFAULT_GRID_CAP,
) -> np.ndarray:
    """Exhaustive candidate grid on B_p(x, r) intersected with the domain.

    Builds `spec.resolution` equally spaced points per axis on the clipped
    coordinate ranges, takes the cartesian product, and for p < inf keeps only
    points inside the l_p ball.  The query point itself is always a member.

    Raises
    ------
    GridTooLargeError
        If resolution**d exceeds `size_cap`; callers should switch to
        randomized search.
    """
    q = as_point(x, domain.d)
    if not bool(domain.contains(q.reshape(1, -1))[0]):
        raise ValueError("query point must lie inside the domain")
    d = domain.d
    if float(spec.resolution) ** d > size_cap:
        raise GridTooLargeError(
            f"grid of {spec.resolution}^{d} nodes exceeds the cap of {size_cap}"
        )
    if spec.r == 0.0:
        return q.reshape(1, d)
    axes = []
    for j in range(d):
        a = max(domain.lower[j], q[j] - spec.r)
        b = min(domain.upper[j], q[j] + spec.r)
        axes.append(np.linspace(a, b, spec.resolution))
    if d == 1:
        pts = axes[0].reshape(-1, 1)
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    if spec.p != math.inf:
        pts = pts[pnorm_dist(pts, q, spec.p) <= spec.r]
    if not np.any(np.all(pts == q, axis=1)):
        pts = np.concatenate([pts, q.reshape(1, d)], axis=0)
    return pts
