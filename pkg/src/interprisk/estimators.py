"""Base regression estimators.

Local polynomial regression with a rectangular or singular kernel, k nearest
neighbors, and the zero function.  All estimators expose `predict` /
`predict_batch` as pure functions of the fitted state; d=1 prediction runs
through the selected kernel backend, higher dimensions use a plain numpy path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from .geometry import Dataset, as_points, pnorm_dist

KERNEL_KINDS = ("rectangular", "singular")


class FitError(RuntimeError):
    """Fitting or prediction could not produce finite values."""


@dataclass(frozen=True)
class KernelSpec:
    """Localizing kernel: flat on the window, or with an integrable pole at 0."""

    kind: str = "rectangular"
    singular_exponent: float = 0.2

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kernel kind must be one of {KERNEL_KINDS}")
        if not 0.0 < self.singular_exponent < 1.0:
            raise ValueError("singular_exponent must lie in (0, 1)")

    @property
    def code(self) -> int:
        return 0 if self.kind == "rectangular" else 1


@dataclass(frozen=True)
class LocalPolyConfig:
    bandwidth: float
    degree: int = 7
    kernel: KernelSpec = field(default_factory=KernelSpec)
    ridge_eps: float = 1e-10

    def __post_init__(self):
        if not (self.bandwidth > 0.0 and math.isfinite(self.bandwidth)):
            raise ValueError("bandwidth must be finite and positive")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if self.ridge_eps < 0.0:
            raise ValueError("ridge_eps must be nonnegative")


class Estimator:
    """Common prediction interface; subclasses implement `_predict`."""

    method = "estimator"
    data: Dataset | None = None

    def predict_batch(self, points) -> np.ndarray:
        pts = as_points(points)
        if self.data is not None and pts.shape[1] != self.data.d:
            raise ValueError(
                f"queries have {pts.shape[1]} coordinates, training data has "
                f"{self.data.d}"
            )
        out = self._predict(pts)
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise FitError(
                f"{self.method} produced a non-finite prediction at query {bad}"
            )
        return out

    def predict(self, x) -> float:
        arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        d = self.data.d if self.data is not None else arr.size
        if arr.size != d:
            raise ValueError(f"expected a single point with {d} coordinates")
        return float(self.predict_batch(arr.reshape(1, d))[0])

    def _predict(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _monomial_exponents(degree: int, d: int) -> np.ndarray:
    exps = [
        e
        for e in itertools.product(range(degree + 1), repeat=d)
        if sum(e) <= degree
    ]
    exps.sort(key=lambda e: (sum(e), e))
    return np.asarray(exps, dtype=np.int64)


class LocalPolyEstimator(Estimator):
    def __init__(self, data: Dataset, config: LocalPolyConfig):
        self.method = f"local-poly-{config.kernel.kind}"
        self.data = data
        self.config = config
        if data.d == 1:
            flat = data.xs[:, 0]
            order = np.argsort(flat, kind="stable")
            self._xs_sorted = np.ascontiguousarray(flat[order])
            self._ys_sorted = np.ascontiguousarray(data.ys[order])

    def _predict(self, pts: np.ndarray) -> np.ndarray:
        cfg = self.config
        if self.data.d == 1:
            kern = backend.get_kernels()
            return kern.lp_predict_1d(
                self._xs_sorted,
                self._ys_sorted,
                np.ascontiguousarray(pts[:, 0]),
                float(cfg.bandwidth),
                int(cfg.degree),
                cfg.kernel.code,
                float(cfg.kernel.singular_exponent),
                float(cfg.ridge_eps),
            )
        return self._predict_nd(pts)

    def _predict_nd(self, pts: np.ndarray) -> np.ndarray:
        from ._kernels_numpy import U_CLAMP, _solve_intercept

        cfg = self.config
        xs, ys = self.data.xs, self.data.ys
        out = np.empty(pts.shape[0])
        for qi in range(pts.shape[0]):
            x = pts[qi]
            h = cfg.bandwidth
            pred = np.nan
            for _ in range(200):
                u_all = pnorm_dist(xs, x, math.inf) / h
                inside = u_all <= 1.0
                if not np.any(inside):
                    h *= 2.0
                    continue
                xw = xs[inside]
                yw = ys[inside]
                u = u_all[inside]
                if cfg.kernel.code == 1:
                    coincident = u_all == 0.0
                    if np.any(coincident):
                        pred = float(ys[coincident].mean())
                        break
                    uc = np.maximum(u, U_CLAMP)
                    w = uc ** (-cfg.kernel.singular_exponent) * np.square(1.0 - uc)
                else:
                    w = np.ones_like(u)
                if w.sum() <= 0.0:
                    h *= 2.0
                    continue
                m = cfg.degree
                exps = _monomial_exponents(m, self.data.d)
                while m > 0 and exps.shape[0] > xw.shape[0]:
                    m -= 1
                    exps = _monomial_exponents(m, self.data.d)
                spread = pnorm_dist(xw, x, math.inf).max()
                t = (xw - x) / (spread if spread > 0.0 else 1.0)
                A = np.prod(t[:, None, :] ** exps[None, :, :], axis=2)
                Aw = A * w[:, None]
                pred = _solve_intercept(A.T @ Aw, Aw.T @ yw, cfg.ridge_eps)
                break
            out[qi] = pred
        return out


class KnnEstimator(Estimator):
    def __init__(self, data: Dataset, k: int):
        self.method = f"{k}-nn"
        self.data = data
        self.k = k
        if data.d == 1:
            self._xs_flat = np.ascontiguousarray(data.xs[:, 0])

    def _predict(self, pts: np.ndarray) -> np.ndarray:
        if self.data.d == 1:
            kern = backend.get_kernels()
            return kern.knn_predict_1d(
                self._xs_flat,
                self.data.ys,
                np.ascontiguousarray(pts[:, 0]),
                int(self.k),
            )
        xs, ys = self.data.xs, self.data.ys
        out = np.empty(pts.shape[0])
        for qi in range(pts.shape[0]):
            dist = pnorm_dist(xs, pts[qi], 2.0)
            order = np.argsort(dist, kind="stable")
            out[qi] = ys[order[: self.k]].mean()
        return out


class ZeroEstimator(Estimator):
    method = "zero"

    def _predict(self, pts: np.ndarray) -> np.ndarray:
        return np.zeros(pts.shape[0])


def fit_local_polynomial(data: Dataset, config: LocalPolyConfig) -> LocalPolyEstimator:
    """Fit (lazily; prediction solves per-query local systems)."""
    return LocalPolyEstimator(data, config)


def fit_knn(data: Dataset, k: int) -> KnnEstimator:
    if not 1 <= k <= data.n:
        raise ValueError("k must lie in [1, n]")
    return KnnEstimator(data, int(k))


def fit_zero() -> ZeroEstimator:
    return ZeroEstimator()


def default_bandwidth_grid(domain, size: int = 20) -> np.ndarray:
    """Geometric bandwidth grid from 0.05 up to half the widest domain side."""
    hi = max(domain.max_width / 2.0, 0.1)
    return np.geomspace(0.05, hi, size)


def select_bandwidth(
    train: Dataset,
    validation: Dataset,
    config: LocalPolyConfig,
    bandwidths,
) -> float:
    """Pick the bandwidth minimizing validation MSE; ties go to the largest h.

    Bandwidths whose fit yields non-finite validation error are skipped; if
    every candidate fails a FitError is raised.
    """
    best_h = None
    best_mse = np.inf
    for h in bandwidths:
        cfg = replace(config, bandwidth=float(h))
        try:
            preds = LocalPolyEstimator(train, cfg).predict_batch(validation.xs)
        except FitError:
            continue
        mse = float(np.mean((preds - validation.ys) ** 2))
        if not math.isfinite(mse):
            continue
        if mse < best_mse or (mse == best_mse and best_h is not None and h > best_h):
            best_mse = mse
            best_h = float(h)
    if best_h is None:
        raise FitError("every bandwidth in the grid produced non-finite validation error")
    return best_h
