"""Interpolation wrapper: force a base estimator to (delta-)interpolate.

The wrapped estimator reproduces the base prediction away from the training
points, pins predictions at the training points to within delta of the
observed responses via a soft-thresholded residual shift, and (for tau > 0)
blends the shift linearly over a tau-ball with a hard clamp that keeps the
connector inside the largest thresholded residual present in the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .estimators import Estimator
from .geometry import NORM_CHOICES, Dataset, pnorm_dist

#: queries within this fraction of the widest domain side of a training point
#: are treated as coinciding with it
COINCIDENCE_RTOL = 1e-12


def soft_threshold(t, delta: float):
    """sign(t) * (|t| - delta)_+, elementwise."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    arr = np.asarray(t, dtype=float)
    out = np.sign(arr) * np.maximum(np.abs(arr) - delta, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class InterpolationConfig:
    delta: float
    tau: float = 0.0
    p: float = math.inf

    def __post_init__(self):
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ValueError("delta must be finite and nonnegative")
        if not (self.tau >= 0.0 and math.isfinite(self.tau)):
            raise ValueError("tau must be finite and nonnegative")
        if self.p not in NORM_CHOICES:
            raise ValueError(f"norm p must be one of {NORM_CHOICES}")


class WrappedEstimator(Estimator):
    """Base estimator plus training-point corrections (see module docstring)."""

    def __init__(self, base: Estimator, data: Dataset, config: InterpolationConfig):
        self.method = f"interpolated[{base.method}]"
        self.base = base
        self.data = data
        self.config = config
        self.base_at_train = base.predict_batch(data.xs)
        self.residuals = data.ys - self.base_at_train
        self.coincidence_tol = COINCIDENCE_RTOL * data.domain.max_width
        if data.d == 1:
            flat = data.xs[:, 0]
            order = np.argsort(flat, kind="stable")
            self._order = order.astype(np.int64)
            self._xs_sorted = np.ascontiguousarray(flat[order])
            self._res_sorted = np.ascontiguousarray(self.residuals[order])
            self._base_train_sorted = np.ascontiguousarray(self.base_at_train[order])

    def _predict(self, pts: np.ndarray) -> np.ndarray:
        base_preds = self.base.predict_batch(pts)
        return self.apply_corrections(pts, base_preds)

    def apply_corrections(self, pts: np.ndarray, base_preds: np.ndarray) -> np.ndarray:
        """Overlay training-point corrections on precomputed base predictions.

        Entries farther than max(tau, tolerance) from every training point are
        returned bit-identically.
        """
        cfg = self.config
        if self.data.d == 1:
            kern = backend.get_kernels()
            return kern.wrap_corrections_1d(
                self._xs_sorted,
                self._res_sorted,
                self._base_train_sorted,
                self._order,
                np.ascontiguousarray(pts[:, 0]),
                base_preds,
                float(cfg.tau),
                float(cfg.delta),
                float(self.coincidence_tol),
            )
        return self._corrections_nd(pts, base_preds)

    def _corrections_nd(self, pts: np.ndarray, base_preds: np.ndarray) -> np.ndarray:
        cfg = self.config
        tol = self.coincidence_tol
        out = base_preds.copy()
        xs = self.data.xs
        for qi in range(pts.shape[0]):
            dist = pnorm_dist(xs, pts[qi], cfg.p)
            dmin = dist.min()
            if dmin > max(cfg.tau, tol):
                continue
            ties = np.flatnonzero(dist == dmin)
            j = int(ties[0])
            if dmin <= tol:
                out[qi] = self.base_at_train[j] + soft_threshold(
                    self.residuals[j], cfg.delta
                )
            elif cfg.tau > 0.0 and dmin <= cfg.tau:
                inball = dist <= cfg.tau
                bound = float(
                    np.maximum(np.abs(self.residuals[inball]) - cfg.delta, 0.0).max()
                )
                corr = (1.0 - dmin / cfg.tau) * soft_threshold(
                    self.residuals[j], cfg.delta
                )
                out[qi] = base_preds[qi] + min(max(corr, -bound), bound)
        return out


def wrap_interpolator(
    base: Estimator, data: Dataset, config: InterpolationConfig
) -> WrappedEstimator:
    """Wrap `base` so its maximal training residual is at most config.delta."""
    return WrappedEstimator(base, data, config)


def verify_membership(est: Estimator, data: Dataset, delta: float, slack: float = 1e-10):
    """Check max_i |est(X_i) - Y_i| <= delta + slack.

    Returns
    -------
    (ok, worst_index) : tuple[bool, int]
        `worst_index` is the training index attaining the largest error.
    """
    errs = np.abs(est.predict_batch(data.xs) - data.ys)
    worst = int(np.argmax(errs))
    return bool(errs[worst] <= delta + slack), worst


def max_admissible_tau(n: int, beta: float, d: int) -> float:
    """Largest connector radius that cannot disturb the attained rate.

    Scales as n to the negative max of beta/((2*beta+d)*min(1, beta)) and
    (4*beta+d)/(d*(2*beta+d)).
    """
    if n < 1 or beta <= 0.0 or d < 1:
        raise ValueError("need n >= 1, beta > 0, d >= 1")
    e1 = beta / ((2.0 * beta + d) * min(1.0, beta))
    e2 = (4.0 * beta + d) / (d * (2.0 * beta + d))
    return float(n) ** (-max(e1, e2))
