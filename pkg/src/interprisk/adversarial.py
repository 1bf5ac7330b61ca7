"""Adversarial risk under l_p input perturbations.

The attacker moves each test input anywhere in the radius-r ball clipped to
the domain; the loss records the worst squared gap to the clean target.  For
d <= 3 the maximization is exhaustive over a clipped grid that always also
contains every training point inside the ball (interpolation spikes are far
narrower than any reasonable grid step); in higher dimensions a randomized
search with coordinate-descent refinement takes over.

Sweeps over several radii reuse one nested candidate set (the union of all
finer-radius candidates), which makes the reported losses monotone in r by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    DEFAULT_GRID_CAP,
    AttackSpec,
    BoxDomain,
    Dataset,
    GridTooLargeError,
    as_points,
    clipped_ball_grid,
    pnorm_dist,
)

RANDOM_SEARCH_DRAWS = 1000
RANDOM_SEARCH_REFINE_STEPS = 20


@dataclass(frozen=True)
class RiskEstimate:
    """Mean adversarial loss together with its per-test-point values."""

    value: float
    per_point: np.ndarray

    @property
    def n_points(self) -> int:
        return self.per_point.size


@dataclass(frozen=True)
class CandidateSet:
    """Flattened nested candidate sets for a batch of test points.

    `owner[i]` is the test-point index of candidate i and `level[i]` the
    position in the radius sweep at which it first becomes reachable.
    """

    points: np.ndarray
    owner: np.ndarray
    level: np.ndarray
    n_owners: int
    n_levels: int


def _check_radii(r_values) -> np.ndarray:
    rs = np.asarray(list(r_values), dtype=float)
    if rs.size == 0:
        raise ValueError("need at least one attack radius")
    if np.any(rs < 0.0) or not np.all(np.isfinite(rs)):
        raise ValueError("attack radii must be finite and nonnegative")
    if np.any(np.diff(rs) < 0.0):
        raise ValueError("attack radii must be nondecreasing")
    return rs


def resolve_targets(test_xs: np.ndarray, truth=None, targets=None) -> np.ndarray:
    """Clean targets: explicit array, or truth evaluated at the test points."""
    if targets is not None:
        out = np.asarray(targets, dtype=float).ravel()
        if out.size != test_xs.shape[0]:
            raise ValueError("targets length must match the number of test points")
        return out
    if truth is None:
        raise ValueError("provide either `truth` or `targets`")
    if test_xs.shape[1] == 1:
        out = np.asarray(truth(test_xs[:, 0]), dtype=float)
    else:
        out = np.asarray(truth(test_xs), dtype=float)
    return out.ravel()


def build_candidate_levels(
    test_xs,
    r_values,
    domain: BoxDomain,
    p: float = math.inf,
    resolution: int = 101,
    train_xs=None,
    size_cap: int = DEFAULT_GRID_CAP,
) -> CandidateSet:
    """Construct the nested grid-plus-training-point candidate sets.

    Raises GridTooLargeError when the per-radius grids are infeasible; the
    caller is expected to fall back to `randomized search`.
    """
    pts = as_points(test_xs)
    rs = _check_radii(r_values)
    train = None if train_xs is None else as_points(train_xs)
    chunks, owners, levels = [], [], []
    for i in range(pts.shape[0]):
        x = pts[i]
        tdist = None if train is None else pnorm_dist(train, x, p)
        prev = -1.0
        for k, r in enumerate(rs):
            if r == 0.0:
                grid = x.reshape(1, -1)
            else:
                grid = clipped_ball_grid(
                    x, AttackSpec(r=float(r), p=p, resolution=resolution), domain, size_cap
                )
            seg = [grid]
            if tdist is not None:
                sel = (tdist > prev) & (tdist <= r)
                if np.any(sel):
                    seg.append(train[sel])
            seg_pts = np.concatenate(seg, axis=0)
            chunks.append(seg_pts)
            owners.append(np.full(seg_pts.shape[0], i, dtype=np.int64))
            levels.append(np.full(seg_pts.shape[0], k, dtype=np.int64))
            prev = r
    return CandidateSet(
        points=np.concatenate(chunks, axis=0),
        owner=np.concatenate(owners),
        level=np.concatenate(levels),
        n_owners=pts.shape[0],
        n_levels=rs.size,
    )


def losses_from_candidates(
    cands: CandidateSet, preds: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Per-radius, per-test-point worst squared losses, shape (K, m).

    Row k is the running maximum over all candidates reachable at radius k,
    so rows are nondecreasing in k.
    """
    sq = (targets[cands.owner] - preds) ** 2
    mat = np.full((cands.n_owners, cands.n_levels), -np.inf)
    np.maximum.at(mat, (cands.owner, cands.level), sq)
    np.maximum.accumulate(mat, axis=1, out=mat)
    return mat.T.copy()


def _project_ball_domain(pt, x, r, p, domain):
    out = np.clip(pt, domain.lower, domain.upper)
    if p == math.inf:
        return np.clip(out, x - r, x + r)
    off = out - x
    nrm = pnorm_dist(off.reshape(1, -1), np.zeros_like(off), p)[0]
    if nrm > r and nrm > 0.0:
        out = x + off * (r / nrm)
        out = np.clip(out, domain.lower, domain.upper)
        nrm = pnorm_dist((out - x).reshape(1, -1), np.zeros_like(off), p)[0]
        if nrm > r * (1.0 + 1e-9):
            return None
    return out


def _draw_in_clipped_ball(x, r, p, domain, rng, count):
    lo = np.maximum(domain.lower, x - r)
    hi = np.minimum(domain.upper, x + r)
    if p == math.inf:
        return rng.uniform(lo, hi, size=(count, x.size))
    kept = []
    have = 0
    for _ in range(50):
        batch = rng.uniform(lo, hi, size=(count, x.size))
        inside = pnorm_dist(batch, x, p) <= r
        if np.any(inside):
            kept.append(batch[inside])
            have += int(inside.sum())
        if have >= count:
            break
    if not kept:
        return x.reshape(1, -1)
    return np.concatenate(kept, axis=0)[:count]


def _random_point_losses(
    est, x, target, rs, p, domain, train_xs, rng, n_draws, n_refine
):
    best_val = -np.inf
    best_pt = x.copy()
    tdist = None if train_xs is None else pnorm_dist(train_xs, x, p)
    losses = np.empty(rs.size)
    prev = -1.0
    for k, r in enumerate(rs):
        cands = [x.reshape(1, -1)] if k == 0 else []
        if r > 0.0:
            cands.append(_draw_in_clipped_ball(x, r, p, domain, rng, n_draws))
        if tdist is not None:
            sel = (tdist > prev) & (tdist <= r)
            if np.any(sel):
                cands.append(train_xs[sel])
        if cands:
            pts = np.concatenate(cands, axis=0)
            vals = (target - est.predict_batch(pts)) ** 2
            j = int(np.argmax(vals))
            if vals[j] > best_val:
                best_val = float(vals[j])
                best_pt = pts[j].copy()
        if r > 0.0:
            step = r / 2.0
            for _ in range(n_refine):
                improved = False
                for axis in range(x.size):
                    for sgn in (1.0, -1.0):
                        cand = best_pt.copy()
                        cand[axis] += sgn * step
                        cand = _project_ball_domain(cand, x, r, p, domain)
                        if cand is None:
                            continue
                        val = (target - est.predict(cand)) ** 2
                        if val > best_val:
                            best_val = val
                            best_pt = cand
                            improved = True
                if not improved:
                    step /= 2.0
        losses[k] = best_val
        prev = r
    return losses


def sweep_losses(
    est,
    test_xs,
    r_values,
    domain: BoxDomain | None = None,
    p: float = math.inf,
    resolution: int = 101,
    truth=None,
    targets=None,
    rng: np.random.Generator | None = None,
    size_cap: int = DEFAULT_GRID_CAP,
) -> np.ndarray:
    """Adversarial losses over a nondecreasing radius sweep, shape (K, m)."""
    pts = as_points(test_xs)
    rs = _check_radii(r_values)
    if domain is None:
        if est.data is None:
            raise ValueError("domain is required for estimators without data")
        domain = est.data.domain
    tgt = resolve_targets(pts, truth, targets)
    train = None if est.data is None else est.data.xs
    try:
        cands = build_candidate_levels(
            pts, rs, domain, p=p, resolution=resolution, train_xs=train,
            size_cap=size_cap,
        )
    except GridTooLargeError:
        if rng is None:
            raise ValueError(
                "candidate grid infeasible at this dimension; randomized search "
                "needs an explicit rng"
            ) from None
        out = np.empty((rs.size, pts.shape[0]))
        for i in range(pts.shape[0]):
            out[:, i] = _random_point_losses(
                est, pts[i], tgt[i], rs, p, domain, train, rng,
                RANDOM_SEARCH_DRAWS, RANDOM_SEARCH_REFINE_STEPS,
            )
        return out
    preds = est.predict_batch(cands.points)
    return losses_from_candidates(cands, preds, tgt)


def adversarial_risk(
    est,
    test_xs,
    spec: AttackSpec,
    domain: BoxDomain | None = None,
    truth=None,
    targets=None,
    rng: np.random.Generator | None = None,
) -> RiskEstimate:
    """Mean worst-case squared loss at attack radius spec.r."""
    losses = sweep_losses(
        est,
        test_xs,
        [spec.r],
        domain=domain,
        p=spec.p,
        resolution=spec.resolution,
        truth=truth,
        targets=targets,
        rng=rng,
    )[0]
    return RiskEstimate(value=float(losses.mean()), per_point=losses)


def standard_risk(
    est,
    test_xs,
    domain: BoxDomain | None = None,
    truth=None,
    targets=None,
    p: float = math.inf,
    resolution: int = 101,
) -> RiskEstimate:
    """Clean risk; identical to adversarial_risk at r = 0."""
    return adversarial_risk(
        est,
        test_xs,
        AttackSpec(r=0.0, p=p, resolution=resolution),
        domain=domain,
        truth=truth,
        targets=targets,
    )


def training_error(est, data: Dataset) -> tuple[float, float]:
    """(mean squared training residual, max absolute training residual)."""
    err = est.predict_batch(data.xs) - data.ys
    return float(np.mean(err**2)), float(np.max(np.abs(err)))
