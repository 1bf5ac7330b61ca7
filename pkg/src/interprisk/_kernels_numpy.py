"""Pure-numpy implementations of the d=1 hot kernels.

These are the reference semantics; the numba backend compiles the same
algorithms.  All local-polynomial systems are solved by Cholesky on the
weighted normal equations, with an on-demand ridge (ridge_eps times the mean
diagonal, escalating) that only enters when the unridged factorization fails.

Kernel weight codes: 0 = rectangular, 1 = singular |u|^(-a) (1-|u|)^2.
"""

import numpy as np

#: distances below this fraction of the bandwidth are clamped (singular kernel)
U_CLAMP = 1e-12

#: Cholesky pivot failure threshold, relative to the mean diagonal
PIVOT_RTOL = 1e-13

#: ridge escalation factor and maximum number of ridged attempts
RIDGE_GROWTH = 1e4
MAX_SOLVE_ATTEMPTS = 7


def _solve_coefficients(M, rhs, ridge_eps):
    """Solution of M b = rhs for symmetric PSD M, or None.

    Tries the unridged system first; on a Cholesky failure adds
    lam = ridge_eps * mean(diag(M)) and escalates.  Returns None if nothing
    succeeds (non-finite input, or ridge disabled and M singular).
    """
    nb = M.shape[0]
    scale = np.trace(M) / nb
    if not np.isfinite(scale) or scale <= 0.0:
        return None
    lam = 0.0
    for _ in range(MAX_SOLVE_ATTEMPTS):
        try:
            L = np.linalg.cholesky(M + lam * np.eye(nb))
            half = np.linalg.solve(L, rhs)
            sol = np.linalg.solve(L.T, half)
            if np.all(np.isfinite(sol)):
                return sol
        except np.linalg.LinAlgError:
            pass
        if ridge_eps <= 0.0:
            return None
        lam = ridge_eps * scale if lam == 0.0 else lam * RIDGE_GROWTH
    return None


def _solve_intercept(M, rhs, ridge_eps):
    """First component of the solution of M b = rhs, or NaN."""
    sol = _solve_coefficients(M, rhs, ridge_eps)
    return np.nan if sol is None else float(sol[0])


def chebyshev_value(coef, t):
    """Evaluate sum_k coef[k] * T_k(t) by the three-term recurrence."""
    total = coef[0]
    if coef.size == 1:
        return float(total)
    prev2 = 1.0
    prev1 = t
    total += coef[1] * t
    for k in range(2, coef.size):
        cur = 2.0 * t * prev1 - prev2
        total += coef[k] * cur
        prev2 = prev1
        prev1 = cur
    return float(total)


def lp_predict_1d(xs, ys, qs, h0, degree, kind, sing_a, ridge_eps):
    """Local polynomial fit evaluated at each query point (d=1).

    Parameters
    ----------
    xs, ys : ndarray
        Training design (ascending) and responses aligned with it.
    qs : ndarray
        Query points.
    h0 : float
        Bandwidth; an empty (or zero-total-weight) window doubles it locally.
    degree : int
        Polynomial degree; falls back to (window size - 1) in thin windows.
    kind : int
        0 rectangular kernel, 1 singular kernel.
    sing_a : float
        Singularity exponent a in (0, 1), used when kind == 1.
    ridge_eps : float
        On-demand ridge size relative to the mean diagonal of the local
        normal equations.

    Returns
    -------
    ndarray
        Fitted intercepts (NaN marks an unresolvable local system).
    """
    out = np.empty(qs.size)
    for qi in range(qs.size):
        x = qs[qi]
        h = h0
        pred = np.nan
        for _ in range(200):
            lo = np.searchsorted(xs, x - h, side="left")
            hi = np.searchsorted(xs, x + h, side="right")
            if hi <= lo:
                h *= 2.0
                continue
            xw = xs[lo:hi]
            yw = ys[lo:hi]
            if kind == 1:
                coincident = xw == x
                if np.any(coincident):
                    pred = float(yw[coincident].mean())
                    break
            dx = xw - x
            if kind == 0:
                w = np.ones_like(dx)
            else:
                u = np.maximum(np.abs(dx) / h, U_CLAMP)
                w = u ** (-sing_a) * np.square(1.0 - np.minimum(u, 1.0))
            if w.sum() <= 0.0:
                h *= 2.0
                continue
            # basis: Chebyshev polynomials over the window's own offset range
            # mapped onto [-1, 1] (an intercept-invariant reparametrization
            # that keeps the local system well conditioned, boundary windows
            # included)
            dmin, dmax = dx.min(), dx.max()
            span = dmax - dmin
            if span > 0.0:
                t = (2.0 * dx - (dmax + dmin)) / span
                t0 = -(dmax + dmin) / span
            else:
                t = np.zeros_like(dx)
                t0 = 0.0
            m = min(degree, xw.size - 1)
            A = np.empty((t.size, m + 1))
            A[:, 0] = 1.0
            if m >= 1:
                A[:, 1] = t
            for col in range(2, m + 1):
                A[:, col] = 2.0 * t * A[:, col - 1] - A[:, col - 2]
            Aw = A * w[:, None]
            coef = _solve_coefficients(A.T @ Aw, Aw.T @ yw, ridge_eps)
            if coef is None:
                pred = np.nan
            else:
                pred = chebyshev_value(coef, t0)
            break
        out[qi] = pred
    return out


def knn_predict_1d(xs, ys, qs, k):
    """Mean response of the k nearest neighbors; distance ties keep the lowest index."""
    n = xs.size
    out = np.empty(qs.size)
    if k == 1:
        chunk = max(1, 4_000_000 // max(n, 1))
        for start in range(0, qs.size, chunk):
            q = qs[start : start + chunk]
            dist = np.abs(q[:, None] - xs[None, :])
            nearest = (dist == dist.min(axis=1, keepdims=True)).argmax(axis=1)
            out[start : start + chunk] = ys[nearest]
        return out
    for qi in range(qs.size):
        dist = np.abs(xs - qs[qi])
        order = np.argsort(dist, kind="stable")
        out[qi] = ys[order[:k]].mean()
    return out


def _soft(t, delta):
    mag = abs(t) - delta
    if mag <= 0.0:
        return 0.0
    return mag if t > 0.0 else -mag


def wrap_corrections_1d(
    xs_sorted,
    res_sorted,
    base_train_sorted,
    orig_idx_sorted,
    qs,
    base_preds,
    tau,
    delta,
    tol,
):
    """Interpolation-wrapper corrections applied on top of base predictions (d=1).

    Queries within `tol` of a training point get the exact interpolating value
    built from the stored base-at-train prediction and residual; queries within
    `tau` get the tent-weighted, bound-clamped correction; all other entries of
    `base_preds` pass through bit-identically.
    """
    out = base_preds.copy()
    wr = max(tau, tol)
    for qi in range(qs.size):
        x = qs[qi]
        lo = np.searchsorted(xs_sorted, x - wr, side="left")
        hi = np.searchsorted(xs_sorted, x + wr, side="right")
        if hi <= lo:
            continue
        dist = np.abs(xs_sorted[lo:hi] - x)
        dmin = dist.min()
        ties = np.nonzero(dist == dmin)[0]
        j = lo + ties[np.argmin(orig_idx_sorted[lo:hi][ties])]
        if dmin <= tol:
            out[qi] = base_train_sorted[j] + _soft(res_sorted[j], delta)
        elif tau > 0.0 and dmin <= tau:
            inball = dist <= tau
            bound = np.maximum(np.abs(res_sorted[lo:hi][inball]) - delta, 0.0).max()
            corr = (1.0 - dmin / tau) * _soft(res_sorted[j], delta)
            out[qi] = base_preds[qi] + min(max(corr, -bound), bound)
    return out


def window_max_mean_1d(xs_sorted, vals, grid, r):
    """Mean over an ascending grid of max{vals_i : |xs_i - g| <= r} (empty max = 0)."""
    acc = np.zeros(grid.size)
    lows = np.searchsorted(grid, xs_sorted - r, side="left")
    highs = np.searchsorted(grid, xs_sorted + r, side="right")
    for j in range(xs_sorted.size):
        lo, hi = lows[j], highs[j]
        if hi > lo:
            seg = acc[lo:hi]
            np.maximum(seg, vals[j], out=seg)
    return float(acc.mean())
