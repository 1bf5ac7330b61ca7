"""Numba-compiled d=1 hot kernels.

Same contracts as `_kernels_numpy`; the local systems use a hand-rolled
Cholesky so that pivot failures select the on-demand ridge without exceptions.
All functions release the GIL and cache their compiled form on disk.
"""

import numpy as np
from numba import njit

from ._kernels_numpy import (
    MAX_SOLVE_ATTEMPTS,
    PIVOT_RTOL,
    RIDGE_GROWTH,
    U_CLAMP,
)


@njit(cache=True, nogil=True)
def _chol_solve(M, rhs, sol, pivot_floor):
    """In-place Cholesky solve of M x = rhs; returns False on a pivot failure."""
    nb = M.shape[0]
    L = np.zeros((nb, nb))
    for j in range(nb):
        acc = M[j, j]
        for s in range(j):
            acc -= L[j, s] * L[j, s]
        if not np.isfinite(acc) or acc <= pivot_floor:
            return False
        piv = np.sqrt(acc)
        L[j, j] = piv
        for i in range(j + 1, nb):
            acc = M[i, j]
            for s in range(j):
                acc -= L[i, s] * L[j, s]
            L[i, j] = acc / piv
    for i in range(nb):
        acc = rhs[i]
        for s in range(i):
            acc -= L[i, s] * sol[s]
        sol[i] = acc / L[i, i]
    for i in range(nb - 1, -1, -1):
        acc = sol[i]
        for s in range(i + 1, nb):
            acc -= L[s, i] * sol[s]
        sol[i] = acc / L[i, i]
    return True


@njit(cache=True, nogil=True)
def _solve_coeffs_nb(M, rhs, sol, ridge_eps):
    nb = M.shape[0]
    tr = 0.0
    for j in range(nb):
        tr += M[j, j]
    scale = tr / nb
    if not np.isfinite(scale) or scale <= 0.0:
        return False
    lam = 0.0
    for _ in range(MAX_SOLVE_ATTEMPTS):
        Mw = M.copy()
        for j in range(nb):
            Mw[j, j] += lam
        if _chol_solve(Mw, rhs, sol, scale * PIVOT_RTOL):
            finite = True
            for j in range(nb):
                if not np.isfinite(sol[j]):
                    finite = False
                    break
            if finite:
                return True
        if ridge_eps <= 0.0:
            return False
        lam = ridge_eps * scale if lam == 0.0 else lam * RIDGE_GROWTH
    return False


@njit(cache=True, nogil=True)
def lp_predict_1d(xs, ys, qs, h0, degree, kind, sing_a, ridge_eps):
    nq = qs.size
    out = np.empty(nq)
    nb_max = degree + 1
    M = np.empty((nb_max, nb_max))
    rhs = np.empty(nb_max)
    basis = np.empty(nb_max)
    for qi in range(nq):
        x = qs[qi]
        h = h0
        pred = np.nan
        for _ in range(200):
            lo = np.searchsorted(xs, x - h, side="left")
            hi = np.searchsorted(xs, x + h, side="right")
            if hi <= lo:
                h *= 2.0
                continue
            if kind == 1:
                csum = 0.0
                ccnt = 0
                for j in range(lo, hi):
                    if xs[j] == x:
                        csum += ys[j]
                        ccnt += 1
                if ccnt > 0:
                    pred = csum / ccnt
                    break
            k = hi - lo
            m = degree if degree < k - 1 else k - 1
            nb = m + 1
            for a in range(nb):
                rhs[a] = 0.0
                for b in range(nb):
                    M[a, b] = 0.0
            # basis: Chebyshev over the window's offset range mapped onto
            # [-1, 1] (intercept-invariant, keeps the local system well
            # conditioned, boundary windows included)
            dmin = np.inf
            dmax = -np.inf
            for j in range(lo, hi):
                dj = xs[j] - x
                if dj < dmin:
                    dmin = dj
                if dj > dmax:
                    dmax = dj
            span = dmax - dmin
            mid = dmax + dmin
            wsum = 0.0
            for j in range(lo, hi):
                dx = xs[j] - x
                if kind == 0:
                    w = 1.0
                else:
                    u = abs(dx) / h
                    if u >= 1.0:
                        w = 0.0
                    else:
                        if u < U_CLAMP:
                            u = U_CLAMP
                        w = u ** (-sing_a) * (1.0 - u) * (1.0 - u)
                if w <= 0.0:
                    continue
                wsum += w
                t = (2.0 * dx - mid) / span if span > 0.0 else 0.0
                basis[0] = 1.0
                if nb > 1:
                    basis[1] = t
                for a in range(2, nb):
                    basis[a] = 2.0 * t * basis[a - 1] - basis[a - 2]
                for a in range(nb):
                    wa = w * basis[a]
                    rhs[a] += wa * ys[j]
                    for b in range(a, nb):
                        M[a, b] += wa * basis[b]
            if wsum <= 0.0:
                h *= 2.0
                continue
            Msub = np.empty((nb, nb))
            for a in range(nb):
                for b in range(nb):
                    Msub[a, b] = M[a, b] if b >= a else M[b, a]
            sol = np.empty(nb)
            if _solve_coeffs_nb(Msub, rhs[:nb].copy(), sol, ridge_eps):
                t0 = -mid / span if span > 0.0 else 0.0
                pred = sol[0]
                if nb > 1:
                    prev2 = 1.0
                    prev1 = t0
                    pred += sol[1] * t0
                    for a in range(2, nb):
                        cur = 2.0 * t0 * prev1 - prev2
                        pred += sol[a] * cur
                        prev2 = prev1
                        prev1 = cur
            else:
                pred = np.nan
            break
        out[qi] = pred
    return out


@njit(cache=True, nogil=True)
def knn_predict_1d(xs, ys, qs, k):
    n = xs.size
    nq = qs.size
    out = np.empty(nq)
    if k == 1:
        for qi in range(nq):
            best = np.inf
            bi = 0
            for i in range(n):
                dist = abs(xs[i] - qs[qi])
                if dist < best:
                    best = dist
                    bi = i
            out[qi] = ys[bi]
        return out
    kk = k if k < n else n
    nd = np.empty(kk)
    ni = np.empty(kk, dtype=np.int64)
    for qi in range(nq):
        cnt = 0
        for i in range(n):
            dist = abs(xs[i] - qs[qi])
            if cnt < kk:
                pos = cnt
                while pos > 0 and (nd[pos - 1] > dist):
                    nd[pos] = nd[pos - 1]
                    ni[pos] = ni[pos - 1]
                    pos -= 1
                nd[pos] = dist
                ni[pos] = i
                cnt += 1
            elif dist < nd[kk - 1]:
                pos = kk - 1
                while pos > 0 and (nd[pos - 1] > dist):
                    nd[pos] = nd[pos - 1]
                    ni[pos] = ni[pos - 1]
                    pos -= 1
                nd[pos] = dist
                ni[pos] = i
        acc = 0.0
        for s in range(kk):
            acc += ys[ni[s]]
        out[qi] = acc / kk
    return out


@njit(cache=True, nogil=True)
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
    out = base_preds.copy()
    wr = tau if tau > tol else tol
    for qi in range(qs.size):
        x = qs[qi]
        lo = np.searchsorted(xs_sorted, x - wr, side="left")
        hi = np.searchsorted(xs_sorted, x + wr, side="right")
        if hi <= lo:
            continue
        dmin = np.inf
        jbest = -1
        obest = np.int64(0)
        bound = 0.0
        for j in range(lo, hi):
            dist = abs(xs_sorted[j] - x)
            if dist < dmin or (dist == dmin and orig_idx_sorted[j] < obest):
                dmin = dist
                jbest = j
                obest = orig_idx_sorted[j]
            if tau > 0.0 and dist <= tau:
                exc = abs(res_sorted[j]) - delta
                if exc > bound:
                    bound = exc
        if dmin <= tol:
            res = res_sorted[jbest]
            mag = abs(res) - delta
            if mag <= 0.0:
                shift = 0.0
            elif res > 0.0:
                shift = mag
            else:
                shift = -mag
            out[qi] = base_train_sorted[jbest] + shift
        elif tau > 0.0 and dmin <= tau:
            res = res_sorted[jbest]
            mag = abs(res) - delta
            if mag <= 0.0:
                shift = 0.0
            elif res > 0.0:
                shift = mag
            else:
                shift = -mag
            corr = (1.0 - dmin / tau) * shift
            if corr > bound:
                corr = bound
            elif corr < -bound:
                corr = -bound
            out[qi] = base_preds[qi] + corr
    return out


@njit(cache=True, nogil=True)
def window_max_mean_1d(xs_sorted, vals, grid, r):
    total = 0.0
    for gi in range(grid.size):
        lo = np.searchsorted(xs_sorted, grid[gi] - r, side="left")
        hi = np.searchsorted(xs_sorted, grid[gi] + r, side="right")
        best = 0.0
        for j in range(lo, hi):
            if vals[j] > best:
                best = vals[j]
        total += best
    return total / grid.size
