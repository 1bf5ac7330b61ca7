"""Standard normal density, upper tail, and inverse upper tail.

The upper tail is evaluated through the complementary error function, which
keeps full relative accuracy deep into the tail (it only underflows to zero
past x ~ 38, where the density itself is subnormal).
"""

import numpy as np
from scipy.special import erfc, erfcinv

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_pdf(x):
    """Standard normal density phi(x), elementwise."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def upper_tail(x):
    """P(Z > x) for standard normal Z, elementwise."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(x / _SQRT2)
    return float(out) if out.ndim == 0 else out


def upper_tail_inv(q):
    """Inverse of upper_tail on (0, 1): the x with P(Z > x) = q."""
    q = np.asarray(q, dtype=float)
    if not np.all((q > 0.0) & (q < 1.0)):
        raise ValueError("tail probability must lie strictly inside (0, 1)")
    out = _SQRT2 * erfcinv(2.0 * q)
    return float(out) if out.ndim == 0 else out
