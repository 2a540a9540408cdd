"""Special functions and the closed-form constants built from them."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

MAX_DEGREE = 64


def gamma_ln(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gamma_ln is defined for x > 0 only")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def rgamma(x):
    """1/Gamma(x); exactly zero at the poles 0, -1, -2, ..."""
    out = special.rgamma(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def gamma(x):
    """Gamma(x) on the real line; raises at the poles."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise ValueError(f"Gamma has a pole at {x}")
    return float(special.gamma(x))


def gegenbauer(k, nu, t):
    """C_k^{(nu)}(t) by the three-term recurrence.

    ``nu == 0`` returns the Chebyshev polynomial T_k(t), the limit of
    C_k^{(nu)}(t) / C_k^{(nu)}(1) used for the circle.
    """
    k = int(k)
    if k < 0 or k > MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}]")
    t = np.asarray(t, dtype=float)
    c0 = np.ones_like(t)
    if k == 0:
        return c0 if c0.ndim else float(c0)
    c1 = t.copy() if nu == 0 else 2.0 * nu * t
    for j in range(1, k):
        if nu == 0:
            c0, c1 = c1, 2.0 * t * c1 - c0
        else:
            c0, c1 = c1, (2.0 * (j + nu) * t * c1 - (j + 2.0 * nu - 1.0) * c0) / (j + 1.0)
    return c1 if c1.ndim else float(c1)


def gegenbauer_at_one(k, nu):
    """C_k^{(nu)}(1) = Gamma(k + 2 nu) / (k! Gamma(2 nu)); 1 for the Chebyshev case."""
    if nu == 0:
        return 1.0
    return math.exp(math.lgamma(k + 2 * nu) - math.lgamma(k + 1) - math.lgamma(2 * nu))


def harmonic_dimension(n, k):
    """Dimension of the space of degree-k spherical harmonics on S^{n-1}."""
    if n == 2:
        return 1 if k == 0 else 2
    return (2 * k + n - 2) * math.comb(k + n - 3, k) // (n - 2)


def sphere_surface_area(n):
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n):
    """Volume of the unit Euclidean ball in R^n."""
    if n == 0:
        return 1.0
    return sphere_surface_area(n) / n


@dataclass(frozen=True)
class GammaRatios:
    n: int
    ratio1: float
    ratio2: float  # nan for n = 1
    ratio3: float


def gamma_ratios(n):
    lg = math.lgamma
    q = (n - 1) / n
    r1 = math.exp(q * lg(n / 2 + 1) - lg((n + 1) / 2))
    r2 = math.exp(lg((n - 1) / 2) - q * lg(n / 2)) if n >= 2 else math.nan
    r3 = math.exp(lg(n / 2 + 1) - lg((n + 1) / 2))
    return GammaRatios(n, r1, r2, r3)


def lemma1_check(n):
    """Evaluate the three Gamma-ratio inequalities for dimension ``n``.

    Returns the ratios and a triple of booleans; the second inequality is
    reported as ``None`` for n = 1, where it is undefined.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    g = gamma_ratios(n)
    rel = 1e-13
    first = 1.0 * (1 - rel) <= g.ratio1 <= math.sqrt(math.e) * (1 + rel)
    if n >= 2:
        bound2 = n ** ((n - 1) / n) * 2 ** (1 / n) / (n - 1)
        second = g.ratio2 <= bound2 * (1 + rel)
    else:
        second = None
    third = math.sqrt(n / 2) * (1 - rel) <= g.ratio3 <= math.sqrt((n + 1) / 2) * (1 + rel)
    return g, (first, second, third)
