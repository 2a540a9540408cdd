"""Fourier multipliers of homogeneous extensions and the fractional-Laplacian verifiers.

A function ``f`` on the sphere with harmonic components ``P_k f`` extends to
``|x|^{-p} f(x/|x|)``.  Its Fourier transform is ``|xi|^{-n+p}`` times the
spherical function ``sum_k m_k(p) P_k f`` with

    m_k(p) = (-1)^{k/2} 2^{n-p} pi^{n/2} Gamma((n-p+k)/2) / Gamma((p+k)/2).

Constants used below (one place, so every factor is auditable):

* ``(2 pi)^{-n}``            normalization of the fractional Laplacian
* ``1 / (pi (n-1))``         section function as a Fourier transform
* ``-1 / pi``                projection function from the curvature function
* ``m_k(p) m_k(n-p) = (2 pi)^n``  reciprocity, valid on the continuation too
"""

from dataclasses import dataclass, field
import math


from . import specfun
from .bodies import BodyError, normalized_radii, volume
from .config import DEFAULT
from .reports import make_report
from .sections import sign_scan
from .sphere import SphericalFunction, integrate, multiplier, sample, spectrum

TWO_PI = 2.0 * math.pi


def ft_multiplier(n, p, k):
    if k % 2:
        raise ValueError("only even degrees occur for even functions")
    a = 0.5 * (n - p + k)
    if a <= 0 and float(a).is_integer():
        raise ValueError(f"p={p} lies outside the continuation whitelist at degree {k} "
                         "(pole of the numerator Gamma)")
    sign = -1.0 if (k // 2) % 2 else 1.0
    return sign * 2.0 ** (n - p) * math.pi ** (n / 2) * specfun.gamma(a) \
        * specfun.rgamma(0.5 * (p + k))


def ft_multipliers(n, p, lmax):
    return multiplier(n, lmax, lambda k: ft_multiplier(n, p, k), f"ft(p={p:g})")


def in_whitelist(n, p):
    """p values for which the extension's transform is used here."""
    if 0.0 < p < n:
        return True
    if p == -1.0 or p == n + 1.0:
        return True
    return -(n + 2.0) < p <= -(n + 1.0)  # p = -(alpha+1), alpha in [n, n+1)


@dataclass(frozen=True, eq=False)
class HomogeneousExtension:
    base: SphericalFunction
    degree: float

    @property
    def p(self):
        return -self.degree


def ft_homogeneous(ext, lmax=None, damping=None):
    """Restriction to the sphere of the Fourier transform of ``|x|^d base(x/|x|)``."""
    n = ext.base.grid.n
    if not in_whitelist(n, ext.p):
        raise ValueError(f"degree {ext.degree} outside the continuation whitelist")
    lmax = ext.base.grid.max_degree - ext.base.grid.max_degree % 2 if lmax is None else lmax
    m = ft_multipliers(n, ext.p, lmax)
    vals = spectrum(ext.base, lmax).combine(m.entries, damping)
    return SphericalFunction(ext.base.grid, vals)


# ---------------------------------------------------------------------------
# fractional Laplacians
# ---------------------------------------------------------------------------

def section_alpha_range(n):
    return (n - 4.0, n - 1.0)


def _check_section_alpha(n, alpha):
    lo, hi = section_alpha_range(n)
    if not (lo <= alpha < hi):
        raise ValueError(f"alpha={alpha} outside [{lo:g}, {hi:g}); below n-4 the "
                         "comparison is not necessarily true")
    if not (0.0 < n - 1.0 - alpha < n):
        raise ValueError(f"alpha={alpha} gives a non-native exponent in dimension {n}")


def _check_projection_alpha(n, alpha):
    if alpha < n:
        raise ValueError(f"alpha={alpha} < n={n}: the comparison is no longer true for alpha < n")
    if alpha >= n + 1:
        raise ValueError(f"alpha={alpha} outside [n, n+1)")


def frac_laplacian_section(K, alpha, settings=DEFAULT):
    """(-Delta)^{alpha/2} S_K = (1/(pi(n-1))) sum_k m_k(n-1-alpha) P_k(rho^{n-1})."""
    n = K.n
    _check_section_alpha(n, alpha)
    grid = settings.grid(n)
    f = sample(grid, lambda u: K.radial(u) ** (n - 1))
    m = ft_multipliers(n, n - 1.0 - alpha, settings.lmax_for(n))
    vals = spectrum(f, m.lmax).combine(m.entries) / (math.pi * (n - 1))
    return SphericalFunction(grid, vals)


def projection_multipliers(n, alpha, lmax):
    """(2 pi)^{-n} m_k(-1) m_k(n+1-alpha): acts on P_L restricted to the sphere."""
    a = ft_multipliers(n, -1.0, lmax)
    b = ft_multipliers(n, n + 1.0 - alpha, lmax)
    return (a * b) * TWO_PI ** (-n)


def frac_laplacian_projection(L, alpha, settings=DEFAULT):
    from .shadows import projection_function

    n = L.n
    _check_projection_alpha(n, alpha)
    P = projection_function(L, settings)
    m = projection_multipliers(n, alpha, settings.lmax_for(n))
    return SphericalFunction(P.grid, spectrum(P, m.lmax).combine(m.entries))


# ---------------------------------------------------------------------------
# positive definiteness and Parseval
# ---------------------------------------------------------------------------

@dataclass
class PosDefReport:
    body: str
    alpha: float
    in_range: bool
    min_value: float
    max_value: float
    scale: float
    min_undamped: float
    passed: bool
    flags: list = field(default_factory=list)


def posdef_check(K, alpha, settings=DEFAULT):
    """Sign of the transform of ||x||_K^{-1} |x|^{-alpha} (exponent p = alpha + 1).

    The verdict uses Abel-Poisson damped partial sums (a positive kernel, so
    positivity of the distribution is preserved); the raw sum is reported too.
    """
    n = K.n
    lo, hi = section_alpha_range(n)
    in_range = lo <= alpha < hi
    p = alpha + 1.0
    if not (0.0 < p < n):
        raise ValueError(f"alpha={alpha} gives exponent {p} outside (0, {n})")
    lmax = settings.lmax_for(n)
    lmax -= lmax % 2
    f = sample(settings.grid(n, 4), K.radial)
    scans, raw = sign_scan(f, ft_multipliers(n, p, lmax + 4).entries, settings, lmax)
    damped, at_t = scans[lmax]
    lo_v = float(min(damped.min(), at_t.min()))
    hi_v = float(max(damped.max(), at_t.max()))
    scale = max(abs(lo_v), abs(hi_v))
    flags = [] if in_range else ["outside-alpha-range:report-only"]
    passed = lo_v >= -settings.tol_cert * scale if in_range else True
    return PosDefReport(str(K), float(alpha), in_range, lo_v, hi_v, scale,
                        float(raw.min()), bool(passed), flags)


def parseval_check(K, L, p, settings=DEFAULT):
    """Relative defect of the spherical Parseval identity for exponents p, n-p."""
    n = K.n
    if not (0.0 < p < n):
        raise ValueError("Parseval exponent must lie in (0, n)")
    for b in (K, L):
        if not b.smooth:
            raise BodyError(f"{b} is not in a smooth family")
    # products of two degree-lmax expansions are exact on any grid with N > lmax
    grid = settings.grid(n)
    lmax = settings.lmax_for(n)
    fK = sample(grid, lambda u: K.radial(u) ** p)
    fL = sample(grid, lambda u: L.radial(u) ** (n - p))
    a = spectrum(fK, lmax).combine(ft_multipliers(n, p, lmax).entries)
    b = spectrum(fL, lmax).combine(ft_multipliers(n, n - p, lmax).entries)
    lhs = integrate(SphericalFunction(grid, a * b))
    rhs = TWO_PI ** n * integrate(fK * fL)
    return abs(lhs - rhs) / abs(rhs)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def _g(x):
    return specfun.gamma(x)


def frac_section_constant(alpha, n):
    num = math.sqrt(math.pi) * (n - 1) * _g((n - alpha - 1) / 2)
    den = (2.0 ** (alpha + 1.0 / n) * n ** ((n - 1) / n) * _g((alpha + 1) / 2)
           * _g(n / 2) ** ((n - 1) / n))
    return num / den


def frac_separation_constant(alpha, n, r_K):
    return r_K * math.pi * (n - 1) * _g((n - alpha - 1) / 2) / (
        n * 2.0 ** alpha * _g((alpha + 1) / 2) * _g(n / 2))


def frac_projection_constant(alpha, n, R_L):
    return _g((n - alpha + 1) / 2) * specfun.sphere_surface_area(n) * R_L / (
        2.0 ** (alpha + 1) * math.pi ** (n / 2) * _g((alpha + 1) / 2) * n)


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def _vol_q(body):
    return volume(body) ** ((body.n - 1) / body.n)


def _smooth_pair(K, L, theorem):
    if K.n != L.n:
        raise ValueError("bodies live in different dimensions")
    flags = []
    for b in (K, L):
        if not b.smooth:
            flags.append(f"non-smooth:{b}")
    return K.n, flags


def verify_frac_section_stability(K, L, alpha, settings=DEFAULT):
    n, flags = _smooth_pair(K, L, "frac-section")
    if n < 4:
        raise ValueError("fractional section stability needs n >= 4")
    dK = frac_laplacian_section(K, alpha, settings)
    dL = frac_laplacian_section(L, alpha, settings)
    eps = max(0.0, (dK - dL).max())
    c = frac_section_constant(alpha, n)
    return make_report("frac-section", [K, L], eps, _vol_q(K), _vol_q(L) + c * eps, c,
                       settings, n, hypothesis_met=not flags, flags=flags,
                       details={"alpha": alpha})


def verify_frac_section_separation(K, L, alpha, settings=DEFAULT):
    n, flags = _smooth_pair(K, L, "frac-section-sep")
    if n < 4:
        raise ValueError("fractional section separation needs n >= 4")
    dK = frac_laplacian_section(K, alpha, settings)
    dL = frac_laplacian_section(L, alpha, settings)
    eps = (dL - dK).min()
    rK = normalized_radii(K).r_norm
    c = frac_separation_constant(alpha, n, rK)
    if eps <= 0:
        flags.append("eps<=0")
    return make_report("frac-section-sep", [K, L], eps, _vol_q(K), _vol_q(L) - c * eps, c,
                       settings, n, hypothesis_met=eps > 0 and not any(
                           f.startswith("non-smooth") for f in flags),
                       flags=flags, details={"alpha": alpha, "r_K": rK})


def verify_frac_projection_stability(K, L, alpha, settings=DEFAULT):
    n, flags = _smooth_pair(K, L, "frac-projection")
    if n < 3:
        raise ValueError("fractional projection stability needs n >= 3")
    _check_projection_alpha(n, alpha)
    dK = frac_laplacian_projection(K, alpha, settings)
    dL = frac_laplacian_projection(L, alpha, settings)
    eps = max(0.0, (dL - dK).max())
    RL = normalized_radii(L).R_norm
    c = frac_projection_constant(alpha, n, RL)
    return make_report("frac-projection", [K, L], eps, _vol_q(K), _vol_q(L) + c * eps, c,
                       settings, n, hypothesis_met=not flags, flags=flags,
                       details={"alpha": alpha, "R_L": RL})
