"""Projection functions, mixed volume V_1, projection-body certificates and the
projection-side verifiers."""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi

from .bodies import BodyError, VOLUME_RESOLUTION, normalized_radii, volume
from .config import DEFAULT, cached_grid, refine_targets
from .reports import make_report
from .sections import (_even_fill, _sign_verdict, _subsphere_points,
                       combined_verdict, polish_extremum, sign_scan)
from .sphere import SphericalFunction, _subsphere_grid, integrate, sample, spectrum
from .spectral import ft_multipliers

CERTIFIED = "certified-projection-body"
NOT_CERTIFIED = "certified-not"

# nodes of the adapted polar rule used by the direct Cauchy route
CAUCHY_POLAR_NODES = 24
CAUCHY_SUBSPHERE_RES = {2: 1, 3: 64, 4: 16, 5: 10, 6: 8}


def _require_curvature(K):
    if not K.has_curvature:
        raise BodyError(f"{K} has no curvature data (closed form or facets)")


def curvature_function(K, grid):
    _require_curvature(K)
    if K.is_polytope:
        raise BodyError("polytopes carry atomic surface measures, not a density")
    return sample(grid, K.curvature)


def projection_facets(K, directions):
    """(1/2) sum_F |<xi, nu_F>| area(F)."""
    normals, areas = K.facet_measure()
    return 0.5 * np.abs(np.atleast_2d(directions) @ normals.T) @ areas


def projection_cauchy(K, directions, polar_nodes=CAUCHY_POLAR_NODES, sub_res=None):
    """(1/2) int |<xi,u>| f_K(u) du with a rule adapted to each xi.

    Writing u = t xi + sqrt(1-t^2) v, v in the subsphere orthogonal to xi, the
    integral becomes int_0^1 (1-s)^{(n-3)/2} F(sqrt s) ds / 2 after s = t^2,
    where F(t) averages f over the latitude sphere at height t.  F is even in
    t, so the s-integrand is smooth and Gauss-Jacobi in s converges fast.
    """
    n = K.n
    directions = np.atleast_2d(directions)
    a = 0.5 * (n - 3)
    x, w = roots_jacobi(polar_nodes, a, 0.0)
    s = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-a - 1.0)
    t = np.sqrt(s)
    c = np.sqrt(1.0 - s)
    sub_nodes, sub_w = _subsphere_grid(n - 1, sub_res or CAUCHY_SUBSPHERE_RES[n])
    out = np.empty(directions.shape[0])
    chunk = max(1, 400_000 // (sub_nodes.shape[0] * polar_nodes))
    for i in range(0, directions.shape[0], chunk):
        d = directions[i:i + chunk]
        v = _subsphere_points(d, sub_nodes)  # (m, q, n)
        pts = t[None, :, None, None] * d[:, None, None, :] + c[None, :, None, None] * v[:, None, :, :]
        f = K.curvature(pts.reshape(-1, n)).reshape(pts.shape[:3])
        out[i:i + chunk] = 0.5 * ((f @ sub_w) @ w)
    return out


@lru_cache(maxsize=64)
def projection_function(K, settings=DEFAULT, route="auto"):
    """P_K on the settings grid.

    Routes: "facets" (polytopes), "direct" (adapted Cauchy quadrature of f_K),
    "spectral" (-(1/pi) sum_k m_k(n+1) P_k f_K).  "auto" uses facets for
    polytopes and the spectral route otherwise.
    """
    n = K.n
    _require_curvature(K)
    grid = settings.grid(n)
    if route == "auto":
        route = "facets" if K.is_polytope else "spectral"
    if route == "facets":
        if not K.is_polytope:
            raise BodyError("facet route needs a polytope")
        vals = projection_facets(K, grid.nodes)
    elif route == "direct":
        if K.is_polytope:
            vals = projection_facets(K, grid.nodes)
        else:
            vals = _even_fill(grid, projection_cauchy(K, grid.nodes[grid.half]))
    elif route == "spectral":
        if K.is_polytope:
            raise BodyError("polytopes bypass the spectral route (atomic surface measure)")
        f = curvature_function(K, grid)
        m = ft_multipliers(n, n + 1.0, settings.lmax_for(n))
        vals = -spectrum(f, m.lmax).combine(m.entries) / math.pi
    else:
        raise ValueError(f"unknown route {route!r}")
    return SphericalFunction(grid, vals)


def projection_route_agreement(K, settings=DEFAULT):
    """sup |spectral - direct Cauchy| of P_K over the sign-test directions."""
    n = K.n
    targets = refine_targets(n, settings.seed)
    direct = projection_cauchy(K, targets)
    f = curvature_function(K, settings.grid(n))
    lmax = settings.lmax_for(n)
    m = ft_multipliers(n, n + 1.0, lmax - lmax % 2)
    spec = -spectrum(f, m.lmax).combine_at(m.entries, targets) / math.pi
    return float(np.abs(spec - direct).max())


# ---------------------------------------------------------------------------
# mixed volumes
# ---------------------------------------------------------------------------

def mixed_volume_v1(K, L):
    """V_1(K, L) = (1/n) int h_L dS(K, .)."""
    _require_curvature(K)
    n = K.n
    if K.is_polytope:
        normals, areas = K.facet_measure()
        return float(L.support(normals) @ areas) / n
    grid = cached_grid(n, VOLUME_RESOLUTION[n])
    return integrate(SphericalFunction(grid, L.support(grid.nodes) * K.curvature(grid.nodes))) / n


def minkowski_check(K, L, tol=1e-9):
    margin = mixed_volume_v1(K, L) - volume(K) ** ((K.n - 1) / K.n) * volume(L) ** (1.0 / K.n)
    return margin


def parseval_projection(K, L, settings=DEFAULT):
    """Relative defect of int h^_K f^_L = (2 pi)^n int h_K f_L."""
    n = K.n
    grid = settings.grid(n)
    lmax = settings.lmax_for(n)
    h = sample(grid, K.support)
    f = curvature_function(L, grid)
    a = spectrum(h, lmax).combine(ft_multipliers(n, -1.0, lmax).entries)
    b = spectrum(f, lmax).combine(ft_multipliers(n, n + 1.0, lmax).entries)
    lhs = integrate(SphericalFunction(grid, a * b))
    rhs = (2.0 * math.pi) ** n * integrate(h * f)
    return abs(lhs - rhs) / abs(rhs)


# ---------------------------------------------------------------------------
# projection-body certificate
# ---------------------------------------------------------------------------

@dataclass
class ProjectionCertificate:
    body: str
    h_hat: SphericalFunction
    max_h_hat: float
    verdict: str
    tol: float
    lmax: int
    damping: float
    max_h_hat_undamped: float
    by_lmax: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def certified(self):
        return self.verdict == CERTIFIED


@lru_cache(maxsize=64)
def projection_body_certificate(L, settings=DEFAULT):
    """Sign test of the transform of the degree-1 extension of h_L (<= 0 everywhere)."""
    if not L.has_support:
        raise BodyError(f"{L} has no support function")
    n = L.n
    lmax = settings.lmax_for(n)
    lmax -= lmax % 2
    h = sample(settings.grid(n, 4), L.support)
    entries = ft_multipliers(n, -1.0, lmax + 4).entries
    scans, raw = sign_scan(h, entries, settings, lmax)
    maxes = {Lm: float(max(g.max(), gt.max())) for Lm, (g, gt) in scans.items()}
    sup = max(max(np.abs(g).max(), np.abs(gt).max()) for g, gt in scans.values())
    tol = settings.tol_cert * sup
    per = {Lm: _sign_verdict(-mx, tol, CERTIFIED, NOT_CERTIFIED) for Lm, mx in maxes.items()}
    return ProjectionCertificate(
        body=str(L), h_hat=SphericalFunction(h.grid, scans[lmax][0]), max_h_hat=maxes[lmax],
        verdict=combined_verdict(per), tol=tol, lmax=lmax, damping=settings.damping,
        max_h_hat_undamped=float(raw.max()),
        by_lmax={Lm: {"max": maxes[Lm], "verdict": per[Lm]} for Lm in maxes},
        flags=[] if L.smooth else ["non-smooth"])


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def _vol_q(body):
    return volume(body) ** ((body.n - 1) / body.n)


def _projection_at(K, xi):
    return (projection_facets(K, xi) if K.is_polytope else projection_cauchy(K, xi))[0]


def _projection_gap(K, L):
    return lambda xi: _projection_at(K, xi[None]) - _projection_at(L, xi[None])


def _pair(K, L):
    if K.n != L.n:
        raise ValueError("bodies live in different dimensions")
    return K.n, [f"non-smooth:{b}" for b in (K, L) if not b.smooth]


def verify_shephard_stability(K, L, settings=DEFAULT):
    """P_K <= P_L + eps, L a projection body => Vol(K)^q <= Vol(L)^q + sqrt(2pi/n) R(L) eps."""
    n, flags = _pair(K, L)
    cert = projection_body_certificate(L, settings)
    diff = projection_function(K, settings) - projection_function(L, settings)
    eps = max(0.0, polish_extremum(_projection_gap(K, L), diff))
    RL = normalized_radii(L).R_norm
    c = math.sqrt(2.0 * math.pi / n) * RL
    return make_report("shephard", [K, L], eps, _vol_q(K), _vol_q(L) + c * eps, c, settings, n,
                       hypothesis_met=cert.certified, flags=flags,
                       details={"certificate": cert.verdict, "R_L": RL})


def verify_shephard_separation(K, L, settings=DEFAULT):
    """P_K <= P_L - eps, eps > 0 => Vol(K)^q <= Vol(L)^q - eps / sqrt(e)."""
    n, flags = _pair(K, L)
    cert = projection_body_certificate(L, settings)
    diff = projection_function(K, settings) - projection_function(L, settings)
    eps = -polish_extremum(_projection_gap(K, L), diff)
    c = 1.0 / math.sqrt(math.e)
    if eps <= 0:
        flags.append("eps<=0")
    return make_report("shephard-sep", [K, L], eps, _vol_q(K), _vol_q(L) - c * eps, c, settings, n,
                       hypothesis_met=cert.certified and eps > 0, flags=flags,
                       details={"certificate": cert.verdict})
