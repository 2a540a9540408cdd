"""Origin-symmetric star and convex bodies with closed-form oracles."""

from dataclasses import dataclass, field, replace
import itertools
import math
from typing import Optional

import numpy as np
from scipy import optimize, special
from scipy.spatial import ConvexHull, HalfspaceIntersection

from . import specfun
from ._accel import polytope_radial
from .sphere import build_grid

FAMILIES = ("ball", "ellipsoid", "lp_ball", "cube", "cross_polytope",
            "perturbed_ball", "polytope", "zonotope")
MAX_PERTURBATION = 0.3


class BodyError(ValueError):
    pass


@dataclass(frozen=True)
class RadiusData:
    r_norm: float
    R_norm: float


@dataclass(frozen=True)
class FacetData:
    """Symmetric polytope in H-form: unit outer normals, offsets, facet areas."""
    normals: np.ndarray
    offsets: np.ndarray
    areas: np.ndarray
    vertices: np.ndarray
    volume: float


@dataclass(frozen=True, eq=False)
class Body:
    n: int
    family: str
    params: dict
    label: str = ""
    scale: float = 1.0
    facets: Optional[FacetData] = field(default=None, repr=False)

    # -- classification -------------------------------------------------
    @property
    def is_polytope(self):
        return self.facets is not None

    @property
    def convex(self):
        # perturbed balls are convexity-checked at construction
        return True

    @property
    def smooth(self):
        """True when the boundary is C-infinity (the Fourier pipeline assumes it)."""
        if self.family in ("ball", "ellipsoid", "perturbed_ball"):
            return True
        if self.family == "lp_ball":
            p = self.params["p"]
            return math.isfinite(p) and p >= 2 and float(p).is_integer() and int(p) % 2 == 0
        return False

    @property
    def has_support(self):
        return self.family != "perturbed_ball"

    @property
    def has_curvature(self):
        return self.family in ("ball", "ellipsoid") or self.is_polytope or (
            self.family == "lp_ball" and self.params["p"] == 2)

    def scaled(self, t):
        if t <= 0:
            raise BodyError("scale factor must be positive")
        return replace(self, scale=self.scale * t,
                       label=f"{t:g}*{self.label}" if self.label else "")

    # -- evaluators ---------------------------------------------------------
    def radial(self, u):
        """rho_K(u) for unit vectors u (rows)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        fam, p = self.family, self.params
        if self.is_polytope:
            r = polytope_radial(u, self.facets.normals, self.facets.offsets)
        elif fam == "ball":
            r = np.full(u.shape[0], p["r"])
        elif fam == "ellipsoid":
            a = np.asarray(p["axes"])
            r = 1.0 / np.sqrt(((u / a) ** 2).sum(axis=1))
        elif fam == "lp_ball":
            r = 1.0 / _lp_norm(u, p["p"])
        elif fam == "perturbed_ball":
            r = 1.0 + p["delta"] * _pattern(u, p["direction"], p["degree"])
        else:  # pragma: no cover
            raise BodyError(fam)
        return self.scale * r

    def minkowski(self, x):
        """||x||_K for arbitrary nonzero x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nrm = np.linalg.norm(x, axis=1)
        return nrm / self.radial(x / nrm[:, None])

    def support(self, x):
        """h_K(x), positively homogeneous of degree 1."""
        if not self.has_support:
            raise BodyError(f"{self.family} carries no support function")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        fam, p = self.family, self.params
        if fam == "zonotope":
            h = np.abs(x @ np.asarray(p["generators"]).T).sum(axis=1)
        elif self.is_polytope:
            h = np.abs(x @ self.facets.vertices.T).max(axis=1)
        elif fam == "ball":
            h = p["r"] * np.linalg.norm(x, axis=1)
        elif fam == "ellipsoid":
            h = np.sqrt(((x * np.asarray(p["axes"])) ** 2).sum(axis=1))
        elif fam == "lp_ball":
            q = _dual_exponent(p["p"])
            h = _lp_norm(x, q)
        else:  # pragma: no cover
            raise BodyError(fam)
        return self.scale * h

    def curvature(self, u):
        """Density of the surface area measure (smooth families only)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        fam, p = self.family, self.params
        s = self.scale ** (self.n - 1)
        if fam == "ball" or (fam == "lp_ball" and p["p"] == 2):
            r = p.get("r", 1.0)
            return s * np.full(u.shape[0], r ** (self.n - 1))
        if fam == "ellipsoid":
            a = np.asarray(p["axes"])
            h = np.sqrt(((u * a) ** 2).sum(axis=1))
            return s * np.prod(a) ** 2 / h ** (self.n + 1)
        raise BodyError(f"no curvature function for {self.family}")

    def facet_measure(self):
        """Atomic surface area measure: (unit normals, areas), scaled."""
        if not self.is_polytope:
            raise BodyError("atomic surface data exists for polytopes only")
        return self.facets.normals, self.facets.areas * self.scale ** (self.n - 1)

    def __str__(self):
        return self.label or f"{self.family}{self.n}"


def _lp_norm(x, p):
    ax = np.abs(x)
    if math.isinf(p):
        return ax.max(axis=1)
    m = ax.max(axis=1, keepdims=True)
    m = np.where(m == 0, 1.0, m)
    return m[:, 0] * ((ax / m) ** p).sum(axis=1) ** (1.0 / p)


def _dual_exponent(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def pattern_mean(n, k):
    """Average of t^k over S^{n-1}, t the first coordinate."""
    return math.exp(math.lgamma((k + 1) / 2) + math.lgamma(n / 2)
                    - 0.5 * math.log(math.pi) - math.lgamma((n + k) / 2))


def _pattern(u, direction, k):
    t = u @ np.asarray(direction)
    return t ** k - pattern_mean(u.shape[1], k)


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------

def _symmetric(points, tol=1e-9):
    pts = np.asarray(points, dtype=float)
    for v in pts:
        if np.min(np.linalg.norm(pts + v, axis=1)) > tol * max(1.0, np.linalg.norm(v)):
            return False
    return True


def _facets_from_vertices(vertices):
    vertices = np.asarray(vertices, dtype=float)
    n = vertices.shape[1]
    hull = ConvexHull(vertices)
    normals = hull.equations[:, :n]
    offsets = -hull.equations[:, n]
    fact = math.factorial(n - 1)
    groups = {}
    for simplex, nu, b in zip(hull.simplices, normals, offsets):
        key = tuple(np.round(nu, 9))
        pts = vertices[simplex]
        e = pts[1:] - pts[0]
        area = math.sqrt(max(np.linalg.det(e @ e.T), 0.0)) / fact
        if key in groups:
            groups[key][2] += area
        else:
            groups[key] = [nu, b, area]
    N = np.array([g[0] for g in groups.values()])
    B = np.array([g[1] for g in groups.values()])
    A = np.array([g[2] for g in groups.values()])
    verts = vertices[np.unique(hull.simplices)]
    return FacetData(N, B, A, verts, float(hull.volume))


def _vertices_from_halfspaces(normals, offsets):
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    hs = np.hstack([normals, -offsets[:, None]])
    return HalfspaceIntersection(hs, np.zeros(normals.shape[1])).intersections


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def ball(n, r=1.0, label=None):
    if r <= 0:
        raise BodyError("radius must be positive")
    return Body(n, "ball", {"r": float(r)}, label or (f"B{n}" if r == 1 else f"B{n}(r={r:g})"))


def ellipsoid(axes, label=None):
    axes = tuple(float(a) for a in axes)
    if any(a <= 0 for a in axes):
        raise BodyError("non-positive semi-axis")
    return Body(len(axes), "ellipsoid", {"axes": axes},
                label or "E(" + ",".join(f"{a:g}" for a in axes) + ")")


def polytope(vertices=None, normals=None, offsets=None, label=None, family="polytope",
             params=None):
    if vertices is None:
        if normals is None or offsets is None:
            raise BodyError("polytope needs vertices or normals+offsets")
        nrm = np.asarray(normals, dtype=float)
        off = np.asarray(offsets, dtype=float)
        if np.any(off <= 0):
            raise BodyError("offsets must be positive (origin interior)")
        scale = np.linalg.norm(nrm, axis=1)
        nrm, off = nrm / scale[:, None], off / scale
        if not _symmetric(nrm * off[:, None]):  # (nu, b) needs a partner (-nu, b)
            raise BodyError("facet set is not origin-symmetric")
        vertices = _vertices_from_halfspaces(nrm, off)
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2:
        raise BodyError("vertices must be a 2-D array")
    if not _symmetric(vertices):
        raise BodyError("vertex set is not origin-symmetric")
    n = vertices.shape[1]
    facets = _facets_from_vertices(vertices)
    if params is None:
        params = {"vertices": [list(map(float, v)) for v in facets.vertices]}
    return Body(n, family, params, label or f"P{n}[{len(facets.areas)}]", facets=facets)


def cube(n, half_width=1.0, label=None):
    verts = half_width * np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    return polytope(verts, label=label or f"cube{n}", family="cube",
                    params={"half_width": float(half_width)})


def cross_polytope(n, radius=1.0, label=None):
    verts = radius * np.vstack([np.eye(n), -np.eye(n)])
    return polytope(verts, label=label or f"cross{n}", family="cross_polytope",
                    params={"radius": float(radius)})


def zonotope(generators, label=None):
    Z = np.atleast_2d(np.asarray(generators, dtype=float))
    n = Z.shape[1]
    if np.linalg.matrix_rank(Z) < n:
        raise BodyError("zonotope generators must span R^n")
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=Z.shape[0])))
    verts = signs @ Z
    body = polytope(verts, label=label or f"Z{n}[{Z.shape[0]}]", family="zonotope",
                    params={"generators": [list(map(float, z)) for z in Z]})
    return body


def lp_ball(n, p, label=None):
    p = float(p)
    if p < 1:
        raise BodyError("l_p balls need p >= 1")
    label = label or f"l{p:g}-ball{n}"
    if math.isinf(p):
        b = cube(n, label=label)
    elif p == 1:
        b = cross_polytope(n, label=label)
    else:
        return Body(n, "lp_ball", {"p": p}, label)
    return replace(b, family="lp_ball", params={"p": p})


def perturbed_ball(n, delta, degree=2, direction=None, label=None, check=True):
    if degree % 2 or degree < 2:
        raise BodyError("perturbation degree must be even and >= 2")
    if abs(delta) > MAX_PERTURBATION:
        raise BodyError(f"|delta| is capped at {MAX_PERTURBATION}")
    d = np.zeros(n)
    d[-1] = 1.0
    if direction is not None:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
    mean = pattern_mean(n, degree)
    if 1.0 - abs(delta) * max(mean, 1.0 - mean) <= 0:
        raise BodyError("perturbation drives the radial function to zero")
    body = Body(n, "perturbed_ball",
                {"delta": float(delta), "degree": int(degree), "direction": tuple(d.tolist())},
                label or f"PB{n}(d={delta:g},k={degree})")
    if check and not convex_on_sections(body):
        raise BodyError("perturbed ball fails the sampled convexity check")
    return body


def convex_on_sections(body, n_planes=64, n_theta=720, seed=0):
    """Sampled convexity test of the radial function on random 2-D central sections.

    A polar curve r(theta) bounds a convex region iff r^2 + 2 r'^2 - r r'' >= 0.
    """
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    dt = theta[1] - theta[0]
    planes = [np.eye(body.n)[[i, j]] for i in range(body.n) for j in range(i + 1, body.n)]
    for _ in range(n_planes):
        q, _ = np.linalg.qr(rng.normal(size=(body.n, 2)))
        planes.append(q.T)
    for P in planes:
        u = np.cos(theta)[:, None] * P[0] + np.sin(theta)[:, None] * P[1]
        r = body.radial(u)
        r1 = (np.roll(r, -1) - np.roll(r, 1)) / (2 * dt)
        r2 = (np.roll(r, -1) - 2 * r + np.roll(r, 1)) / dt ** 2
        if np.min(r * r + 2 * r1 * r1 - r * r2) < -1e-9 * np.max(r) ** 2:
            return False
    return True


def construct_body(spec, rng=None):
    """Body from a dict {family, dim, params, label?, scale?}.

    ``params`` may be omitted for ``perturbed_ball`` when ``random`` is true;
    the drawn parameters are written back into the returned body's params.
    """
    fam = spec.get("family")
    n = int(spec.get("dim", 0))
    params = spec.get("params")
    label = spec.get("label")
    if fam not in FAMILIES:
        raise BodyError(f"unknown family {fam!r}; supported: {', '.join(FAMILIES)}")
    if not 2 <= n <= 6:
        raise BodyError(f"dimension {n} outside [2, 6]")
    if fam == "ball":
        r = float(params[0]) if params else 1.0
        body = ball(n, r, label)
    elif fam == "ellipsoid":
        if params is None or len(params) != n:
            raise BodyError(f"ellipsoid needs {n} semi-axes")
        body = ellipsoid(params, label)
    elif fam == "lp_ball":
        if not params:
            raise BodyError("lp_ball needs params [p]")
        body = lp_ball(n, _number(params[0]), label)
    elif fam == "cube":
        body = cube(n, float(params[0]) if params else 1.0, label)
    elif fam == "cross_polytope":
        body = cross_polytope(n, float(params[0]) if params else 1.0, label)
    elif fam == "perturbed_ball":
        if spec.get("random") or params is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            delta = float(np.round(rng.uniform(0.02, 0.2), 6))
            degree = int(rng.choice([2, 4]))
            d = rng.normal(size=n)
            d = np.round(d / np.linalg.norm(d), 9)
            body = perturbed_ball(n, delta, degree, d, label)
        else:
            delta, degree = float(params[0]), int(params[1]) if len(params) > 1 else 2
            direction = params[2:] if len(params) > 2 else None
            if direction is not None and len(direction) != n:
                raise BodyError(f"perturbation direction must have {n} entries")
            body = perturbed_ball(n, delta, degree, direction, label)
    elif fam == "polytope":
        body = polytope(_vectors(params, n, fam), label=label)
    else:
        body = zonotope(_vectors(params, n, fam), label)
    if "scale" in spec:
        s = float(spec["scale"])
        body = replace(body.scaled(s), label=label or body.scaled(s).label)
    return body


def _vectors(params, n, fam):
    try:
        arr = np.asarray(params, dtype=float)
    except (TypeError, ValueError):
        arr = None
    if arr is None or arr.ndim != 2 or arr.shape[1] != n:
        raise BodyError(f"{fam} params must be a list of {n}-vectors")
    return arr


def _number(x):
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity"):
            return math.inf
        return float(x)
    return float(x)


# ---------------------------------------------------------------------------
# volumes and radii
# ---------------------------------------------------------------------------

VOLUME_RESOLUTION = {2: 2048, 3: 256, 4: 64, 5: 28, 6: 14}


@dataclass
class _GridCache:
    grids: dict = field(default_factory=dict)

    def get(self, n, res):
        key = (n, res)
        if key not in self.grids:
            self.grids[key] = build_grid(n, res)
        return self.grids[key]


_grids = _GridCache()


def volume(body, resolution=None):
    """(1/n) * integral of rho^n over the sphere.

    Polytopes integrate exactly cone by cone over their facets, which is the
    pyramid sum (1/n) sum_F offset_F area_F; quadrature of the kinked
    radial function loses three digits by n = 5.
    """
    if body.is_polytope and resolution is None:
        f = body.facets
        return float(f.offsets @ f.areas) / body.n * body.scale ** body.n
    return volume_quadrature(body, resolution)


def volume_quadrature(body, resolution=None):
    res = resolution or VOLUME_RESOLUTION[body.n]
    g = _grids.get(body.n, res)
    vals = body.radial(g.nodes) ** body.n
    return math.fsum(g.weights * vals) / body.n


def normalized_radii(body, resolution=None):
    """r(K) = min rho / Vol^{1/n} and R(K) = max rho / Vol^{1/n}."""
    lo, hi = radial_extrema(body, resolution)
    v = volume(body) ** (1.0 / body.n)
    return RadiusData(lo / v, hi / v)


def radial_extrema(body, resolution=None):
    fam, p, s = body.family, body.params, body.scale
    if body.is_polytope:
        return s * float(body.facets.offsets.min()), \
            s * float(np.linalg.norm(body.facets.vertices, axis=1).max())
    if fam == "ball":
        return s * p["r"], s * p["r"]
    if fam == "ellipsoid":
        return s * min(p["axes"]), s * max(p["axes"])
    g = _grids.get(body.n, resolution or max(12, VOLUME_RESOLUTION[body.n] // 4))
    rho = body.radial(g.nodes)
    return _refine(body, g.nodes[np.argmin(rho)], 1.0), _refine(body, g.nodes[np.argmax(rho)], -1.0)


def _refine(body, start, sign):
    def obj(x):
        nx = np.linalg.norm(x)
        return sign * body.radial(x / nx)[0]
    res = optimize.minimize(obj, start, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    best = min(sign * res.fun, sign * obj(start)) if sign > 0 else max(sign * res.fun, sign * obj(start))
    return float(best)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def analytic_reference(body, quantity, xi=None):
    """Closed-form volume / section / projection, or the string "unavailable"."""
    n, fam, p, s = body.n, body.family, body.params, body.scale
    om = specfun.ball_volume(n - 1)
    if xi is not None:
        xi = np.asarray(xi, dtype=float)
        xi = xi / np.linalg.norm(xi)
    if quantity == "volume":
        if fam == "ball":
            return specfun.ball_volume(n) * (s * p["r"]) ** n
        if fam == "ellipsoid":
            return specfun.ball_volume(n) * np.prod(p["axes"]) * s ** n
        if body.is_polytope:
            return body.facets.volume * s ** n
        if fam == "lp_ball":
            q = p["p"]
            return (2 * math.gamma(1 + 1 / q)) ** n / math.gamma(1 + n / q) * s ** n
        if fam == "perturbed_ball":
            return _perturbed_ball_volume(body)
        return "unavailable"
    if quantity == "section":
        if fam == "ball":
            return om * (s * p["r"]) ** (n - 1)
        if fam == "ellipsoid":
            a = np.asarray(p["axes"])
            return om * np.prod(a) / math.sqrt(((a * xi) ** 2).sum()) * s ** (n - 1)
        return "unavailable"
    if quantity == "projection":
        if fam == "ball":
            return om * (s * p["r"]) ** (n - 1)
        if fam == "ellipsoid":
            a = np.asarray(p["axes"])
            return om * np.prod(a) * math.sqrt(((xi / a) ** 2).sum()) * s ** (n - 1)
        if body.is_polytope:
            nu, area = body.facet_measure()
            return 0.5 * float(np.abs(nu @ xi) @ area)
        return "unavailable"
    raise ValueError(f"unknown quantity {quantity!r}")


def _perturbed_ball_volume(body):
    # zonal integrand: exact Gauss-Jacobi quadrature in t = <u, direction>
    n, p = body.n, body.params
    k, delta = p["degree"], p["delta"]
    a = (n - 3) / 2.0
    t, w = special.roots_jacobi(n * k // 2 + 2, a, a)
    vals = (1 + delta * (t ** k - pattern_mean(n, k))) ** n
    return body.scale ** n * specfun.sphere_surface_area(n - 1) * float(w @ vals) / n
