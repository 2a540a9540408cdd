"""Quadrature on S^{n-1}, Funk-Hecke projections and diagonal multipliers.

The grid is a tensor product: the polar coordinate t_j = cos(theta_j) of
the j-th nested sphere S^{n-j} carries Gauss-Jacobi nodes for the weight
(1 - t^2)^{(n-j-2)/2}, and the final circle carries 2*resolution equally
spaced azimuths.  With ``resolution = N`` every polynomial of degree
<= 2N - 1 is integrated exactly.

Harmonic components are computed by separation of variables along the
same tensor structure, which reproduces the Funk-Hecke quadrature sum

    (P_k f)(xi) = sum_i w_i Z_k(<xi, u_i>) f(u_i)

at grid nodes and at arbitrary directions.  The sum itself, evaluated with
the zonal kernel (:func:`tomostab._accel.zonal_sum`), is kept as an
independent reference in :func:`project_degree_direct`.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import specfun
from ._accel import contract_level, zonal_sum

MIN_DIM, MAX_DIM = 2, 6


@dataclass(frozen=True, eq=False)
class SphereGrid:
    n: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    levels: tuple = field(repr=False)  # ((t, w), ...) outermost polar angle first
    n_azimuth: int = 0

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def tensor_shape(self):
        return tuple(len(t) for t, _ in self.levels) + (self.n_azimuth,)

    @property
    def max_degree(self):
        """Largest harmonic degree the projector resolves on this grid."""
        return self.resolution - 1

    @cached_property
    def antipode(self):
        """Index of -u_i for every node i."""
        idx = np.arange(self.size).reshape(self.tensor_shape)
        for axis in range(len(self.levels)):
            idx = np.flip(idx, axis=axis)
        idx = np.roll(idx, self.n_azimuth // 2, axis=-1)
        return idx.ravel()

    @cached_property
    def half(self):
        """Indices of one node from every antipodal pair."""
        idx = np.arange(self.size).reshape(self.tensor_shape)
        return idx[..., : self.n_azimuth // 2].ravel()


def build_grid(n, resolution):
    """Product grid on S^{n-1} with ``resolution`` Gauss nodes per polar angle."""
    if not MIN_DIM <= n <= MAX_DIM:
        raise ValueError(f"unsupported dimension {n}; supported: {MIN_DIM}..{MAX_DIM}")
    resolution = int(resolution)
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    m = 2 * resolution
    phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
    circle = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    pts = circle
    wts = np.full(m, 2.0 * np.pi / m)
    levels = []
    for d in range(3, n + 1):
        a = (d - 3) / 2.0
        if a == 0:
            t, w = special.roots_legendre(resolution)
        else:
            t, w = special.roots_jacobi(resolution, a, a)
        # symmetrize so that antipodal pairs match bit for bit
        t = 0.5 * (t - t[::-1])
        w = 0.5 * (w + w[::-1])
        levels.insert(0, (t, w))
        s = np.sqrt(1.0 - t * t)
        new_pts = np.concatenate(
            [np.repeat(t, pts.shape[0])[:, None],
             (s[:, None, None] * pts[None, :, :]).reshape(-1, d - 1)], axis=1)
        new_w = (w[:, None] * wts[None, :]).ravel()
        pts, wts = new_pts, new_w
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return SphereGrid(n, resolution, pts, wts, tuple(levels), m)


@dataclass(frozen=True, eq=False)
class SphericalFunction:
    grid: SphereGrid
    values: np.ndarray
    evaluator: Optional[Callable] = field(default=None, repr=False)

    def at(self, directions):
        if self.evaluator is None:
            raise ValueError("no analytic evaluator attached")
        return self.evaluator(np.atleast_2d(directions))

    def __add__(self, other):
        return SphericalFunction(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return SphericalFunction(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return SphericalFunction(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def max(self):
        return float(self.values.max())

    def min(self):
        return float(self.values.min())

    def sup_norm(self):
        return float(np.abs(self.values).max())


def _vals(x):
    return x.values if isinstance(x, SphericalFunction) else x


def sample(grid, func):
    """SphericalFunction from a vectorized evaluator on unit vectors."""
    return SphericalFunction(grid, np.asarray(func(grid.nodes), dtype=float), func)


def integrate(f):
    """Sum_i w_i f(u_i), compensated, in fixed node order."""
    return math.fsum(f.grid.weights * f.values)


# ---------------------------------------------------------------------------
# Funk-Hecke kernels
# ---------------------------------------------------------------------------

def gegenbauer_index(n):
    return (n - 2) / 2.0


def zonal_coefficients(n, weights_by_degree):
    """Coefficients b_k such that sum_k b_k C_k^{nu}(t) = sum_k a_k Z_k(t).

    Z_k is the reproducing kernel of H_k normalized as
    Z_k(t) = dim H_k / |S^{n-1}| * C_k(t) / C_k(1).
    """
    nu = gegenbauer_index(n)
    area = specfun.sphere_surface_area(n)
    b = np.zeros(len(weights_by_degree))
    for k, a in enumerate(weights_by_degree):
        if a != 0.0:
            b[k] = a * specfun.harmonic_dimension(n, k) / (area * specfun.gegenbauer_at_one(k, nu))
    return b


def _check_even_degree(k):
    if k % 2:
        raise ValueError("only even harmonic degrees are represented")


def _check_lmax(grid, lmax):
    if lmax > grid.max_degree:
        raise ValueError(f"L_max={lmax} exceeds what resolution {grid.resolution} resolves "
                         f"(max {grid.max_degree})")


def _norm_sq(m, lam):
    # int_{-1}^{1} (1-t^2)^{lam-1/2} C_m^{lam}(t)^2 dt
    return math.exp(math.log(math.pi) + (1 - 2 * lam) * math.log(2) + math.lgamma(m + 2 * lam)
                    - math.lgamma(m + 1) - 2 * math.lgamma(lam)) / (m + lam)


# ---------------------------------------------------------------------------
# separable harmonic transform
#
# A degree-k harmonic on S^{d-1}, written at u = (t, s x') with s = sqrt(1-t^2),
# splits into terms s^j C_{k-j}^{j+(d-2)/2}(t) Y_j(x') with Y_j of degree j on
# S^{d-2}.  Coefficients are indexed by chains k_n >= k_{n-1} >= ... >= m, the
# last index being the circle frequency (stored as a complex amplitude).  The
# quadrature projection onto H_k is analysis followed by synthesis with only
# the top index k kept, identical to the Funk-Hecke quadrature sum.
# ---------------------------------------------------------------------------

def _assoc(t, d, L):
    """s^j C_{k-j}^{j+(d-2)/2}(t) as an array (k, j, len(t)); zero for k < j."""
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    out = np.zeros((L + 1, L + 1, t.shape[0]))
    for j in range(L + 1):
        lam = j + (d - 2) / 2.0
        sj = s ** j
        for k in range(j, L + 1):
            out[k, j] = sj * specfun.gegenbauer(k - j, lam, t)
    return out


_LEVEL_CACHE = {}


def _level_matrices(grid, L):
    """Per polar level: synthesis matrix S and analysis matrix S * w / norm."""
    key = (grid.n, grid.resolution, L)
    if key not in _LEVEL_CACHE:
        mats = []
        for idx, (t, w) in enumerate(grid.levels):
            d = grid.n - idx
            S = _assoc(t, d, L)
            h = np.ones((L + 1, L + 1))
            for j in range(L + 1):
                for k in range(j, L + 1):
                    h[k, j] = _norm_sq(k - j, j + (d - 2) / 2.0)
            mats.append((S, S * w / h[..., None]))
        _LEVEL_CACHE[key] = mats
    return _LEVEL_CACHE[key]


def _azimuth_factor(grid, L, inverse):
    m = np.arange(L + 1)
    M = grid.n_azimuth
    if inverse:
        return np.where(m == 0, M, M / 2.0) * np.exp(1j * np.pi * m / M)
    # nodes sit at phi_l = (l + 1/2) 2 pi / M; the phase makes amplitudes absolute
    return np.where(m == 0, 1.0, 2.0) / M * np.exp(-1j * np.pi * m / M)


def _analyze(values, grid, L):
    X = np.fft.rfft(values.reshape(grid.tensor_shape), axis=-1)[..., : L + 1]
    X = X * _azimuth_factor(grid, L, inverse=False)
    mats = _level_matrices(grid, L)
    for idx in reversed(range(len(grid.levels))):
        P = mats[idx][1]
        pre, N, J, rest = X.shape[:idx], X.shape[idx], X.shape[idx + 1], X.shape[idx + 2:]
        Xr = X.reshape(int(np.prod(pre)), N, J, int(np.prod(rest)))
        out = np.zeros((Xr.shape[0], L + 1, J, Xr.shape[3]), dtype=complex)
        for j in range(J):
            out[:, j:, j, :] = np.matmul(P[j:, j, :], Xr[:, :, j, :])
        X = out.reshape(pre + (L + 1, J) + rest)
    return X


def _synthesize(C, grid, L):
    mats = _level_matrices(grid, L)
    X = C
    for idx in range(len(grid.levels)):
        S = mats[idx][0]
        pre, K, J, rest = X.shape[:idx], X.shape[idx], X.shape[idx + 1], X.shape[idx + 2:]
        Xr = X.reshape(int(np.prod(pre)), K, J, int(np.prod(rest)))
        out = np.empty((Xr.shape[0], S.shape[2], J, Xr.shape[3]), dtype=complex)
        for j in range(J):
            out[:, :, j, :] = np.matmul(S[j:, j, :].T, Xr[:, j:, j, :])
        X = out.reshape(pre + (S.shape[2], J) + rest)
    M = grid.n_azimuth
    A = np.zeros(X.shape[:-1] + (M // 2 + 1,), dtype=complex)
    A[..., : L + 1] = X * _azimuth_factor(grid, L, inverse=True)
    return np.fft.irfft(A, n=M, axis=-1).ravel()


def _evaluate(C, n, L, targets, chunk=32):
    """Synthesis at arbitrary unit vectors, peeling one polar angle per level."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.empty(targets.shape[0])
    m = np.arange(L + 1)
    for a0 in range(0, targets.shape[0], chunk):
        x = targets[a0:a0 + chunk]
        Z = None
        for lvl in range(n - 2):
            S = _assoc(np.clip(x[:, 0], -1.0, 1.0), n - lvl, L)
            if Z is None:
                K, J, rest = C.shape[0], C.shape[1], C.shape[2:]
                Cr = C.reshape(K, J, -1)
                Z = np.empty((x.shape[0], J, Cr.shape[2]), dtype=complex)
                for j in range(J):
                    Z[:, j, :] = S[j:, j, :].T @ Cr[j:, j, :]
            else:
                rest = Z.shape[3:]
                Z = contract_level(Z.reshape(Z.shape[0], Z.shape[1], Z.shape[2], -1), S)
            Z = Z.reshape((x.shape[0],) + Z.shape[1:2] + rest)
            y = x[:, 1:]
            ny = np.linalg.norm(y, axis=1, keepdims=True)
            e = np.zeros_like(y)
            e[:, 0] = 1.0
            x = np.where(ny > 1e-300, y / np.where(ny > 1e-300, ny, 1.0), e)
        if Z is None:
            Z = np.broadcast_to(C, (x.shape[0],) + C.shape)
        phi = np.arctan2(x[:, 1], x[:, 0])
        out[a0:a0 + chunk] = (Z * np.exp(1j * np.outer(phi, m))).real.sum(axis=1)
    return out


class Spectrum:
    """Even-degree harmonic components of a function on a grid."""

    def __init__(self, f, lmax):
        grid = f.grid
        _check_lmax(grid, lmax)
        self.grid = grid
        self.lmax = int(lmax)
        self.degrees = list(range(0, self.lmax + 1, 2))
        self.source = f
        self.coefficients = _analyze(f.values, grid, self.lmax)
        self._component_cache = {}

    def _weighted(self, entries, damping):
        w = np.zeros(self.lmax + 1)
        for k, mk in zip(self.degrees, entries):
            w[k] = mk * (damping ** k if damping is not None else 1.0)
        return self.coefficients * w.reshape((-1,) + (1,) * (self.coefficients.ndim - 1))

    def component(self, k):
        _check_even_degree(k)
        if k > self.lmax:
            raise ValueError(f"degree {k} above L_max={self.lmax}")
        if k not in self._component_cache:
            e = [1.0 if j == k else 0.0 for j in self.degrees]
            self._component_cache[k] = self.combine(e)
        return self._component_cache[k]

    @property
    def components(self):
        return np.stack([self.component(k) for k in self.degrees])

    def combine(self, entries, damping=None):
        """sum_k entries[k/2] damping^k P_k f on the grid nodes."""
        return _synthesize(self._weighted(entries, damping), self.grid, self.lmax)

    def combine_at(self, entries, targets, damping=None):
        """Same operator evaluated at arbitrary unit vectors."""
        return _evaluate(self._weighted(entries, damping), self.grid.n, self.lmax, targets)


_SPECTRUM_CACHE = {}


def spectrum(f, lmax):
    key = (id(f), int(lmax))
    hit = _SPECTRUM_CACHE.get(key)
    if hit is not None and hit.source is f:
        return hit
    if len(_SPECTRUM_CACHE) > 64:
        _SPECTRUM_CACHE.clear()
    sp = Spectrum(f, lmax)
    _SPECTRUM_CACHE[key] = sp
    return sp


def project_degree(f, k, lmax=None):
    """Funk-Hecke projection of an even function onto H_k, on the grid nodes."""
    _check_even_degree(k)
    lmax = k if lmax is None else max(lmax, k)
    lmax += lmax % 2
    return SphericalFunction(f.grid, spectrum(f, lmax).component(k).copy())


def project_degree_direct(f, k, targets):
    """The defining Funk-Hecke quadrature sum, evaluated at ``targets``."""
    _check_even_degree(k)
    g = f.grid
    a = np.zeros(k + 1)
    a[k] = 1.0
    coef = zonal_coefficients(g.n, a)
    return zonal_sum(np.atleast_2d(targets), g.nodes, g.weights * f.values, coef,
                     gegenbauer_index(g.n))


@dataclass(frozen=True)
class MultiplierSequence:
    n: int
    entries: tuple  # m_k for k = 0, 2, ..., lmax
    descriptor: str = ""

    @property
    def lmax(self):
        return 2 * (len(self.entries) - 1)

    def __post_init__(self):
        if not np.all(np.isfinite(self.entries)):
            raise ValueError(f"non-finite multiplier in {self.descriptor!r}")

    def __getitem__(self, k):
        _check_even_degree(k)
        return self.entries[k // 2]

    def __mul__(self, other):
        if isinstance(other, MultiplierSequence):
            e = tuple(a * b for a, b in zip(self.entries, other.entries))
            return MultiplierSequence(self.n, e, f"{self.descriptor}*{other.descriptor}")
        return MultiplierSequence(self.n, tuple(a * other for a in self.entries), self.descriptor)

    __rmul__ = __mul__


def multiplier(n, lmax, func, descriptor=""):
    return MultiplierSequence(n, tuple(float(func(k)) for k in range(0, lmax + 1, 2)), descriptor)


def apply_multiplier(f, m, damping=None):
    """sum_k m_k P_k f over even k <= m.lmax, on the grid of ``f``."""
    sp = spectrum(f, m.lmax)
    return SphericalFunction(f.grid, sp.combine(m.entries, damping))


def apply_multiplier_at(f, m, targets, damping=None):
    return spectrum(f, m.lmax).combine_at(m.entries, targets, damping)


# ---------------------------------------------------------------------------
# great subspheres
# ---------------------------------------------------------------------------

def householder_basis(xi):
    """Orthonormal rows spanning xi-perp, from the reflection taking e_n to xi."""
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    n = xi.shape[0]
    v = -xi.copy()
    v[-1] += 1.0
    vv = v @ v
    H = np.eye(n)
    if vv > 1e-30:
        H -= 2.0 * np.outer(v, v) / vv
    return H[:, : n - 1].T.copy()


@dataclass(frozen=True, eq=False)
class SubsphereQuadrature:
    xi: np.ndarray
    basis: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray


_SUBGRID_CACHE = {}


def _subsphere_grid(m, resolution):
    key = (m, resolution)
    if key not in _SUBGRID_CACHE:
        if m == 1:
            _SUBGRID_CACHE[key] = (np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
        else:
            g = build_grid(m, resolution)
            _SUBGRID_CACHE[key] = (g.nodes, g.weights)
    return _SUBGRID_CACHE[key]


def subsphere_quadrature(xi, resolution=24):
    """Quadrature on S^{n-1} cap xi-perp (an embedded (n-2)-sphere)."""
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
        raise ValueError("xi must be a unit vector")
    basis = householder_basis(xi)
    nodes, weights = _subsphere_grid(xi.shape[0] - 1, resolution)
    return SubsphereQuadrature(xi, basis, nodes @ basis, weights)
