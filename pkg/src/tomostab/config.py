"""Numerical settings shared by every transform and verifier."""

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .sphere import build_grid

DEFAULT_LMAX = 16
# Gauss nodes per polar angle; raised to lmax + 1 when needed so that
# degree-2*lmax polynomials integrate exactly.
RESOLUTION_TABLE = {2: 64, 3: 32, 4: 20, 5: 17, 6: 13}
LMAX_CAP = {6: 12}  # n = 6 grids grow as N^4; keep the default within memory
DIRECT_RESOLUTION = {2: 1, 3: 128, 4: 32, 5: 10, 6: 6}
# direction grid used by quadrature-per-direction routes (cost ~ directions x nodes)
DIRECTION_RESOLUTION = {2: 64, 3: 32, 4: 16, 5: 9, 6: 7}
# random sign-test directions; fewer in n >= 5 where each costs a pass over ~1e5 nodes
N_RANDOM_TARGETS = {2: 512, 3: 512, 4: 512, 5: 160, 6: 96}


@dataclass(frozen=True)
class Settings:
    lmax: Optional[int] = None
    resolution: Optional[int] = None
    damping: float = 0.8
    tol_cert: float = 1e-4
    tol_verdict: float = 1e-6
    tol_route: float = 1e-3
    direct_resolution: Optional[int] = None
    seed: int = 0

    def lmax_for(self, n):
        if self.lmax is not None:
            return int(self.lmax)
        return LMAX_CAP.get(n, DEFAULT_LMAX)

    def resolution_for(self, n, extra=0):
        need = self.lmax_for(n) + extra + 1
        if self.resolution is not None:
            return max(int(self.resolution), need)
        return max(RESOLUTION_TABLE[n], need)

    def grid(self, n, extra=0):
        return cached_grid(n, self.resolution_for(n, extra))

    def direct_resolution_for(self, n):
        if self.direct_resolution is not None:
            return int(self.direct_resolution)
        return DIRECT_RESOLUTION[n]

    def direction_grid(self, n):
        res = self.resolution if self.resolution is not None else DIRECTION_RESOLUTION[n]
        return cached_grid(n, max(4, int(res)))

    def with_lmax(self, lmax):
        return replace(self, lmax=int(lmax))


@lru_cache(maxsize=32)
def cached_grid(n, resolution):
    return build_grid(n, resolution)


@lru_cache(maxsize=16)
def refine_targets(n, seed=0):
    """Extra sign-test directions: axes, face diagonals, cube diagonals, random."""
    eye = np.eye(n)
    dirs = [eye]
    pairs = [(eye[i] + s * eye[j]) / np.sqrt(2.0)
             for i in range(n) for j in range(i + 1, n) for s in (1.0, -1.0)]
    if pairs:
        dirs.append(np.array(pairs))
    signs = np.array(np.meshgrid(*[[1.0, -1.0]] * n)).reshape(n, -1).T
    dirs.append(signs[signs[:, 0] > 0] / np.sqrt(n))
    rng = np.random.default_rng(seed)
    r = rng.normal(size=(N_RANDOM_TARGETS[n], n))
    dirs.append(r / np.linalg.norm(r, axis=1, keepdims=True))
    return np.vstack(dirs)


DEFAULT = Settings()
