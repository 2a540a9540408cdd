"""Backend switch for the hot numeric kernels.

Kernels are compiled with numba when it is importable and the environment
variable ``TOMOSTAB_DISABLE_NUMBA`` is unset (or ``0``).  Setting it to ``1``
selects the pure-numpy implementations of the same sums.  Results agree to
rounding (summation order differs).
"""

import os

import numpy as np

_flag = os.environ.get("TOMOSTAB_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    njit = numba.njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised with the env flag
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# zonal moments:  out[a, k] = sum_i wf[i] C_k^{nu}(<x_a, u_i>),  k = 0..L
# (Gegenbauer forward recurrence; nu == 0 means Chebyshev T_k, the circle case).
# Any zonal kernel sum is then out @ coef.
# ---------------------------------------------------------------------------

_BLOCK = 8  # targets advanced together so the recurrence vectorizes


@njit(cache=True, fastmath=True)
def _zonal_moments_numba(targets, nodes, wf, L, nu):
    na = targets.shape[0]
    nn = nodes.shape[0]
    dim = nodes.shape[1]
    B = _BLOCK
    out = np.zeros((na, L + 1))
    acc = np.zeros((L + 1, B))
    t = np.zeros(B)
    c0 = np.zeros(B)
    c1 = np.zeros(B)
    for a0 in range(0, na, B):
        nb = min(B, na - a0)
        acc[:, :] = 0.0
        for i in range(nn):
            w = wf[i]
            for b in range(B):
                s = 0.0
                if b < nb:
                    for d in range(dim):
                        s += targets[a0 + b, d] * nodes[i, d]
                t[b] = min(1.0, max(-1.0, s))
                c0[b] = 1.0
                c1[b] = t[b] if nu == 0.0 else 2.0 * nu * t[b]
                acc[0, b] += w
                if L >= 1:
                    acc[1, b] += w * c1[b]
            for k in range(1, L):
                if nu == 0.0:
                    p = 2.0
                    q = 1.0
                else:
                    p = 2.0 * (k + nu) / (k + 1.0)
                    q = (k + 2.0 * nu - 1.0) / (k + 1.0)
                for b in range(B):
                    v = p * t[b] * c1[b] - q * c0[b]
                    acc[k + 1, b] += w * v
                    c0[b] = c1[b]
                    c1[b] = v
        for b in range(nb):
            for k in range(L + 1):
                out[a0 + b, k] = acc[k, b]
    return out


def _zonal_moments_numpy(targets, nodes, wf, L, nu, budget=4_000_000):
    out = np.empty((targets.shape[0], L + 1))
    chunk = max(1, budget // max(1, nodes.shape[0]))
    for start in range(0, targets.shape[0], chunk):
        t = np.clip(targets[start:start + chunk] @ nodes.T, -1.0, 1.0)
        c0 = np.ones_like(t)
        out[start:start + chunk, 0] = c0 @ wf
        if L >= 1:
            c1 = t.copy() if nu == 0.0 else 2.0 * nu * t
            out[start:start + chunk, 1] = c1 @ wf
        for k in range(1, L):
            if nu == 0.0:
                c2 = 2.0 * t * c1 - c0
            else:
                c2 = (2.0 * (k + nu) * t * c1 - (k + 2.0 * nu - 1.0) * c0) / (k + 1.0)
            out[start:start + chunk, k + 1] = c2 @ wf
            c0, c1 = c1, c2
    return out


def zonal_moments(targets, nodes, wf, L, nu):
    targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    wf = np.ascontiguousarray(wf, dtype=np.float64)
    if HAVE_NUMBA:
        return _zonal_moments_numba(targets, nodes, wf, int(L), float(nu))
    return _zonal_moments_numpy(targets, nodes, wf, int(L), float(nu))


def zonal_sum(targets, nodes, wf, coef, nu):
    """sum_i wf[i] K(<x_a, u_i>) with K = sum_k coef[k] C_k^{nu}."""
    coef = np.asarray(coef, dtype=np.float64)
    return zonal_moments(targets, nodes, wf, coef.shape[0] - 1, nu) @ coef


# ---------------------------------------------------------------------------
# one level of off-grid synthesis:  out[a, j, r] = sum_{k >= j} S[k, j, a] Z[a, k, j, r]
# (S holds the associated Gegenbauer factors at each target's polar angle)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _contract_level_numba(Z, S):
    A, K, J, R = Z.shape
    out = np.zeros((A, J, R), dtype=np.complex128)
    for a in range(A):
        for k in range(K):
            for j in range(min(k + 1, J)):
                s = S[k, j, a]
                if s != 0.0:
                    for r in range(R):
                        out[a, j, r] += s * Z[a, k, j, r]
    return out


def _contract_level_numpy(Z, S):
    return np.einsum("kja,akjr->ajr", S, Z)


def contract_level(Z, S):
    Z = np.ascontiguousarray(Z, dtype=np.complex128)
    S = np.ascontiguousarray(S, dtype=np.float64)
    if HAVE_NUMBA:
        return _contract_level_numba(Z, S)
    return _contract_level_numpy(Z, S)


# ---------------------------------------------------------------------------
# polytope radial function: rho(u) = min over facets with <u,nu> > 0 of b/<u,nu>
# ---------------------------------------------------------------------------

@njit(cache=True)
def _polytope_radial_numba(u, normals, offsets):
    m = u.shape[0]
    nf = normals.shape[0]
    dim = u.shape[1]
    out = np.empty(m)
    for a in range(m):
        best = np.inf
        for f in range(nf):
            d = 0.0
            for j in range(dim):
                d += u[a, j] * normals[f, j]
            if d > 0.0:
                r = offsets[f] / d
                if r < best:
                    best = r
        out[a] = best
    return out


def _polytope_radial_numpy(u, normals, offsets, chunk=65536):
    out = np.empty(u.shape[0])
    for start in range(0, u.shape[0], chunk):
        d = u[start:start + chunk] @ normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d > 0.0, offsets[None, :] / d, np.inf)
        out[start:start + chunk] = r.min(axis=1)
    return out


def polytope_radial(u, normals, offsets):
    u = np.ascontiguousarray(u, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    if HAVE_NUMBA:
        return _polytope_radial_numba(u, normals, offsets)
    return _polytope_radial_numpy(u, normals, offsets)
