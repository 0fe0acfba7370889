"""Path-generation and path-statistic kernels.

Every kernel exists twice: a numba-compiled loop and a vectorized numpy
version. ``ORLICZ_DISABLE_NUMBA`` picks the numpy one. Randomness comes from
numpy's Philox counter-based generator keyed by (seed, path index), with a
separate counter stream per refinement level, so a path's draws never depend
on batch composition or thread scheduling.
"""

import numpy as np
from scipy.special import ndtri

from ._accel import njit, numba_enabled, ordered_map

CHUNK = 2048
_U53 = 2.0 ** -53


def standard_normals(seed, path_ids, n, stream=0):
    """(len(path_ids), n) standard normals via inverse CDF of 53-bit uniforms."""
    out = np.empty((len(path_ids), n))
    ctr = np.array([0, 0, 0, stream], dtype=np.uint64)
    for row, path in enumerate(path_ids):
        key = np.array([seed, path], dtype=np.uint64)
        bits = np.random.Philox(key=key, counter=ctr).random_raw(n)
        out[row] = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return ndtri(out)


@njit
def _ar1_numba(z, rho, scale):
    m, n = z.shape
    x = np.empty((m, n))
    for i in range(m):
        cur = z[i, 0]
        x[i, 0] = cur
        for j in range(1, n):
            cur = rho * cur + scale * z[i, j]
            x[i, j] = cur
    return x


def _ar1_numpy(z, rho, scale):
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    for j in range(1, z.shape[1]):
        x[:, j] = rho * x[:, j - 1] + scale * z[:, j]
    return x


@njit
def _bridge_numba(coarse, z, coef, scale):
    m, n = coarse.shape
    out = np.empty((m, 2 * n - 1))
    for i in range(m):
        for j in range(n - 1):
            out[i, 2 * j] = coarse[i, j]
            out[i, 2 * j + 1] = coef * (coarse[i, j] + coarse[i, j + 1]) + scale * z[i, j]
        out[i, 2 * n - 2] = coarse[i, n - 1]
    return out


def _bridge_numpy(coarse, z, coef, scale):
    m, n = coarse.shape
    out = np.empty((m, 2 * n - 1))
    out[:, 0::2] = coarse
    out[:, 1::2] = coef * (coarse[:, :-1] + coarse[:, 1:]) + scale * z[:, : n - 1]
    return out


@njit
def _sup_dev_numba(x, f):
    m, n = x.shape
    out = np.empty(m)
    for i in range(m):
        best = 0.0
        for j in range(n):
            d = abs(x[i, j] - f[j])
            if d > best:
                best = d
        out[i] = best
    return out


def _sup_dev_numpy(x, f):
    return np.abs(x - f).max(axis=1)


@njit
def _avg_dev_numba(x, f, w, mu):
    m, n = x.shape
    out = np.empty(m)
    for i in range(m):
        mean = 0.0
        for j in range(n):
            mean += w[j] * (x[i, j] - f[j])
        mean /= mu
        best = 0.0
        for j in range(n):
            d = abs(x[i, j] - f[j] - mean)
            if d > best:
                best = d
        out[i] = best
    return out


def _avg_dev_numpy(x, f, w, mu):
    dev = x - f
    mean = np.zeros(x.shape[0])
    for j in range(x.shape[1]):
        mean += w[j] * dev[:, j]
    mean /= mu
    return np.abs(dev - mean[:, None]).max(axis=1)


def _pick(fast, slow):
    return fast if numba_enabled() else slow


def _chunks(n_paths, first=0):
    return [np.arange(first + s, first + min(s + CHUNK, n_paths)) for s in range(0, n_paths, CHUNK)]


def ar1_paths(seed, n_paths, n_points, rho, first_path=0):
    """Stationary unit-variance AR(1) paths X_{j+1} = rho X_j + sqrt(1 - rho^2) Z_{j+1}."""
    kernel = _pick(_ar1_numba, _ar1_numpy)
    scale = float(np.sqrt(1.0 - rho * rho))

    def work(ids):
        return kernel(standard_normals(seed, ids, n_points, 0), float(rho), scale)

    return np.vstack(ordered_map(work, _chunks(n_paths, first_path)))


def bridge_refine(coarse, seed, level, rho_half, first_path=0):
    """Insert conditional midpoints between neighbouring values.

    ``rho_half`` is the correlation between a midpoint and either neighbour;
    the midpoint draw for refinement ``level`` uses counter stream level + 1.
    """
    kernel = _pick(_bridge_numba, _bridge_numpy)
    r2 = rho_half * rho_half
    coef = float(rho_half / (1.0 + r2))
    scale = float(np.sqrt((1.0 - r2) / (1.0 + r2)))
    n_paths, n = coarse.shape
    chunks = _chunks(n_paths)

    def work(idx):
        z = standard_normals(seed, idx + first_path, n - 1, level + 1)
        return kernel(coarse[idx], z, coef, scale)

    return np.vstack(ordered_map(work, chunks))


def sup_abs_deviation(values, f_values):
    kernel = _pick(_sup_dev_numba, _sup_dev_numpy)
    return kernel(np.ascontiguousarray(values, dtype=float), np.ascontiguousarray(f_values, dtype=float))


def averaged_deviation(values, f_values, weights, total):
    kernel = _pick(_avg_dev_numba, _avg_dev_numpy)
    return kernel(np.ascontiguousarray(values, dtype=float), np.ascontiguousarray(f_values, dtype=float),
                  np.ascontiguousarray(weights, dtype=float), float(total))
