"""Luxembourg and Orlicz norms on sample sets and measure grids, the indicator
norm formula, and the Chebyshev-type tail bound."""

from dataclasses import dataclass
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainOverflowError, InvalidParameterError
from .nfunc import _slope, generalized_inverse
from .numerics import bisect_increasing

_TINY_LEVEL = 1e-12


@dataclass(frozen=True, eq=False)
class MeasureGrid:
    """A finite discretization of a parameter set S with measure weights.

    With ``lebesgue=True`` the grid stands for Lebesgue measure on
    ``interval``: ball measures are computed exactly on the interval and the
    points only serve as quadrature nodes and sup-candidates. Otherwise the
    measure is the discrete one carried by ``weights``.
    """
    points: np.ndarray
    weights: np.ndarray
    total_measure: float
    interval: Optional[tuple] = None
    lebesgue: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.ndim != 1 or pts.size == 0 or pts.shape != w.shape:
            raise InvalidParameterError("points and weights must be nonempty 1-D arrays of equal length")
        if np.any(np.diff(pts) <= 0):
            raise InvalidParameterError("grid points must be strictly increasing")
        if np.any(w <= 0):
            raise InvalidParameterError("grid weights must be positive")
        if not self.total_measure > 0:
            raise InvalidParameterError("total measure must be positive")
        if abs(w.sum() - self.total_measure) > 1e-12 * self.total_measure:
            raise InvalidParameterError("weights must sum to total_measure")
        if self.lebesgue and self.interval is None:
            raise InvalidParameterError("a Lebesgue grid needs its interval")

    @property
    def n(self):
        return self.points.size

    @property
    def lo(self):
        return self.interval[0] if self.interval is not None else float(self.points[0])

    @property
    def hi(self):
        return self.interval[1] if self.interval is not None else float(self.points[-1])

    @classmethod
    def uniform(cls, T, n, start=0.0):
        """Midpoint cells of width T/n on [start, start + T]."""
        T = float(T)
        if not T > 0 or n < 1:
            raise InvalidParameterError("uniform grid needs T > 0 and n >= 1")
        dt = T / n
        pts = start + dt * (np.arange(n) + 0.5)
        w = np.full(n, dt)
        return cls(pts, w, float(w.sum()), (start, start + T), True)

    @classmethod
    def trapezoid(cls, T, n, start=0.0):
        """n equispaced points including both endpoints, trapezoid weights."""
        T = float(T)
        if not T > 0 or n < 2:
            raise InvalidParameterError("trapezoid grid needs T > 0 and n >= 2")
        pts = np.linspace(start, start + T, n)
        dt = T / (n - 1)
        w = np.full(n, dt)
        w[0] = w[-1] = 0.5 * dt
        return cls(pts, w, float(w.sum()), (start, start + T), True)

    @classmethod
    def discrete(cls, points, weights):
        w = np.asarray(weights, dtype=float)
        return cls(np.asarray(points, dtype=float), w, float(w.sum()), None, False)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """I.i.d. realizations of a random variable, with the seed that produced them."""
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise InvalidParameterError("sample set is empty")
        object.__setattr__(self, "values", v)


class TailBound(NamedTuple):
    value: float
    raw: float


def _values_on(f, g):
    if callable(f):
        vals = np.asarray(f(g.points), dtype=float)
        vals = np.broadcast_to(vals, g.points.shape)
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != g.points.shape:
            raise InvalidParameterError("tabulated function must match the grid size")
    if not np.all(np.isfinite(vals)):
        raise InvalidParameterError("function is not finite on the grid")
    return vals


def _gauge(U, values, weights):
    """Solve sum_i w_i U(v_i / r) = 1 for r, rows of ``values`` independently."""
    v = np.abs(np.atleast_2d(np.asarray(values, dtype=float)))
    w = np.asarray(weights, dtype=float)
    scale = v.max(axis=1)
    out = np.zeros(v.shape[0])
    live = scale > 0
    if not live.any():
        return out
    y = v[live] / scale[live, None]
    big = 1.0 / w.min()
    lo = 1.0 / generalized_inverse(U, big)
    hi = 1.0 / generalized_inverse(U, _TINY_LEVEL)
    if not np.isfinite(lo) or not np.isfinite(hi) or lo <= 0:
        raise DomainOverflowError(f"{U.name}: cannot bracket the Luxembourg norm")

    def level(rho):
        return -(U(y / rho[:, None]) * w).sum(axis=1)

    rho = bisect_increasing(level, np.full(y.shape[0], -1.0), lo, hi)
    out[live] = scale[live] * rho
    return out


def luxembourg_norm_samples(U, xs, with_stderr=False, groups=20):
    """inf{r > 0 : mean_i U(x_i / r) <= 1} for an empirical sample.

    With ``with_stderr`` returns ``(norm, stderr)`` where the standard error
    comes from a delete-a-group jackknife over ``groups`` contiguous blocks.
    """
    vals = xs.values if isinstance(xs, SampleSet) else SampleSet(xs).values
    n = vals.size
    value = float(_gauge(U, vals, np.full(n, 1.0 / n))[0])
    if not with_stderr:
        return value
    g = min(groups, n)
    if g < 2:
        return value, float("nan")
    blocks = np.array_split(np.arange(n), g)
    loo = np.empty(g)
    for i, idx in enumerate(blocks):
        rest = np.delete(vals, idx)
        loo[i] = _gauge(U, rest, np.full(rest.size, 1.0 / rest.size))[0]
    se = np.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2))
    return value, float(se)


def luxembourg_norm_function(U, f, g):
    """inf{r > 0 : sum_i w_i U(f(t_i) / r) <= 1} on a measure grid."""
    vals = _values_on(f, g)
    return float(_gauge(U, vals, g.weights)[0])


def indicator_orlicz_norm(U, measure_A):
    """Orlicz norm of an indicator in the U*-space: mu(A) U^(-1)(1 / mu(A))."""
    if not measure_A > 0:
        raise InvalidParameterError("indicator norm needs a set of positive measure")
    return float(measure_A * generalized_inverse(U, 1.0 / measure_A))


def _slope_inverse(U, s):
    """Elementwise v >= 0 with U'(v) = s, U' by central differences."""
    s = np.asarray(s, dtype=float)
    hi = np.ones_like(s)
    cap = U.eval_domain_cap
    while True:
        short = _slope(U, hi) < s
        if not short.any():
            break
        if np.any(2.0 * hi[short] > cap):
            raise DomainOverflowError(f"{U.name}: slope level not reachable below the cap")
        hi = np.where(short, 2.0 * hi, hi)
    lo = 0.5 * hi
    while True:
        tall = (_slope(U, lo) >= s) & (lo > 1e-300)
        if not tall.any():
            break
        hi = np.where(tall, lo, hi)
        lo = np.where(tall, lo * 2.0 ** -16, lo)
    lo = np.where(lo > 1e-300, lo, 0.0)
    return np.where(s > 0, bisect_increasing(lambda v: _slope(U, v), s, lo, hi), 0.0)


def _kkt_maximizer(U, a, w):
    """Maximizer of sum w a v subject to sum w U(v) <= 1 via U'(v_i) = mu a_i."""

    def spent(mu):
        v = _slope_inverse(U, mu * a)
        return float((w * U(v)).sum())

    lo, hi = 1.0, 1.0
    while spent(hi) < 1.0:
        hi *= 2.0
    while spent(lo) > 1.0:
        lo *= 0.5
    if lo == hi:
        return _slope_inverse(U, lo * a)
    log_mu = brentq(lambda lm: spent(math.exp(lm)) - 1.0, math.log(lo), math.log(hi),
                    xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return _slope_inverse(U, math.exp(log_mu) * a)


def _renormalize(U, v, w, iters=8):
    """Scale each row of v radially onto sum w U(v) = 1 (safeguarded Newton)."""
    rho = np.ones(v.shape[0])
    for _ in range(iters):
        y = v / rho[:, None]
        F = (w * U(y)).sum(axis=1) - 1.0
        dF = -(w * _slope(U, y) * y).sum(axis=1) / rho
        step = np.where(dF < 0, F / dF, 0.0)
        rho = np.clip(rho - step, 0.5 * rho, 2.0 * rho)
    return v / rho[:, None]


def conjugate_orlicz_norm(U, phi, g, iters=500, restarts=8, seed=0):
    """Orlicz norm of ``phi`` in the space generated by U*.

    Computes sup { sum_i w_i |phi_i| v_i : sum_i w_i U(v_i) <= 1 } over
    piecewise-constant v >= 0 on the grid. The stationarity point
    U'(v_i) = mu |phi_i| seeds the search; ``restarts`` random starts and
    that seed then go through ``iters`` rounds of projected coordinate ascent
    (one multiplicative coordinate move per row, radial projection back onto
    the constraint, kept only if the objective improves).
    """
    a = np.abs(_values_on(phi, g))
    w = g.weights
    top = a.max()
    if top == 0:
        return 0.0
    a = a / top
    rng = np.random.default_rng(seed)
    starts = [_kkt_maximizer(U, a, w)]
    starts += [rng.uniform(0.1, 1.0, a.size) for _ in range(restarts)]
    v = np.vstack(starts)
    v = v / _gauge(U, v, w)[:, None]
    obj = (v * (w * a)).sum(axis=1)
    eta = np.full(v.shape[0], 0.5)
    rows = np.arange(v.shape[0])
    for _ in range(iters):
        idx = rng.integers(0, a.size, v.shape[0])
        sign = rng.choice([-1.0, 1.0], v.shape[0])
        trial = v.copy()
        trial[rows, idx] *= np.maximum(1.0 + sign * eta, 0.0)
        trial = _renormalize(U, trial, w)
        t_obj = (trial * (w * a)).sum(axis=1)
        better = t_obj > obj
        v[better] = trial[better]
        obj[better] = t_obj[better]
        eta = np.where(better, np.minimum(1.5 * eta, 0.9), np.maximum(0.7 * eta, 1e-9))
    # exact final projection so the reported value is attained by a feasible v
    v = v / np.maximum(_gauge(U, v, w), 1e-300)[:, None]
    return float(((v * (w * a)).sum(axis=1)).max()) * top


def chebyshev_tail(U, norm, x):
    """P{|xi| > x} <= 1 / U(x / ||xi||_U); returns clamped and raw values.

    Beyond the evaluation cap of U the raw bound is reported as 0.
    """
    if not norm > 0 or not x > 0:
        raise InvalidParameterError("chebyshev_tail needs norm > 0 and x > 0")
    try:
        level = U(x / norm)
    except DomainOverflowError:
        return TailBound(0.0, 0.0)
    raw = float(np.inf) if level == 0 else 1.0 / level
    return TailBound(min(1.0, raw), raw)


def holder_residual(U, f, phi, g, **search):
    """||f||_U * ||phi||_(U*) - sum_i w_i |f_i phi_i|; nonnegative by Hoelder."""
    fv = _values_on(f, g)
    pv = _values_on(phi, g)
    lux = luxembourg_norm_function(U, fv, g)
    orl = conjugate_orlicz_norm(U, pv, g, **search)
    return lux * orl - float(np.sum(g.weights * np.abs(fv * pv)))
