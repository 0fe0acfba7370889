"""Chaining quantities built from a majorizing measure and the tail bounds
they feed: ball measures, the chaining integrals, the pair integrals Z and
Delta_q, the mixed two-term tail bound and the L_q tail bound."""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from ._accel import ordered_map
from .errors import CapabilityError, DivergenceError, DomainOverflowError, InvalidParameterError
from .nfunc import generalized_inverse
from .numerics import adaptive_simpson, bisect_increasing, golden_minimize_scalar, integrate_singular_left
from .orlicz_norms import MeasureGrid

HYP_CHAIN_U = ("the chaining integral of U^(-1)(nu_t(u)^(-2)) over (0, zeta_1(t)] "
               "must be finite uniformly in t")
HYP_CHAIN_Q = ("the chaining integral of nu_t(u)^(-2/q) over (0, zeta_1(t)] "
               "must be finite uniformly in t")
HYP_PAIR_Q = "the double integral of gamma(d_f(u, v))^q over S x S must be finite"
HYP_PAIR_Z = "the pair integral defining Z must be finite"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class SigmaModulus:
    """Increasing modulus sigma bounding the increment norm, with its inverse.

    ``sigma_inv`` is optional; without it the generalized inverse
    sup{s : sigma(s) <= h} is found by bisection on [0, ``search_cap``].
    """
    sigma: Callable
    sigma_inv: Optional[Callable] = None
    search_cap: float = 1e12
    name: str = "sigma"

    def __call__(self, h):
        return self.sigma(np.asarray(h, dtype=float))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.sigma_inv is not None:
            return self.sigma_inv(y)
        return bisect_increasing(lambda s: self.sigma(s), y, 0.0, self.search_cap)

    @classmethod
    def power(cls, scale, exponent):
        """sigma(h) = scale * h**exponent."""
        if not scale > 0 or not exponent > 0:
            raise InvalidParameterError("power modulus needs scale > 0 and exponent > 0")
        return cls(lambda h: scale * np.asarray(h, dtype=float) ** exponent,
                   lambda y: (np.asarray(y, dtype=float) / scale) ** (1.0 / exponent),
                   name=f"{scale:g}*h^{exponent:g}")


@dataclass(frozen=True)
class ZetaPower:
    """zeta(u) = u**alpha; gamma(u) = u / zeta(u) with gamma(0) taken as 0."""
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError("zeta exponent must be positive")

    def zeta(self, u):
        return np.asarray(u, dtype=float) ** self.alpha

    def zeta_inv(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.alpha)

    def gamma(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(u > 0, np.abs(u) ** (1.0 - self.alpha), 0.0)


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class DeviationModel:
    """Increment norms of X and of X - f.

    ``d(u, v)`` and ``d_f(u, v)`` are vectorized. ``lag``, when given, says
    that d_f(u, v) depends only on |u - v| through ``lag(|u - v|)``, which
    lets pair integrals collapse to one dimension.
    """
    d: Callable
    d_f: Callable
    f: Callable = _zero
    delta: Callable = _zero
    lag: Optional[Callable] = None

    @classmethod
    def stationary(cls, lag_norm, f=_zero, delta=_zero, lag_f=None):
        """Model whose increment norm is ``lag_norm(|u - v|)``; d_f uses ``lag_f`` or the same."""
        lag_f = lag_f or lag_norm
        return cls(d=lambda u, v: lag_norm(np.abs(np.asarray(u) - np.asarray(v))),
                   d_f=lambda u, v: lag_f(np.abs(np.asarray(u) - np.asarray(v))),
                   f=f, delta=delta, lag=lag_f)


def check_deviation_model(dm, sm, pairs, atol=1e-12):
    """Sampled checks of symmetry, sign, drift control and sigma domination."""
    u, v = np.asarray(pairs, dtype=float).T
    d_uv, d_vu = dm.d(u, v), dm.d(v, u)
    df_uv, df_vu = dm.d_f(u, v), dm.d_f(v, u)
    drift = np.abs(dm.f(u) - dm.f(v))
    dd = dm.delta(d_uv)
    return {
        "symmetric": bool(np.allclose(d_uv, d_vu, atol=atol) and np.allclose(df_uv, df_vu, atol=atol)),
        "nonnegative": bool(np.all(d_uv >= 0) and np.all(df_uv >= 0)),
        "zero_diagonal": bool(np.all(dm.d(u, u) <= atol) and np.all(dm.d_f(u, u) <= atol)),
        "drift_controlled": bool(np.all(drift <= dd + atol) and np.all(dd <= d_uv + atol)),
        "sigma_dominates": bool(np.all(d_uv <= sm(np.abs(u - v)) + atol)),
    }


@dataclass(frozen=True)
class BoundQuery:
    """Search and quadrature settings shared by the bound computations."""
    x_grid: np.ndarray
    t_grid: MeasureGrid
    p_grid_size: int = 19
    p_range: tuple = (0.05, 0.95)
    split_grid_size: int = 19
    split_range: tuple = (0.05, 0.95)
    refine_steps: int = 30
    sweeps: int = 2
    quad_tol: float = 1e-8

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        object.__setattr__(self, "x_grid", x)
        if x.ndim != 1 or x.size == 0 or np.any(x <= 0) or np.any(np.diff(x) <= 0):
            raise InvalidParameterError("x_grid must be positive and strictly increasing")
        if not self.quad_tol > 0:
            raise InvalidParameterError("quad_tol must be positive")
        for lo, hi in (self.p_range, self.split_range):
            if not 0 < lo < hi < 1:
                raise InvalidParameterError("search ranges must lie inside (0, 1)")

    @property
    def p_grid(self):
        return np.linspace(self.p_range[0], self.p_range[1], self.p_grid_size)

    @property
    def split_grid(self):
        return np.linspace(self.split_range[0], self.split_range[1], self.split_grid_size)


# ---------------------------------------------------------------- ball measures

def zeta1(t, g, sm, z):
    """(2 sigma(largest distance from t to the parameter set))**alpha."""
    reach = np.maximum(np.asarray(t, dtype=float) - g.lo, g.hi - np.asarray(t, dtype=float))
    out = z.zeta(2.0 * sm(reach))
    return float(out) if np.ndim(out) == 0 else out


def ball_radius(u, sm, z):
    return sm.inverse(0.5 * z.zeta_inv(u))


def nu_t(t, u, g, sm, z):
    """Measure of the ball around t of radius sigma^(-1)(zeta^(-1)(u) / 2)."""
    r = ball_radius(np.asarray(u, dtype=float), sm, z)
    if g.lebesgue:
        # summing the two one-sided reaches avoids cancellation for tiny radii
        out = np.minimum(g.hi - t, r) + np.minimum(t - g.lo, r)
    else:
        dist = np.abs(g.points - t)
        rr = np.atleast_1d(r)
        out = (g.weights[None, :] * (dist[None, :] <= rr[:, None])).sum(axis=1)
        out = out.reshape(np.shape(r))
    return float(out) if np.ndim(out) == 0 else out


def sup_candidates(g):
    """Points t at which a sup over S is evaluated."""
    if not g.lebesgue:
        return g.points.copy()
    extra = [g.lo, g.hi, 0.5 * (g.lo + g.hi)]
    return np.unique(np.concatenate([g.points, extra]))


def _kinks(t, g, sm, z):
    """Values of u where nu_t(u) changes formula (or jumps, for discrete grids)."""
    if g.lebesgue:
        dist = np.array([t - g.lo, g.hi - t])
    else:
        dist = np.abs(g.points - t)
    dist = dist[dist > 0]
    return np.unique(z.zeta(2.0 * sm(dist)))


def chaining_integrals(t, p_values, integrand, g, sm, z, tol, hypothesis):
    """int_0^{p zeta_1(t)} integrand(nu_t(u)) du for each p in ``p_values``."""
    p_values = np.asarray(p_values, dtype=float)
    order = np.argsort(p_values)
    top = zeta1(t, g, sm, z)
    ends = p_values[order] * top

    def fn(u):
        return integrand(nu_t(t, u, g, sm, z))

    try:
        first = integrate_singular_left(fn, float(ends[0]), tol, hypothesis)
        kinks = _kinks(t, g, sm, z)
        kinks = kinks[(kinks > ends[0]) & (kinks < ends[-1])]
        edges = np.unique(np.concatenate([ends, kinks]))
        cells = adaptive_simpson(fn, edges, rtol=tol * 0.1)
    except DivergenceError as exc:
        if exc.hypothesis is None:
            raise DivergenceError(str(exc), hypothesis) from exc
        raise
    running = first + np.concatenate([[0.0], np.cumsum(cells)])
    at_end = running[np.searchsorted(edges, ends)]
    out = np.empty_like(p_values)
    out[order] = at_end
    return out


def chaining_profile(p_values, integrand, g, sm, z, tol, hypothesis):
    """sup_t of the chaining integral divided by p(1 - p), one value per p."""
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    if np.any(p_values <= 0) or np.any(p_values >= 1):
        raise InvalidParameterError("p must lie in (0, 1)")
    ts = sup_candidates(g)
    rows = ordered_map(
        lambda t: chaining_integrals(t, p_values, integrand, g, sm, z, tol, hypothesis), ts)
    best = np.max(np.vstack(rows), axis=0)
    return best / (p_values * (1.0 - p_values))


def _scalar_or_array(values, p):
    return float(values[0]) if np.ndim(p) == 0 else values


def c_p(p, g, sm, z, U, quad_tol=1e-8):
    """sup_t (p(1-p))^(-1) int_0^{p zeta_1(t)} U^(-1)(nu_t(u)^(-2)) du."""
    def integrand(nu):
        with np.errstate(divide="ignore"):
            level = nu ** -2.0
        if not np.all(np.isfinite(level)):
            raise DivergenceError("ball measure vanishes inside the integration range", HYP_CHAIN_U)
        try:
            return generalized_inverse(U, level)
        except DomainOverflowError as exc:
            raise DivergenceError(str(exc), HYP_CHAIN_U) from exc

    return _scalar_or_array(chaining_profile(p, integrand, g, sm, z, quad_tol, HYP_CHAIN_U), p)


def d_pq_quad(p, q_exp, g, sm, z, quad_tol=1e-8):
    """sup_t (p(1-p))^(-1) int_0^{p zeta_1(t)} nu_t(u)^(-2/q) du."""
    if not q_exp > 1:
        raise InvalidParameterError("q must exceed 1")
    power = -2.0 / q_exp

    def integrand(nu):
        with np.errstate(divide="ignore"):
            return nu ** power

    return _scalar_or_array(chaining_profile(p, integrand, g, sm, z, quad_tol, HYP_CHAIN_Q), p)


# ---------------------------------------------------------------- pair integrals

def pair_integral(phi, dm, g, tol=1e-8, hypothesis=None):
    """int int phi(d_f(u, v)) d(mu x mu) over S x S.

    Lebesgue grids integrate exactly over the interval: a stationary model
    reduces to 2 int_0^L (L - h) phi(lag(h)) dh, otherwise the inner integral
    along each diagonal uses 64-point Gauss-Legendre. Discrete grids use the
    double sum. Pairs with d_f = 0 are passed to ``phi`` as 0.
    """
    if not g.lebesgue:
        dist = dm.d_f(g.points[:, None], g.points[None, :])
        vals = phi(np.where(dist > 0, dist, 0.0))
        return float(g.weights @ vals @ g.weights)
    lo, hi = g.lo, g.hi
    length = hi - lo
    if dm.lag is not None:
        def fn(h):
            return 2.0 * (length - h) * phi(dm.lag(h))
    else:
        def fn(h):
            h = np.asarray(h, dtype=float)
            half = 0.5 * (length - h)
            s = lo + half[:, None] * (1.0 + _GL_NODES[None, :])
            vals = phi(dm.d_f(s, s + h[:, None]))
            return 2.0 * half * (vals @ _GL_WEIGHTS)
    try:
        return float(integrate_singular_left(fn, length, tol, hypothesis))
    except DivergenceError as exc:
        if exc.hypothesis is None:
            raise DivergenceError(str(exc), hypothesis) from exc
        raise


def z_of_x(x, dm, z, U, g, quad_tol=1e-10):
    """Z(x): pair integral of [gamma(d_f)/x <= 1] + (1 + U(x0)) K(gamma(d_f)/x)."""
    if U.delta2 is None:
        raise CapabilityError(f"{U.name} carries no Delta2 constants")
    if not x > 0:
        raise InvalidParameterError("x must be positive")
    weight = 1.0 + U(U.delta2.x0)
    K = U.delta2.K

    def phi(d):
        ratio = z.gamma(d) / x
        return (ratio <= 1.0).astype(float) + weight * K(ratio)

    return pair_integral(phi, dm, g, quad_tol, HYP_PAIR_Z)


def z1_of_r(r, dm, z, U, g, quad_tol=1e-10):
    """Upper bound mu(S)^2 + (1 + U(x0)) int int K(gamma(d_f)/r) for Z(r)."""
    if U.delta2 is None:
        raise CapabilityError(f"{U.name} carries no Delta2 constants")
    weight = 1.0 + U(U.delta2.x0)
    K = U.delta2.K
    rest = pair_integral(lambda d: K(z.gamma(d) / r), dm, g, quad_tol, HYP_PAIR_Z)
    return g.total_measure ** 2 + weight * rest


def eta_tail_class_e(x, r, dm, z, U, g, quad_tol=1e-10):
    """Z(r) B / U(x / (D r)) using the class E constants of U."""
    ce = U.class_e
    if ce is None or ce.z0 != 0:
        raise CapabilityError(f"{U.name} needs class E constants with z0 = 0")
    if not x > 0 or not r > 0:
        raise InvalidParameterError("x and r must be positive")
    return z_of_x(r, dm, z, U, g, quad_tol) * ce.B / U(x / (ce.D * r))


def delta_q_quad(q_exp, dm, z, g, quad_tol=1e-8):
    """int int gamma(d_f(u, v))^q d(mu x mu)."""
    if not q_exp > 1:
        raise InvalidParameterError("q must exceed 1")
    return pair_integral(lambda d: z.gamma(d) ** q_exp, dm, g, quad_tol, HYP_PAIR_Q)


# ---------------------------------------------------------------- tail bounds

class MixedBound(NamedTuple):
    value: float
    raw: float
    clamped: float
    alpha_star: float
    p_star: float


class LqBound(NamedTuple):
    value: float
    clamped: float
    p_star: float
    d_pq: float
    constant: float


class MomentEstimate(NamedTuple):
    value: float
    stderr: float


def _inv_level(U, y):
    try:
        level = U(y)
    except DomainOverflowError:
        return 0.0
    return np.inf if level == 0 else 1.0 / level


def mixed_tail_bound(x, mean_dev_norm, dm, sm, z, U, g, q):
    """Mixed bound 1/U(a x / m) + Z((1 - a) x / C_p), minimized over (a, p).

    ``a`` splits x between the mean term and the chaining term. A coarse
    grid over (a, p) is followed by coordinate-wise golden refinement of the
    raw (unclamped) sum. ``value`` is the smallest sum of the two clamped
    terms seen during the search; ``raw`` is the smallest unclamped sum,
    attained at (``alpha_star``, ``p_star``).
    """
    if not x > 0 or not mean_dev_norm > 0:
        raise InvalidParameterError("x and mean_dev_norm must be positive")
    tol = q.quad_tol
    cp_cache = {}

    def cp(p):
        if p not in cp_cache:
            cp_cache[p] = c_p(p, g, sm, z, U, tol)
        return cp_cache[p]

    for p, val in zip(q.p_grid, np.atleast_1d(c_p(q.p_grid, g, sm, z, U, tol))):
        cp_cache[float(p)] = float(val)

    best = {"raw": np.inf, "clamped": np.inf, "a": None, "p": None}

    def evaluate(a, p):
        first = _inv_level(U, a * x / mean_dev_norm)
        second = z_of_x((1.0 - a) * x / cp(p), dm, z, U, g, tol)
        raw = first + second
        clamped = min(1.0, first) + min(1.0, second)
        best["clamped"] = min(best["clamped"], clamped)
        if raw < best["raw"]:
            best.update(raw=raw, a=a, p=p)
        return raw

    for p in q.p_grid:
        for a in q.split_grid:
            evaluate(float(a), float(p))
    for _ in range(q.sweeps):
        p_fixed = best["p"]
        golden_minimize_scalar(lambda a: evaluate(a, p_fixed), *q.split_range, q.refine_steps)
        a_fixed = best["a"]
        golden_minimize_scalar(lambda p: evaluate(a_fixed, p), *q.p_range, q.refine_steps)
    return MixedBound(best["clamped"], best["raw"], min(1.0, best["raw"]), best["a"], best["p"])


def optimize_p(d_pq_fn, p_grid, p_range, steps=30, grid_values=None):
    """Smallest D_{p,q} over a p grid followed by golden refinement; ties go to smaller p.

    ``grid_values`` may carry D already evaluated on ``p_grid``.
    """
    if grid_values is None:
        values = np.array([d_pq_fn(float(p)) for p in p_grid])
    else:
        values = np.asarray(grid_values, dtype=float)
    i = int(np.argmin(values))
    best_p, best_d = float(p_grid[i]), float(values[i])
    lo = float(p_grid[max(i - 1, 0)]) if i > 0 else p_range[0]
    hi = float(p_grid[min(i + 1, len(p_grid) - 1)]) if i < len(p_grid) - 1 else p_range[1]
    if steps > 0 and hi > lo:
        p, d = golden_minimize_scalar(lambda p: d_pq_fn(float(p)), lo, hi, steps)
        if d < best_d:
            best_p, best_d = float(p), float(d)
    return best_p, best_d


def lq_constant(q_exp, gamma_q, delta_q, d_pq):
    """(Gamma_q^(1/(q+1)) + (D^q Delta_q)^(1/(q+1)))^(q+1); the bound is this times x^(-q)."""
    e = 1.0 / (q_exp + 1.0)
    return (gamma_q ** e + (d_pq ** q_exp * delta_q) ** e) ** (q_exp + 1.0)


def lq_bound(x, q_exp, gamma_q, delta_q, d_pq_fn, p_grid, p_range=(0.05, 0.95), steps=30):
    """x^(-q) (Gamma_q^(1/(q+1)) + (D_{p,q}^q Delta_q)^(1/(q+1)))^(q+1) minimized over p.

    The bracket is increasing in D_{p,q}, so the minimizing p is the one
    minimizing ``d_pq_fn``.
    """
    if not x > 0 or not q_exp > 1:
        raise InvalidParameterError("lq_bound needs x > 0 and q > 1")
    if not (gamma_q >= 0 and delta_q >= 0 and np.isfinite(gamma_q) and np.isfinite(delta_q)):
        raise InvalidParameterError("gamma_q and delta_q must be finite and nonnegative")
    p_star, d = optimize_p(d_pq_fn, np.asarray(p_grid, dtype=float), p_range, steps)
    const = lq_constant(q_exp, gamma_q, delta_q, d)
    value = const * x ** -q_exp
    return LqBound(value, min(1.0, value), p_star, d, const)


def gamma_q_mc(q_exp, f, g, path_sampler, n_paths, seed):
    """Monte Carlo mean of |mu(S)^(-1) int (X - f) dmu|^q with its standard error.

    ``path_sampler(n_paths, seed)`` returns an (n_paths, len(g.points)) array.
    """
    if not q_exp > 1:
        raise InvalidParameterError("q must exceed 1")
    if n_paths < 1:
        raise InvalidParameterError("n_paths must be at least 1")
    fv = np.broadcast_to(np.asarray(f(g.points) if callable(f) else f, dtype=float), g.points.shape)
    paths = np.asarray(path_sampler(n_paths, seed), dtype=float)
    avg = (paths - fv) @ g.weights / g.total_measure
    vals = np.abs(avg) ** q_exp
    se = float(vals.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else float("nan")
    return MomentEstimate(float(vals.mean()), se)
