"""Generalized Ornstein-Uhlenbeck process with covariance exp(-tau |t - s|):
moduli, ball measures, closed forms and the L_2 tail bound on [0, T]."""

from dataclasses import dataclass
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from . import bound_engine as be
from .errors import AdmissibilityError, DivergenceError, InvalidParameterError, SingularEndpointError
from .numerics import golden_minimize_scalar, integrate_singular_left
from .orlicz_norms import MeasureGrid

log = logging.getLogger(__name__)

HYP_DELTA2 = ("the double integral of (2(tau|u-v|)^beta1 + delta((2 tau |u-v|)^(beta1/2))^2)^(1-alpha) "
              "over [0, T]^2 must be finite")
ALPHA_MARGIN = 0.01


@dataclass(frozen=True)
class OUModel:
    """Parameters of the process on [0, T] and of its Hoelder-type moduli.

    ``beta1`` drives the pair integral, ``beta2`` the ball measures. They
    must satisfy 2/beta2 < 1/beta1 + 1 so that the zeta exponent has a
    nonempty admissible interval; ``alpha_zeta`` (optional) must lie inside.
    """
    tau: float
    T: float
    beta1: float
    beta2: float
    alpha_zeta: Optional[float] = None

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InvalidParameterError("tau must be positive")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidParameterError("T must be positive")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0 < b <= 1:
                raise InvalidParameterError(f"{name} must lie in (0, 1]")
        lo, hi = 2.0 / self.beta2, 1.0 / self.beta1 + 1.0
        if not lo < hi:
            raise AdmissibilityError(
                f"exponents violate 2/beta2 < 1/beta1 + 1: 2/{self.beta2:g} = {lo:.6g} "
                f">= {hi:.6g} = 1/{self.beta1:g} + 1, so no admissible zeta exponent exists")
        if self.alpha_zeta is not None and not lo < self.alpha_zeta < hi:
            raise AdmissibilityError(
                f"alpha_zeta = {self.alpha_zeta:g} lies outside ({lo:.6g}, {hi:.6g})")

    @property
    def tau_prime(self):
        return self.tau * 2.0 ** (3.0 / self.beta2)

    @property
    def alpha_interval(self):
        return 2.0 / self.beta2, 1.0 / self.beta1 + 1.0

    def alpha(self, alpha=None):
        a = self.alpha_zeta if alpha is None else alpha
        if a is None:
            raise InvalidParameterError("no zeta exponent given")
        lo, hi = self.alpha_interval
        if not lo < a < hi:
            raise AdmissibilityError(f"alpha_zeta = {a:g} lies outside ({lo:.6g}, {hi:.6g})")
        return a

    def grid(self, n=33):
        return MeasureGrid.trapezoid(self.T, n)


def covariance(m, t, s):
    return np.exp(-m.tau * np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float)))


def increment_norm(m, t, s):
    """L_2 norm of X(t) - X(s): sqrt(2 - 2 exp(-tau |t - s|))."""
    lag = np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float))
    return np.sqrt(-2.0 * np.expm1(-m.tau * lag))


def sigma(m, h, beta):
    """sqrt(2) (tau h)^(beta/2)."""
    return math.sqrt(2.0) * (m.tau * np.asarray(h, dtype=float)) ** (0.5 * beta)


def sigma_inv(m, h, beta):
    """h^(2/beta) / (2^(1/beta) tau)."""
    return np.asarray(h, dtype=float) ** (2.0 / beta) / (2.0 ** (1.0 / beta) * m.tau)


def sigma_modulus(m, beta):
    return be.SigmaModulus(lambda h: sigma(m, h, beta), lambda y: sigma_inv(m, y, beta),
                           name=f"ou_sigma(beta={beta:g})")


def deviation_model(m):
    """Increment norms for f = 0."""
    return be.DeviationModel.stationary(lambda h: np.sqrt(-2.0 * np.expm1(-m.tau * h)))


def _ball_radius(m, u, alpha):
    return np.asarray(u, dtype=float) ** (2.0 / (alpha * m.beta2)) / m.tau_prime


def nu_t_closed(m, t, u, alpha=None):
    """Lebesgue measure of the ball of radius u^(2/(alpha beta2)) / tau' around t in [0, T]."""
    a = m.alpha(alpha)
    r = _ball_radius(m, u, a)
    near, far = min(t, m.T - t), max(t, m.T - t)
    out = np.where(r >= far, m.T, np.where(r <= near, 2.0 * r, near + r))
    return float(out) if np.ndim(out) == 0 else out


def nu_t_halved(m, t, u, alpha=None):
    """Three-branch variant with halved inner measure (diagnostic only).

    It differs from ``nu_t_closed`` in the inner branch (r / 2 instead of 2 r)
    and the middle branch (far + r instead of near + r).
    """
    a = m.alpha(alpha)
    r = _ball_radius(m, u, a)
    near, far = min(t, m.T - t), max(t, m.T - t)
    out = np.where(r >= far, m.T, np.where(r <= near, 0.5 * r, far + r))
    return float(out) if np.ndim(out) == 0 else out


def log_nu_discrepancy(m, ts, us, alpha=None):
    """Largest gap between the halved and geometric ball measures on samples."""
    gap = max(float(np.max(np.abs(nu_t_halved(m, t, us, alpha) - nu_t_closed(m, t, us, alpha))))
              for t in ts)
    log.info("ball-measure variant differs from the geometric value by up to %.6g", gap)
    return gap


def gamma2_closed(m, f_integral=0.0):
    """Second moment of the time average of X - f on [0, T]."""
    x = m.tau * m.T
    if x < 0.1:
        # 2 sum_k (-x)^k / (k + 2)!; the closed form cancels badly for small x
        core, term, k = 0.0, 1.0, 0
        while abs(term) > 1e-18:
            term = (-x) ** k / math.factorial(k + 2)
            core += 2.0 * term
            k += 1
    else:
        core = 2.0 * (x + math.expm1(-x)) / (x * x)
    return core + (f_integral / m.T) ** 2


@dataclass(frozen=True)
class PowerModulus:
    """delta(y) = c y^kappa controlling the drift increments."""
    c: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.c < 0 or not self.kappa > 0:
            raise InvalidParameterError("power modulus needs c >= 0 and kappa > 0")

    def __call__(self, y):
        return self.c * np.asarray(y, dtype=float) ** self.kappa

    def check(self, m, f, pairs, atol=1e-12):
        """|f(u) - f(v)| <= delta(d(u, v)) <= d(u, v) on sampled pairs."""
        u, v = np.asarray(pairs, dtype=float).T
        d = increment_norm(m, u, v)
        dd = self(d)
        drift = np.abs(f(u) - f(v))
        return bool(np.all(drift <= dd + atol) and np.all(dd <= d + atol))


def _pair_integral_on_lag(T, integrand_of_lag, quad_tol):
    return float(integrate_singular_left(lambda h: 2.0 * (T - h) * integrand_of_lag(h), T,
                                         quad_tol, HYP_DELTA2))


def delta2_integral(tau, T, beta1, alpha, delta_mod=None, quad_tol=1e-8):
    """int int (2(tau|u-v|)^beta1 + delta((2 tau |u-v|)^(beta1/2))^2)^(1-alpha) over [0, T]^2.

    Defined for any positive exponents, admissible or not; raises
    ``DivergenceError`` when the singularity on the diagonal is not integrable.
    """
    if not (tau > 0 and T > 0 and beta1 > 0 and alpha > 0):
        raise InvalidParameterError("tau, T, beta1 and alpha must be positive")
    delta_mod = delta_mod or PowerModulus()

    def integrand(h):
        base = 2.0 * (tau * h) ** beta1 + delta_mod((2.0 * tau * h) ** (0.5 * beta1)) ** 2
        with np.errstate(divide="ignore"):
            return base ** (1.0 - alpha)

    return _pair_integral_on_lag(T, integrand, quad_tol)


def delta2_quad(m, delta_mod=None, quad_tol=1e-8, alpha=None):
    """The pair integral above for model ``m`` (alpha defaults to m.alpha_zeta)."""
    a = m.alpha_zeta if alpha is None else alpha
    if a is None:
        raise InvalidParameterError("no zeta exponent given")
    return delta2_integral(m.tau, m.T, m.beta1, a, delta_mod, quad_tol)


def delta2_quad_increments(m, delta_mod=None, quad_tol=1e-8, alpha=None):
    """Same pair integral with delta applied to the exact increment norm d(u, v)."""
    a = m.alpha_zeta if alpha is None else alpha
    if a is None or not a > 0:
        raise InvalidParameterError("the zeta exponent must be a positive number")
    delta_mod = delta_mod or PowerModulus()
    b1 = m.beta1

    def integrand(h):
        d = np.sqrt(-2.0 * np.expm1(-m.tau * h))
        base = 2.0 * (m.tau * h) ** b1 + delta_mod(d) ** 2
        with np.errstate(divide="ignore"):
            return base ** (1.0 - a)

    return _pair_integral_on_lag(m.T, integrand, quad_tol)


def d_p2_closed(m, p, t, alpha=None):
    """Closed-form chaining constant at a single interior t (q = 2)."""
    a = m.alpha(alpha)
    if not 0 < p < 1:
        raise InvalidParameterError("p must lie in (0, 1)")
    if not 0 <= t <= m.T:
        raise InvalidParameterError("t must lie in [0, T]")
    near, far = min(t, m.T - t), max(t, m.T - t)
    if near == 0:
        raise SingularEndpointError("the closed form is singular at t = 0 and t = T")
    tp = m.tau_prime
    e = a * m.beta2 / 2.0
    first = 2.0 * tp * (tp * near) ** (e - 1.0) / (1.0 - 2.0 / a)
    second = (p * 2.0 ** (1.5 * a) * (m.tau * far) ** e - (tp * near) ** e) / m.T
    return (first + second) / (p * (1.0 - p))


def d_p2_quad(m, p, alpha=None, t_points=33, quad_tol=1e-8):
    """Numerical D_{p,2}: sup over t of the chaining integral of 1/nu_t."""
    a = m.alpha(alpha)
    return be.d_pq_quad(p, 2.0, m.grid(t_points), sigma_modulus(m, m.beta2), be.ZetaPower(a), quad_tol)


class OUBound(NamedTuple):
    constant: float
    alpha_star: float
    p_star: float
    gamma2: float
    delta2: float
    d_p2: float

    def at(self, x):
        """Raw bound constant / x^2."""
        return self.constant * np.asarray(x, dtype=float) ** -2.0


def optimize_constant(m, p=None, f_integral=0.0, delta_mod=None, quad_tol=1e-8, t_points=33,
                      p_grid=None, p_steps=12, alpha_steps=24, alpha=None):
    """Minimize (Gamma_2^(1/3) + (D_{p,2}^2 Delta_2)^(1/3))^3 over alpha (and p unless given).

    alpha ranges over the admissible interval shrunk by 1% of its width at
    each end. For each alpha the best p comes from ``p_grid`` plus golden
    refinement; golden section then searches alpha. A given ``alpha``
    skips that search.
    """
    gamma2 = gamma2_closed(m, f_integral)
    lo, hi = m.alpha_interval
    width = hi - lo
    lo, hi = lo + ALPHA_MARGIN * width, hi - ALPHA_MARGIN * width
    g = m.grid(t_points)
    sm = sigma_modulus(m, m.beta2)
    if p_grid is None:
        p_grid = np.linspace(0.05, 0.95, 19)
    cache = {}

    def inner(alpha):
        if alpha in cache:
            return cache[alpha]
        z = be.ZetaPower(alpha)
        try:
            delta2 = delta2_quad(m, delta_mod, quad_tol, alpha)
            if p is None:
                grid_vals = np.atleast_1d(be.d_pq_quad(p_grid, 2.0, g, sm, z, quad_tol))
                p_star, d = be.optimize_p(
                    lambda pp: be.d_pq_quad(pp, 2.0, g, sm, z, quad_tol),
                    p_grid, (float(p_grid[0]), float(p_grid[-1])), p_steps, grid_vals)
            else:
                p_star, d = float(p), be.d_pq_quad(float(p), 2.0, g, sm, z, quad_tol)
        except DivergenceError:
            cache[alpha] = (math.inf, None, math.inf, math.inf)
            return cache[alpha]
        cache[alpha] = (be.lq_constant(2.0, gamma2, delta2, d), p_star, delta2, d)
        return cache[alpha]

    if alpha is not None:
        alpha_star = m.alpha(alpha)
        const = inner(alpha_star)[0]
    else:
        alpha_star, const = golden_minimize_scalar(lambda a: inner(a)[0], lo, hi, alpha_steps)
    if not math.isfinite(const):
        raise DivergenceError("every admissible zeta exponent gave a divergent integral",
                              be.HYP_CHAIN_Q)
    _, p_star, delta2, d = inner(alpha_star)
    return OUBound(const, alpha_star, p_star, gamma2, delta2, d)


def ou_tail_bound(m, x, p=None, f_integral=0.0, delta_mod=None, quad_tol=1e-8, **search):
    """Raw L_2 tail bound at ``x`` with the optimized constant."""
    if not np.all(np.asarray(x) > 0):
        raise InvalidParameterError("x must be positive")
    res = optimize_constant(m, p, f_integral, delta_mod, quad_tol, **search)
    return res.at(x), res
