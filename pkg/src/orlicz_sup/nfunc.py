"""Orlicz N-functions: evaluation, generalized inverse, Young-Fenchel conjugate,
and a catalog of standard examples with their Delta2 / class E metadata."""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

from .errors import DomainOverflowError, InvalidParameterError
from .numerics import bisect_increasing, golden_section

EXP_ARG_CAP = 700.0
CONJ_WIDTH_TOL = 1e-12
_FD_STEP = 1e-6


@dataclass(frozen=True)
class Delta2:
    """U(z x) <= K(z) U(x) for z >= 1 and x >= x0."""
    x0: float
    K: Callable


@dataclass(frozen=True)
class ClassE:
    """U(x) U(y) <= B U(D x y) for x, y >= z0."""
    z0: float
    B: float
    D: float


@dataclass(frozen=True)
class NFunction:
    """An even convex Orlicz N-function.

    ``evaluator`` receives nonnegative arrays and must be vectorized.
    Arguments beyond ``eval_domain_cap`` raise ``DomainOverflowError``
    instead of producing infinities.
    """
    name: str
    evaluator: Callable
    inverse_hint: Optional[Callable] = None
    conjugate_hint: Optional[Callable] = None
    delta2: Optional[Delta2] = None
    class_e: Optional[ClassE] = None
    eval_domain_cap: float = math.inf
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        if np.any(ax > self.eval_domain_cap):
            raise DomainOverflowError(
                f"{self.name}: argument {float(np.max(ax)):.6g} exceeds the "
                f"evaluation cap {self.eval_domain_cap:.6g}")
        out = self.evaluator(ax)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"NFunction({self.name}({args}))"


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


def _above_one(name, value):
    if not (value > 1 and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must exceed 1, got {value!r}")


def power(c=1.0, p=2.0):
    """U(x) = c |x|^p with c > 0, p > 1."""
    c, p = float(c), float(p)
    _positive("c", c)
    _above_one("p", p)
    return NFunction(
        name="power",
        evaluator=lambda x: c * x ** p,
        inverse_hint=lambda y: (np.asarray(y, dtype=float) / c) ** (1.0 / p),
        conjugate_hint=lambda x: (p - 1.0) * c * (np.abs(x) / (c * p)) ** (p / (p - 1.0)),
        delta2=Delta2(x0=0.0, K=lambda z: np.asarray(z, dtype=float) ** p),
        class_e=ClassE(z0=0.0, B=c, D=1.0),
        eval_domain_cap=(1e300 / c) ** (1.0 / p),
        params={"c": c, "p": p},
    )


def power_over_p(p=2.0):
    """U(x) = |x|^p / p with p > 1; its conjugate is |x|^q / q, 1/p + 1/q = 1."""
    p = float(p)
    _above_one("p", p)
    q = p / (p - 1.0)
    return NFunction(
        name="power_over_p",
        evaluator=lambda x: x ** p / p,
        inverse_hint=lambda y: (p * np.asarray(y, dtype=float)) ** (1.0 / p),
        conjugate_hint=lambda x: np.abs(x) ** q / q,
        delta2=Delta2(x0=0.0, K=lambda z: np.asarray(z, dtype=float) ** p),
        class_e=ClassE(z0=0.0, B=1.0 / p, D=1.0),
        eval_domain_cap=(1e300 * p) ** (1.0 / p),
        params={"p": p},
    )


def exp_linear():
    """U(x) = exp|x| - |x| - 1. Grows faster than any power, so not Delta2."""
    return NFunction(
        name="exp_linear",
        evaluator=lambda x: np.expm1(x) - x,
        conjugate_hint=lambda x: (1.0 + np.abs(x)) * np.log1p(np.abs(x)) - np.abs(x),
        eval_domain_cap=EXP_ARG_CAP,
    )


def exp_power(a=1.0, b=2.0):
    """U(x) = exp(a |x|^b) - 1 with a > 0, b > 1."""
    a, b = float(a), float(b)
    _positive("a", a)
    _above_one("b", b)
    return NFunction(
        name="exp_power",
        evaluator=lambda x: np.expm1(a * x ** b),
        inverse_hint=lambda y: (np.log1p(np.asarray(y, dtype=float)) / a) ** (1.0 / b),
        eval_domain_cap=(EXP_ARG_CAP / a) ** (1.0 / b),
        params={"a": a, "b": b},
    )


def piecewise_exp(alpha=0.5):
    """Quadratic (e alpha / 2)^(2/alpha) x^2 up to (2/alpha)^(1/alpha), then exp|x|^alpha.

    Requires 0 < alpha < 1. Both pieces and their slopes match at the joint.
    Delta2 / class E membership is not asserted, so both stay empty.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    joint = (2.0 / alpha) ** (1.0 / alpha)
    quad = (math.e * alpha / 2.0) ** (2.0 / alpha)
    y_joint = math.exp(2.0 / alpha)

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        inner = np.minimum(x, joint)
        return np.where(x <= joint, quad * inner * inner, np.exp(np.maximum(x, joint) ** alpha))

    def inverse(y):
        y = np.asarray(y, dtype=float)
        low = np.sqrt(np.minimum(y, y_joint) / quad)
        high = np.log(np.maximum(y, y_joint)) ** (1.0 / alpha)
        return np.where(y <= y_joint, low, high)

    return NFunction(
        name="piecewise_exp",
        evaluator=evaluator,
        inverse_hint=inverse,
        eval_domain_cap=EXP_ARG_CAP ** (1.0 / alpha),
        params={"alpha": alpha},
    )


CATALOG = {
    "power": power,
    "power_over_p": power_over_p,
    "exp_linear": exp_linear,
    "exp_power": exp_power,
    "piecewise_exp": piecewise_exp,
}


def make_catalog_function(name, **params):
    try:
        factory = CATALOG[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown N-function {name!r}; choose from {sorted(CATALOG)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise InvalidParameterError(f"{name}: {exc}") from None


def _scalar_out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def generalized_inverse(U, y):
    """Smallest x >= 0 with U(x) = y (elementwise for arrays)."""
    ys = np.asarray(y, dtype=float)
    if np.any(ys < 0) or np.any(np.isnan(ys)):
        raise InvalidParameterError("generalized inverse needs y >= 0")
    if U.inverse_hint is not None:
        return _scalar_out(np.asarray(U.inverse_hint(ys), dtype=float), y)
    cap = U.eval_domain_cap
    if math.isfinite(cap) and np.any(ys > U(cap)):
        raise DomainOverflowError(f"{U.name}: y exceeds U(cap) = {U(cap):.6g}")
    if np.any(np.isinf(ys)):
        raise DomainOverflowError(f"{U.name}: cannot invert y = inf")
    hi = np.ones_like(ys)
    while True:
        short = U(np.minimum(hi, cap)) < ys
        if not np.any(short):
            break
        hi = np.where(short, np.minimum(2.0 * hi, cap), hi)
    x = np.where(ys == 0, 0.0, bisect_increasing(U, ys, 0.0, hi))
    return _scalar_out(x, y)


def _slope(U, y):
    h = _FD_STEP * np.maximum(y, 1.0)
    return (U(y + h) - U(y - h)) / (2.0 * h)


def conjugate(U, x, use_hint=False):
    """Young-Fenchel transform sup_{y > 0} (|x| y - U(y)), elementwise.

    The maximizer is bracketed by doubling y until the finite-difference
    slope |x| - U'(y) turns negative, then located by golden section.
    """
    if use_hint and U.conjugate_hint is not None:
        return _scalar_out(np.asarray(U.conjugate_hint(np.asarray(x, dtype=float)), dtype=float), x)
    ax = np.abs(np.array(x, dtype=float, ndmin=1))
    cap = U.eval_domain_cap
    hi = np.ones_like(ax)
    while True:
        h = _FD_STEP * np.maximum(hi, 1.0)
        if np.any(hi + h > cap):
            raise DomainOverflowError(
                f"{U.name}: conjugate maximizer not bracketed below the cap {cap:.6g}")
        rising = ax - _slope(U, hi) >= 0.0
        if not np.any(rising):
            break
        hi = np.where(rising, 2.0 * hi, hi)
    tol = CONJ_WIDTH_TOL * max(1.0, float(np.max(hi)))
    _, best = golden_section(lambda y: ax * y - U(y), 0.0, hi, tol, maximize=True)
    out = np.maximum(best, 0.0)
    return _scalar_out(out.reshape(np.shape(x)), x)


def conjugate_function(U, numeric=True):
    """Wrap U* as an NFunction (numerically evaluated unless ``numeric=False``)."""
    if numeric or U.conjugate_hint is None:
        evaluator = lambda y: conjugate(U, y)
    else:
        evaluator = lambda y: U.conjugate_hint(y)
    return NFunction(name=f"conj[{U.name}]", evaluator=evaluator,
                     conjugate_hint=lambda y: U(y), params=dict(U.params))


def biconjugate_residual(U, grid):
    """max |U**(x) - U(x)| over ``grid`` with both transforms computed numerically."""
    grid = np.asarray(grid, dtype=float)
    twice = conjugate(conjugate_function(U, numeric=True), grid)
    return float(np.max(np.abs(twice - U(grid))))


def check_invariants(U, xs=None, rtol=1e-12):
    """Sampled N-function checks. Returns a dict of property name -> bool."""
    if xs is None:
        top = min(10.0, 0.5 * U.eval_domain_cap)
        xs = np.linspace(top / 200.0, top, 200)
    xs = np.sort(np.abs(np.asarray(xs, dtype=float)))
    xs = xs[xs > 0]
    u = U(xs)
    res = {
        "zero_at_origin": U(0.0) == 0.0,
        "even": bool(np.all(U(-xs) == u)),
        "strictly_increasing": bool(np.all(np.diff(u) > 0)),
    }
    pts = np.concatenate([-xs[::-1], xs])
    xx, yy = np.meshgrid(pts, pts)
    mid = U(0.5 * (xx + yy))
    res["midpoint_convex"] = bool(np.all(mid <= 0.5 * (U(xx) + U(yy)) * (1 + rtol) + 1e-300))
    ratio = u / xs
    res["ratio_increasing"] = bool(np.all(np.diff(ratio) >= -rtol * ratio[1:]))
    if U.delta2 is not None:
        zs = np.linspace(1.0, 5.0, 17)
        base = xs[xs >= U.delta2.x0]
        zz, bb = np.meshgrid(zs, base)
        arg = zz * bb
        ok = arg <= U.eval_domain_cap
        res["delta2"] = bool(np.all(U(arg[ok]) <= U.delta2.K(zz[ok]) * U(bb[ok]) * (1 + rtol)))
    if U.class_e is not None:
        e = U.class_e
        base = xs[xs >= e.z0]
        aa, bb = np.meshgrid(base, base)
        arg = e.D * aa * bb
        ok = arg <= U.eval_domain_cap
        res["class_e"] = bool(np.all(U(aa[ok]) * U(bb[ok]) <= e.B * U(arg[ok]) * (1 + rtol)))
    return res
