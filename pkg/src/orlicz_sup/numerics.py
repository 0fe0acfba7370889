"""Scalar and vectorized numerical primitives: bisection, golden section,
adaptive Simpson quadrature and an integrator for a singular left endpoint.

All routines here work elementwise on numpy arrays so that a whole grid of
independent problems advances in lockstep.
"""

import math

import numpy as np

from .errors import DivergenceError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ROOT_RTOL = 1e-10
ROOT_MAXITER = 200


def bisect_increasing(fn, target, lo, hi, maxiter=ROOT_MAXITER):
    """Solve ``fn(x) = target`` for nondecreasing ``fn`` on brackets ``[lo, hi]``.

    Arrays broadcast; each element stops once its bracket can no longer be
    split in floating point. Returns the bracket midpoints.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        below = fn(mid) < target
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return 0.5 * (lo + hi)


def golden_section(obj, lo, hi, tol, maximize=False):
    """Lockstep golden-section search on ``[lo, hi]`` (arrays broadcast).

    ``obj`` maps an array of abscissae to an array of values of the same
    shape. The iteration count is fixed by the widest bracket, so every
    element ends with a bracket no wider than ``tol``. Returns
    ``(argopt, optvalue)``.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    sign = -1.0 if maximize else 1.0

    def f(x):
        return sign * np.asarray(obj(x), dtype=float)

    width = float(np.max(b - a)) if a.size else 0.0
    n = 0
    if width > tol:
        n = int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(n):
        left = fc <= fd
        # minimum lies in [a, d] when f(c) <= f(d), else in [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        keep_x = np.where(left, c, d)
        keep_f = np.where(left, fc, fd)
        new_x = np.where(left, b - INV_PHI * (b - a), a + INV_PHI * (b - a))
        new_f = f(new_x)
        c = np.where(left, new_x, keep_x)
        fc = np.where(left, new_f, keep_f)
        d = np.where(left, keep_x, new_x)
        fd = np.where(left, keep_f, new_f)
    x = 0.5 * (a + b)
    fx = f(x)
    # the best probed interior point can beat the midpoint on flat objectives
    x = np.where(fc < fx, c, x)
    fx = np.minimum(fc, fx)
    x = np.where(fd < fx, d, x)
    fx = np.minimum(fd, fx)
    return x, sign * fx


def golden_minimize_scalar(obj, lo, hi, steps):
    """Scalar golden-section minimization with a fixed number of steps.

    Returns ``(x, f(x))`` for the best point probed, never the unevaluated
    midpoint.
    """
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = obj(c), obj(d)
    best = (c, fc) if fc <= fd else (d, fd)
    for _ in range(steps):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = obj(c)
            if fc < best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = obj(d)
            if fd < best[1]:
                best = (d, fd)
    return best


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise DivergenceError("integrand is not finite on the integration range")


def adaptive_simpson(fn, edges, rtol=1e-8, abstol=0.0, max_depth=48):
    """Integrate vectorized ``fn`` over each cell ``[edges[i], edges[i+1]]``.

    Breadth-first adaptive Simpson: every refinement level evaluates the new
    nodes of all unresolved subintervals in one call. A subinterval is
    accepted when ``|S2 - S1| <= 15 * tol_local``; the local tolerance starts
    at ``rtol`` times the coarse estimate of its cell and halves per split.
    Intervals reaching ``max_depth`` are accepted as is (their width is then
    below any resolvable scale). Returns per-cell integrals.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    ncell = a.size
    out = np.zeros(ncell)
    if ncell == 0:
        return out
    m = 0.5 * (a + b)
    fa, fm, fb = np.split(fn(np.concatenate([a, m, b])), 3)
    _check_finite(fa)
    _check_finite(fm)
    _check_finite(fb)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = np.maximum(rtol * np.abs(whole), abstol)
    owner = np.arange(ncell)
    depth = 0
    while owner.size:
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = np.split(fn(np.concatenate([lm, rm])), 2)
        _check_finite(flm)
        _check_finite(frm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        s2 = left + right
        err = s2 - whole
        done = (np.abs(err) <= 15.0 * tol) | (depth >= max_depth) | (m - a <= 0.0)
        np.add.at(out, owner[done], s2[done] + err[done] / 15.0)
        keep = ~done
        if not keep.any():
            break
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        flm, frm = flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        tol = 0.5 * tol[keep]
        owner = owner[keep]
        a, m, b = np.concatenate([a, m]), np.concatenate([lm[keep], rm[keep]]), np.concatenate([m, b])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
        whole = np.concatenate([left, right])
        tol = np.concatenate([tol, tol])
        owner = np.concatenate([owner, owner])
        depth += 1
    return out


def integrate(fn, lo, hi, rtol=1e-8, pieces=1):
    """Adaptive Simpson over ``[lo, hi]`` split into ``pieces`` equal cells."""
    if hi <= lo:
        return 0.0
    return float(np.sum(adaptive_simpson(fn, np.linspace(lo, hi, pieces + 1), rtol)))


def integrate_singular_left(fn, upper, tol=1e-8, hypothesis=None, batch=16,
                            max_segments=1000, diverge_run=8):
    """Integrate ``fn`` over ``(0, upper]`` when ``fn`` may blow up at 0.

    The range is cut geometrically into ``[upper 2^-(k+1), upper 2^-k]`` and
    each piece is integrated by adaptive Simpson. Stops when the newest piece
    is below ``tol`` times the partial sum, or when consecutive piece ratios
    settle at some rho < 1 so that the remaining geometric tail
    ``s rho / (1 - rho)`` is known to within ``tol``. Raises
    ``DivergenceError`` once the ratios stay >= 1 for ``diverge_run``
    consecutive pieces or the piece budget is exhausted.
    """
    if upper <= 0.0:
        return 0.0
    partial = 0.0
    prev = None
    prev_ratio = None
    run = 0
    zeros = 0
    k = 0
    while k < max_segments:
        ks = np.arange(k, min(k + batch, max_segments))
        hi = upper * np.exp2(-ks.astype(float))
        edges = np.concatenate([[upper * 2.0 ** -(ks[-1] + 1.0)], hi[::-1]])
        pieces = adaptive_simpson(fn, edges, rtol=tol * 0.1)[::-1]
        for s in pieces:
            partial += s
            if s == 0.0:
                zeros += 1
                if partial > 0.0 or zeros >= diverge_run:
                    return partial
                prev = s
                continue
            if s <= tol * partial:
                return partial
            if prev is not None and prev > 0.0:
                ratio = s / prev
                run = run + 1 if ratio >= 1.0 else 0
                if run >= diverge_run:
                    raise DivergenceError(
                        "integral diverges at the left endpoint "
                        f"(piece ratio {ratio:.6g} >= 1 over {run} halvings)",
                        hypothesis)
                if ratio < 1.0 and prev_ratio is not None and prev_ratio < 1.0:
                    tail = s * ratio / (1.0 - ratio)
                    tail_prev = s * prev_ratio / (1.0 - prev_ratio)
                    if abs(tail - tail_prev) <= tol * (partial + tail):
                        return partial + tail
                prev_ratio = ratio
            prev = s
        k = int(ks[-1]) + 1
    raise DivergenceError(
        f"no convergence at the left endpoint after {max_segments} halvings", hypothesis)
