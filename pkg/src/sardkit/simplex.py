"""Nelder-Mead simplex minimisation with restarts.

Used to polish nu(d_x f), which is not differentiable where singular values
cross.  Every evaluated point is handed to an optional ``visit`` callback so
callers can keep all points below a threshold, not just the final minimiser.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_evals: int
    n_restarts: int


def nelder_mead(func: Callable[[np.ndarray], float], x0, step,
                max_iter: int = 200, xtol: float = 1e-15, ftol: float = 0.0,
                visit: Callable[[np.ndarray, float], None] | None = None) -> SimplexResult:
    """One Nelder-Mead run from ``x0`` with an axis-aligned initial simplex.

    ``step`` is a scalar or per-coordinate array.  Stops after ``max_iter``
    iterations or when the simplex collapses below ``xtol`` (absolute) and
    the value spread below ``ftol``.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    step = np.broadcast_to(np.asarray(step, dtype=float), (dim,))
    n_evals = 0

    def f(x):
        nonlocal n_evals
        n_evals += 1
        val = float(func(x))
        if visit is not None:
            visit(x, val)
        return val

    pts = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += step[i]
        pts.append(x)
    sim = np.array(pts)
    vals = np.array([f(x) for x in sim])

    for _ in range(max_iter):
        order = np.argsort(vals, kind="stable")
        sim, vals = sim[order], vals[order]
        size = np.max(np.abs(sim[1:] - sim[0]))
        if size <= xtol and (vals[-1] - vals[0]) <= ftol:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + REFLECT * (centroid - sim[-1])
        fr = f(xr)
        if vals[0] <= fr < vals[-2]:
            sim[-1], vals[-1] = xr, fr
            continue
        if fr < vals[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                sim[-1], vals[-1] = xe, fe
            else:
                sim[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + CONTRACT * (sim[-1] - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                sim[-1], vals[-1] = xc, fc
                continue
        for j in range(1, dim + 1):
            sim[j] = sim[0] + SHRINK * (sim[j] - sim[0])
            vals[j] = f(sim[j])

    best = int(np.argmin(vals))
    return SimplexResult(sim[best].copy(), float(vals[best]), n_evals, 0)


def minimize_restarts(func, x0, step, max_iter: int = 200, max_restarts: int = 20,
                      visit=None, target: float = -np.inf) -> SimplexResult:
    """Repeat :func:`nelder_mead` from the incumbent until it stops improving.

    Each restart rebuilds the simplex around the best point with a step a
    few times the size of the collapsed simplex, which escapes the usual
    premature-collapse failure mode.
    """
    x = np.asarray(x0, dtype=float)
    step = np.broadcast_to(np.asarray(step, dtype=float), x.shape).copy()
    best = nelder_mead(func, x, step, max_iter=max_iter, visit=visit)
    evals = best.n_evals
    restarts = 0
    while restarts < max_restarts and best.fun > target:
        step = np.maximum(np.abs(best.x - x), np.abs(step) * 1e-3)
        x = best.x
        nxt = nelder_mead(func, x, step, max_iter=max_iter, visit=visit)
        evals += nxt.n_evals
        restarts += 1
        if not nxt.fun < best.fun:
            break
        best = nxt
    return SimplexResult(best.x, best.fun, evals, restarts)
