"""Probability-simplex geometry and a one-dimensional golden-section search."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    x = np.maximum(v - theta, 0.0)
    # cumsum roundoff leaves the sum off by up to ~1e-13
    return x / math.fsum(x)


def tangent_projection(g: np.ndarray, x: np.ndarray, zero: float = 0.0) -> np.ndarray:
    """Project ``g`` onto the tangent cone of the simplex at ``x``.

    Coordinates with ``x_k <= zero`` may only increase.  The result is
    ``g - tau`` on free coordinates and ``max(g - tau, 0)`` on active ones,
    with ``tau`` chosen so the entries sum to zero.
    """
    g = np.asarray(g, dtype=float)
    active = np.asarray(x) <= zero
    free_sum = g[~active].sum()
    free_count = int((~active).sum())
    ga = np.sort(g[active])[::-1]
    tau = free_sum / free_count if free_count else ga[0]
    joined, total = 0, free_sum
    for j, val in enumerate(ga):
        if val <= tau:
            break
        joined = j + 1
        total += val
        tau = total / (free_count + joined)
    d = g - tau
    d[active] = np.maximum(d[active], 0.0)
    return d


def golden_section_max(f, a: float, b: float, tol: float = 1e-10):
    """Maximize a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x), evaluations, width)``; the endpoints are compared too,
    so maxima sitting on the boundary are found exactly.
    """
    lo, hi = min(a, b), max(a, b)
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    evals = 2
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
        evals += 1
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for edge in (a, b):
        fe = f(edge)
        evals += 1
        if fe > best_f:
            best_x, best_f = edge, fe
    return best_x, best_f, evals, hi - lo
