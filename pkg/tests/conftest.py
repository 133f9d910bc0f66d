"""Shared fixtures and independent reference oracles for the test suite.

The oracles here deliberately avoid the library's own code paths: the l1
projection is recovered by bisection on the dual threshold, the prox of a
max-affine function by enumerating dual active sets, and the prox of the
coordinate-wise absolute deviation in closed form.  Each returns values
certified to machine-level accuracy so library outputs can be checked
against them.
"""

import numpy as np
import pytest


def philox(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def exact_l1_projection(x, radius):
    """Euclidean projection onto the l1 ball by bisecting the shrinkage
    threshold; independent of any sorting-based routine."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if a.sum() <= radius:
        return x.copy()
    lo, hi = 0.0, float(a.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.maximum(a - mid, 0.0).sum() > radius:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    return np.sign(x) * np.maximum(a - theta, 0.0)


def exact_max_affine_prox(slopes, intercepts, x, lam):
    """Exact prox point and envelope value for f(u) = max_j <w_j,u> + b_j.

    Solves the dual simplex-constrained quadratic by enumerating KKT
    systems over all supports (fine for up to ~12 pieces) and certifies
    the result with the primal-dual gap.
    """
    slopes = np.asarray(slopes, dtype=float)
    intercepts = np.asarray(intercepts, dtype=float)
    x = np.asarray(x, dtype=float)
    m = slopes.shape[0]
    c = slopes @ x + intercepts
    gram = slopes @ slopes.T
    best = None
    for mask in range(1, 2 ** m):
        idx = [j for j in range(m) if (mask >> j) & 1]
        k = len(idx)
        system = np.zeros((k + 1, k + 1))
        system[:k, :k] = lam * gram[np.ix_(idx, idx)]
        system[:k, k] = 1.0
        system[k, :k] = 1.0
        rhs = np.concatenate([c[idx], [1.0]])
        try:
            sol = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            continue
        pi, nu = sol[:k], sol[k]
        if np.any(pi < -1e-10):
            continue
        wbar = pi @ slopes[idx]
        if np.any(c - lam * (slopes @ wbar) > nu + 1e-9):
            continue
        dual = float(pi @ c[idx] - 0.5 * lam * (wbar @ wbar))
        if best is None or dual > best[0]:
            best = (dual, x - lam * wbar)
    assert best is not None, "dual enumeration found no KKT point"
    dual, u = best
    primal = float((slopes @ u + intercepts).max()
                   + float((u - x) @ (u - x)) / (2.0 * lam))
    assert primal - dual <= 1e-9 * max(1.0, abs(primal)), "duality gap certificate failed"
    return u, primal


def exact_abs_prox(anchor, x, lam):
    """Closed-form prox point and envelope value for sum_i |x_i - a_i|:
    coordinate-wise soft threshold and the matching Huber value."""
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x - anchor
    point = anchor + np.sign(diff) * np.maximum(np.abs(diff) - lam, 0.0)
    inside = np.abs(diff) <= lam
    huber = np.where(inside, diff ** 2 / (2.0 * lam), np.abs(diff) - lam / 2.0)
    return point, float(huber.sum())


@pytest.fixture
def rng():
    return philox(0)
