"""Independent oracles shared by the test modules.

These deliberately avoid the library's own code paths: bisection instead of
Halley, direct log-space summation instead of incomplete-gamma, exhaustive
enumeration instead of closed forms, damped fixed-point iteration instead of
Lambert W.
"""

import itertools
import math


def lambert_bisect(y, lo=-1.0, hi=700.0, tol=1e-14):
    """Solve w * exp(w) = y on the principal branch by bisection."""
    f = lambda w: w * math.exp(w) - y
    assert f(lo) <= 0 <= f(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)


def poisson_cdf_sum(n, mu):
    """Direct summation of Poisson pmf terms in log space."""
    if mu == 0:
        return 1.0
    terms = [math.exp(k * math.log(mu) - mu - math.lgamma(k + 1))
             for k in range(n + 1)]
    return math.fsum(terms)


def fixed_point_mean_load(c1, c2, tol=1e-12, max_iter=100000):
    """Iterate x <- c1 - c2*exp(-x) from 0 until converged."""
    x = 0.0
    for _ in range(max_iter):
        nxt = c1 - c2 * math.exp(-x)
        if abs(nxt - x) < tol:
            return nxt
        x = nxt
    raise RuntimeError("fixed point iteration did not converge")


def enumerate_assignments(n_active, pool_size):
    """All pool_size**n_active equally likely preamble assignments."""
    return itertools.product(range(pool_size), repeat=n_active)


def exact_occupancy_means(n_active, pool_size):
    """(E[singleton count], E[occupied count]) by exhaustive enumeration."""
    total = pool_size ** n_active
    sum_b1 = 0
    sum_b = 0
    for assign in enumerate_assignments(n_active, pool_size):
        counts = [0] * pool_size
        for a in assign:
            counts[a] += 1
        sum_b1 += sum(1 for c in counts if c == 1)
        sum_b += sum(1 for c in counts if c >= 1)
    return sum_b1 / total, sum_b / total
