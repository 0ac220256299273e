"""Independent reference implementations the tests compare against.

Deliberately written on different primitives than the package: the stats
oracle leans on the statistics module, the Fisher oracle on log-gamma
floats. Agreement between two unrelated routes is the point.
"""

import math
import statistics


def stats_oracle(xs):
    """(min, max, median, mean, var, std, skew, sem) of a float sequence."""
    n = len(xs)
    mean = statistics.fmean(xs)
    var = statistics.variance(xs, xbar=mean) if n >= 2 else 0.0
    std = math.sqrt(var)
    if n >= 3:
        m2 = statistics.fmean([(x - mean) ** 2 for x in xs])
        m3 = statistics.fmean([(x - mean) ** 3 for x in xs])
        skew = 0.0 if m2 == 0.0 else m3 / m2**1.5
    else:
        skew = 0.0
    return (
        min(xs),
        max(xs),
        statistics.median(xs),
        mean,
        var,
        std,
        skew,
        std / math.sqrt(n),
    )


def _log_choose(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_oracle(table):
    """Two-sided Fisher exact p by full enumeration in log space."""
    (a, b), (c, d) = table
    r1, r2 = a + b, c + d
    c1 = a + c
    n = r1 + r2
    if r1 == 0 or r2 == 0 or c1 == 0 or (b + d) == 0:
        return 1.0
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    denom = _log_choose(n, c1)
    log_probs = [_log_choose(r1, x) + _log_choose(r2, c1 - x) - denom for x in range(lo, hi + 1)]
    observed = log_probs[a - lo]
    total = 0.0
    for lp in log_probs:
        if lp <= observed + 1e-7:
            total += math.exp(lp)
    return min(total, 1.0)
