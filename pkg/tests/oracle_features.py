"""Independent naive-loop oracle for the 24 window statistics.

Implements each statistic directly from its textbook definition with
explicit Python loops and exactly-rounded sums (math.fsum), deliberately
sharing no code with runstyle.features. Used to cross-check the vectorised
implementation.
"""

import math


def oracle_axis(values, fs=500.0):
    xs = [float(v) for v in values]
    n = len(xs)

    mean = math.fsum(xs) / n

    sq, d2, d3, d4 = [], [], [], []
    for x in xs:
        d = x - mean
        sq.append(x * x)
        d2.append(d * d)
        d3.append(d * d * d)
        d4.append(d * d * d * d)
    m2 = math.fsum(d2) / n
    std = math.sqrt(m2)
    rms = math.sqrt(math.fsum(sq) / n)

    if m2 == 0.0:
        skew = 0.0
        kurt = 0.0
    else:
        skew = (math.fsum(d3) / n) / std ** 3
        kurt = (math.fsum(d4) / n) / std ** 4 - 3.0

    lo = hi = xs[0]
    arg_lo = arg_hi = 0
    for i, x in enumerate(xs):
        if x < lo:
            lo, arg_lo = x, i
        if x > hi:
            hi, arg_hi = x, i
    p2p = abs(arg_hi - arg_lo) / fs

    return [mean, std, lo, hi, rms, skew, kurt, p2p]


def oracle_window(window, fs=500.0):
    """24 statistics of an (n, 3) window, axis-major."""
    out = []
    for a in range(3):
        out.extend(oracle_axis([row[a] for row in window], fs))
    return out
