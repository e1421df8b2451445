"""Brute-force reference implementations shared by several test modules.

They follow the textbook definitions with plain loops and exact rational
arithmetic, and share no code with the library.
"""
import math
from fractions import Fraction


def sgn(v):
    return (v > 0) - (v < 0)


def brute_tau(T, G):
    m = len(T)
    s = sum(sgn(G[i] - G[j]) * sgn(T[i] - T[j]) for i in range(m) for j in range(i + 1, m))
    return Fraction(2 * s, m * (m - 1))


def brute_weighted_tau_one_side(x, y):
    """Weighted tau ranking by ``x`` (ties broken by ``y``, then position).

    Exact rational result for tie-free inputs.  With ties, pairs tied on a
    side drop out of that side's normalizer and the result is a float.
    """
    m = len(x)
    ranked = sorted(range(m), key=lambda i: (-x[i], -y[i], i))
    w = {i: Fraction(1, 1 + r) for r, i in enumerate(ranked)}
    num = total = tied_x = tied_y = Fraction(0)
    for i in range(m):
        for j in range(i + 1, m):
            pw = w[i] + w[j]
            num += pw * sgn(x[i] - x[j]) * sgn(y[i] - y[j])
            total += pw
            tied_x += pw if x[i] == x[j] else 0
            tied_y += pw if y[i] == y[j] else 0
    if tied_x == tied_y == 0:
        return num / total
    return float(num) / math.sqrt(float((total - tied_x) * (total - tied_y)))


def brute_weighted_tau(T, G):
    return (brute_weighted_tau_one_side(G, T) + brute_weighted_tau_one_side(T, G)) / 2
