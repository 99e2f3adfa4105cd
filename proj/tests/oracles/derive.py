"""Independent oracle for the frozen expected values in the unit tests.

Uses exact rational arithmetic where possible so the C++ results are checked
against numbers that were not produced by the library itself.
Run: python3 tests/oracles/derive.py
"""
from fractions import Fraction as F
from itertools import permutations
import math


def second(prices):
    s = sorted(prices, reverse=True)
    return s[1] if len(s) > 1 else 0


def exact_vickrey(vals, disc):
    perms = list(permutations(range(len(vals))))
    return sum(second([vals[p[j]] * disc[j] for j in range(len(vals))]) for p in perms) / len(perms)


def observe_select(prices, x):
    """Expected revenue of the sequential lottery then threshold rule."""
    if x == 0 or len(prices) <= x:
        return 0
    m = max(prices[:x])
    for p in prices[x:]:
        if p >= m:
            return F(x, x + 1) ** x * m
    return 0


def exact_observe_select(vals, x):
    perms = list(permutations(vals))
    return sum(observe_select(list(p), x) for p in perms) / len(perms)


def reserved(n, B, k):
    return math.ceil((4 + k) * math.log(n, B) + 3 - 1e-9)


def dp_uniform(d):
    n = len(d)
    x = [None] * n
    R = [F(0)] * (n + 1)
    for m in range(1, n + 1):
        j = n - m
        xh = F(1, 2) + R[m - 1] / (2 * d[j])
        if xh >= 1:
            xh = F(1)
            R[m] = R[m - 1]
        else:
            R[m] = (R[m - 1] + d[j]) ** 2 / (4 * d[j])
        x[j] = xh
    rho = [None] * n
    rho[n - 1] = x[n - 1]
    for j in range(n - 2, -1, -1):
        rho[j] = (x[j] * d[j] - x[j] * d[j + 1] + rho[j + 1] * d[j + 1]) / d[j]
    return x, R[1:], rho


def game(p, n, K):
    bids, mech, mass, prev_small, bid = [0] * n, F(0), F(0), False, F(1)
    for i in range(n):
        q = min(p, max(F(0), 1 - mass))
        mass += q
        bids[i] = bid
        mech += q * bid
        if q > F(2, n):
            prev_small = False
            bid *= K
        elif prev_small:
            break
        else:
            prev_small = True
    return second(bids) / mech


def main():
    print("D1(1000), T=2000, v=100:", 100 * (1 - F(1000, 2000)))
    print("exact vickrey {3,2,1} d=(1,1,1/2):", exact_vickrey([3, 2, 1], [1, 1, F(1, 2)]))
    print("observe-select [2,5,3,7] x=2:", observe_select([2, 5, 3, 7], 2))
    print("exact observe-select {2,5,3,7} x=2:", exact_observe_select([2, 5, 3, 7], 2))
    print("exact observe-select {1,4,6,9,10,12} x=3:", exact_observe_select([1, 4, 6, 9, 10, 12], 3))
    for args in [(1000, 2, 1), (2, 2, 0), (1000, 2, 0), (2000, 2, 1), (256, 2, 1)]:
        print("reserved", args, reserved(*args))
    w = sum(1 - F(j, 2000) for j in range(1, 2001) if 1 - F(j, 2000) > F(1, 2))
    print("class weight D1 c=1 lambda=1:", w, float(w))
    x = 1 / math.sqrt(6)
    print("M_F uniform d=[1,.5]: x=", x, "rev=", (1 - 2 * x * x) * x)
    for d in ([1], [1, 1], [1, F(1, 2)], [1, 1, 1]):
        xs, R, rho = dp_uniform([F(v) for v in d])
        print("dp", d, "x", xs, "R", R, "rho", rho, "floats", [float(v) for v in xs], [float(v) for v in R])
    # E[max(U1, U2/2)] for U ~ uniform[0,1]
    print("expected max price U[0,1] d=[1,.5]:", F(1, 2) - F(2, 24) + F(1, 8))
    # eq10 instance at n=6, k=5: v={K n^k - delta, K, delta x4}, d = 1 on slot 1, n^-k after
    n, k = 6, 5
    K, delta = F(n * n), F(1, n ** k)
    vals = [K * n ** k - delta, K] + [delta] * (n - 2)
    disc = [F(1)] + [F(1, n ** k)] * (n - 1)
    print("eq10 n=6 exact E[V]:", exact_vickrey(vals, disc), float(exact_vickrey(vals, disc)))
    # eq26 n=4 pair average of the max price with eps=1e-9 step curve levels
    print("game ratios n=100 K=1e6:", [float(game(F(p), 100, F(10 ** 6))) for p in (F(1, 100), F(2, 100), F(1, 4), F(1))])
    print("game n=4 p=1/4:", game(F(1, 4), 4, F(10 ** 6)))
    # Sequential-lottery delay gain: x=2 observation slot 2 delayed into decision (co-bidders zero)
    stay = F(2, 3) * F(1, 3)
    later = F(2, 3) ** 2
    print("M_O delay example x=2 v=1 others 0: stay", stay, "delay", later)


if __name__ == "__main__":
    main()
