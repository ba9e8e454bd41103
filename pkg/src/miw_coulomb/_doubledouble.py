"""Double-double arithmetic on pairs of floats.

A value is a tuple ``(hi, lo)`` with ``|lo| <= ulp(hi) / 2``; the represented
number is ``hi + lo`` evaluated exactly. Algorithms follow Dekker (1971) and
the QD library of Hida, Li and Bailey.
"""

from __future__ import annotations

import math

DD = tuple[float, float]

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a: float, b: float) -> DD:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a: float, b: float) -> DD:
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


def _split(a: float) -> DD:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> DD:
    """Exact product ``a * b`` as an unevaluated sum of two floats."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def add(a: DD, b: DD) -> DD:
    s, e = two_sum(a[0], b[0])
    t, f = two_sum(a[1], b[1])
    e += t
    s, e = quick_two_sum(s, e)
    e += f
    return quick_two_sum(s, e)


def neg(a: DD) -> DD:
    return -a[0], -a[1]


def sub(a: DD, b: DD) -> DD:
    return add(a, neg(b))


def mul(a: DD, b: DD) -> DD:
    p, e = two_prod(a[0], b[0])
    e += a[0] * b[1] + a[1] * b[0]
    return quick_two_sum(p, e)


def div(a: DD, b: DD) -> DD:
    q1 = a[0] / b[0]
    r = sub(a, mul((q1, 0.0), b))
    q2 = r[0] / b[0]
    r = sub(r, mul((q2, 0.0), b))
    q3 = r[0] / b[0]
    q1, q2 = quick_two_sum(q1, q2)
    return add((q1, q2), (q3, 0.0))


def sqrt(a: DD) -> DD:
    """Square root by one Newton correction of the float estimate."""
    if a[0] <= 0.0:
        if a[0] == 0.0:
            return 0.0, 0.0
        raise ValueError("square root of a negative double-double")
    x = math.sqrt(a[0])
    r = sub(a, two_prod(x, x))
    return quick_two_sum(x, r[0] / (2.0 * x))


def from_float(x: float) -> DD:
    return float(x), 0.0


def to_float(a: DD) -> float:
    return a[0] + a[1]
