"""Vector norms over {1, 2, inf} and linear maximization over norm balls."""

import enum

import numpy as np


class NormOrder(enum.Enum):
    ONE = "L1"
    TWO = "L2"
    INF = "Linf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "l1": cls.ONE, "1": cls.ONE, "one": cls.ONE, "budget": cls.ONE,
            "l2": cls.TWO, "2": cls.TWO, "two": cls.TWO, "ellipsoidal": cls.TWO,
            "linf": cls.INF, "inf": cls.INF, "infinity": cls.INF, "box": cls.INF,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm order {value!r}") from None


_DUAL = {NormOrder.ONE: NormOrder.INF, NormOrder.TWO: NormOrder.TWO, NormOrder.INF: NormOrder.ONE}


def dual_order(order):
    return _DUAL[NormOrder.parse(order)]


TIE_REL = 1e-10


def norm(v, order):
    v = np.asarray(v, dtype=float).ravel()
    order = NormOrder.parse(order)
    if v.size == 0:
        return 0.0
    if order is NormOrder.ONE:
        return float(np.abs(v).sum())
    if order is NormOrder.TWO:
        return float(np.sqrt(v @ v))
    return float(np.abs(v).max())


def max_linear_over_ball(c, order, radius):
    """Maximize ``c @ x`` subject to ``norm(x, order) <= radius``.

    Returns ``(value, argmax)`` with ``value = radius * norm(c, dual_order(order))``.
    Where the maximizer is not unique the mass goes to the lowest index.
    """
    c = np.asarray(c, dtype=float).ravel()
    order = NormOrder.parse(order)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = np.zeros_like(c)
    if c.size == 0 or radius == 0 or not np.any(c):
        return 0.0, x
    if order is NormOrder.ONE:
        a = np.abs(c)
        # Entries equal to the maximum up to rounding count as ties.
        j = int(np.flatnonzero(a >= a.max() * (1 - TIE_REL))[0])
        x[j] = radius * np.sign(c[j])
    elif order is NormOrder.TWO:
        scaled = c / np.abs(c).max()   # guards against underflow in c @ c
        x = radius * scaled / np.sqrt(scaled @ scaled)
    else:
        x = radius * np.sign(c)
    return radius * norm(c, dual_order(order)), x
