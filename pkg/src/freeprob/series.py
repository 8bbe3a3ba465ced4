"""Truncated power series over exact rationals or complex floats.

A series of order K keeps c_0..c_K.  The two scalar kinds never mix
silently: combining an ``"exact"`` series with a ``"complex"`` one raises.
"""
from __future__ import annotations

import cmath
from fractions import Fraction
from numbers import Rational

EXACT = "exact"
COMPLEX = "complex"


def _coerce(value, kind):
    if kind == EXACT:
        if isinstance(value, (Fraction, int)) or isinstance(value, Rational):
            return Fraction(value)
        raise TypeError(f"exact series needs rational coefficients, got {value!r}")
    return complex(value)


def infer_kind(values) -> str:
    return EXACT if all(isinstance(v, Rational) for v in values) else COMPLEX


class TruncatedSeries:
    __slots__ = ("coeffs", "kind")

    def __init__(self, coeffs, kind=None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("a series needs at least the constant coefficient")
        if kind is None:
            kind = infer_kind(coeffs)
        if kind not in (EXACT, COMPLEX):
            raise ValueError(f"unknown scalar kind {kind!r}")
        self.coeffs = tuple(_coerce(c, kind) for c in coeffs)
        self.kind = kind

    @classmethod
    def zeros(cls, order, kind=EXACT):
        return cls([0] * (order + 1), kind)

    @classmethod
    def one(cls, order, kind=EXACT):
        return cls([1] + [0] * order, kind)

    @classmethod
    def variable(cls, order, kind=EXACT):
        if order < 1:
            raise ValueError("the variable z needs order >= 1")
        return cls([0, 1] + [0] * (order - 1), kind)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, i):
        return self.coeffs[i]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        return f"TruncatedSeries({list(self.coeffs)!r}, kind={self.kind!r})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.kind == other.kind and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.kind, self.coeffs))

    def _check(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"expected TruncatedSeries, got {type(other).__name__}")
        if other.kind != self.kind:
            raise TypeError(f"scalar kind mismatch: {self.kind} vs {other.kind}")
        if other.order != self.order:
            raise ValueError(f"order mismatch: {self.order} vs {other.order}")

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return TruncatedSeries(self.coeffs[: order + 1], self.kind)

    def to_complex(self):
        return TruncatedSeries(self.coeffs, COMPLEX)

    def scale(self, c):
        c = _coerce(c, self.kind)
        return TruncatedSeries([c * a for a in self.coeffs], self.kind)

    def __add__(self, other):
        self._check(other)
        return TruncatedSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.kind)

    def __sub__(self, other):
        self._check(other)
        return TruncatedSeries([a - b for a, b in zip(self.coeffs, other.coeffs)], self.kind)

    def __neg__(self):
        return TruncatedSeries([-a for a in self.coeffs], self.kind)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return ser_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __call__(self, x):
        """Evaluate the polynomial part at a scalar point (Horner)."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def ser_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    a._check(b)
    K = a.order
    out = [0] * (K + 1)
    for i, ai in enumerate(a.coeffs):
        if ai == 0:
            continue
        for j in range(K + 1 - i):
            out[i + j] += ai * b.coeffs[j]
    return TruncatedSeries(out, a.kind)


def ser_reciprocal(a: TruncatedSeries) -> TruncatedSeries:
    c = a.coeffs
    if c[0] == 0:
        raise ZeroDivisionError("series with zero constant term has no reciprocal")
    inv0 = 1 / c[0]
    out = [inv0]
    for n in range(1, a.order + 1):
        out.append(-inv0 * sum(c[k] * out[n - k] for k in range(1, n + 1)))
    return TruncatedSeries(out, a.kind)


def ser_compose(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """f(g(z)) truncated at the common order; g must vanish at 0."""
    f._check(g)
    if g.coeffs[0] != 0:
        raise ValueError("inner series must have zero constant term")
    acc = TruncatedSeries.zeros(f.order, f.kind)
    const = TruncatedSeries.one(f.order, f.kind)
    for c in reversed(f.coeffs):
        acc = ser_mul(acc, g) + const.scale(c)
    return acc


def ser_reversion(f: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse g with f(g(z)) = z + O(z^{K+1}).

    Coefficients are fixed one at a time: at step n the coefficient of z^n
    in f(g) equals f_1 g_n plus terms that only involve g_1..g_{n-1}.
    """
    c = f.coeffs
    K = f.order
    if K < 1:
        raise ValueError("reversion needs order >= 1")
    if c[0] != 0:
        raise ValueError("reversion needs zero constant term")
    if c[1] == 0:
        raise ValueError("reversion needs nonzero linear coefficient")
    g = [0] * (K + 1)
    g[1] = 1 / c[1]
    for n in range(2, K + 1):
        # coefficient of z^n in sum_{j>=2} f_j g^j, with g truncated at n-1
        total = _coerce(0, f.kind)
        power = list(g[: n + 1])
        for j in range(2, n + 1):
            nxt = [0] * (n + 1)
            for a in range(1, n + 1):
                if power[a] == 0:
                    continue
                for b in range(1, n + 1 - a):
                    nxt[a + b] += power[a] * g[b]
            power = nxt
            total += c[j] * power[n]
        g[n] = -total / c[1]
    return TruncatedSeries(g, f.kind)


def ser_exp_log(a: TruncatedSeries, direction: str) -> TruncatedSeries:
    """Formal exponential or logarithm, truncated at the order of ``a``."""
    c = a.coeffs
    K = a.order
    zero = _coerce(0, a.kind)
    if direction == "exp":
        if c[0] != 0:
            if a.kind == EXACT:
                raise ValueError("exp of an exact series needs zero constant term")
            head = cmath.exp(c[0])
        else:
            head = 1
        out = [_coerce(head, a.kind)]
        for n in range(1, K + 1):
            out.append(sum((k * c[k] * out[n - k] for k in range(1, n + 1)), zero) / n)
        return TruncatedSeries(out, a.kind)
    if direction == "log":
        if c[0] != 1:
            raise ValueError("log needs constant term 1")
        out = [_coerce(0, a.kind)]
        for n in range(1, K + 1):
            out.append(c[n] - sum((k * out[k] * c[n - k] for k in range(1, n)), zero) / n)
        return TruncatedSeries(out, a.kind)
    raise ValueError(f"direction must be 'exp' or 'log', got {direction!r}")
