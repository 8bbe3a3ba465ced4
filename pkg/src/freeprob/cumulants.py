"""Moments <-> free cumulants, free additive convolution on moment
sequences, convolution powers and compression, and mixed moments of words
in free variables.

Three independent moment-to-cumulant routes are provided:

``"a"``
    Coefficient matching in the functional equation
    M(w) = 1 + sum_k C_k (w M(w))^k, with M the moment generating series.
``"b"``
    Peel off the top block: C_n = m_n minus the sum over all other
    non-crossing partitions of products of lower cumulants.
``"moebius"``
    Direct inversion, C_n = sum over NC(n) of mu(pi, 1_n) times the product
    of block moments.

All arithmetic is exact when the inputs are rationals.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Mapping, NamedTuple

from .measures import MomentSeq, hankel_psd
from .ncpart import enumerate_nc, moebius_to_top
from .series import EXACT, TruncatedSeries, infer_kind, ser_mul

MOEBIUS_MAX = 12
NC_ROUTE_MAX = 12
WORD_MAX = 12


@dataclass(frozen=True)
class CumulantSeq:
    """Free cumulants C_1..C_K."""

    C: tuple

    def __post_init__(self):
        object.__setattr__(self, "C", tuple(self.C))
        if len(self.C) < 1:
            raise ValueError("a cumulant sequence needs K >= 1")

    @property
    def K(self) -> int:
        return len(self.C)

    def __getitem__(self, n):
        """Cumulant of order ``n`` (1-based)."""
        return self.C[n - 1]

    def __add__(self, other):
        if not isinstance(other, CumulantSeq):
            return NotImplemented
        if other.K != self.K:
            raise ValueError(f"order mismatch: {self.K} vs {other.K}")
        return CumulantSeq(tuple(a + b for a, b in zip(self.C, other.C)))

    def scale(self, t):
        return CumulantSeq(tuple(t * c for c in self.C))

    def truncate(self, K):
        return CumulantSeq(self.C[:K])


def _finish(values, inputs):
    # complex arithmetic is only an engine detail for real float input
    if infer_kind(inputs) == EXACT or any(isinstance(v, complex) for v in inputs):
        return tuple(values)
    return tuple(v.real if isinstance(v, complex) else v for v in values)


# -- route A ---------------------------------------------------------------

def _m2c_series(m: MomentSeq) -> tuple:
    K = m.K
    full = m.with_zero()
    kind = infer_kind(full)
    M = TruncatedSeries(full, kind)
    U = ser_mul(TruncatedSeries.variable(K, kind), M)
    powers = [TruncatedSeries.one(K, kind)]
    for _ in range(K):
        powers.append(ser_mul(powers[-1], U))
    C = []
    for n in range(1, K + 1):
        # [w^n] U^n = 1, lower powers already have known coefficients
        C.append(M[n] - sum((C[k - 1] * powers[k][n] for k in range(1, n)), 0 * M[n]))
    return _finish(C, m.m)


def _c2m_series(c: CumulantSeq) -> tuple:
    # m_n = sum_k C_k [w^(n-k)] M(w)^k, filled in one coefficient at a time;
    # pw[k][j] holds [w^j] M^k for the coefficients known so far
    K = c.K
    C = c.C
    zero = 0 * C[0]
    m = [zero + 1]
    pw = [[zero + 1]] + [[zero + 1] for _ in range(K)]
    for n in range(1, K + 1):
        m.append(sum((C[k - 1] * pw[k][n - k] for k in range(1, n + 1)), zero))
        for k in range(1, K + 1):
            row = pw[k]
            prev = pw[k - 1]
            row.append(sum((m[i] * prev[n - i] for i in range(n + 1) if n - i < len(prev)), zero))
    return _finish(m[1:], c.C)


# -- route B and Moebius -----------------------------------------------------

@lru_cache(maxsize=None)
def _nc_type_counts(n: int) -> tuple:
    counts = Counter(tuple(sorted(p.block_sizes())) for p in enumerate_nc(n))
    return tuple(sorted(counts.items()))


@lru_cache(maxsize=None)
def _moebius_type_weights(n: int) -> tuple:
    weights = Counter()
    for p in enumerate_nc(n):
        weights[tuple(sorted(p.block_sizes()))] += moebius_to_top(p)
    return tuple(sorted((k, v) for k, v in weights.items() if v))


def _prod(values, sizes, one):
    out = one
    for s in sizes:
        out = out * values[s - 1]
    return out


def _m2c_nc(m: MomentSeq) -> tuple:
    if m.K > NC_ROUTE_MAX:
        raise ValueError(f"route b enumerates NC(n); K <= {NC_ROUTE_MAX}")
    C = []
    for n in range(1, m.K + 1):
        one = m[n] ** 0
        lower = 0 * m[n]
        for sizes, count in _nc_type_counts(n):
            if sizes == (n,):
                continue
            lower += count * _prod(C, sizes, one)
        C.append(m[n] - lower)
    return tuple(C)


def m2c_moebius(m: MomentSeq) -> CumulantSeq:
    """C_n = sum over pi in NC(n) of mu(pi, 1_n) * prod_V m_|V|."""
    if m.K > MOEBIUS_MAX:
        raise ValueError(f"Moebius route enumerates NC(n); K <= {MOEBIUS_MAX}")
    C = []
    for n in range(1, m.K + 1):
        one = m[n] ** 0
        total = 0 * m[n]
        for sizes, weight in _moebius_type_weights(n):
            total += weight * _prod(m.m, sizes, one)
        C.append(total)
    return CumulantSeq(tuple(C))


def m2c(m: MomentSeq, route: str = "a") -> CumulantSeq:
    """Free cumulants of a moment sequence.

    Parameters
    ----------
    m : MomentSeq
    route : {"a", "b", "moebius"}
        Series recursion (default), top-block subtraction over NC(n), or
        Moebius inversion.  All three agree exactly on rational input.
    """
    if route == "a":
        return CumulantSeq(_m2c_series(m))
    if route == "b":
        return CumulantSeq(_m2c_nc(m))
    if route == "moebius":
        return m2c_moebius(m)
    raise ValueError(f"unknown route {route!r}")


def c2m(c: CumulantSeq) -> MomentSeq:
    """m_n = sum over NC(n) of products of block cumulants."""
    return MomentSeq(_c2m_series(c))


def free_add_convolve(a: MomentSeq, b: MomentSeq) -> MomentSeq:
    if a.K != b.K:
        raise ValueError(f"order mismatch: {a.K} vs {b.K}")
    return c2m(m2c(a) + m2c(b))


def _is_integer(t):
    return isinstance(t, int) or (isinstance(t, Rational) and t.denominator == 1) or (
        isinstance(t, float) and t.is_integer()
    )


def free_power(c: CumulantSeq, t) -> CumulantSeq:
    """Cumulants of the t-th free convolution power: t * C_n.

    Integer t >= 0 or real t >= 1; fractional t < 1 belongs to
    :func:`compress`, where feasibility is reported instead.
    """
    if _is_integer(t):
        if t < 0:
            raise ValueError("integer convolution power must be >= 0")
    elif t < 1:
        raise ValueError(f"real power t={t} < 1 is not always a measure; use compress()")
    if isinstance(t, float) and t.is_integer():
        t = int(t)
    return c.scale(t)


class CompressionResult(NamedTuple):
    cumulants: CumulantSeq
    moments: MomentSeq
    feasible: bool
    min_eigenvalue: float


def compress(c: CumulantSeq, t) -> CompressionResult:
    """Scale cumulants by t > 0 and report whether a measure can match them."""
    if t <= 0:
        raise ValueError("compression parameter must be positive")
    scaled = c.scale(t)
    moments = c2m(scaled)
    check = hankel_psd(moments)
    return CompressionResult(scaled, moments, check.psd, check.min_eigenvalue)


# -- words in free variables --------------------------------------------------

@dataclass(frozen=True)
class FreeWord:
    letters: tuple

    def __post_init__(self):
        letters = tuple(self.letters)
        if not letters:
            raise ValueError("a word needs at least one letter")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def parse(cls, word) -> FreeWord:
        if isinstance(word, FreeWord):
            return word
        return cls(tuple(word))

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "".join(map(str, self.letters))


class FreeFamilySpec(dict):
    """Label -> marginal free cumulants of mutually free variables."""

    def __init__(self, mapping: Mapping | None = None, **kw):
        super().__init__()
        for k, v in dict(mapping or {}, **kw).items():
            self[k] = v if isinstance(v, CumulantSeq) else CumulantSeq(tuple(v))

    @classmethod
    def from_moments(cls, mapping: Mapping):
        return cls({k: m2c(v) for k, v in mapping.items()})


def mixed_moment(fam: Mapping, w) -> object:
    """phi(X_{w_1} ... X_{w_n}) for free variables with given cumulants.

    Sums over non-crossing partitions whose blocks only join equal labels;
    every block with mixed labels has vanishing cumulant.  The sum is
    organized as a memoized recursion over contiguous intervals: fixing the
    block of the first letter splits the rest into independent intervals.
    """
    word = FreeWord.parse(w)
    letters = word.letters
    n = len(letters)
    if n > WORD_MAX:
        raise ValueError(f"word length {n} exceeds {WORD_MAX}")
    for lab in set(letters):
        if lab not in fam:
            raise KeyError(f"unknown label {lab!r}")
        if fam[lab].K < letters.count(lab):
            raise ValueError(f"cumulants of {lab!r} too short for this word")
    sample = next(iter(fam[letters[0]].C))
    one = sample ** 0 if isinstance(sample, (int, Fraction)) else 1.0

    @lru_cache(maxsize=None)
    def interval(i, j):
        if i >= j:
            return one
        lab = letters[i]
        cands = [k for k in range(i + 1, j) if letters[k] == lab]
        total = 0 * one
        for mask in range(1 << len(cands)):
            block = [i] + [cands[b] for b in range(len(cands)) if mask >> b & 1]
            term = fam[lab][len(block)]
            if term == 0:
                continue
            for lo, hi in zip(block, block[1:] + [j]):
                term = term * interval(lo + 1, hi)
                if term == 0:
                    break
            total += term
        return total

    return interval(0, n)


def cumulants_to_doc(c: CumulantSeq) -> dict:
    from .measures import _num_out

    return {"type": "cumulants", "C": [_num_out(v) for v in c.C]}


def cumulants_from_doc(doc) -> CumulantSeq:
    from .measures import _num_in

    if doc.get("type") != "cumulants":
        raise ValueError("not a cumulant document")
    return CumulantSeq(tuple(_num_in(v) for v in doc["C"]))
