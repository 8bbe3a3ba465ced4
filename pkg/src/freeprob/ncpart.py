"""Non-crossing partitions of {1..n}: enumeration, refinement order,
Moebius function to the top element, Kreweras complement, Catalan numbers.

Partitions are stored in canonical form: blocks ascending internally and
ordered by their least element.  The text form ``{{1,4,5},{2},{3}}`` is
accepted (whitespace-insensitive) and emitted by ``str``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import comb

import numpy as np

CATALAN_MAX = 30
ENUMERATE_MAX = 14
# Moebius values up to this size come from the lattice recursion itself.
RECURSION_MAX = 9
# Sizes on which the Kreweras product must match the recursion before use.
FAST_PATH_CHECK_MAX = 7


@dataclass(frozen=True)
class Partition:
    """A set partition of ``{1..n}`` in canonical block form."""

    n: int
    blocks: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"ground set size must be positive, got {self.n}")
        seen = []
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            if list(block) != sorted(block):
                raise ValueError(f"block {block} is not ascending")
            seen.extend(block)
        if sorted(seen) != list(range(1, self.n + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{self.n}")
        if [b[0] for b in self.blocks] != sorted(b[0] for b in self.blocks):
            raise ValueError("blocks are not ordered by least element")

    @classmethod
    def from_blocks(cls, blocks, n=None):
        """Canonicalize an arbitrary iterable of blocks."""
        canon = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in blocks))
        if n is None:
            n = max((b[-1] for b in canon), default=0)
        return cls(n, canon)

    @classmethod
    def parse(cls, text: str) -> Partition:
        compact = re.sub(r"\s+", "", text)
        if not re.fullmatch(r"\{(\{\d+(,\d+)*\})(,\{\d+(,\d+)*\})*\}", compact):
            raise ValueError(f"malformed partition text: {text!r}")
        inner = re.findall(r"\{([\d,]+)\}", compact)
        return cls.from_blocks([[int(v) for v in part.split(",")] for part in inner])

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def one(cls, n: int) -> Partition:
        return cls(n, (tuple(range(1, n + 1)),))

    def __str__(self):
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"

    def __len__(self):
        return len(self.blocks)

    def block_sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    def labels(self) -> tuple:
        """Block index of each element 1..n (0-based positions)."""
        out = [0] * self.n
        for k, block in enumerate(self.blocks):
            for x in block:
                out[x - 1] = k
        return tuple(out)

    def relabel(self, shift: int) -> Partition:
        """Rotate the ground set by ``i -> i + shift (mod n)``."""
        return Partition.from_blocks(
            [[(x - 1 + shift) % self.n + 1 for x in b] for b in self.blocks], self.n
        )


def _trusted(n, blocks):
    # skips validation; only for blocks produced by the enumerator
    p = object.__new__(Partition)
    object.__setattr__(p, "n", n)
    object.__setattr__(p, "blocks", blocks)
    return p


def catalan(n: int) -> int:
    """(2n)! / (n! (n+1)!), exact for 0 <= n <= 30."""
    if n < 0 or n > CATALAN_MAX:
        raise OverflowError(f"catalan({n}) outside documented range 0..{CATALAN_MAX}")
    return comb(2 * n, n) // (n + 1)


def _crosses(b: tuple, c: tuple) -> bool:
    tagged = sorted([(x, 0) for x in b] + [(x, 1) for x in c])
    # a crossing is an alternating subsequence of length four
    state, runs = None, 0
    for _, tag in tagged:
        if tag != state:
            runs += 1
            state = tag
    return runs >= 4


def is_noncrossing(p: Partition) -> bool:
    blocks = p.blocks
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if _crosses(blocks[i], blocks[j]):
                return False
    return True


def _nc_blocks(elems: tuple):
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for k in range(len(rest) + 1):
        for chosen in combinations(range(len(rest)), k):
            block = (first,) + tuple(rest[i] for i in chosen)
            cuts = (-1,) + chosen + (len(rest),)
            gaps = [rest[cuts[i] + 1:cuts[i + 1]] for i in range(len(cuts) - 1)]
            for parts in product(*(list(_nc_blocks(g)) for g in gaps)):
                yield (block,) + tuple(b for part in parts for b in part)


@dataclass(frozen=True)
class NCIndex:
    """All non-crossing partitions of ``{1..n}`` in lexicographic block order."""

    n: int
    partitions: tuple

    def __len__(self):
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)

    def __getitem__(self, i):
        return self.partitions[i]

    def index(self, p: Partition) -> int:
        return self._lookup()[p.blocks]

    def _lookup(self):
        cache = self.__dict__.get("_rank")
        if cache is None:
            cache = {p.blocks: i for i, p in enumerate(self.partitions)}
            object.__setattr__(self, "_rank", cache)
        return cache


@lru_cache(maxsize=None)
def enumerate_nc(n: int) -> NCIndex:
    """Enumerate NC(n) by splitting off the block that contains 1."""
    if n < 1 or n > ENUMERATE_MAX:
        raise ValueError(f"enumerate_nc supports 1 <= n <= {ENUMERATE_MAX}, got {n}")
    raw = [tuple(sorted(blocks)) for blocks in _nc_blocks(tuple(range(1, n + 1)))]
    raw.sort()
    return NCIndex(n, tuple(_trusted(n, b) for b in raw))


def leq(p: Partition, q: Partition) -> bool:
    """Refinement order: every block of ``p`` lies inside a block of ``q``."""
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")
    lab = q.labels()
    return all(len({lab[x - 1] for x in b}) == 1 for b in p.blocks)


@lru_cache(maxsize=None)
def _moebius_table(n: int) -> np.ndarray:
    # mu(p, 1_n) for every p in enumerate_nc(n), via
    # sum_{p <= s} mu(s, 1_n) = [p == 1_n], processed coarse to fine.
    idx = enumerate_nc(n)
    labels = np.array([p.labels() for p in idx], dtype=np.int16)
    reps = [[b[0] - 1 for b in p.blocks for _ in b] for p in idx]
    mu = np.zeros(len(idx), dtype=np.int64)
    order = sorted(range(len(idx)), key=lambda i: len(idx[i].blocks))
    for i in order:
        p = idx[i]
        if len(p.blocks) == 1:
            mu[i] = 1
            continue
        elems = [x - 1 for b in p.blocks for x in b]
        rep = np.empty(n, dtype=np.intp)
        rep[elems] = reps[i]
        above = np.all(labels == labels[:, rep], axis=1)
        mu[i] = -int(mu[above].sum())
    return mu


def moebius_recursive(p: Partition) -> int:
    """mu(p, 1_n) from the defining lattice recursion (n <= RECURSION_MAX)."""
    if not is_noncrossing(p):
        raise ValueError(f"{p} is crossing")
    if p.n > RECURSION_MAX:
        raise ValueError(f"lattice recursion limited to n <= {RECURSION_MAX}")
    return int(_moebius_table(p.n)[enumerate_nc(p.n).index(p)])


def moebius_kreweras_product(p: Partition) -> int:
    """Product over blocks V of the Kreweras complement of (-1)^(|V|-1) c_(|V|-1)."""
    out = 1
    for size in kreweras(p).block_sizes():
        out *= (-1) ** (size - 1) * catalan(size - 1)
    return out


def moebius_printed_product(p: Partition) -> int:
    """Product over blocks V of p of (-1)^|V| c_(|V|-1).

    Kept for comparison only: it gives +1 on the singleton partition of
    {1,2}, where the Moebius value is -1.
    """
    out = 1
    for size in p.block_sizes():
        out *= (-1) ** size * catalan(size - 1)
    return out


@lru_cache(maxsize=None)
def kreweras_fast_path_verified(nmax: int = FAST_PATH_CHECK_MAX) -> bool:
    """Exhaustively compare the Kreweras product with the recursion for n <= nmax."""
    for n in range(1, nmax + 1):
        table = _moebius_table(n)
        for i, p in enumerate(enumerate_nc(n)):
            if moebius_kreweras_product(p) != table[i]:
                return False
    return True


def moebius_to_top(p: Partition) -> int:
    """Moebius function mu(p, 1_n) of the NC(n) lattice.

    Sizes up to ``RECURSION_MAX`` use the lattice recursion.  Larger sizes use
    the Kreweras product, and only once it has been checked against the
    recursion on every partition of size <= ``FAST_PATH_CHECK_MAX``.
    """
    if not is_noncrossing(p):
        raise ValueError(f"{p} is crossing")
    if p.n <= RECURSION_MAX:
        return moebius_recursive(p)
    if not kreweras_fast_path_verified():
        raise RuntimeError("Kreweras product disagrees with the lattice recursion")
    return moebius_kreweras_product(p)


def kreweras(p: Partition) -> Partition:
    """Kreweras complement, computed as the cycles of p^{-1} o gamma.

    Blocks of ``p`` are read as increasing cycles and gamma = (1 2 ... n).
    Applying the map twice rotates the labels: K(K(p)) == p.relabel(-1).
    """
    if not is_noncrossing(p):
        raise ValueError(f"{p} is crossing")
    n = p.n
    inv = [0] * (n + 1)
    for b in p.blocks:
        for k, x in enumerate(b):
            inv[b[(k + 1) % len(b)]] = x
    perm = [0] * (n + 1)
    for i in range(1, n + 1):
        perm[i] = inv[i % n + 1]
    seen = [False] * (n + 1)
    cycles = []
    for i in range(1, n + 1):
        if seen[i]:
            continue
        cyc, j = [], i
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = perm[j]
        cycles.append(cyc)
    return Partition.from_blocks(cycles, n)
