"""Fibonacci numbers and Zeckendorf digit sets.

Indices follow F_0 = 0, F_1 = 1 and digits live at positions j >= 2, so an
integer n < G_k = F_{k+2} uses digit positions 2 .. k+1.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import InvalidDigitsError


class FibTable:
    """Append-only table of exact Fibonacci numbers.

    Extensions are serialised by a lock; reads of already computed entries
    never block.
    """

    def __init__(self, capacity: int = 2):
        self._values = [0, 1]
        self._lock = threading.Lock()
        self.ensure(capacity)

    @property
    def capacity(self) -> int:
        return len(self._values) - 1

    def ensure(self, j: int) -> None:
        if j <= self.capacity:
            return
        with self._lock:
            vals = self._values
            while len(vals) <= j:
                vals.append(vals[-1] + vals[-2])

    def __getitem__(self, j: int) -> int:
        if j < 0:
            raise IndexError(f"Fibonacci index must be >= 0, got {j}")
        self.ensure(j)
        return self._values[j]

    def index_at_most(self, n: int) -> int:
        """Largest j >= 2 with F_j <= n (n >= 1)."""
        while self._values[-1] <= n:
            self.ensure(self.capacity + 16)
        # values[1] == values[2] == 1; bisect over j >= 2 keeps the answer >= 2
        return bisect.bisect_right(self._values, n, lo=2) - 1


_TABLE = FibTable(96)


def fib(j: int) -> int:
    """F_j as an exact integer."""
    if j < 0:
        raise ValueError(f"fib requires j >= 0, got {j}")
    return _TABLE[j]


def g(k: int) -> int:
    """G_k = F_{k+2}, the number of integers with k Zeckendorf layers."""
    if k < 0:
        raise ValueError(f"g requires k >= 0, got {k}")
    return _TABLE[k + 2]


@dataclass(frozen=True)
class ZeckDigits:
    """Positions j >= 2 of the 1-digits, stored ascending."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(sorted(int(j) for j in self.indices))
        object.__setattr__(self, "indices", idx)
        if idx and idx[0] < 2:
            raise InvalidDigitsError(f"digit index {idx[0]} < 2")
        for a, b in zip(idx, idx[1:]):
            if b - a < 2:
                raise InvalidDigitsError(f"indices {a} and {b} are not separated (adjacent or repeated)")

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, j):
        return j in self.indices


def zeck_encode(n: int) -> ZeckDigits:
    """Greedy Zeckendorf expansion of n >= 0."""
    if n < 0:
        raise ValueError(f"zeck_encode requires n >= 0, got {n}")
    out = []
    while n > 0:
        j = _TABLE.index_at_most(n)
        out.append(j)
        n -= _TABLE[j]
    return _trusted(tuple(reversed(out)))


def _trusted(indices: tuple[int, ...]) -> ZeckDigits:
    # greedy output is valid by construction; skip re-validation
    d = object.__new__(ZeckDigits)
    object.__setattr__(d, "indices", indices)
    return d


def zeck_decode(digits: ZeckDigits | Iterable[int]) -> int:
    if not isinstance(digits, ZeckDigits):
        digits = ZeckDigits(tuple(digits))
    return sum(_TABLE[j] for j in digits.indices)


@lru_cache(maxsize=64)
def _digit_sets(top: int) -> tuple[tuple[int, ...], ...]:
    # all valid sets with indices in [2, top], in increasing order of value
    if top < 2:
        return ((),)
    lower = _digit_sets(top - 1)
    with_top = tuple(s + (top,) for s in _digit_sets(top - 2))
    return lower + with_top


def enumerate_range(k: int) -> Iterator[ZeckDigits]:
    """Yield the digit sets of 0, 1, ..., G_k - 1 in order."""
    if k < 0:
        raise ValueError(f"enumerate_range requires k >= 0, got {k}")
    if k <= 24:
        for s in _digit_sets(k + 1):
            yield _trusted(s)
    else:
        for n in range(g(k)):
            yield zeck_encode(n)
