"""Weight sequences f(F_j) and the additive function they define.

A weight sequence fixes f(F_j) for j >= 2; f(0) = 0 and f extends to all
n >= 0 through the Zeckendorf digits.  Positions 0 and 1 carry no weight
(they contribute nothing to the l2 sums either).

Built-in families:

* ``example``         f(F_j) = (-1)^j / (sqrt(j) log(j+1)), square summable but
                      not absolutely summable;
* ``zero-after``      the example weights for j < J, zero for j >= J;
* ``constant``        f(F_j) = c for 2 <= j <= J, zero beyond.

Explicit lists are read from text files with one ``j value`` record per line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigError, NonConvergenceError, WeightIndexError
from .numeration import zeck_encode

# summation horizon for formula tails before the analytic remainder takes over
TAIL_DIRECT_TERMS = 2_000_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class TailSum:
    """A tail sum together with a bound on its numerical error."""

    value: float
    error: float = 0.0
    cutoff: int | None = None

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class SplitTail:
    linear_part: float
    quadratic_part: float
    big_indices: tuple[int, ...]
    T: float
    m: int

    @property
    def total(self) -> float:
        return self.linear_part + self.quadratic_part


class WeightSequence:
    """Base class.  Subclasses implement ``_values`` for arrays of j >= 2."""

    name = "weights"
    #: last index carrying a nonzero weight, ``None`` when infinitely many may be nonzero
    support_end: int | None = None

    def _values(self, j: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def weight(self, j: int) -> float:
        if j < 2:
            raise WeightIndexError(f"weights are defined for j >= 2, got j={j}")
        return float(self._values(np.array([j], dtype=np.int64))[0])

    def weights(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.int64)
        if j.size and j.min() < 2:
            raise WeightIndexError(f"weights are defined for j >= 2, got j={int(j.min())}")
        return self._values(j).astype(float)

    def layer_weights(self, k: int) -> np.ndarray:
        """f(F_2), ..., f(F_{k+1}): the weights seen by n < G_k."""
        return self.weights(np.arange(2, k + 2))

    def eval_f(self, n: int) -> float:
        idx = zeck_encode(n).indices
        if not idx:
            return 0.0
        return float(self.weights(np.array(idx)).sum())

    # -- diagnostics ---------------------------------------------------

    def _chunked_sum(self, lo: int, hi: int, power: int) -> float:
        """sum_{lo <= j <= hi} |f(F_j)|^power, with pairwise float accumulation."""
        total = 0.0
        for a in range(lo, hi + 1, _CHUNK):
            b = min(hi, a + _CHUNK - 1)
            v = np.abs(self._values(np.arange(a, b + 1, dtype=np.int64)))
            total += float(np.sum(v**power))
        return total

    def l1_partial(self, m: int) -> float:
        return self._chunked_sum(2, m, 1) if m >= 2 else 0.0

    def l2_partial(self, m: int) -> float:
        return self._chunked_sum(2, m, 2) if m >= 2 else 0.0

    def tail_l2(self, m: int) -> TailSum:
        """sum_{j > m} f(F_j)^2."""
        if m < 1:
            raise ValueError(f"tail_l2 requires m >= 1, got {m}")
        if self.support_end is not None:
            hi = self.support_end
            return TailSum(self._chunked_sum(max(m + 1, 2), hi, 2) if hi > m else 0.0, 0.0, hi)
        return self._numeric_tail(m)

    def _numeric_tail(self, m: int, cauchy_tol: float = 1e-10) -> TailSum:
        # generic fallback: direct sum, with the last block as a Cauchy witness
        cutoff = m + TAIL_DIRECT_TERMS
        head = self._chunked_sum(m + 1, cutoff - TAIL_DIRECT_TERMS // 10, 2)
        last = self._chunked_sum(cutoff - TAIL_DIRECT_TERMS // 10 + 1, cutoff, 2)
        if last > cauchy_tol:
            raise NonConvergenceError(
                f"{self.name}: l2 tail beyond j={m} fails the Cauchy test at cutoff {cutoff} "
                f"(last block contributes {last:.3g})"
            )
        return TailSum(head + last, last, cutoff)

    def magnitude_cutoff(self, threshold: float) -> int:
        """An index J with |f(F_j)| <= threshold for every j > J."""
        if self.support_end is not None:
            return self.support_end
        raise NotImplementedError(f"{self.name} does not provide a magnitude cutoff")

    def split_tail(self, m: int, T: float) -> SplitTail:
        """Split the tail j > m at |f(F_j)| = 1/T: linear above, quadratic below."""
        if T <= 0:
            raise ValueError(f"T must be positive, got {T}")
        if m < 1:
            raise ValueError(f"split_tail requires m >= 1, got {m}")
        thr = 1.0 / T
        top = self.magnitude_cutoff(thr)
        big: list[int] = []
        big_l1 = big_l2 = 0.0
        if top > m:
            j = np.arange(m + 1, top + 1, dtype=np.int64)
            w = np.abs(self._values(j))
            mask = w > thr
            big = [int(x) for x in j[mask]]
            big_l1 = float(w[mask].sum())
            big_l2 = float((w[mask] ** 2).sum())
        tail = self.tail_l2(m).value
        small_l2 = max(tail - big_l2, 0.0)
        return SplitTail(T * big_l1, T * T * small_l2, tuple(big), T, m)

    def declares_eventual_vanishing(self) -> bool:
        return self.support_end is not None

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class ExplicitWeights(WeightSequence):
    """Finitely many nonzero weights given as a mapping j -> value."""

    values: dict = field(default_factory=dict)
    name: str = "explicit"

    def __post_init__(self):
        clean = {}
        for j, v in dict(self.values).items():
            j = int(j)
            if j < 2:
                raise WeightIndexError(f"weights are defined for j >= 2, got j={j}")
            if v != 0:
                clean[j] = float(v)
        object.__setattr__(self, "values", clean)

    @property
    def support_end(self) -> int:
        return max(self.values, default=1)

    def _values(self, j):
        out = np.zeros(j.shape, dtype=float)
        for idx, v in self.values.items():
            out[j == idx] = v
        return out

    def describe(self) -> str:
        body = ",".join(f"{j}:{v!r}" for j, v in sorted(self.values.items()))
        return f"explicit{{{body}}}"


class ExampleWeights(WeightSequence):
    """f(F_j) = (-1)^j / (sqrt(j) log(j+1))."""

    name = "example"
    support_end = None

    def _values(self, j):
        jf = j.astype(float)
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        return sign / (np.sqrt(jf) * np.log1p(jf))

    def tail_l2(self, m: int) -> TailSum:
        # direct sum to C, then sum_{j>C} 1/(j log^2(j+1)) lies in [1/log(C+2), 1/log C]
        if m < 1:
            raise ValueError(f"tail_l2 requires m >= 1, got {m}")
        cutoff = max(m, 1) + TAIL_DIRECT_TERMS
        head = self._chunked_sum(max(m + 1, 2), cutoff, 2)
        hi, lo = 1.0 / math.log(cutoff), 1.0 / math.log(cutoff + 2)
        return TailSum(head + 0.5 * (hi + lo), 0.5 * (hi - lo), cutoff)

    def magnitude_cutoff(self, threshold: float) -> int:
        # |f(F_j)| is decreasing in j
        if threshold <= 0:
            raise NonConvergenceError("threshold must be positive for a finite big-weight set")
        j = 2
        while 1.0 / (math.sqrt(j) * math.log(j + 1)) > threshold:
            j *= 2
        lo, hi = j // 2, j
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if 1.0 / (math.sqrt(mid) * math.log(mid + 1)) > threshold:
                lo = mid
            else:
                hi = mid
        return lo


class ZeroAfterWeights(WeightSequence):
    """Example weights for 2 <= j < J and zero for j >= J (atomic limit law)."""

    name = "zero-after"

    def __init__(self, J: int, base: WeightSequence | None = None):
        if J < 2:
            raise ConfigError(f"zero-after needs J >= 2, got {J}")
        self.J = int(J)
        self.base = base if base is not None else ExampleWeights()
        self.support_end = self.J - 1

    def _values(self, j):
        out = np.zeros(j.shape, dtype=float)
        mask = j < self.J
        if mask.any():
            out[mask] = self.base._values(j[mask])
        return out

    def describe(self):
        return f"zero-after(J={self.J})"


class ConstantWeights(WeightSequence):
    """f(F_j) = c for 2 <= j <= J, zero beyond."""

    name = "constant"

    def __init__(self, c: float, J: int):
        if J < 2:
            raise ConfigError(f"constant needs J >= 2, got {J}")
        self.c = float(c)
        self.J = int(J)
        self.support_end = self.J if self.c != 0 else 1

    def _values(self, j):
        return np.where(j <= self.J, self.c, 0.0)

    def describe(self):
        return f"constant(c={self.c!r},J={self.J})"


# -- module-level helpers ------------------------------------------------


def weight(seq: WeightSequence, j: int) -> float:
    return seq.weight(j)


def eval_f(seq: WeightSequence, n: int) -> float:
    return seq.eval_f(n)


def tail_l2(seq: WeightSequence, m: int) -> float:
    return seq.tail_l2(m).value


def split_tail(seq: WeightSequence, m: int, T: float) -> SplitTail:
    return seq.split_tail(m, T)


def zero_weights() -> ExplicitWeights:
    return ExplicitWeights({})


def read_weight_file(path: str | Path) -> ExplicitWeights:
    """Parse ``j value`` records; blank lines and ``#`` comments are ignored."""
    values: dict[int, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'j value', got {raw!r}")
        try:
            j, v = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
        if j < 2:
            raise ConfigError(f"{path}:{lineno}: index j={j} < 2")
        if j in values:
            raise ConfigError(f"{path}:{lineno}: duplicate index j={j}")
        values[j] = v
    return ExplicitWeights(values)


def write_weight_file(seq: ExplicitWeights, path: str | Path) -> None:
    lines = [f"{j} {v!r}" for j, v in sorted(seq.values.items())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _parse_params(params: str | dict | None) -> dict:
    if params is None:
        return {}
    if isinstance(params, dict):
        return dict(params)
    out = {}
    for item in params.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"family parameter {item!r} is not of the form key=value")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def make_family(name: str, params: str | dict | None = None) -> WeightSequence:
    """Build a built-in family from its name and ``key=value`` parameters."""
    p = _parse_params(params)
    try:
        if name == "example":
            seq = ExampleWeights()
        elif name in ("zero-after", "zero_after"):
            seq = ZeroAfterWeights(int(p.pop("J")))
        elif name == "constant":
            seq = ConstantWeights(float(p.pop("c")), int(p.pop("J")))
        elif name == "zero":
            seq = zero_weights()
        else:
            seq = None
    except KeyError as exc:
        raise ConfigError(f"family {name!r} is missing parameter {exc.args[0]}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"family {name!r}: {exc}") from None
    if seq is not None:
        if p:
            raise ConfigError(f"family {name!r} got unexpected parameters {sorted(p)}")
        return seq
    raise ConfigError(f"unknown weight family {name!r} (known: example, zero-after, constant, zero)")


def explicit_from_pairs(pairs: Iterable[tuple[int, float]]) -> ExplicitWeights:
    return ExplicitWeights(dict(pairs))
