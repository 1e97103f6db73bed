"""Exact finite distributions of f(n), Kolmogorov distance and concentration.

The law of f(n) for n uniform on [0, G_k) follows the digit recursion

    D_{k+1} = D_k  +  (f(F_{k+2}) + D_{k-1})

(multisets of values with integer multiplicities), the distributional
counterpart of H_{k+1} = H_k + e^{itf(F_{k+2})} H_{k-1}.  Values closer than
``tol`` are merged; a positive ``bin_width`` instead snaps values to a grid,
which keeps deep layers tractable at the cost of a shift of at most
bin_width / 2 per atom.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .charfn import phi
from .errors import AtomCapError, NonConvergenceError
from .numeration import g, zeck_encode
from .weights import WeightSequence

MERGE_TOL = 1e-12
ATOM_CAP = 8_000_000
# largest layer whose counts G_k (and G_k + G_{k-1}) fit in int64
_INT_COUNT_MAX_K = 86


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Sorted atoms with positive masses summing to one.

    ``counts`` holds exact multiplicities when available (masses = counts / total).
    """

    values: np.ndarray
    masses: np.ndarray
    counts: np.ndarray | None = None
    total: int | float = 1

    @classmethod
    def from_counts(cls, values, counts, total=None, tol: float = MERGE_TOL, bin_width: float | None = None):
        v, c = merge_atoms(np.asarray(values, float), np.asarray(counts), tol, bin_width)
        if total is None:
            total = int(c.sum()) if c.dtype.kind in "iu" else float(c.sum())
        return cls(v, c / float(total), c if c.dtype.kind in "iu" else None, total)

    @classmethod
    def point_mass(cls, x: float = 0.0) -> "DiscreteDistribution":
        return cls(np.array([float(x)]), np.array([1.0]), np.array([1], dtype=np.int64), 1)

    @classmethod
    def uniform(cls, points) -> "DiscreteDistribution":
        pts = np.asarray(points, float)
        return cls.from_counts(pts, np.ones(pts.size, dtype=np.int64))

    def __len__(self):
        return self.values.size

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.masses)

    def cdf(self, x) -> np.ndarray:
        """Right-continuous CDF evaluated at x."""
        idx = np.searchsorted(self.values, np.asarray(x, float), side="right")
        cum = np.concatenate([[0.0], self.cumulative])
        return cum[idx]

    def char_fn(self, t) -> np.ndarray:
        tt = np.atleast_1d(np.asarray(t, float))
        out = np.empty(tt.shape, dtype=complex)
        chunk = max(1, 4_000_000 // max(self.values.size, 1))
        for a in range(0, tt.size, chunk):
            out[a : a + chunk] = np.exp(1j * np.outer(tt[a : a + chunk], self.values)) @ self.masses
        return out

    def mass_error(self) -> float:
        return abs(float(self.masses.sum()) - 1.0)

    def csv_rows(self):
        for v, m in zip(self.values.tolist(), self.masses.tolist()):
            yield f"{v!r},{m!r}"


def merge_atoms(values: np.ndarray, counts: np.ndarray, tol: float = MERGE_TOL, bin_width: float | None = None):
    """Sort atoms and merge near-equal values, summing their counts."""
    if values.size == 0:
        return values, counts
    # inputs are usually two sorted runs, which the stable sort merges in linear time
    if bin_width:
        keys = np.rint(values / bin_width).astype(np.int64)
        order = np.argsort(keys, kind="stable")
        kk = keys[order]
        starts = np.concatenate([[0], np.flatnonzero(np.diff(kk)) + 1])
        return kk[starts] * bin_width, np.add.reduceat(counts[order], starts)
    order = np.argsort(values, kind="stable")
    v = values[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(v) > tol) + 1])
    return v[starts], np.add.reduceat(counts[order], starts)


def iter_layers(
    seq: WeightSequence,
    k_max: int,
    tol: float = MERGE_TOL,
    bin_width: float | None = None,
    atom_cap: int = ATOM_CAP,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (k, values, counts) for k = 0 .. k_max.

    Counts are exact int64 multiplicities up to layer 86; deeper layers carry
    float64 probabilities (the masses already divided by G_k).
    """
    w = seq.weights(np.arange(2, k_max + 3))
    v_prev, c_prev = np.array([0.0]), np.array([1], dtype=np.int64)
    yield 0, v_prev, c_prev
    if k_max == 0:
        return
    v_cur, c_cur = merge_atoms(np.array([0.0, w[0]]), np.array([1, 1], dtype=np.int64), tol, bin_width)
    yield 1, v_cur, c_cur
    exact = True
    for m in range(1, k_max):
        if exact and m + 1 > _INT_COUNT_MAX_K:
            exact = False
            c_prev = c_prev / float(g(m - 1))
            c_cur = c_cur / float(g(m))
        vals = np.concatenate([v_cur, v_prev + w[m]])
        if exact:
            cnts = np.concatenate([c_cur, c_prev])
        else:
            a = g(m) / g(m + 1)
            cnts = np.concatenate([c_cur * a, c_prev * (1.0 - a)])
        v_new, c_new = merge_atoms(vals, cnts, tol, bin_width)
        if v_new.size > atom_cap:
            raise AtomCapError(
                f"layer {m + 1} has {v_new.size} atoms > cap {atom_cap}; use a coarser merge tolerance"
            )
        v_prev, c_prev, v_cur, c_cur = v_cur, c_cur, v_new, c_new
        yield m + 1, v_cur, c_cur


def _to_dist(k: int, v: np.ndarray, c: np.ndarray) -> DiscreteDistribution:
    if c.dtype.kind in "iu":
        total = g(k)
        return DiscreteDistribution(v, c / float(total), c, total)
    return DiscreteDistribution(v, c / c.sum(), None, 1.0)


def dist_exact(
    seq: WeightSequence,
    k: int,
    tol: float = MERGE_TOL,
    bin_width: float | None = None,
    atom_cap: int = ATOM_CAP,
) -> DiscreteDistribution:
    """Law of f(n), n uniform on [0, G_k)."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    for layer, v, c in iter_layers(seq, k, tol, bin_width, atom_cap):
        if layer == k:
            return _to_dist(k, v, c)
    raise AssertionError("unreachable")


def dist_enumerate(seq: WeightSequence, N: int, tol: float = MERGE_TOL) -> DiscreteDistribution:
    """Law of f(n), n uniform on [0, N), by evaluating every f(n) (oracle)."""
    vals = np.array([seq.eval_f(n) for n in range(N)])
    return DiscreteDistribution.from_counts(vals, np.ones(N, dtype=np.int64), N, tol)


def prefix_blocks(N: int) -> list[tuple[tuple[int, ...], int]]:
    """Split [0, N) into blocks (fixed top digits, free layer count).

    Each block is {sum_{j in top} F_j + m : m < G_layers}; the fixed digits are
    the leading Zeckendorf digits of N.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    digits = sorted(zeck_encode(N).indices, reverse=True)
    blocks = []
    for i, j in enumerate(digits):
        blocks.append((tuple(digits[:i]), j - 2))
    return blocks


def dist_prefix(
    seq: WeightSequence,
    N: int,
    tol: float = MERGE_TOL,
    bin_width: float | None = None,
    atom_cap: int = ATOM_CAP,
) -> DiscreteDistribution:
    """Law of f(n), n uniform on [0, N), via the Zeckendorf prefix decomposition."""
    blocks = prefix_blocks(N)
    k_top = blocks[0][1]
    if k_top > _INT_COUNT_MAX_K:
        raise ValueError(f"dist_prefix supports N < G_{_INT_COUNT_MAX_K + 1}")
    need = {layers for _, layers in blocks}
    layers = {}
    for layer, v, c in iter_layers(seq, k_top, tol, bin_width, atom_cap):
        if layer in need:
            layers[layer] = (v, c)
    vals, cnts = [], []
    for top, layer in blocks:
        offset = float(seq.weights(np.array(top)).sum()) if top else 0.0
        v, c = layers[layer]
        vals.append(v + offset)
        cnts.append(c)
    return DiscreteDistribution.from_counts(np.concatenate(vals), np.concatenate(cnts), N, tol, bin_width)


def phi_prefix(seq: WeightSequence, N: int, t) -> np.ndarray:
    """Phi_N(t) = (1/N) sum_{n<N} e^{itf(n)} through the same block split."""
    tt = np.atleast_1d(np.asarray(t, float))
    total = np.zeros(tt.shape, dtype=complex)
    for top, layer in prefix_blocks(N):
        offset = float(seq.weights(np.array(top)).sum()) if top else 0.0
        total += np.exp(1j * tt * offset) * phi(seq, layer, tt).values * (g(layer) / N)
    return total


# -- metrics ----------------------------------------------------------------


def kolmogorov(d1: DiscreteDistribution, d2: DiscreteDistribution) -> float:
    """sup_x |F1(x) - F2(x)| over all atom locations of both laws.

    Between consecutive atoms both CDFs are constant, and left limits at an
    atom equal the right values at the preceding atom, so the right values at
    the union of atoms attain the supremum.
    """
    # merge both atom lists; each running sum adds only its own masses (zeros
    # elsewhere), so it reproduces that law's CDF exactly and the result is symmetric
    n1 = d1.values.size
    v = np.concatenate([d1.values, d2.values])
    order = np.argsort(v, kind="stable")
    v = v[order]
    own = order < n1
    m = np.concatenate([d1.masses, d2.masses])[order]
    F1 = np.cumsum(np.where(own, m, 0.0))
    F2 = np.cumsum(np.where(own, 0.0, m))
    last = np.flatnonzero(np.diff(v) != 0)
    if v.size:
        last = np.append(last, v.size - 1)
    return float(np.max(np.abs(F1[last] - F2[last]), initial=0.0))


def concentration(d: DiscreteDistribution, lam: float, rel_slack: float = 1e-12) -> float:
    """Largest mass of a closed interval of length lam (sliding window over atoms)."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    v = d.values
    cum = np.concatenate([[0.0], np.cumsum(d.masses)])
    ends = v + lam
    ends = ends + rel_slack * np.maximum(1.0, np.abs(ends))
    hi = np.searchsorted(v, ends, side="right")
    lo = np.arange(v.size)
    return float(min(1.0, np.max(cum[hi] - cum[lo])))


# -- limit law ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizedLimit:
    """F represented by F_K; ``gap`` = kolmogorov(F_K, F_{K+lag})."""

    dist: DiscreteDistribution
    K: int
    gap: float
    lag: int
    converged: bool
    bin_width: float | None


def limit_distribution(
    seq: WeightSequence,
    eps: float = 1e-3,
    lag: int = 8,
    k_cap: int = 40,
    bin_width: float | None = 1e-6,
    atom_cap: int = ATOM_CAP,
    strict: bool = False,
) -> StabilizedLimit:
    """Smallest K <= k_cap with kolmogorov(F_K, F_{K+lag}) < eps.

    Without convergence F_{k_cap} is returned with ``converged=False`` (or
    NonConvergenceError is raised when ``strict``).
    """
    window: deque = deque(maxlen=lag + 1)
    gap = math.inf
    for layer, v, c in iter_layers(seq, k_cap + lag, MERGE_TOL, bin_width, atom_cap):
        window.append(_to_dist(layer, v, c))
        if len(window) == lag + 1:
            K = layer - lag
            gap = kolmogorov(window[0], window[-1])
            if gap < eps:
                return StabilizedLimit(window[0], K, gap, lag, True, bin_width)
    if strict:
        raise NonConvergenceError(
            f"kolmogorov(F_K, F_K+{lag}) >= {eps:g} for all K <= {k_cap} (last gap {gap:.3g})"
        )
    return StabilizedLimit(window[0], k_cap, gap, lag, False, bin_width)


# -- atomic / non-atomic ----------------------------------------------------


@dataclass(frozen=True)
class DichotomyReport:
    verdict: str
    last_nonzero_index: int | None
    q_decay: tuple[tuple[float, float], ...]  # (lambda, Q(lambda)) at depth `depth`


def dichotomy_probe(
    seq: WeightSequence, depth: int, lambdas=(1e-1, 1e-2, 1e-3, 1e-4), zero_tol: float = 0.0
) -> DichotomyReport:
    """Atomic iff the weights vanish eventually.

    The verdict needs the family to declare eventual vanishing; a finite scan
    up to ``depth`` alone can never certify it.  The empirical concentration
    of F_depth at shrinking lambda is attached.
    """
    if depth < 2:
        raise ValueError(f"depth must be >= 2, got {depth}")
    w = np.abs(seq.weights(np.arange(2, depth + 1)))
    nz = np.flatnonzero(w > zero_tol)
    last = int(nz[-1]) + 2 if nz.size else None
    atomic = seq.declares_eventual_vanishing()
    d = dist_exact(seq, min(depth, 30), bin_width=None if min(depth, 30) <= 25 else 1e-9)
    q = tuple((float(lam), concentration(d, lam)) for lam in lambdas)
    return DichotomyReport("atomic-suspected" if atomic else "non-atomic-suspected", last, q)
