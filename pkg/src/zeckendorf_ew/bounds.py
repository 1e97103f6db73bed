"""Numerical evaluation of the Kolmogorov-distance bounds.

Two different frequency parameters appear below and are kept apart:
``T_freq`` in (0, 1] is the cutoff of the uniform tail estimate on
|Phi_N - Phi| and of the split form, while ``T_smooth`` >= 1 is the
smoothing parameter of the Esseen inequality and of the master bound.

The limit law F and its characteristic function Phi are represented by
F_K and Phi_K at a Cauchy-stabilised depth K (see
:func:`zeckendorf_ew.distribution.limit_distribution`).  Every report keeps
each right-hand-side term separately; none of the implicit constants is
assumed, the ratio lhs / rhs is reported instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .charfn import ALPHA, phi, phi_limit
from .distribution import (
    DiscreteDistribution,
    StabilizedLimit,
    concentration,
    dist_prefix,
    kolmogorov,
    limit_distribution,
    phi_prefix,
)
from .errors import ConfigError, NonConvergenceError
from .numeration import g
from .weights import ExampleWeights, WeightSequence

DEFAULT_C1 = 4.0
DEFAULT_C2 = 1.0
QUAD_RTOL = 1e-6

# default stabilisation protocol for F; the gap is reported, not enforced.
# LIMIT_EPS sits below the 1e-3 jitter used when judging convergence trends.
LIMIT_EPS = 5e-4
LIMIT_K_CAP = 160
LIMIT_BIN_WIDTH = 1e-5


@dataclass
class BoundReport:
    kind: str
    lhs: float
    rhs_terms: dict[str, float]
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, val in self.rhs_terms.items():
            if not val >= 0.0:
                raise ValueError(f"bound term {name!r} is negative or NaN: {val}")

    @property
    def rhs(self) -> float:
        return math.fsum(self.rhs_terms.values())

    @property
    def fitted_constant(self) -> float:
        """lhs / rhs; zero when lhs vanishes."""
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rhs_terms": dict(self.rhs_terms),
            "parameters": _jsonable(self.parameters),
            "fitted_constant": self.fitted_constant,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), allow_nan=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def truncation_level(cut: int) -> int:
    """Paired-block truncation K with digit index 2K + 2 just above the cut L - 2h."""
    return max(0, math.ceil(cut / 2))


def default_L_h(N: int, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> tuple[int, int]:
    """L = ceil(c1 log N), h = ceil(c2 log N)."""
    logN = math.log(N)
    L, h = math.ceil(c1 * logN), math.ceil(c2 * logN)
    if L <= 2 * h:
        raise ConfigError(f"need L > 2h, got L={L}, h={h} (c1={c1}, c2={c2})")
    return L, h


def stabilized_limit(
    seq: WeightSequence,
    eps: float = LIMIT_EPS,
    k_cap: int = LIMIT_K_CAP,
    bin_width: float | None = LIMIT_BIN_WIDTH,
    strict: bool = False,
) -> StabilizedLimit:
    return limit_distribution(seq, eps=eps, k_cap=k_cap, bin_width=bin_width, strict=strict)


def _law_N(seq: WeightSequence, N: int) -> DiscreteDistribution:
    return dist_prefix(seq, N)


def _limit_params(limit: StabilizedLimit) -> dict:
    return {
        "limit_depth": limit.K,
        "limit_gap": limit.gap,
        "limit_converged": limit.converged,
        "limit_bin_width": limit.bin_width,
    }


# -- uniform tail on |Phi_N - Phi| -------------------------------------------------


def phi_gap(
    seq: WeightSequence,
    k: int,
    limit_depth: int | None = None,
    t_grid=None,
    T_freq: float = 1.0,
    eps: float = 1e-6,
) -> BoundReport:
    """sup_{t in grid} |Phi_k(t) - Phi(t)| against T^2 sum_{j > k+1} f(F_j)^2.

    Phi is Phi_{limit_depth} when given, otherwise the Cauchy-stabilised
    limit at tolerance ``eps``.  Phi_k sees the digits j <= k+1, so the
    matching tail cut is m = k + 1.
    """
    if not 0 < T_freq <= 1:
        raise ConfigError(f"T_freq must lie in (0, 1], got {T_freq}")
    tt = np.linspace(-T_freq, T_freq, 201) if t_grid is None else np.atleast_1d(np.asarray(t_grid, float))
    if np.max(np.abs(tt)) > T_freq * (1 + 1e-12):
        raise ConfigError("t_grid must lie inside [-T_freq, T_freq]")
    if limit_depth is None:
        lim = phi_limit(seq, tt, eps=eps)
        lim_vals, depth, lim_gap = lim.values, lim.K, lim.gap
    else:
        lim_vals, depth, lim_gap = phi(seq, limit_depth, tt).values, limit_depth, math.nan
    gap = float(np.max(np.abs(phi(seq, k, tt).values - lim_vals)))
    cut = k + 1
    tail = seq.tail_l2(cut)
    return BoundReport(
        "phi_gap",
        gap,
        {"T^2*tail": T_freq**2 * tail.value},
        {"k": k, "N": g(k), "T_freq": T_freq, "cut_m": cut, "tail_l2": tail.value,
         "tail_error": tail.error, "limit_depth": depth, "limit_cauchy_gap": lim_gap,
         "grid_points": int(tt.size)},
    )


# -- quadrature ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    n_intervals: int


def adaptive_trapezoid(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    n_init: int = 64,
    geometric: bool = False,
    rtol: float = QUAD_RTOL,
    atol: float = 1e-14,
    max_intervals: int = 400_000,
) -> QuadResult:
    """Trapezoid rule with bisection of the intervals carrying the most error.

    ``f`` is evaluated on whole batches of nodes.  The error of an interval is
    estimated by comparing its one-panel and two-panel trapezoid sums.
    """
    if b <= a:
        return QuadResult(0.0, 0.0, 0)
    nodes = np.geomspace(a, b, n_init + 1) if geometric and a > 0 else np.linspace(a, b, n_init + 1)
    left, right = nodes[:-1], nodes[1:]
    fl, fr = f(left), f(right)
    while True:
        mid = 0.5 * (left + right)
        fm = f(mid)
        h = right - left
        coarse = 0.5 * h * (fl + fr)
        fine = 0.25 * h * (fl + 2.0 * fm + fr)
        err = np.abs(fine - coarse) / 3.0
        total = float(np.sum(fine))
        err_total = float(np.sum(err))
        if err_total <= rtol * abs(total) + atol:
            return QuadResult(total, err_total, int(left.size))
        if left.size * 2 > max_intervals:
            worst = int(np.argmax(err))
            raise NonConvergenceError(
                f"quadrature on [{a:g}, {b:g}] did not reach rtol={rtol:g}; "
                f"worst subinterval [{left[worst]:.6g}, {right[worst]:.6g}] (error {err[worst]:.3g})"
            )
        split = err > (rtol * abs(total) + atol) / (2.0 * left.size)
        keep = ~split
        left = np.concatenate([left[keep], left[split], mid[split]])
        right = np.concatenate([right[keep], mid[split], right[split]])
        fl = np.concatenate([fl[keep], fl[split], fm[split]])
        fr = np.concatenate([fr[keep], fm[split], fr[split]])


def smoothing_bound(
    seq: WeightSequence,
    N: int,
    T_smooth: float,
    t0: float | None = None,
    limit: StabilizedLimit | None = None,
    rtol: float = QUAD_RTOL,
) -> BoundReport:
    """Esseen smoothing: Q_F(1/T) + (1/T) int_0^T |Phi_N - Phi| / t dt.

    The piece [0, t0] is replaced by its surrogate log N / T; [t0, 1] and
    [1, T] are integrated numerically and reported separately.
    """
    if T_smooth < 1:
        raise ConfigError(f"the smoothing parameter must satisfy T >= 1, got {T_smooth}")
    t0 = 1.0 / N if t0 is None else t0
    if not 0 < t0 < 1:
        raise ConfigError(f"t0 must lie in (0, 1), got {t0}")
    limit = limit or stabilized_limit(seq)
    K = limit.K

    def integrand(t):
        return np.abs(phi_prefix(seq, N, t) - phi(seq, K, t).values) / t

    mid = adaptive_trapezoid(integrand, t0, 1.0, n_init=64, geometric=True, rtol=rtol)
    n_hf = max(64, int(math.ceil(16 * (T_smooth - 1.0))))
    hf = adaptive_trapezoid(integrand, 1.0, T_smooth, n_init=n_hf, rtol=rtol)
    lhs = kolmogorov(_law_N(seq, N), limit.dist)
    terms = {
        "Q_F(1/T)": concentration(limit.dist, 1.0 / T_smooth),
        "lf:logN/T": math.log(N) / T_smooth,
        "mid:(1/T)int_t0^1": mid.value / T_smooth,
        "hf:(1/T)int_1^T": hf.value / T_smooth,
    }
    params = {"N": N, "T_smooth": T_smooth, "t0": t0, "quad_error_mid": mid.error / T_smooth,
              "quad_error_hf": hf.error / T_smooth, **_limit_params(limit)}
    return BoundReport("smoothing", lhs, terms, params)


def master_bound(
    seq: WeightSequence,
    N: int,
    T_smooth: float,
    L: int | None = None,
    h: int | None = None,
    limit: StabilizedLimit | None = None,
    lhs: float | None = None,
) -> BoundReport:
    """Q_F(1/T) + log N / T + (log N / T) sum_{j > L-2h} f(F_j)^2 + log T / T."""
    if T_smooth < 1:
        raise ConfigError(f"the master bound needs T >= 1, got {T_smooth}")
    if L is None or h is None:
        L0, h0 = default_L_h(N)
        L = L0 if L is None else L
        h = h0 if h is None else h
    if not L > 2 * h >= 0:
        raise ConfigError(f"need L > 2h >= 0, got L={L}, h={h}")
    limit = limit or stabilized_limit(seq)
    logN = math.log(N)
    cut = L - 2 * h
    tail = seq.tail_l2(cut)
    if lhs is None:
        lhs = kolmogorov(_law_N(seq, N), limit.dist)
    terms = {
        "Q_F(1/T)": concentration(limit.dist, 1.0 / T_smooth),
        "logN/T": logN / T_smooth,
        "(logN/T)*tail": logN / T_smooth * tail.value,
        "logT/T": math.log(T_smooth) / T_smooth,
    }
    params = {"N": N, "T_smooth": T_smooth, "L": L, "h": h, "K": truncation_level(cut),
              "cut_m": cut, "tail_l2": tail.value, "tail_error": tail.error, **_limit_params(limit)}
    return BoundReport("master", lhs, terms, params)


def main_bound(
    seq: WeightSequence,
    N: int,
    T_freq: float,
    L: int | None = None,
    h: int | None = None,
    limit: StabilizedLimit | None = None,
    lhs: float | None = None,
) -> BoundReport:
    """Q_F(1/T) + log N / T + T^2 sum_{j > L-2h} f(F_j)^2 for T in (0, 1]."""
    if not 0 < T_freq <= 1:
        raise ConfigError(f"T_freq must lie in (0, 1], got {T_freq}")
    if L is None or h is None:
        L0, h0 = default_L_h(N)
        L = L0 if L is None else L
        h = h0 if h is None else h
    limit = limit or stabilized_limit(seq)
    cut = L - 2 * h
    tail = seq.tail_l2(cut)
    if lhs is None:
        lhs = kolmogorov(_law_N(seq, N), limit.dist)
    terms = {
        "Q_F(1/T)": concentration(limit.dist, 1.0 / T_freq),
        "logN/T": math.log(N) / T_freq,
        "T^2*tail": T_freq**2 * tail.value,
    }
    params = {"N": N, "T_freq": T_freq, "L": L, "h": h, "K": truncation_level(cut), "cut_m": cut,
              "tail_l2": tail.value, **_limit_params(limit)}
    return BoundReport("main", lhs, terms, params)


def split_bound(
    seq: WeightSequence,
    N: int,
    T_freq: float,
    cut_m: int | None = None,
    limit: StabilizedLimit | None = None,
    lhs: float | None = None,
) -> BoundReport:
    """Q_F(1/T) + log N / T + T sum_{big} |f| + T^2 sum_{small} f^2 over j > cut_m."""
    if not 0 < T_freq <= 1:
        raise ConfigError(f"T_freq must lie in (0, 1], got {T_freq}")
    if cut_m is None:
        L, h = default_L_h(N)
        cut_m = L - 2 * h
    limit = limit or stabilized_limit(seq)
    st = seq.split_tail(cut_m, T_freq)
    if lhs is None:
        lhs = kolmogorov(_law_N(seq, N), limit.dist)
    terms = {
        "Q_F(1/T)": concentration(limit.dist, 1.0 / T_freq),
        "logN/T": math.log(N) / T_freq,
        "split-linear": st.linear_part,
        "split-quadratic": st.quadratic_part,
    }
    params = {"N": N, "T_freq": T_freq, "K": truncation_level(cut_m), "cut_m": cut_m,
              "big_indices": list(st.big_indices),
              **_limit_params(limit)}
    return BoundReport("split", lhs, terms, params)


# -- the l2-not-l1 example -----------------------------------------------------


@dataclass(frozen=True)
class TailRow:
    m: int
    tail: float
    tail_times_log_m: float
    error: float


def example_asymptotics(m_list: Sequence[int], seq: WeightSequence | None = None) -> list[TailRow]:
    """(m, sum_{j>m} f(F_j)^2, the same times log m) for each m."""
    seq = seq or ExampleWeights()
    ms = list(m_list)
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise ConfigError("m_list must be increasing")
    if ms and ms[0] < 10:
        raise ConfigError("m_list entries must be >= 10")
    rows = []
    for m in ms:
        tail = seq.tail_l2(m)
        rows.append(TailRow(m, tail.value, tail.value * math.log(m), tail.error))
    return rows


# -- convergence table ---------------------------------------------------------


def resolve_T(spec, N: int) -> float:
    """A T schedule entry: a number, 'logN' or 'logN^2'."""
    if isinstance(spec, (int, float)):
        return float(spec)
    s = str(spec).strip().replace(" ", "")
    if s in ("logN", "log(N)"):
        return math.log(N)
    if s in ("logN^2", "(logN)^2", "logN**2"):
        return math.log(N) ** 2
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"unknown T schedule entry {spec!r}") from None


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    N: int
    lhs: float
    best_rhs: float
    best_T: float
    ratio: float
    reports: tuple = ()


def convergence_experiment(
    seq: WeightSequence,
    k_list: Iterable[int],
    T_schedule: Sequence = ("logN", "logN^2"),
    limit: StabilizedLimit | None = None,
) -> list[ConvergenceRow]:
    """Per k: lhs = ||F_{G_k} - F||, and the smallest master rhs over the T schedule."""
    ks = list(k_list)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigError("k_list must be increasing")
    limit = limit or stabilized_limit(seq)
    rows = []
    for k in ks:
        N = g(k)
        lhs = kolmogorov(_law_N(seq, N), limit.dist)
        reports = []
        for spec in T_schedule:
            T = max(1.0, resolve_T(spec, N))
            reports.append(master_bound(seq, N, T, limit=limit, lhs=lhs))
        best = min(reports, key=lambda r: r.rhs)
        rows.append(ConvergenceRow(k, N, lhs, best.rhs, best.parameters["T_smooth"],
                                   lhs / best.rhs if best.rhs > 0 else math.inf, tuple(reports)))
    return rows


def single_constant(reports: Iterable[BoundReport]) -> float:
    """Smallest C with lhs <= C rhs for every report."""
    return max((r.fitted_constant for r in reports), default=0.0)


# -- atomic case ----------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    depths: tuple[int, ...]
    gaps: tuple[float, ...]
    slope: float
    intercept: float

    @property
    def expected_slope(self) -> float:
        return -2.0 * math.log(ALPHA)

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected_slope) / abs(self.expected_slope)


def atomic_decay(
    seq: WeightSequence,
    depths: Sequence[int] = tuple(range(5, 31)),
    limit_depth: int | None = None,
    t_grid=None,
) -> DecayFit:
    """Least-squares slope of log sup_t |Phi_k - Phi| against the layer depth k."""
    tt = np.linspace(-1.0, 1.0, 41) if t_grid is None else np.atleast_1d(np.asarray(t_grid, float))
    limit_depth = limit_depth or (max(depths) + 80)
    lim = phi(seq, limit_depth, tt).values
    gaps = [float(np.max(np.abs(phi(seq, k, tt).values - lim))) for k in depths]
    if min(gaps) <= 0:
        raise NonConvergenceError("a gap is exactly zero; the weights carry no t-dependence")
    slope, intercept = np.polyfit(np.asarray(depths, float), np.log(gaps), 1)
    return DecayFit(tuple(depths), tuple(gaps), float(slope), float(intercept))
