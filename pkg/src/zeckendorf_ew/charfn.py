"""Characteristic sums H_k(t) and their transfer-matrix structure.

H_k(t) = sum_{0 <= n < G_k} exp(i t f(n)) satisfies

    H_{k+1} = H_k + exp(i t f(F_{k+2})) H_{k-1},   H_0 = 1,  H_1 = 1 + exp(i t f(F_2)),

i.e. (H_{k+1}, H_k) = A_k(t) (H_k, H_{k-1}) with A_k(t) = [[1, 1], [e_k, 0]].
At t = 0 this is the Fibonacci matrix A, diagonalised by P into
D = diag(alpha, alpha_bar).  Pairs of steps B_k = A_{2k+1} A_{2k} are
factored in the eigenbasis as

    P^-1 B_k P = D^2 exp(theta_k E11) (I + R_k),

where theta_k carries the linear part of the perturbation and R_k has a
quadratically small (1,1) entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import NonConvergenceError, ThetaRangeError
from .numeration import enumerate_range, g
from .weights import WeightSequence

SQRT5 = math.sqrt(5.0)
ALPHA = (1.0 + SQRT5) / 2.0
ALPHA_BAR = (1.0 - SQRT5) / 2.0

BRUTE_FORCE_MAX_K = 25
METHODS = ("scalar-recursion", "matrix-product", "block-factored", "brute-force")


@dataclass(frozen=True, eq=False)
class GoldenFrame:
    """Constant matrices attached to A = [[1, 1], [1, 0]]."""

    alpha: float
    alpha_bar: float
    A: np.ndarray
    P: np.ndarray
    P_inv: np.ndarray
    D: np.ndarray
    S: np.ndarray
    U: np.ndarray
    V: np.ndarray
    E11: np.ndarray = field(default_factory=lambda: np.array([[1.0, 0.0], [0.0, 0.0]]))
    E21: np.ndarray = field(default_factory=lambda: np.array([[0.0, 0.0], [1.0, 0.0]]))

    @classmethod
    def standard(cls) -> "GoldenFrame":
        a, b = ALPHA, ALPHA_BAR
        D = np.diag([a, b])
        S = np.array([[1.0, -b * b], [a * a, -1.0]]) / SQRT5
        D_inv2 = np.diag([a**-2, b**-2])
        return cls(
            alpha=a,
            alpha_bar=b,
            A=np.array([[1.0, 1.0], [1.0, 0.0]]),
            P=np.array([[a, b], [1.0, 1.0]]),
            P_inv=np.array([[1.0, -b], [-1.0, a]]) / SQRT5,
            D=D,
            S=S,
            U=D_inv2 @ D @ S,
            V=D_inv2 @ S @ D,
        )

    def with_(self, **changes) -> "GoldenFrame":
        return replace(self, **changes)

    @property
    def D2(self) -> np.ndarray:
        return self.D @ self.D

    def adapted_norm(self, M) -> float | np.ndarray:
        """||M||_A = ||P^-1 M P||_2 (spectral norm); accepts stacks of matrices."""
        M = np.asarray(M)
        conj = self.P_inv @ M @ self.P
        return np.linalg.norm(conj, ord=2, axis=(-2, -1))


FRAME = GoldenFrame.standard()


def adapted_norm(frame: GoldenFrame, M) -> float:
    return float(frame.adapted_norm(M)) if np.ndim(M) == 2 else frame.adapted_norm(M)


# -- single steps ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepMatrix:
    k: int
    t: float
    matrix: np.ndarray
    delta: complex

    @property
    def Delta(self) -> np.ndarray:
        return self.matrix - FRAME.A


def step_matrix(seq: WeightSequence, k: int, t: float) -> StepMatrix:
    """A_k(t) = [[1, 1], [exp(i t f(F_{k+2})), 0]]."""
    if k < 1:
        raise ValueError(f"step_matrix requires k >= 1, got {k}")
    e = np.exp(1j * t * seq.weight(k + 2))
    mat = np.array([[1.0, 1.0], [e, 0.0]], dtype=complex)
    return StepMatrix(k, t, mat, complex(e - 1.0))


def nilpotent_check(d1: StepMatrix, d2: StepMatrix) -> float:
    """Largest |entry| of Delta(d1) Delta(d2); structurally zero."""
    prod = d1.Delta @ d2.Delta
    return float(np.max(np.abs(prod)))


# -- characteristic sums -----------------------------------------------------


def _as_grid(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def h_scalar(seq: WeightSequence, k: int, t):
    """H_k(t) by the three-term recursion (unnormalised; k up to ~1400)."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    tt, scalar = _as_grid(t)
    tt = np.atleast_1d(tt)
    w = seq.layer_weights(max(k, 1))
    prev = np.ones(tt.shape, dtype=complex)
    if k == 0:
        return complex(prev[0]) if scalar else prev
    cur = 1.0 + np.exp(1j * tt * w[0])
    for m in range(1, k):
        # w[m] = f(F_{m+2})
        prev, cur = cur, cur + np.exp(1j * tt * w[m]) * prev
    return complex(cur[0]) if scalar else cur


@lru_cache(maxsize=8)
def _digit_matrix(k: int) -> np.ndarray:
    # row n holds the 0/1 digits eps_2 .. eps_{k+1} of n
    E = np.zeros((g(k), max(k, 1)), dtype=np.float64)
    for n, d in enumerate(enumerate_range(k)):
        for j in d.indices:
            E[n, j - 2] = 1.0
    E.setflags(write=False)
    return E


def f_values_bruteforce(seq: WeightSequence, k: int) -> np.ndarray:
    """f(n) for every n < G_k, by direct digit enumeration."""
    if k > BRUTE_FORCE_MAX_K:
        raise ValueError(f"brute-force enumeration limited to k <= {BRUTE_FORCE_MAX_K}, got {k}")
    E = _digit_matrix(k)
    return E @ seq.layer_weights(max(k, 1))


def h_bruteforce(seq: WeightSequence, k: int, t):
    """H_k(t) as the literal sum over n < G_k (the oracle)."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    tt, scalar = _as_grid(t)
    tt = np.atleast_1d(tt)
    fv = f_values_bruteforce(seq, k)
    out = np.empty(tt.shape, dtype=complex)
    chunk = max(1, 2_000_000 // max(fv.size, 1))
    for a in range(0, tt.size, chunk):
        out[a : a + chunk] = np.exp(1j * np.outer(tt[a : a + chunk], fv)).sum(axis=1)
    return complex(out[0]) if scalar else out


def _step_stack(w: float, tt: np.ndarray) -> np.ndarray:
    mats = np.zeros(tt.shape + (2, 2), dtype=complex)
    mats[..., 0, 0] = 1.0
    mats[..., 0, 1] = 1.0
    mats[..., 1, 0] = np.exp(1j * tt * w)
    return mats


def h_matrix(seq: WeightSequence, k: int, t):
    """H_k(t) from the matrix product A_1(t) A_2(t) ... A_{k-1}(t).

    With A_k(t) = [[1, 1], [e_k, 0]] the recursion is exact in row-vector
    form, (H_{k+1}, H_k) = (H_k, H_{k-1}) A_k(t), so
    (H_k, H_{k-1}) = (H_1, H_0) A_1 ... A_{k-1}.
    """
    if k < 1:
        raise ValueError(f"h_matrix requires k >= 1, got {k}")
    tt, scalar = _as_grid(t)
    tt = np.atleast_1d(tt)
    w = seq.layer_weights(k)
    prod = np.broadcast_to(np.eye(2, dtype=complex), tt.shape + (2, 2)).copy()
    for m in range(1, k):
        prod = prod @ _step_stack(w[m], tt)
    start = np.stack([1.0 + np.exp(1j * tt * w[0]), np.ones_like(tt, dtype=complex)], axis=-1)
    out = (start[..., None, :] @ prod)[..., 0, 0]
    return complex(out[0]) if scalar else out


# -- paired blocks -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    k: int
    t: float
    delta_even: complex
    delta_odd: complex
    B_tilde: np.ndarray
    M: np.ndarray
    theta: complex
    R: np.ndarray
    V_k: float
    linear_size: float  # |t| (|f(F_{2k+2})| + |f(F_{2k+3})|)

    @property
    def quadratic_size(self) -> float:
        return self.t * self.t * self.V_k

    def R_norm(self, frame: GoldenFrame = FRAME) -> float:
        return float(frame.adapted_norm(self.R))


def exp_e11(x) -> np.ndarray:
    """exp(x E11) = I + (e^x - 1) E11, for scalars or arrays of x."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros(x.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(x)
    out[..., 1, 1] = 1.0
    return out


def block_arrays(w_even, w_odd, t, frame: GoldenFrame = FRAME) -> dict:
    """Vectorised block factorisation.

    ``w_even`` = f(F_{2k+2}), ``w_odd`` = f(F_{2k+3}); all inputs broadcast.
    Returns B_tilde = P^-1 A_{2k+1} A_{2k} P, M, theta, R and the deltas.
    """
    w_even, w_odd, t = np.broadcast_arrays(
        np.asarray(w_even, float), np.asarray(w_odd, float), np.asarray(t, float)
    )
    e_even = np.exp(1j * t * w_even)
    e_odd = np.exp(1j * t * w_odd)
    A_even = _step_stack_arr(e_even)
    A_odd = _step_stack_arr(e_odd)
    B = A_odd @ A_even
    B_tilde = frame.P_inv @ B @ frame.P
    D_inv2 = np.diag(1.0 / np.diag(frame.D2))
    M = D_inv2 @ B_tilde
    d_even = e_even - 1.0
    d_odd = e_odd - 1.0
    theta = (d_even + d_odd) / (frame.alpha * SQRT5)
    # R from M = I + delta_2k U + delta_2k+1 V, which vanishes exactly with the
    # deltas; B_tilde and M above come from the direct product instead
    eye = np.eye(2)
    M_uv = eye + d_even[..., None, None] * frame.U + d_odd[..., None, None] * frame.V
    R = exp_e11(-theta) @ M_uv - eye
    return dict(
        delta_even=d_even,
        delta_odd=d_odd,
        B=B,
        B_tilde=B_tilde,
        M=M,
        theta=theta,
        R=R,
        V=w_even**2 + w_odd**2,
        linear=np.abs(t) * (np.abs(w_even) + np.abs(w_odd)),
    )


def _step_stack_arr(e: np.ndarray) -> np.ndarray:
    mats = np.zeros(e.shape + (2, 2), dtype=complex)
    mats[..., 0, 0] = 1.0
    mats[..., 0, 1] = 1.0
    mats[..., 1, 0] = e
    return mats


def block_decompose(
    seq: WeightSequence, k: int, t: float, frame: GoldenFrame = FRAME, check_theta: bool = True
) -> BlockDecomposition:
    """Factor the block A_{2k+1}(t) A_{2k}(t) in the eigenbasis of A."""
    if k < 1:
        raise ValueError(f"block_decompose requires k >= 1, got {k}")
    we, wo = seq.weight(2 * k + 2), seq.weight(2 * k + 3)
    arr = block_arrays(we, wo, t, frame)
    theta = complex(arr["theta"])
    if check_theta and abs(theta) > 1.0:
        raise ThetaRangeError(k, t, theta)
    return BlockDecomposition(
        k=k,
        t=float(t),
        delta_even=complex(arr["delta_even"]),
        delta_odd=complex(arr["delta_odd"]),
        B_tilde=arr["B_tilde"],
        M=arr["M"],
        theta=theta,
        R=arr["R"],
        V_k=float(arr["V"]),
        linear_size=float(arr["linear"]),
    )


@dataclass(frozen=True, eq=False)
class PairedProduct:
    """Factors of prod_{k=K}^{L} B_tilde_k, ordered B_tilde_L ... B_tilde_K.

    ``remainder_product`` is the ordered product of (I + R_k) after each R_k is
    conjugated by the diagonal factors of the earlier blocks, so that

        prod = D^power exp(phase_sum E11) remainder_product

    holds exactly.  Diagonal conjugation leaves the (1,1) entries of R_k
    untouched.  ``naive_remainder_product`` is the unconjugated product of the
    (I + R_k), kept for comparison.
    """

    K: int
    L: int
    t: float
    power: int
    phase_sum: complex
    remainder_product: np.ndarray
    naive_remainder_product: np.ndarray
    direct_normalized: np.ndarray
    V_sum: float

    @property
    def log_scale(self) -> float:
        """log of the dominant scale alpha^power."""
        return self.power * math.log(ALPHA)

    def reconstruct_normalized(self) -> np.ndarray:
        """D^power exp(phase_sum E11) remainder_product, divided by alpha^power."""
        ratio = (ALPHA_BAR / ALPHA) ** self.power
        diag = np.diag([np.exp(self.phase_sum), ratio])
        return diag @ self.remainder_product

    def reconstruction_error(self) -> float:
        """max |entry error| relative to the largest entry of the direct product."""
        direct = self.direct_normalized
        scale = float(np.max(np.abs(direct)))
        return float(np.max(np.abs(self.reconstruct_normalized() - direct))) / scale


def paired_product(
    seq: WeightSequence, K: int, L: int, t: float, frame: GoldenFrame = FRAME, check_theta: bool = True
) -> PairedProduct:
    if not 1 <= K <= L:
        raise ValueError(f"paired_product requires 1 <= K <= L, got K={K}, L={L}")
    a2 = frame.alpha**2
    lam2 = (frame.alpha_bar / frame.alpha) ** 2
    direct = np.eye(2, dtype=complex)
    rem = np.eye(2, dtype=complex)
    naive = np.eye(2, dtype=complex)
    phase = 0.0j
    # diagonal of the accumulated normalised Lambda_K ... Lambda_{k-1}
    acc1, acc2 = 1.0 + 0j, 1.0 + 0j
    V_sum = 0.0
    for k in range(K, L + 1):
        blk = block_decompose(seq, k, t, frame, check_theta=check_theta)
        direct = (blk.B_tilde / a2) @ direct
        R = blk.R
        conj = R.copy()
        conj[0, 1] *= acc2 / acc1
        conj[1, 0] *= acc1 / acc2
        rem = (np.eye(2) + conj) @ rem
        naive = (np.eye(2) + R) @ naive
        phase += blk.theta
        acc1 *= np.exp(blk.theta)
        acc2 *= lam2
        V_sum += blk.V_k
    return PairedProduct(
        K=K,
        L=L,
        t=float(t),
        power=2 * (L - K + 1),
        phase_sum=phase,
        remainder_product=rem,
        naive_remainder_product=naive,
        direct_normalized=direct,
        V_sum=V_sum,
    )


# -- normalised characteristic functions ----------------------------------------


@dataclass(frozen=True, eq=False)
class CharFnProfile:
    k: int
    t_grid: np.ndarray
    values: np.ndarray
    method: str

    def check(self, tol: float = 1e-12) -> None:
        """Raise AssertionError if Phi(0) != 1 or |Phi| > 1 on the grid."""
        at0 = self.t_grid == 0
        if at0.any() and np.max(np.abs(self.values[at0] - 1.0)) > tol:
            raise AssertionError("Phi_k(0) != 1")
        if np.max(np.abs(self.values), initial=0.0) > 1.0 + tol:
            raise AssertionError("|Phi_k(t)| > 1")


_RATIOS: list[float] = []


def layer_ratio(m: int) -> float:
    """G_m / G_{m+1} as a float."""
    if m >= len(_RATIOS):
        start = len(_RATIOS)
        for i in range(start, m + 1024):
            if i < 80:
                _RATIOS.append(g(i) / g(i + 1))
            else:
                # G_i/G_{i+1} = 1/(1 + G_{i-1}/G_i); the map is a contraction
                _RATIOS.append(1.0 / (1.0 + _RATIOS[i - 1]))
    return _RATIOS[m]


def _phi_step(cur, prev, m, e):
    # Phi_{m+1} = (G_m/G_{m+1}) Phi_m + (G_{m-1}/G_{m+1}) e_m Phi_{m-1}
    # G_{m-1}/G_{m+1} = 1 - a, and 1 - a is exact for a in [1/2, 1], so Phi(0) = 1 exactly
    a = layer_ratio(m)
    b = 1.0 - a
    return a * cur + b * e * prev


def _phi_recursion(w: np.ndarray, k: int, tt: np.ndarray) -> np.ndarray:
    prev = np.ones(tt.shape, dtype=complex)
    if k == 0:
        return prev
    cur = 0.5 * (1.0 + np.exp(1j * tt * w[0]))
    for m in range(1, k):
        prev, cur = cur, _phi_step(cur, prev, m, np.exp(1j * tt * w[m]))
    return cur


def _phi_block_factored(seq: WeightSequence, k: int, tt: np.ndarray) -> np.ndarray:
    # column form on u_m = (H_m, e_m H_{m-1}): u_{m+1} = A_{m+1} u_m, so
    # u_k = [A_k] ... (A_5 A_4)(A_3 A_2) u_1 with the paired blocks B_j = A_{2j+1} A_{2j},
    # each applied in eigen-coordinates as D^2 exp(theta_j E11)(I + R_j) / alpha^2
    if k == 0:
        return np.ones(tt.shape, dtype=complex)
    w = seq.weights(np.arange(2, k + 3))  # f(F_2) .. f(F_{k+2})
    h1 = 1.0 + np.exp(1j * tt * w[0])
    if k == 1:
        return h1 / 2.0
    u = np.stack([h1, np.exp(1j * tt * w[1])], axis=-1)
    y = (FRAME.P_inv @ u[..., None])[..., 0]
    n_blocks = (k - 1) // 2
    for j in range(1, n_blocks + 1):
        arr = block_arrays(w[2 * j], w[2 * j + 1], tt)
        fac = FRAME.D2 @ exp_e11(arr["theta"]) @ (np.eye(2) + arr["R"])
        y = (fac @ y[..., None])[..., 0] / ALPHA**2
    u = (FRAME.P @ y[..., None])[..., 0]
    if (k - 1) % 2 == 1:  # leftover step A_k
        u = (_step_stack(w[k], tt) @ u[..., None])[..., 0]
    log_scale = 2 * n_blocks * math.log(ALPHA)
    return u[..., 0] * math.exp(log_scale - math.log(g(k)))


def phi(seq: WeightSequence, k: int, t_grid, method: str = "scalar-recursion") -> CharFnProfile:
    """Phi_k(t) = H_k(t) / G_k on a grid."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    tt = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if method == "scalar-recursion":
        vals = _phi_recursion(seq.layer_weights(max(k, 1)), k, tt)
    elif method == "matrix-product":
        vals = h_matrix(seq, k, tt) / g(k) if k >= 1 else np.ones(tt.shape, dtype=complex)
    elif method == "brute-force":
        vals = h_bruteforce(seq, k, tt) / g(k)
    elif method == "block-factored":
        vals = _phi_block_factored(seq, k, tt)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return CharFnProfile(k, tt, np.asarray(vals, dtype=complex), method)


@dataclass(frozen=True, eq=False)
class LimitProfile:
    profile: CharFnProfile
    K: int
    gap: float
    lag: int

    @property
    def values(self):
        return self.profile.values


def phi_limit(
    seq: WeightSequence, t_grid, eps: float = 1e-6, lag: int = 8, cap: int = 200_000
) -> LimitProfile:
    """Phi_K for the smallest K with max_t |Phi_K - Phi_{K+lag}| < eps."""
    tt = np.atleast_1d(np.asarray(t_grid, dtype=float))
    history = [np.ones(tt.shape, dtype=complex)]  # Phi_0
    w_chunk = 4096
    w = seq.weights(np.arange(2, 2 + w_chunk))
    cur = 0.5 * (1.0 + np.exp(1j * tt * w[0]))
    prev = history[0]
    history.append(cur)
    m = 1
    while True:
        K = m - lag
        if K >= 0:
            gap = float(np.max(np.abs(history[K % (lag + 1)] - cur)))
            if gap < eps:
                return LimitProfile(CharFnProfile(K, tt, history[K % (lag + 1)].copy(), "scalar-recursion"), K, gap, lag)
            if K >= cap:
                raise NonConvergenceError(
                    f"Phi_K did not stabilise to eps={eps:g} by K={cap} (last gap {gap:.3g})"
                )
        if m >= w.size:
            w = np.concatenate([w, seq.weights(np.arange(2 + w.size, 2 + w.size + w_chunk))])
        prev, cur = cur, _phi_step(cur, prev, m, np.exp(1j * tt * w[m]))
        m += 1
        if len(history) <= lag:
            history.append(cur)
        else:
            history[m % (lag + 1)] = cur
