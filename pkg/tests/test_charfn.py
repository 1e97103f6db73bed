import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeckendorf_ew.charfn import (
    ALPHA,
    ALPHA_BAR,
    BRUTE_FORCE_MAX_K,
    FRAME,
    METHODS,
    SQRT5,
    adapted_norm,
    block_arrays,
    block_decompose,
    exp_e11,
    h_bruteforce,
    h_matrix,
    h_scalar,
    nilpotent_check,
    paired_product,
    phi,
    phi_limit,
    step_matrix,
)
from zeckendorf_ew.errors import NonConvergenceError, ThetaRangeError
from zeckendorf_ew.numeration import g
from zeckendorf_ew.weights import ExampleWeights, ExplicitWeights, ZeroAfterWeights, zero_weights

EX = ExampleWeights()
weights_strategy = st.lists(st.floats(-2.0, 2.0), min_size=22, max_size=22)


def explicit(ws):
    return ExplicitWeights({j + 2: w for j, w in enumerate(ws)})


# -- frame ------------------------------------------------------------------


def test_frame_invariants():
    f = FRAME
    assert np.allclose(f.P_inv @ f.A @ f.P, f.D, atol=1e-14, rtol=0)
    assert np.linalg.det(f.P) == pytest.approx(SQRT5, abs=1e-14)
    assert ALPHA * ALPHA_BAR == pytest.approx(-1.0, abs=1e-15)
    assert ALPHA**2 == pytest.approx(ALPHA + 1.0, abs=1e-15)
    assert np.allclose(f.P_inv @ f.E21 @ f.P, f.S, atol=1e-14, rtol=0)
    assert (f.D @ f.S)[0, 0] == pytest.approx(ALPHA / SQRT5, abs=1e-15)
    assert (f.S @ f.D)[0, 0] == pytest.approx(ALPHA / SQRT5, abs=1e-15)
    assert f.U[0, 0] == pytest.approx(1 / (ALPHA * SQRT5), abs=1e-15)
    assert f.V[0, 0] == pytest.approx(1 / (ALPHA * SQRT5), abs=1e-15)


def test_adapted_norm_examples():
    assert adapted_norm(FRAME, FRAME.A) == pytest.approx(ALPHA, abs=1e-14)
    assert adapted_norm(FRAME, FRAME.A @ FRAME.A) == pytest.approx(ALPHA**2, abs=1e-14)
    assert adapted_norm(FRAME, np.zeros((2, 2))) == 0.0


def test_exp_e11_closed_form():
    x = 0.3 - 0.7j
    assert np.allclose(exp_e11(x), np.array([[cmath.exp(x), 0], [0, 1]]))


# -- H routes -----------------------------------------------------------------


def test_h_scalar_examples():
    assert h_scalar(EX, 0, 0.7) == 1
    for k in (0, 1, 5, 17):
        assert h_scalar(EX, k, 0.0) == g(k)
    assert abs(h_scalar(ExplicitWeights({2: math.pi}), 1, 1.0)) < 1e-15


def test_h_bruteforce_examples():
    assert h_bruteforce(EX, 0, 1.3) == 1
    assert h_bruteforce(EX, 3, 0.0) == 5
    assert abs(h_bruteforce(EX, 12, 0.7) - h_scalar(EX, 12, 0.7)) < 1e-10


def test_h_bruteforce_guard():
    with pytest.raises(ValueError):
        h_bruteforce(EX, BRUTE_FORCE_MAX_K + 1, 0.1)


def test_h_matrix_examples():
    t = 0.4
    assert h_matrix(EX, 1, t) == pytest.approx(1 + cmath.exp(1j * t * EX.weight(2)), abs=1e-15)
    assert h_matrix(EX, 10, 0.0) == pytest.approx(144, abs=1e-12)
    assert abs(h_matrix(EX, 20, 0.3) - h_bruteforce(EX, 20, 0.3)) < 1e-9


def test_routes_accept_grids():
    t = np.linspace(-2, 2, 9)
    a, b, c = h_scalar(EX, 14, t), h_matrix(EX, 14, t), h_bruteforce(EX, 14, t)
    assert a.shape == b.shape == c.shape == (9,)
    assert np.max(np.abs(a - c)) < 1e-9 * g(14)
    assert np.max(np.abs(b - c)) < 1e-9 * g(14)


@given(weights_strategy, st.floats(-3.0, 3.0), st.integers(0, 20))
@settings(max_examples=60, deadline=None)
def test_oracle_equivalence(ws, t, k):
    seq = explicit(ws)
    ref = h_bruteforce(seq, k, t)
    assert abs(h_scalar(seq, k, t) - ref) < 1e-9 * g(k)
    if k >= 1:
        assert abs(h_matrix(seq, k, t) - ref) < 1e-9 * g(k)


# -- steps and blocks ---------------------------------------------------------


def test_step_matrix_examples():
    s = step_matrix(EX, 5, 0.0)
    assert np.array_equal(s.matrix, FRAME.A.astype(complex)) and s.delta == 0
    s = step_matrix(ExplicitWeights({7: math.pi}), 5, 1.0)
    assert s.delta == pytest.approx(-2.0, abs=1e-15)
    s = step_matrix(EX, 4, 0.9)
    nz = np.argwhere(np.abs(s.Delta) > 0)
    assert nz.tolist() == [[1, 0]]
    with pytest.raises(ValueError):
        step_matrix(EX, 0, 0.1)


@given(st.floats(-1, 1), st.floats(-2, 2), st.floats(-2, 2), st.integers(1, 50))
@settings(max_examples=50, deadline=None)
def test_nilpotent_pair(t, w1, w2, k):
    seq = ExplicitWeights({2 * k + 2: w1, 2 * k + 3: w2})
    assert nilpotent_check(step_matrix(seq, 2 * k + 1, t), step_matrix(seq, 2 * k, t)) == 0.0
    assert nilpotent_check(step_matrix(seq, 2 * k + 1, 0.0), step_matrix(seq, 2 * k, 0.0)) == 0.0


def test_step_delta_cap():
    rng = np.random.default_rng(1)
    for t, w in rng.uniform(-2, 2, (200, 2)):
        seq = ExplicitWeights({7: w})
        x = abs(t * w)
        assert abs(step_matrix(seq, 5, t).delta) <= min(x, x * x) + x + 1e-15


def test_block_at_zero_frequency():
    b = block_decompose(EX, 3, 0.0)
    assert np.allclose(b.B_tilde, FRAME.D2, atol=1e-14)
    assert b.theta == 0 and np.allclose(b.R, 0, atol=1e-14)


@given(st.floats(-1, 1), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=80, deadline=None)
def test_block_identities(t, we, wo):
    arr = block_arrays(we, wo, t)
    de, do = arr["delta_even"], arr["delta_odd"]
    f = FRAME
    expected = f.D2 + de * f.D @ f.S + do * f.S @ f.D
    assert np.max(np.abs(arr["B_tilde"] - expected)) < 1e-12
    assert abs(arr["B_tilde"][0, 0] - (ALPHA**2 + ALPHA / SQRT5 * (de + do))) < 1e-12
    th = arr["theta"]
    assert th == pytest.approx((de + do) / (ALPHA * SQRT5), abs=1e-15)
    assert np.max(np.abs(exp_e11(-th) @ arr["M"] - np.eye(2) - arr["R"])) < 1e-12
    assert abs(arr["R"][0, 0] - (cmath.exp(-th) * (1 + th) - 1)) < 1e-12


def test_linear_cancellation_sweep():
    rng = np.random.default_rng(7)
    t = rng.uniform(-1, 1, 10_000)
    t[t == 0] = 0.5
    we, wo = rng.uniform(-1, 1, (2, 10_000))
    arr = block_arrays(we, wo, t)
    ratio = np.abs(arr["R"][:, 0, 0]) / (t**2 * arr["V"])
    assert np.max(ratio) <= 2.0
    c_prime = np.max(FRAME.adapted_norm(arr["R"]) / (arr["linear"] + t**2 * arr["V"]))
    assert np.isfinite(c_prime)


def test_theta_range_error():
    seq = ExplicitWeights({8: 3.0, 9: 3.0})
    with pytest.raises(ThetaRangeError, match="reduce"):
        block_decompose(seq, 3, 1.0)
    block_decompose(seq, 3, 1.0, check_theta=False)


# -- paired product -------------------------------------------------------------


def test_paired_product_zero_frequency():
    pp = paired_product(EX, 2, 9, 0.0)
    assert pp.phase_sum == 0
    assert np.allclose(pp.remainder_product, np.eye(2), atol=1e-14)
    lam = (ALPHA_BAR / ALPHA) ** pp.power
    assert np.allclose(pp.direct_normalized, np.diag([1.0, lam]), atol=1e-14)


def test_paired_product_example():
    pp = paired_product(EX, 3, 8, 0.5)
    assert pp.power == 12
    assert pp.reconstruction_error() < 1e-9


def test_paired_product_vanishing_tail_is_exact():
    seq = ZeroAfterWeights(12)
    pp = paired_product(seq, 5, 20, 0.8)  # 2K+2 >= 12
    assert np.array_equal(pp.remainder_product, np.eye(2, dtype=complex))
    assert pp.phase_sum == 0


def test_paired_product_sweep():
    for K in range(2, 30, 3):
        for span in (0, 7, 40):
            for t in (-1.0, -0.3, 0.6, 1.0):
                assert paired_product(EX, K, K + span, t).reconstruction_error() < 1e-9


def test_naive_product_is_not_the_factorisation():
    # the unordered reading D^{2n} exp(sum theta E11) prod(I + R_k) is off by far more than roundoff
    pp = paired_product(explicit([1.0] * 22), 1, 9, 1.0)
    ratio = (ALPHA_BAR / ALPHA) ** pp.power
    naive = np.diag([np.exp(pp.phase_sum), ratio]) @ pp.naive_remainder_product
    assert np.max(np.abs(naive - pp.direct_normalized)) > 1e-6
    assert pp.reconstruction_error() < 1e-12


# -- normalised profiles ---------------------------------------------------------


@pytest.mark.parametrize("method", METHODS)
def test_phi_methods_agree_with_oracle(method):
    t = np.linspace(-1, 1, 11)
    ref = h_bruteforce(EX, 15, t) / g(15)
    assert np.max(np.abs(phi(EX, 15, t, method).values - ref)) < 1e-9


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 7])
@pytest.mark.parametrize("method", METHODS)
def test_phi_small_k(method, k):
    t = np.array([-0.8, 0.0, 0.5])
    ref = h_bruteforce(EX, k, t) / g(k)
    assert np.max(np.abs(phi(EX, k, t, method).values - ref)) < 1e-12


def test_phi_trivial_cases():
    t = np.linspace(-5, 5, 7)
    assert phi(EX, 30, [0.0]).values[0] == 1
    assert np.all(phi(zero_weights(), 25, t).values == 1)


def test_phi_profile_invariants():
    t = np.linspace(-3, 3, 61)
    prof = phi(EX, 400, t)
    prof.check()
    assert np.all(np.abs(prof.values) <= 1 + 1e-12)
    assert np.max(np.abs(prof.values[::-1] - np.conj(prof.values))) < 1e-12


def test_phi_block_factored_long():
    t = np.linspace(-1, 1, 9)
    a = phi(EX, 300, t, "block-factored").values
    b = phi(EX, 300, t).values
    assert np.max(np.abs(a - b)) < 1e-12


def test_phi_unknown_method():
    with pytest.raises(ValueError):
        phi(EX, 5, [0.1], "fft")


def test_phi_limit_zero_weights():
    lim = phi_limit(zero_weights(), np.linspace(-1, 1, 5), eps=1e-6)
    assert lim.K == 0 and np.all(lim.values == 1)


def test_phi_limit_example_self_consistent():
    t = np.linspace(-1, 1, 21)
    lim = phi_limit(EX, t, eps=1e-6)
    assert lim.gap < 1e-6
    later = phi(EX, lim.K + 16, t).values
    assert np.max(np.abs(later - lim.values)) < 1e-5


def test_phi_limit_geometric_for_vanishing_weights():
    seq = ZeroAfterWeights(10)
    t = np.linspace(-1, 1, 21)
    lim = phi(seq, 200, t).values
    gaps = [np.max(np.abs(phi(seq, k, t).values - lim)) for k in range(12, 40, 2)]
    slope = np.polyfit(np.arange(12, 40, 2), np.log(gaps), 1)[0]
    # per layer pair the gap shrinks by about alpha^-4
    assert slope * 2 == pytest.approx(-4 * math.log(ALPHA), rel=0.05)


def test_phi_limit_cap():
    with pytest.raises(NonConvergenceError):
        phi_limit(EX, np.linspace(-1, 1, 5), eps=1e-12, cap=50)
