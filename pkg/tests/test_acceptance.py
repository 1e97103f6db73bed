"""Acceptance criteria, each at its stated tolerance and runtime budget.

Run with ``pytest tests/test_acceptance.py``; a summary section lists one
PASS/FAIL line per criterion.
"""

import filecmp
import math
import sys
import time

import numpy as np
import pytest

from zeckendorf_ew import cli
from zeckendorf_ew.bounds import (
    atomic_decay,
    convergence_experiment,
    example_asymptotics,
    single_constant,
    stabilized_limit,
)
from zeckendorf_ew.charfn import FRAME, block_arrays, h_bruteforce, h_matrix, h_scalar, paired_product, phi
from zeckendorf_ew.distribution import dist_enumerate, dist_exact
from zeckendorf_ew.numeration import g
from zeckendorf_ew.verify import run_battery
from zeckendorf_ew.weights import ExampleWeights, ExplicitWeights, ZeroAfterWeights

EX = ExampleWeights()
SEED = 20240607


def random_weights(rng, n=24, scale=2.0):
    return ExplicitWeights({j: float(w) for j, w in zip(range(2, n + 2), rng.uniform(-scale, scale, n))})


def test_1_identity_battery(acceptance):
    start = time.perf_counter()
    report = run_battery(seed=SEED, trials=10_000)
    elapsed = time.perf_counter() - start
    by_name = {c.name: c for c in report.checks}
    required = {
        "a": ["Delta_{2k+1}·Delta_{2k} = 0"],
        "b": ["(B_tilde)11 = alpha^2 + (alpha/sqrt5)(delta_2k + delta_2k+1)"],
        "c": ["(R)11 = exp(-theta)(1+theta) - 1"],
        "d": ["P_inv·A·P = D", "det P = sqrt5", "||A||_A = alpha", "||A^2||_A = alpha^2"],
    }
    tols = {"a": 1e-30, "b": 1e-12, "c": 1e-12, "d": 1e-13}
    worst = {part: max(by_name[n].worst for n in names) for part, names in required.items()}
    ok = all(worst[p] <= tols[p] for p in worst) and by_name[required["a"][0]].trials == 10_000
    passed = ok and elapsed < 5.0
    detail = ", ".join(f"{p}: worst {worst[p]:.3g} (tol {tols[p]:g})" for p in worst) + f"; {elapsed:.2f} s"
    acceptance(1, "identity battery", passed, detail)
    assert passed


def test_2_oracle_equivalence(acceptance):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst_h = 0.0
    for _ in range(200):
        seq = random_weights(rng)
        k = int(rng.integers(0, 21))
        t = float(rng.uniform(-3.0, 3.0))
        ref = h_bruteforce(seq, k, t)
        errs = [abs(h_scalar(seq, k, t) - ref)]
        if k >= 1:
            errs.append(abs(h_matrix(seq, k, t) - ref))
        worst_h = max(worst_h, max(errs) / g(k))
    worst_d = 0.0
    same_support = True
    for seq in [EX, ZeroAfterWeights(9)] + [random_weights(rng) for _ in range(8)]:
        for k in range(0, 19):
            a, b = dist_exact(seq, k), dist_enumerate(seq, g(k))
            if len(a) != len(b) or np.max(np.abs(a.values - b.values)) > 1e-12:
                same_support = False
                continue
            worst_d = max(worst_d, float(np.max(np.abs(a.masses - b.masses))))
    elapsed = time.perf_counter() - start
    passed = worst_h < 1e-9 and same_support and worst_d < 1e-10 and elapsed < 60.0
    detail = (f"max |h - h_brute|/G_k = {worst_h:.3g} (tol 1e-9), "
              f"per-atom mass error {worst_d:.3g} (tol 1e-10), supports match: {same_support}; {elapsed:.2f} s")
    acceptance(2, "oracle equivalence", passed, detail)
    assert passed


def test_3_fourier_consistency(acceptance):
    rng = np.random.default_rng(SEED + 3)
    start = time.perf_counter()
    t = np.linspace(-3.0, 3.0, 50)
    worst = 0.0
    for seq in (EX, random_weights(rng), random_weights(rng, scale=0.5)):
        for k in range(0, 19):
            d = dist_exact(seq, k)
            worst = max(worst, float(np.max(np.abs(d.char_fn(t) - phi(seq, k, t).values))))
    elapsed = time.perf_counter() - start
    passed = worst < 1e-9 and elapsed < 30.0
    acceptance(3, "Fourier consistency", passed, f"max deviation {worst:.3g} (tol 1e-9); {elapsed:.2f} s")
    assert passed


def test_4_factorization_reconstruction(acceptance):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for K in range(2, 43):
        for span in (0, 1, 2, 3, 5, 8, 13, 21, 34, 40):
            for t in (-1.0, -0.55, -0.1, 0.25, 0.7, 1.0):
                worst = max(worst, paired_product(EX, K, K + span, t).reconstruction_error())
                count += 1
    elapsed = time.perf_counter() - start
    passed = worst < 1e-9 and elapsed < 10.0
    acceptance(4, "paired-product reconstruction", passed,
               f"{count} products, worst relative entry error {worst:.3g} (tol 1e-9); {elapsed:.2f} s")
    assert passed


def test_5_quadratic_remainder(acceptance):
    rng = np.random.default_rng(SEED + 5)
    n = 10_000
    t = rng.uniform(-1.0, 1.0, n)
    t[t == 0.0] = 0.5
    # example family blocks at random depths, then uniform weights in [-1, 1]
    k = rng.integers(1, 10_000, n)
    sweeps = {
        "example": (EX.weights(2 * k + 2), EX.weights(2 * k + 3)),
        "uniform": tuple(rng.uniform(-1.0, 1.0, (2, n))),
    }
    c_quad, c_prime = {}, {}
    for name, (we, wo) in sweeps.items():
        arr = block_arrays(we, wo, t)
        keep = arr["V"] > 0
        quad = t[keep] ** 2 * arr["V"][keep]
        c_quad[name] = float(np.max(np.abs(arr["R"][keep, 0, 0]) / quad))
        c_prime[name] = float(np.max(FRAME.adapted_norm(arr["R"][keep]) / (arr["linear"][keep] + quad)))
    passed = max(c_quad.values()) <= 2.0 and all(math.isfinite(c) for c in c_prime.values())
    detail = ", ".join(f"{s}: max |R11|/(t^2 V) = {c_quad[s]:.4g}, fitted C' = {c_prime[s]:.4g}" for s in sweeps)
    acceptance(5, "quadratic remainder", passed, detail)
    assert passed


def test_6_atomic_geometric_decay(acceptance):
    start = time.perf_counter()
    fit = atomic_decay(ZeroAfterWeights(5), depths=range(5, 31))
    elapsed = time.perf_counter() - start
    passed = fit.relative_error < 0.15 and elapsed < 10.0
    acceptance(6, "atomic-case decay", passed,
               f"slope {fit.slope:.5f} vs -2 log alpha = {fit.expected_slope:.5f} "
               f"(relative error {fit.relative_error:.2%}, tol 15%); {elapsed:.2f} s")
    assert passed


def test_7_example_asymptotics(acceptance):
    start = time.perf_counter()
    rows = example_asymptotics([10**3, 10**4, 10**5, 10**6])
    ratio = EX.l1_partial(10**6) / EX.l1_partial(10**2)
    elapsed = time.perf_counter() - start
    in_window = all(0.5 <= r.tail_times_log_m <= 2.0 for r in rows)
    passed = in_window and ratio > 10 and elapsed < 30.0
    cols = ", ".join(f"m=1e{round(math.log10(r.m))}: {r.tail_times_log_m:.6f}" for r in rows)
    acceptance(7, "example asymptotics", passed,
               f"tail*log m {cols}; l1(1e6)/l1(1e2) = {ratio:.2f}; {elapsed:.2f} s")
    assert passed


def test_8_end_to_end_bound(acceptance):
    start = time.perf_counter()
    limit = stabilized_limit(EX)
    rows = convergence_experiment(EX, [10, 15, 20, 25], limit=limit)
    elapsed = time.perf_counter() - start
    best = [min(r.reports, key=lambda b: b.rhs) for r in rows]
    C = single_constant(best)
    lhs = [r.lhs for r in rows]
    dominated = all(r.lhs <= C * r.best_rhs * (1 + 1e-12) for r in rows)
    trend = all(b <= a + 1e-3 for a, b in zip(lhs, lhs[1:]))
    passed = math.isfinite(C) and C > 0 and dominated and trend and elapsed < 300.0
    acceptance(8, "end-to-end bound sanity", passed,
               f"lhs {[round(x, 5) for x in lhs]}, single C = {C:.4g}, limit K = {limit.K} "
               f"(Cauchy gap {limit.gap:.2e}); {elapsed:.1f} s")
    assert passed


def test_9_cli_determinism(acceptance, tmp_path, capsys):
    runs = []
    for i in range(2):
        base = tmp_path / f"run{i}"
        codes = (
            cli.main(["verify", "--seed", str(SEED), "--out", str(base / "verify")]),
            cli.main(["example", "--seed", str(SEED), "--out", str(base / "example")]),
        )
        runs.append((base, codes))
    capsys.readouterr()
    (a, codes_a), (b, codes_b) = runs
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    identical = bool(files) and all(filecmp.cmp(a / f, b / f, shallow=False) for f in files)
    identical = identical and files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    passed = identical and codes_a == codes_b == (0, 0)
    acceptance(9, "CLI determinism", passed, f"{len(files)} files byte-identical across two runs: {identical}")
    assert passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
