"""Acceptance suite: twelve end-to-end criteria with pinned tolerances.

Each test prints one [PASS]/[FAIL] line (visible with pytest -s, or in the
captured-output section on failure) and then asserts. The slow optimizer
criteria (6, 9, 10) dominate the runtime; the whole module takes roughly
twenty minutes on one core.

Run it alone with:  pytest tests/test_acceptance.py -v -s
"""

import math

import numpy as np
import pytest

from moelab import (
    GroupAlgebraElement,
    OptConfig,
    RandomChannel,
    Seed,
    certificate_arithmetic,
    entropy_deficit_rhs,
    generator_sum,
    haagerup_bound,
    maximally_entangled,
    maximize_output_sup_norm,
    norm_lower_bound,
    q_norm,
    random_density,
    run_haagerup_gap,
    run_kesten_sweep,
    run_main_estimate,
    run_moe_sweep,
    run_product_bound,
    sample_haar_unitary,
    von_neumann_entropy,
    word_reduce,
)
from moelab.experiments import OPT_STREAM_BASE

pytestmark = pytest.mark.slow


def report(num, label, ok):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {label}")
    assert ok, f"criterion {num} failed: {label}"


def random_element(rng, k, n_terms, max_len=3):
    terms = {}
    for _ in range(n_terms):
        length = int(rng.integers(0, max_len + 1))
        letters = [
            int(rng.integers(1, k + 1)) * (1 if rng.random() < 0.5 else -1)
            for _ in range(length)
        ]
        terms[word_reduce(letters, k)] = complex(rng.normal(), rng.normal())
    return GroupAlgebraElement.from_terms(k, terms)


def test_criterion_01_unitarity_and_determinism():
    worst = 0.0
    for n in (8, 64, 512):
        for s in range(100):
            u = sample_haar_unitary(n, Seed(s))
            worst = max(worst, float(np.abs(u.conj().T @ u - np.eye(n)).max()))
    reproducible = all(
        sample_haar_unitary(64, Seed(s)).tobytes() == sample_haar_unitary(64, Seed(s)).tobytes()
        for s in (0, 1, 2)
    )
    report(1, "unitarity <= 1e-12 and bit-identical reproduction",
           worst <= 1e-12 and reproducible)


def test_criterion_02_haar_trace_moments():
    traces = np.array(
        [np.trace(sample_haar_unitary(64, Seed(20_000 + s))) for s in range(1000)]
    )
    mean_norm_trace = abs(traces.mean()) / 64
    second = float(np.mean(np.abs(traces) ** 2))
    report(2, "Haar moments: |mean Tr U / n| < 0.01, E|Tr U|^2 in [0.85, 1.15]",
           mean_norm_trace < 0.01 and 0.85 <= second <= 1.15)


def test_criterion_03_kesten_strong_convergence():
    rec = run_kesten_sweep(2, [64, 512], seeds=(0, 1, 2, 3, 4), m_moment=20)
    med = rec.results["median_norm_by_n"]
    mad = rec.results["median_abs_dev_by_n"]
    lower = norm_lower_bound(generator_sum(2), 20)
    ok = (
        abs(med["512"] - 2.0) <= 0.05 * 2.0
        and mad["512"] < mad["64"]
        and 1.9 <= lower <= 2.0
    )
    report(3, "kesten: median within 5% of 2, deviation shrinking, bracket in [1.9, 2.0]", ok)


def test_criterion_04_haagerup_exactness():
    rng = np.random.default_rng(12345)
    ok = True
    for trial in range(200):
        k = 2 if trial % 2 == 0 else 3
        f = random_element(rng, k, n_terms=4)
        upper = haagerup_bound(f)
        for m in range(1, 11):
            if norm_lower_bound(f, m) > upper + 1e-9:
                ok = False
        qs = [q_norm(f, q) for q in (2, 4, 6, 8)]
        if any(b < a - 1e-12 for a, b in zip(qs, qs[1:])):
            ok = False
    report(4, "200 elements: lower bound <= Haagerup bound for m <= 10, q-norms monotone", ok)


def test_criterion_05_traceless_triple_norm():
    rec = run_haagerup_gap(8, 256, num_matrices=20, seeds=(0, 1, 2))
    cells = [c for c in rec.results["cells"] if c["family"] == "traceless"]
    hits = [c["empirical"] <= (3.0 / 8.0) * c["hs_norm"] * 1.15 for c in cells]
    frac = float(np.mean(hits))
    report(5, f"traceless bound holds in {frac:.1%} of 60 cells (need >= 95%)",
           len(cells) == 60 and frac >= 0.95)


def test_criterion_06_main_estimate():
    rec = run_main_estimate(8, 256, OptConfig(starts=32), seeds=(0, 1, 2))
    ok = rec.results["asserted"] and all(
        c["best"] <= 0.43125 for c in rec.results["cells"]
    )
    best = max(c["best"] for c in rec.results["cells"])
    report(6, f"max L2 distance {best:.4f} <= 0.43125 in every seed", ok)


def test_criterion_07_product_bound():
    rec = run_product_bound(4, 128, seeds=(0, 1, 2, 3, 4))
    entropy_ok = all(c["bell_entropy"] <= 2.4260 for c in rec.results["cells"])
    overlap_ok = all(c["overlap_err"] <= 1e-10 for c in rec.results["cells"])

    # dense oracle for the Gram formula at small sizes
    def dense_bell(ch):
        k, n = ch.k, ch.n
        u = ch.unitaries.matrices
        omega = maximally_entangled(n).vector
        x = np.outer(omega, omega.conj())
        c = np.zeros((k * k, k * k), dtype=complex)
        for i in range(k):
            for ip in range(k):
                left = np.kron(u[i], u[ip].conj())
                for j in range(k):
                    for jp in range(k):
                        right = np.kron(u[j].conj().T, u[jp].T)
                        c[i * k + ip, j * k + jp] = np.trace(left @ x @ right) / (k * k)
        return c

    oracle_ok = True
    for k in (2, 3):
        ch = RandomChannel.sample(8, k, Seed(100 + k))
        diff = np.abs(ch.bell_output().matrix - dense_bell(ch)).max()
        oracle_ok = oracle_ok and diff <= 1e-10
    report(7, "bell entropy <= 2.4260, overlap = 1/4 +- 1e-10, Gram formula matches oracle",
           entropy_ok and overlap_ok and oracle_ok)


def test_criterion_08_certificate_arithmetic():
    small = certificate_arithmetic(1e7, 3.0 / 1e7)
    big_k = math.ceil(math.exp(18) * 1.01)
    big = certificate_arithmetic(big_k, 3.0 / big_k)
    grid = np.geomspace(1e6, 1e9, 50)
    flags = [certificate_arithmetic(float(k), 3.0 / k).violation for k in grid]
    flips = sum(a != b for a, b in zip(flags, flags[1:]))
    report(8, "certificate: false at 1e7, true at ceil(e^18 * 1.01), single monotone flip",
           not small.violation and big.violation and flips == 1)


def test_criterion_09_single_channel_entropy_bound():
    rec = run_moe_sweep(8, 256, OptConfig(starts=32), seeds=(0, 1, 2))
    floor = math.log(8) - 9.0 / 8.0
    ok = rec.results["asserted"] and all(
        c["best"] >= floor for c in rec.results["cells"]
    )
    worst = min(c["best"] for c in rec.results["cells"])
    report(9, f"min output entropy {worst:.4f} >= log 8 - 9/8 = {floor:.4f} in every seed", ok)


def test_criterion_10_sup_norm_constant():
    bests = []
    for s in (0, 1, 2):
        ch = RandomChannel.sample(256, 4, Seed(s))
        cfg = OptConfig(starts=32, seed=Seed(s, OPT_STREAM_BASE))
        bests.append(maximize_output_sup_norm(ch, cfg).best_value)
    ok = all(0.25 <= b <= 0.8625 for b in bests)
    report(10, f"sup norm best in [0.25, 0.8625] for all seeds (max {max(bests):.4f})", ok)


def test_criterion_11_entropy_deficit_inequality():
    ok = True
    for i in range(10_000):
        k = 2 + i % 15
        rho = random_density(k, Seed(1_000 + i))
        slack = entropy_deficit_rhs(rho) - (math.log(k) - von_neumann_entropy(rho))
        if slack < -1e-9:
            ok = False
            break
    report(11, "log k - H(X) <= k Tr(X - I/k)^2 on 10^4 random densities", ok)


def test_criterion_12_structural_invariants():
    rng = np.random.default_rng(777)
    trace_ok = psd_ok = dual_ok = pair_ok = True
    for n in (8, 32, 128):
        for k in (2, 4, 8):
            ch = RandomChannel.sample(n, k, Seed(n * 1000 + k))
            for i in range(100):
                x = random_density(n, Seed(2_000_000 + n * 1000 + k * 100 + i))
                out = ch.apply(x)
                if abs(np.trace(out.matrix).real - 1.0) > 1e-10:
                    trace_ok = False
                if out.eigenvalues().min() < -1e-10:
                    psd_ok = False
                a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
                lhs = np.trace(out.matrix @ a)
                rhs = np.trace(x.matrix @ ch.adjoint_apply(a))
                if abs(lhs - rhs) > 1e-10 * max(1.0, float(np.linalg.norm(a))):
                    dual_ok = False
                h = a + a.conj().T
                paired = float(np.real(np.trace(out.matrix @ h)))
                if paired > ch.empirical_triple_norm(h) + 1e-9:
                    pair_ok = False
    report(12, "trace, positivity, duality, and pairing inequality on the (n, k) sweep",
           trace_ok and psd_ok and dual_ok and pair_ok)
