"""Group-algebra tests: convolution, trace, norm brackets, exact moments.

Expected values here are either hand convolutions, binomial identities
(central binomial coefficients for the two-generator moment sequence), or
dual-route checks where the combinatorial fast path is replayed through the
generic convolution.
"""

import json
import math

import numpy as np
import pytest

from moelab import (
    GroupAlgebraElement,
    SupportCapExceeded,
    coeff_element,
    delta,
    generator_sum,
    generator_sum_lower_bound,
    generator_sum_moment,
    haagerup_bound,
    identity,
    multiply,
    norm2,
    norm_lower_bound,
    q_norm,
    star,
    tau,
    triple_norm_bound,
    triple_norm_bracket,
    word_inverse,
    word_reduce,
)


def random_element(rng, k, n_terms=3, max_len=3):
    """Random element supported on reduced words of bounded length."""
    terms = {}
    for _ in range(n_terms):
        length = int(rng.integers(0, max_len + 1))
        letters = []
        for _ in range(length):
            sign = 1 if rng.random() < 0.5 else -1
            letters.append(sign * int(rng.integers(1, k + 1)))
        terms[word_reduce(letters, k)] = complex(rng.normal(), rng.normal())
    return GroupAlgebraElement.from_terms(k, terms)


# === words ===

def test_word_reduce():
    assert word_reduce([1, -1]) == ()
    assert word_reduce([1, 2, -2, -1]) == ()
    assert word_reduce([1, 2, -1]) == (1, 2, -1)
    assert word_reduce([1, -2, 2, 1]) == (1, 1)


def test_word_reduce_validates_letters():
    with pytest.raises(ValueError):
        word_reduce([0])
    with pytest.raises(ValueError):
        word_reduce([3], k=2)


def test_word_inverse():
    assert word_inverse((1, 2, -1)) == (1, -2, -1)
    assert word_inverse(()) == ()


# === algebra basics ===

def test_convolution_with_seam_cancellation():
    # (d_u1 + d_u2)(d_u1^-1 + d_u2^-1) = 2 d_e + d_{u1 u2^-1} + d_{u2 u1^-1}
    f = generator_sum(2)
    p = multiply(f, star(f))
    assert p.support_size() == 3
    assert p.coefficient(()) == 2
    assert p.coefficient((1, -2)) == 1
    assert p.coefficient((2, -1)) == 1
    assert tau(p) == 2


def test_star_is_involution_and_antilinear():
    rng = np.random.default_rng(0)
    f = random_element(rng, 2)
    g = star(star(f))
    assert g.terms == f.terms
    h = star(2j * f)
    for w, c in f.terms.items():
        assert h.coefficient(word_inverse(w)) == pytest.approx(np.conj(2j * c))


def test_tau_picks_identity_coefficient():
    f = GroupAlgebraElement.from_terms(2, {(): 0.5 + 1j, (1,): 3.0})
    assert tau(f) == 0.5 + 1j
    assert tau(delta(2, (1, 2))) == 0


def test_norm2():
    f = GroupAlgebraElement.from_terms(2, {(): 3.0, (1, 2): 4j})
    assert norm2(f) == pytest.approx(5.0)


def test_trace_property_tau_fg_equals_tau_gf():
    rng = np.random.default_rng(1)
    for _ in range(10):
        f = random_element(rng, 3)
        g = random_element(rng, 3)
        assert tau(multiply(f, g)) == pytest.approx(tau(multiply(g, f)), abs=1e-12)


def test_from_terms_merges_and_drops_zeros():
    f = GroupAlgebraElement.from_terms(2, {(1, -1): 2.0, (): -2.0, (1,): 0.0})
    assert f.support_size() == 0


def test_support_cap_raises():
    f = generator_sum(3)
    p = f
    with pytest.raises(SupportCapExceeded):
        for _ in range(10):
            p = multiply(p, f, support_cap=50)


def test_json_round_trip():
    rng = np.random.default_rng(2)
    f = random_element(rng, 3)
    g = GroupAlgebraElement.from_json(f.to_json())
    assert g.k == f.k
    assert g.terms == f.terms
    json.loads(f.to_json())  # valid JSON document


# === norms and moments ===

def test_q_norm_binomial_values():
    # moments of (sum u_i)(sum u_i)^* at k=2 are central binomials C(2m, m)
    f = generator_sum(2)
    assert q_norm(f, 2) == pytest.approx(math.sqrt(2.0))
    assert q_norm(f, 4) == pytest.approx(6 ** 0.25)
    assert q_norm(f, 6) == pytest.approx(math.comb(6, 3) ** (1 / 6))


def test_q_norm_requires_even_positive_order():
    f = generator_sum(2)
    with pytest.raises(ValueError):
        q_norm(f, 3)
    with pytest.raises(ValueError):
        q_norm(f, 0)


def test_norm_lower_bound_generator_pair():
    f = generator_sum(2)
    assert norm_lower_bound(f, 1) == pytest.approx(math.sqrt(2.0))
    # consecutive-moment ratio at m=20: sqrt(C(40,20)/C(38,19)) = sqrt(3.9)
    assert norm_lower_bound(f, 20) == pytest.approx(1.9748417658131499, abs=1e-13)
    assert norm_lower_bound(f, 20) == pytest.approx(
        math.sqrt(math.comb(40, 20) / math.comb(38, 19))
    )


def test_norm_lower_bound_identity_is_one():
    assert norm_lower_bound(identity(2), 5) == pytest.approx(1.0)


def test_norm_lower_bound_monotone_and_below_two():
    f = generator_sum(2)
    vals = [norm_lower_bound(f, m) for m in range(1, 8)]
    for a, b in zip(vals, vals[1:]):
        assert b >= a - 1e-12
    assert vals[-1] < 2.0


def test_haagerup_bound_shells():
    assert haagerup_bound(GroupAlgebraElement.from_terms(2, {(): 3 - 4j})) == pytest.approx(5.0)
    assert haagerup_bound(GroupAlgebraElement.from_terms(2, {(1, 2): 2j})) == pytest.approx(6.0)
    assert haagerup_bound(generator_sum(2)) == pytest.approx(2.0 * math.sqrt(2.0))
    assert haagerup_bound(generator_sum(5)) == pytest.approx(2.0 * math.sqrt(5.0))


def test_sandwich_on_random_elements():
    rng = np.random.default_rng(3)
    for trial in range(20):
        k = 2 if trial % 2 == 0 else 3
        f = random_element(rng, k)
        upper = haagerup_bound(f)
        for m in (1, 3, 5):
            assert norm_lower_bound(f, m) <= upper + 1e-9


def test_q_norm_monotone_on_random_elements():
    rng = np.random.default_rng(4)
    for trial in range(20):
        k = 2 if trial % 2 == 0 else 3
        f = random_element(rng, k)
        qs = [q_norm(f, q) for q in (2, 4, 6, 8)]
        for a, b in zip(qs, qs[1:]):
            assert b >= a - 1e-12


# === coefficient elements ===

def test_coeff_element_structure():
    a = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    f = coeff_element(a)
    assert f.coefficient(()) == pytest.approx((1.0 + 4.0) / 2)
    assert f.coefficient((1, -2)) == pytest.approx(2.0 / 2)
    assert f.coefficient((2, -1)) == pytest.approx(3.0 / 2)
    assert f.support_size() == 3


def test_triple_norm_bound_formula():
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    assert triple_norm_bound(e12) == pytest.approx(1.5)
    a = np.array([[2.0, 1j], [0, 0]], dtype=complex)
    # |Tr A|/k + (3/k) sqrt(sum off-diag |a_ij|^2)
    assert triple_norm_bound(a) == pytest.approx(1.0 + 1.5)
    # identical to the Haagerup bound of the coefficient element
    assert triple_norm_bound(a) == pytest.approx(haagerup_bound(coeff_element(a)))


def test_triple_norm_bracket_e12():
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    lo, hi = triple_norm_bracket(e12, m=1)
    assert lo == pytest.approx(0.5)
    assert hi == pytest.approx(1.5)
    assert lo <= hi


def test_identity_coefficient_matrix_brackets_one():
    lo, hi = triple_norm_bracket(np.eye(3, dtype=complex), m=4)
    assert lo <= 1.0 + 1e-12
    assert hi >= 1.0 - 1e-12


# === exact generator-sum moments ===

def test_generator_sum_moment_central_binomials():
    for m in range(11):
        assert generator_sum_moment(2, m) == math.comb(2 * m, m)


def test_generator_sum_moment_matches_convolution_route():
    # replay the walk recursion through the generic product at k=3
    f = generator_sum(3)
    p = multiply(f, star(f))
    acc = identity(3)
    for m in range(1, 5):
        acc = multiply(acc, p)
        assert generator_sum_moment(3, m) == int(round(tau(acc).real))


def test_generator_sum_lower_bound_matches_generic():
    f = generator_sum(2)
    for m in (1, 5, 20):
        assert generator_sum_lower_bound(2, m) == pytest.approx(
            norm_lower_bound(f, m), abs=1e-12
        )


def test_generator_sum_lower_bound_below_free_norm():
    for k in (2, 3, 5):
        limit = 2.0 * math.sqrt(k - 1)
        vals = [generator_sum_lower_bound(k, m) for m in (1, 5, 10, 20)]
        for a, b in zip(vals, vals[1:]):
            assert b >= a - 1e-12
        assert vals[-1] <= limit + 1e-12
