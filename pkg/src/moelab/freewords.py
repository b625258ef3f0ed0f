"""Exact arithmetic in the group algebra of a free group.

Words over the free group F_k are encoded as tuples of signed small
integers: letter ``+i`` is the i-th generator, ``-i`` its inverse, with
``1 <= i <= k``. The empty tuple is the identity. A word is reduced when no
adjacent pair cancels; all stored words are kept reduced.

A group algebra element is a finitely supported map from reduced words to
complex coefficients. Products are convolutions with free reduction, the
star is coefficient conjugation composed with word inversion, and the trace
tau reads off the coefficient of the identity. tau is the expectation that
matrix moments of independent Haar unitaries converge to as the dimension
grows, which is what makes this module the exact reference side for the
matrix experiments.

Norm estimates on an element f (as a convolution operator on square-summable
functions on F_k):

* ``haagerup_bound``: sum over word lengths l of (l+1) times the l2 norm of
  the length-l part of f. An upper bound on the operator norm.
* ``norm_lower_bound``: ratio of consecutive moments of f f^*,
  sqrt(tau(p^m) / tau(p^(m-1))) with p = f f^*. A lower bound that is
  nondecreasing in m by moment log-convexity; m = 1 gives the l2 norm of f.

Memory is bounded by pruning coefficients below PRUNE_TOL during products
(irrelevant at test tolerances) and by refusing intermediate supports above
a configurable cap rather than silently truncating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Word",
    "SupportCapExceeded",
    "word_reduce",
    "word_inverse",
    "GroupAlgebraElement",
    "delta",
    "identity",
    "generator_sum",
    "multiply",
    "star",
    "tau",
    "norm2",
    "q_norm",
    "norm_lower_bound",
    "haagerup_bound",
    "coeff_element",
    "triple_norm_bound",
    "triple_norm_bracket",
    "generator_sum_moment",
    "generator_sum_lower_bound",
]

Word = tuple[int, ...]

#: coefficients with |c| below this are dropped during products
PRUNE_TOL = 1e-30

#: default limit on the support size of any intermediate product
DEFAULT_SUPPORT_CAP = 1_000_000


class SupportCapExceeded(RuntimeError):
    """A product grew past the configured support cap."""


def _check_letter(letter: int, k: int | None) -> None:
    if not isinstance(letter, int) or isinstance(letter, bool) or letter == 0:
        raise ValueError(f"letters must be nonzero signed integers, got {letter!r}")
    if k is not None and abs(letter) > k:
        raise ValueError(f"letter {letter} references a generator outside 1..{k}")


def word_reduce(letters: Sequence[int], k: int | None = None) -> Word:
    """Reduce a letter sequence by cancelling adjacent inverse pairs.

    Idempotent. When ``k`` is given, letters outside ``1..k`` (in absolute
    value) are rejected.
    """
    out: list[int] = []
    for letter in letters:
        _check_letter(int(letter), k)
        letter = int(letter)
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inverse(word: Sequence[int]) -> Word:
    """Inverse of a reduced word: reverse the letters and flip the signs."""
    return tuple(-l for l in reversed(word))


@dataclass(frozen=True)
class GroupAlgebraElement:
    """Finitely supported complex function on reduced words of F_k.

    ``terms`` never stores zero coefficients. Instances are treated as
    immutable; operations return new elements.
    """

    k: int
    terms: dict[Word, complex] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, k: int, terms: Mapping[Sequence[int], complex]) -> "GroupAlgebraElement":
        """Build an element, reducing the words and merging collisions."""
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise ValueError(f"rank k must be a positive integer, got {k!r}")
        acc: dict[Word, complex] = {}
        for raw, c in terms.items():
            w = word_reduce(tuple(raw), k)
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite coefficient at word {raw!r}")
            acc[w] = acc.get(w, 0j) + c
        return cls(k, {w: c for w, c in acc.items() if c != 0})

    def support_size(self) -> int:
        return len(self.terms)

    def coefficient(self, word: Sequence[int]) -> complex:
        return self.terms.get(word_reduce(word, self.k), 0j)

    # -- arithmetic sugar; the module-level functions are the primary API --

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        _check_same_algebra(self, other)
        acc = dict(self.terms)
        for w, c in other.terms.items():
            acc[w] = acc.get(w, 0j) + c
        return GroupAlgebraElement(self.k, {w: c for w, c in acc.items() if c != 0})

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "GroupAlgebraElement":
        c = complex(scalar)
        if c == 0:
            return GroupAlgebraElement(self.k, {})
        return GroupAlgebraElement(self.k, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, GroupAlgebraElement):
            return multiply(self, other)
        return self.__rmul__(other)

    def to_json(self) -> str:
        """Debug serialization: a sorted list of {word, re, im} records."""
        items = sorted(self.terms.items(), key=lambda wc: (len(wc[0]), wc[0]))
        return json.dumps(
            {
                "k": self.k,
                "terms": [
                    {"word": list(w), "re": c.real, "im": c.imag} for w, c in items
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroupAlgebraElement":
        data = json.loads(text)
        return cls.from_terms(
            int(data["k"]),
            {tuple(t["word"]): complex(t["re"], t["im"]) for t in data["terms"]},
        )


def _check_same_algebra(f: GroupAlgebraElement, g: GroupAlgebraElement) -> None:
    if f.k != g.k:
        raise ValueError(f"elements live over different free groups: k={f.k} vs k={g.k}")


def delta(k: int, word: Sequence[int]) -> GroupAlgebraElement:
    """The indicator of a single word."""
    return GroupAlgebraElement.from_terms(k, {tuple(word): 1.0})


def identity(k: int) -> GroupAlgebraElement:
    return delta(k, ())


def generator_sum(k: int) -> GroupAlgebraElement:
    """sum_i delta_{u_i}, the generator sum whose norm is 2 sqrt(k-1)."""
    return GroupAlgebraElement.from_terms(k, {(i,): 1.0 for i in range(1, k + 1)})


def multiply(
    f: GroupAlgebraElement,
    g: GroupAlgebraElement,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    prune: float = PRUNE_TOL,
) -> GroupAlgebraElement:
    """Convolution product with free reduction.

    Raises SupportCapExceeded when the accumulated support grows past
    ``support_cap``; the cap bounds memory, it never truncates a result.
    """
    _check_same_algebra(f, g)
    acc: dict[Word, complex] = {}
    for wf, cf in f.terms.items():
        for wg, cg in g.terms.items():
            # splice with cancellation at the seam; both inputs are reduced
            i = len(wf)
            j = 0
            while i > 0 and j < len(wg) and wf[i - 1] == -wg[j]:
                i -= 1
                j += 1
            w = wf[:i] + wg[j:]
            acc[w] = acc.get(w, 0j) + cf * cg
        if len(acc) > support_cap:
            raise SupportCapExceeded(
                f"product support exceeded cap of {support_cap} words"
            )
    return GroupAlgebraElement(f.k, {w: c for w, c in acc.items() if abs(c) > prune})


def star(f: GroupAlgebraElement) -> GroupAlgebraElement:
    """Adjoint: f^*(w) = conj(f(w^{-1}))."""
    return GroupAlgebraElement(
        f.k, {word_inverse(w): c.conjugate() for w, c in f.terms.items()}
    )


def tau(f: GroupAlgebraElement) -> complex:
    """Canonical trace: the coefficient of the identity word."""
    return f.terms.get((), 0j)


def norm2(f: GroupAlgebraElement) -> float:
    """l2 norm of the coefficients, sqrt(tau(f f^*)) by Parseval."""
    return math.sqrt(sum(abs(c) ** 2 for c in f.terms.values()))


def _pairing(x: GroupAlgebraElement, y: GroupAlgebraElement) -> complex:
    # tau(x y) = sum_w x(w) y(w^{-1}); iterate over the smaller support
    if len(y.terms) < len(x.terms):
        x, y = y, x
    total = 0j
    for w, c in x.terms.items():
        cy = y.terms.get(word_inverse(w))
        if cy is not None:
            total += c * cy
    return total


def _power_moments(
    p: GroupAlgebraElement, exponents: Iterable[int], support_cap: int
) -> dict[int, float]:
    """tau(p^m) for each requested m, via powers up to ceil(max/2) only."""
    wanted = sorted(set(int(m) for m in exponents))
    if wanted and wanted[0] < 0:
        raise ValueError("moment exponents must be >= 0")
    out: dict[int, float] = {}
    if not wanted:
        return out
    top = max(wanted)
    powers: dict[int, GroupAlgebraElement] = {0: identity(p.k), 1: p}
    needed = (top + 1) // 2
    for j in range(2, needed + 1):
        powers[j] = multiply(powers[j - 1], p, support_cap=support_cap)
    for m in wanted:
        if m == 0:
            out[0] = 1.0
        else:
            a = (m + 1) // 2
            b = m - a
            if a not in powers:
                powers[a] = multiply(powers[a - 1], p, support_cap=support_cap)
            out[m] = _pairing(powers[a], powers[b]).real
    return out


def q_norm(
    f: GroupAlgebraElement, q: int, support_cap: int = DEFAULT_SUPPORT_CAP
) -> float:
    """Non-commutative q-norm (tau((f f^*)^(q/2)))^(1/q) for even q >= 2.

    Exact convolution arithmetic; nondecreasing in q and bounded by the
    operator norm, which it approaches as q grows.
    """
    if not isinstance(q, int) or isinstance(q, bool) or q < 2 or q % 2 != 0:
        raise ValueError(f"q must be an even integer >= 2, got {q!r}")
    p = multiply(f, star(f), support_cap=support_cap)
    m = q // 2
    val = _power_moments(p, [m], support_cap)[m]
    return max(val, 0.0) ** (1.0 / q)


def norm_lower_bound(
    f: GroupAlgebraElement, m: int, support_cap: int = DEFAULT_SUPPORT_CAP
) -> float:
    """Moment-ratio lower bound sqrt(tau(p^m) / tau(p^(m-1))), p = f f^*.

    Valid because the spectral measure of p sits inside [0, ||f||^2], and
    nondecreasing in m by Cauchy-Schwarz applied to consecutive moments.
    m = 1 reduces to the l2 norm of f.
    """
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ValueError(f"moment order m must be an integer >= 1, got {m!r}")
    p = multiply(f, star(f), support_cap=support_cap)
    moments = _power_moments(p, [m - 1, m], support_cap)
    prev, cur = moments[m - 1], moments[m]
    if prev <= 0.0 or cur <= 0.0:
        return 0.0
    return math.sqrt(cur / prev)


def haagerup_bound(f: GroupAlgebraElement) -> float:
    """Length-weighted upper bound sum_l (l+1) ||f_l||_2 on the operator norm.

    f_l is the restriction of f to words of length l; functions supported on
    a single length l have operator norm at most (l+1) times their l2 norm.
    """
    by_length: dict[int, float] = {}
    for w, c in f.terms.items():
        l = len(w)
        by_length[l] = by_length.get(l, 0.0) + abs(c) ** 2
    return sum((l + 1) * math.sqrt(s) for l, s in sorted(by_length.items()))


# ---------------------------------------------------------------------------
# coefficient matrices: A -> k^{-1} sum_ij a_ij u_i u_j^{-1}
# ---------------------------------------------------------------------------


def coeff_element(a, k: int | None = None) -> GroupAlgebraElement:
    """The element k^{-1} sum_ij a_ij delta(u_i u_j^{-1}) of a k x k matrix a.

    Diagonal entries collapse onto the identity word, so only the trace of
    the diagonal survives; off-diagonal entries sit on length-2 words.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
    kk = a.shape[0]
    if k is not None and k != kk:
        raise ValueError(f"matrix size {kk} does not match k={k}")
    terms: dict[Word, complex] = {(): complex(np.trace(a)) / kk}
    for i in range(kk):
        for j in range(kk):
            if i != j:
                terms[(i + 1, -(j + 1))] = complex(a[i, j]) / kk
    return GroupAlgebraElement.from_terms(kk, terms)


def triple_norm_bound(a, k: int | None = None) -> float:
    """Upper bound k^{-1}|Tr a| + (3/k) sqrt(sum_{i != j} |a_ij|^2).

    This is exactly ``haagerup_bound`` evaluated on ``coeff_element(a)``:
    the identity word carries weight 1 and the off-diagonal words, all of
    length 2, carry weight 3.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
    kk = a.shape[0]
    if k is not None and k != kk:
        raise ValueError(f"matrix size {kk} does not match k={k}")
    off = np.abs(a) ** 2
    off[np.diag_indices(kk)] = 0.0
    return abs(np.trace(a)) / kk + (3.0 / kk) * math.sqrt(float(off.sum()))


def triple_norm_bracket(
    a, k: int | None = None, m: int = 1, support_cap: int = DEFAULT_SUPPORT_CAP
) -> tuple[float, float]:
    """(lower, upper) bracket for the limit norm of a coefficient matrix."""
    f = coeff_element(a, k)
    return (norm_lower_bound(f, m, support_cap=support_cap), triple_norm_bound(a, k))


# ---------------------------------------------------------------------------
# generator sum: exact moments by a weighted walk recursion
# ---------------------------------------------------------------------------


def generator_sum_moment(k: int, m: int) -> int:
    """Exact integer tau((f f^*)^m) for f = sum_i delta(u_i).

    Expanding the power, each monomial is an alternating product
    u_{i_1} u_{j_1}^{-1} ... u_{i_m} u_{j_m}^{-1} and tau counts those that
    reduce to the identity. The reduced word stays alternating, so only the
    current length matters: from a nonempty word one choice cancels and
    k - 1 extend, from the empty word all k extend. The count is therefore a
    walk count on the half line with those weights, computed exactly in
    integer arithmetic. For k = 2 it equals the central binomial C(2m, m).
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"rank k must be a positive integer, got {k!r}")
    if not isinstance(m, int) or isinstance(m, bool) or m < 0:
        raise ValueError(f"moment order m must be an integer >= 0, got {m!r}")
    counts = {0: 1}
    for _ in range(2 * m):
        nxt: dict[int, int] = {}
        for d, c in counts.items():
            up = k if d == 0 else k - 1
            if up:
                nxt[d + 1] = nxt.get(d + 1, 0) + c * up
            if d > 0:
                nxt[d - 1] = nxt.get(d - 1, 0) + c
        counts = nxt
    return counts.get(0, 0)


def generator_sum_lower_bound(k: int, m: int) -> float:
    """Moment-ratio lower bound for ||sum_i u_i||, exact combinatorics.

    Agrees with ``norm_lower_bound(generator_sum(k), m)`` but runs in
    O(m^2) regardless of k, where the generic convolution route blows up.
    Approaches the true value 2 sqrt(k - 1) from below as m grows.
    """
    if m < 1:
        raise ValueError(f"moment order m must be >= 1, got {m!r}")
    cur = generator_sum_moment(k, m)
    prev = generator_sum_moment(k, m - 1)
    if prev == 0:
        return 0.0
    return math.sqrt(cur / prev)


if __name__ == "__main__":
    f = generator_sum(2)
    print("tau(f f^*) =", tau(multiply(f, star(f))))
    print("lower bound m=20:", norm_lower_bound(f, 20))
    print("haagerup bound:", haagerup_bound(f))
