"""Channels built from a tuple of unitaries, and their output calculus.

Given k unitaries U_1 .. U_k of size n, the isometry
W x = k^{-1/2} (U_1 x, ..., U_k x) defines two completely positive maps
used throughout the package:

* the compression channel, n x n -> k x k,
  ``apply``:        Phi(X)_ij = k^{-1} Tr(U_i X U_j^dag)
* the mixing channel, n x n -> n x n,
  ``apply_complement``: X -> k^{-1} sum_i U_i X U_i^dag
  (flag ``conjugate=True`` replaces U_i by its entrywise conjugate).

The two are complementary: for a pure input both outputs have the same
nonzero spectrum. ``adjoint_apply`` is the trace-duality adjoint of
``apply``, and ``empirical_triple_norm`` measures the operator norm of
k^{-1} sum_ij a_ij U_i U_j^dag, the matrix counterpart of the free-word
norm bracket in :mod:`moelab.freewords`.

``bell_output`` evaluates the compression channel tensored with its
entrywise conjugate on the maximally entangled input. The closed form

    C_{(i,i'),(j,j')} = k^{-2} n^{-1} Tr(U_{i'}^dag U_{j'} U_j^dag U_i)

is checked against a dense tensor-product oracle in the test suite before
being trusted at large n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .haar import Seed, UnitaryTuple, generator, sample_ginibre

__all__ = [
    "DensityMatrix",
    "PureState",
    "CoeffMatrix",
    "RandomChannel",
    "PowerIterationError",
    "power_iteration_norm",
    "maximally_mixed",
    "maximally_entangled",
    "bell_overlap",
    "random_density",
    "random_pure",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_FLOOR = -1e-10
UNIT_NORM_TOL = 1e-12

#: largest dimension at which empirical_triple_norm uses a full SVD
SVD_DIM_LIMIT = 256


# ===========================================================================
# state containers
# ===========================================================================


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, trace-one matrix."""

    dim: int
    matrix: np.ndarray

    @classmethod
    def from_matrix(cls, m, validate: bool = True) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if validate:
            herm = np.abs(m - m.conj().T).max()
            if herm > HERMITICITY_TOL:
                raise ValueError(f"not Hermitian: ||X - X^dag||_max = {herm:.3e}")
            tr = np.trace(m).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace {tr!r} is not 1 within {TRACE_TOL}")
            lo = np.linalg.eigvalsh(m).min()
            if lo < EIG_FLOOR:
                raise ValueError(f"negative eigenvalue {lo:.3e} below floor {EIG_FLOOR}")
        return cls(dim=m.shape[0], matrix=m)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class PureState:
    """Unit vector."""

    dim: int
    vector: np.ndarray

    @classmethod
    def from_vector(cls, v, validate: bool = True) -> "PureState":
        v = np.asarray(v, dtype=complex).reshape(-1)
        if validate:
            nrm = np.linalg.norm(v)
            if abs(nrm - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"vector norm {nrm!r} is not 1 within {UNIT_NORM_TOL}")
        return cls(dim=v.shape[0], vector=v)

    def projector(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


@dataclass(frozen=True)
class CoeffMatrix:
    """k x k complex coefficient matrix with finite entries."""

    k: int
    matrix: np.ndarray

    @classmethod
    def from_matrix(cls, m) -> "CoeffMatrix":
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"coefficient matrix must be square, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("coefficient matrix has non-finite entries")
        return cls(k=m.shape[0], matrix=m)


def _density_input(x, n: int) -> np.ndarray:
    m = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)
    if m.shape != (n, n):
        raise ValueError(f"input has shape {m.shape}, channel expects {(n, n)}")
    return m


def _coeff_input(a, k: int) -> np.ndarray:
    m = a.matrix if isinstance(a, CoeffMatrix) else np.asarray(a, dtype=complex)
    if m.shape != (k, k):
        raise ValueError(f"coefficient matrix has shape {m.shape}, expected {(k, k)}")
    if not np.isfinite(m).all():
        raise ValueError("coefficient matrix has non-finite entries")
    return m


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


# ===========================================================================
# the channel pair
# ===========================================================================


class RandomChannel:
    """Channel pair defined by a tuple of unitaries.

    The k x k Gram blocks G_ij = U_i^dag U_j are cached on first use; the
    cache is an implementation detail and callers must treat instances as
    immutable.
    """

    def __init__(self, unitaries: UnitaryTuple):
        self.unitaries = unitaries
        self._gram: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.unitaries.count_k

    @property
    def n(self) -> int:
        return self.unitaries.dim_n

    @classmethod
    def sample(cls, n: int, k: int, seed: Seed) -> "RandomChannel":
        from .haar import sample_tuple

        return cls(sample_tuple(n, k, seed))

    def gram(self) -> np.ndarray:
        """(k, k, n, n) array of blocks U_i^dag U_j."""
        if self._gram is None:
            u = self.unitaries.matrices
            k, n = self.k, self.n
            g = np.empty((k, k, n, n), dtype=complex)
            for i in range(k):
                udag = u[i].conj().T
                for j in range(k):
                    g[i, j] = udag @ u[j]
            self._gram = g
        return self._gram

    # -- compression channel ------------------------------------------------

    def apply(self, x, validate: bool = True) -> DensityMatrix:
        """Phi(X)_ij = k^{-1} Tr(U_i X U_j^dag) as a k x k density matrix."""
        u = self.unitaries.matrices
        xm = _density_input(x, self.n)
        t = u @ xm  # (k, n, n), rows U_i X
        out = np.einsum("iab,jab->ij", t, u.conj()) / self.k
        return DensityMatrix.from_matrix(_hermitize(out), validate=validate)

    def pure_output(self, psi: np.ndarray) -> np.ndarray:
        """Raw k x k output for a pure input, out_ij = k^{-1} <U_j psi, U_i psi>.

        Fast path used by the optimizers; no validation, no copy of psi.
        """
        w = self.unitaries.matrices @ psi  # (k, n)
        return (w @ w.conj().T) / self.k

    def apply_pure(self, psi) -> DensityMatrix:
        v = psi.vector if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
        if v.shape != (self.n,):
            raise ValueError(f"state has shape {v.shape}, channel expects {(self.n,)}")
        return DensityMatrix.from_matrix(self.pure_output(v))

    # -- mixing channel -----------------------------------------------------

    def apply_complement(
        self, x, conjugate: bool = False, validate: bool = True
    ) -> DensityMatrix:
        """k^{-1} sum_i U_i X U_i^dag, or the entrywise-conjugate variant."""
        u = self.unitaries.matrices
        if conjugate:
            u = u.conj()
        xm = _density_input(x, self.n)
        out = np.einsum("iab,bc,idc->ad", u, xm, u.conj(), optimize=True) / self.k
        return DensityMatrix.from_matrix(_hermitize(out), validate=validate)

    # -- duality ------------------------------------------------------------

    def adjoint_apply(self, a) -> np.ndarray:
        """Adjoint of ``apply``: Phi^*(A) = k^{-1} sum_ij A_ji U_j^dag U_i.

        Satisfies Tr(Phi(X) A) = Tr(X Phi^*(A)) for all X, A.
        """
        am = _coeff_input(a, self.k)
        u = self.unitaries.matrices
        # b_i = sum_j A_ji U_j^dag, then sum_i b_i U_i
        b = np.einsum("ji,jab->iba", am, u.conj())  # (k, n, n), b[i] = sum_j A_ji U_j^dag
        out = np.einsum("iab,ibc->ac", b, u)
        return out / self.k

    def adjoint_apply_vec(self, a, psi: np.ndarray) -> np.ndarray:
        """Phi^*(A) psi without forming the n x n matrix; optimizer fast path."""
        am = _coeff_input(a, self.k)
        u = self.unitaries.matrices
        w = u @ psi  # (k, n)
        t = am @ w  # t[j] = sum_i A_ji w_i
        return np.einsum("jab,ja->b", u.conj(), t) / self.k

    # -- empirical triple norm ----------------------------------------------

    def coefficient_image(self, a) -> np.ndarray:
        """M(A) = k^{-1} sum_ij a_ij U_i U_j^dag."""
        am = _coeff_input(a, self.k)
        u = self.unitaries.matrices
        udag = u.conj().transpose(0, 2, 1)
        s = np.tensordot(am, udag, axes=(1, 0))  # s[i] = sum_j a_ij U_j^dag
        out = np.zeros((self.n, self.n), dtype=complex)
        for i in range(self.k):
            out += u[i] @ s[i]
        return out / self.k

    def empirical_triple_norm(self, a) -> float:
        """Largest singular value of M(A).

        Full SVD up to dimension SVD_DIM_LIMIT, power iteration on
        M^dag M above it; the two routes agree and are cross-checked in the
        test suite at the crossover scale.
        """
        m = self.coefficient_image(a)
        if self.n <= SVD_DIM_LIMIT:
            return float(np.linalg.svd(m, compute_uv=False)[0])
        seed = self.unitaries.seed or Seed(0)
        return power_iteration_norm(m, seed=seed.offset(2**32))

    # -- bell output ----------------------------------------------------------

    def bell_output(self) -> DensityMatrix:
        """Output of (compression) tensor (conjugate compression) on the
        maximally entangled state, a k^2 x k^2 density matrix.

        Computed from the Gram blocks:
        C_{(i,i'),(j,j')} = k^{-2} n^{-1} Tr(G_{i'j'} G_{ji}).
        Its overlap with the k-dimensional maximally entangled vector is
        exactly 1/k for every tuple.
        """
        k, n = self.k, self.n
        g = self.gram()
        rows = g.reshape(k * k, n * n)  # row (p, q) holds G_pq flattened
        cols = g.transpose(0, 1, 3, 2).reshape(k * k, n * n)  # row (j, i) holds G_ji^T
        t = rows @ cols.T  # t[(p,q),(j,i)] = Tr(G_pq G_ji)
        t = t.reshape(k, k, k, k)  # [p, q, j, i]
        c = t.transpose(3, 0, 2, 1).reshape(k * k, k * k)  # [(i, p), (j, q)]
        c /= k * k * n
        return DensityMatrix.from_matrix(_hermitize(c))


# ===========================================================================
# helpers
# ===========================================================================


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration budget."""

    def __init__(self, iterations: int, last_estimate: float):
        self.iterations = iterations
        self.last_estimate = last_estimate
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(last estimate {last_estimate!r})"
        )


def power_iteration_norm(
    m: np.ndarray,
    tol: float = 1e-8,
    max_iters: int = 10_000,
    seed: Seed | None = None,
) -> float:
    """Largest singular value of ``m`` by power iteration on M^dag M.

    The start vector is drawn from ``seed`` (a fixed default keeps results
    deterministic). Convergence is declared when the estimate moves by at
    most tol * max(1, estimate) between sweeps.
    """
    n = m.shape[1]
    rng = generator(seed if seed is not None else Seed(0, 2**32))
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for it in range(1, max_iters + 1):
        w = m @ v
        sigma_new = float(np.linalg.norm(w))
        v = m.conj().T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        if abs(sigma_new - sigma) <= tol * max(1.0, sigma_new):
            return sigma_new
        sigma = sigma_new
    raise PowerIterationError(iterations=max_iters, last_estimate=sigma)


def maximally_mixed(dim: int) -> DensityMatrix:
    """Identity over its dimension."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim!r}")
    return DensityMatrix.from_matrix(np.eye(dim) / dim, validate=False)


def maximally_entangled(dim: int) -> PureState:
    """dim^{-1/2} sum_i e_i tensor e_i in dimension dim^2."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim!r}")
    v = np.zeros(dim * dim, dtype=complex)
    v[:: dim + 1] = 1.0 / math.sqrt(dim)
    return PureState.from_vector(v, validate=False)


def bell_overlap(c: DensityMatrix | np.ndarray) -> float:
    """<Omega_k| C |Omega_k> for a k^2 x k^2 matrix C."""
    cm = c.matrix if isinstance(c, DensityMatrix) else np.asarray(c)
    d2 = cm.shape[0]
    k = math.isqrt(d2)
    if k * k != d2:
        raise ValueError(f"matrix dimension {d2} is not a perfect square")
    omega = maximally_entangled(k).vector
    return float(np.real(omega.conj() @ cm @ omega))


def random_pure(dim: int, seed: Seed) -> PureState:
    """Uniform random unit vector (normalized complex Gaussian)."""
    rng = generator(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.from_vector(v / np.linalg.norm(v), validate=False)


def random_density(dim: int, seed: Seed) -> DensityMatrix:
    """Full-rank random density matrix G G^dag / Tr(G G^dag), G Ginibre."""
    g = sample_ginibre(dim, seed)
    m = g @ g.conj().T
    return DensityMatrix.from_matrix(m / np.trace(m).real, validate=False)
