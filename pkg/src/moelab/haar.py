"""Seeded sampling of Haar-distributed unitary matrices.

All randomness in the package flows through :class:`Seed`, a pair of 64-bit
integers ``(master, stream_index)``. The pair is used verbatim as the
128-bit key of a counter-based Philox generator, so the derivation is
injective: distinct pairs give independent streams by construction, and a
fixed pair reproduces the same matrices bit for bit on a given platform and
numpy build. Gaussian variates come from numpy's ziggurat sampler.

Unitaries are generated by the Ginibre + QR construction: fill a matrix with
iid standard complex Gaussians, take its QR decomposition, and right-multiply
Q by the diagonal phases of R. The phase correction makes the factorization
the unique one with positive diagonal R, which is what gives the exact Haar
law; plain QR output is not Haar-distributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Seed",
    "UnitaryTuple",
    "generator",
    "sample_ginibre",
    "sample_haar_unitary",
    "sample_tuple",
]

_U64 = 2**64

# QR is retried when an R diagonal entry falls below this (probability-zero
# guard against a degenerate Ginibre draw).
_QR_DIAG_FLOOR = 1e-300

#: matrices from sample_tuple satisfy ||U^dag U - I||_max <= this
UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class Seed:
    """Reproducibility token: a (master, stream_index) pair of u64 values.

    ``master`` identifies an experiment, ``stream_index`` one independent
    stream inside it. Streams for the i-th matrix of a tuple, for optimizer
    starts, and so on are derived by offsetting ``stream_index``; callers
    that derive their own streams should keep the offsets disjoint.
    """

    master: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        for name in ("master", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if not 0 <= int(v) < _U64:
                raise ValueError(f"{name} out of u64 range: {v}")

    def offset(self, delta: int) -> "Seed":
        """Seed with the same master and stream_index shifted by ``delta`` (mod 2^64)."""
        return Seed(self.master, (self.stream_index + int(delta)) % _U64)


def generator(seed: Seed) -> np.random.Generator:
    """Philox generator keyed by (master, stream_index)."""
    key = np.array([seed.master, seed.stream_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ginibre(rng: np.random.Generator, n: int) -> np.ndarray:
    # real and imaginary parts iid N(0, 1/2), so E|z_ab|^2 = 1
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    return (re + 1j * im) / math.sqrt(2.0)


def _check_dim(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"matrix dimension must be a positive integer, got {n!r}")


def sample_ginibre(n: int, seed: Seed) -> np.ndarray:
    """Draw an n x n matrix of iid standard complex Gaussians."""
    _check_dim(n)
    return _ginibre(generator(seed), int(n))


def sample_haar_unitary(n: int, seed: Seed) -> np.ndarray:
    """Draw an n x n Haar-distributed unitary matrix.

    Ginibre sample, QR factorization, then Q is right-multiplied by
    diag(r_jj / |r_jj|). If an R diagonal entry underflows the guard
    threshold the draw is discarded and the stream simply continues with
    the next Ginibre block.
    """
    _check_dim(n)
    rng = generator(seed)
    while True:
        z = _ginibre(rng, int(n))
        q, r = np.linalg.qr(z)
        d = np.diagonal(r)
        if np.abs(d).min() < _QR_DIAG_FLOOR:
            continue
        return q * (d / np.abs(d))


@dataclass(frozen=True)
class UnitaryTuple:
    """An ordered family of k unitary matrices of common dimension n.

    ``matrices`` is stored as one complex (k, n, n) array; ``seed`` records
    how the family was sampled and is None for hand-built tuples.
    """

    dim_n: int
    count_k: int
    matrices: np.ndarray
    seed: Seed | None = None

    @classmethod
    def from_matrices(
        cls,
        matrices,
        seed: Seed | None = None,
        unitarity_tol: float = UNITARITY_TOL,
    ) -> "UnitaryTuple":
        """Build a tuple from an iterable of square matrices, checking unitarity."""
        mats = np.array([np.asarray(m, dtype=complex) for m in matrices])
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"expected a stack of square matrices, got shape {mats.shape}")
        k, n = mats.shape[0], mats.shape[1]
        if k < 1:
            raise ValueError("a unitary tuple needs at least one matrix")
        eye = np.eye(n)
        for i in range(k):
            err = np.abs(mats[i].conj().T @ mats[i] - eye).max()
            if err > unitarity_tol:
                raise ValueError(f"matrix {i} is not unitary: ||U^dag U - I||_max = {err:.3e}")
        return cls(dim_n=n, count_k=k, matrices=mats, seed=seed)

    def unitarity_error(self) -> float:
        """max_i ||U_i^dag U_i - I||_max."""
        eye = np.eye(self.dim_n)
        return max(
            np.abs(self.matrices[i].conj().T @ self.matrices[i] - eye).max()
            for i in range(self.count_k)
        )

    def __iter__(self):
        return iter(self.matrices)


def sample_tuple(n: int, k: int, seed: Seed) -> UnitaryTuple:
    """Draw k independent Haar unitaries of size n.

    Matrix i is drawn from the stream ``seed.stream_index + i``, so a tuple
    is reproducible matrix by matrix and tuples with overlapping stream
    ranges share matrices.
    """
    _check_dim(n)
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 2:
        raise ValueError(f"tuple size k must be an integer >= 2, got {k!r}")
    mats = np.empty((int(k), int(n), int(n)), dtype=complex)
    for i in range(int(k)):
        mats[i] = sample_haar_unitary(n, seed.offset(i))
    return UnitaryTuple(dim_n=int(n), count_k=int(k), matrices=mats, seed=seed)


if __name__ == "__main__":
    u = sample_haar_unitary(4, Seed(0))
    print("unitarity error:", np.abs(u.conj().T @ u - np.eye(4)).max())
    t = sample_tuple(8, 3, Seed(1))
    print("tuple unitarity error:", t.unitarity_error())
