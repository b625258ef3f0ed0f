"""Output-entropy and output-distance optimization over pure input states.

Entropy is concave in the state, so its minimum over all inputs is attained
at a pure state; squared Frobenius distance from the flat output and the
output sup norm are convex, so their maxima are attained at pure states too.
All three searches therefore run on the unit sphere only.

The optimizer is multi-start projected gradient with Armijo backtracking:
starts are drawn from per-start derived seed streams, the step halves until
the sufficient-decrease test passes, accepted iterates stay on the sphere by
renormalization, and the best start wins with the lowest start index
breaking ties. Accepted steps change the objective monotonically, so each
reported optimum is a certified achieved value: minima are upper bounds on
the true minimum and maxima are lower bounds on the true maximum.

Gradients use the convention grad = d(objective)/d(conj psi), tangent
projected; the directional derivative along a tangent direction v is then
2 Re <v, grad>. For the sup-norm objective the analytic eigenvector formula
is used while the top spectral gap exceeds GAP_TOL and central finite
differences take over below it. The sup-norm objective itself is evaluated
through the k x k compression output, which shares its nonzero spectrum
with the n x n mixing output for pure inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import DensityMatrix, PureState, RandomChannel, random_pure
from .haar import Seed

__all__ = [
    "OptConfig",
    "OptResult",
    "von_neumann_entropy",
    "entropy_deficit_rhs",
    "moe_gradient",
    "minimize_output_entropy",
    "maximize_l2_distance",
    "maximize_output_sup_norm",
]

#: eigenvalues at or below this contribute zero to the entropy sum
ENTROPY_EIG_FLOOR = 1e-14

#: eigenvalues below this are rejected as not a density matrix
NEG_EIG_TOL = -1e-8

#: top-gap threshold under which the sup-norm gradient falls back to
#: finite differences
GAP_TOL = 1e-6

FD_STEP = 1e-5
MIN_STEP = 1e-14


def von_neumann_entropy(x) -> float:
    """- sum lambda log lambda in nats, eigenvalues clamped to [0, 1].

    Eigenvalues at or below ENTROPY_EIG_FLOOR contribute zero (the 0 log 0
    limit); an eigenvalue below NEG_EIG_TOL is an invalid density.
    """
    m = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)
    lam = np.linalg.eigvalsh(m)
    if lam.min() < NEG_EIG_TOL:
        raise ValueError(f"eigenvalue {lam.min():.3e} below {NEG_EIG_TOL}; not a density matrix")
    lam = np.clip(lam, 0.0, 1.0)
    pos = lam > ENTROPY_EIG_FLOOR
    if not pos.any():
        return 0.0
    lp = lam[pos]
    return float(-(lp * np.log(lp)).sum())


def entropy_deficit_rhs(x) -> float:
    """k Tr((X - I/k)^2), the quadratic bound on log k - H(X).

    Concavity of entropy around the flat state gives
    log k - H(X) <= k Tr((X - I/k)^2) for every k x k density X.
    """
    m = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)
    k = m.shape[0]
    d = m - np.eye(k) / k
    return float(k * np.real(np.vdot(d, d)))


def _project_tangent(psi: np.ndarray, g: np.ndarray) -> np.ndarray:
    # tangent space of the real sphere: remove the Re<psi, g> component
    return g - np.real(np.vdot(psi, g)) * psi


def _log_plus_one(rho: np.ndarray) -> tuple[float, np.ndarray]:
    """Entropy of rho and the matrix log(rho) + I with floored eigenvalues."""
    lam, vec = np.linalg.eigh(rho)
    lam_c = np.clip(lam, 0.0, 1.0)
    pos = lam_c > ENTROPY_EIG_FLOOR
    ent = float(-(lam_c[pos] * np.log(lam_c[pos])).sum()) if pos.any() else 0.0
    logs = np.log(np.maximum(lam, ENTROPY_EIG_FLOOR)) + 1.0
    return ent, (vec * logs) @ vec.conj().T


def moe_gradient(ch: RandomChannel, psi) -> np.ndarray:
    """Gradient of H(Phi(psi psi^*)) at a unit vector, tangent projected.

    grad = -Phi^*(log Phi(psi psi^*) + I) psi with the matrix log taken on
    eigenvalues floored at ENTROPY_EIG_FLOOR. Orthogonal to psi in the real
    inner product; matches central finite differences of the entropy along
    tangent directions (directional derivative = 2 Re <v, grad>).
    """
    v = psi.vector if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    u = ch.unitaries.matrices
    w = u @ v
    rho = (w @ w.conj().T) / ch.k
    _, a = _log_plus_one(rho)
    g = -np.einsum("jab,ja->b", u.conj(), a @ w) / ch.k
    return _project_tangent(v, g)


# ===========================================================================
# multi-start projected gradient
# ===========================================================================


@dataclass(frozen=True)
class OptConfig:
    """Settings for the multi-start sphere search."""

    starts: int = 32
    max_iters: int = 2000
    step_init: float = 0.5
    armijo_c: float = 1e-4
    grad_tol: float = 1e-8
    seed: Seed = field(default_factory=lambda: Seed(0))

    def __post_init__(self) -> None:
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (0.0 < self.armijo_c < 1.0):
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.step_init <= 0.0 or self.grad_tol <= 0.0:
            raise ValueError("step_init and grad_tol must be positive")


@dataclass(frozen=True)
class OptResult:
    """Outcome of a multi-start search.

    ``best_value`` is the optimum over starts (min or max per the calling
    objective) and ``argmin`` the state achieving it; ties go to the lowest
    start index. Per-start diagnostics keep the sweep auditable.
    """

    best_value: float
    argmin: PureState
    per_start_values: tuple[float, ...]
    iterations_used: tuple[int, ...]
    converged_flags: tuple[bool, ...]


def _armijo_run(vg, psi0: np.ndarray, cfg: OptConfig, sign: float):
    """Projected gradient ascent (sign=+1) or descent (sign=-1) on the sphere.

    Converged means the tangent gradient reached grad_tol or the line search
    stalled below MIN_STEP: at that point the objective change is under the
    double-precision noise floor and no further progress is possible.
    """
    psi = psi0
    val, g = vg(psi)
    iters = 0
    stalled = False
    while iters < cfg.max_iters:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.grad_tol:
            break
        slope = 2.0 * gnorm * gnorm  # directional derivative along sign*g
        step = cfg.step_init
        moved = False
        while step >= MIN_STEP:
            cand = psi + (sign * step) * g
            cand = cand / np.linalg.norm(cand)
            cval, cg = vg(cand)
            if sign * (cval - val) >= cfg.armijo_c * step * slope:
                psi, val, g = cand, cval, cg
                moved = True
                break
            step *= 0.5
        if not moved:
            stalled = True
            break
        iters += 1
    converged = stalled or float(np.linalg.norm(g)) <= cfg.grad_tol
    return psi, val, iters, converged


def _multistart(ch: RandomChannel, cfg: OptConfig, vg, sign: float) -> OptResult:
    values: list[float] = []
    iters: list[int] = []
    flags: list[bool] = []
    states: list[np.ndarray] = []
    for s in range(cfg.starts):
        psi0 = random_pure(ch.n, cfg.seed.offset(s)).vector
        psi, val, it, ok = _armijo_run(vg, psi0, cfg, sign)
        states.append(psi)
        values.append(val)
        iters.append(it)
        flags.append(ok)
    arr = np.asarray(values)
    best = int(np.argmax(arr)) if sign > 0 else int(np.argmin(arr))
    return OptResult(
        best_value=float(values[best]),
        argmin=PureState.from_vector(states[best]),
        per_start_values=tuple(float(v) for v in values),
        iterations_used=tuple(iters),
        converged_flags=tuple(flags),
    )


def _entropy_vg(ch: RandomChannel):
    u = ch.unitaries.matrices
    k = ch.k

    def vg(psi):
        w = u @ psi
        rho = (w @ w.conj().T) / k
        ent, a = _log_plus_one(rho)
        g = -np.einsum("jab,ja->b", u.conj(), a @ w) / k
        return ent, _project_tangent(psi, g)

    return vg


def minimize_output_entropy(ch: RandomChannel, cfg: OptConfig) -> OptResult:
    """Search for the minimal output entropy of the compression channel.

    Each reported value is the entropy of an actual output, so best_value
    is always an upper bound on the true minimum output entropy.
    """
    return _multistart(ch, cfg, _entropy_vg(ch), sign=-1.0)


def maximize_l2_distance(ch: RandomChannel, cfg: OptConfig) -> OptResult:
    """Search for the maximal Frobenius distance ||Phi(psi psi^*) - I/k||_2.

    Internally ascends the squared distance (gradient 2 Phi^*(X - I/k) psi)
    and reports distances; best_value is a lower bound on the true maximum.
    """
    u = ch.unitaries.matrices
    k = ch.k
    flat = np.eye(k) / k

    def vg(psi):
        w = u @ psi
        rho = (w @ w.conj().T) / k
        d = rho - flat
        val = float(np.real(np.vdot(d, d)))
        g = 2.0 * np.einsum("jab,ja->b", u.conj(), d @ w) / k
        return val, _project_tangent(psi, g)

    res = _multistart(ch, cfg, vg, sign=+1.0)
    values = tuple(float(np.sqrt(max(v, 0.0))) for v in res.per_start_values)
    return OptResult(
        best_value=float(np.sqrt(max(res.best_value, 0.0))),
        argmin=res.argmin,
        per_start_values=values,
        iterations_used=res.iterations_used,
        converged_flags=res.converged_flags,
    )


def maximize_output_sup_norm(ch: RandomChannel, cfg: OptConfig) -> OptResult:
    """Search for the maximal operator norm of the mixing-channel output.

    For a pure input the n x n mixing output k^{-1} sum_i U_i psi psi^* U_i^dag
    has rank at most k and shares its nonzero spectrum with the k x k
    compression output, so the objective and its spectral gap are read off a
    k x k eigenproblem. The gradient uses the top eigenvector while the gap
    exceeds GAP_TOL and switches to central finite differences below that.
    """
    u = ch.unitaries.matrices
    k = ch.k

    def objective(psi):
        w = u @ psi
        rho = (w @ w.conj().T) / k
        return float(np.linalg.eigvalsh(rho)[-1])

    def fd_grad(psi):
        n = psi.shape[0]
        g = np.empty(n, dtype=complex)
        for m in range(n):
            e = np.zeros(n)
            e[m] = FD_STEP
            d_re = objective((psi + e) / np.linalg.norm(psi + e)) - objective(
                (psi - e) / np.linalg.norm(psi - e)
            )
            ie = 1j * e
            d_im = objective((psi + ie) / np.linalg.norm(psi + ie)) - objective(
                (psi - ie) / np.linalg.norm(psi - ie)
            )
            g[m] = (d_re + 1j * d_im) / (2.0 * FD_STEP)
        return g / 2.0  # real-convention FD halved to the d/d(conj psi) convention

    def vg(psi):
        w = u @ psi
        rho = (w @ w.conj().T) / k
        lam, vec = np.linalg.eigh(rho)
        val = float(lam[-1])
        gap = val - float(lam[-2]) if k >= 2 else val
        if gap < GAP_TOL:
            g = fd_grad(psi)
        else:
            c = vec[:, -1]
            phi = w.T @ c.conj()
            nrm = np.linalg.norm(phi)
            if nrm == 0.0:
                return val, np.zeros_like(psi)
            phi /= nrm
            y = w @ phi.conj()  # y_i = phi^dag U_i psi
            z = np.einsum("iab,a->ib", u.conj(), phi)  # z_i = U_i^dag phi
            g = np.einsum("i,ib->b", y, z) / k
        return val, _project_tangent(psi, g)

    return _multistart(ch, cfg, vg, sign=+1.0)
