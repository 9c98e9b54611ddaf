"""Fidelities and Bures-type distances between states and channels.

The fidelity is the unsquared Uhlmann fidelity ``f(rho, sigma) = Tr|sqrt(rho) sqrt(sigma)|``.
Channel comparisons use the entanglement fidelity at a fixed input and its
minimum over all inputs (worst case). Distances are ``sqrt(1 - F)``.

Worst-case values come from :func:`minimize_over_states`, a multi-start
local descent over density matrices parametrized as ``G G^dag / Tr(G G^dag)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .channels import ChannelRep, PurifiedState, canonicalize
from .matops import AQECError, as_matrix, dagger, psd_sqrt, trace_norm

__all__ = [
    "MinimizerConfig",
    "FidelityValue",
    "state_fidelity",
    "entanglement_fidelity",
    "OverlapFidelity",
    "worst_case_fidelity",
    "bures_distance",
    "bures_distance_at",
    "minimize_over_states",
    "state_from_params",
    "fd_gradient",
]


@dataclass(frozen=True)
class MinimizerConfig:
    random_starts: int = 16
    tol: float = 1e-8
    max_iter: int = 2000
    seed: int = 0
    fd_step: float = 1e-6
    polish: bool = True


@dataclass(frozen=True)
class FidelityValue:
    value: float
    argmin_state: np.ndarray | None = None
    starts: int = 0
    converged: bool = True

    def __float__(self):
        return float(self.value)


def state_fidelity(rho, sigma) -> float:
    """``Tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise AQECError("bad-dims", f"{rho.shape} vs {sigma.shape}")
    # Tr|sqrt(rho) sqrt(sigma)| avoids a second square root of a rank-deficient product
    return trace_norm(psd_sqrt(rho) @ psd_sqrt(sigma))


def _check_pair(n: ChannelRep, m: ChannelRep, rho=None):
    if n.dim_in != m.dim_in or n.dim_out != m.dim_out:
        raise AQECError("bad-dims", f"cannot compare {n!r} with {m!r}")
    if rho is not None:
        rho = as_matrix(rho)
        if rho.shape != (n.dim_in, n.dim_in):
            raise AQECError("bad-dims", f"state {rho.shape} for channels on dim {n.dim_in}")
        return rho


def _purified_factor(c: ChannelRep, psi: PurifiedState) -> np.ndarray:
    """Columns ``vec((E_i (x) 1)|psi>)``, so that ``(c (x) id)(psi) = A A^dag``."""
    d = psi.dim
    mat = psi.vector.reshape(d, d)
    return np.einsum("kas,sr->kar", c.kraus, mat).reshape(c.num_kraus, -1).T


def extend_on_purification(c: ChannelRep, psi: PurifiedState) -> np.ndarray:
    """``(c (x) id_R)(|psi><psi|)`` as a ``dim_out * d`` square matrix (output factor first)."""
    a = _purified_factor(c, psi)
    return a @ dagger(a)


def entanglement_fidelity(n: ChannelRep, m: ChannelRep, rho, purification: PurifiedState | None = None) -> float:
    """``f((N (x) id)(psi), (M (x) id)(psi))`` for a purification ``psi`` of ``rho``.

    Both extended outputs come factored as ``A A^dag`` and ``B B^dag``; their
    fidelity is evaluated as ``||A^dag B||_1`` to avoid square roots of
    rank-deficient matrices.
    """
    rho = _check_pair(n, m, rho)
    psi = PurifiedState.canonical(rho) if purification is None else purification
    return trace_norm(dagger(_purified_factor(n, psi)) @ _purified_factor(m, psi))


def _reduced_kraus(c: ChannelRep) -> np.ndarray:
    return canonicalize(c, cutoff=1e-14).kraus if c.num_kraus > c.dim_in * c.dim_out else c.kraus


class OverlapFidelity:
    """Fast entanglement fidelity ``rho -> || [Tr(rho E_i^dag F_j)]_ij ||_1``.

    Equal to :func:`entanglement_fidelity` because both extended outputs are
    ``A A^dag`` and ``B B^dag`` with columns ``vec(E_i sqrt(rho))`` and
    ``vec(F_j sqrt(rho))``, whose fidelity is ``||A^dag B||_1``.
    """

    def __init__(self, n: ChannelRep, m: ChannelRep):
        _check_pair(n, m)
        a, b = _reduced_kraus(n), _reduced_kraus(m)
        self.dim = n.dim_in
        # T[i, j] = E_i^dag F_j, flattened so that Tr(rho T) = T @ vec(rho^T)
        t = np.einsum("iab,jac->ijbc", a.conj(), b)
        self._t = t.reshape(a.shape[0], b.shape[0], -1)

    def __call__(self, rho) -> float:
        g = self._t @ np.asarray(rho).T.reshape(-1)
        return float(np.sum(np.linalg.svd(g, compute_uv=False)))

    def batch(self, rhos: np.ndarray) -> np.ndarray:
        g = np.einsum("ijx,nx->nij", self._t, np.transpose(rhos, (0, 2, 1)).reshape(len(rhos), -1))
        return np.sum(np.linalg.svd(g, compute_uv=False), axis=-1)


def state_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    g = (x[: dim * dim] + 1j * x[dim * dim :]).reshape(dim, dim)
    r = g @ dagger(g)
    return r / np.trace(r).real


def _params_from_factor(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.complex128)
    return np.concatenate([g.real.ravel(), g.imag.ravel()])


def _states_from_params(xs: np.ndarray, dim: int) -> np.ndarray:
    g = (xs[:, : dim * dim] + 1j * xs[:, dim * dim :]).reshape(-1, dim, dim)
    r = g @ np.conj(np.transpose(g, (0, 2, 1)))
    return r / np.einsum("naa->n", r).real[:, None, None]


def fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient."""
    grad = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = step
        grad[i] = (fun(x + e) - fun(x - e)) / (2 * step)
        e[i] = 0.0
    return grad


def _starting_factors(dim: int, cfg: MinimizerConfig) -> list[np.ndarray]:
    starts = []
    for k in range(dim):
        g = np.zeros((dim, dim), dtype=np.complex128)
        g[k, 0] = 1.0
        starts.append(g)
    starts.append(np.eye(dim, dtype=np.complex128))
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.random_starts):
        starts.append(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return starts


def minimize_over_states(
    objective: Callable[[np.ndarray], float],
    dim: int,
    cfg: MinimizerConfig | None = None,
    full_output: bool = False,
):
    """Minimize ``objective`` over ``dim x dim`` density matrices.

    Starts from every computational basis state, the maximally mixed state
    and ``cfg.random_starts`` random factors, runs a quasi-Newton descent
    (L-BFGS with backtracking line search) on finite-difference gradients,
    and keeps the best result, ties going to the earliest start. For small
    ``dim`` the winner is then polished by a simplex search.

    Returns ``(rho, value)``, or ``(rho, value, converged, starts)`` when
    ``full_output`` is set.
    """
    cfg = cfg or MinimizerConfig()
    if dim == 1:
        rho = np.ones((1, 1), dtype=np.complex128)
        val = float(objective(rho))
        return (rho, val, True, 1) if full_output else (rho, val)

    def fun(x):
        return float(objective(state_from_params(x, dim)))

    batch = getattr(objective, "batch", None)

    def jac(x):
        if batch is None:
            return fd_gradient(fun, x, cfg.fd_step)
        # all 2 * len(x) probes in one batched evaluation
        probes = np.concatenate([x + cfg.fd_step * np.eye(x.size), x - cfg.fd_step * np.eye(x.size)])
        vals = batch(_states_from_params(probes, dim))
        return (vals[: x.size] - vals[x.size :]) / (2 * cfg.fd_step)

    best_x, best_val, best_conv = None, np.inf, False
    starts = _starting_factors(dim, cfg)
    for g in starts:
        x0 = _params_from_factor(g)
        res = optimize.minimize(
            fun,
            x0,
            jac=jac,
            method="L-BFGS-B",
            options={"maxiter": cfg.max_iter, "ftol": cfg.tol * 1e-6, "gtol": cfg.tol * 1e-3},
        )
        val = min(res.fun, fun(x0))
        x = res.x if res.fun <= fun(x0) else x0
        if val < best_val - 1e-15:
            best_x, best_val, best_conv = x, val, bool(res.success)
    rho = state_from_params(best_x, dim)
    if cfg.polish and dim <= _POLISH_MAX_DIM:
        rho, best_val = _polish(objective, rho, best_val, cfg)
    if full_output:
        return rho, best_val, best_conv, len(starts)
    return rho, best_val


_POLISH_MAX_DIM = 4


def _polish(objective, rho, val, cfg: MinimizerConfig):
    """Derivative-free refinement in a Cholesky parametrization.

    Trace-norm objectives typically bottom out where a singular value hits
    zero; the kink stalls quasi-Newton descent about 1e-5 short.
    """
    dim = rho.shape[0]
    low = np.tril_indices(dim, -1)
    n_off = len(low[0])

    def to_state(p):
        l = np.diag(p[:dim]).astype(np.complex128)
        l[low] = p[dim : dim + n_off] + 1j * p[dim + n_off :]
        r = l @ dagger(l)
        return r / np.trace(r).real

    l0 = np.linalg.cholesky(rho + 1e-14 * np.eye(dim))
    p = np.concatenate([l0.diagonal().real, l0[low].real, l0[low].imag])
    best = val
    # the simplex can stagnate on a kink before converging; a fresh simplex
    # from the current point usually gets unstuck
    for _ in range(5):
        res = optimize.minimize(
            lambda q: float(objective(to_state(q))),
            p,
            method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": cfg.tol * 1e-5, "maxfev": 200 * p.size, "adaptive": True},
        )
        if res.fun >= best:
            break
        p, best = res.x, float(res.fun)
        if res.success:
            break
    # rounding-level gains on a flat plateau would only drag rho toward a face
    if best < val - cfg.tol * 1e-5:
        return to_state(p), best
    return rho, val


def worst_case_fidelity(n: ChannelRep, m: ChannelRep, cfg: MinimizerConfig | None = None) -> FidelityValue:
    """``min_rho`` entanglement fidelity between ``n`` and ``m``."""
    f = OverlapFidelity(n, m)
    rho, val, conv, starts = minimize_over_states(f, n.dim_in, cfg, full_output=True)
    return FidelityValue(min(float(val), 1.0), rho, starts, conv)


def bures_distance(n: ChannelRep, m: ChannelRep, cfg: MinimizerConfig | None = None) -> float:
    """Worst-case distance ``sqrt(1 - F(n, m))``."""
    return float(np.sqrt(max(0.0, 1.0 - worst_case_fidelity(n, m, cfg).value)))


def bures_distance_at(n: ChannelRep, m: ChannelRep, rho) -> float:
    """Fixed-input distance ``sqrt(1 - F_rho(n, m))``."""
    return float(np.sqrt(max(0.0, 1.0 - entanglement_fidelity(n, m, rho))))

