"""Complementary-channel estimate of the optimal recovery error, and near-optimal recoveries.

For a channel ``N`` (encoding included) from a ``d``-dimensional logical
space with Kraus operators ``E_e``, the estimate compares the complementary
channel ``N^`` with the constant channel onto ``N^(sigma)``::

    F_dual = min_rho Tr sqrt( sum_ij E_i rho^2 E_j^dag Tr(E_j sigma E_i^dag) )
    delta  = sqrt(1 - F_dual)

and the optimal worst-case recovery distance lies in ``[delta / 2, delta]``.

A recovery reaching ``delta`` is built from the operator ``X`` that aligns
two purifications (Uhlmann): with ``zeta = (V_N (x) 1)|psi_sigma>`` on
``B (x) E (x) R_sigma``::

    X[b, (b', r', s')] = sum_e conj(zeta[b', e, r']) (E_e rho0)[b, s']

The polar (co-)isometry ``A0`` of ``X`` is the recovery's Stinespring
contraction: ``A0^dag`` maps the channel output ``B`` to ``B' (x) R_sigma (x) S``
and tracing out ``B' (x) R_sigma`` leaves the recovered system ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .channels import (
    ChannelRep,
    apply,
    complementary,
    compose,
    constant_channel,
    identity_channel,
)
from .fidelity import (
    MinimizerConfig,
    OverlapFidelity,
    bures_distance,
    bures_distance_at,
    minimize_over_states,
    state_from_params,
)
from .matops import (
    TOL_EQ,
    TOL_PSD,
    AQECError,
    as_matrix,
    check_density,
    dagger,
    hermitian_part,
    maximally_mixed,
    psd_eigh,
    psd_sqrt,
)

__all__ = [
    "RecoveryEstimate",
    "SaddleResult",
    "DualFidelity",
    "delta_estimate_id",
    "delta_estimate",
    "sandwich",
    "find_saddle",
    "build_recovery",
    "verify_guarantee",
    "fixed_state_bounds",
    "build_fixed_state_recovery",
]

GUARANTEE_SLACK = 1e-6
_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class RecoveryEstimate:
    delta: float
    fidelity_dual: float
    sigma: np.ndarray | None
    argmin_state: np.ndarray
    converged: bool = True

    @property
    def lower_bound(self) -> float:
        return self.delta / 2

    @property
    def upper_bound(self) -> float:
        return self.delta

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

        return {
            "delta": float(self.delta),
            "fidelity_dual": float(self.fidelity_dual),
            "lower_bound": float(self.lower_bound),
            "upper_bound": float(self.upper_bound),
            "sigma": None if self.sigma is None else enc(self.sigma),
            "argmin_state": enc(self.argmin_state),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True, eq=False)
class SaddleResult:
    """Saddle data feeding :func:`build_recovery`.

    ``a0`` maps the purifying space ``B' (x) R_sigma (x) S`` (that index order)
    onto the channel output ``B``. ``certified`` is ``min_rho Re g_rho(a0)``,
    a lower bound on the worst-case fidelity of the resulting recovery.
    """

    rho0: np.ndarray
    a0: np.ndarray
    x_rho0: np.ndarray
    achieved: float
    certified: float
    dim_logical: int
    dim_sigma: int
    sigma: np.ndarray = field(repr=False, default=None)


class DualFidelity:
    """``rho -> F_rho(N^, N^ M^)`` for ``M = id``, i.e. ``Tr sqrt(W(rho))``.

    With ``c_ij = Tr(E_j sigma E_i^dag)`` one has ``W(rho) = Z Z^dag`` for
    ``Z = [L_1 rho, ..., L_k rho]``, ``L_j = sum_i sqrt(c)_ij E_i``, so the
    value is the trace norm of ``Z`` and no square root of the rank-deficient
    ``W`` is needed.
    """

    def __init__(self, noise: ChannelRep, sigma=None):
        d = noise.dim_in
        sigma = maximally_mixed(d) if sigma is None else check_density(sigma, "sigma")
        if sigma.shape != (d, d):
            raise AQECError("bad-dims", f"sigma must be {d}x{d}")
        e = noise.kraus
        c = np.einsum("jab,bc,iac->ij", e, sigma, e.conj())
        if np.max(np.abs(c - dagger(c))) > 1e-9 or np.linalg.eigvalsh(hermitian_part(c))[0] < -TOL_PSD:
            raise AQECError("numeric-psd-failure", "coefficient matrix c_ij is not PSD")
        self.sigma = sigma
        self.c = hermitian_part(c)
        self._l = np.einsum("ij,iab->jab", psd_sqrt(self.c), e)
        self.noise = noise

    def z(self, rho) -> np.ndarray:
        zs = self._l @ np.asarray(rho)
        return np.concatenate(list(zs), axis=1)

    def w(self, rho) -> np.ndarray:
        """``sum_ij E_i rho^2 E_j^dag c_ij``, the operator inside the square root."""
        z = self.z(rho)
        return z @ dagger(z)

    def __call__(self, rho) -> float:
        return float(np.sum(np.linalg.svd(self.z(rho), compute_uv=False)))

    def batch(self, rhos: np.ndarray) -> np.ndarray:
        # column order inside Z does not change its singular values
        zs = np.einsum("jab,nbc->najc", self._l, rhos).reshape(len(rhos), self._l.shape[1], -1)
        return np.sum(np.linalg.svd(zs, compute_uv=False), axis=-1)


def delta_estimate_id(
    noise: ChannelRep,
    sigma=None,
    cfg: MinimizerConfig | None = None,
) -> RecoveryEstimate:
    """Near-optimality estimate ``delta = d(N^, N^ M^)`` for the target ``M = id``.

    ``noise`` maps the logical space to the physical one (encoding included)
    and ``sigma`` is a logical state, maximally mixed by default.
    """
    f = DualFidelity(noise, sigma)
    rho, val, conv, _ = minimize_over_states(f, noise.dim_in, cfg, full_output=True)
    val = min(float(val), 1.0)
    return RecoveryEstimate(float(np.sqrt(1.0 - val)), val, f.sigma, rho, conv)


def _is_idempotent(c: ChannelRep, tol: float = TOL_EQ) -> bool:
    d = c.dim_in
    for j in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[j, k] = 1.0
            once = apply(c, e)
            if np.linalg.norm(apply(c, once) - once) > tol:
                return False
    return True


def delta_estimate(
    noise: ChannelRep,
    m: ChannelRep,
    m_complement: ChannelRep,
    cfg: MinimizerConfig | None = None,
) -> RecoveryEstimate:
    """General estimate ``delta = d(N^, N^ o M^)`` for an idempotent complementary target ``M^``."""
    if m.dim_in != noise.dim_in or m_complement.dim_in != noise.dim_in or m_complement.dim_out != noise.dim_in:
        raise AQECError("bad-dims", "M^ must map the logical space to itself")
    if not _is_idempotent(m_complement):
        raise AQECError("not-idempotent", "M^ o M^ differs from M^")
    nhat = complementary(noise)
    f = OverlapFidelity(nhat, compose(nhat, m_complement))
    rho, val, conv, _ = minimize_over_states(f, noise.dim_in, cfg, full_output=True)
    val = min(float(val), 1.0)
    return RecoveryEstimate(float(np.sqrt(1.0 - val)), val, None, rho, conv)


def sandwich(est: RecoveryEstimate) -> tuple[float, float]:
    """Bounds ``(delta / 2, delta)`` on the optimal worst-case recovery distance."""
    return est.lower_bound, est.upper_bound


def _purified_env(noise: ChannelRep, sigma: np.ndarray) -> np.ndarray:
    """``zeta[b, e, r] = (E_e sqrt(sigma))[b, r]``, the purification of ``N^(sigma)``."""
    return np.einsum("eab,br->aer", noise.kraus, psd_sqrt(sigma))


def _alignment_operator(noise: ChannelRep, zeta: np.ndarray, rho: np.ndarray) -> np.ndarray:
    er = noise.kraus @ rho
    x = np.einsum("yer,ebs->byrs", zeta.conj(), er)
    return x.reshape(noise.dim_out, -1)


def _overlap_operator(noise: ChannelRep, zeta: np.ndarray, a0: np.ndarray) -> np.ndarray:
    """``Y`` with ``g_rho(a0) = Tr(rho Y)`` for every input ``rho``."""
    d = noise.dim_in
    t = dagger(a0).reshape(noise.dim_out, zeta.shape[2], d, noise.dim_out)
    return np.einsum("yer,yrtb,ebs->ts", zeta.conj(), t, noise.kraus)


def _contraction(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    return u @ vh


def _saddle_at(noise, zeta, rho, sigma) -> SaddleResult:
    x = _alignment_operator(noise, zeta, rho)
    a0 = _contraction(x)
    y = _overlap_operator(noise, zeta, a0)
    cert = float(np.linalg.eigvalsh(hermitian_part(y))[0])
    achieved = float(np.sum(np.linalg.svd(x, compute_uv=False)))
    return SaddleResult(rho, a0, x, achieved, cert, noise.dim_in, zeta.shape[2], sigma)


def _polish(noise, zeta, rho0, max_iter: int = 500) -> np.ndarray:
    """Refine the minimizer of ``||X_rho||_1`` using its exact gradient ``Re Y``."""
    d = noise.dim_in
    w, v = np.linalg.eigh(hermitian_part(rho0))
    g0 = v * np.sqrt(np.clip(w, _FLOOR, None))

    def fun(x):
        g = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        t = np.trace(g @ dagger(g)).real
        rho = g @ dagger(g) / t
        xr = _alignment_operator(noise, zeta, rho)
        u, s, vh = np.linalg.svd(xr, full_matrices=False)
        h = hermitian_part(_overlap_operator(noise, zeta, u @ vh))
        m = (h - np.trace(h @ rho).real * np.eye(d)) @ g
        grad = 2.0 / t * np.concatenate([m.real.ravel(), m.imag.ravel()])
        return float(np.sum(s)), grad

    x0 = np.concatenate([g0.real.ravel(), g0.imag.ravel()])
    res = optimize.minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter, "ftol": 1e-16, "gtol": 1e-14})
    return state_from_params(res.x, d)


def find_saddle(
    noise: ChannelRep,
    sigma=None,
    cfg: MinimizerConfig | None = None,
    estimate: RecoveryEstimate | None = None,
) -> SaddleResult:
    """Saddle point ``(rho0, A0)`` of the overlap functional for ``M = id``.

    ``rho0`` starts at the minimizer of the dual fidelity. If the polar
    contraction of ``X_rho0`` does not certify the dual value (``rho0`` not
    exactly optimal or rank-deficient), ``rho0`` is refined with the exact
    gradient, and a floored ``(1 - eta) rho0 + eta I / d`` is tried as well;
    the candidate with the best certificate wins.
    """
    est = estimate if estimate is not None else delta_estimate_id(noise, sigma, cfg)
    sigma = est.sigma
    zeta = _purified_env(noise, sigma)
    d = noise.dim_in
    best = _saddle_at(noise, zeta, est.argmin_state, sigma)
    if abs(best.achieved - est.fidelity_dual) > 1e-6:
        raise AQECError(
            "saddle-inconsistent",
            f"||X||_1 = {best.achieved:.9f} but the dual fidelity is {est.fidelity_dual:.9f}",
        )
    if best.certified < best.achieved - 1e-9:
        polished = _polish(noise, zeta, est.argmin_state)
        floored = (1 - _FLOOR) * est.argmin_state + _FLOOR * np.eye(d) / d
        for rho in (polished, floored):
            cand = _saddle_at(noise, zeta, rho, sigma)
            if cand.certified > best.certified:
                best = cand
    return best


def build_recovery(saddle: SaddleResult, tau=None) -> ChannelRep:
    """Recovery ``R(X) = S(X) + Tr(X - S(X)) tau`` from the saddle contraction.

    ``S`` has Kraus operators ``A0^dag`` sliced along ``B' (x) R_sigma``; the
    completion adds ``sqrt(mu_k delta_l) |t_k><f_l|`` from the eigenpairs of
    ``tau`` and of the defect ``I - sum S_i^dag S_i``.
    """
    d = saddle.dim_logical
    tau = maximally_mixed(d) if tau is None else check_density(tau, "tau")
    a0 = as_matrix(saddle.a0)
    if np.linalg.norm(a0, 2) > 1 + 1e-9:
        raise AQECError("bad-completion", "saddle contraction has norm above one")
    dim_b = a0.shape[0]
    t = dagger(a0).reshape(-1, d, dim_b)
    defect = np.eye(dim_b) - np.einsum("kab,kac->bc", t.conj(), t)
    try:
        dl, f = psd_eigh(defect, tol=TOL_EQ)
    except AQECError as exc:
        raise AQECError("bad-completion", "defect operator is not PSD") from exc
    mu, tv = psd_eigh(tau)
    extra = [
        np.sqrt(mu[k] * dl[l]) * np.outer(tv[:, k], f[:, l].conj())
        for k in range(d)
        for l in range(dim_b)
        if mu[k] * dl[l] > 1e-14
    ]
    kraus = np.concatenate([t, np.array(extra).reshape(-1, d, dim_b)]) if extra else t
    return ChannelRep(kraus)


def verify_guarantee(
    r: ChannelRep,
    noise: ChannelRep,
    est: RecoveryEstimate,
    cfg: MinimizerConfig | None = None,
) -> tuple[float, bool]:
    """Worst-case distance of ``r o noise`` from the identity, and whether it is within ``delta``."""
    rn = compose(r, noise)
    if rn.dim_out != rn.dim_in:
        raise AQECError("bad-dims", "recovery does not return to the logical space")
    dist = bures_distance(rn, identity_channel(rn.dim_in), cfg)
    return dist, dist <= est.delta + GUARANTEE_SLACK


def fixed_state_bounds(noise: ChannelRep, rho) -> tuple[float, float]:
    """``(d_rho(N^, S) / 2, d_rho(N^, S))`` with ``S`` the constant channel onto ``N^(rho)``."""
    rho = check_density(rho)
    if rho.shape != (noise.dim_in,) * 2:
        raise AQECError("bad-dims", "rho must live on the channel input")
    nhat = complementary(noise)
    s = constant_channel(apply(nhat, rho), noise.dim_in)
    upper = bures_distance_at(nhat, s, rho)
    return upper / 2, upper


def build_fixed_state_recovery(noise: ChannelRep, rho, tau=None) -> ChannelRep:
    """Near-optimal recovery for the single input ``rho`` (``rho0 = sigma = rho``, no search)."""
    rho = check_density(rho)
    if rho.shape != (noise.dim_in,) * 2:
        raise AQECError("bad-dims", "rho must live on the channel input")
    zeta = _purified_env(noise, rho)
    saddle = _saddle_at(noise, zeta, rho, rho)
    r = build_recovery(saddle, tau)
    _, bound = fixed_state_bounds(noise, rho)
    achieved = bures_distance_at(compose(r, noise), identity_channel(noise.dim_in), rho)
    if achieved > bound + GUARANTEE_SLACK:
        raise AQECError("saddle-inconsistent", f"d_rho = {achieved:.3e} exceeds the bound {bound:.3e}")
    return r
